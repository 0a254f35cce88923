//! Soft-margin linear SVM trained by dual coordinate descent.
//!
//! The bias is learned as the weight of a constant feature with value 1, so
//! the primal objective is ½(‖w‖² + b²) + C·Σ max(0, 1 − yᵢ(w·xᵢ + b)).

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::corpus::TextClass;
use crate::features::{FeatureKey, FeatureKind, FeatureSpace, SparseVector, ValueMode};

const MODEL_HEADER: &str = "transtree-model v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_epochs: usize,
    /// Stop once the largest projected-gradient violation falls below this.
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_epochs: 10_000,
            tolerance: 1e-4,
        }
    }
}

fn sign(label: TextClass) -> f64 {
    match label {
        TextClass::Translated => 1.0,
        TextClass::Original => -1.0,
    }
}

/// Result of [`train_svm`].
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Primal objective of the returned solution after each epoch.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl SvmFit {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }
}

pub fn primal_objective(
    weights: &[f64],
    bias: f64,
    vectors: &[SparseVector],
    labels: &[TextClass],
    c: f64,
) -> f64 {
    let reg = 0.5 * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let loss: f64 = vectors
        .iter()
        .zip(labels)
        .map(|(x, &y)| (1.0 - sign(y) * (x.dot(weights) + bias)).max(0.0))
        .sum();
    reg + c * loss
}

/// Trains on `vectors` (ids below `dim`). Coordinates are visited in a
/// seeded random order each epoch; the best primal solution seen so far is
/// kept, so the objective trace never increases.
pub fn train_svm(
    vectors: &[SparseVector],
    labels: &[TextClass],
    dim: usize,
    c: f64,
    solver: &SolverConfig,
    seed: u64,
) -> Result<SvmFit, ClassifyError> {
    if vectors.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch {
            left: vectors.len(),
            right: labels.len(),
        });
    }
    if dim == 0 {
        return Err(ClassifyError::NoFeatures);
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(ClassifyError::BadParam(format!("C must be positive, got {c}")));
    }
    if !(labels.contains(&TextClass::Original) && labels.contains(&TextClass::Translated)) {
        return Err(ClassifyError::SingleClass);
    }

    let n = vectors.len();
    let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
    let diag: Vec<f64> = vectors.iter().map(|x| x.squared_norm() + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    let mut b = 0.0;

    let mut best_w = w.clone();
    let mut best_b = b;
    let mut best_obj = primal_objective(&w, b, vectors, labels, c);
    let mut trace = Vec::new();
    let mut converged = false;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..solver.max_epochs {
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let x = &vectors[i];
            let g = y[i] * (x.dot(&w) + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                if step != 0.0 {
                    for &(j, v) in x.entries() {
                        w[j] += step * v;
                    }
                    b += step;
                }
            }
        }
        let obj = primal_objective(&w, b, vectors, labels, c);
        if obj < best_obj {
            best_obj = obj;
            best_w.clone_from(&w);
            best_b = b;
        }
        trace.push(best_obj);
        if max_violation <= solver.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("svm solver stopped after {} epochs without converging", solver.max_epochs);
    }
    Ok(SvmFit {
        weights: best_w,
        bias: best_b,
        objective_trace: trace,
        converged,
    })
}

/// A trained linear model bound to the feature space it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub value_mode: ValueMode,
    pub fingerprint: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: TextClass,
    pub decision: f64,
}

impl SvmModel {
    pub fn from_fit(fit: SvmFit, c: f64, value_mode: ValueMode, space: &FeatureSpace) -> Self {
        SvmModel {
            weights: fit.weights,
            bias: fit.bias,
            c,
            value_mode,
            fingerprint: space.fingerprint(),
        }
    }

    /// Versioned text form: header lines, then one `kind key weight` line per
    /// feature in id order.
    pub fn to_text(&self, space: &FeatureSpace) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_HEADER}");
        let _ = writeln!(out, "fingerprint\t{}", self.fingerprint);
        let _ = writeln!(out, "value_mode\t{}", self.value_mode.as_str());
        let _ = writeln!(out, "c\t{:?}", self.c);
        let _ = writeln!(out, "bias\t{:?}", self.bias);
        let _ = writeln!(out, "features\t{}", self.weights.len());
        for (key, w) in space.keys().iter().zip(&self.weights) {
            let _ = writeln!(out, "{}\t{}\t{:?}", key.kind, key.key, w);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<(SvmModel, Vec<FeatureKey>), ClassifyError> {
        let bad = |line: usize, msg: &str| ClassifyError::BadModelFile {
            line,
            message: msg.to_string(),
        };
        let lines: Vec<&str> = text.lines().collect();
        if lines.first() != Some(&MODEL_HEADER) {
            return Err(bad(1, "missing or unsupported header"));
        }
        let field = |i: usize, name: &str| -> Result<&str, ClassifyError> {
            lines
                .get(i)
                .and_then(|l| l.strip_prefix(name))
                .and_then(|l| l.strip_prefix('\t'))
                .ok_or_else(|| bad(i + 1, &format!("expected {name}")))
        };
        let fingerprint = field(1, "fingerprint")?.to_string();
        let value_mode = match field(2, "value_mode")? {
            "raw_count" => ValueMode::RawCount,
            "rel_freq" => ValueMode::RelFreq,
            _ => return Err(bad(3, "unknown value mode")),
        };
        let c: f64 = field(3, "c")?.parse().map_err(|_| bad(4, "bad C"))?;
        let bias: f64 = field(4, "bias")?.parse().map_err(|_| bad(5, "bad bias"))?;
        let n: usize = field(5, "features")?.parse().map_err(|_| bad(6, "bad count"))?;
        if lines.len() != 6 + n {
            return Err(bad(lines.len(), "feature count does not match"));
        }
        let mut keys = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (i, line) in lines[6..].iter().enumerate() {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(bad(i + 7, "expected 3 columns"));
            }
            let kind: FeatureKind = cols[0].parse().map_err(|e: String| bad(i + 7, &e))?;
            keys.push(FeatureKey::new(kind, cols[1]));
            weights.push(cols[2].parse().map_err(|_| bad(i + 7, "bad weight"))?);
        }
        Ok((
            SvmModel {
                weights,
                bias,
                c,
                value_mode,
                fingerprint,
            },
            keys,
        ))
    }
}

/// Applies a model to vectors built over `space`. A zero decision value maps
/// to "original".
pub fn predict(
    model: &SvmModel,
    space: &FeatureSpace,
    vectors: &[SparseVector],
) -> Result<Vec<Prediction>, ClassifyError> {
    if space.fingerprint() != model.fingerprint || space.len() != model.weights.len() {
        return Err(ClassifyError::SpaceMismatch);
    }
    Ok(vectors
        .iter()
        .map(|x| {
            let decision = x.dot(&model.weights) + model.bias;
            let label = if decision > 0.0 {
                TextClass::Translated
            } else {
                TextClass::Original
            };
            Prediction { label, decision }
        })
        .collect())
}
