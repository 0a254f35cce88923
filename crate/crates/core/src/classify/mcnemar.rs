use serde::{Deserialize, Serialize};

use super::gamma::chi_square_sf;
use super::ClassifyError;
use crate::corpus::TextClass;

/// McNemar's test on the discordant pairs of two classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// A right, B wrong.
    pub b: usize,
    /// A wrong, B right.
    pub c: usize,
    /// Continuity-corrected chi-square statistic.
    pub statistic: f64,
    pub p: f64,
}

pub fn mcnemar_from_counts(b: usize, c: usize) -> McNemarResult {
    let diff = b.abs_diff(c);
    let statistic = if diff > 1 && b + c > 0 {
        let num = (diff - 1) as f64;
        num * num / (b + c) as f64
    } else {
        0.0
    };
    McNemarResult {
        b,
        c,
        statistic,
        p: chi_square_sf(statistic, 1.0),
    }
}

pub fn mcnemar(
    pred_a: &[TextClass],
    pred_b: &[TextClass],
    gold: &[TextClass],
) -> Result<McNemarResult, ClassifyError> {
    if pred_a.len() != gold.len() || pred_b.len() != gold.len() {
        return Err(ClassifyError::LengthMismatch {
            left: pred_a.len().max(pred_b.len()),
            right: gold.len(),
        });
    }
    let (mut b, mut c) = (0, 0);
    for ((&pa, &pb), &g) in pred_a.iter().zip(pred_b).zip(gold) {
        match (pa == g, pb == g) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c))
}
