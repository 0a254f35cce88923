use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::corpus::TextClass;

/// Binary confusion counts with respect to one positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn count(pred: &[TextClass], gold: &[TextClass], positive: TextClass) -> Confusion {
        let mut c = Confusion::default();
        for (&p, &g) in pred.iter().zip(gold) {
            match (p == positive, g == positive) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts seen from the other class.
    pub fn flipped(&self) -> Confusion {
        Confusion {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn metrics(&self) -> ClassMetrics {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                100.0 * num as f64 / den as f64
            }
        };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
        }
    }
}

/// Precision, recall and F1 in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl fmt::Display for ClassMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P={:.1} R={:.1} F={:.1}", self.precision, self.recall, self.f1)
    }
}

/// Evaluation of one set of predictions. Confusion counts treat
/// "translated" as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: Confusion,
    pub translated: ClassMetrics,
    pub original: ClassMetrics,
    pub macro_f: f64,
    pub accuracy: f64,
}

impl EvalReport {
    pub fn for_class(&self, class: TextClass) -> &ClassMetrics {
        match class {
            TextClass::Translated => &self.translated,
            TextClass::Original => &self.original,
        }
    }
}

pub fn evaluate(pred: &[TextClass], gold: &[TextClass]) -> Result<EvalReport, ClassifyError> {
    if pred.len() != gold.len() {
        return Err(ClassifyError::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(ClassifyError::Empty);
    }
    let confusion = Confusion::count(pred, gold, TextClass::Translated);
    let translated = confusion.metrics();
    let original = confusion.flipped().metrics();
    Ok(EvalReport {
        confusion,
        translated,
        original,
        macro_f: (translated.f1 + original.f1) / 2.0,
        accuracy: 100.0 * (confusion.tp + confusion.tn) as f64 / confusion.total() as f64,
    })
}

/// Rounds a percentage to one decimal, the precision used in reports.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}
