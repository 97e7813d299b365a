use serde::{Deserialize, Serialize};

use super::Class;
use crate::error::{Error, Result};

/// Counts with Responder as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn record(&mut self, truth: Class, predicted: Class) {
        match (truth, predicted) {
            (Class::Responder, Class::Responder) => self.tp += 1,
            (Class::Responder, Class::NonResponder) => self.fn_ += 1,
            (Class::NonResponder, Class::NonResponder) => self.tn += 1,
            (Class::NonResponder, Class::Responder) => self.fp += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn merge(&self, other: &Confusion) -> Confusion {
        Confusion {
            tp: self.tp + other.tp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
            fp: self.fp + other.fp,
        }
    }
}

/// Percentages in [0, 100]; `None` where the denominator is zero.
/// Recall is sensitivity under another name and is reported once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f_measure: Option<f64>,
}

impl Metrics {
    pub fn recall(&self) -> Option<f64> {
        self.sensitivity
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn compute_metrics(c: &Confusion) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::EmptyConfusion);
    }
    let sensitivity = ratio(c.tp, c.tp + c.fn_);
    let precision = ratio(c.tp, c.tp + c.fp);
    let f_measure = match (precision, sensitivity) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(Metrics {
        accuracy: 100.0 * (c.tp + c.tn) as f64 / c.total() as f64,
        sensitivity,
        specificity: ratio(c.tn, c.tn + c.fp),
        precision,
        f_measure,
    })
}

/// Mean and sample SD over the defined values; `excluded` counts absent ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
    pub excluded: usize,
}

impl SummaryStat {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut defined = Vec::new();
        let mut excluded = 0;
        for v in values {
            match v {
                Some(x) => defined.push(x),
                None => excluded += 1,
            }
        }
        let n = defined.len();
        if n == 0 {
            return Self {
                mean: None,
                sd: None,
                n,
                excluded,
            };
        }
        let mean = defined.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (defined.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean: Some(mean),
            sd: Some(sd),
            n,
            excluded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: SummaryStat,
    pub sensitivity: SummaryStat,
    pub specificity: SummaryStat,
    pub precision: SummaryStat,
    pub f_measure: SummaryStat,
}

impl MetricSummary {
    pub fn of(metrics: &[Metrics]) -> Self {
        Self {
            accuracy: SummaryStat::of(metrics.iter().map(|m| Some(m.accuracy))),
            sensitivity: SummaryStat::of(metrics.iter().map(|m| m.sensitivity)),
            specificity: SummaryStat::of(metrics.iter().map(|m| m.specificity)),
            precision: SummaryStat::of(metrics.iter().map(|m| m.precision)),
            f_measure: SummaryStat::of(metrics.iter().map(|m| m.f_measure)),
        }
    }
}
