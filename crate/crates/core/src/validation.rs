//! Pair-counting comparison of two partitions.
//!
//! Every unordered pair of points is classified by whether the predicted
//! partition puts it in one cluster and whether the reference partition puts
//! it in one class:
//!
//! | pair            | same cluster | different cluster |
//! |-----------------|--------------|-------------------|
//! | same class      | `tp` (a)     | `fn_` (b)         |
//! | different class | `fp` (c)     | `tn` (d)          |

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyCounts {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub n: u64,
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

impl ContingencyCounts {
    /// Builds counts from the four cells, deriving `n` from their sum.
    pub fn from_pairs(tp: u64, fn_: u64, fp: u64, tn: u64) -> Result<Self> {
        let total = tp + fn_ + fp + tn;
        // smallest n with n(n-1)/2 == total
        let n = ((1.0 + (1.0 + 8.0 * total as f64).sqrt()) / 2.0).round() as u64;
        if pairs(n) != total {
            return Err(Error::InvalidInput(format!(
                "{total} pairs is not n(n-1)/2 for any n"
            )));
        }
        Ok(ContingencyCounts { tp, fn_, fp, tn, n })
    }

    pub fn total_pairs(&self) -> u64 {
        pairs(self.n)
    }
}

/// Pair counts of `pred` (clusters) against `truth` (classes).
pub fn contingency<P, T>(pred: &[P], truth: &[T]) -> Result<ContingencyCounts>
where
    P: Eq + Hash,
    T: Eq + Hash,
{
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    let n = pred.len() as u64;
    if n < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let mut cells: HashMap<(&P, &T), u64> = HashMap::new();
    let mut clusters: HashMap<&P, u64> = HashMap::new();
    let mut classes: HashMap<&T, u64> = HashMap::new();
    for (p, t) in pred.iter().zip(truth) {
        *cells.entry((p, t)).or_insert(0) += 1;
        *clusters.entry(p).or_insert(0) += 1;
        *classes.entry(t).or_insert(0) += 1;
    }
    let tp: u64 = cells.values().map(|&c| pairs(c)).sum();
    let same_cluster: u64 = clusters.values().map(|&c| pairs(c)).sum();
    let same_class: u64 = classes.values().map(|&c| pairs(c)).sum();
    let fp = same_cluster - tp;
    let fn_ = same_class - tp;
    let tn = pairs(n) - tp - fp - fn_;
    Ok(ContingencyCounts { tp, fn_, fp, tn, n })
}

/// `(tp + tn) / C(n, 2)`; 1 when there are no pairs.
pub fn rand_index(c: &ContingencyCounts) -> f64 {
    let total = c.total_pairs();
    if total == 0 {
        return 1.0;
    }
    (c.tp + c.tn) as f64 / total as f64
}

/// Adjusted Rand index in pair-count form. A zero denominator gives 1 when
/// the numerator is also zero, else 0.
pub fn adjusted_rand_index(c: &ContingencyCounts) -> f64 {
    let total = c.total_pairs() as f64;
    if total == 0.0 {
        return 1.0;
    }
    let a = c.tp as f64;
    let same_cluster = (c.tp + c.fp) as f64;
    let same_class = (c.tp + c.fn_) as f64;
    let expected = same_cluster * same_class / total;
    let max = (same_cluster + same_class) / 2.0;
    let num = a - expected;
    let den = max - expected;
    if den == 0.0 {
        return if num == 0.0 { 1.0 } else { 0.0 };
    }
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecallConvention {
    /// `tp / (tp + fn)`.
    #[default]
    Standard,
    /// `tp / (tp + tn)`: true positives over all agreeing pairs.
    OverAgreements,
}

/// Pair precision, recall and F-measure. Empty denominators give 0.
pub fn precision_recall_f(c: &ContingencyCounts, recall: RecallConvention) -> (f64, f64, f64) {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let p = ratio(c.tp, c.tp + c.fp);
    let r = match recall {
        RecallConvention::Standard => ratio(c.tp, c.tp + c.fn_),
        RecallConvention::OverAgreements => ratio(c.tp, c.tp + c.tn),
    };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Every metric for one comparison, in report field order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub rand_index: f64,
    pub ari: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl MetricsReport {
    pub fn from_counts(c: &ContingencyCounts, recall: RecallConvention) -> Self {
        let (precision, recall, f_measure) = precision_recall_f(c, recall);
        MetricsReport {
            tp: c.tp,
            fn_: c.fn_,
            fp: c.fp,
            tn: c.tn,
            rand_index: rand_index(c),
            ari: adjusted_rand_index(c),
            precision,
            recall,
            f_measure,
        }
    }
}
