//! Classification and ranking metrics.

use crate::error::{Error, Result};

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty set".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Mann–Whitney form: `P(s_pos > s_neg) + 0.5 * P(s_pos == s_neg)`, computed
/// from average ranks in `O(n log n)`.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("ROC-AUC needs both positive and negative labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied block shares the mean rank
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] {
                pos_rank_sum += rank;
            }
        }
        i = j + 1;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Fraction of positives scored strictly above the `k`-th largest negative.
pub fn hits_at_k(pos: &[f64], neg: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("hits@K needs K >= 1".into()));
    }
    if neg.len() < k {
        return Err(Error::InvalidArgument(format!(
            "hits@{k} needs at least {k} negatives, got {}",
            neg.len()
        )));
    }
    if pos.is_empty() {
        return Err(Error::InvalidArgument("hits@K of an empty positive set".into()));
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[k - 1];
    Ok(pos.iter().filter(|&&p| p > threshold).count() as f64 / pos.len() as f64)
}

/// Mean reciprocal rank with optimistic ties: a positive's rank is one plus
/// the number of its candidates scored strictly higher.
pub fn mrr<C: AsRef<[f64]>>(instances: &[(f64, C)]) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::InvalidArgument("MRR of an empty set".into()));
    }
    let mut total = 0.0;
    for (pos, cands) in instances {
        let cands = cands.as_ref();
        if cands.is_empty() {
            return Err(Error::InvalidArgument("MRR instance without negative candidates".into()));
        }
        let rank = 1 + cands.iter().filter(|&&c| c > *pos).count();
        total += 1.0 / rank as f64;
    }
    Ok(total / instances.len() as f64)
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
