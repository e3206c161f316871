//! Classification and ranking metrics with explicit tie handling.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index of the row maximum; ties resolve to the lowest class index.
pub fn argmax_tie_lowest<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0usize;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of selected predictions matching their labels.
pub fn accuracy(preds: &[usize], labels: &[usize], mask: Option<&[bool]>) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(Error::Shape("prediction/label length mismatch".into()));
    }
    let mut correct = 0usize;
    let mut total = 0usize;
    for i in 0..preds.len() {
        if mask.map_or(true, |m| m[i]) {
            total += 1;
            correct += (preds[i] == labels[i]) as usize;
        }
    }
    if total == 0 {
        return Err(Error::Evaluation("empty evaluation selection".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// Area under the ROC curve by rank statistic; tied scores earn half
/// credit, so constant scores give exactly 0.5.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape("score/label length mismatch".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Evaluation("ranking needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a].partial_cmp(&scores[b]).expect("non-finite score")
    });
    // average ranks within tied blocks (1-based ranks)
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Average precision with tied scores treated as a single retrieval block,
/// so uniformly tied scores give exactly the positive-class prior.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape("score/label length mismatch".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::Evaluation("ranking needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).expect("non-finite score")
    });
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0f64;
    let mut i = 0usize;
    while i < order.len() {
        let mut j = i;
        let mut block_tp = 0usize;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            block_tp += labels[order[j]] as usize;
            j += 1;
        }
        tp += block_tp;
        seen += j - i;
        if block_tp > 0 {
            ap += block_tp as f64 * (tp as f64 / seen as f64);
        }
        i = j;
    }
    Ok(ap / pos as f64)
}
