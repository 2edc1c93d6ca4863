//! Error metrics over Monte-Carlo trials.

use crate::error::{BenchError, Result};

/// Signed errors `estimate - truth` under the injective assignment of
/// estimates to truths with the least total absolute error, in truth order.
/// `None` when there are fewer estimates than truths.
pub fn matched_errors(estimate: &[f64], truth: &[f64]) -> Option<Vec<f64>> {
    if estimate.len() < truth.len() {
        return None;
    }
    let mut used = vec![false; estimate.len()];
    let mut current = Vec::with_capacity(truth.len());
    let mut best: Option<(f64, Vec<usize>)> = None;
    search(estimate, truth, &mut used, &mut current, 0.0, &mut best);
    best.map(|(_, idx)| idx.iter().zip(truth).map(|(&i, t)| estimate[i] - t).collect())
}

fn search(
    estimate: &[f64],
    truth: &[f64],
    used: &mut [bool],
    current: &mut Vec<usize>,
    cost: f64,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    if let Some((b, _)) = best {
        if cost >= *b {
            return;
        }
    }
    let k = current.len();
    if k == truth.len() {
        *best = Some((cost, current.clone()));
        return;
    }
    for i in 0..estimate.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        current.push(i);
        search(estimate, truth, used, current, cost + (estimate[i] - truth[k]).abs(), best);
        current.pop();
        used[i] = false;
    }
}

/// Pooled RMSE over every source of every trial that found all sources.
pub fn rmse(estimates: &[Vec<f64>], truths: &[f64]) -> Result<f64> {
    if estimates.is_empty() || truths.is_empty() {
        return Err(BenchError::Config("RMSE needs at least one trial and one source".into()));
    }
    let errors: Vec<Vec<f64>> = estimates.iter().filter_map(|e| matched_errors(e, truths)).collect();
    if errors.is_empty() {
        return Err(BenchError::Config("no trial recovered every source".into()));
    }
    Ok(pooled_rmse(&errors))
}

pub fn pooled_rmse(errors: &[Vec<f64>]) -> f64 {
    let (sum, n) = errors
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Smallest pairwise distance between the true angles, infinite for one source.
pub fn min_separation(truths: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in truths.iter().enumerate() {
        for b in &truths[i + 1..] {
            best = best.min((a - b).abs());
        }
    }
    best
}
