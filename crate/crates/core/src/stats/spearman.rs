//! Spearman rank correlation against trial index, with midrank ties and a
//! t-approximation p-value. Used for the temporal-drift check.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
}

/// Midranks (1-based, ties averaged).
fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("values are not NaN"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // mean of ranks i+1..=j+1
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson_raw(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Spearman rho of `accuracy` (in trial order) against the index 1..n,
/// with two-sided p from the t-approximation on n−2 degrees of freedom.
///
/// Errors on fewer than 3 observations or a constant sequence (ranks carry
/// no information in that case).
pub fn spearman_drift(accuracy: &[f64]) -> Result<SpearmanResult> {
    let n = accuracy.len();
    if n < 3 {
        return Err(Error::Stats(format!(
            "drift check needs at least 3 trials, got {n}"
        )));
    }
    let ranks = midranks(accuracy);
    let index: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let rho = pearson_raw(&ranks, &index)
        .ok_or_else(|| Error::Stats("drift check undefined for constant accuracy".into()))?;

    let df = (n - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
        2.0 * dist.sf(t.abs())
    };
    Ok(SpearmanResult { rho, p, n })
}
