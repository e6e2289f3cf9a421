//! GEE logistic regression with an exchangeable working correlation and
//! sandwich (robust) standard errors, in the Liang-Zeger style: iterate
//! estimating-equation updates for the coefficients, re-estimating the
//! working correlation from Pearson-residual cross-products each round.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeMap;

const MAX_ITERATIONS: usize = 100;
const COEF_TOLERANCE: f64 = 1e-8;
const ETA_CLAMP: f64 = 30.0;

/// One observation: outcome, condition label, cluster id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeeRow {
    pub outcome: bool,
    pub condition: String,
    pub cluster: String,
}

/// One fitted term on the log-odds scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeeTerm {
    /// "intercept" or the condition label the indicator encodes.
    pub name: String,
    pub coefficient: f64,
    pub robust_se: f64,
    /// Model-based SE from the working-covariance bread alone.
    pub model_se: f64,
    /// Undefined when the robust SE degenerates (e.g. separated fits).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeeFit {
    pub reference: String,
    pub terms: Vec<GeeTerm>,
    /// Estimated exchangeable working correlation.
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_obs: usize,
    pub n_clusters: usize,
}

fn expit(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta.clamp(-ETA_CLAMP, ETA_CLAMP)).exp())
}

/// Apply the closed-form exchangeable inverse: R^{-1} z for a cluster of
/// size m is (z - c·sum(z)·1)/(1-alpha) with c = alpha/(1+(m-1)·alpha).
fn exchangeable_inverse_apply(z: &[f64], alpha: f64) -> Vec<f64> {
    let m = z.len() as f64;
    let sum: f64 = z.iter().sum();
    let c = alpha / (1.0 + (m - 1.0) * alpha);
    z.iter().map(|&v| (v - c * sum) / (1.0 - alpha)).collect()
}

/// Fit outcome ~ condition with `reference` as the baseline level.
///
/// Iterates until the largest coefficient step falls below 1e-8 or 100
/// iterations pass; complete separation shows up as `converged = false`.
/// A singular working covariance is an error.
pub fn gee_logistic(rows: &[GeeRow], reference: &str) -> Result<GeeFit> {
    if rows.is_empty() {
        return Err(Error::Stats("gee: no observations".into()));
    }
    let mut condition_levels: Vec<String> = rows
        .iter()
        .map(|r| r.condition.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if condition_levels.len() < 2 {
        return Err(Error::Stats(
            "gee: at least 2 conditions required".into(),
        ));
    }
    if !condition_levels.iter().any(|c| c == reference) {
        return Err(Error::Stats(format!(
            "gee: reference condition {reference:?} absent from data"
        )));
    }
    condition_levels.retain(|c| c != reference);
    let n_params = 1 + condition_levels.len();
    let n_obs = rows.len();

    // Design matrix rows: intercept + one indicator per non-reference level.
    let design: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut x = vec![1.0];
            for level in &condition_levels {
                x.push(if &r.condition == level { 1.0 } else { 0.0 });
            }
            x
        })
        .collect();
    let outcomes: Vec<f64> = rows.iter().map(|r| if r.outcome { 1.0 } else { 0.0 }).collect();

    let mut clusters: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        clusters.entry(r.cluster.as_str()).or_default().push(i);
    }
    let max_cluster = clusters.values().map(Vec::len).max().unwrap_or(1);
    let n_pairs: usize = clusters.values().map(|m| m.len() * (m.len() - 1) / 2).sum();

    let mut beta = DVector::<f64>::zeros(n_params);
    let mut alpha = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        let eta: Vec<f64> = design
            .iter()
            .map(|x| x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum())
            .collect();
        let mu: Vec<f64> = eta.iter().map(|&e| expit(e)).collect();
        let var: Vec<f64> = mu.iter().map(|&m| (m * (1.0 - m)).max(1e-12)).collect();

        let mut h = DMatrix::<f64>::zeros(n_params, n_params);
        let mut u = DVector::<f64>::zeros(n_params);

        for members in clusters.values() {
            let m = members.len();
            // Scaled design block W (m x p) with rows sqrt(v)·x, and the
            // Pearson residual vector e.
            let mut w = vec![vec![0.0; n_params]; m];
            let mut e = vec![0.0; m];
            for (j, &i) in members.iter().enumerate() {
                let s = var[i].sqrt();
                for (k, &x) in design[i].iter().enumerate() {
                    w[j][k] = s * x;
                }
                e[j] = (outcomes[i] - mu[i]) / s;
            }
            let rinv_e = exchangeable_inverse_apply(&e, alpha);
            // u += W' R^{-1} e
            for j in 0..m {
                for k in 0..n_params {
                    u[k] += w[j][k] * rinv_e[j];
                }
            }
            // h += W' R^{-1} W, column by column.
            for col in 0..n_params {
                let wcol: Vec<f64> = (0..m).map(|j| w[j][col]).collect();
                let rinv_col = exchangeable_inverse_apply(&wcol, alpha);
                for j in 0..m {
                    for k in 0..n_params {
                        h[(k, col)] += w[j][k] * rinv_col[j];
                    }
                }
            }
        }

        let h_inv = h
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Stats("gee: singular working covariance".into()))?;
        let delta = &h_inv * &u;
        beta += &delta;
        if !beta.iter().all(|b| b.is_finite()) {
            return Err(Error::Stats("gee: singular working covariance".into()));
        }

        // Re-estimate alpha from Pearson residuals at the updated beta.
        let mu_new: Vec<f64> = design
            .iter()
            .map(|x| expit(x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum()))
            .collect();
        let resid: Vec<f64> = outcomes
            .iter()
            .zip(&mu_new)
            .map(|(&y, &m)| (y - m) / (m * (1.0 - m)).max(1e-12).sqrt())
            .collect();
        let phi = resid.iter().map(|r| r * r).sum::<f64>() / (n_obs - n_params) as f64;
        if n_pairs > 0 {
            let mut cross = 0.0;
            for members in clusters.values() {
                for (ai, &i) in members.iter().enumerate() {
                    for &j in &members[ai + 1..] {
                        cross += resid[i] * resid[j];
                    }
                }
            }
            let denom = phi * (n_pairs as f64 - n_params as f64);
            alpha = if denom.abs() > f64::EPSILON { cross / denom } else { 0.0 };
            let lower = -1.0 / (max_cluster as f64 - 1.0).max(1.0) + 1e-6;
            alpha = alpha.clamp(lower, 1.0 - 1e-6);
        }

        if delta.iter().map(|d| d.abs()).fold(0.0, f64::max) < COEF_TOLERANCE {
            converged = true;
            break;
        }
    }

    // Final bread and meat at the converged estimates.
    let mu: Vec<f64> = design
        .iter()
        .map(|x| expit(x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum()))
        .collect();
    let var: Vec<f64> = mu.iter().map(|&m| (m * (1.0 - m)).max(1e-12)).collect();
    let mut h = DMatrix::<f64>::zeros(n_params, n_params);
    let mut meat = DMatrix::<f64>::zeros(n_params, n_params);
    for members in clusters.values() {
        let m = members.len();
        let mut w = vec![vec![0.0; n_params]; m];
        let mut e = vec![0.0; m];
        for (j, &i) in members.iter().enumerate() {
            let s = var[i].sqrt();
            for (k, &x) in design[i].iter().enumerate() {
                w[j][k] = s * x;
            }
            e[j] = (outcomes[i] - mu[i]) / s;
        }
        let rinv_e = exchangeable_inverse_apply(&e, alpha);
        let mut score = vec![0.0; n_params];
        for j in 0..m {
            for k in 0..n_params {
                score[k] += w[j][k] * rinv_e[j];
            }
        }
        for k in 0..n_params {
            for l in 0..n_params {
                meat[(k, l)] += score[k] * score[l];
            }
        }
        for col in 0..n_params {
            let wcol: Vec<f64> = (0..m).map(|j| w[j][col]).collect();
            let rinv_col = exchangeable_inverse_apply(&wcol, alpha);
            for j in 0..m {
                for k in 0..n_params {
                    h[(k, col)] += w[j][k] * rinv_col[j];
                }
            }
        }
    }
    let bread = h
        .try_inverse()
        .ok_or_else(|| Error::Stats("gee: singular working covariance".into()))?;
    let robust_cov = &bread * &meat * &bread;

    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut terms = Vec::with_capacity(n_params);
    let names: Vec<String> = std::iter::once("intercept".to_string())
        .chain(condition_levels.iter().cloned())
        .collect();
    for (k, name) in names.into_iter().enumerate() {
        let coefficient = beta[k];
        let robust_se = robust_cov[(k, k)].max(0.0).sqrt();
        let model_se = bread[(k, k)].max(0.0).sqrt();
        let z = (robust_se > 0.0 && robust_se.is_finite())
            .then(|| coefficient / robust_se)
            .filter(|z| z.is_finite());
        let p = z.map(|z| 2.0 * normal.sf(z.abs()));
        terms.push(GeeTerm {
            name,
            coefficient,
            robust_se,
            model_se,
            z,
            p,
        });
    }

    Ok(GeeFit {
        reference: reference.to_string(),
        terms,
        alpha,
        iterations,
        converged,
        n_obs,
        n_clusters: clusters.len(),
    })
}
