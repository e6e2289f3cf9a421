//! Pearson correlation and the cross-model effect-correlation matrix.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Pearson r; None when either vector has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
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
    // Constant vectors leave only accumulated rounding noise in the sums.
    if sxx <= 1e-20 || syy <= 1e-20 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPairR {
    pub model_a: String,
    pub model_b: String,
    /// None when a model's effect vector has zero variance.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossModelCorrelation {
    pub pairs: Vec<ModelPairR>,
    /// Mean over defined pairs; None when no pair is defined.
    pub mean_r: Option<f64>,
}

/// Pairwise Pearson r of per-task effect vectors across models.
///
/// `effects` holds one (model id, per-task delta vector) per model; vectors
/// must share one length. Six models yield 15 unordered pairs.
pub fn cross_model_correlation(effects: &[(String, Vec<f64>)]) -> Result<CrossModelCorrelation> {
    if effects.len() < 2 {
        return Err(Error::Stats(format!(
            "cross-model correlation needs at least 2 models, got {}",
            effects.len()
        )));
    }
    let len = effects[0].1.len();
    if effects.iter().any(|(_, v)| v.len() != len) {
        return Err(Error::Stats(
            "cross-model effect vectors must share one length".into(),
        ));
    }
    let mut pairs = Vec::new();
    for i in 0..effects.len() {
        for j in (i + 1)..effects.len() {
            pairs.push(ModelPairR {
                model_a: effects[i].0.clone(),
                model_b: effects[j].0.clone(),
                r: pearson(&effects[i].1, &effects[j].1),
            });
        }
    }
    let defined: Vec<f64> = pairs.iter().filter_map(|p| p.r).collect();
    let mean_r = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    Ok(CrossModelCorrelation { pairs, mean_r })
}
