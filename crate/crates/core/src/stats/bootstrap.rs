//! Percentile bootstrap confidence interval for a difference in proportions.

use crate::error::{Error, Result};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// RNG for one resample, derived from (seed, resample index) so the result
/// never depends on execution order or worker count.
fn resample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&index.to_le_bytes());
    bytes[16..24].copy_from_slice(b"bootstrp");
    ChaCha8Rng::from_seed(bytes)
}

fn resample_mean(outcomes: &[bool], rng: &mut ChaCha8Rng) -> f64 {
    let n = outcomes.len() as u64;
    let mut correct = 0u64;
    for _ in 0..n {
        let idx = (rng.next_u64() % n) as usize;
        if outcomes[idx] {
            correct += 1;
        }
    }
    correct as f64 / n as f64
}

/// Linear-interpolation quantile over a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Percentile 95% interval of accuracy(A) − accuracy(B), resampling each
/// group with replacement at its own size. Deterministic under a fixed
/// seed.
pub fn bootstrap_ci(
    group_a: &[bool],
    group_b: &[bool],
    resamples: u32,
    seed: u64,
) -> Result<(f64, f64)> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Stats("bootstrap groups must be nonempty".into()));
    }
    let mut deltas = Vec::with_capacity(resamples as usize);
    for i in 0..resamples {
        let mut rng = resample_rng(seed, i as u64);
        let delta = resample_mean(group_a, &mut rng) - resample_mean(group_b, &mut rng);
        deltas.push(delta);
    }
    deltas.sort_by(|a, b| a.partial_cmp(b).expect("deltas are finite"));
    Ok((quantile(&deltas, 0.025), quantile(&deltas, 0.975)))
}
