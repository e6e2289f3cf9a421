//! Exact binomial tail probabilities.
//!
//! Every f64 success probability is a dyadic rational, so tails for modest
//! n are computed in exact rational arithmetic and rounded once at the end;
//! the two tails then sum to exactly 1 before rounding. Larger n falls back
//! to log-space summation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

const EXACT_N_LIMIT: u64 = 512;

fn ratio_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("probability is finite")
}

fn binomial_coeff(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact tails (upper = P(X >= k), lower = P(X <= k-1)) as rationals.
fn exact_tails(k: u64, n: u64, p0: f64) -> (BigRational, BigRational) {
    let p = ratio_from_f64(p0);
    let q = BigRational::one() - p.clone();
    let mut upper = BigRational::zero();
    for j in k..=n {
        let term = BigRational::from_integer(binomial_coeff(n, j))
            * pow_ratio(&p, j)
            * pow_ratio(&q, n - j);
        upper += term;
    }
    let lower = BigRational::one() - upper.clone();
    (upper, lower)
}

fn pow_ratio(base: &BigRational, exp: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b.clone();
        }
        b = b.clone() * b;
        e >>= 1;
    }
    acc
}

fn log_space_tail(k: u64, n: u64, p0: f64) -> f64 {
    if p0 <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p0 >= 1.0 {
        return 1.0;
    }
    let ln_p = p0.ln();
    let ln_q = (1.0 - p0).ln();
    let mut lnf = vec![0.0; (n + 1) as usize];
    for i in 1..=n as usize {
        lnf[i] = lnf[i - 1] + (i as f64).ln();
    }
    let mut total = 0.0;
    for j in k..=n {
        let ln_term = lnf[n as usize] - lnf[j as usize] - lnf[(n - j) as usize]
            + j as f64 * ln_p
            + (n - j) as f64 * ln_q;
        total += ln_term.exp();
    }
    total.min(1.0)
}

/// One-sided upper tail P(X >= k) under Binomial(n, p0).
pub fn binomial_tail(k: u64, n: u64, p0: f64) -> f64 {
    assert!(k <= n, "k must not exceed n");
    assert!((0.0..=1.0).contains(&p0), "p0 must lie in [0,1]");
    if k == 0 {
        return 1.0;
    }
    if n <= EXACT_N_LIMIT {
        let (upper, _) = exact_tails(k, n, p0);
        rational_to_f64(&upper)
    } else {
        log_space_tail(k, n, p0)
    }
}

/// Lower tail P(X <= k) under Binomial(n, p0), the exact complement of
/// `binomial_tail(k + 1, n, p0)`.
pub fn binomial_tail_lower(k: u64, n: u64, p0: f64) -> f64 {
    assert!(k <= n, "k must not exceed n");
    if k == n {
        return 1.0;
    }
    if n <= EXACT_N_LIMIT {
        let (_, lower) = exact_tails(k + 1, n, p0);
        rational_to_f64(&lower)
    } else {
        1.0 - log_space_tail(k + 1, n, p0)
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    debug_assert!(!r.is_negative());
    r.to_f64().expect("tail probability fits in f64")
}
