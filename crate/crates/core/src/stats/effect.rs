//! Cohen's h effect size for two proportions.

/// h = 2·arcsin(√p1) − 2·arcsin(√p2).
pub fn cohens_h(p1: f64, p2: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2));
    2.0 * p1.sqrt().asin() - 2.0 * p2.sqrt().asin()
}
