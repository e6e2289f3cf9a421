//! Benjamini-Hochberg step-up false-discovery-rate adjustment.

/// Map p-values to q-values: on the ascending order statistics,
/// q(i) = min over j >= i of p(j)·m/j, clipped at 1, returned in the
/// input order.
pub fn bh_fdr(pvals: &[f64]) -> Vec<f64> {
    let m = pvals.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| pvals[i].partial_cmp(&pvals[j]).expect("p-values are not NaN"));

    let mut qvals = vec![0.0; m];
    let mut running_min = f64::INFINITY;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let adjusted = pvals[idx] * m as f64 / (rank + 1) as f64;
        running_min = running_min.min(adjusted);
        qvals[idx] = running_min.min(1.0);
    }
    qvals
}
