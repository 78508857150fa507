use ndarray::{Array2, Axis};

/// Row-wise block soft-thresholding, the proximal map of
/// `step · λ · Σⱼ γⱼ ‖row_j‖₂`.
pub fn prox_group(v: &Array2<f64>, step: f64, lambda: f64, gamma: &[f64]) -> Array2<f64> {
    let mut out = v.clone();
    prox_group_inplace(&mut out, step, lambda, gamma);
    out
}

pub fn prox_group_inplace(v: &mut Array2<f64>, step: f64, lambda: f64, gamma: &[f64]) {
    assert_eq!(v.nrows(), gamma.len(), "one weight per row");
    for (mut row, &g) in v.axis_iter_mut(Axis(0)).zip(gamma) {
        let norm = row.dot(&row).sqrt();
        let thr = step * lambda * g;
        if norm <= thr || norm == 0.0 {
            row.fill(0.0);
        } else {
            row *= 1.0 - thr / norm;
        }
    }
}
