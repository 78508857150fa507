//! Softmax data term, residual matrix and gradients.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Data-fit value and residual matrix at one (W, b).
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Mean softmax loss over samples.
    pub loss: f64,
    /// l×C residuals; the data-term gradient is Φᵀ R and the bias gradient
    /// its column sums.
    pub residual: Array2<f64>,
}

pub(crate) fn check_dims(
    phi: &ArrayView2<f64>,
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    labels: &[usize],
) -> Result<()> {
    let (l, d) = phi.dim();
    if weights.nrows() != d {
        return Err(Error::Dimension(format!(
            "{d} feature columns but {} weight rows",
            weights.nrows()
        )));
    }
    if weights.ncols() != bias.len() {
        return Err(Error::Dimension(format!(
            "{} weight columns but {} biases",
            weights.ncols(),
            bias.len()
        )));
    }
    if labels.len() != l {
        return Err(Error::Dimension(format!(
            "{l} samples but {} labels",
            labels.len()
        )));
    }
    if let Some(&label) = labels.iter().find(|&&y| y >= bias.len()) {
        return Err(Error::InvalidLabel {
            label,
            classes: bias.len(),
        });
    }
    Ok(())
}

/// Logits M = ΦW + 1b.
pub fn logits(phi: &ArrayView2<f64>, weights: &Array2<f64>, bias: &Array1<f64>) -> Array2<f64> {
    let mut m = phi.dot(weights);
    m += bias;
    m
}

/// Evaluates the mean softmax loss and the residual matrix with
/// max-shifted exponentials.
pub fn evaluate(
    phi: &ArrayView2<f64>,
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    labels: &[usize],
) -> Result<Evaluation> {
    check_dims(phi, weights, bias, labels)?;
    let l = phi.nrows();
    let mut residual = logits(phi, weights, bias);
    let inv_l = 1.0 / l as f64;
    let mut loss = 0.0;
    for (mut row, &y) in residual.axis_iter_mut(Axis(0)).zip(labels) {
        let mx = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        let target = row[y];
        let mut s = 0.0;
        row.mapv_inplace(|v| {
            let e = (v - mx).exp();
            s += e;
            e
        });
        loss += mx + s.ln() - target;
        row.mapv_inplace(|e| e / s * inv_l);
        row[y] -= inv_l;
    }
    Ok(Evaluation {
        loss: loss * inv_l,
        residual,
    })
}

/// l×C residual matrix R at (W, b).
pub fn residual_matrix(
    phi: &ArrayView2<f64>,
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    labels: &[usize],
) -> Result<Array2<f64>> {
    evaluate(phi, weights, bias, labels).map(|e| e.residual)
}

/// G = Φᵀ R, the data-term gradient with respect to W.
pub fn gradient(phi: &ArrayView2<f64>, residual: &Array2<f64>) -> Result<Array2<f64>> {
    if phi.nrows() != residual.nrows() {
        return Err(Error::Dimension(format!(
            "{} samples in features, {} in residual",
            phi.nrows(),
            residual.nrows()
        )));
    }
    Ok(phi.t().dot(residual))
}

/// Gradient with respect to the bias: column sums of R.
pub fn bias_gradient(residual: &Array2<f64>) -> Array1<f64> {
    residual.sum_axis(Axis(0))
}

/// λ Σⱼ γⱼ ‖W_j‖₂.
pub fn penalty(weights: &Array2<f64>, lambda: f64, gamma: &[f64]) -> f64 {
    weights
        .axis_iter(Axis(0))
        .zip(gamma)
        .map(|(row, g)| g * row.dot(&row).sqrt())
        .sum::<f64>()
        * lambda
}
