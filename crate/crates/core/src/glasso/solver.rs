//! Accelerated proximal gradient (FISTA) with backtracking and
//! restart-on-increase for the group-lasso multinomial problem.

use std::collections::VecDeque;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::glasso::loss::{bias_gradient, evaluate, gradient, penalty, Evaluation};
use crate::glasso::prox::prox_group_inplace;
use crate::glasso::{FitReport, ModelState};
use crate::tensor::FeatureMatrix;

/// Largest tolerated deviation of a column from zero mean / unit norm.
const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the KKT residual (see [`kkt_violation`]) falls below this.
    pub tol_kkt: f64,
    pub max_iter: usize,
    /// Stop when the objective decreased by less than `stall_rtol` (relative)
    /// over the last `stall_window` iterations.
    pub stall_window: usize,
    pub stall_rtol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_kkt: 1e-6,
            max_iter: 10_000,
            stall_window: 5,
            stall_rtol: 1e-13,
        }
    }
}

/// Optimality residual of a (W, b) pair given the data gradient there.
///
/// Nonzero rows contribute ‖G_j + λγ_j W_j/‖W_j‖‖, zero rows the excess
/// max(0, ‖G_j‖ − λγ_j), and the bias its gradient norm.
pub fn kkt_violation(
    grad: &Array2<f64>,
    bias_grad: &Array1<f64>,
    weights: &Array2<f64>,
    lambda: f64,
    gamma: &[f64],
) -> f64 {
    let mut worst = bias_grad.dot(bias_grad).sqrt();
    for ((g, w), &gj) in grad
        .axis_iter(Axis(0))
        .zip(weights.axis_iter(Axis(0)))
        .zip(gamma)
    {
        let wn = w.dot(&w).sqrt();
        let thr = lambda * gj;
        let v = if wn > 0.0 {
            g.iter()
                .zip(w.iter())
                .map(|(a, b)| {
                    let d = a + thr * b / wn;
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        } else {
            (g.dot(&g).sqrt() - thr).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Upper bound on the curvature of the data term: σ²_max([Φ 1]) / (2l).
fn lipschitz_bound(phi: &ArrayView2<f64>) -> f64 {
    let (l, d) = phi.dim();
    let mut v = Array1::<f64>::from_elem(d + 1, 1.0 / ((d + 1) as f64).sqrt());
    let mut sigma2 = 1.0;
    for _ in 0..40 {
        let mut xv = phi.dot(&v.slice(ndarray::s![..d]));
        xv += v[d];
        let mut u = Array1::<f64>::zeros(d + 1);
        u.slice_mut(ndarray::s![..d]).assign(&phi.t().dot(&xv));
        u[d] = xv.sum();
        let n = u.dot(&u).sqrt();
        if n == 0.0 {
            break;
        }
        sigma2 = n;
        v = u / n;
    }
    sigma2 / (2.0 * l as f64)
}

fn check_inputs(
    phi: &FeatureMatrix,
    labels: &[usize],
    classes: usize,
    lambda: f64,
    gamma: &[f64],
) -> Result<()> {
    if labels.len() != phi.rows() {
        return Err(Error::Dimension(format!(
            "{} samples but {} labels",
            phi.rows(),
            labels.len()
        )));
    }
    if gamma.len() != phi.cols() {
        return Err(Error::Dimension(format!(
            "{} features but {} regularization weights",
            phi.cols(),
            gamma.len()
        )));
    }
    if !(lambda > 0.0) || gamma.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidArgument(
            "lambda and every gamma must be positive".into(),
        ));
    }
    let mut seen = vec![false; classes];
    for &y in labels {
        if y >= classes {
            return Err(Error::InvalidLabel { label: y, classes });
        }
        seen[y] = true;
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(Error::MissingClass(c));
    }
    for (j, col) in phi.values().columns().into_iter().enumerate() {
        let n = col.dot(&col).sqrt();
        let m = col.sum() / col.len() as f64;
        if (n - 1.0).abs() > NORMALIZATION_TOL || m.abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(j));
        }
    }
    Ok(())
}

/// Starting point: rows copied from `warm` where the descriptor matches,
/// zero rows for new features; otherwise log class priors as bias.
fn initial_point(
    phi: &FeatureMatrix,
    labels: &[usize],
    classes: usize,
    warm: Option<&ModelState>,
) -> (Array2<f64>, Array1<f64>) {
    let d = phi.cols();
    let mut w = Array2::<f64>::zeros((d, classes));
    if let Some(ws) = warm.filter(|ws| ws.bias.len() == classes) {
        for (j, desc) in phi.descriptors().iter().enumerate() {
            if let Some(k) = ws.descriptors.iter().position(|x| x == desc) {
                w.row_mut(j).assign(&ws.weights.row(k));
            }
        }
        return (w, ws.bias.clone());
    }
    let mut counts = vec![0f64; classes];
    for &y in labels {
        counts[y] += 1.0;
    }
    let logs: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    let mean = logs.iter().sum::<f64>() / classes as f64;
    (w, logs.iter().map(|v| v - mean).collect())
}

fn sq_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// Minimizes mean softmax loss + λ Σ γ_j ‖W_j‖₂ over (W, b).
pub fn fit(
    phi: &FeatureMatrix,
    labels: &[usize],
    classes: usize,
    lambda: f64,
    gamma: &[f64],
    warm: Option<&ModelState>,
    opts: &SolverOptions,
) -> Result<(ModelState, FitReport)> {
    check_inputs(phi, labels, classes, lambda, gamma)?;
    let x = phi.values().view();
    let (mut w, mut b) = initial_point(phi, labels, classes, warm);

    let mut eval_x: Evaluation = evaluate(&x, &w, &b, labels)?;
    let mut f_x = eval_x.loss + penalty(&w, lambda, gamma);
    let mut wy = w.clone();
    let mut by = b.clone();
    let mut eval_y = eval_x.clone();
    let mut t = 1.0f64;
    let mut lip = (lipschitz_bound(&x) / 8.0).max(1e-12);
    let mut history: VecDeque<f64> = VecDeque::from([f_x]);
    let mut kkt = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iter.max(1) {
        iterations = it;
        let gw = gradient(&x, &eval_y.residual)?;
        let gb = bias_gradient(&eval_y.residual);

        let (w_new, b_new, eval_new) = loop {
            let step = 1.0 / lip;
            let mut w_new = &wy - &(&gw * step);
            prox_group_inplace(&mut w_new, step, lambda, gamma);
            let b_new = &by - &(&gb * step);
            let eval_new = evaluate(&x, &w_new, &b_new, labels)?;
            let dw = &w_new - &wy;
            let db = &b_new - &by;
            let model = eval_y.loss
                + (&gw * &dw).sum()
                + gb.dot(&db)
                + 0.5 * lip * (sq_norm(&dw) + db.dot(&db));
            if eval_new.loss <= model + 1e-14 * (1.0 + eval_y.loss.abs()) {
                break (w_new, b_new, eval_new);
            }
            lip *= 2.0;
        };
        let f_new = eval_new.loss + penalty(&w_new, lambda, gamma);

        let at_anchor = t == 1.0 && wy == w && by == b;
        if f_new > f_x {
            // momentum overshoot: restart from the last accepted iterate
            if !at_anchor {
                t = 1.0;
                wy = w.clone();
                by = b.clone();
                eval_y = eval_x.clone();
                continue;
            }
            history.push_back(f_x);
        } else {
            let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_new;
            wy = &w_new + &((&w_new - &w) * beta);
            by = &b_new + &((&b_new - &b) * beta);
            w = w_new;
            b = b_new;
            eval_x = eval_new;
            f_x = f_new;
            t = t_new;
            eval_y = if beta == 0.0 {
                eval_x.clone()
            } else {
                evaluate(&x, &wy, &by, labels)?
            };
            history.push_back(f_x);
        }

        let g = gradient(&x, &eval_x.residual)?;
        kkt = kkt_violation(&g, &bias_gradient(&eval_x.residual), &w, lambda, gamma);
        if kkt <= opts.tol_kkt {
            converged = true;
            break;
        }
        while history.len() > opts.stall_window + 1 {
            history.pop_front();
        }
        if history.len() == opts.stall_window + 1 {
            let old = history[0];
            let rel = (old - f_x) / f_x.abs().max(f64::MIN_POSITIVE);
            if rel < opts.stall_rtol {
                converged = true;
                break;
            }
        }
    }

    let active_rows = w
        .axis_iter(Axis(0))
        .enumerate()
        .filter(|(_, r)| r.iter().any(|&v| v != 0.0))
        .map(|(j, _)| j)
        .collect();
    let state = ModelState {
        weights: w,
        bias: b,
        gamma: gamma.to_vec(),
        lambda,
        descriptors: phi.descriptors().to_vec(),
        converged,
    };
    let report = FitReport {
        objective: f_x,
        iterations,
        converged,
        kkt_violation: kkt,
        active_rows,
    };
    Ok((state, report))
}
