//! Multiclass logistic classifier with a weighted ℓ1ℓ2 (group-lasso)
//! penalty on the rows of the weight matrix.
//!
//! The objective for a fixed feature matrix Φ (l×d) is
//!
//! ```text
//! (1/l) Σᵢ log Σ_c exp((w_c − w_yᵢ)ᵀ Φᵢ + b_c − b_yᵢ)  +  λ Σⱼ γⱼ ‖W_j‖₂
//! ```
//!
//! The bias is not penalized. A row of W is either entirely zero or
//! dense, so a feature is selected jointly for all classes. At a minimizer
//! the row gradients G = ΦᵀR satisfy ‖G_j‖ = λγ_j on nonzero rows and
//! ‖G_j‖ ≤ λγ_j on zero rows; the same inequality evaluated on a feature
//! outside the model tells whether adding it can lower the objective.

pub mod loss;
pub mod prox;
pub mod solver;

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::FeatureDescriptor;
use crate::tensor::FeatureMatrix;

pub use loss::{bias_gradient, evaluate, gradient, residual_matrix, Evaluation};
pub use prox::prox_group;
pub use solver::{fit, kkt_violation, SolverOptions};

/// Default margin ε of the violation test.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    /// d×C; row j holds feature j's weights across classes.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: Vec<f64>,
    pub lambda: f64,
    pub descriptors: Vec<FeatureDescriptor>,
    /// Whether the solver stopped on its convergence criteria (rather than
    /// the iteration cap).
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    pub active_rows: BTreeSet<usize>,
}

impl ModelState {
    /// The all-zero model over `classes` classes and no features.
    pub fn empty(classes: usize, lambda: f64) -> Self {
        ModelState {
            weights: Array2::zeros((0, classes)),
            bias: Array1::zeros(classes),
            gamma: Vec::new(),
            lambda,
            descriptors: Vec::new(),
            converged: true,
        }
    }

    pub fn features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn row_norms(&self) -> Vec<f64> {
        self.weights
            .axis_iter(Axis(0))
            .map(|r| r.dot(&r).sqrt())
            .collect()
    }

    pub fn check(&self) -> Result<()> {
        let d = self.weights.nrows();
        if self.gamma.len() != d || self.descriptors.len() != d {
            return Err(Error::Dimension(format!(
                "{d} weight rows, {} gammas, {} descriptors",
                self.gamma.len(),
                self.descriptors.len()
            )));
        }
        if self.weights.ncols() != self.bias.len() {
            return Err(Error::Dimension("weights and bias disagree on C".into()));
        }
        Ok(())
    }

    /// Drops the zero rows; returns the keep mask that was applied.
    pub fn prune_zero_rows(&mut self) -> Vec<bool> {
        let keep: Vec<bool> = self.row_norms().iter().map(|&n| n > 0.0).collect();
        let idx: Vec<usize> = (0..keep.len()).filter(|&j| keep[j]).collect();
        self.weights = self.weights.select(Axis(0), &idx);
        self.gamma = idx.iter().map(|&j| self.gamma[j]).collect();
        self.descriptors = idx.iter().map(|&j| self.descriptors[j].clone()).collect();
        keep
    }
}

/// Full objective (data term + penalty) of `state` on `phi`.
pub fn objective(state: &ModelState, phi: &FeatureMatrix, labels: &[usize]) -> Result<f64> {
    state.check()?;
    let e = evaluate(&phi.values().view(), &state.weights, &state.bias, labels)?;
    Ok(e.loss + loss::penalty(&state.weights, state.lambda, &state.gamma))
}

/// Λ_j = ‖g_jᵀR‖₂ − λγ_j − ε for each candidate column (columns of
/// `candidates`, l×p), with R computed once from the converged `state`.
pub fn violation_scores(
    state: &ModelState,
    phi_active: &FeatureMatrix,
    labels: &[usize],
    candidates: &ArrayView2<f64>,
    candidate_gammas: &[f64],
    epsilon: f64,
) -> Result<Vec<f64>> {
    if !state.converged {
        return Err(Error::NotConverged);
    }
    state.check()?;
    if candidates.ncols() != candidate_gammas.len() {
        return Err(Error::Dimension(format!(
            "{} candidates but {} gammas",
            candidates.ncols(),
            candidate_gammas.len()
        )));
    }
    if candidates.nrows() != phi_active.rows() {
        return Err(Error::Dimension(format!(
            "candidate columns have {} rows, active matrix {}",
            candidates.nrows(),
            phi_active.rows()
        )));
    }
    let r = residual_matrix(
        &phi_active.values().view(),
        &state.weights,
        &state.bias,
        labels,
    )?;
    let cols: Vec<_> = candidates.columns().into_iter().collect();
    Ok(cols
        .par_iter()
        .zip(candidate_gammas.par_iter())
        .map(|(col, &g)| {
            let gj = r.t().dot(col);
            gj.dot(&gj).sqrt() - state.lambda * g - epsilon
        })
        .collect())
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some(b) if scores[b] >= s => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Row-wise softmax probabilities and argmax labels for features `phi_new`
/// (n×d, already normalized with the training statistics).
///
/// Logits are accumulated in a fixed order per row, so a pixel gets the
/// same prediction whichever batch it is part of.
pub fn predict(state: &ModelState, phi_new: &ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>)> {
    state.check()?;
    let (n, d) = phi_new.dim();
    if d != state.features() {
        return Err(Error::Dimension(format!(
            "model has {} features, input has {d}",
            state.features()
        )));
    }
    let c = state.classes();
    let mut proba = Array2::<f64>::zeros((n, c));
    let mut labels = vec![0usize; n];
    for (i, mut out) in proba.axis_iter_mut(Axis(0)).enumerate() {
        let x = phi_new.row(i);
        for k in 0..c {
            let mut z = state.bias[k];
            for j in 0..d {
                z += x[j] * state.weights[[j, k]];
            }
            out[k] = z;
        }
        let mx = out.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        out.mapv_inplace(|v| (v - mx).exp());
        let s = out.sum();
        out.mapv_inplace(|v| v / s);
        labels[i] = argmax(out.as_slice().unwrap()).unwrap_or(0);
    }
    Ok((labels, proba))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::normalize_column;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// A random instance with normalized columns and every class present.
    fn random_instance(seed: u64, l: usize, d: usize, c: usize) -> (FeatureMatrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..l).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
        let mut phi = FeatureMatrix::empty(l);
        for j in 0..d {
            let raw: Vec<f64> = labels
                .iter()
                .map(|&y| rng.random_range(-1.0..1.0) + 0.8 * ((y + j) % c) as f64)
                .collect();
            let col = normalize_column(&raw).unwrap();
            phi.append_column(&col, FeatureDescriptor::band(j as u32)).unwrap();
        }
        (phi, labels)
    }

    fn random_state(seed: u64, d: usize, c: usize, lambda: f64) -> ModelState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ModelState {
            weights: Array2::from_shape_fn((d, c), |_| rng.random_range(-2.0..2.0)),
            bias: Array1::from_shape_fn(c, |_| rng.random_range(-1.0..1.0)),
            gamma: (0..d).map(|_| rng.random_range(0.5..2.0)).collect(),
            lambda,
            descriptors: (0..d as u32).map(FeatureDescriptor::band).collect(),
            converged: true,
        }
    }

    /// Direct evaluation of the objective term by term, with no max shift
    /// and Neumaier-compensated sums.
    fn direct_objective(s: &ModelState, phi: &FeatureMatrix, y: &[usize]) -> f64 {
        fn ksum(xs: impl Iterator<Item = f64>) -> f64 {
            let (mut sum, mut comp) = (0.0f64, 0.0f64);
            for x in xs {
                let t = sum + x;
                comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
                sum = t;
            }
            sum + comp
        }
        let (l, d) = phi.values().dim();
        let c = s.classes();
        let data = ksum((0..l).map(|i| {
            let yi = y[i];
            let terms = (0..c).map(|k| {
                let z = ksum((0..d).map(|j| (s.weights[[j, k]] - s.weights[[j, yi]]) * phi.values()[[i, j]]));
                (z + s.bias[k] - s.bias[yi]).exp()
            });
            ksum(terms).ln()
        })) / l as f64;
        let pen = ksum((0..d).map(|j| s.gamma[j] * ksum((0..c).map(|k| s.weights[[j, k]].powi(2))).sqrt()));
        data + s.lambda * pen
    }

    #[test]
    fn objective_at_zero_is_log_c() {
        for c in 2..6 {
            let (phi, y) = random_instance(c as u64, 12, 3, c);
            let mut s = random_state(0, 3, c, 0.1);
            s.weights.fill(0.0);
            s.bias.fill(0.0);
            assert!((objective(&s, &phi, &y).unwrap() - (c as f64).ln()).abs() <= 1e-12);
            let empty = FeatureMatrix::empty(12);
            let s0 = ModelState::empty(c, 0.1);
            assert!((objective(&s0, &empty, &y).unwrap() - (c as f64).ln()).abs() <= 1e-12);
        }
    }

    #[test]
    fn objective_matches_direct_evaluation() {
        for seed in 0..5 {
            let (phi, y) = random_instance(seed, 6, 3, 3);
            let s = random_state(seed + 100, 3, 3, 0.05);
            let a = objective(&s, &phi, &y).unwrap();
            let b = direct_objective(&s, &phi, &y);
            assert!((a - b).abs() <= 1e-13 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn residual_sign_structure_and_row_sums() {
        let (phi, y) = random_instance(3, 20, 4, 4);
        let s = random_state(4, 4, 4, 0.01);
        let r = residual_matrix(&phi.values().view(), &s.weights, &s.bias, &y).unwrap();
        for (i, row) in r.axis_iter(Axis(0)).enumerate() {
            assert!(row.sum().abs() <= 1e-12);
            for (k, &v) in row.iter().enumerate() {
                if k == y[i] {
                    assert!(v <= 0.0);
                } else {
                    assert!(v >= 0.0);
                }
            }
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-5;
        for seed in 0..6 {
            let (l, d, c) = (8 + seed as usize * 2, 1 + seed as usize % 5, 2 + seed as usize % 3);
            let (phi, y) = random_instance(seed, l, d, c);
            let s = random_state(seed + 7, d, c, 0.0);
            let x = phi.values().view();
            let data = |w: &Array2<f64>, b: &Array1<f64>| evaluate(&x, w, b, &y).unwrap().loss;
            let r = residual_matrix(&x, &s.weights, &s.bias, &y).unwrap();
            let g = gradient(&x, &r).unwrap();
            let gb = bias_gradient(&r);
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
            for j in 0..d {
                for k in 0..c {
                    let (mut wp, mut wm) = (s.weights.clone(), s.weights.clone());
                    wp[[j, k]] += h;
                    wm[[j, k]] -= h;
                    let fd = (data(&wp, &s.bias) - data(&wm, &s.bias)) / (2.0 * h);
                    assert!(rel(fd, g[[j, k]]) <= 1e-6, "W[{j},{k}]: {fd} vs {}", g[[j, k]]);
                }
            }
            for k in 0..c {
                let (mut bp, mut bm) = (s.bias.clone(), s.bias.clone());
                bp[k] += h;
                bm[k] -= h;
                let fd = (data(&s.weights, &bp) - data(&s.weights, &bm)) / (2.0 * h);
                assert!(rel(fd, gb[k]) <= 1e-6);
            }
        }
    }

    fn unit_gamma(d: usize) -> Vec<f64> {
        vec![1.0; d]
    }

    #[test]
    fn huge_lambda_zeroes_everything() {
        let (phi, y) = random_instance(11, 30, 4, 3);
        let (s, rep) = fit(&phi, &y, 3, 1e3, &unit_gamma(4), None, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(s.weights.iter().all(|&v| v == 0.0));
        // softmax loss at W = 0 with the optimal bias is the class-prior entropy
        let mut counts = [0f64; 3];
        for &c in &y {
            counts[c] += 1.0;
        }
        let entropy: f64 = counts.iter().map(|&n| -(n / 30.0) * (n / 30.0).ln()).sum();
        assert!((rep.objective - entropy).abs() < 1e-9);
    }

    #[test]
    fn converged_fit_satisfies_kkt_with_direction() {
        for (seed, lambda) in [(1u64, 1e-2), (2, 3e-2), (3, 1e-1)] {
            let (phi, y) = random_instance(seed, 40, 6, 3);
            let gamma: Vec<f64> = (0..6).map(|j| 1.0 + 0.1 * j as f64).collect();
            let opts = SolverOptions {
                tol_kkt: 1e-8,
                stall_rtol: 0.0,
                ..SolverOptions::default()
            };
            let (s, rep) = fit(&phi, &y, 3, lambda, &gamma, None, &opts).unwrap();
            assert!(rep.converged, "seed {seed}");
            let r = residual_matrix(&phi.values().view(), &s.weights, &s.bias, &y).unwrap();
            let g = gradient(&phi.values().view(), &r).unwrap();
            assert!(bias_gradient(&r).dot(&bias_gradient(&r)).sqrt() <= 1e-6);
            for j in 0..6 {
                let gj = g.row(j);
                let wj = s.weights.row(j);
                let gn = gj.dot(&gj).sqrt();
                let wn = wj.dot(&wj).sqrt();
                if wn > 0.0 {
                    assert!((gn - lambda * gamma[j]).abs() <= 1e-5);
                    let cos = -gj.dot(&wj) / (gn * wn);
                    assert!(cos.min(1.0).acos() <= 1e-4, "angle {}", cos.acos());
                    assert!(wj.iter().all(|&v| v != 0.0), "rows are dense or zero");
                } else {
                    assert!(gn <= lambda * gamma[j] + 1e-6);
                }
            }
        }
    }

    #[test]
    fn separable_toy_orders_classes() {
        // one feature, class 0 below class 1: W[0,1] − W[0,0] must be positive
        let raw = [-3.0, -2.0, -1.5, -1.0, 1.0, 1.5, 2.0, 3.0];
        let y = [0, 0, 0, 0, 1, 1, 1, 1];
        let col = normalize_column(&raw).unwrap();
        let mut phi = FeatureMatrix::empty(8);
        phi.append_column(&col, FeatureDescriptor::band(0)).unwrap();
        let (s, _) = fit(&phi, &y, 2, 1e-3, &[1.0], None, &SolverOptions::default()).unwrap();
        assert!(s.weights[[0, 1]] - s.weights[[0, 0]] > 0.0);
        // grid oracle over (Δw, Δb); only differences matter for 2 classes
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for a in -400..=400 {
            let dw = a as f64 * 0.05;
            for bb in -20..=20 {
                let db = bb as f64 * 0.1;
                let loss: f64 = col
                    .values
                    .iter()
                    .zip(&y)
                    .map(|(&x, &yi)| {
                        let z = dw * x + db;
                        let z = if yi == 1 { -z } else { z };
                        (1.0 + z.exp()).ln()
                    })
                    .sum::<f64>()
                    / 8.0
                    + 1e-3 * dw.abs() / 2f64.sqrt();
                if loss < best {
                    best = loss;
                    arg = dw;
                }
            }
        }
        assert!(arg > 0.0);
    }

    #[test]
    fn warm_start_never_increases_objective() {
        let (phi, y) = random_instance(21, 50, 5, 4);
        let g = unit_gamma(5);
        let opts = SolverOptions::default();
        let (s1, r1) = fit(&phi, &y, 4, 1e-2, &g, None, &opts).unwrap();
        let (_, r2) = fit(&phi, &y, 4, 1e-2, &g, Some(&s1), &opts).unwrap();
        assert!(r2.objective <= r1.objective);
        assert!(objective(&s1, &phi, &y).unwrap() <= r1.objective + 1e-15);
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let (phi, y) = random_instance(5, 10, 2, 3);
        let opts = SolverOptions::default();
        let mut missing = y.clone();
        missing.iter_mut().for_each(|v| *v = (*v).min(1));
        assert!(matches!(
            fit(&phi, &missing, 3, 0.1, &[1.0, 1.0], None, &opts),
            Err(Error::MissingClass(2))
        ));
        let mut raw = FeatureMatrix::empty(3);
        let col = crate::tensor::NormalizedColumn {
            values: vec![1.0, 2.0, 3.0],
            mean: 0.0,
            norm: 1.0,
        };
        raw.append_column(&col, FeatureDescriptor::band(0)).unwrap();
        assert!(matches!(
            fit(&raw, &[0, 1, 0], 2, 0.1, &[1.0], None, &opts),
            Err(Error::NotNormalized(0))
        ));
    }

    #[test]
    fn active_duplicate_and_orthogonal_candidates() {
        let (phi, y) = random_instance(8, 40, 4, 3);
        let (s, _) = fit(&phi, &y, 3, 1e-2, &unit_gamma(4), None, &SolverOptions::default()).unwrap();
        let dup = phi.values().clone();
        let scores = violation_scores(&s, &phi, &y, &dup.view(), &unit_gamma(4), DEFAULT_EPSILON).unwrap();
        assert!(scores.iter().all(|&v| v <= 1e-6));
        let zero = Array2::<f64>::zeros((40, 1));
        let scores = violation_scores(&s, &phi, &y, &zero.view(), &[2.0], DEFAULT_EPSILON).unwrap();
        assert!((scores[0] - (-1e-2 * 2.0 - DEFAULT_EPSILON)).abs() < 1e-15);
    }

    #[test]
    fn stale_state_is_rejected() {
        let (phi, y) = random_instance(8, 10, 2, 2);
        let mut s = random_state(1, 2, 2, 0.1);
        s.converged = false;
        let c = Array2::<f64>::zeros((10, 1));
        assert!(matches!(
            violation_scores(&s, &phi, &y, &c.view(), &[1.0], 0.0),
            Err(Error::NotConverged)
        ));
    }

    #[test]
    fn adding_the_top_violator_lowers_the_objective() {
        let (full, y) = random_instance(13, 60, 6, 3);
        let mut active = FeatureMatrix::empty(60);
        for j in 0..2 {
            let col = crate::tensor::NormalizedColumn {
                values: full.column(j).to_vec(),
                mean: 0.0,
                norm: 1.0,
            };
            active.append_column(&col, full.descriptors()[j].clone()).unwrap();
        }
        let opts = SolverOptions::default();
        let lambda = 1e-2;
        let (s, r0) = fit(&active, &y, 3, lambda, &[1.0; 2], None, &opts).unwrap();
        let cands = full.values().slice(ndarray::s![.., 2..]).to_owned();
        let scores = violation_scores(&s, &active, &y, &cands.view(), &[1.0; 4], DEFAULT_EPSILON).unwrap();
        let best = argmax(&scores).unwrap();
        assert!(scores[best] > 0.0);
        let col = crate::tensor::NormalizedColumn {
            values: cands.column(best).to_vec(),
            mean: 0.0,
            norm: 1.0,
        };
        let grown = active.with_column(&col, full.descriptors()[2 + best].clone()).unwrap();
        let (_, r1) = fit(&grown, &y, 3, lambda, &[1.0; 3], Some(&s), &opts).unwrap();
        assert!(r1.objective < r0.objective);
    }

    #[test]
    fn prediction_properties() {
        let (phi, _) = random_instance(2, 15, 3, 4);
        let mut s = random_state(3, 3, 4, 0.1);
        let (_, p) = predict(&s, &phi.values().view()).unwrap();
        for row in p.axis_iter(Axis(0)) {
            assert!((row.sum() - 1.0).abs() <= 1e-12);
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        let shifted = {
            let mut t = s.clone();
            t.bias += 5.0;
            t
        };
        let (_, q) = predict(&shifted, &phi.values().view()).unwrap();
        assert!((&p - &q).iter().all(|v| v.abs() <= 1e-12));
        s.weights.fill(0.0);
        s.bias.fill(0.0);
        let (labels, p) = predict(&s, &phi.values().view()).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn residual_rows_sum_to_zero(seed in 0u64..10_000, l in 2usize..20, d in 0usize..5, c in 2usize..5) {
                let (phi, y) = random_instance(seed, l.max(c), d, c);
                let s = random_state(seed ^ 0x55, d, c, 0.1);
                let r = residual_matrix(&phi.values().view(), &s.weights, &s.bias, &y).unwrap();
                for row in r.axis_iter(Axis(0)) {
                    prop_assert!(row.sum().abs() <= 1e-12);
                }
            }
        }
    }
}
