//! Active-set feature discovery.
//!
//! Starting from the original bands, each iteration draws a minibatch of
//! random filter recipes, scores them against the KKT conditions of the
//! current fit, and adds the single most violating one before refitting.
//! In hierarchical mode accepted features also become inputs for later
//! filters, and a depth-dependent weight γ0^h makes composed features
//! more expensive to select.

pub mod depth;
pub mod trace;

use std::collections::HashSet;
use std::sync::Arc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{confusion, kappa};
use crate::filters::{materialize, sample_minibatch, FeatureDescriptor, SamplerConfig};
use crate::glasso::{argmax, fit, violation_scores, ModelState, SolverOptions, DEFAULT_EPSILON};
use crate::model::Classifier;
use crate::tensor::{
    band_column, normalize_column, Band, FeatureMatrix, ImageCube, LabeledSamples,
    NormalizedColumn,
};

pub use depth::{depth_gamma, depth_histogram, depth_of, DepthHistogram};
pub use trace::{RunTrace, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Filters read original bands only; every feature has γ = 1.
    Shallow,
    /// Accepted features join the input bank; γ = γ0^depth.
    Hierarchical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub lambda: f64,
    pub gamma0: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Scoring passes per minibatch (the extra passes only happen after an
    /// acceptance, against the refit residual).
    pub minibatch_uses: usize,
    pub sampler: SamplerConfig,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Shallow,
            lambda: 1e-3,
            gamma0: 1.1,
            epsilon: DEFAULT_EPSILON,
            max_iterations: 100,
            minibatch_uses: 2,
            sampler: SamplerConfig::default(),
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("lambda and epsilon must be positive".into()));
        }
        if !(self.gamma0 >= 1.0) {
            return Err(Error::InvalidArgument("gamma0 must be at least 1".into()));
        }
        if self.minibatch_uses == 0 {
            return Err(Error::InvalidArgument("minibatch_uses must be positive".into()));
        }
        self.sampler.validate()
    }

    pub fn gamma(&self, depth: u32) -> f64 {
        match self.mode {
            Mode::Shallow => 1.0,
            Mode::Hierarchical => depth_gamma(depth, self.gamma0),
        }
    }

    fn effective_sampler(&self) -> SamplerConfig {
        let mut s = self.sampler.clone();
        if self.mode == Mode::Shallow {
            s.allow_derived_inputs = false;
        }
        s
    }
}

/// One accepted feature, with the quantities that justified it.
#[derive(Debug, Clone, PartialEq)]
pub struct Acceptance {
    pub iteration: usize,
    pub descriptor: FeatureDescriptor,
    pub score: f64,
    pub gamma: f64,
    pub objective_before: f64,
    pub objective_after: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: ModelState,
    /// Training columns of the final active set (same order as the model rows).
    pub features: FeatureMatrix,
    /// Original bands plus, in hierarchical mode, every accepted feature.
    pub bank: ImageCube,
    pub trace: RunTrace,
    pub acceptances: Vec<Acceptance>,
    pub epsilon: f64,
}

impl RunOutcome {
    pub fn classifier(&self) -> Result<Classifier> {
        Classifier::from_fit(self.state.clone(), &self.features, &self.bank, self.epsilon)
    }

    pub fn final_kappa(&self) -> Option<f64> {
        self.trace.records.last().and_then(|r| r.kappa)
    }
}

struct Candidate {
    desc: FeatureDescriptor,
    band: Arc<Band>,
    column: NormalizedColumn,
}

/// Live state of the loop: the active columns together with their full
/// rasters (kept for holdout scoring and for promotion into the bank).
struct Active {
    phi: FeatureMatrix,
    bands: Vec<Arc<Band>>,
    gamma: Vec<f64>,
}

impl Active {
    fn retain(&mut self, keep: &[bool]) {
        self.phi.retain_columns(keep);
        let mut k = keep.iter();
        self.bands.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        self.gamma.retain(|_| *k.next().unwrap());
    }

    fn holdout_kappa(&self, state: &ModelState, holdout: &LabeledSamples) -> Result<f64> {
        let (n, d) = (holdout.len(), self.bands.len());
        let mut x = Array2::<f64>::zeros((n, d));
        for j in 0..d {
            let (m, s) = (self.phi.means()[j], self.phi.norms()[j]);
            for (i, &(r, c)) in holdout.pixels().iter().enumerate() {
                x[[i, j]] = crate::tensor::apply_normalization(f64::from(self.bands[j].get(r, c)), m, s);
            }
        }
        let (pred, _) = crate::glasso::predict(state, &x.view())?;
        kappa(&confusion(holdout.labels(), &pred, holdout.classes())?)
    }
}

fn draw_candidates(
    rng: &mut ChaCha8Rng,
    bank: &ImageCube,
    sampler: &SamplerConfig,
    exclude: &HashSet<FeatureDescriptor>,
    train: &LabeledSamples,
) -> Result<Vec<Candidate>> {
    let descs = sample_minibatch(rng, bank, sampler, exclude)?;
    let built = descs
        .into_par_iter()
        .map(|desc| {
            let band = materialize(bank, &desc)?;
            match normalize_column(&band_column(&band, train)?) {
                Ok(column) => Ok(Some(Candidate {
                    desc,
                    band: Arc::new(band),
                    column,
                })),
                Err(Error::ZeroVariance) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(built.into_iter().flatten().collect())
}

/// Runs the active-set loop on `cube` with training pixels `train`.
///
/// `holdout`, when given, is only used to record a kappa per iteration in
/// the trace; it never influences the selection.
pub fn run(
    cube: &ImageCube,
    train: &LabeledSamples,
    config: &RunConfig,
    holdout: Option<&LabeledSamples>,
) -> Result<RunOutcome> {
    config.validate()?;
    train.require_all_classes()?;
    train.check_bounds(cube.height(), cube.width())?;
    if let Some(h) = holdout {
        h.check_bounds(cube.height(), cube.width())?;
    }
    let labels = train.labels();
    let classes = train.classes();
    let sampler = config.effective_sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut bank = cube.originals();

    let mut active = Active {
        phi: FeatureMatrix::empty(train.len()),
        bands: Vec::new(),
        gamma: Vec::new(),
    };
    for id in bank.original_ids() {
        let band = Arc::clone(bank.band(id)?);
        match normalize_column(&band_column(&band, train)?) {
            Ok(col) => {
                active.phi.append_column(&col, FeatureDescriptor::band(id))?;
                active.bands.push(band);
                active.gamma.push(config.gamma(0));
            }
            Err(Error::ZeroVariance) => {}
            Err(e) => return Err(e),
        }
    }

    let (mut state, report) = fit(
        &active.phi,
        labels,
        classes,
        config.lambda,
        &active.gamma,
        None,
        &config.solver,
    )?;
    let mut objective = report.objective;
    let keep = state.prune_zero_rows();
    active.retain(&keep);

    let score_kappa = |active: &Active, state: &ModelState| -> Result<Option<f64>> {
        holdout
            .filter(|h| !h.is_empty())
            .map(|h| active.holdout_kappa(state, h))
            .transpose()
    };

    let mut trace = RunTrace::default();
    trace.push(TraceRecord {
        iteration: 0,
        objective,
        active_count: active.phi.cols(),
        accepted: None,
        best_violation: None,
        kappa: score_kappa(&active, &state)?,
    });

    let mut acceptances = Vec::new();
    let mut pending: Option<(Vec<Candidate>, usize)> = None;
    for iteration in 1..=config.max_iterations {
        let (mut candidates, uses) = match pending.take() {
            Some(p) => p,
            None => {
                let exclude: HashSet<FeatureDescriptor> =
                    active.phi.descriptors().iter().cloned().collect();
                (draw_candidates(&mut rng, &bank, &sampler, &exclude, train)?, 0)
            }
        };

        let mut accepted = None;
        let mut best_violation = None;
        if !candidates.is_empty() {
            let gammas: Vec<f64> = candidates.iter().map(|c| config.gamma(c.desc.depth)).collect();
            let mut x = Array2::<f64>::zeros((train.len(), candidates.len()));
            for (j, c) in candidates.iter().enumerate() {
                x.column_mut(j).assign(&ndarray::ArrayView1::from(&c.column.values));
            }
            let scores = violation_scores(
                &state,
                &active.phi,
                labels,
                &x.view(),
                &gammas,
                config.epsilon,
            )?;
            let best = argmax(&scores).expect("non-empty minibatch");
            best_violation = Some(scores[best]);

            if scores[best] > 0.0 {
                let cand = candidates.remove(best);
                active.phi.append_column(&cand.column, cand.desc.clone())?;
                active.bands.push(Arc::clone(&cand.band));
                active.gamma.push(gammas[best]);
                debug_assert!(active.phi.descriptors_unique());
                let (new_state, report) = fit(
                    &active.phi,
                    labels,
                    classes,
                    config.lambda,
                    &active.gamma,
                    Some(&state),
                    &config.solver,
                )?;
                acceptances.push(Acceptance {
                    iteration,
                    descriptor: cand.desc.clone(),
                    score: scores[best],
                    gamma: gammas[best],
                    objective_before: objective,
                    objective_after: report.objective,
                });
                state = new_state;
                objective = report.objective;
                let keep = state.prune_zero_rows();
                active.retain(&keep);
                if config.mode == Mode::Hierarchical
                    && !bank.meta().iter().any(|m| bank.recipe(m.id) == Some(&cand.desc))
                {
                    bank.push_derived(cand.desc.clone(), cand.band)?;
                }
                accepted = Some(cand.desc);
                if uses + 1 < config.minibatch_uses && !candidates.is_empty() {
                    pending = Some((candidates, uses + 1));
                }
            }
        }

        trace.push(TraceRecord {
            iteration,
            objective,
            active_count: active.phi.cols(),
            accepted,
            best_violation,
            kappa: score_kappa(&active, &state)?,
        });
    }

    Ok(RunOutcome {
        state,
        features: active.phi,
        bank,
        trace,
        acceptances,
        epsilon: config.epsilon,
    })
}
