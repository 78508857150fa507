//! Sampling protocol and agreement metrics.

use std::collections::HashSet;
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::active_set::{run, RunConfig, RunOutcome};
use crate::error::{Error, Result};
use crate::tensor::{ImageCube, LabeledSamples};

/// Training share taken from classes smaller than the requested count.
pub const SMALL_CLASS_FRACTION: f64 = 0.8;

/// Splits `samples` into a class-balanced training set and the rest.
///
/// A class with at least `per_class` pixels contributes exactly `per_class`;
/// a smaller class contributes ⌊0.8·available⌋. Draws are uniform without
/// replacement and both outputs keep the input order.
pub fn stratified_sample<R: Rng + ?Sized>(
    samples: &LabeledSamples,
    per_class: usize,
    rng: &mut R,
) -> Result<(LabeledSamples, LabeledSamples)> {
    if per_class == 0 {
        return Err(Error::InvalidArgument("per_class must be positive".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); samples.classes()];
    for (i, &y) in samples.labels().iter().enumerate() {
        by_class[y].push(i);
    }
    let mut chosen = vec![false; samples.len()];
    for (c, idx) in by_class.iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::MissingClass(c));
        }
        let take = if idx.len() >= per_class {
            per_class
        } else {
            (SMALL_CLASS_FRACTION * idx.len() as f64).floor() as usize
        };
        for k in index::sample(rng, idx.len(), take) {
            chosen[idx[k]] = true;
        }
    }
    let train: Vec<usize> = (0..samples.len()).filter(|&i| chosen[i]).collect();
    let rest: Vec<usize> = (0..samples.len()).filter(|&i| !chosen[i]).collect();
    Ok((samples.subset(&train), samples.subset(&rest)))
}

/// Drops from `rest` every pixel within Chebyshev distance (window−1)/2 of
/// a training pixel.
pub fn spatial_exclusion(rest: &LabeledSamples, train: &LabeledSamples, window: usize) -> LabeledSamples {
    let radius = (window.max(1) - 1) / 2;
    let occupied: HashSet<(usize, usize)> = train.pixels().iter().copied().collect();
    let near = |&(r, c): &(usize, usize)| {
        for rr in r.saturating_sub(radius)..=r + radius {
            for cc in c.saturating_sub(radius)..=c + radius {
                if occupied.contains(&(rr, cc)) {
                    return true;
                }
            }
        }
        false
    };
    let keep: Vec<usize> = (0..rest.len()).filter(|&i| !near(&rest.pixels()[i])).collect();
    rest.subset(&keep)
}

/// Rows are reference classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if counts.iter().any(|r| r.len() != c) {
            return Err(Error::Dimension("confusion matrix must be square".into()));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.classes()).map(|c| self.counts[c][c]).sum()
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.counts {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>6}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension(format!(
            "{} references but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for y in [t, p] {
            if y >= classes {
                return Err(Error::InvalidLabel { label: y, classes });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Cohen's kappa. When chance agreement is total (p_e = 1) the result is 1
/// for perfect agreement and 0 otherwise.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidArgument("empty confusion matrix".into()));
    }
    let n = total as f64;
    let po = cm.diagonal() as f64 / n;
    let c = cm.classes();
    let pe = (0..c)
        .map(|k| {
            let row: u64 = cm.counts[k].iter().sum();
            let col: u64 = cm.counts.iter().map(|r| r[k]).sum();
            row as f64 * col as f64
        })
        .sum::<f64>()
        / (n * n);
    if pe >= 1.0 {
        return Ok(if cm.diagonal() == total { 1.0 } else { 0.0 });
    }
    Ok((po - pe) / (1.0 - pe))
}

pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidArgument("empty confusion matrix".into()));
    }
    Ok(cm.diagonal() as f64 / total as f64)
}

/// Outcome of one seeded experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub kappa: f64,
    pub accuracy: f64,
    pub features: usize,
}

/// Training/test split settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Protocol {
    pub per_class: usize,
    /// Square window around training pixels excluded from the test set.
    pub window: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            per_class: 100,
            window: 3,
        }
    }
}

/// The train/test split used by [`run_experiment`] for `seed`.
pub fn split(
    samples: &LabeledSamples,
    protocol: Protocol,
    seed: u64,
) -> Result<(LabeledSamples, LabeledSamples)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // a separate stream keeps the split independent of the run's own draws
    rng.set_stream(1);
    let (train, rest) = stratified_sample(samples, protocol.per_class, &mut rng)?;
    let test = spatial_exclusion(&rest, &train, protocol.window);
    Ok((train, test))
}

/// Split, run the active-set loop with the test set as holdout, and
/// summarize the final model on the test set.
pub fn run_experiment(
    cube: &ImageCube,
    samples: &LabeledSamples,
    config: &RunConfig,
    protocol: Protocol,
) -> Result<(RunOutcome, RunSummary)> {
    let (train, test) = split(samples, protocol, config.seed)?;
    if test.is_empty() {
        return Err(Error::Infeasible("no test pixels left after exclusion".into()));
    }
    let outcome = run(cube, &train, config, Some(&test))?;
    let pred = outcome.classifier()?.predict_samples(cube, &test)?;
    let cm = confusion(test.labels(), &pred, test.classes())?;
    let summary = RunSummary {
        seed: config.seed,
        kappa: kappa(&cm)?,
        accuracy: overall_accuracy(&cm)?,
        features: outcome.state.features(),
    };
    Ok((outcome, summary))
}

/// [`run_experiment`] once per seed (in parallel), in seed order.
pub fn repeated_runs(
    cube: &ImageCube,
    samples: &LabeledSamples,
    config: &RunConfig,
    protocol: Protocol,
    seeds: &[u64],
) -> Result<Vec<RunSummary>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = RunConfig {
                seed,
                ..config.clone()
            };
            run_experiment(cube, samples, &cfg, protocol).map(|(_, s)| s)
        })
        .collect()
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Per-run rows followed by mean ± std (sample standard deviation).
pub fn report_table(runs: &[RunSummary]) -> String {
    let mut out = String::from("seed\tkappa\taccuracy\tfeatures\n");
    for r in runs {
        out += &format!("{}\t{:.4}\t{:.4}\t{}\n", r.seed, r.kappa, r.accuracy, r.features);
    }
    let col = |f: fn(&RunSummary) -> f64| mean_std(&runs.iter().map(f).collect::<Vec<_>>());
    let (km, ks) = col(|r| r.kappa);
    let (am, as_) = col(|r| r.accuracy);
    let (fm, fs) = col(|r| r.features as f64);
    out += &format!("mean±std\t{km:.4}±{ks:.4}\t{am:.4}±{as_:.4}\t{fm:.1}±{fs:.1}\n");
    out
}
