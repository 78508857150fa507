//! Plain-text run report: per-iteration series, the weight matrix, depth
//! histograms and the strongest features.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::active_set::RunTrace;
use crate::filters::FeatureDescriptor;
use crate::model::Classifier;

/// Nonzero rows sorted by decreasing ‖W_j‖₂ (model order breaks ties),
/// truncated to `k`.
pub fn top_features(model: &Classifier, k: usize) -> Vec<(FeatureDescriptor, f64)> {
    let norms = model.state.row_norms();
    let mut idx: Vec<usize> = (0..norms.len()).filter(|&j| norms[j] > 0.0).collect();
    idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    idx.into_iter()
        .take(k)
        .map(|j| (model.state.descriptors[j].clone(), norms[j]))
        .collect()
}

/// Active descriptors per depth, and derived bank recipes per depth.
pub fn model_depths(model: &Classifier) -> (BTreeMap<u32, usize>, BTreeMap<u32, usize>) {
    let mut active = BTreeMap::new();
    for d in model.descriptors() {
        *active.entry(d.depth).or_default() += 1;
    }
    let mut derived = BTreeMap::new();
    for r in model.derived.values() {
        *derived.entry(r.depth).or_default() += 1;
    }
    (active, derived)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn series_table(trace: &RunTrace) -> String {
    let mut out = String::from("iteration\tkappa\tobjective\tactive_count\n");
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.iteration,
            fmt_opt(r.kappa),
            r.objective,
            r.active_count
        );
    }
    out
}

/// One row per feature: descriptor, ‖W_j‖₂, the weights, and each class's
/// share W_jc²/‖W_j‖² of the row energy.
pub fn weight_table(model: &Classifier) -> String {
    let c = model.state.classes();
    let mut out = String::from("feature\tdescriptor\trow_norm");
    for k in 1..=c {
        let _ = write!(out, "\tw_{k}");
    }
    for k in 1..=c {
        let _ = write!(out, "\tshare_{k}");
    }
    out.push('\n');
    let norms = model.state.row_norms();
    for (j, d) in model.descriptors().iter().enumerate() {
        let row = model.state.weights.row(j);
        let _ = write!(out, "{j}\t{d}\t{}", norms[j]);
        for w in row {
            let _ = write!(out, "\t{w}");
        }
        let energy = norms[j] * norms[j];
        for w in row {
            let share = if energy > 0.0 { w * w / energy } else { 0.0 };
            let _ = write!(out, "\t{share}");
        }
        out.push('\n');
    }
    out
}

pub fn render(model: &Classifier, trace: &RunTrace, top_k: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# summary\nfeatures\t{}\nclasses\t{}\nlambda\t{}\niterations\t{}\nfinal_kappa\t{}\n",
        model.state.features(),
        model.state.classes(),
        model.state.lambda,
        trace.records.last().map_or(0, |r| r.iteration),
        fmt_opt(trace.records.last().and_then(|r| r.kappa)),
    );
    out += "# series\n";
    out += &series_table(trace);
    out += "\n# weights\n";
    out += &weight_table(model);
    let (active, derived) = model_depths(model);
    out += "\n# depth_histogram\ndepth\tactive\tderived_bank\n";
    let depths: std::collections::BTreeSet<u32> = active.keys().chain(derived.keys()).copied().collect();
    for h in depths {
        let _ = writeln!(
            out,
            "{h}\t{}\t{}",
            active.get(&h).copied().unwrap_or(0),
            derived.get(&h).copied().unwrap_or(0)
        );
    }
    let _ = writeln!(out, "\n# top_features\nrank\trow_norm\tdescriptor");
    for (i, (d, n)) in top_features(model, top_k).iter().enumerate() {
        let _ = writeln!(out, "{}\t{n}\t{d}", i + 1);
    }
    out
}
