//! Fit the group-lasso multinomial model along a decreasing penalty path and
//! watch rows enter the model.

use aset::eval::{split, Protocol};
use aset::filters::FeatureDescriptor;
use aset::glasso::{fit, SolverOptions};
use aset::synth::{generate, SceneSpec};
use aset::tensor::{extract_column, normalize_column, FeatureMatrix};

fn main() -> aset::Result<()> {
    let scene = generate(&SceneSpec::default())?;
    let (samples, _) = split(&scene.samples, Protocol::default(), 0)?;
    let samples = &samples;
    let mut phi = FeatureMatrix::empty(samples.len());
    for id in scene.cube.original_ids() {
        let col = normalize_column(&extract_column(&scene.cube, id, samples)?)?;
        phi.append_column(&col, FeatureDescriptor::band(id))?;
    }
    let gamma = vec![1.0; phi.cols()];
    let opts = SolverOptions::default();

    println!("{:>8} {:>8} {:>10} {:>6}", "lambda", "nonzero", "kkt", "iters");
    let mut warm = None;
    for lambda in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3] {
        let (state, report) = fit(&phi, samples.labels(), 5, lambda, &gamma, warm.as_ref(), &opts)?;
        let nonzero = state.row_norms().iter().filter(|&&n| n > 0.0).count();
        println!("{lambda:>8} {nonzero:>8} {:>10.2e} {:>6}", report.kkt_violation, report.iterations);
        warm = Some(state);
    }
    Ok(())
}
