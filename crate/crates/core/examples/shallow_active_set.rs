//! Grow a shallow model: spatial filters of the input bands enter one at a
//! time when they violate the optimality conditions of the current fit.

use aset::active_set::{run, RunConfig};
use aset::eval::{split, Protocol};
use aset::filters::SamplerConfig;
use aset::synth::{generate, SceneSpec};

fn main() -> aset::Result<()> {
    let scene = generate(&SceneSpec::default())?;
    let (train, test) = split(&scene.samples, Protocol::default(), 0)?;
    let config = RunConfig {
        max_iterations: 40,
        sampler: SamplerConfig {
            bands_per_minibatch: 16,
            ..SamplerConfig::default()
        },
        ..RunConfig::default()
    };
    let out = run(&scene.cube, &train, &config, Some(&test))?;

    println!("iter  kappa   objective  active  accepted");
    for r in &out.trace.records {
        println!(
            "{:>4}  {:.4}  {:.6}  {:>6}  {}",
            r.iteration,
            r.kappa.unwrap_or(f64::NAN),
            r.objective,
            r.active_count,
            r.accepted.as_ref().map(|d| d.to_string()).unwrap_or_default()
        );
    }
    println!("\nfinal model:");
    for (d, n) in out.state.descriptors.iter().zip(out.state.row_norms()) {
        println!("  {n:.3}  {d}");
    }
    Ok(())
}
