//! Repeat the experiment over several seeds (each with its own split and
//! candidate draws) and report mean ± standard deviation.
//!
//!     cargo run --release --example repeated_runs -- [runs]

use aset::active_set::RunConfig;
use aset::eval::{repeated_runs, report_table, Protocol};
use aset::filters::SamplerConfig;
use aset::synth::{generate, SceneSpec};

fn main() -> aset::Result<()> {
    let runs: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let scene = generate(&SceneSpec::default())?;
    let config = RunConfig {
        max_iterations: 30,
        sampler: SamplerConfig {
            bands_per_minibatch: 16,
            ..SamplerConfig::default()
        },
        ..RunConfig::default()
    };
    let seeds: Vec<u64> = (0..runs).collect();
    let summaries = repeated_runs(&scene.cube, &scene.samples, &config, Protocol::default(), &seeds)?;
    print!("{}", report_table(&summaries));
    Ok(())
}
