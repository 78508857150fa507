//! Hierarchical mode: accepted features become new input bands, so filters
//! can be stacked. Deeper features pay a larger penalty (gamma0^depth).

use aset::active_set::{depth_histogram, run, Mode, RunConfig};
use aset::eval::{split, Protocol};
use aset::filters::SamplerConfig;
use aset::synth::{generate, SceneSpec};

fn main() -> aset::Result<()> {
    let scene = generate(&SceneSpec::hierarchical())?;
    let (train, test) = split(&scene.samples, Protocol::default(), 0)?;
    let base = RunConfig {
        max_iterations: 60,
        sampler: SamplerConfig {
            bands_per_minibatch: 16,
            ..SamplerConfig::default()
        },
        ..RunConfig::default()
    };
    for mode in [Mode::Shallow, Mode::Hierarchical] {
        let out = run(&scene.cube, &train, &RunConfig { mode, ..base.clone() }, Some(&test))?;
        let hist = depth_histogram(&out.state, &out.bank);
        println!(
            "{mode:?}: kappa {:.4}, {} features, depths {:?}, bank {} bands",
            out.final_kappa().unwrap_or(f64::NAN),
            out.state.features(),
            hist.active,
            out.bank.band_count()
        );
        if mode == Mode::Hierarchical {
            let mut deep: Vec<_> = out.state.descriptors.iter().filter(|d| d.depth >= 2).collect();
            deep.sort_by_key(|d| std::cmp::Reverse(d.depth));
            for d in deep.iter().take(5) {
                let chain: Vec<String> = d
                    .inputs()
                    .iter()
                    .filter_map(|id| out.bank.recipe(*id).map(|r| format!("band {id} = {r}")))
                    .collect();
                println!("  depth {}: {d}\n    reads {}", d.depth, chain.join("; "));
            }
        }
    }
    Ok(())
}
