//! Train, save the model as text, reload it and classify every pixel.

use aset::active_set::{run, Mode, RunConfig};
use aset::eval::{confusion, kappa, split, Protocol};
use aset::filters::SamplerConfig;
use aset::io::write_class_map;
use aset::model::Classifier;
use aset::synth::{generate, SceneSpec};

fn main() -> aset::Result<()> {
    let scene = generate(&SceneSpec::hierarchical())?;
    let (train, _) = split(&scene.samples, Protocol::default(), 0)?;
    let config = RunConfig {
        mode: Mode::Hierarchical,
        max_iterations: 30,
        sampler: SamplerConfig {
            bands_per_minibatch: 16,
            ..SamplerConfig::default()
        },
        ..RunConfig::default()
    };
    let model = run(&scene.cube, &train, &config, None)?.classifier()?;

    let dir = std::env::temp_dir().join("aset-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.txt");
    model.save(&path)?;
    let loaded = Classifier::load(&path)?;
    println!(
        "saved {} features ({} derived bands) to {}",
        loaded.state.features(),
        loaded.derived.len(),
        path.display()
    );

    // derived bands are rebuilt from their recipes on the raw cube
    let map = loaded.classify(&scene.cube.originals())?;
    assert_eq!(map, model.classify(&scene.cube)?);
    let k = kappa(&confusion(&scene.class_map, &map.labels, scene.mean_spectra.len())?)?;
    println!("full-scene kappa: {k:.4}");
    write_class_map(&map, dir.join("classes"))?;
    println!("class map written to {}", dir.join("classes").display());
    Ok(())
}
