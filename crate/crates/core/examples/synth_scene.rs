//! Generate a synthetic scene and write it in the on-disk cube/label format.
//!
//!     cargo run --example synth_scene -- [out_dir]

use aset::io::{read_cube, write_cube, write_labels};
use aset::synth::{generate, SceneSpec};

fn main() -> aset::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "scene".into());
    let spec = SceneSpec {
        height_band: true,
        ..SceneSpec::default()
    };
    let scene = generate(&spec)?;
    println!("class sizes: {:?}", scene.class_sizes());
    for (a, b) in &spec.confuser_pairs {
        let same = scene.mean_spectra[*a] == scene.mean_spectra[*b];
        println!("classes {a} and {b} share a mean spectrum: {same}");
    }

    std::fs::create_dir_all(&out)?;
    let sidecar = std::path::Path::new(&out).join("cube.json");
    write_cube(&scene.cube, &sidecar)?;
    write_labels(&scene.samples, std::path::Path::new(&out).join("labels.txt"))?;
    let back = read_cube(&sidecar)?;
    println!(
        "wrote {}x{} cube with {} bands to {out}",
        back.height(),
        back.width(),
        back.band_count()
    );
    Ok(())
}
