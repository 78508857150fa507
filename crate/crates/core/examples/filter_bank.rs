//! Apply one filter of every kind to a band and print summary statistics.

use std::sync::Arc;

use aset::filters::{materialize, Family, FeatureDescriptor, FilterKind, SeShape, StructuringElement};
use aset::synth::{generate, SceneSpec};

fn main() -> aset::Result<()> {
    let scene = generate(&SceneSpec::default())?;
    let cube = &scene.cube;
    let se = StructuringElement::new(SeShape::Disk, 5)?;

    println!("{:<52} {:>9} {:>9}", "descriptor", "min", "max");
    for kind in FilterKind::ALL {
        let desc = match kind.family() {
            Family::Identity => FeatureDescriptor::band(3),
            Family::Morphological => FeatureDescriptor::morphological(kind, 3, se, 0)?,
            Family::Texture => FeatureDescriptor::texture(kind, 3, 5, 0)?,
            Family::Attribute => FeatureDescriptor::attribute(kind, 3, 25, 0)?,
            Family::Combination => FeatureDescriptor::combination(kind, 3, 0, 9, 0)?,
        };
        let band = if kind == FilterKind::Band {
            Arc::clone(cube.band(3)?)
        } else {
            Arc::new(materialize(cube, &desc)?)
        };
        let (lo, hi) = band.min_max();
        println!("{:<52} {lo:>9.4} {hi:>9.4}", desc.to_string());
    }

    // descriptors are plain text and parse back to the same recipe
    let line = FeatureDescriptor::morphological(FilterKind::OpenRec, 2, StructuringElement::line(9, 0.5)?, 0)?;
    let text = line.to_string();
    assert_eq!(text.parse::<FeatureDescriptor>()?, line);
    println!("\nround-trip: {text}");
    Ok(())
}
