//! The filter bank: morphological, texture, attribute and band-combination
//! filters, their recipes, and random candidate sampling.

pub mod attribute;
pub mod combine;
pub mod descriptor;
pub mod morphology;
pub mod sampler;
pub mod se;
pub mod texture;

pub use attribute::{attribute_filter, Attribute, MaxTree};
pub use combine::{band_combination, Combination};
pub use descriptor::{Family, FeatureDescriptor, FilterKind};
pub use morphology::{
    close_rec, closing, dilate, erode, open_rec, opening, reconstruct, Reconstruction,
};
pub use sampler::{sample_minibatch, SamplerConfig};
pub use se::{SeShape, StructuringElement};
pub use texture::{texture_filter, TextureStat};

use crate::error::{Error, Result};
use crate::tensor::{Band, ImageCube};

/// Applies one recipe to bands that already exist in `cube`.
pub fn apply(desc: &FeatureDescriptor, a: &Band, b: Option<&Band>) -> Result<Band> {
    use FilterKind::*;
    desc.validate()?;
    let se = desc.se.as_ref();
    Ok(match desc.kind {
        Band => a.clone(),
        Opening => morphology::opening(a, se.unwrap()),
        Closing => morphology::closing(a, se.unwrap()),
        TophatOpen => morphology::tophat_open(a, se.unwrap()),
        TophatClose => morphology::tophat_close(a, se.unwrap()),
        OpenRec => morphology::open_rec(a, se.unwrap()),
        CloseRec => morphology::close_rec(a, se.unwrap()),
        OpenRecTophat => morphology::open_rec_tophat(a, se.unwrap()),
        CloseRecTophat => morphology::close_rec_tophat(a, se.unwrap()),
        Avg | Entropy | Stddev | Range => {
            let stat = match desc.kind {
                Avg => TextureStat::Average,
                Entropy => TextureStat::Entropy,
                Stddev => TextureStat::StdDev,
                _ => TextureStat::Range,
            };
            texture_filter(a, stat, desc.window.unwrap())?
        }
        AttrArea => attribute_filter(a, Attribute::Area, desc.threshold.unwrap()),
        AttrDiag => attribute_filter(a, Attribute::BoxDiagonal, desc.threshold.unwrap()),
        Ratio | NormRatio | Sum | Product => {
            let comb = match desc.kind {
                Ratio => Combination::Ratio,
                NormRatio => Combination::NormRatio,
                Sum => Combination::Sum,
                _ => Combination::Product,
            };
            let b = b.ok_or_else(|| Error::InvalidArgument("missing second input".into()))?;
            band_combination(a, b, comb)?
        }
    })
}

/// Computes the full-raster output of `desc`. Its inputs (including derived
/// bands for hierarchical recipes) must already be present in `cube`.
pub fn materialize(cube: &ImageCube, desc: &FeatureDescriptor) -> Result<Band> {
    let a = cube.band(desc.input_a)?;
    let b = match desc.input_b {
        Some(id) => Some(cube.band(id)?.as_ref()),
        None => None,
    };
    apply(desc, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::BandOrigin;

    fn constant_cube() -> ImageCube {
        let mut c = ImageCube::new(5, 5);
        c.push_band(0, BandOrigin::Spectral, Band::constant(5, 5, 2.0))
            .unwrap();
        c.push_band(1, BandOrigin::Spectral, Band::from_fn(5, 5, |r, _| r as f32 + 1.0))
            .unwrap();
        c
    }

    #[test]
    fn opening_descriptor_on_constant_band() {
        let d = FeatureDescriptor::morphological(
            FilterKind::Opening,
            0,
            StructuringElement::square(3).unwrap(),
            0,
        )
        .unwrap();
        assert_eq!(materialize(&constant_cube(), &d).unwrap(), Band::constant(5, 5, 2.0));
    }

    #[test]
    fn norm_ratio_with_itself_is_zero() {
        let d = FeatureDescriptor::combination(FilterKind::NormRatio, 1, 0, 1, 0).unwrap();
        let out = materialize(&constant_cube(), &d).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn attribute_descriptor_removes_small_square() {
        let mut c = ImageCube::new(12, 12);
        let b = Band::from_fn(12, 12, |r, col| {
            if r < 2 && col < 2 {
                1.0
            } else if (5..10).contains(&r) && (5..10).contains(&col) {
                1.0
            } else {
                0.0
            }
        });
        c.push_band(3, BandOrigin::Spectral, b).unwrap();
        let d = FeatureDescriptor::attribute(FilterKind::AttrArea, 3, 10, 0).unwrap();
        let out = materialize(&c, &d).unwrap();
        assert_eq!(out.get(0, 0), 0.0);
        assert_eq!(out.get(6, 6), 1.0);
    }

    #[test]
    fn missing_input_band() {
        let d = FeatureDescriptor::texture(FilterKind::Avg, 9, 3, 0).unwrap();
        assert!(matches!(
            materialize(&constant_cube(), &d),
            Err(Error::UnknownBand(9))
        ));
    }
}
