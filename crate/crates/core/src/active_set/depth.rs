use std::collections::BTreeMap;

use crate::error::Result;
use crate::filters::{FeatureDescriptor, FilterKind};
use crate::glasso::ModelState;
use crate::tensor::ImageCube;

/// Number of filtering steps between `desc` and the original bands, with
/// parent depths read from `bank`.
pub fn depth_of(desc: &FeatureDescriptor, bank: &ImageCube) -> Result<u32> {
    let parents = desc
        .inputs()
        .iter()
        .map(|&id| bank.depth(id))
        .collect::<Result<Vec<u32>>>()?;
    let top = parents.into_iter().max().unwrap_or(0);
    Ok(if desc.kind == FilterKind::Band { top } else { top + 1 })
}

/// Depth-dependent regularization weight γ0^h.
///
/// The power is rounded to 15 significant digits, which removes the binary
/// representation noise of decimal bases (1.1² gives 1.21, not
/// 1.2100000000000002).
pub fn depth_gamma(h: u32, gamma0: f64) -> f64 {
    let raw = gamma0.powi(h as i32);
    format!("{raw:.14e}").parse().unwrap_or(raw)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DepthHistogram {
    /// Active-set descriptors per depth.
    pub active: BTreeMap<u32, usize>,
    /// Every band of the input bank per depth.
    pub bank: BTreeMap<u32, usize>,
}

pub fn depth_histogram(state: &ModelState, bank: &ImageCube) -> DepthHistogram {
    let mut hist = DepthHistogram::default();
    for d in &state.descriptors {
        *hist.active.entry(d.depth).or_default() += 1;
    }
    for m in bank.meta() {
        *hist.bank.entry(m.depth).or_default() += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{SeShape, StructuringElement};
    use crate::tensor::{Band, BandOrigin};
    use std::sync::Arc;

    fn bank() -> ImageCube {
        let mut c = ImageCube::new(3, 3);
        for id in 0..6 {
            c.push_band(id, BandOrigin::Spectral, Band::constant(3, 3, id as f32))
                .unwrap();
        }
        c
    }

    #[test]
    fn depth_follows_filter_chain() {
        let mut b = bank();
        let opening = FeatureDescriptor::morphological(
            FilterKind::Opening,
            5,
            StructuringElement::new(SeShape::Disk, 3).unwrap(),
            0,
        )
        .unwrap();
        assert_eq!(depth_of(&opening, &b).unwrap(), 1);
        let k = b
            .push_derived(opening, Arc::new(Band::constant(3, 3, 0.0)))
            .unwrap();
        let texture = FeatureDescriptor::texture(FilterKind::Entropy, k, 5, 1).unwrap();
        assert_eq!(depth_of(&texture, &b).unwrap(), 2);
        let t = b
            .push_derived(texture.clone(), Arc::new(Band::constant(3, 3, 0.0)))
            .unwrap();
        let deeper = FeatureDescriptor::texture(FilterKind::Avg, t, 3, 2).unwrap();
        let d3 = b
            .push_derived(deeper.clone(), Arc::new(Band::constant(3, 3, 0.0)))
            .unwrap();
        assert_eq!(b.depth(d3).unwrap(), 3);
        let ratio = FeatureDescriptor::combination(FilterKind::Ratio, k, 1, d3, 3).unwrap();
        assert_eq!(depth_of(&ratio, &b).unwrap(), 4);
        assert_eq!(depth_of(&FeatureDescriptor::band(2), &b).unwrap(), 0);
    }

    #[test]
    fn unknown_parent() {
        let d = FeatureDescriptor::texture(FilterKind::Avg, 42, 3, 0).unwrap();
        assert!(depth_of(&d, &bank()).is_err());
    }

    #[test]
    fn gamma_values() {
        assert_eq!(depth_gamma(0, 1.1), 1.0);
        assert_eq!(depth_gamma(2, 1.1), 1.21);
        for h in 0..10 {
            assert_eq!(depth_gamma(h, 1.0), 1.0);
        }
        assert!((depth_gamma(7, 1.3) - 1.3f64.powi(7)).abs() < 1e-14);
    }
}
