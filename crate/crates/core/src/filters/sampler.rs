//! Random generation of candidate filter recipes.

use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filters::descriptor::{Family, FeatureDescriptor, FilterKind};
use crate::filters::se::{SeShape, StructuringElement};
use crate::tensor::{BandOrigin, ImageCube};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Input bands drawn per minibatch.
    pub bands_per_minibatch: usize,
    /// Candidate recipes generated per drawn band.
    pub filters_per_band: usize,
    /// Odd sizes shared by structuring elements and texture windows.
    pub sizes: Vec<u32>,
    pub shapes: Vec<SeShape>,
    /// Inclusive bounds of the area threshold, in pixels.
    pub area_range: (u32, u32),
    /// Inclusive bounds of the bounding-box diagonal threshold, in pixels.
    pub diagonal_range: (u32, u32),
    pub allowed_kinds: Vec<FilterKind>,
    pub include_auxiliary_always: bool,
    /// Whether derived (promoted) bands may be drawn as inputs.
    pub allow_derived_inputs: bool,
    /// Attempts per slot before giving up on it.
    pub max_retries: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            bands_per_minibatch: 20,
            filters_per_band: 3,
            sizes: vec![3, 5, 7, 9, 11, 13, 15],
            shapes: SeShape::ALL.to_vec(),
            area_range: (2, 200),
            diagonal_range: (2, 20),
            allowed_kinds: FilterKind::filters(),
            include_auxiliary_always: true,
            allow_derived_inputs: true,
            max_retries: 50,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Infeasible(m.to_string()));
        if self.bands_per_minibatch == 0 || self.filters_per_band == 0 {
            return bad("minibatch must draw at least one band and one filter");
        }
        if self.allowed_kinds.is_empty() {
            return bad("no filter kinds allowed");
        }
        if self.allowed_kinds.contains(&FilterKind::Band) {
            return bad("the identity kind cannot be sampled");
        }
        let needs_sizes = self
            .allowed_kinds
            .iter()
            .any(|k| matches!(k.family(), Family::Morphological | Family::Texture));
        if needs_sizes && self.sizes.is_empty() {
            return bad("empty size range");
        }
        if self.sizes.iter().any(|&s| s < 3 || s % 2 == 0) {
            return bad("sizes must be odd and >= 3");
        }
        let morph = self
            .allowed_kinds
            .iter()
            .any(|k| k.family() == Family::Morphological);
        if morph && self.shapes.is_empty() {
            return bad("no structuring element shapes");
        }
        for (lo, hi) in [self.area_range, self.diagonal_range] {
            if lo == 0 || lo > hi {
                return bad("threshold range must be non-empty and positive");
            }
        }
        Ok(())
    }
}

/// Bands the sampler may read from `cube`.
pub fn input_pool(cube: &ImageCube, config: &SamplerConfig) -> Vec<u32> {
    if config.allow_derived_inputs {
        cube.ids()
    } else {
        cube.original_ids()
    }
}

fn pick<'a, T, R: Rng + ?Sized>(rng: &mut R, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn random_descriptor<R: Rng + ?Sized>(
    rng: &mut R,
    cube: &ImageCube,
    config: &SamplerConfig,
    band: u32,
    drawn: &[u32],
) -> Result<Option<FeatureDescriptor>> {
    let kind = *pick(rng, &config.allowed_kinds);
    let depth = cube.depth(band)?;
    let desc = match kind.family() {
        Family::Morphological => {
            let shape = *pick(rng, &config.shapes);
            let size = *pick(rng, &config.sizes);
            let se = if shape == SeShape::Line {
                StructuringElement::line(size, rng.random_range(-FRAC_PI_2..=FRAC_PI_2))?
            } else {
                StructuringElement::new(shape, size)?
            };
            FeatureDescriptor::morphological(kind, band, se, depth)?
        }
        Family::Texture => {
            FeatureDescriptor::texture(kind, band, *pick(rng, &config.sizes), depth)?
        }
        Family::Attribute => {
            let (lo, hi) = if kind == FilterKind::AttrArea {
                config.area_range
            } else {
                config.diagonal_range
            };
            FeatureDescriptor::attribute(kind, band, rng.random_range(lo..=hi), depth)?
        }
        Family::Combination => {
            if drawn.len() < 2 {
                return Ok(None);
            }
            let mut other = *pick(rng, drawn);
            while other == band {
                other = *pick(rng, drawn);
            }
            FeatureDescriptor::combination(kind, band, depth, other, cube.depth(other)?)?
        }
        Family::Identity => unreachable!("validated away"),
    };
    Ok(Some(desc))
}

/// Draws a minibatch of unique candidate recipes, none of which is in
/// `exclude`.
///
/// Auxiliary bands are always part of the draw when configured; the rest
/// are drawn uniformly without replacement from the input pool. Every slot
/// that cannot produce a fresh recipe within `max_retries` attempts is
/// dropped; an empty minibatch is an infeasibility error.
pub fn sample_minibatch<R: Rng + ?Sized>(
    rng: &mut R,
    cube: &ImageCube,
    config: &SamplerConfig,
    exclude: &HashSet<FeatureDescriptor>,
) -> Result<Vec<FeatureDescriptor>> {
    config.validate()?;
    let pool = input_pool(cube, config);
    if config.bands_per_minibatch > pool.len() {
        return Err(Error::Infeasible(format!(
            "{} bands per minibatch but only {} input bands",
            config.bands_per_minibatch,
            pool.len()
        )));
    }
    let (aux, rest): (Vec<u32>, Vec<u32>) = pool.iter().partition(|&&id| {
        config.include_auxiliary_always
            && cube
                .band_meta(id)
                .map(|m| m.origin == BandOrigin::Auxiliary)
                .unwrap_or(false)
    });
    let mut drawn: Vec<u32> = aux
        .iter()
        .copied()
        .take(config.bands_per_minibatch)
        .collect();
    let remaining = config.bands_per_minibatch - drawn.len();
    drawn.extend(
        index::sample(rng, rest.len(), remaining)
            .into_iter()
            .map(|i| rest[i]),
    );

    let mut seen: HashSet<FeatureDescriptor> = HashSet::new();
    let mut out = Vec::new();
    for &band in &drawn {
        for _ in 0..config.filters_per_band {
            for _ in 0..config.max_retries.max(1) {
                if let Some(d) = random_descriptor(rng, cube, config, band, &drawn)? {
                    if !exclude.contains(&d) && !seen.contains(&d) {
                        seen.insert(d.clone());
                        out.push(d);
                        break;
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Infeasible(
            "every generatable candidate is excluded".into(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Band;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube(bands: usize) -> ImageCube {
        let mut c = ImageCube::new(4, 4);
        for b in 0..bands {
            c.push_band(
                b as u32,
                BandOrigin::Spectral,
                Band::from_fn(4, 4, |r, col| (r + col + b) as f32),
            )
            .unwrap();
        }
        c
    }

    fn degenerate() -> SamplerConfig {
        SamplerConfig {
            bands_per_minibatch: 1,
            sizes: vec![3],
            allowed_kinds: vec![FilterKind::Avg],
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn degenerate_sampler_yields_single_descriptor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = sample_minibatch(&mut rng, &cube(1), &degenerate(), &HashSet::new()).unwrap();
        assert_eq!(out, vec![FeatureDescriptor::texture(FilterKind::Avg, 0, 3, 0).unwrap()]);
    }

    #[test]
    fn fully_excluded_is_infeasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let exclude: HashSet<_> = [FeatureDescriptor::texture(FilterKind::Avg, 0, 3, 0).unwrap()]
            .into_iter()
            .collect();
        assert!(matches!(
            sample_minibatch(&mut rng, &cube(1), &degenerate(), &exclude),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn too_many_bands_is_infeasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = SamplerConfig {
            bands_per_minibatch: 5,
            ..SamplerConfig::default()
        };
        assert!(sample_minibatch(&mut rng, &cube(3), &cfg, &HashSet::new()).is_err());
    }

    #[test]
    fn seeded_sequences_repeat() {
        let cfg = SamplerConfig {
            bands_per_minibatch: 4,
            ..SamplerConfig::default()
        };
        let c = cube(6);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..3)
                .map(|_| sample_minibatch(&mut rng, &c, &cfg, &HashSet::new()).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn outputs_unique_depth_one_and_not_excluded() {
        let cfg = SamplerConfig {
            bands_per_minibatch: 3,
            filters_per_band: 6,
            sizes: vec![3, 5],
            area_range: (2, 4),
            diagonal_range: (2, 3),
            ..SamplerConfig::default()
        };
        let c = cube(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let first = sample_minibatch(&mut rng, &c, &cfg, &HashSet::new()).unwrap();
        let exclude: HashSet<_> = first.iter().cloned().collect();
        for _ in 0..20 {
            let out = sample_minibatch(&mut rng, &c, &cfg, &exclude).unwrap();
            let uniq: HashSet<_> = out.iter().collect();
            assert_eq!(uniq.len(), out.len());
            for d in &out {
                assert!(!exclude.contains(d));
                assert_eq!(d.depth, 1);
                d.validate().unwrap();
                if let Some(se) = d.se {
                    assert!((-FRAC_PI_2..=FRAC_PI_2).contains(&se.angle()));
                }
            }
        }
    }

    #[test]
    fn auxiliary_always_drawn() {
        let mut c = cube(8);
        c.push_band(100, BandOrigin::Auxiliary, Band::constant(4, 4, 1.0))
            .unwrap();
        let cfg = SamplerConfig {
            bands_per_minibatch: 2,
            filters_per_band: 2,
            allowed_kinds: vec![FilterKind::Avg, FilterKind::Range],
            ..SamplerConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let out = sample_minibatch(&mut rng, &c, &cfg, &HashSet::new()).unwrap();
            assert!(out.iter().any(|d| d.input_a == 100));
        }
    }
}
