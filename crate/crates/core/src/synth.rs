//! Labeled synthetic scenes where some classes differ only in spatial
//! structure.
//!
//! The grid is split into Voronoi regions, each assigned to a class. Every
//! class has a smooth mean spectrum; pixels add i.i.d. Gaussian noise.
//! The two classes of a confuser pair share their mean spectrum exactly and
//! carry the same coverage of bright objects, but one uses small speckles
//! and the other larger blobs. Per-pixel values therefore follow nearly
//! the same distribution in both, and only neighborhood filters can tell
//! them apart.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor::{Band, BandOrigin, ImageCube, LabeledSamples};

/// Spatial structure injected into confuser pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Texture {
    /// First class: `small`×`small` speckles; second: `large`×`large` blobs.
    Objects { small: usize, large: usize },
    /// As `Objects`, with isolated impulses of `salt_amplitude` covering
    /// `salt_density` of both classes. The impulses dominate raw local
    /// statistics, so the object size is only visible after removing them.
    SaltAndObjects {
        small: usize,
        large: usize,
        salt_density: f64,
        salt_amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pub bands: usize,
    /// Average region size in pixels.
    pub region_scale: usize,
    pub within_class_noise: f64,
    pub confuser_pairs: Vec<(usize, usize)>,
    pub texture: Texture,
    /// Fraction of a confuser region covered by bright objects.
    pub coverage: f64,
    /// Added to every band inside an object.
    pub object_amplitude: f64,
    /// Adds an auxiliary band that is constant per region.
    pub height_band: bool,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            height: 96,
            width: 96,
            classes: 5,
            bands: 16,
            region_scale: 450,
            within_class_noise: 0.04,
            confuser_pairs: vec![(3, 4)],
            texture: Texture::Objects { small: 1, large: 5 },
            coverage: 0.3,
            object_amplitude: 0.25,
            height_band: false,
            seed: 0,
        }
    }
}

impl SceneSpec {
    /// Variant whose confuser pair needs a filter applied to a filter output.
    pub fn hierarchical() -> Self {
        SceneSpec {
            texture: Texture::SaltAndObjects {
                small: 2,
                large: 5,
                salt_density: 0.15,
                salt_amplitude: 0.6,
            },
            ..SceneSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Infeasible(m));
        if self.classes < 2 || self.bands < 4 {
            return bad("need at least 2 classes and 4 bands".into());
        }
        if self.height < 8 || self.width < 8 {
            return bad("scene must be at least 8x8".into());
        }
        if self.region_scale == 0 || self.regions() < self.classes {
            return bad(format!(
                "{} regions cannot host {} classes",
                self.regions(),
                self.classes
            ));
        }
        if !(self.within_class_noise >= 0.0) || !(0.0..1.0).contains(&self.coverage) {
            return bad("noise must be non-negative and coverage in [0, 1)".into());
        }
        let mut used = vec![false; self.classes];
        for &(a, b) in &self.confuser_pairs {
            if a == b || a >= self.classes || b >= self.classes || used[a] || used[b] {
                return bad(format!("invalid confuser pair ({a}, {b})"));
            }
            used[a] = true;
            used[b] = true;
        }
        let (small, large) = match self.texture {
            Texture::Objects { small, large } => (small, large),
            Texture::SaltAndObjects { small, large, salt_density, .. } => {
                if !(0.0..1.0).contains(&salt_density) {
                    return bad("salt density must be in [0, 1)".into());
                }
                (small, large)
            }
        };
        if small == 0 || small >= large {
            return bad("object sizes must satisfy 0 < small < large".into());
        }
        Ok(())
    }

    fn regions(&self) -> usize {
        (self.height * self.width) / self.region_scale.max(1)
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub cube: ImageCube,
    /// Every pixel, row-major, with its class.
    pub samples: LabeledSamples,
    pub class_map: Vec<usize>,
    pub mean_spectra: Vec<Vec<f64>>,
}

impl Scene {
    pub fn class_sizes(&self) -> Vec<usize> {
        self.samples.class_counts()
    }
}

/// Smooth curve over band index: offset plus a few Gaussian bumps.
fn smooth_curve(rng: &mut ChaCha8Rng, bands: usize) -> Vec<f64> {
    let base = rng.random_range(0.3..0.6);
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.0..bands as f64),
                rng.random_range(1.5..bands as f64 / 2.0),
                rng.random_range(-0.25..0.25),
            )
        })
        .collect();
    (0..bands)
        .map(|k| {
            base + bumps
                .iter()
                .map(|&(mu, s, a)| a * (-(k as f64 - mu).powi(2) / (2.0 * s * s)).exp())
                .sum::<f64>()
        })
        .collect()
}

fn rms_distance(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Stamps k×k objects, clipped to `mask`, covering about `coverage` of it.
///
/// Anchors range over every position whose k×k footprint touches the grid,
/// so each masked pixel has exactly k² candidate anchors regardless of how
/// close it lies to the mask border.
fn stamp(rng: &mut ChaCha8Rng, mask: &[bool], h: usize, w: usize, k: usize, coverage: f64) -> Vec<bool> {
    let q = 1.0 - (1.0 - coverage).powf(1.0 / (k * k) as f64);
    let mut out = vec![false; h * w];
    let off = k as isize - 1;
    for r in -off..h as isize {
        for c in -off..w as isize {
            if !rng.random_bool(q) {
                continue;
            }
            for rr in r.max(0)..(r + k as isize).min(h as isize) {
                for cc in c.max(0)..(c + k as isize).min(w as isize) {
                    let i = rr as usize * w + cc as usize;
                    out[i] |= mask[i];
                }
            }
        }
    }
    out
}

pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (h, w, nb, nc) = (spec.height, spec.width, spec.bands, spec.classes);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Voronoi partition
    let n_regions = spec.regions();
    let seeds: Vec<(f64, f64)> = (0..n_regions)
        .map(|_| (rng.random_range(0.0..h as f64), rng.random_range(0.0..w as f64)))
        .collect();
    let mut region = vec![0usize; h * w];
    let mut region_size = vec![0usize; n_regions];
    for r in 0..h {
        for c in 0..w {
            let (pr, pc) = (r as f64 + 0.5, c as f64 + 0.5);
            let k = (0..n_regions)
                .min_by(|&a, &b| {
                    let da = (seeds[a].0 - pr).powi(2) + (seeds[a].1 - pc).powi(2);
                    let db = (seeds[b].0 - pr).powi(2) + (seeds[b].1 - pc).powi(2);
                    da.total_cmp(&db)
                })
                .unwrap();
            region[r * w + c] = k;
            region_size[k] += 1;
        }
    }

    // Largest region first to the currently smallest class; shuffled first
    // so equal-size ties do not always favor low region ids.
    let mut order: Vec<usize> = (0..n_regions).filter(|&k| region_size[k] > 0).collect();
    order.shuffle(&mut rng);
    order.sort_by(|&a, &b| region_size[b].cmp(&region_size[a]));
    let mut class_of_region = vec![0usize; n_regions];
    let mut class_size = vec![0usize; nc];
    for k in order {
        let c = (0..nc).min_by_key(|&c| (class_size[c], c)).unwrap();
        class_of_region[k] = c;
        class_size[c] += region_size[k];
    }
    let (lo, hi) = (
        *class_size.iter().min().unwrap(),
        *class_size.iter().max().unwrap(),
    );
    if lo == 0 || hi > 3 * lo {
        return Err(Error::Infeasible(format!(
            "class sizes {class_size:?} are not within 3x of each other"
        )));
    }
    let class_map: Vec<usize> = region.iter().map(|&k| class_of_region[k]).collect();

    // Mean spectra, distinct between non-confused classes.
    let mut partner: Vec<Option<usize>> = vec![None; nc];
    for &(a, b) in &spec.confuser_pairs {
        partner[b] = Some(a);
    }
    let mut mean_spectra: Vec<Vec<f64>> = Vec::with_capacity(nc);
    for c in 0..nc {
        if let Some(p) = partner[c].filter(|&p| p < c) {
            mean_spectra.push(mean_spectra[p].clone());
            continue;
        }
        let mut best = smooth_curve(&mut rng, nb);
        for _ in 0..200 {
            let sep = mean_spectra
                .iter()
                .map(|m| rms_distance(m, &best))
                .fold(f64::INFINITY, f64::min);
            if sep >= 0.08 {
                break;
            }
            best = smooth_curve(&mut rng, nb);
        }
        mean_spectra.push(best);
    }
    // A partner listed with the lower id second gets patched here.
    for &(a, b) in &spec.confuser_pairs {
        let (lo_c, hi_c) = (a.min(b), a.max(b));
        mean_spectra[hi_c] = mean_spectra[lo_c].clone();
    }

    // Bright-object masks for confuser classes.
    let mut brightness = vec![0f64; h * w];
    let (small, large) = match spec.texture {
        Texture::Objects { small, large } | Texture::SaltAndObjects { small, large, .. } => (small, large),
    };
    for &(a, b) in &spec.confuser_pairs {
        for (class, size) in [(a, small), (b, large)] {
            let mask: Vec<bool> = class_map.iter().map(|&c| c == class).collect();
            for (i, on) in stamp(&mut rng, &mask, h, w, size, spec.coverage).into_iter().enumerate() {
                if on {
                    brightness[i] += spec.object_amplitude;
                }
            }
            if let Texture::SaltAndObjects { salt_density, salt_amplitude, .. } = spec.texture {
                for i in 0..h * w {
                    if mask[i] && rng.random_bool(salt_density) {
                        brightness[i] += salt_amplitude;
                    }
                }
            }
        }
    }

    let noise = Normal::new(0.0, spec.within_class_noise.max(0.0))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut cube = ImageCube::new(h, w);
    for k in 0..nb {
        let values: Vec<f32> = (0..h * w)
            .map(|i| {
                let n = if spec.within_class_noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                (mean_spectra[class_map[i]][k] + brightness[i] + n) as f32
            })
            .collect();
        cube.push_band(k as u32, BandOrigin::Spectral, Band::new(h, w, values)?)?;
    }
    if spec.height_band {
        let heights: Vec<f64> = (0..n_regions).map(|_| rng.random_range(0.0..30.0)).collect();
        let values = region.iter().map(|&k| heights[k] as f32).collect();
        cube.push_band(nb as u32, BandOrigin::Auxiliary, Band::new(h, w, values)?)?;
    }

    let pixels: Vec<(usize, usize)> = (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).collect();
    let samples = LabeledSamples::new(pixels, class_map.clone(), nc)?;
    Ok(Scene {
        cube,
        samples,
        class_map,
        mean_spectra,
    })
}
