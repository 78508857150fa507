//! Raster and matrix containers shared by the filter bank, the solver and
//! the active-set loop.
//!
//! Bands are single precision row-major grids. Everything that reaches the
//! solver (feature columns, normalization statistics) is double precision.

use std::collections::HashSet;
use std::sync::Arc;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FeatureDescriptor;

/// Columns whose centered norm falls below this are treated as constant.
pub const ZERO_VARIANCE_NORM: f64 = 1e-12;

/// A single raster plane stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl Band {
    pub fn new(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::Dimension(format!(
                "band of {height}x{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at pixel {i}"
            )));
        }
        Ok(Band {
            height,
            width,
            values,
        })
    }

    pub fn constant(height: usize, width: usize, value: f32) -> Self {
        Band {
            height,
            width,
            values: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Band {
            height,
            width,
            values,
        }
    }

    /// Builds a band from values produced by a filter. Non-finite results are
    /// mapped to zero so a derived band always satisfies the finiteness invariant.
    pub(crate) fn from_filter(height: usize, width: usize, mut values: Vec<f32>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        for v in values.iter_mut() {
            if !v.is_finite() {
                *v = 0.0;
            }
        }
        Band {
            height,
            width,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Band {
        Band::from_filter(
            self.height,
            self.width,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.values
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandOrigin {
    Spectral,
    Auxiliary,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMeta {
    pub id: u32,
    pub origin: BandOrigin,
    pub depth: u32,
}

/// An H×W stack of bands with stable integer ids.
///
/// Original inputs (spectral and auxiliary) have depth 0. Derived bands are
/// filter outputs that were promoted to inputs, and carry the recipe that
/// produced them.
#[derive(Debug, Clone)]
pub struct ImageCube {
    height: usize,
    width: usize,
    bands: Vec<Arc<Band>>,
    meta: Vec<BandMeta>,
    recipes: Vec<Option<FeatureDescriptor>>,
}

impl ImageCube {
    pub fn new(height: usize, width: usize) -> Self {
        ImageCube {
            height,
            width,
            bands: Vec::new(),
            meta: Vec::new(),
            recipes: Vec::new(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn meta(&self) -> &[BandMeta] {
        &self.meta
    }

    pub fn next_id(&self) -> u32 {
        self.meta.iter().map(|m| m.id + 1).max().unwrap_or(0)
    }

    fn check_shape(&self, band: &Band) -> Result<()> {
        if band.shape() != (self.height, self.width) {
            return Err(Error::Dimension(format!(
                "band is {}x{}, cube is {}x{}",
                band.height(),
                band.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }

    /// Adds an original input band (spectral or auxiliary, depth 0).
    pub fn push_band(&mut self, id: u32, origin: BandOrigin, band: Band) -> Result<()> {
        if origin == BandOrigin::Derived {
            return Err(Error::InvalidArgument(
                "derived bands must be added with push_derived".into(),
            ));
        }
        self.check_shape(&band)?;
        if self.position(id).is_some() {
            return Err(Error::InvalidArgument(format!("band id {id} already used")));
        }
        self.bands.push(Arc::new(band));
        self.meta.push(BandMeta {
            id,
            origin,
            depth: 0,
        });
        self.recipes.push(None);
        Ok(())
    }

    /// Promotes a filter output to an input band and returns its fresh id.
    pub fn push_derived(&mut self, recipe: FeatureDescriptor, band: Arc<Band>) -> Result<u32> {
        self.check_shape(&band)?;
        let id = self.next_id();
        self.bands.push(band);
        self.meta.push(BandMeta {
            id,
            origin: BandOrigin::Derived,
            depth: recipe.depth,
        });
        self.recipes.push(Some(recipe));
        Ok(id)
    }

    /// Inserts a derived band under a known id (used when replaying a
    /// stored hierarchy).
    pub fn insert_derived(
        &mut self,
        id: u32,
        recipe: FeatureDescriptor,
        band: Arc<Band>,
    ) -> Result<()> {
        self.check_shape(&band)?;
        if self.position(id).is_some() {
            return Err(Error::InvalidArgument(format!("band id {id} already used")));
        }
        self.bands.push(band);
        self.meta.push(BandMeta {
            id,
            origin: BandOrigin::Derived,
            depth: recipe.depth,
        });
        self.recipes.push(Some(recipe));
        Ok(())
    }

    fn position(&self, id: u32) -> Option<usize> {
        self.meta.iter().position(|m| m.id == id)
    }

    pub fn band(&self, id: u32) -> Result<&Arc<Band>> {
        self.position(id)
            .map(|i| &self.bands[i])
            .ok_or(Error::UnknownBand(id))
    }

    pub fn band_meta(&self, id: u32) -> Result<&BandMeta> {
        self.position(id)
            .map(|i| &self.meta[i])
            .ok_or(Error::UnknownBand(id))
    }

    pub fn recipe(&self, id: u32) -> Option<&FeatureDescriptor> {
        self.position(id).and_then(|i| self.recipes[i].as_ref())
    }

    pub fn depth(&self, id: u32) -> Result<u32> {
        self.band_meta(id).map(|m| m.depth)
    }

    /// Ids of the original (depth 0) bands, in insertion order.
    pub fn original_ids(&self) -> Vec<u32> {
        self.meta
            .iter()
            .filter(|m| m.origin != BandOrigin::Derived)
            .map(|m| m.id)
            .collect()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.meta.iter().map(|m| m.id).collect()
    }

    /// Original-band view of this cube (derived bands dropped).
    pub fn originals(&self) -> ImageCube {
        let mut out = ImageCube::new(self.height, self.width);
        for ((b, m), r) in self.bands.iter().zip(&self.meta).zip(&self.recipes) {
            if m.origin != BandOrigin::Derived {
                out.bands.push(Arc::clone(b));
                out.meta.push(m.clone());
                out.recipes.push(r.clone());
            }
        }
        out
    }
}

/// Labeled pixel locations. Labels are stored zero-based (`0..classes`);
/// the on-disk label table uses one-based class ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSamples {
    pixels: Vec<(usize, usize)>,
    labels: Vec<usize>,
    classes: usize,
}

impl LabeledSamples {
    pub fn new(pixels: Vec<(usize, usize)>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if pixels.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} pixels but {} labels",
                pixels.len(),
                labels.len()
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidLabel { label, classes });
        }
        Ok(LabeledSamples {
            pixels,
            labels,
            classes,
        })
    }

    pub fn empty(classes: usize) -> Self {
        LabeledSamples {
            pixels: Vec::new(),
            labels: Vec::new(),
            classes,
        }
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Fails with the first class that has no sample.
    pub fn require_all_classes(&self) -> Result<()> {
        match self.class_counts().iter().position(|&n| n == 0) {
            Some(c) => Err(Error::MissingClass(c)),
            None => Ok(()),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledSamples {
        LabeledSamples {
            pixels: indices.iter().map(|&i| self.pixels[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    pub fn check_bounds(&self, height: usize, width: usize) -> Result<()> {
        for &(row, col) in &self.pixels {
            if row >= height || col >= width {
                return Err(Error::OutOfBounds {
                    row,
                    col,
                    height,
                    width,
                });
            }
        }
        Ok(())
    }
}

/// Values of `band` at every labeled pixel, in sample order.
pub fn band_column(band: &Band, samples: &LabeledSamples) -> Result<Vec<f64>> {
    samples.check_bounds(band.height(), band.width())?;
    Ok(samples
        .pixels()
        .iter()
        .map(|&(r, c)| f64::from(band.get(r, c)))
        .collect())
}

pub fn extract_column(cube: &ImageCube, band_id: u32, samples: &LabeledSamples) -> Result<Vec<f64>> {
    band_column(cube.band(band_id)?, samples)
}

/// A mean-centered, unit-norm column together with the statistics that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedColumn {
    pub values: Vec<f64>,
    pub mean: f64,
    pub norm: f64,
}

#[inline]
pub fn apply_normalization(raw: f64, mean: f64, norm: f64) -> f64 {
    (raw - mean) / norm
}

pub fn normalize_column(raw: &[f64]) -> Result<NormalizedColumn> {
    if raw.len() < 2 {
        return Err(Error::InvalidArgument(
            "normalization needs at least two samples".into(),
        ));
    }
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let norm = raw.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>().sqrt();
    if !(norm >= ZERO_VARIANCE_NORM) {
        return Err(Error::ZeroVariance);
    }
    Ok(NormalizedColumn {
        values: raw.iter().map(|&x| apply_normalization(x, mean, norm)).collect(),
        mean,
        norm,
    })
}

/// The l×d design matrix of normalized feature columns.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    values: Array2<f64>,
    descriptors: Vec<FeatureDescriptor>,
    norms: Vec<f64>,
    means: Vec<f64>,
}

impl FeatureMatrix {
    pub fn empty(rows: usize) -> Self {
        FeatureMatrix {
            values: Array2::zeros((rows, 0)),
            descriptors: Vec::new(),
            norms: Vec::new(),
            means: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn contains(&self, desc: &FeatureDescriptor) -> bool {
        self.descriptors.contains(desc)
    }

    pub fn append_column(&mut self, col: &NormalizedColumn, desc: FeatureDescriptor) -> Result<()> {
        if self.contains(&desc) {
            return Err(Error::DuplicateDescriptor(desc));
        }
        if col.values.len() != self.rows() {
            return Err(Error::Dimension(format!(
                "column has {} rows, matrix has {}",
                col.values.len(),
                self.rows()
            )));
        }
        self.values
            .push_column(ArrayView1::from(&col.values))
            .map_err(|e| Error::Dimension(e.to_string()))?;
        self.descriptors.push(desc);
        self.norms.push(col.norm);
        self.means.push(col.mean);
        Ok(())
    }

    /// Returns a copy with one more column; the receiver is left untouched.
    pub fn with_column(&self, col: &NormalizedColumn, desc: FeatureDescriptor) -> Result<Self> {
        let mut out = self.clone();
        out.append_column(col, desc)?;
        Ok(out)
    }

    /// Keeps the columns whose flag is true, preserving order.
    pub fn retain_columns(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.cols());
        let idx: Vec<usize> = (0..keep.len()).filter(|&j| keep[j]).collect();
        self.values = self.values.select(Axis(1), &idx);
        self.descriptors = idx.iter().map(|&j| self.descriptors[j].clone()).collect();
        self.norms = idx.iter().map(|&j| self.norms[j]).collect();
        self.means = idx.iter().map(|&j| self.means[j]).collect();
    }

    /// Largest deviation of a column from (zero mean, unit norm).
    pub fn normalization_error(&self) -> f64 {
        self.values
            .columns()
            .into_iter()
            .map(|c| {
                let n = c.dot(&c).sqrt();
                let m = c.sum() / c.len().max(1) as f64;
                (n - 1.0).abs().max(m.abs())
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn descriptors_unique(&self) -> bool {
        let set: HashSet<_> = self.descriptors.iter().collect();
        set.len() == self.descriptors.len()
    }
}
