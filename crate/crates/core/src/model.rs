//! A trained classifier: the sparse model plus everything needed to rebuild
//! its features on a new cube (normalization statistics and the recipes of
//! derived bands its descriptors read from).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{materialize, FeatureDescriptor, FilterKind};
use crate::glasso::{predict, ModelState};
use crate::tensor::{apply_normalization, Band, FeatureMatrix, ImageCube, LabeledSamples};

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub state: ModelState,
    pub epsilon: f64,
    pub means: Vec<f64>,
    pub norms: Vec<f64>,
    /// Derived band id → recipe, for every derived band the active
    /// descriptors depend on (directly or through other derived bands).
    pub derived: BTreeMap<u32, FeatureDescriptor>,
}

/// Per-pixel output of [`Classifier::classify`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<usize>,
    /// (H·W)×C class probabilities.
    pub proba: Array2<f64>,
}

impl Classifier {
    pub fn new(
        state: ModelState,
        epsilon: f64,
        means: Vec<f64>,
        norms: Vec<f64>,
        derived: BTreeMap<u32, FeatureDescriptor>,
    ) -> Result<Self> {
        state.check()?;
        let d = state.features();
        if means.len() != d || norms.len() != d {
            return Err(Error::Dimension(format!(
                "{d} features but {} means and {} norms",
                means.len(),
                norms.len()
            )));
        }
        if norms.iter().any(|n| !(*n > 0.0)) {
            return Err(Error::InvalidArgument("column norms must be positive".into()));
        }
        Ok(Classifier {
            state,
            epsilon,
            means,
            norms,
            derived,
        })
    }

    /// Packages a fitted state whose rows match the columns of `features`;
    /// derived inputs are looked up in `bank`.
    pub fn from_fit(
        state: ModelState,
        features: &FeatureMatrix,
        bank: &ImageCube,
        epsilon: f64,
    ) -> Result<Self> {
        if state.descriptors.as_slice() != features.descriptors() {
            return Err(Error::Dimension(
                "model rows and feature columns disagree".into(),
            ));
        }
        let mut derived = BTreeMap::new();
        let mut stack: Vec<u32> = state.descriptors.iter().flat_map(|d| d.inputs()).collect();
        while let Some(id) = stack.pop() {
            if derived.contains_key(&id) {
                continue;
            }
            if let Some(recipe) = bank.recipe(id) {
                stack.extend(recipe.inputs());
                derived.insert(id, recipe.clone());
            } else {
                bank.band(id)?;
            }
        }
        Classifier::new(
            state,
            epsilon,
            features.means().to_vec(),
            features.norms().to_vec(),
            derived,
        )
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.state.descriptors
    }

    /// Rebuilds the derived hierarchy on top of the original bands of
    /// `cube`, shallowest first, each depth level in parallel.
    pub fn bank(&self, cube: &ImageCube) -> Result<ImageCube> {
        let mut bank = cube.originals();
        let mut levels: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (&id, recipe) in &self.derived {
            levels.entry(recipe.depth).or_default().push(id);
        }
        for ids in levels.values() {
            let bands = ids
                .par_iter()
                .map(|id| materialize(&bank, &self.derived[id]))
                .collect::<Result<Vec<Band>>>()?;
            for (&id, band) in ids.iter().zip(bands) {
                bank.insert_derived(id, self.derived[&id].clone(), Arc::new(band))?;
            }
        }
        Ok(bank)
    }

    /// Full-raster output of every active descriptor, in model row order.
    pub fn feature_bands(&self, cube: &ImageCube) -> Result<Vec<Arc<Band>>> {
        let bank = self.bank(cube)?;
        self.descriptors()
            .par_iter()
            .map(|d| {
                if d.kind == FilterKind::Band {
                    bank.band(d.input_a).cloned()
                } else {
                    materialize(&bank, d).map(Arc::new)
                }
            })
            .collect()
    }

    fn design(&self, bands: &[Arc<Band>], pixels: &[(usize, usize)]) -> Array2<f64> {
        let mut x = Array2::<f64>::zeros((pixels.len(), bands.len()));
        for (j, band) in bands.iter().enumerate() {
            let (m, n) = (self.means[j], self.norms[j]);
            for (i, &(r, c)) in pixels.iter().enumerate() {
                x[[i, j]] = apply_normalization(f64::from(band.get(r, c)), m, n);
            }
        }
        x
    }

    pub fn predict_pixels(
        &self,
        bands: &[Arc<Band>],
        pixels: &[(usize, usize)],
    ) -> Result<(Vec<usize>, Array2<f64>)> {
        predict(&self.state, &self.design(bands, pixels).view())
    }

    pub fn predict_samples(&self, cube: &ImageCube, samples: &LabeledSamples) -> Result<Vec<usize>> {
        samples.check_bounds(cube.height(), cube.width())?;
        let bands = self.feature_bands(cube)?;
        Ok(self.predict_pixels(&bands, samples.pixels())?.0)
    }

    pub fn classify(&self, cube: &ImageCube) -> Result<ClassMap> {
        let bands = self.feature_bands(cube)?;
        let (h, w) = (cube.height(), cube.width());
        let rows: Vec<Vec<(usize, usize)>> = (0..h).map(|r| (0..w).map(|c| (r, c)).collect()).collect();
        let parts = rows
            .par_iter()
            .map(|px| self.predict_pixels(&bands, px))
            .collect::<Result<Vec<_>>>()?;
        let mut labels = Vec::with_capacity(h * w);
        let mut proba = Array2::<f64>::zeros((h * w, self.state.classes()));
        for (r, (l, p)) in parts.into_iter().enumerate() {
            labels.extend(l);
            proba
                .slice_mut(ndarray::s![r * w..(r + 1) * w, ..])
                .assign(&p);
        }
        Ok(ClassMap {
            height: h,
            width: w,
            labels,
            proba,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ModelFile>(text)?.into_classifier()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = crate::io::read_text(path)?;
        Self::from_json(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

const MODEL_FORMAT: &str = "aset-model";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    lambda: f64,
    epsilon: f64,
    classes: usize,
    converged: bool,
    bias: Vec<f64>,
    features: Vec<FeatureRow>,
    derived: Vec<DerivedRow>,
}

#[derive(Serialize, Deserialize)]
struct FeatureRow {
    descriptor: String,
    gamma: f64,
    mean: f64,
    norm: f64,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DerivedRow {
    id: u32,
    recipe: String,
}

impl From<&Classifier> for ModelFile {
    fn from(m: &Classifier) -> Self {
        let s = &m.state;
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: 1,
            lambda: s.lambda,
            epsilon: m.epsilon,
            classes: s.classes(),
            converged: s.converged,
            bias: s.bias.to_vec(),
            features: (0..s.features())
                .map(|j| FeatureRow {
                    descriptor: s.descriptors[j].to_string(),
                    gamma: s.gamma[j],
                    mean: m.means[j],
                    norm: m.norms[j],
                    weights: s.weights.row(j).to_vec(),
                })
                .collect(),
            derived: m
                .derived
                .iter()
                .map(|(&id, r)| DerivedRow {
                    id,
                    recipe: r.to_string(),
                })
                .collect(),
        }
    }
}

impl ModelFile {
    fn into_classifier(self) -> Result<Classifier> {
        if self.format != MODEL_FORMAT || self.version != 1 {
            return Err(Error::format("model", "unsupported model format"));
        }
        let c = self.classes;
        if self.bias.len() != c || self.features.iter().any(|f| f.weights.len() != c) {
            return Err(Error::format("model", "weight rows must have one entry per class"));
        }
        let descriptors = self
            .features
            .iter()
            .map(|f| f.descriptor.parse())
            .collect::<Result<Vec<FeatureDescriptor>>>()?;
        let unique: BTreeSet<String> = self.features.iter().map(|f| f.descriptor.clone()).collect();
        if unique.len() != descriptors.len() {
            return Err(Error::format("model", "duplicate descriptor"));
        }
        let weights = Array2::from_shape_vec(
            (self.features.len(), c),
            self.features.iter().flat_map(|f| f.weights.iter().copied()).collect(),
        )
        .map_err(|e| Error::format("model", e.to_string()))?;
        let mut derived = BTreeMap::new();
        for row in self.derived {
            if derived.insert(row.id, row.recipe.parse()?).is_some() {
                return Err(Error::format("model", format!("derived id {} repeated", row.id)));
            }
        }
        let state = ModelState {
            weights,
            bias: Array1::from(self.bias),
            gamma: self.features.iter().map(|f| f.gamma).collect(),
            lambda: self.lambda,
            descriptors,
            converged: self.converged,
        };
        Classifier::new(
            state,
            self.epsilon,
            self.features.iter().map(|f| f.mean).collect(),
            self.features.iter().map(|f| f.norm).collect(),
            derived,
        )
    }
}
