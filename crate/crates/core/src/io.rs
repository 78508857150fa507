//! On-disk formats.
//!
//! A cube is a JSON sidecar plus a band-sequential little-endian `f32`
//! binary next to it. Labels are a whitespace-separated text table
//! `row col class_id` with 0-based pixel coordinates and 1-based class ids.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClassMap;
use crate::tensor::{Band, BandOrigin, ImageCube, LabeledSamples};

/// Reads a whole text file, naming the file in the error.
pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::format(path, e.to_string()))
}

const CUBE_FORMAT: &str = "aset-cube";
const ELEMENT_TYPE: &str = "float32-le";
const INTERLEAVE: &str = "band-sequential";

#[derive(Debug, Serialize, Deserialize)]
struct CubeSidecar {
    format: String,
    height: usize,
    width: usize,
    band_count: usize,
    element_type: String,
    interleave: String,
    /// Binary file name, relative to the sidecar.
    data_file: String,
    bands: Vec<BandEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BandEntry {
    id: u32,
    origin: BandOrigin,
}

/// Writes the original bands of `cube` to `sidecar` and a `.raw` binary
/// with the same stem. Derived bands are not stored.
pub fn write_cube(cube: &ImageCube, sidecar: impl AsRef<Path>) -> Result<()> {
    let sidecar = sidecar.as_ref();
    let originals = cube.originals();
    let data_path = sidecar.with_extension("raw");
    let data_file = data_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::format(sidecar, "sidecar path has no file name"))?
        .to_string();
    let meta = CubeSidecar {
        format: CUBE_FORMAT.into(),
        height: originals.height(),
        width: originals.width(),
        band_count: originals.band_count(),
        element_type: ELEMENT_TYPE.into(),
        interleave: INTERLEAVE.into(),
        data_file,
        bands: originals
            .meta()
            .iter()
            .map(|m| BandEntry {
                id: m.id,
                origin: m.origin,
            })
            .collect(),
    };
    let mut bytes = Vec::with_capacity(originals.band_count() * originals.pixel_count() * 4);
    for id in originals.ids() {
        for v in originals.band(id)?.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(&data_path, bytes)?;
    fs::write(sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn read_cube(sidecar: impl AsRef<Path>) -> Result<ImageCube> {
    let sidecar = sidecar.as_ref();
    let meta: CubeSidecar = serde_json::from_str(&read_text(sidecar)?)
        .map_err(|e| Error::format(sidecar, e.to_string()))?;
    if meta.format != CUBE_FORMAT || meta.element_type != ELEMENT_TYPE || meta.interleave != INTERLEAVE {
        return Err(Error::format(sidecar, "unsupported cube format"));
    }
    if meta.bands.len() != meta.band_count {
        return Err(Error::format(sidecar, "band list does not match band_count"));
    }
    let data_path = sidecar
        .parent()
        .map(|p| p.join(&meta.data_file))
        .unwrap_or_else(|| PathBuf::from(&meta.data_file));
    let bytes = fs::read(&data_path).map_err(|e| Error::format(&data_path, e.to_string()))?;
    let n = meta.height * meta.width;
    if bytes.len() != n * meta.band_count * 4 {
        return Err(Error::format(
            &data_path,
            format!("expected {} bytes, found {}", n * meta.band_count * 4, bytes.len()),
        ));
    }
    let mut cube = ImageCube::new(meta.height, meta.width);
    for (k, entry) in meta.bands.iter().enumerate() {
        let values: Vec<f32> = bytes[k * n * 4..(k + 1) * n * 4]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let band = Band::new(meta.height, meta.width, values)
            .map_err(|e| Error::format(&data_path, format!("band {}: {e}", entry.id)))?;
        cube.push_band(entry.id, entry.origin, band)
            .map_err(|e| Error::format(sidecar, e.to_string()))?;
    }
    Ok(cube)
}

pub fn write_labels(samples: &LabeledSamples, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "row col class_id")?;
    for (&(r, c), &y) in samples.pixels().iter().zip(samples.labels()) {
        writeln!(out, "{r} {c} {}", y + 1)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a label table. The class count is the largest id present unless
/// `classes` is given. Blank lines, `#` comments and a header are skipped.
pub fn read_labels(path: impl AsRef<Path>, classes: Option<usize>) -> Result<LabeledSamples> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path).map_err(|e| Error::format(path, e.to_string()))?);
    let mut pixels = Vec::new();
    let mut ids = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') || text.starts_with("row") {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let parsed = match fields.as_slice() {
            [r, c, y] => r
                .parse::<usize>()
                .ok()
                .zip(c.parse::<usize>().ok())
                .zip(y.parse::<usize>().ok().filter(|&y| y >= 1)),
            _ => None,
        };
        let ((r, c), y) = parsed.ok_or_else(|| {
            Error::format(path, format!("line {}: expected `row col class_id`", lineno + 1))
        })?;
        pixels.push((r, c));
        ids.push(y - 1);
    }
    let classes = classes.unwrap_or_else(|| ids.iter().max().map_or(0, |m| m + 1));
    LabeledSamples::new(pixels, ids, classes).map_err(|e| Error::format(path, e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassMapSidecar {
    height: usize,
    width: usize,
    classes: usize,
    labels_file: String,
    labels_type: String,
    proba_files: Vec<String>,
    proba_type: String,
}

/// Writes `labels.raw` (u16 LE, 1-based class ids), `proba_<c>.raw` (f32 LE,
/// c = 1..C) and `classification.json` describing them into `dir`.
pub fn write_class_map(map: &ClassMap, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let classes = map.proba.ncols();
    if classes > u16::MAX as usize {
        return Err(Error::InvalidArgument("too many classes for u16 labels".into()));
    }
    let labels: Vec<u8> = map
        .labels
        .iter()
        .flat_map(|&y| ((y + 1) as u16).to_le_bytes())
        .collect();
    fs::write(dir.join("labels.raw"), labels)?;
    let mut proba_files = Vec::with_capacity(classes);
    for c in 0..classes {
        let name = format!("proba_{}.raw", c + 1);
        let bytes: Vec<u8> = map
            .proba
            .column(c)
            .iter()
            .flat_map(|&p| (p as f32).to_le_bytes())
            .collect();
        fs::write(dir.join(&name), bytes)?;
        proba_files.push(name);
    }
    let meta = ClassMapSidecar {
        height: map.height,
        width: map.width,
        classes,
        labels_file: "labels.raw".into(),
        labels_type: "uint16-le".into(),
        proba_files,
        proba_type: ELEMENT_TYPE.into(),
    };
    fs::write(
        dir.join("classification.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(())
}

/// Reads back the 0-based labels written by [`write_class_map`].
pub fn read_label_raster(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.len() % 2 != 0 {
        return Err(Error::format(path, "odd byte count"));
    }
    bytes
        .chunks_exact(2)
        .map(|b| match u16::from_le_bytes([b[0], b[1]]) {
            0 => Err(Error::format(path, "class id 0")),
            y => Ok(y as usize - 1),
        })
        .collect()
}

pub fn read_f32_raster(path: impl AsRef<Path>) -> Result<Vec<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::format(path, "byte count is not a multiple of 4"));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}
