use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeShape {
    Disk,
    Diamond,
    Square,
    Line,
}

impl SeShape {
    pub const ALL: [SeShape; 4] = [SeShape::Disk, SeShape::Diamond, SeShape::Square, SeShape::Line];

    pub fn name(self) -> &'static str {
        match self {
            SeShape::Disk => "disk",
            SeShape::Diamond => "diamond",
            SeShape::Square => "square",
            SeShape::Line => "line",
        }
    }
}

impl fmt::Display for SeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SeShape::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown structuring element `{s}`")))
    }
}

/// A flat, origin-centered, symmetric structuring element.
///
/// `size` is the window diameter for disks, diamonds and squares, and the
/// number of pixels along the major axis for lines. The angle only matters
/// for lines and is stored as 0 otherwise.
#[derive(Debug, Clone, Copy)]
pub struct StructuringElement {
    shape: SeShape,
    size: u32,
    angle: f64,
}

impl PartialEq for StructuringElement {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self.size == other.size
            && self.angle.to_bits() == other.angle.to_bits()
    }
}

impl Eq for StructuringElement {}

impl Hash for StructuringElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.shape.hash(state);
        self.size.hash(state);
        self.angle.to_bits().hash(state);
    }
}

impl StructuringElement {
    pub fn new(shape: SeShape, size: u32) -> Result<Self> {
        if shape == SeShape::Line {
            return Err(Error::InvalidArgument(
                "line structuring elements need an angle".into(),
            ));
        }
        Self::check_size(size)?;
        Ok(StructuringElement {
            shape,
            size,
            angle: 0.0,
        })
    }

    pub fn line(size: u32, angle: f64) -> Result<Self> {
        Self::check_size(size)?;
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&angle) {
            return Err(Error::InvalidArgument(format!(
                "line angle {angle} outside [-pi/2, pi/2]"
            )));
        }
        Ok(StructuringElement {
            shape: SeShape::Line,
            size,
            angle,
        })
    }

    pub fn square(size: u32) -> Result<Self> {
        Self::new(SeShape::Square, size)
    }

    fn check_size(size: u32) -> Result<()> {
        if size < 3 || size % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "structuring element size must be odd and >= 3, got {size}"
            )));
        }
        Ok(())
    }

    pub fn shape(&self) -> SeShape {
        self.shape
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn radius(&self) -> isize {
        (self.size / 2) as isize
    }

    /// (row, col) offsets covered by the element, including the origin.
    /// The set is closed under negation.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.radius();
        let mut out = Vec::new();
        match self.shape {
            SeShape::Square => {
                for dr in -r..=r {
                    for dc in -r..=r {
                        out.push((dr, dc));
                    }
                }
            }
            SeShape::Diamond => {
                for dr in -r..=r {
                    for dc in -r..=r {
                        if dr.abs() + dc.abs() <= r {
                            out.push((dr, dc));
                        }
                    }
                }
            }
            SeShape::Disk => {
                for dr in -r..=r {
                    for dc in -r..=r {
                        if dr * dr + dc * dc <= r * r {
                            out.push((dr, dc));
                        }
                    }
                }
            }
            SeShape::Line => {
                // The endpoint is scaled so the major axis spans exactly `size` pixels.
                let (s, c) = self.angle.sin_cos();
                let m = c.abs().max(s.abs());
                let ec = (r as f64 * c / m).round() as isize;
                let er = (-(r as f64) * s / m).round() as isize;
                for (dr, dc) in bresenham(er, ec) {
                    out.push((dr, dc));
                    if (dr, dc) != (0, 0) {
                        out.push((-dr, -dc));
                    }
                }
                out.sort_unstable();
                out.dedup();
            }
        }
        out
    }
}

/// Integer segment from the origin to (er, ec), both endpoints included.
fn bresenham(er: isize, ec: isize) -> Vec<(isize, isize)> {
    let (mut r, mut c) = (0isize, 0isize);
    let dc = ec.abs();
    let dr = -er.abs();
    let sc = if ec >= 0 { 1 } else { -1 };
    let sr = if er >= 0 { 1 } else { -1 };
    let mut err = dc + dr;
    let mut pts = vec![(0, 0)];
    while (r, c) != (er, ec) {
        let e2 = 2 * err;
        if e2 >= dr {
            err += dr;
            c += sc;
        }
        if e2 <= dc {
            err += dc;
            r += sr;
        }
        pts.push((r, c));
    }
    pts
}
