//! Filter recipes and their canonical one-line text form.
//!
//! ```text
//! band(band=3)
//! open_rec(band=17, se=disk, size=11)
//! closing(band=2, se=line, size=7, angle=0.5235987755982988)
//! entropy(band=5, window=9)
//! attr_area(band=1, threshold=120)
//! norm_ratio(a=4, b=9)
//! stddev(band=31, window=5, depth=2)
//! ```
//!
//! `depth` is written only when it differs from the kind's default
//! (0 for `band`, 1 for filters).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filters::se::{SeShape, StructuringElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKind {
    /// An input band used as-is.
    Band,
    Opening,
    Closing,
    TophatOpen,
    TophatClose,
    OpenRec,
    CloseRec,
    OpenRecTophat,
    CloseRecTophat,
    Avg,
    Entropy,
    Stddev,
    Range,
    AttrArea,
    AttrDiag,
    Ratio,
    NormRatio,
    Sum,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Identity,
    Morphological,
    Texture,
    Attribute,
    Combination,
}

impl FilterKind {
    pub const ALL: [FilterKind; 19] = [
        FilterKind::Band,
        FilterKind::Opening,
        FilterKind::Closing,
        FilterKind::TophatOpen,
        FilterKind::TophatClose,
        FilterKind::OpenRec,
        FilterKind::CloseRec,
        FilterKind::OpenRecTophat,
        FilterKind::CloseRecTophat,
        FilterKind::Avg,
        FilterKind::Entropy,
        FilterKind::Stddev,
        FilterKind::Range,
        FilterKind::AttrArea,
        FilterKind::AttrDiag,
        FilterKind::Ratio,
        FilterKind::NormRatio,
        FilterKind::Sum,
        FilterKind::Product,
    ];

    /// Every kind except the identity `band` kind.
    pub fn filters() -> Vec<FilterKind> {
        FilterKind::ALL[1..].to_vec()
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Band => "band",
            FilterKind::Opening => "opening",
            FilterKind::Closing => "closing",
            FilterKind::TophatOpen => "tophat_open",
            FilterKind::TophatClose => "tophat_close",
            FilterKind::OpenRec => "open_rec",
            FilterKind::CloseRec => "close_rec",
            FilterKind::OpenRecTophat => "open_rec_tophat",
            FilterKind::CloseRecTophat => "close_rec_tophat",
            FilterKind::Avg => "avg",
            FilterKind::Entropy => "entropy",
            FilterKind::Stddev => "stddev",
            FilterKind::Range => "range",
            FilterKind::AttrArea => "attr_area",
            FilterKind::AttrDiag => "attr_diag",
            FilterKind::Ratio => "ratio",
            FilterKind::NormRatio => "norm_ratio",
            FilterKind::Sum => "sum",
            FilterKind::Product => "product",
        }
    }

    pub fn family(self) -> Family {
        use FilterKind::*;
        match self {
            Band => Family::Identity,
            Opening | Closing | TophatOpen | TophatClose | OpenRec | CloseRec | OpenRecTophat
            | CloseRecTophat => Family::Morphological,
            Avg | Entropy | Stddev | Range => Family::Texture,
            AttrArea | AttrDiag => Family::Attribute,
            Ratio | NormRatio | Sum | Product => Family::Combination,
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown filter kind `{s}`")))
    }
}

/// The recipe of one feature: filter kind, its parameters, the input band
/// id(s) and the depth in the filtering hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureDescriptor {
    pub kind: FilterKind,
    pub input_a: u32,
    pub input_b: Option<u32>,
    pub se: Option<StructuringElement>,
    pub window: Option<u32>,
    pub threshold: Option<u32>,
    pub depth: u32,
}

impl FeatureDescriptor {
    fn bare(kind: FilterKind, input_a: u32, depth: u32) -> Self {
        FeatureDescriptor {
            kind,
            input_a,
            input_b: None,
            se: None,
            window: None,
            threshold: None,
            depth,
        }
    }

    /// An original input band (depth 0).
    pub fn band(id: u32) -> Self {
        Self::bare(FilterKind::Band, id, 0)
    }

    /// A derived band used as-is; it keeps the depth it was produced at.
    pub fn band_at_depth(id: u32, depth: u32) -> Self {
        Self::bare(FilterKind::Band, id, depth)
    }

    pub fn morphological(
        kind: FilterKind,
        input: u32,
        se: StructuringElement,
        input_depth: u32,
    ) -> Result<Self> {
        let mut d = Self::bare(kind, input, input_depth + 1);
        d.se = Some(se);
        d.validate()?;
        Ok(d)
    }

    pub fn texture(kind: FilterKind, input: u32, window: u32, input_depth: u32) -> Result<Self> {
        let mut d = Self::bare(kind, input, input_depth + 1);
        d.window = Some(window);
        d.validate()?;
        Ok(d)
    }

    pub fn attribute(kind: FilterKind, input: u32, threshold: u32, input_depth: u32) -> Result<Self> {
        let mut d = Self::bare(kind, input, input_depth + 1);
        d.threshold = Some(threshold);
        d.validate()?;
        Ok(d)
    }

    pub fn combination(
        kind: FilterKind,
        a: u32,
        depth_a: u32,
        b: u32,
        depth_b: u32,
    ) -> Result<Self> {
        let mut d = Self::bare(kind, a, depth_a.max(depth_b) + 1);
        d.input_b = Some(b);
        d.validate()?;
        Ok(d)
    }

    /// Input band ids this recipe reads.
    pub fn inputs(&self) -> Vec<u32> {
        std::iter::once(self.input_a).chain(self.input_b).collect()
    }

    /// Checks that exactly the parameters required by the kind are present.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidArgument(format!(
                "{}: {reason}",
                self.kind.name()
            )))
        };
        let family = self.kind.family();
        let needs_se = family == Family::Morphological;
        let needs_window = family == Family::Texture;
        let needs_threshold = family == Family::Attribute;
        let needs_b = family == Family::Combination;
        if self.se.is_some() != needs_se {
            return bad("structuring element presence does not match kind");
        }
        if self.window.is_some() != needs_window {
            return bad("window presence does not match kind");
        }
        if self.threshold.is_some() != needs_threshold {
            return bad("threshold presence does not match kind");
        }
        if self.input_b.is_some() != needs_b {
            return bad("second input presence does not match kind");
        }
        if let Some(w) = self.window {
            if w < 3 || w % 2 == 0 {
                return bad("window must be odd and >= 3");
            }
        }
        if self.threshold == Some(0) {
            return bad("threshold must be positive");
        }
        if family != Family::Identity && self.depth == 0 {
            return bad("filters have depth >= 1");
        }
        Ok(())
    }

    fn default_depth(&self) -> u32 {
        if self.kind == FilterKind::Band {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for FeatureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind.name())?;
        match self.input_b {
            Some(b) => write!(f, "a={}, b={}", self.input_a, b)?,
            None => write!(f, "band={}", self.input_a)?,
        }
        if let Some(se) = &self.se {
            write!(f, ", se={}, size={}", se.shape(), se.size())?;
            if se.shape() == SeShape::Line {
                write!(f, ", angle={}", se.angle())?;
            }
        }
        if let Some(w) = self.window {
            write!(f, ", window={w}")?;
        }
        if let Some(t) = self.threshold {
            write!(f, ", threshold={t}")?;
        }
        if self.depth != self.default_depth() {
            write!(f, ", depth={}", self.depth)?;
        }
        f.write_str(")")
    }
}

impl FromStr for FeatureDescriptor {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let fail = |reason: String| Error::ParseDescriptor {
            text: text.to_string(),
            reason,
        };
        let t = text.trim();
        let open = t.find('(').ok_or_else(|| fail("missing `(`".into()))?;
        if !t.ends_with(')') {
            return Err(fail("missing `)`".into()));
        }
        let kind: FilterKind = t[..open].parse().map_err(|e: Error| fail(e.to_string()))?;
        let mut d = FeatureDescriptor::bare(kind, 0, 0);
        let mut depth = None;
        let (mut band, mut a, mut shape, mut size, mut angle) = (None, None, None, None, None);

        let num = |v: &str, key: &str| -> Result<u32> {
            v.parse::<u32>()
                .map_err(|_| fail(format!("`{key}` expects an unsigned integer, got `{v}`")))
        };
        for part in t[open + 1..t.len() - 1].split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key=value, got `{part}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "band" => band = Some(num(value, key)?),
                "a" => a = Some(num(value, key)?),
                "b" => d.input_b = Some(num(value, key)?),
                "se" => shape = Some(value.parse::<SeShape>().map_err(|e| fail(e.to_string()))?),
                "size" => size = Some(num(value, key)?),
                "angle" => {
                    angle = Some(
                        value
                            .parse::<f64>()
                            .map_err(|_| fail(format!("bad angle `{value}`")))?,
                    )
                }
                "window" => d.window = Some(num(value, key)?),
                "threshold" => d.threshold = Some(num(value, key)?),
                "depth" => depth = Some(num(value, key)?),
                other => return Err(fail(format!("unknown key `{other}`"))),
            }
        }
        d.input_a = match (band, a, d.input_b) {
            (Some(x), None, None) => x,
            (None, Some(x), Some(_)) => x,
            _ => return Err(fail("inputs must be `band=` or `a=, b=`".into())),
        };
        d.se = match (shape, size, angle) {
            (None, None, None) => None,
            (Some(SeShape::Line), Some(s), Some(al)) => {
                Some(StructuringElement::line(s, al).map_err(|e| fail(e.to_string()))?)
            }
            (Some(sh), Some(s), None) if sh != SeShape::Line => {
                Some(StructuringElement::new(sh, s).map_err(|e| fail(e.to_string()))?)
            }
            _ => return Err(fail("inconsistent structuring element".into())),
        };
        d.depth = depth.unwrap_or_else(|| d.default_depth());
        d.validate().map_err(|e| fail(e.to_string()))?;
        Ok(d)
    }
}
