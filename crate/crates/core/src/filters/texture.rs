//! Sliding-window texture statistics with replicate padding.

use crate::error::{Error, Result};
use crate::tensor::Band;

/// Histogram bins for the entropy filter, spanning the band's global range.
pub const ENTROPY_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureStat {
    Average,
    Entropy,
    StdDev,
    Range,
}

pub fn texture_filter(band: &Band, stat: TextureStat, window: u32) -> Result<Band> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "texture window must be odd and >= 3, got {window}"
        )));
    }
    let r = (window / 2) as isize;
    let (h, w) = band.shape();
    let src = band.values();
    let (lo, hi) = band.min_max();
    let span = f64::from(hi) - f64::from(lo);
    let bin_of = |v: f32| -> usize {
        if span <= 0.0 {
            0
        } else {
            let t = (f64::from(v) - f64::from(lo)) / span;
            ((t * ENTROPY_BINS as f64) as usize).min(ENTROPY_BINS - 1)
        }
    };
    let clamp = |x: isize, n: usize| x.clamp(0, n as isize - 1) as usize;
    let n = ((2 * r + 1) * (2 * r + 1)) as f64;
    let mut out = vec![0f32; h * w];
    let mut hist = [0u32; ENTROPY_BINS];

    for row in 0..h {
        for col in 0..w {
            let anchor = f64::from(src[row * w + col]);
            // shifted sums keep constant windows exactly at zero spread
            let (mut s1, mut s2) = (0f64, 0f64);
            let (mut mn, mut mx) = (f32::INFINITY, f32::NEG_INFINITY);
            if stat == TextureStat::Entropy {
                hist = [0; ENTROPY_BINS];
            }
            for dr in -r..=r {
                let rr = clamp(row as isize + dr, h);
                for dc in -r..=r {
                    let cc = clamp(col as isize + dc, w);
                    let v = src[rr * w + cc];
                    match stat {
                        TextureStat::Average | TextureStat::StdDev => {
                            let d = f64::from(v) - anchor;
                            s1 += d;
                            s2 += d * d;
                        }
                        TextureStat::Range => {
                            mn = mn.min(v);
                            mx = mx.max(v);
                        }
                        TextureStat::Entropy => hist[bin_of(v)] += 1,
                    }
                }
            }
            out[row * w + col] = match stat {
                TextureStat::Average => (anchor + s1 / n) as f32,
                TextureStat::StdDev => {
                    let m = s1 / n;
                    (s2 / n - m * m).max(0.0).sqrt() as f32
                }
                TextureStat::Range => mx - mn,
                TextureStat::Entropy => {
                    let e: f64 = hist
                        .iter()
                        .filter(|&&k| k > 0)
                        .map(|&k| {
                            let p = f64::from(k) / n;
                            -p * p.ln()
                        })
                        .sum();
                    e.max(0.0) as f32
                }
            };
        }
    }
    Ok(Band::from_filter(h, w, out))
}
