//! Grayscale morphology: erosion, dilation, opening/closing, geodesic
//! reconstruction and top-hats.
//!
//! Neighborhoods only visit pixels inside the raster. For disks, diamonds
//! and squares this is the same as replicate padding, since clamping an
//! offset toward the image keeps it inside the element. For lines it keeps
//! erosion and dilation an exact adjunction at the borders.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::filters::se::StructuringElement;
use crate::tensor::Band;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

fn rank_filter(band: &Band, se: &StructuringElement, ext: Extremum) -> Band {
    let (h, w) = band.shape();
    let src = band.values();
    let offsets = se.offsets();
    let r = se.radius();
    let mut out = vec![0f32; h * w];
    for row in 0..h {
        let interior_r = row as isize >= r && (row as isize) < h as isize - r;
        for col in 0..w {
            let interior = interior_r && col as isize >= r && (col as isize) < w as isize - r;
            let mut acc = src[row * w + col];
            for &(dr, dc) in &offsets {
                let rr = row as isize + dr;
                let cc = col as isize + dc;
                if !interior && (rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize) {
                    continue;
                }
                let v = src[rr as usize * w + cc as usize];
                acc = match ext {
                    Extremum::Min => acc.min(v),
                    Extremum::Max => acc.max(v),
                };
            }
            out[row * w + col] = acc;
        }
    }
    Band::from_filter(h, w, out)
}

pub fn erode(band: &Band, se: &StructuringElement) -> Band {
    rank_filter(band, se, Extremum::Min)
}

pub fn dilate(band: &Band, se: &StructuringElement) -> Band {
    rank_filter(band, se, Extremum::Max)
}

pub fn opening(band: &Band, se: &StructuringElement) -> Band {
    dilate(&erode(band, se), se)
}

pub fn closing(band: &Band, se: &StructuringElement) -> Band {
    erode(&dilate(band, se), se)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reconstruction {
    ByDilation,
    ByErosion,
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Geodesic reconstruction of `marker` under (or over) `mask` with
/// 8-connectivity, computed with the hybrid raster-scan/FIFO algorithm.
pub fn reconstruct(marker: &Band, mask: &Band, direction: Reconstruction) -> Result<Band> {
    if marker.shape() != mask.shape() {
        return Err(Error::Dimension("marker and mask shapes differ".into()));
    }
    match direction {
        Reconstruction::ByDilation => {
            if let Some(i) = marker
                .values()
                .iter()
                .zip(mask.values())
                .position(|(m, k)| m > k)
            {
                return Err(Error::Reconstruction(i));
            }
            Ok(reconstruct_by_dilation(marker, mask))
        }
        Reconstruction::ByErosion => {
            if let Some(i) = marker
                .values()
                .iter()
                .zip(mask.values())
                .position(|(m, k)| m < k)
            {
                return Err(Error::Reconstruction(i));
            }
            let out = reconstruct_by_dilation(&marker.map(|v| -v), &mask.map(|v| -v));
            Ok(out.map(|v| -v))
        }
    }
}

fn reconstruct_by_dilation(marker: &Band, mask: &Band) -> Band {
    let (h, w) = marker.shape();
    let mask = mask.values();
    let mut j = marker.values().to_vec();
    let (hi, wi) = (h as isize, w as isize);
    let inside = |r: isize, c: isize| r >= 0 && c >= 0 && r < hi && c < wi;

    // forward scan over the causal half of the neighborhood
    for r in 0..hi {
        for c in 0..wi {
            let p = (r * wi + c) as usize;
            let mut m = j[p];
            for &(dr, dc) in &NEIGHBORS_8[..4] {
                let (rr, cc) = (r + dr, c + dc);
                if inside(rr, cc) {
                    m = m.max(j[(rr * wi + cc) as usize]);
                }
            }
            j[p] = m.min(mask[p]);
        }
    }

    let mut queue = VecDeque::new();
    for r in (0..hi).rev() {
        for c in (0..wi).rev() {
            let p = (r * wi + c) as usize;
            let mut m = j[p];
            for &(dr, dc) in &NEIGHBORS_8[4..] {
                let (rr, cc) = (r + dr, c + dc);
                if inside(rr, cc) {
                    m = m.max(j[(rr * wi + cc) as usize]);
                }
            }
            j[p] = m.min(mask[p]);
            for &(dr, dc) in &NEIGHBORS_8[4..] {
                let (rr, cc) = (r + dr, c + dc);
                if inside(rr, cc) {
                    let q = (rr * wi + cc) as usize;
                    if j[q] < j[p] && j[q] < mask[q] {
                        queue.push_back(p);
                        break;
                    }
                }
            }
        }
    }

    while let Some(p) = queue.pop_front() {
        let (r, c) = ((p / w) as isize, (p % w) as isize);
        for &(dr, dc) in &NEIGHBORS_8 {
            let (rr, cc) = (r + dr, c + dc);
            if !inside(rr, cc) {
                continue;
            }
            let q = (rr * wi + cc) as usize;
            if j[q] < j[p] && mask[q] != j[q] {
                j[q] = j[p].min(mask[q]);
                queue.push_back(q);
            }
        }
    }
    Band::from_filter(h, w, j)
}

/// Opening by reconstruction: the eroded band regrown under the original.
pub fn open_rec(band: &Band, se: &StructuringElement) -> Band {
    reconstruct(&erode(band, se), band, Reconstruction::ByDilation)
        .expect("erosion is anti-extensive")
}

/// Closing by reconstruction: the dilated band regrown over the original.
pub fn close_rec(band: &Band, se: &StructuringElement) -> Band {
    reconstruct(&dilate(band, se), band, Reconstruction::ByErosion)
        .expect("dilation is extensive")
}

fn difference(a: &Band, b: &Band) -> Band {
    Band::from_filter(
        a.height(),
        a.width(),
        a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect(),
    )
}

pub fn tophat_open(band: &Band, se: &StructuringElement) -> Band {
    difference(band, &opening(band, se))
}

pub fn tophat_close(band: &Band, se: &StructuringElement) -> Band {
    difference(&closing(band, se), band)
}

pub fn open_rec_tophat(band: &Band, se: &StructuringElement) -> Band {
    difference(band, &open_rec(band, se))
}

pub fn close_rec_tophat(band: &Band, se: &StructuringElement) -> Band {
    difference(&close_rec(band, se), band)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::se::SeShape;

    fn sq3() -> StructuringElement {
        StructuringElement::square(3).unwrap()
    }

    fn peak(h: usize, w: usize, at: (usize, usize), height: f32) -> Band {
        Band::from_fn(h, w, |r, c| if (r, c) == at { height } else { 0.0 })
    }

    /// Iterates elementary geodesic dilation to a fixed point.
    fn naive_reconstruct(marker: &Band, mask: &Band) -> Band {
        let mut cur = marker.clone();
        loop {
            let grown = dilate(&cur, &sq3());
            let next = Band::from_filter(
                cur.height(),
                cur.width(),
                grown
                    .values()
                    .iter()
                    .zip(mask.values())
                    .map(|(g, m)| g.min(*m))
                    .collect(),
            );
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    #[test]
    fn constants_are_fixed() {
        let b = Band::constant(6, 7, 3.5);
        for shape in [SeShape::Disk, SeShape::Diamond, SeShape::Square] {
            let se = StructuringElement::new(shape, 5).unwrap();
            assert_eq!(erode(&b, &se), b);
            assert_eq!(dilate(&b, &se), b);
            assert_eq!(opening(&b, &se), b);
        }
    }

    #[test]
    fn dilate_spreads_a_bright_pixel() {
        let b = peak(5, 5, (2, 2), 1.0);
        let d = dilate(&b, &sq3());
        for r in 0..5 {
            for c in 0..5 {
                let expect = if (1..=3).contains(&r) && (1..=3).contains(&c) { 1.0 } else { 0.0 };
                assert_eq!(d.get(r, c), expect);
            }
        }
    }

    #[test]
    fn erosion_dilation_duality() {
        let b = Band::from_fn(9, 8, |r, c| ((r * 7 + c * 3) % 5) as f32 - 2.0);
        let se = StructuringElement::line(5, 0.6).unwrap();
        let lhs = erode(&b.map(|v| -v), &se);
        let rhs = dilate(&b, &se).map(|v| -v);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn opening_removes_single_peak() {
        let b = peak(7, 7, (3, 3), 9.0);
        assert_eq!(opening(&b, &sq3()), Band::constant(7, 7, 0.0));
        let th = tophat_open(&b, &sq3());
        assert_eq!(th, b);
    }

    #[test]
    fn tophat_of_constant_is_zero() {
        let b = Band::constant(4, 4, 2.0);
        let se = sq3();
        for f in [tophat_open, tophat_close, open_rec_tophat, close_rec_tophat] {
            assert_eq!(f(&b, &se), Band::constant(4, 4, 0.0));
        }
    }

    #[test]
    fn reconstruction_fixed_point_and_floor() {
        let x = Band::from_fn(6, 6, |r, c| ((r * c) % 4) as f32);
        assert_eq!(reconstruct(&x, &x, Reconstruction::ByDilation).unwrap(), x);
        let (lo, _) = x.min_max();
        let floor = Band::constant(6, 6, lo);
        assert_eq!(
            reconstruct(&floor, &x, Reconstruction::ByDilation).unwrap(),
            floor
        );
        assert!(matches!(
            reconstruct(&x.map(|v| v + 1.0), &x, Reconstruction::ByDilation),
            Err(Error::Reconstruction(_))
        ));
        assert!(matches!(
            reconstruct(&x.map(|v| v - 1.0), &x, Reconstruction::ByErosion),
            Err(Error::Reconstruction(_))
        ));
    }

    #[test]
    fn opening_by_reconstruction_two_blobs() {
        // A 3x3 blob survives erosion by a 3x3 square and is regrown fully,
        // including its attached one-pixel tail; the 1x2 blob disappears.
        let mut v = vec![0f32; 49];
        for r in 1..4 {
            for c in 1..4 {
                v[r * 7 + c] = 5.0;
            }
        }
        v[4 * 7 + 4] = 5.0;
        v[5 * 7 + 5] = 4.0;
        v[1 * 7 + 5] = 3.0;
        v[1 * 7 + 6] = 3.0;
        let x = Band::new(7, 7, v).unwrap();
        let marker = erode(&x, &sq3());
        let fast = reconstruct(&marker, &x, Reconstruction::ByDilation).unwrap();
        assert_eq!(fast, naive_reconstruct(&marker, &x));
        assert_eq!(fast.get(4, 4), 5.0);
        assert_eq!(fast.get(5, 5), 4.0);
        assert_eq!(fast.get(1, 5), 0.0);
        assert_eq!(fast.get(2, 2), 5.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn band_strategy() -> impl Strategy<Value = Band> {
            (3usize..12, 3usize..12).prop_flat_map(|(h, w)| {
                proptest::collection::vec(0u8..6, h * w)
                    .prop_map(move |v| Band::new(h, w, v.into_iter().map(f32::from).collect()).unwrap())
            })
        }

        proptest! {
            #[test]
            fn fast_reconstruction_matches_iteration(x in band_strategy(), size in prop_oneof![Just(3u32), Just(5)]) {
                let se = StructuringElement::square(size).unwrap();
                let marker = erode(&x, &se);
                prop_assert_eq!(
                    reconstruct(&marker, &x, Reconstruction::ByDilation).unwrap(),
                    naive_reconstruct(&marker, &x)
                );
            }
        }
    }
}
