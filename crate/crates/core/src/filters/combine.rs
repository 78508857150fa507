use crate::error::{Error, Result};
use crate::tensor::Band;

/// Denominators below this magnitude produce 0 instead of a quotient.
pub const GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combination {
    Ratio,
    NormRatio,
    Sum,
    Product,
}

fn guarded(num: f64, den: f64) -> f64 {
    if den.abs() < GUARD {
        0.0
    } else {
        num / den
    }
}

pub fn band_combination(a: &Band, b: &Band, kind: Combination) -> Result<Band> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension("combined bands differ in shape".into()));
    }
    let out = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| {
            let (x, y) = (f64::from(x), f64::from(y));
            (match kind {
                Combination::Ratio => guarded(x, y),
                Combination::NormRatio => guarded(x - y, x + y),
                Combination::Sum => x + y,
                Combination::Product => x * y,
            }) as f32
        })
        .collect();
    Ok(Band::from_filter(a.height(), a.width(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_ratios() {
        let x = Band::new(2, 3, vec![1.0, -2.0, 0.5, 0.0, 7.0, 3.0]).unwrap();
        let nr = band_combination(&x, &x, Combination::NormRatio).unwrap();
        assert!(nr.values().iter().all(|&v| v == 0.0));
        let r = band_combination(&x, &x, Combination::Ratio).unwrap();
        for (v, s) in r.values().iter().zip(x.values()) {
            assert_eq!(*v, if *s == 0.0 { 0.0 } else { 1.0 });
        }
    }

    #[test]
    fn pointwise_sum_and_product() {
        let a = Band::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Band::new(2, 2, vec![5.0, -1.0, 0.5, 2.0]).unwrap();
        let s = band_combination(&a, &b, Combination::Sum).unwrap();
        assert_eq!(s.values(), &[6.0, 1.0, 3.5, 6.0]);
        let p = band_combination(&a, &b, Combination::Product).unwrap();
        assert_eq!(p.values(), &[5.0, -2.0, 1.5, 8.0]);
    }

    #[test]
    fn guarded_denominators() {
        let a = Band::new(1, 2, vec![1.0, 1.0]).unwrap();
        let b = Band::new(1, 2, vec![0.0, -1.0]).unwrap();
        let r = band_combination(&a, &b, Combination::Ratio).unwrap();
        assert_eq!(r.values(), &[0.0, -1.0]);
        let nr = band_combination(&a, &b, Combination::NormRatio).unwrap();
        assert_eq!(nr.values(), &[1.0, 0.0]);
    }

    #[test]
    fn shape_mismatch() {
        let a = Band::constant(2, 2, 1.0);
        let b = Band::constant(2, 3, 1.0);
        assert!(band_combination(&a, &b, Combination::Sum).is_err());
    }
}
