use crate::error::{Error, Result};

/// 1D Wasserstein-2 distance between two equal-size, equal-weight empirical
/// measures: the RMS difference of their sorted order statistics.
pub fn wasserstein2_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    Ok(sorted_w2_squared(&mut sa, &mut sb).sqrt())
}

/// Squared W2 after sorting both buffers in place.
pub(crate) fn sorted_w2_squared(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(wasserstein2_1d(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(wasserstein2_1d(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!((wasserstein2_1d(&[0.0, 0.0], &[0.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(matches!(
            wasserstein2_1d(&[0.0], &[0.0, 1.0]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    proptest! {
        #[test]
        fn symmetric_and_triangle(
            v in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0, -100.0f64..100.0), 1..40)
        ) {
            let a: Vec<f64> = v.iter().map(|x| x.0).collect();
            let b: Vec<f64> = v.iter().map(|x| x.1).collect();
            let c: Vec<f64> = v.iter().map(|x| x.2).collect();
            let ab = wasserstein2_1d(&a, &b).unwrap();
            let ba = wasserstein2_1d(&b, &a).unwrap();
            let bc = wasserstein2_1d(&b, &c).unwrap();
            let ac = wasserstein2_1d(&a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!(ab >= 0.0);
        }
    }
}
