use crate::error::{Error, Result};
use crate::numeric::{transport::sorted_w2_squared, Rng};

/// Sliced 2-Wasserstein distance between two equal-size point clouds
/// (row-major, `dim` columns): the root of the mean squared 1D W2 over
/// `n_projections` directions drawn uniformly on the unit sphere.
pub fn swd(a: &[f64], b: &[f64], dim: usize, n_projections: usize, rng: &mut Rng) -> Result<f64> {
    if dim == 0 || n_projections == 0 {
        return Err(Error::InvalidArgument("dim and n_projections must be >= 1".into()));
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len() / dim, right: b.len() / dim });
    }
    if a.is_empty() || a.len() % dim != 0 {
        return Err(Error::InvalidArgument(format!("{} values is not a non-empty multiple of dim {dim}", a.len())));
    }
    let n = a.len() / dim;
    let mut pa = vec![0.0; n];
    let mut pb = vec![0.0; n];
    let mut dir = vec![0.0; dim];
    let mut total = 0.0;
    for _ in 0..n_projections {
        loop {
            dir.iter_mut().for_each(|v| *v = rng.normal());
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                dir.iter_mut().for_each(|v| *v /= norm);
                break;
            }
        }
        for (p, row) in pa.iter_mut().zip(a.chunks_exact(dim)) {
            *p = row.iter().zip(&dir).map(|(x, d)| x * d).sum();
        }
        for (p, row) in pb.iter_mut().zip(b.chunks_exact(dim)) {
            *p = row.iter().zip(&dir).map(|(x, d)| x * d).sum();
        }
        total += sorted_w2_squared(&mut pa, &mut pb);
    }
    Ok((total / n_projections as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gaussian_sample;

    #[test]
    fn identical_clouds_have_zero_distance() {
        let a = gaussian_sample(&mut Rng::new(1), 100, 3);
        assert_eq!(swd(&a, &a, 3, 50, &mut Rng::new(2)).unwrap(), 0.0);
    }

    #[test]
    fn translation_matches_dense_angle_oracle() {
        let shift = 0.7;
        let a = gaussian_sample(&mut Rng::new(3), 500, 2);
        let b: Vec<f64> = a.chunks(2).flat_map(|r| [r[0] + shift, r[1]]).collect();
        // oracle: average of (shift cos theta)^2 over a dense uniform angle grid
        let m = 100_000;
        let mean_sq = (0..m)
            .map(|k| {
                let th = std::f64::consts::TAU * (k as f64 + 0.5) / m as f64;
                (shift * th.cos()).powi(2)
            })
            .sum::<f64>()
            / m as f64;
        let oracle = mean_sq.sqrt();
        assert!((oracle - shift / 2f64.sqrt()).abs() < 1e-9);
        let d = swd(&a, &b, 2, 2000, &mut Rng::new(4)).unwrap();
        assert!((d - oracle).abs() < 0.05 * oracle, "{d} vs {oracle}");
    }

    #[test]
    fn symmetric_for_shared_projections() {
        let a = gaussian_sample(&mut Rng::new(5), 200, 2);
        let b = gaussian_sample(&mut Rng::new(6), 200, 2);
        let ab = swd(&a, &b, 2, 100, &mut Rng::new(7)).unwrap();
        let ba = swd(&b, &a, 2, 100, &mut Rng::new(7)).unwrap();
        assert_eq!(ab, ba);
        assert!(ab > 0.0);
    }

    #[test]
    fn common_rotation_changes_little() {
        let a = gaussian_sample(&mut Rng::new(8), 400, 2);
        let b: Vec<f64> = gaussian_sample(&mut Rng::new(9), 400, 2)
            .chunks(2)
            .flat_map(|r| [2.0 * r[0] + 1.0, 0.5 * r[1]])
            .collect();
        let (s, c) = 0.9f64.sin_cos();
        let rot = |v: &[f64]| -> Vec<f64> { v.chunks(2).flat_map(|r| [c * r[0] - s * r[1], s * r[0] + c * r[1]]).collect() };
        let d = swd(&a, &b, 2, 2000, &mut Rng::new(10)).unwrap();
        let dr = swd(&rot(&a), &rot(&b), 2, 2000, &mut Rng::new(11)).unwrap();
        assert!((d - dr).abs() < 0.05 * d, "{d} vs {dr}");
    }

    #[test]
    fn size_mismatch() {
        assert!(swd(&[0.0, 0.0], &[0.0, 0.0, 1.0, 1.0], 2, 10, &mut Rng::new(0)).is_err());
    }
}
