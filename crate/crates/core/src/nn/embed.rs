/// Highest angular frequency of the time embedding; the lowest is 1.
pub const MAX_FREQUENCY: f64 = 100.0;

/// Angular frequency of pair `j` out of `half` pairs, geometric from 1 to
/// [`MAX_FREQUENCY`].
fn frequency(j: usize, half: usize) -> f64 {
    if half == 1 {
        1.0
    } else {
        MAX_FREQUENCY.powf(j as f64 / (half - 1) as f64)
    }
}

/// Sinusoidal features `[sin(w_0 t), cos(w_0 t), sin(w_1 t), cos(w_1 t), ...]`.
pub fn time_embed(t: f64, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    time_embed_into(t, &mut out);
    out
}

pub fn time_embed_into(t: f64, out: &mut [f64]) {
    assert!(out.len() % 2 == 0, "time embedding dimension must be even");
    let half = out.len() / 2;
    for j in 0..half {
        let (s, c) = (frequency(j, half) * t).sin_cos();
        out[2 * j] = s;
        out[2 * j + 1] = c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time() {
        let e = time_embed(0.0, 8);
        for pair in e.chunks(2) {
            assert_eq!(pair, [0.0, 1.0]);
        }
    }

    #[test]
    fn shape_and_periodicity() {
        for dim in [2, 4, 64] {
            assert_eq!(time_embed(0.37, dim).len(), dim);
        }
        let t = 0.3;
        let a = time_embed(t, 16);
        let b = time_embed(t + 2.0 * std::f64::consts::PI, 16);
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn frequencies_span_one_to_max() {
        assert_eq!(frequency(0, 32), 1.0);
        assert!((frequency(31, 32) - MAX_FREQUENCY).abs() < 1e-9);
        assert!(frequency(10, 32) < frequency(11, 32));
    }
}
