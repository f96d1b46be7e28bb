use num_complex::Complex64;

use super::{ButcherTableau, Method};

/// Polynomial coefficients of `R(z)` in ascending powers.
fn coefficients(method: Method) -> Vec<f64> {
    match method {
        Method::Euler => vec![1.0, 1.0],
        Method::Midpoint => vec![1.0, 1.0, 0.5],
        Method::Rk4 => vec![1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0],
        Method::Dopri5 => ButcherTableau::dormand_prince().stability_coefficients().to_vec(),
    }
}

/// Amplification factor `R(z)` of one step on `y' = lambda y`, `z = h lambda`.
///
/// Explicit polynomials for the fixed-step schemes; for DOPRI5 the coefficients
/// are generated from the tableau as `b . A^k . 1`.
pub fn stability_value(method: Method, z: Complex64) -> Complex64 {
    coefficients(method)
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Leftmost point of the stability interval on the negative real axis, found by
/// marching from the origin and refining the crossing by bisection.
pub fn real_axis_extent(method: Method) -> f64 {
    let abs_r = |x: f64| stability_value(method, Complex64::new(x, 0.0)).norm();
    let step = 1e-3;
    let mut x = 0.0;
    while abs_r(x - step) <= 1.0 {
        x -= step;
    }
    let (mut inside, mut outside) = (x, x - step);
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if abs_r(mid) <= 1.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// `|R(z)|` sampled on a rectangular grid. Row `i` holds `Im z = im_min + i d_im`,
/// column `j` holds `Re z = re_min + j d_re`.
#[derive(Debug, Clone)]
pub struct StabilityGrid {
    pub method: Method,
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
    pub magnitude: Vec<f64>,
    pub inside: Vec<bool>,
}

impl StabilityGrid {
    pub fn re_at(&self, j: usize) -> f64 {
        self.re_range.0 + j as f64 * self.d_re()
    }

    pub fn im_at(&self, i: usize) -> f64 {
        self.im_range.0 + i as f64 * self.d_im()
    }

    pub fn d_re(&self) -> f64 {
        (self.re_range.1 - self.re_range.0) / (self.n_re - 1) as f64
    }

    pub fn d_im(&self) -> f64 {
        (self.im_range.1 - self.im_range.0) / (self.n_im - 1) as f64
    }

    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.inside[i * self.n_re + j]
    }

    /// Leftmost stable real-axis sample connected to the origin, read off the
    /// grid row closest to `Im z = 0`. `None` if the origin is outside the grid.
    pub fn real_axis_boundary(&self) -> Option<f64> {
        let nearest = |lo: f64, d: f64, n: usize, v: f64| -> Option<usize> {
            let idx = ((v - lo) / d).round();
            (idx >= 0.0 && (idx as usize) < n).then_some(idx as usize)
        };
        let row = nearest(self.im_range.0, self.d_im(), self.n_im, 0.0)?;
        let mut col = nearest(self.re_range.0, self.d_re(), self.n_re, 0.0)?;
        // the origin itself sits on |R| = 1; start from the nearest stable sample to its left
        while col > 0 && !self.is_inside(row, col) && self.re_at(col) >= -self.d_re() {
            col -= 1;
        }
        if !self.is_inside(row, col) {
            return None;
        }
        while col > 0 && self.is_inside(row, col - 1) {
            col -= 1;
        }
        Some(self.re_at(col))
    }
}

pub fn stability_region_grid(
    method: Method,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: (usize, usize),
) -> StabilityGrid {
    let (n_re, n_im) = resolution;
    assert!(n_re >= 2 && n_im >= 2, "resolution must be at least 2 per axis");
    let coeffs = coefficients(method);
    let mut magnitude = Vec::with_capacity(n_re * n_im);
    let d_re = (re_range.1 - re_range.0) / (n_re - 1) as f64;
    let d_im = (im_range.1 - im_range.0) / (n_im - 1) as f64;
    for i in 0..n_im {
        let im = im_range.0 + i as f64 * d_im;
        for j in 0..n_re {
            let z = Complex64::new(re_range.0 + j as f64 * d_re, im);
            let r = coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
            magnitude.push(r.norm());
        }
    }
    // tiny slack so samples exactly on |R| = 1 (e.g. z = -2 for Euler) count as inside
    let inside = magnitude.iter().map(|&m| m <= 1.0 + 1e-12).collect();
    StabilityGrid { method, re_range, im_range, n_re, n_im, magnitude, inside }
}
