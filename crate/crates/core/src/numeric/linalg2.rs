use num_complex::Complex64;

/// Real 2x2 matrix, row-major `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[f64; 2]; 2]);

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Matrix2 = Matrix2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Matrix2([[a, b], [c, d]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: f64) -> Self {
        let [[a, b], [c, d]] = self.0;
        Matrix2::new(s * a, s * b, s * c, s * d)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

/// Eigenvalues from the trace/determinant closed form, ordered by descending
/// real part, then descending imaginary part.
///
/// The discriminant is formed as `((a - d)/2)^2 + bc` to avoid cancellation, and
/// for real pairs the smaller-magnitude root is recovered as `det / large`.
pub fn eig2x2(m: &Matrix2) -> (Complex64, Complex64) {
    let [[a, b], [c, d]] = m.0;
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    let (l1, l2) = if disc >= 0.0 {
        let root = disc.sqrt();
        let large = if half_tr >= 0.0 { half_tr + root } else { half_tr - root };
        let small = if large != 0.0 { m.det() / large } else { 0.0 };
        (Complex64::new(large, 0.0), Complex64::new(small, 0.0))
    } else {
        let root = (-disc).sqrt();
        (Complex64::new(half_tr, root), Complex64::new(half_tr, -root))
    };
    let first_wins = l1.re > l2.re || (l1.re == l2.re && l1.im >= l2.im);
    if first_wins {
        (l1, l2)
    } else {
        (l2, l1)
    }
}

/// Spectral condition number `sigma_max / sigma_min`; `f64::INFINITY` when the
/// matrix is singular.
pub fn cond2x2(m: &Matrix2) -> f64 {
    let [[a, b], [c, d]] = m.0;
    let p = (a + d).hypot(c - b);
    let q = (a - d).hypot(b + c);
    let sigma_max = 0.5 * (p + q);
    let det = m.det().abs();
    if det == 0.0 || sigma_max == 0.0 {
        return f64::INFINITY;
    }
    // sigma_min = |det| / sigma_max
    let cond = sigma_max * sigma_max / det;
    if cond.is_finite() {
        cond.max(1.0)
    } else {
        f64::INFINITY
    }
}
