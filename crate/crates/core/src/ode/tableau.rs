/// Seven-stage explicit Runge-Kutta tableau with an embedded lower-order row.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub c: [f64; 7],
    /// Strictly lower triangular.
    pub a: [[f64; 7]; 7],
    /// Fifth-order (propagated) weights.
    pub b: [f64; 7],
    /// Fourth-order (embedded) weights.
    pub b_star: [f64; 7],
}

impl ButcherTableau {
    /// Dormand-Prince 5(4). The last row of `a` equals `b` and `b[6] == 0`,
    /// which makes the seventh stage reusable as the next step's first (FSAL).
    pub fn dormand_prince() -> Self {
        ButcherTableau {
            c: [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0],
            a: [
                [0.0; 7],
                [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0, 0.0],
                [
                    19372.0 / 6561.0,
                    -25360.0 / 2187.0,
                    64448.0 / 6561.0,
                    -212.0 / 729.0,
                    0.0,
                    0.0,
                    0.0,
                ],
                [
                    9017.0 / 3168.0,
                    -355.0 / 33.0,
                    46732.0 / 5247.0,
                    49.0 / 176.0,
                    -5103.0 / 18656.0,
                    0.0,
                    0.0,
                ],
                [
                    35.0 / 384.0,
                    0.0,
                    500.0 / 1113.0,
                    125.0 / 192.0,
                    -2187.0 / 6784.0,
                    11.0 / 84.0,
                    0.0,
                ],
            ],
            b: [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0],
            b_star: [
                5179.0 / 57600.0,
                0.0,
                7571.0 / 16695.0,
                393.0 / 640.0,
                -92097.0 / 339200.0,
                187.0 / 2100.0,
                1.0 / 40.0,
            ],
        }
    }

    /// `b - b_star`, the weights of the local error estimate.
    pub fn error_weights(&self) -> [f64; 7] {
        std::array::from_fn(|i| self.b[i] - self.b_star[i])
    }

    /// Coefficients `gamma_k` of the stability polynomial
    /// `R(z) = sum_k gamma_k z^k`, with `gamma_0 = 1` and
    /// `gamma_{k+1} = b . A^k . 1`. Length 8 since `A` is nilpotent of order 7.
    pub fn stability_coefficients(&self) -> [f64; 8] {
        let mut gamma = [0.0; 8];
        gamma[0] = 1.0;
        let mut v = [1.0; 7];
        for g in gamma.iter_mut().skip(1) {
            *g = self.b.iter().zip(v.iter()).map(|(b, x)| b * x).sum();
            let next: [f64; 7] =
                std::array::from_fn(|i| (0..7).map(|j| self.a[i][j] * v[j]).sum());
            v = next;
        }
        gamma
    }
}
