use super::embed::time_embed_into;
use super::gemm::{matmul, matmul_nt, matmul_tn};
use super::params::{MlpParams, B1, B2, BETA, GAMMA, W1, W2};
use crate::error::{Error, Result};

/// Variance floor inside LayerNorm.
pub const LN_EPS: f64 = 1e-12;

/// Activations kept from the forward pass for the backward pass. Reusable
/// across calls; buffers are resized as needed.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    rows: usize,
    z0: Vec<f64>,
    h: Vec<Vec<f64>>,
    xhat: Vec<Vec<f64>>,
    inv_std: Vec<Vec<f64>>,
    normed: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    out: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Output of the last forward pass, `rows x data_dim`.
    pub fn output(&self) -> &[f64] {
        &self.out
    }

    fn prepare(&mut self, p: &MlpParams, rows: usize) {
        let c = p.config;
        let (h, k) = (c.hidden, c.n_blocks);
        self.rows = rows;
        self.z0.resize(rows * c.input_width(), 0.0);
        let resize_all = |v: &mut Vec<Vec<f64>>, n: usize, len: usize| {
            v.resize_with(n, Vec::new);
            for x in v.iter_mut() {
                x.resize(len, 0.0);
            }
        };
        resize_all(&mut self.h, k + 1, rows * h);
        resize_all(&mut self.xhat, k, rows * h);
        resize_all(&mut self.inv_std, k, rows);
        resize_all(&mut self.normed, k, rows * h);
        resize_all(&mut self.act, k, rows * h);
        self.out.resize(rows * c.data_dim, 0.0);
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn add_bias(m: &mut [f64], bias: &[f64]) {
    for row in m.chunks_exact_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn col_sum_into(m: &[f64], cols: usize, out: &mut [f64]) {
    out.fill(0.0);
    for row in m.chunks_exact(cols) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

fn check_inputs(p: &MlpParams, x: &[f64], t: &[f64]) -> Result<usize> {
    let d = p.config.data_dim;
    let rows = t.len();
    if x.len() != rows * d {
        return Err(Error::LengthMismatch { left: x.len(), right: rows * d });
    }
    p.check_finite()?;
    Ok(rows)
}

/// Forward pass into `ws`; returns the `rows x data_dim` velocities.
pub(crate) fn forward_ws<'w>(
    p: &MlpParams,
    x: &[f64],
    t: &[f64],
    ws: &'w mut Workspace,
) -> Result<&'w [f64]> {
    let rows = check_inputs(p, x, t)?;
    ws.prepare(p, rows);
    let c = p.config;
    let (d, h, win) = (c.data_dim, c.hidden, c.input_width());

    for (i, zrow) in ws.z0.chunks_exact_mut(win).enumerate() {
        zrow[..d].copy_from_slice(&x[i * d..(i + 1) * d]);
        time_embed_into(t[i], &mut zrow[d..]);
    }
    matmul(rows, win, h, &ws.z0, p.input_weight(), 0.0, &mut ws.h[0]);
    add_bias(&mut ws.h[0], p.input_bias());

    for k in 0..c.n_blocks {
        let (gamma, beta) = (p.block(k, GAMMA), p.block(k, BETA));
        // pre-norm activations go straight into xhat and are normalized in place
        let xhat = &mut ws.xhat[k];
        matmul(rows, h, h, &ws.h[k], p.block(k, W1), 0.0, xhat);
        add_bias(xhat, p.block(k, B1));
        for (r, row) in xhat.chunks_exact_mut(h).enumerate() {
            let mean = row.iter().sum::<f64>() / h as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / h as f64;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            ws.inv_std[k][r] = inv;
            for v in row.iter_mut() {
                *v = (*v - mean) * inv;
            }
        }
        for (((n, a), xh), j) in ws.normed[k]
            .iter_mut()
            .zip(ws.act[k].iter_mut())
            .zip(xhat.iter())
            .zip((0..h).cycle())
        {
            *n = gamma[j] * xh + beta[j];
            *a = *n * sigmoid(*n);
        }
        let (before, after) = ws.h.split_at_mut(k + 1);
        let next = &mut after[0];
        next.copy_from_slice(&before[k]);
        add_bias(next, p.block(k, B2));
        matmul(rows, h, h, &ws.act[k], p.block(k, W2), 1.0, next);
    }

    matmul(rows, h, d, &ws.h[c.n_blocks], p.output_weight(), 0.0, &mut ws.out);
    add_bias(&mut ws.out, p.output_bias());
    Ok(&ws.out)
}

/// Velocities for a batch: `x` is `rows x data_dim`, `t` holds one time per row.
pub fn forward(p: &MlpParams, x: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    let mut ws = Workspace::new();
    forward_ws(p, x, t, &mut ws).map(<[f64]>::to_vec)
}

/// Mean over rows of `|v(x_t, t) - u_t|^2`, and its gradient with respect to
/// every parameter.
pub fn loss_and_grad(p: &MlpParams, x_t: &[f64], t: &[f64], u_t: &[f64]) -> Result<(f64, MlpParams)> {
    let mut ws = Workspace::new();
    let mut grads = p.zeros_like();
    let loss = loss_and_grad_ws(p, x_t, t, u_t, &mut ws, &mut grads)?;
    Ok((loss, grads))
}

pub(crate) fn loss_and_grad_ws(
    p: &MlpParams,
    x_t: &[f64],
    t: &[f64],
    u_t: &[f64],
    ws: &mut Workspace,
    grads: &mut MlpParams,
) -> Result<f64> {
    if u_t.len() != x_t.len() {
        return Err(Error::LengthMismatch { left: u_t.len(), right: x_t.len() });
    }
    forward_ws(p, x_t, t, ws)?;
    let c = p.config;
    let rows = ws.rows;
    let (d, h, win) = (c.data_dim, c.hidden, c.input_width());

    let mut loss = 0.0;
    let scale = 2.0 / rows as f64;
    let dout: Vec<f64> = ws
        .out
        .iter()
        .zip(u_t)
        .map(|(v, u)| {
            let r = v - u;
            loss += r * r;
            scale * r
        })
        .collect();
    loss /= rows as f64;

    let oi = p.output_index();
    matmul_tn(h, rows, d, &ws.h[c.n_blocks], &dout, 0.0, &mut grads.tensors[oi].data);
    col_sum_into(&dout, d, &mut grads.tensors[oi + 1].data);

    let mut dh = vec![0.0; rows * h];
    matmul_nt(rows, d, h, &dout, p.output_weight(), 0.0, &mut dh);
    let mut dact = vec![0.0; rows * h];
    let mut da = vec![0.0; rows * h];

    for k in (0..c.n_blocks).rev() {
        let idx = |w| p.block_index(k, w);
        col_sum_into(&dh, h, &mut grads.tensors[idx(B2)].data);
        matmul_tn(h, rows, h, &ws.act[k], &dh, 0.0, &mut grads.tensors[idx(W2)].data);
        matmul_nt(rows, h, h, &dh, p.block(k, W2), 0.0, &mut dact);

        // through SiLU: d/dn [n sigma(n)] = sigma(n) (1 + n (1 - sigma(n)))
        for (g, n) in dact.iter_mut().zip(&ws.normed[k]) {
            let s = sigmoid(*n);
            *g *= s * (1.0 + n * (1.0 - s));
        }
        let dnormed = &dact;
        {
            let [gg, gb] = [idx(GAMMA), idx(BETA)];
            let (lo, hi) = grads.tensors.split_at_mut(gb);
            let g_gamma = &mut lo[gg].data;
            let g_beta = &mut hi[0].data;
            g_gamma.fill(0.0);
            g_beta.fill(0.0);
            for (grow, xrow) in dnormed.chunks_exact(h).zip(ws.xhat[k].chunks_exact(h)) {
                for j in 0..h {
                    g_gamma[j] += grow[j] * xrow[j];
                    g_beta[j] += grow[j];
                }
            }
        }
        // LayerNorm backward, full Jacobian:
        // da = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
        let gamma = p.block(k, GAMMA);
        for r in 0..rows {
            let g = &dnormed[r * h..(r + 1) * h];
            let xh = &ws.xhat[k][r * h..(r + 1) * h];
            let out = &mut da[r * h..(r + 1) * h];
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for j in 0..h {
                let dx = g[j] * gamma[j];
                out[j] = dx;
                m1 += dx;
                m2 += dx * xh[j];
            }
            m1 /= h as f64;
            m2 /= h as f64;
            let inv = ws.inv_std[k][r];
            for j in 0..h {
                out[j] = inv * (out[j] - m1 - xh[j] * m2);
            }
        }
        col_sum_into(&da, h, &mut grads.tensors[idx(B1)].data);
        matmul_tn(h, rows, h, &ws.h[k], &da, 0.0, &mut grads.tensors[idx(W1)].data);
        // residual: dh_k = dh_{k+1} + da W1^T
        matmul_nt(rows, h, h, &da, p.block(k, W1), 1.0, &mut dh);
    }

    col_sum_into(&dh, h, &mut grads.tensors[1].data);
    matmul_tn(win, rows, h, &ws.z0, &dh, 0.0, &mut grads.tensors[0].data);
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, MlpConfig};
    use crate::numeric::Rng;

    fn tiny() -> MlpConfig {
        MlpConfig { data_dim: 2, hidden: 8, n_blocks: 1, time_embed_dim: 4 }
    }

    /// Initialized parameters with every tensor (including the output layer
    /// and LayerNorm affine) perturbed so no gradient path is trivially zero.
    fn perturbed(cfg: MlpConfig, seed: u64) -> MlpParams {
        let mut rng = Rng::new(seed);
        let mut p = init_params(cfg, &mut rng).unwrap();
        for t in &mut p.tensors {
            for v in &mut t.data {
                *v += 0.3 * rng.normal();
            }
        }
        p
    }

    fn batch(rows: usize, d: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = Rng::new(seed);
        let x = (0..rows * d).map(|_| rng.normal()).collect();
        let t = (0..rows).map(|_| rng.uniform()).collect();
        let u = (0..rows * d).map(|_| rng.normal()).collect();
        (x, t, u)
    }

    fn loss_only(p: &MlpParams, x: &[f64], t: &[f64], u: &[f64]) -> f64 {
        let v = forward(p, x, t).unwrap();
        v.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / t.len() as f64
    }

    /// Max over all parameters of |g - g_fd| / max(|g|, |g_fd|, 1e-6), with
    /// central differences at eps = 1e-5.
    fn max_rel_fd_error(p: &MlpParams, x: &[f64], t: &[f64], u: &[f64]) -> f64 {
        let (_, g) = loss_and_grad(p, x, t, u).unwrap();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        let mut q = p.clone();
        for ti in 0..p.tensors.len() {
            for j in 0..p.tensors[ti].len() {
                let orig = q.tensors[ti].data[j];
                q.tensors[ti].data[j] = orig + eps;
                let lp = loss_only(&q, x, t, u);
                q.tensors[ti].data[j] = orig - eps;
                let lm = loss_only(&q, x, t, u);
                q.tensors[ti].data[j] = orig;
                let fd = (lp - lm) / (2.0 * eps);
                let an = g.tensors[ti].data[j];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = perturbed(tiny(), 3);
        let (x, t, u) = batch(4, 2, 4);
        let err = max_rel_fd_error(&p, &x, &t, &u);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradient_check_deeper_network() {
        let cfg = MlpConfig { data_dim: 3, hidden: 6, n_blocks: 3, time_embed_dim: 2 };
        let p = perturbed(cfg, 8);
        let (x, t, u) = batch(5, 3, 9);
        let err = max_rel_fd_error(&p, &x, &t, &u);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradient_check_each_layer_type_isolated() {
        // Zeroing the W2 of the block leaves only the input/output linear path;
        // zeroing the input weight leaves the bias-driven LN/SiLU path.
        let base = perturbed(tiny(), 21);
        let (x, t, u) = batch(4, 2, 22);
        let mut linear_only = base.clone();
        let w2 = linear_only.block_index(0, W2);
        linear_only.tensors[w2].data.fill(0.0);
        assert!(max_rel_fd_error(&linear_only, &x, &t, &u) < 1e-4);
        let mut ln_path = base.clone();
        ln_path.tensors[0].data.fill(0.0);
        assert!(max_rel_fd_error(&ln_path, &x, &t, &u) < 1e-4);
    }

    #[test]
    fn zero_residual_gives_zero_loss_and_gradient() {
        let p = perturbed(tiny(), 5);
        let (x, t, _) = batch(4, 2, 6);
        let u = forward(&p, &x, &t).unwrap();
        let (loss, g) = loss_and_grad(&p, &x, &t, &u).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(g.sq_norm(), 0.0);
    }

    #[test]
    fn doubled_residual_quadruples_loss() {
        let p = perturbed(tiny(), 5);
        let (x, t, u) = batch(4, 2, 6);
        let v = forward(&p, &x, &t).unwrap();
        let u2: Vec<f64> = v.iter().zip(&u).map(|(v, u)| v - 2.0 * (v - u)).collect();
        let (l1, _) = loss_and_grad(&p, &x, &t, &u).unwrap();
        let (l2, _) = loss_and_grad(&p, &x, &t, &u2).unwrap();
        assert!((l2 - 4.0 * l1).abs() < 1e-12 * l2);
    }

    #[test]
    fn zero_output_layer_gives_zero_field() {
        let cfg = MlpConfig { data_dim: 2, hidden: 32, n_blocks: 2, time_embed_dim: 8 };
        let p = init_params(cfg, &mut Rng::new(1)).unwrap();
        let (x, t, _) = batch(10, 2, 2);
        assert!(forward(&p, &x, &t).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rows_are_independent() {
        let p = perturbed(tiny(), 7);
        let (x, t, _) = batch(6, 2, 8);
        let v = forward(&p, &x, &t).unwrap();
        assert_eq!(v.len(), 12);
        let perm = [3, 0, 5, 1, 4, 2];
        let xp: Vec<f64> = perm.iter().flat_map(|&i| x[2 * i..2 * i + 2].to_vec()).collect();
        let tp: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
        let vp = forward(&p, &xp, &tp).unwrap();
        for (r, &i) in perm.iter().enumerate() {
            assert_eq!(&vp[2 * r..2 * r + 2], &v[2 * i..2 * i + 2]);
        }
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let cfg = MlpConfig { data_dim: 2, hidden: 64, n_blocks: 2, time_embed_dim: 8 };
        let p = init_params(cfg, &mut Rng::new(9)).unwrap();
        let (x, t, _) = batch(16, 2, 10);
        let mut ws = Workspace::new();
        forward_ws(&p, &x, &t, &mut ws).unwrap();
        for k in 0..2 {
            for row in ws.xhat[k].chunks_exact(64) {
                let mean = row.iter().sum::<f64>() / 64.0;
                let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 64.0;
                assert!(mean.abs() < 1e-10, "{mean}");
                assert!((var - 1.0).abs() < 1e-10, "{var}");
            }
        }
    }

    #[test]
    fn zeroed_blocks_reduce_to_projections() {
        let cfg = MlpConfig { data_dim: 2, hidden: 8, n_blocks: 2, time_embed_dim: 4 };
        let mut p = perturbed(cfg, 11);
        for k in 0..2 {
            for w in [W2, B2] {
                let i = p.block_index(k, w);
                p.tensors[i].data.fill(0.0);
            }
        }
        let (x, t, _) = batch(3, 2, 12);
        let v = forward(&p, &x, &t).unwrap();
        for r in 0..3 {
            let mut z = x[2 * r..2 * r + 2].to_vec();
            z.extend(crate::nn::time_embed(t[r], 4));
            let h0: Vec<f64> = (0..8)
                .map(|j| p.input_bias()[j] + (0..6).map(|i| z[i] * p.input_weight()[i * 8 + j]).sum::<f64>())
                .collect();
            for o in 0..2 {
                let want = p.output_bias()[o] + (0..8).map(|j| h0[j] * p.output_weight()[j * 2 + o]).sum::<f64>();
                assert!((v[2 * r + o] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn finite_on_large_inputs() {
        let p = perturbed(tiny(), 13);
        let x = vec![1e6, -1e6, 3e5, 7e5];
        let v = forward(&p, &x, &[0.5, 1.0]).unwrap();
        assert!(v.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn non_finite_params_named() {
        let mut p = perturbed(tiny(), 14);
        p.tensors[3].data[0] = f64::NAN;
        match forward(&p, &[0.0, 0.0], &[0.5]) {
            Err(Error::NonFiniteParams(name)) => assert_eq!(name, "blocks.0.b1"),
            other => panic!("{other:?}"),
        }
    }
}
