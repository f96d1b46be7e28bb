//! Conditional flow matching: regression of the velocity network onto the
//! straight-path target `u_t = x1 - x0` along `x_t = (1 - t) x0 + t x1`, and
//! sampling by integrating the learned field from Gaussian noise at `t = 0` to
//! data at `t = 1`.

use serde::{Deserialize, Serialize};

use crate::data::{generate, DatasetSpec, Normalization};
use crate::error::{Error, Result};
use crate::nn::{self, adam_update, init_params, AdamState, MlpConfig, MlpParams, ModelFile, TrainingMeta, Workspace};
use crate::numeric::{gaussian_sample, Rng};
use crate::ode::{FieldHandle, SolveTrace, SolverSpec, VectorField};

/// Substream indices derived from a training seed.
const STREAM_DATA: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;

fn default_epochs() -> usize {
    300
}
fn default_batch_size() -> usize {
    256
}
fn default_lr() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub mlp: MlpConfig,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            lr: default_lr(),
            dataset: DatasetSpec::default(),
            mlp: MlpConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::InvalidArgument(format!("lr must be positive, got {}", self.lr)));
        }
        self.dataset.validate()?;
        self.mlp.validate()?;
        if self.mlp.data_dim != self.dataset.dim() {
            return Err(Error::InvalidArgument(format!(
                "mlp.data_dim = {} but the dataset is {}-dimensional",
                self.mlp.data_dim,
                self.dataset.dim()
            )));
        }
        Ok(())
    }
}

/// One training batch, all arrays row-major `rows x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfmBatch {
    pub dim: usize,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub t: Vec<f64>,
    pub x_t: Vec<f64>,
    pub u_t: Vec<f64>,
}

impl CfmBatch {
    /// Builds the interpolants and targets for given endpoints and times.
    pub fn from_parts(dim: usize, x0: Vec<f64>, x1: Vec<f64>, t: Vec<f64>) -> Self {
        debug_assert_eq!(x0.len(), x1.len());
        debug_assert_eq!(x0.len(), t.len() * dim);
        let mut x_t = vec![0.0; x0.len()];
        let mut u_t = vec![0.0; x0.len()];
        for (i, &ti) in t.iter().enumerate() {
            for j in i * dim..(i + 1) * dim {
                x_t[j] = (1.0 - ti) * x0[j] + ti * x1[j];
                u_t[j] = x1[j] - x0[j];
            }
        }
        Self { dim, x0, x1, t, x_t, u_t }
    }

    pub fn rows(&self) -> usize {
        self.t.len()
    }
}

/// Pairs the given data rows with fresh noise and uniform times. Noise and data
/// are coupled independently.
fn batch_for_rows(x1: Vec<f64>, dim: usize, rng: &mut Rng) -> CfmBatch {
    let rows = x1.len() / dim;
    let x0 = gaussian_sample(rng, rows, dim);
    let t = (0..rows).map(|_| rng.uniform()).collect();
    CfmBatch::from_parts(dim, x0, x1, t)
}

/// Batch whose data rows are drawn uniformly (with replacement) from `data`.
pub fn make_batch(data: &[f64], dim: usize, rng: &mut Rng, batch_size: usize) -> Result<CfmBatch> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
    }
    let n = data.len() / dim;
    if n == 0 {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let mut x1 = Vec::with_capacity(batch_size * dim);
    for _ in 0..batch_size {
        let i = rng.below(n);
        x1.extend_from_slice(&data[i * dim..(i + 1) * dim]);
    }
    Ok(batch_for_rows(x1, dim, rng))
}

/// Trained network plus the data standardization it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    pub params: MlpParams,
    pub normalization: Normalization,
}

impl FlowModel {
    pub fn dim(&self) -> usize {
        self.params.config.data_dim
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        Ok(Self { params: file.to_params()?, normalization: file.normalization.clone() })
    }

    pub fn to_file(&self, seed: u64, meta: TrainingMeta) -> ModelFile {
        ModelFile::new(&self.params, seed, self.normalization.clone(), meta)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FlowModel,
    /// Mean per-sample loss of each epoch.
    pub losses: Vec<f64>,
}

impl TrainOutcome {
    pub fn to_file(&self, config: &TrainConfig) -> ModelFile {
        let meta = TrainingMeta {
            epochs: self.losses.len(),
            final_loss: self.losses.last().copied().unwrap_or(f64::NAN),
        };
        self.model.to_file(config.seed, meta)
    }
}

pub fn train(config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(config, |_, _| {})
}

/// Trains on a fixed dataset of `config.dataset.n` points, standardized per
/// axis, reshuffled every epoch. Each epoch runs `ceil(n / batch_size)` Adam
/// steps; `on_epoch(epoch, loss)` is called after each.
pub fn train_with(config: &TrainConfig, mut on_epoch: impl FnMut(usize, f64)) -> Result<TrainOutcome> {
    config.validate()?;
    let dim = config.dataset.dim();
    let mut data = generate(&config.dataset, &mut Rng::substream(config.seed, STREAM_DATA))?.points;
    let normalization = Normalization::fit(&data, dim);
    normalization.apply(&mut data);

    let mut params = init_params(config.mlp, &mut Rng::substream(config.seed, STREAM_INIT))?;
    let mut rng = Rng::substream(config.seed, STREAM_TRAIN);
    let mut adam = AdamState::new(&params);
    let mut grads = params.zeros_like();
    let mut ws = Workspace::new();
    let n = data.len() / dim;
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let x1: Vec<f64> = chunk.iter().flat_map(|&i| data[i * dim..(i + 1) * dim].iter().copied()).collect();
            let batch = batch_for_rows(x1, dim, &mut rng);
            let loss = nn::model_loss_and_grad(&params, &batch.x_t, &batch.t, &batch.u_t, &mut ws, &mut grads)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, step, loss });
            }
            adam_update(&mut params, &grads, &mut adam, config.lr)?;
            total += loss * chunk.len() as f64;
        }
        let epoch_loss = total / n as f64;
        losses.push(epoch_loss);
        on_epoch(epoch, epoch_loss);
    }
    Ok(TrainOutcome { model: FlowModel { params, normalization }, losses })
}

/// The network as a vector field over a flattened batch of `rows` points; every
/// evaluation is one batched network call at a shared time.
pub struct NetworkField<'a> {
    params: &'a MlpParams,
    rows: usize,
    times: Vec<f64>,
    ws: Workspace,
}

impl<'a> NetworkField<'a> {
    pub fn new(params: &'a MlpParams, rows: usize) -> Result<Self> {
        params.check_finite()?;
        Ok(Self { params, rows, times: vec![0.0; rows], ws: Workspace::new() })
    }
}

impl VectorField for NetworkField<'_> {
    fn dim(&self) -> usize {
        self.rows * self.params.config.data_dim
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        self.times.fill(t);
        match nn::model_forward(self.params, y, &self.times, &mut self.ws) {
            Ok(v) => dy.copy_from_slice(v),
            // parameters were checked at construction, so only shape errors remain
            Err(_) => dy.fill(f64::NAN),
        }
    }
}

/// Draws `n` standard-normal starts with `rng`, integrates the learned field
/// over `[0, 1]` as one batched system, and maps the endpoints back to data
/// coordinates. The trace's NFE counts network calls.
pub fn sample(model: &FlowModel, solver: &SolverSpec, n: usize, rng: &mut Rng) -> Result<(Vec<f64>, SolveTrace)> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    solver.validate()?;
    let dim = model.dim();
    let z0 = gaussian_sample(rng, n, dim);
    let mut field = FieldHandle::new(NetworkField::new(&model.params, n)?);
    let trace = solver
        .solve(&mut field, &z0, 0.0, 1.0)
        .map_err(|e| e.context(format!("sampling {n} points with {solver}")))?;
    let mut points = trace.y_final.clone();
    model.normalization.invert(&mut points);
    Ok((points, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetKind;

    fn small_config(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 4,
            batch_size: 64,
            lr: 1e-3,
            dataset: DatasetSpec::moons(256, 0.05),
            mlp: MlpConfig { data_dim: 2, hidden: 16, n_blocks: 1, time_embed_dim: 8 },
            seed,
        }
    }

    #[test]
    fn batch_endpoints_and_targets() {
        let mut rng = Rng::new(1);
        let x0 = gaussian_sample(&mut rng, 3, 2);
        let x1 = gaussian_sample(&mut rng, 3, 2);
        let b = CfmBatch::from_parts(2, x0.clone(), x1.clone(), vec![0.0, 1.0, 0.25]);
        assert_eq!(&b.x_t[0..2], &x0[0..2]);
        assert_eq!(&b.x_t[2..4], &x1[2..4]);
        for j in 0..6 {
            assert!((b.u_t[j] + b.x0[j] - b.x1[j]).abs() <= 1e-15 * b.x1[j].abs().max(b.x0[j].abs()));
        }
        assert_eq!(b.x_t[4], 0.75 * x0[4] + 0.25 * x1[4]);
    }

    #[test]
    fn make_batch_shapes_and_ranges() {
        let data = vec![1.0, 2.0, 3.0, 4.0];
        let b = make_batch(&data, 2, &mut Rng::new(2), 50).unwrap();
        assert_eq!(b.rows(), 50);
        assert!(b.t.iter().all(|t| (0.0..1.0).contains(t)));
        assert!(b.x1.chunks(2).all(|r| r == [1.0, 2.0] || r == [3.0, 4.0]));
        assert!(make_batch(&data, 2, &mut Rng::new(2), 0).is_err());
    }

    #[test]
    fn training_is_deterministic_and_learns() {
        let cfg = small_config(3);
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.losses, b.losses);
        assert_eq!(a.model, b.model);
        assert_eq!(a.losses.len(), 4);
        assert!(a.losses.last().unwrap() < a.losses.first().unwrap(), "{:?}", a.losses);
    }

    #[test]
    fn invalid_training_configs() {
        assert!(train(&TrainConfig { epochs: 0, ..small_config(0) }).is_err());
        assert!(train(&TrainConfig { batch_size: 0, ..small_config(0) }).is_err());
        let mut cfg = small_config(0);
        cfg.mlp.data_dim = 3;
        assert!(train(&cfg).is_err());
    }

    #[test]
    fn sampling_nfe_matches_solver() {
        let cfg = small_config(4);
        let model = train(&TrainConfig { epochs: 1, ..cfg }).unwrap().model;
        let (pts, tr) = sample(&model, &SolverSpec::Euler { steps: 200 }, 50, &mut Rng::new(5)).unwrap();
        assert_eq!(pts.len(), 100);
        assert_eq!(tr.nfe_total, 200);
        let (_, tr) = sample(&model, &SolverSpec::Rk4 { steps: 20 }, 50, &mut Rng::new(5)).unwrap();
        assert_eq!(tr.nfe_total, 80);
        let (a, _) = sample(&model, &SolverSpec::dopri5(1e-5, 1e-5), 20, &mut Rng::new(6)).unwrap();
        let (b, _) = sample(&model, &SolverSpec::dopri5(1e-5, 1e-5), 20, &mut Rng::new(6)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_field_is_identity_flow() {
        let cfg = small_config(5);
        let params = init_params(cfg.mlp, &mut Rng::new(0)).unwrap();
        let normalization = Normalization { mean: vec![1.0, -2.0], std: vec![0.5, 3.0] };
        let model = FlowModel { params, normalization: normalization.clone() };
        let (pts, _) = sample(&model, &SolverSpec::Rk4 { steps: 5 }, 10, &mut Rng::new(7)).unwrap();
        let mut z0 = gaussian_sample(&mut Rng::new(7), 10, 2);
        normalization.invert(&mut z0);
        assert_eq!(pts, z0);
    }

    #[test]
    fn gaussian_data_stays_gaussian() {
        // Standard-normal data makes the identity flow (in standardized
        // coordinates) an exact transport, so a trained model should sample
        // about as well as mapping the noise straight through the normalization.
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 128,
            lr: 1e-3,
            dataset: DatasetSpec { kind: DatasetKind::GaussianNd, n: 1000, noise: 0.0, dim: 2 },
            mlp: MlpConfig { data_dim: 2, hidden: 32, n_blocks: 2, time_embed_dim: 8 },
            seed: 9,
        };
        let out = train(&cfg).unwrap();
        let tail = &out.losses[out.losses.len() - 10..];
        let mean_loss = tail.iter().sum::<f64>() / tail.len() as f64;
        // optimum: 2 * integral over t of 2 - (2t-1)^2 / ((1-t)^2 + t^2) = pi
        assert!((mean_loss - std::f64::consts::PI).abs() < 0.15, "{mean_loss}");
        let model = out.model;
        let n = 1000;
        let (pts, _) = sample(&model, &SolverSpec::Rk4 { steps: 10 }, n, &mut Rng::new(10)).unwrap();
        let mut ident = gaussian_sample(&mut Rng::new(10), n, 2);
        model.normalization.invert(&mut ident);
        let fresh = gaussian_sample(&mut Rng::new(11), n, 2);
        let d_model = crate::analysis::swd(&pts, &fresh, 2, 200, &mut Rng::new(13)).unwrap();
        let d_ident = crate::analysis::swd(&ident, &fresh, 2, 200, &mut Rng::new(13)).unwrap();
        assert!(d_model < 1.25 * d_ident + 0.01, "{d_model} vs {d_ident}");
    }
}
