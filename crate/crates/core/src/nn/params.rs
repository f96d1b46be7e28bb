use super::MlpConfig;
use crate::error::{Error, Result};
use crate::numeric::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(name: String, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { name, shape, data: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Every learnable tensor of the network, in a fixed order:
/// `input.weight, input.bias`, then per block
/// `w1, b1, ln_gamma, ln_beta, w2, b2`, then `output.weight, output.bias`.
///
/// Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub config: MlpConfig,
    pub tensors: Vec<Tensor>,
}

pub(crate) const PER_BLOCK: usize = 6;
pub(crate) const W1: usize = 0;
pub(crate) const B1: usize = 1;
pub(crate) const GAMMA: usize = 2;
pub(crate) const BETA: usize = 3;
pub(crate) const W2: usize = 4;
pub(crate) const B2: usize = 5;

impl MlpParams {
    /// All-zero tensors with the right names and shapes.
    pub fn zeros(config: MlpConfig) -> Self {
        let (d, h) = (config.data_dim, config.hidden);
        let mut tensors = vec![
            Tensor::zeros("input.weight".into(), vec![config.input_width(), h]),
            Tensor::zeros("input.bias".into(), vec![h]),
        ];
        for k in 0..config.n_blocks {
            let p = |s: &str| format!("blocks.{k}.{s}");
            tensors.push(Tensor::zeros(p("w1"), vec![h, h]));
            tensors.push(Tensor::zeros(p("b1"), vec![h]));
            tensors.push(Tensor::zeros(p("ln_gamma"), vec![h]));
            tensors.push(Tensor::zeros(p("ln_beta"), vec![h]));
            tensors.push(Tensor::zeros(p("w2"), vec![h, h]));
            tensors.push(Tensor::zeros(p("b2"), vec![h]));
        }
        tensors.push(Tensor::zeros("output.weight".into(), vec![h, d]));
        tensors.push(Tensor::zeros("output.bias".into(), vec![d]));
        Self { config, tensors }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config)
    }

    pub fn input_weight(&self) -> &[f64] {
        &self.tensors[0].data
    }
    pub fn input_bias(&self) -> &[f64] {
        &self.tensors[1].data
    }
    pub(crate) fn block_index(&self, k: usize, which: usize) -> usize {
        2 + PER_BLOCK * k + which
    }
    pub(crate) fn block(&self, k: usize, which: usize) -> &[f64] {
        &self.tensors[self.block_index(k, which)].data
    }
    pub(crate) fn output_index(&self) -> usize {
        2 + PER_BLOCK * self.config.n_blocks
    }
    pub fn output_weight(&self) -> &[f64] {
        &self.tensors[self.output_index()].data
    }
    pub fn output_bias(&self) -> &[f64] {
        &self.tensors[self.output_index() + 1].data
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.tensors.iter().find(|t| t.data.iter().any(|v| !v.is_finite())) {
            Some(t) => Err(Error::NonFiniteParams(t.name.clone())),
            None => Ok(()),
        }
    }

    /// Shapes and names agree with `config`.
    pub fn check_layout(&self) -> Result<()> {
        let want = Self::zeros(self.config);
        if want.tensors.len() != self.tensors.len() {
            return Err(Error::Config(format!(
                "expected {} tensors, found {}",
                want.tensors.len(),
                self.tensors.len()
            )));
        }
        for (w, t) in want.tensors.iter().zip(&self.tensors) {
            if w.name != t.name || w.shape != t.shape || t.data.len() != w.data.len() {
                return Err(Error::Config(format!(
                    "tensor `{}` {:?} does not match expected `{}` {:?}",
                    t.name, t.shape, w.name, w.shape
                )));
            }
        }
        Ok(())
    }

    pub fn sq_norm(&self) -> f64 {
        self.tensors.iter().flat_map(|t| t.data.iter()).map(|v| v * v).sum()
    }
}

/// Linear layers uniform in `+-1/sqrt(fan_in)`, LayerNorm `gamma = 1, beta = 0`,
/// output projection zero so the initial field is identically zero.
pub fn init_params(config: MlpConfig, rng: &mut Rng) -> Result<MlpParams> {
    config.validate()?;
    let mut p = MlpParams::zeros(config);
    let out_idx = p.output_index();
    for (i, t) in p.tensors.iter_mut().enumerate() {
        if i >= out_idx {
            continue;
        }
        let leaf = t.name.rsplit('.').next().unwrap_or("");
        match leaf {
            "ln_gamma" => t.data.fill(1.0),
            "ln_beta" => {}
            _ => {
                let fan_in = if t.name == "input.weight" || t.name == "input.bias" {
                    config.input_width()
                } else {
                    config.hidden
                };
                let bound = 1.0 / (fan_in as f64).sqrt();
                for v in &mut t.data {
                    *v = rng.uniform_range(-bound, bound);
                }
            }
        }
    }
    Ok(p)
}
