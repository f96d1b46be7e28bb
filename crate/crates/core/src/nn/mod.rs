//! The velocity network: a residual MLP with a sinusoidal time embedding,
//! LayerNorm and SiLU, with hand-written reverse-mode gradients and Adam.
//!
//! ```text
//! h0      = [x, embed(t)] W_in + b_in
//! h_{k+1} = h_k + SiLU(LN_{gamma,beta}(h_k W1 + b1)) W2 + b2
//! v       = h_K W_out + b_out
//! ```
//!
//! Weights are stored `[fan_in, fan_out]`, row-major, so a batch `X` (rows are
//! samples) maps to `X W + b`.

mod adam;
mod embed;
mod gemm;
mod model;
mod params;
mod persist;

use serde::{Deserialize, Serialize};

pub use adam::{adam_update, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use embed::{time_embed, time_embed_into, MAX_FREQUENCY};
pub use model::{forward, loss_and_grad, Workspace, LN_EPS};
pub(crate) use model::{forward_ws as model_forward, loss_and_grad_ws as model_loss_and_grad};
pub use params::{init_params, MlpParams, Tensor};
pub use persist::{ModelFile, TrainingMeta, MODEL_FORMAT_VERSION};

use crate::error::{Error, Result};

fn default_time_embed_dim() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    pub data_dim: usize,
    pub hidden: usize,
    pub n_blocks: usize,
    #[serde(default = "default_time_embed_dim")]
    pub time_embed_dim: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { data_dim: 2, hidden: 256, n_blocks: 4, time_embed_dim: 64 }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.data_dim == 0 || self.hidden == 0 || self.n_blocks == 0 {
            return Err(Error::InvalidArgument(format!(
                "data_dim, hidden and n_blocks must be >= 1 (got {self:?})"
            )));
        }
        if self.time_embed_dim < 2 || self.time_embed_dim % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "time_embed_dim must be even and >= 2, got {}",
                self.time_embed_dim
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.data_dim + self.time_embed_dim
    }

    pub fn param_count(&self) -> usize {
        let (d, h, e) = (self.data_dim, self.hidden, self.time_embed_dim);
        (d + e) * h + h + self.n_blocks * (2 * h * h + 4 * h) + h * d + d
    }
}
