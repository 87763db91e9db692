//! Model hyperparameters and ablation switches.

use serde::{Deserialize, Serialize};

use crate::pipeline::FeatureMode;
use crate::spectral::default_window_list;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Embedding width D; must be divisible by `heads`.
    pub embed_dim: usize,
    pub heads: usize,
    pub attn_layers: usize,
    /// Dropout probability on attention weights during training.
    pub dropout: f64,
    /// Window scales fused by the model.
    pub windows: Vec<usize>,
    /// Contrastive temperature τ.
    pub temperature: f64,
    /// Explicit ℓ2 coefficient λ in the loss (regularization normally comes
    /// from the optimizer's decoupled weight decay instead).
    pub loss_l2: f64,
    /// Feed quality statistics to the fusion MLP alongside the scale proxy.
    pub fusion_uses_quality: bool,
    /// V = W_k·flow (one projection for keys and values) as printed in the
    /// attention definition; disable for a separate W_v.
    pub shared_kv_projection: bool,
    /// Quality-aware feature modulation on the IMU branch ("-FiLM" ablation
    /// turns this off).
    pub film_enabled: bool,
    /// Scale-aware fusion; when off, window scores are averaged uniformly.
    pub fusion_enabled: bool,
    /// Input representation (spectral vs raw time-domain windows).
    pub feature_mode: FeatureMode,
    /// Hidden width of the fusion MLP g(·).
    pub fusion_hidden: usize,
    /// Share modulation/attention weights across window scales (input
    /// projections stay per-scale; feature widths differ).
    pub share_scale_weights: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 64,
            heads: 4,
            attn_layers: 2,
            dropout: 0.1,
            windows: default_window_list(),
            temperature: 0.07,
            loss_l2: 0.0,
            fusion_uses_quality: false,
            shared_kv_projection: true,
            film_enabled: true,
            fusion_enabled: true,
            feature_mode: FeatureMode::Spectral,
            fusion_hidden: 32,
            share_scale_weights: false,
        }
    }
}

impl ModelConfig {
    /// Small configuration for fast tests and gradient checks.
    pub fn tiny() -> Self {
        ModelConfig {
            embed_dim: 8,
            heads: 2,
            windows: vec![5, 6],
            ..Default::default()
        }
    }

    pub fn n_scales(&self) -> usize {
        self.windows.len()
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.heads
    }

    pub fn feature_dim(&self, w: usize) -> usize {
        self.feature_mode.feature_dim(w)
    }

    pub fn fusion_input_dim(&self) -> usize {
        if self.fusion_uses_quality {
            3
        } else {
            1
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.embed_dim == 0 || self.embed_dim % self.heads != 0 {
            return Err(crate::Error::InvalidArgument(format!(
                "embed_dim {} must be a positive multiple of heads {}",
                self.embed_dim, self.heads
            )));
        }
        if self.windows.is_empty() {
            return Err(crate::Error::InvalidArgument("no window scales configured".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(crate::Error::InvalidArgument(format!("dropout {} out of [0,1)", self.dropout)));
        }
        if self.temperature <= 0.0 {
            return Err(crate::Error::InvalidArgument("temperature must be positive".into()));
        }
        Ok(())
    }
}
