//! The dual-branch fusion classifier and the coordinate-regression head:
//! forward pass, analytic gradients, Adam training, checkpoint selection.
//!
//! Everything is generic over the scalar; training and checkpoints run at
//! `f64` (see the crate-root aliases).

mod adam;
mod checkpoint;
mod linalg;
mod net;
mod regression;
mod train;

pub use adam::{adam_step, AdamParams, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use linalg::Matrix;
pub use net::{
    branch_backward, branch_forward, ce_loss, fuse, init_branch, softmax, BranchActivations,
    BranchParams,
};
pub use regression::{
    init_regression, regression_backward, regression_forward, unit_vector_loss,
    RegressionActivations, RegressionParams,
};
pub use train::{
    train_classifier, train_regression, EpochRecord, RegressionEpochRecord, RegressionLog,
    TrainedClassifier, TrainedRegressor, TrainingLog,
};

use serde::{Deserialize, Serialize};

use crate::embeddings::FeatureKind;
use crate::error::Error;
use crate::num::Real;

/// Which branches are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchMode {
    Visual,
    Textual,
    Multimodal,
}

impl BranchMode {
    pub fn visual_active(&self) -> bool {
        matches!(self, BranchMode::Visual | BranchMode::Multimodal)
    }

    pub fn textual_active(&self) -> bool {
        matches!(self, BranchMode::Textual | BranchMode::Multimodal)
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "visual" => Ok(BranchMode::Visual),
            "textual" => Ok(BranchMode::Textual),
            "multimodal" => Ok(BranchMode::Multimodal),
            other => Err(Error::invalid("branch", format!("unknown branch `{other}`"))),
        }
    }
}

/// How the two branch probability vectors are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FusionRule {
    /// Element-wise maximum of the two softmax vectors.
    #[default]
    ElementwiseMax,
    /// Take the whole probability vector of the branch with the higher
    /// peak confidence.
    PeakBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Number of location classes.
    pub n_classes: usize,
    pub visual_kinds: Vec<FeatureKind>,
    pub textual_kinds: Vec<FeatureKind>,
    pub hidden: usize,
    /// Softmax temperature applied to the normalized score vectors.
    pub temperature: f64,
    pub lr: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Lower clamp on the score-vector norm before division.
    pub norm_clamp: f64,
    pub fusion: FusionRule,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_classes: 389,
            visual_kinds: vec![
                FeatureKind::Scene,
                FeatureKind::LocationDesc,
                FeatureKind::Object,
                FeatureKind::ClipImage,
            ],
            textual_kinds: vec![FeatureKind::BertBody, FeatureKind::BertEntities],
            hidden: 1024,
            temperature: 1.0,
            lr: 1e-4,
            batch: 128,
            max_epochs: 500,
            seed: 0,
            norm_clamp: 1e-12,
            fusion: FusionRule::ElementwiseMax,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self, mode: BranchMode) -> Result<(), Error> {
        if self.n_classes < 2 {
            return Err(Error::invalid("model config", "need at least 2 classes"));
        }
        if mode.visual_active() && self.visual_kinds.is_empty() {
            return Err(Error::invalid(
                "model config",
                "visual branch active but no visual kinds configured",
            ));
        }
        if mode.textual_active() && self.textual_kinds.is_empty() {
            return Err(Error::invalid(
                "model config",
                "textual branch active but no textual kinds configured",
            ));
        }
        if self.hidden == 0 || self.batch == 0 || self.max_epochs == 0 {
            return Err(Error::invalid(
                "model config",
                "hidden, batch and max_epochs must be positive",
            ));
        }
        if !(self.temperature > 0.0) || !(self.lr > 0.0) || !(self.norm_clamp > 0.0) {
            return Err(Error::invalid(
                "model config",
                "temperature, lr and norm_clamp must be positive",
            ));
        }
        Ok(())
    }
}

/// Per-sample inference output.
#[derive(Debug, Clone)]
pub struct Prediction<F> {
    pub probs_v: Option<Vec<F>>,
    pub probs_t: Option<Vec<F>>,
    /// Fused score vector (multimodal only). Need not sum to 1; its
    /// argmax is still well defined.
    pub fused: Option<Vec<F>>,
    pub argmax: usize,
}

/// A trained (or freshly initialized) classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<F> {
    pub cfg: ModelConfig,
    pub mode: BranchMode,
    pub visual: Option<BranchParams<F>>,
    pub textual: Option<BranchParams<F>>,
}

impl<F: Real> Model<F> {
    pub fn predict(&self, x_v: Option<&[F]>, x_t: Option<&[F]>) -> Result<Prediction<F>, Error> {
        let clamp = F::of(self.cfg.norm_clamp);
        let tau = F::of(self.cfg.temperature);
        let probs_v = match (&self.visual, x_v) {
            (Some(p), Some(x)) => Some(softmax(&branch_forward(x, p, clamp)?.y_hat, tau)),
            (Some(_), None) => {
                return Err(Error::invalid("prediction", "visual branch needs input"))
            }
            _ => None,
        };
        let probs_t = match (&self.textual, x_t) {
            (Some(p), Some(x)) => Some(softmax(&branch_forward(x, p, clamp)?.y_hat, tau)),
            (Some(_), None) => {
                return Err(Error::invalid("prediction", "textual branch needs input"))
            }
            _ => None,
        };
        let (fused, scores): (Option<Vec<F>>, &[F]) = match (&probs_v, &probs_t) {
            (Some(v), Some(t)) => {
                let f = fuse(v, t, self.cfg.fusion)?;
                (Some(f), &[])
            }
            (Some(v), None) => (None, v),
            (None, Some(t)) => (None, t),
            (None, None) => return Err(Error::invalid("prediction", "no active branch")),
        };
        let score_vec: &[F] = fused.as_deref().unwrap_or(scores);
        let argmax = argmax(score_vec);
        Ok(Prediction {
            probs_v,
            probs_t,
            fused,
            argmax,
        })
    }
}

pub(crate) fn argmax<F: Real>(v: &[F]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
