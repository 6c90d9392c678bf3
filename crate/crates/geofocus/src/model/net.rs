//! Branch network: FC -> ReLU -> FC -> tanh -> clamped L2 normalization,
//! with analytic gradients for the softmax cross-entropy on the normalized
//! score vector.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::linalg::{axpy, dot, l2_norm, Matrix};
use super::FusionRule;
use crate::error::Error;
use crate::num::Real;

/// Weights of one two-layer branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchParams<F> {
    /// hidden x d_in
    pub w1: Matrix<F>,
    pub b1: Vec<F>,
    /// n x hidden
    pub w2: Matrix<F>,
    pub b2: Vec<F>,
}

impl<F: Real> BranchParams<F> {
    pub fn zeros(d_in: usize, hidden: usize, n: usize) -> Self {
        BranchParams {
            w1: Matrix::zeros(hidden, d_in),
            b1: vec![F::zero(); hidden],
            w2: Matrix::zeros(n, hidden),
            b2: vec![F::zero(); n],
        }
    }

    pub fn zeros_like(&self) -> Self {
        BranchParams {
            w1: Matrix::zeros(self.w1.rows(), self.w1.cols()),
            b1: vec![F::zero(); self.b1.len()],
            w2: Matrix::zeros(self.w2.rows(), self.w2.cols()),
            b2: vec![F::zero(); self.b2.len()],
        }
    }

    pub fn d_in(&self) -> usize {
        self.w1.cols()
    }

    pub fn n_out(&self) -> usize {
        self.w2.rows()
    }

    /// Flat views over all four tensors, in a fixed order.
    pub fn tensors(&self) -> [&[F]; 4] {
        [
            self.w1.as_slice(),
            &self.b1,
            self.w2.as_slice(),
            &self.b2,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [F]; 4] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
        ]
    }

    /// grads scaled accumulate: self += scale * other
    pub fn accumulate(&mut self, other: &Self, scale: F) {
        for (t, o) in self.tensors_mut().into_iter().zip(other.tensors()) {
            axpy(t, o, scale);
        }
    }
}

/// Glorot-uniform layer init (`+-sqrt(6/(fan_in+fan_out))`), zero biases.
pub fn init_branch<F: Real>(
    d_in: usize,
    hidden: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> BranchParams<F> {
    let mut layer = |rows: usize, cols: usize| -> Matrix<F> {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        Matrix::from_fn(rows, cols, |_, _| {
            F::of(rng.gen_range(-bound..bound))
        })
    };
    BranchParams {
        w1: layer(hidden, d_in),
        b1: vec![F::zero(); hidden],
        w2: layer(n, hidden),
        b2: vec![F::zero(); n],
    }
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone)]
pub struct BranchActivations<F> {
    pub x: Vec<F>,
    /// post-ReLU hidden vector
    pub h: Vec<F>,
    /// pre-tanh score vector
    pub u: Vec<F>,
    /// tanh(u)
    pub z: Vec<F>,
    pub z_norm: F,
    /// z / max(||z||, clamp)
    pub y_hat: Vec<F>,
}

pub fn branch_forward<F: Real>(
    x: &[F],
    p: &BranchParams<F>,
    norm_clamp: F,
) -> Result<BranchActivations<F>, Error> {
    if x.len() != p.d_in() {
        return Err(Error::Dimension {
            what: "branch input",
            expected: p.d_in(),
            got: x.len(),
        });
    }
    let mut h = p.w1.matvec(x);
    for (hi, bi) in h.iter_mut().zip(&p.b1) {
        *hi = (*hi + *bi).max(F::zero());
    }
    let mut u = p.w2.matvec(&h);
    for (ui, bi) in u.iter_mut().zip(&p.b2) {
        *ui = *ui + *bi;
    }
    let z: Vec<F> = u.iter().map(|v| v.tanh()).collect();
    let z_norm = l2_norm(&z);
    let denom = z_norm.max(norm_clamp);
    let y_hat = z.iter().map(|v| *v / denom).collect();
    Ok(BranchActivations {
        x: x.to_vec(),
        h,
        u,
        z,
        z_norm,
        y_hat,
    })
}

/// Temperature softmax, numerically shifted by the max score.
pub fn softmax<F: Real>(scores: &[F], tau: F) -> Vec<F> {
    let max = scores
        .iter()
        .copied()
        .fold(F::neg_infinity(), |a, b| a.max(b));
    let exps: Vec<F> = scores.iter().map(|s| ((*s - max) / tau).exp()).collect();
    let sum: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax cross-entropy with temperature on the normalized score vector.
/// Returns the loss and its gradient with respect to the scores.
pub fn ce_loss<F: Real>(y_hat: &[F], true_class: usize, tau: F) -> (F, Vec<F>) {
    debug_assert!(true_class < y_hat.len());
    let probs = softmax(y_hat, tau);
    let eps = F::of(1e-300);
    let loss = -(probs[true_class].max(eps)).ln();
    let grad = probs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let y = if i == true_class { F::one() } else { F::zero() };
            (*p - y) / tau
        })
        .collect();
    (loss, grad)
}

/// Fuse the two branch probability vectors.
pub fn fuse<F: Real>(probs_v: &[F], probs_t: &[F], rule: FusionRule) -> Result<Vec<F>, Error> {
    if probs_v.len() != probs_t.len() {
        return Err(Error::Dimension {
            what: "fusion inputs",
            expected: probs_v.len(),
            got: probs_t.len(),
        });
    }
    Ok(match rule {
        FusionRule::ElementwiseMax => probs_v
            .iter()
            .zip(probs_t)
            .map(|(v, t)| v.max(*t))
            .collect(),
        FusionRule::PeakBranch => {
            let peak = |p: &[F]| p.iter().copied().fold(F::neg_infinity(), |a, b| a.max(b));
            if peak(probs_v) >= peak(probs_t) {
                probs_v.to_vec()
            } else {
                probs_t.to_vec()
            }
        }
    })
}

/// Backpropagate a gradient on `y_hat` through the branch; returns
/// parameter gradients in the same layout as [`BranchParams`].
pub fn branch_backward<F: Real>(
    act: &BranchActivations<F>,
    p: &BranchParams<F>,
    grad_y_hat: &[F],
    norm_clamp: F,
) -> BranchParams<F> {
    let mut grads = p.zeros_like();

    // through y = z / max(||z||, clamp)
    let grad_z: Vec<F> = if act.z_norm > norm_clamp {
        let s = act.z_norm;
        let g_dot_z = dot(grad_y_hat, &act.z);
        act.z
            .iter()
            .zip(grad_y_hat)
            .map(|(zi, gi)| *gi / s - *zi * g_dot_z / (s * s * s))
            .collect()
    } else {
        // denominator treated as the constant clamp
        grad_y_hat.iter().map(|g| *g / norm_clamp).collect()
    };

    // through z = tanh(u)
    let grad_u: Vec<F> = grad_z
        .iter()
        .zip(&act.z)
        .map(|(g, z)| *g * (F::one() - *z * *z))
        .collect();

    grads.w2.add_outer(&grad_u, &act.h, F::one());
    axpy(&mut grads.b2, &grad_u, F::one());

    let grad_h = p.w2.matvec_transpose(&grad_u);
    let grad_pre: Vec<F> = grad_h
        .iter()
        .zip(&act.h)
        .map(|(g, h)| if *h > F::zero() { *g } else { F::zero() })
        .collect();

    grads.w1.add_outer(&grad_pre, &act.x, F::one());
    axpy(&mut grads.b1, &grad_pre, F::one());
    grads
}
