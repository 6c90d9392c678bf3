//! Adam with bias correction over flat parameter tensors.

use crate::num::Real;

#[derive(Debug, Clone, Copy)]
pub struct AdamParams<F> {
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub epsilon: F,
}

impl<F: Real> AdamParams<F> {
    pub fn with_lr(lr: F) -> Self {
        AdamParams {
            lr,
            beta1: F::of(0.9),
            beta2: F::of(0.999),
            epsilon: F::of(1e-8),
        }
    }
}

/// First/second moment estimates, one pair of buffers per tensor.
#[derive(Debug, Clone)]
pub struct AdamState<F> {
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
    t: u64,
}

impl<F: Real> AdamState<F> {
    pub fn for_shapes(shapes: &[usize]) -> Self {
        AdamState {
            m: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update over a parameter/gradient tensor list. Increments the
/// step counter once for the whole list.
pub fn adam_step<F: Real>(
    params: &mut [&mut [F]],
    grads: &[&[F]],
    state: &mut AdamState<F>,
    hp: &AdamParams<F>,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.t += 1;
    let t = state.t as i32;
    let bc1 = F::one() - hp.beta1.powi(t);
    let bc2 = F::one() - hp.beta2.powi(t);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        assert_eq!(p.len(), g.len());
        for i in 0..p.len() {
            m[i] = hp.beta1 * m[i] + (F::one() - hp.beta1) * g[i];
            v[i] = hp.beta2 * v[i] + (F::one() - hp.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] = p[i] - hp.lr * m_hat / (v_hat.sqrt() + hp.epsilon);
        }
    }
}
