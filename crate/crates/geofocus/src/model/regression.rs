//! Coordinate-regression head: FC -> ReLU -> FC(3) -> L2 normalization to
//! a point on the unit sphere, trained by minimizing the great-circle
//! distance to the ground truth.

use rand_chacha::ChaCha8Rng;

use super::linalg::{axpy, dot, l2_norm};
use super::net::init_branch;
use super::BranchParams;
use crate::error::Error;
use crate::geo::{GeoPoint, EARTH_RADIUS_KM};
use crate::num::Real;

/// Same two-layer layout as a branch, with a 3-dimensional output.
pub type RegressionParams<F> = BranchParams<F>;

pub fn init_regression<F: Real>(
    d_in: usize,
    hidden: usize,
    rng: &mut ChaCha8Rng,
) -> RegressionParams<F> {
    init_branch(d_in, hidden, 3, rng)
}

#[derive(Debug, Clone)]
pub struct RegressionActivations<F> {
    pub x: Vec<F>,
    pub h: Vec<F>,
    /// pre-normalization 3-vector
    pub v: [F; 3],
    pub v_norm: F,
    /// unit direction vector
    pub c: [F; 3],
}

impl<F: Real> RegressionActivations<F> {
    pub fn point(&self) -> Result<GeoPoint, Error> {
        GeoPoint::from_unit_vector([
            self.c[0].to_f64_lossy(),
            self.c[1].to_f64_lossy(),
            self.c[2].to_f64_lossy(),
        ])
    }
}

pub fn regression_forward<F: Real>(
    x: &[F],
    p: &RegressionParams<F>,
    norm_clamp: F,
) -> Result<RegressionActivations<F>, Error> {
    if x.len() != p.d_in() {
        return Err(Error::Dimension {
            what: "regression input",
            expected: p.d_in(),
            got: x.len(),
        });
    }
    if p.n_out() != 3 {
        return Err(Error::Dimension {
            what: "regression output",
            expected: 3,
            got: p.n_out(),
        });
    }
    let mut h = p.w1.matvec(x);
    for (hi, bi) in h.iter_mut().zip(&p.b1) {
        *hi = (*hi + *bi).max(F::zero());
    }
    let mut v3 = p.w2.matvec(&h);
    for (vi, bi) in v3.iter_mut().zip(&p.b2) {
        *vi = *vi + *bi;
    }
    let v = [v3[0], v3[1], v3[2]];
    let v_norm = l2_norm(&v);
    let denom = v_norm.max(norm_clamp);
    let c = [v[0] / denom, v[1] / denom, v[2] / denom];
    Ok(RegressionActivations {
        x: x.to_vec(),
        h,
        v,
        v_norm,
        c,
    })
}

fn cross<F: Real>(a: &[F; 3], b: &[F; 3]) -> [F; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Differentiable great-circle distance between two unit 3-vectors:
/// `R * atan2(||c x g||, c . g)` in km, with the gradient with respect to
/// `c`. The gradient is zeroed at the (non-differentiable) coincident and
/// antipodal configurations.
pub fn unit_vector_loss<F: Real>(c: &[F; 3], g: &[F; 3]) -> (F, [F; 3]) {
    let radius = F::of(EARTH_RADIUS_KM);
    let w = cross(c, g);
    let s = l2_norm(&w);
    let t = dot(c, g);
    let theta = s.atan2(t);
    let loss = radius * theta;
    if s < F::of(1e-12) {
        return (loss, [F::zero(); 3]);
    }
    // d theta / dc = (t * (g x w)/s - s * g) / (s^2 + t^2); the
    // denominator is |c|^2 |g|^2 = 1 for unit inputs.
    let gxw = cross(g, &w);
    let denom = s * s + t * t;
    let mut grad = [F::zero(); 3];
    for i in 0..3 {
        grad[i] = radius * (t * gxw[i] / s - s * g[i]) / denom;
    }
    (loss, grad)
}

/// Backpropagate a gradient on the unit vector `c` through the head.
pub fn regression_backward<F: Real>(
    act: &RegressionActivations<F>,
    p: &RegressionParams<F>,
    grad_c: &[F; 3],
    norm_clamp: F,
) -> RegressionParams<F> {
    let mut grads = p.zeros_like();

    let grad_v: Vec<F> = if act.v_norm > norm_clamp {
        let s = act.v_norm;
        let g_dot_v = grad_c[0] * act.v[0] + grad_c[1] * act.v[1] + grad_c[2] * act.v[2];
        (0..3)
            .map(|i| grad_c[i] / s - act.v[i] * g_dot_v / (s * s * s))
            .collect()
    } else {
        grad_c.iter().map(|g| *g / norm_clamp).collect()
    };

    grads.w2.add_outer(&grad_v, &act.h, F::one());
    axpy(&mut grads.b2, &grad_v, F::one());

    let grad_h = p.w2.matvec_transpose(&grad_v);
    let grad_pre: Vec<F> = grad_h
        .iter()
        .zip(&act.h)
        .map(|(g, h)| if *h > F::zero() { *g } else { F::zero() })
        .collect();
    grads.w1.add_outer(&grad_pre, &act.x, F::one());
    axpy(&mut grads.b1, &grad_pre, F::one());
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn unit(v: [f64; 3]) -> [f64; 3] {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    }

    #[test]
    fn loss_zero_at_equal_points() {
        let g = unit([0.3, -0.5, 0.8]);
        let (loss, _) = unit_vector_loss(&g, &g);
        assert!(loss.abs() < 1e-9);
    }

    #[test]
    fn loss_at_antipodes_is_half_circumference() {
        let g = unit([0.3, -0.5, 0.8]);
        let anti = [-g[0], -g[1], -g[2]];
        let (loss, _) = unit_vector_loss(&anti, &g);
        assert_relative_eq!(
            loss,
            std::f64::consts::PI * EARTH_RADIUS_KM,
            max_relative = 1e-9
        );
    }

    #[test]
    fn loss_symmetric_and_zero_iff_equal() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = unit([r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]);
            let b = unit([r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]);
            let (lab, _) = unit_vector_loss(&a, &b);
            let (lba, _) = unit_vector_loss(&b, &a);
            assert_relative_eq!(lab, lba, epsilon = 1e-9);
            if lab < 1e-9 {
                let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
                assert!(d < 1e-6);
            }
        }
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        // gradient wrt the unnormalized direction: perturb c and renormalize
        let mut r = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let c = unit([r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]);
            let g = unit([r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]);
            let (_, grad) = unit_vector_loss(&c, &g);
            let h = 1e-7;
            for i in 0..3 {
                let mut plus = c;
                plus[i] += h;
                let mut minus = c;
                minus[i] -= h;
                // unit_vector_loss is defined on the raw 3-vector; atan2 of
                // cross/dot is scale-invariant, so no renormalization needed
                let fd = (unit_vector_loss(&plus, &g).0 - unit_vector_loss(&minus, &g).0)
                    / (2.0 * h);
                let denom = fd.abs().max(grad[i].abs()).max(1e-6);
                assert!(
                    ((grad[i] - fd) / denom).abs() < 1e-4,
                    "component {i}: analytic {}, fd {fd}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn head_gradients_match_finite_differences() {
        for seed in 0..5u64 {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let (d_in, hidden) = (4, 5);
            let mut p: RegressionParams<f64> = init_regression(d_in, hidden, &mut r);
            let x: Vec<f64> = (0..d_in).map(|_| r.gen_range(-1.0..1.0)).collect();
            let g = unit([r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]);
            let clamp = 1e-12;

            let loss_of = |p: &RegressionParams<f64>| -> f64 {
                let act = regression_forward(&x, p, clamp).unwrap();
                unit_vector_loss(&act.c, &g).0
            };

            let act = regression_forward(&x, &p, clamp).unwrap();
            let (_, grad_c) = unit_vector_loss(&act.c, &g);
            let grads = regression_backward(&act, &p, &grad_c, clamp);
            let analytic: Vec<f64> = grads.tensors().into_iter().flatten().copied().collect();

            let h = 1e-5;
            let mut idx = 0;
            for t in 0..4 {
                let len = p.tensors()[t].len();
                for i in 0..len {
                    let orig = p.tensors()[t][i];
                    p.tensors_mut()[t][i] = orig + h;
                    let up = loss_of(&p);
                    p.tensors_mut()[t][i] = orig - h;
                    let down = loss_of(&p);
                    p.tensors_mut()[t][i] = orig;
                    let fd = (up - down) / (2.0 * h);
                    let a = analytic[idx];
                    let denom = fd.abs().max(a.abs()).max(1e-5);
                    assert!(
                        ((a - fd) / denom).abs() < 1e-4,
                        "seed {seed} tensor {t} index {i}: analytic {a}, fd {fd}"
                    );
                    idx += 1;
                }
            }
        }
    }

    #[test]
    fn degenerate_zero_vector_clamped() {
        let p = RegressionParams::<f64>::zeros(3, 2, 3);
        let act = regression_forward(&[1.0, 2.0, 3.0], &p, 1e-12).unwrap();
        assert!(act.c.iter().all(|v| v.is_finite()));
    }
}
