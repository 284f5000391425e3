//! Dual solver for the I-projection.
//!
//! On the feasible face `S` the posterior has the exponential-family form
//! `q(x) ∝ p(x) exp(λ · f(x))`, and `λ` minimizes the smooth convex dual
//! `log Z(λ) - λ · b`. Its gradient is the constraint residual `E_q[f] - b`
//! and its Hessian the covariance of `f` under `q`.

use nalgebra::{DMatrix, DVector};

use super::feasibility::feasible_face;
use super::{ConstraintSet, LinearConstraint};
use crate::belief::{kl_divergence, FiniteDistribution};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CeOptions {
    /// Bound on the max constraint violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CeOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CeSolution {
    pub posterior: FiniteDistribution,
    /// One per compiled constraint; rows that are constant on the feasible
    /// face get zero.
    pub multipliers: Vec<f64>,
    pub kl_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max absolute constraint violation of `posterior`.
    pub residual: f64,
}

/// Minimum cross-entropy update of `prior` subject to `constraints`.
pub fn ce_update(
    prior: &FiniteDistribution,
    constraints: &ConstraintSet,
    opts: CeOptions,
) -> Result<CeSolution> {
    if constraints.space() != prior.space() {
        return Err(Error::SpaceMismatch);
    }
    let rows = constraints.compile();
    let probs = prior.probs();
    let support: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
    let face = feasible_face(&support, &rows)?;

    // Rows constant on the face carry no information once feasibility holds.
    let active: Vec<usize> = (0..rows.len())
        .filter(|&k| {
            let c0 = rows[k].coeffs()[face[0]];
            face.iter().any(|&j| rows[k].coeffs()[j] != c0)
        })
        .collect();

    let dual = Dual::new(probs, &face, &rows, &active);
    let (lambda, iterations) = match active.len() {
        0 => (Vec::new(), 0),
        1 => dual.solve_scalar(opts)?,
        _ => dual.solve_newton(opts)?,
    };

    let q_face = dual.posterior(&lambda);
    let mut q = vec![0.0; probs.len()];
    for (&j, &v) in face.iter().zip(&q_face) {
        q[j] = v;
    }
    let residual = max_violation(&rows, &q);
    if !(residual < opts.tol) {
        return Err(Error::NotConverged { iterations, residual });
    }

    let mut multipliers = vec![0.0; rows.len()];
    for (&k, &l) in active.iter().zip(&lambda) {
        multipliers[k] = l;
    }
    let posterior = FiniteDistribution::new(prior.space().clone(), q)?;
    let kl_value = kl_divergence(&posterior, prior)?;
    Ok(CeSolution { posterior, multipliers, kl_value, iterations, converged: true, residual })
}

fn max_violation(rows: &[LinearConstraint], q: &[f64]) -> f64 {
    rows.iter().map(|r| (r.evaluate(q) - r.rhs()).abs()).fold(0.0, f64::max)
}

struct Dual {
    log_prior: Vec<f64>,
    /// features[x][k]
    features: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

struct DualPoint {
    value: f64,
    q: Vec<f64>,
    grad: Vec<f64>,
}

impl Dual {
    fn new(probs: &[f64], face: &[usize], rows: &[LinearConstraint], active: &[usize]) -> Self {
        Self {
            log_prior: face.iter().map(|&j| probs[j].ln()).collect(),
            features: face
                .iter()
                .map(|&j| active.iter().map(|&k| rows[k].coeffs()[j]).collect())
                .collect(),
            rhs: active.iter().map(|&k| rows[k].rhs()).collect(),
        }
    }

    fn dim(&self) -> usize {
        self.rhs.len()
    }

    fn posterior(&self, lambda: &[f64]) -> Vec<f64> {
        self.eval(lambda).q
    }

    fn eval(&self, lambda: &[f64]) -> DualPoint {
        let logits: Vec<f64> = self
            .log_prior
            .iter()
            .zip(&self.features)
            .map(|(lp, f)| lp + f.iter().zip(lambda).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = weights.iter().sum();
        let q: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let log_z = max + z.ln();

        let mut grad = vec![0.0; self.dim()];
        for (qx, f) in q.iter().zip(&self.features) {
            for (g, fk) in grad.iter_mut().zip(f) {
                *g += qx * fk;
            }
        }
        for (g, b) in grad.iter_mut().zip(&self.rhs) {
            *g -= b;
        }
        let value = log_z - lambda.iter().zip(&self.rhs).map(|(l, b)| l * b).sum::<f64>();
        DualPoint { value, q, grad }
    }

    fn hessian(&self, q: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        let mean: Vec<f64> = (0..m)
            .map(|k| q.iter().zip(&self.features).map(|(qx, f)| qx * f[k]).sum())
            .collect();
        let mut h = DMatrix::zeros(m, m);
        for (qx, f) in q.iter().zip(&self.features) {
            for i in 0..m {
                let di = f[i] - mean[i];
                for j in 0..m {
                    h[(i, j)] += qx * di * (f[j] - mean[j]);
                }
            }
        }
        h
    }

    /// Damped Newton with Armijo backtracking. Rank-deficient Hessians (e.g.
    /// partition constraints whose rows sum to the constant 1) are handled
    /// with an SVD least-squares step.
    fn solve_newton(&self, opts: CeOptions) -> Result<(Vec<f64>, usize)> {
        let m = self.dim();
        let mut lambda = vec![0.0; m];
        let mut point = self.eval(&lambda);
        for iter in 0..opts.max_iter {
            let residual = point.grad.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
            if residual < opts.tol {
                return Ok((lambda, iter));
            }
            let h = self.hessian(&point.q);
            let g = DVector::from_column_slice(&point.grad);
            let svd = h.svd(true, true);
            let cutoff = 1e-13 * svd.singular_values.max().max(f64::MIN_POSITIVE);
            let mut step = match svd.solve(&(-&g), cutoff) {
                Ok(d) if d.iter().all(|x| x.is_finite()) => d,
                _ => -g.clone(),
            };
            let mut slope = g.dot(&step);
            if slope >= 0.0 {
                step = -g.clone();
                slope = -g.norm_squared();
            }

            let mut t = 1.0;
            let mut next = None;
            let grad_norm = g.norm();
            for _ in 0..60 {
                let trial: Vec<f64> = lambda.iter().zip(step.iter()).map(|(l, d)| l + t * d).collect();
                let cand = self.eval(&trial);
                // Close to the optimum the dual decrease drops below the
                // resolution of its value; the gradient norm still shows progress.
                let armijo = cand.value <= point.value + 1e-4 * t * slope;
                let cand_norm = cand.grad.iter().map(|x| x * x).sum::<f64>().sqrt();
                if cand.value.is_finite() && (armijo || cand_norm < 0.5 * grad_norm) {
                    next = Some((trial, cand));
                    break;
                }
                t *= 0.5;
            }
            match next {
                Some((l, p)) => {
                    lambda = l;
                    point = p;
                }
                // No measurable decrease left: the dual is flat to machine precision.
                None => {
                    return Err(Error::NotConverged { iterations: iter + 1, residual });
                }
            }
        }
        let residual = point.grad.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
        if residual < opts.tol {
            Ok((lambda, opts.max_iter))
        } else {
            Err(Error::NotConverged { iterations: opts.max_iter, residual })
        }
    }

    /// One active constraint: the dual gradient is monotone in the single
    /// multiplier, so bracket the root and refine with Newton steps that
    /// fall back to bisection when they leave the bracket.
    fn solve_scalar(&self, opts: CeOptions) -> Result<(Vec<f64>, usize)> {
        let grad = |l: f64| self.eval(&[l]).grad[0];
        let mut iterations = 0;

        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        while grad(lo) > 0.0 {
            hi = lo;
            lo *= 2.0;
            iterations += 1;
            if lo < -1e6 {
                return Err(Error::NotConverged { iterations, residual: grad(lo).abs() });
            }
        }
        while grad(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            iterations += 1;
            if hi > 1e6 {
                return Err(Error::NotConverged { iterations, residual: grad(hi).abs() });
            }
        }

        let mut x = 0.0_f64.clamp(lo, hi);
        for _ in 0..opts.max_iter {
            iterations += 1;
            let point = self.eval(&[x]);
            let g = point.grad[0];
            if g.abs() < opts.tol {
                return Ok((vec![x], iterations));
            }
            if g < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let var = self.hessian(&point.q)[(0, 0)];
            let newton = x - g / var;
            x = if var > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo < f64::EPSILON * (1.0 + x.abs()) {
                break;
            }
        }
        let residual = grad(x).abs();
        if residual < opts.tol {
            Ok((vec![x], iterations))
        } else {
            Err(Error::NotConverged { iterations, residual })
        }
    }
}
