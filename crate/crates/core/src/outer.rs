//! Outer-weight solvers at fixed nodes.
//!
//! The objective `J(c) = l(c) + alpha sum_n phi(|c_n|)` is split as
//! `F(c) + alpha |c|_1` with the smooth part
//! `F(c) = l(c) + alpha sum_n [phi(|c_n|) - |c_n|]`
//! (smooth because `phi'(0) = 1`). [`prox_grad_outer`] runs proximal gradient on
//! that split; [`ssn_outer`] solves the normal-map equation
//!
//! ```text
//! R(q) = grad F(P(q)) + (alpha / lambda) (q - P(q)) = 0,   c = P(q),
//! ```
//!
//! where `P` is soft-thresholding at `lambda`, with a semi-smooth Newton method.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss_dual::design_matrix;
use crate::network::ShallowNet;
use crate::penalty::{shrink, Penalty};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuterSolveConfig {
    /// Iteration cap of the proximal gradient solver.
    pub max_iters: usize,
    pub prox_step_init: f64,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
    /// Absolute stopping tolerance on the normal-map (resp. prox-gradient) residual.
    pub normal_map_tol: f64,
    /// Additional stopping tolerance relative to `alpha`; the effective
    /// tolerance is `min(normal_map_tol, relative_tol * alpha)`.
    pub relative_tol: f64,
    pub newton_max_iters: usize,
    /// Normal-map parameter; defaults to `min(1, 0.5 / gamma)`.
    pub lambda: Option<f64>,
}

impl Default for OuterSolveConfig {
    fn default() -> Self {
        OuterSolveConfig {
            max_iters: 20_000,
            prox_step_init: 1.0,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
            normal_map_tol: 1e-10,
            relative_tol: 1e-7,
            newton_max_iters: 200,
            lambda: None,
        }
    }
}

impl OuterSolveConfig {
    fn tolerance(&self, alpha: f64) -> f64 {
        self.normal_map_tol.min(self.relative_tol * alpha)
    }

    pub fn lambda_for(&self, penalty: &Penalty) -> f64 {
        self.lambda.unwrap_or_else(|| {
            let g = penalty.curvature();
            if g > 0.0 {
                (0.5 / g).min(1.0)
            } else {
                1.0
            }
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OuterDiagnostics {
    pub iterations: usize,
    /// Final residual (max norm): normal map for the Newton solver, prox-gradient
    /// mapping for the first-order solver.
    pub residual: f64,
    pub support: usize,
    pub objective: f64,
    pub converged: bool,
    /// Newton iterations that fell back to a proximal gradient step.
    pub fallbacks: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuterSolution {
    pub c: Vec<f64>,
    pub diagnostics: OuterDiagnostics,
}

/// Loss, gradient and curvature of `J` in the outer weights for fixed nodes.
pub(crate) struct OuterProblem<'a> {
    a: DMatrix<f64>,
    y: DVector<f64>,
    penalty: &'a Penalty,
    alpha: f64,
}

impl<'a> OuterProblem<'a> {
    pub(crate) fn new(a: DMatrix<f64>, data: &Dataset, penalty: &'a Penalty, alpha: f64) -> Self {
        OuterProblem {
            a,
            y: DVector::from_column_slice(data.ys()),
            penalty,
            alpha,
        }
    }

    fn inv_k(&self) -> f64 {
        1.0 / self.y.len() as f64
    }

    fn residual(&self, c: &[f64]) -> DVector<f64> {
        &self.a * DVector::from_column_slice(c) - &self.y
    }

    pub(crate) fn loss(&self, c: &[f64]) -> f64 {
        0.5 * self.inv_k() * self.residual(c).norm_squared()
    }

    pub(crate) fn objective(&self, c: &[f64]) -> f64 {
        self.loss(c) + self.alpha * self.penalty.total(c)
    }

    /// `F(c)`.
    pub(crate) fn smooth_value(&self, c: &[f64]) -> f64 {
        let bracket: f64 = c
            .iter()
            .map(|v| self.penalty.phi(v.abs()) - v.abs())
            .sum();
        self.loss(c) + self.alpha * bracket
    }

    /// `grad F(c)`.
    pub(crate) fn smooth_grad(&self, c: &[f64]) -> Vec<f64> {
        let r = self.residual(c);
        let lg = self.a.tr_mul(&r) * self.inv_k();
        lg.iter()
            .zip(c)
            .map(|(g, &cn)| {
                if cn == 0.0 {
                    *g
                } else {
                    g + self.alpha * (self.penalty.dphi(cn.abs()) - 1.0) * cn.signum()
                }
            })
            .collect()
    }

    fn gram(&self) -> DMatrix<f64> {
        self.a.transpose() * &self.a * self.inv_k()
    }
}

fn check_dims(net: &ShallowNet, data: &Dataset) -> Result<()> {
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: net.dim(),
        });
    }
    Ok(())
}

/// `grad F(c) = grad l(c) + alpha (phi'(|c_n|) - 1) sign(c_n)` at the nodes of `net`.
pub fn smooth_part_grad(
    net: &ShallowNet,
    data: &Dataset,
    penalty: &Penalty,
    alpha: f64,
    c: &[f64],
) -> Result<Vec<f64>> {
    check_dims(net, data)?;
    if c.len() != net.width() {
        return Err(Error::DimensionMismatch {
            expected: net.width(),
            got: c.len(),
        });
    }
    let prob = OuterProblem::new(design_matrix(net.nodes(), data), data, penalty, alpha);
    Ok(prob.smooth_grad(c))
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// One backtracked proximal gradient step on `F + alpha |.|_1`.
///
/// Returns the new point and the accepted step, or `None` on step underflow.
pub(crate) fn prox_grad_step(
    prob: &OuterProblem<'_>,
    c: &[f64],
    grad: &[f64],
    step: f64,
    shrink_factor: f64,
) -> Option<(Vec<f64>, f64)> {
    let f0 = prob.smooth_value(c);
    let mut s = step;
    while s > 1e-300 {
        let cand: Vec<f64> = c
            .iter()
            .zip(grad)
            .map(|(ci, gi)| shrink(prob.alpha * s, ci - s * gi))
            .collect();
        let mut lin = 0.0;
        let mut sq = 0.0;
        for ((u, v), g) in cand.iter().zip(c).zip(grad) {
            lin += g * (u - v);
            sq += (u - v) * (u - v);
        }
        // the slack absorbs rounding in F, which otherwise drives s to zero near
        // the solution
        if prob.smooth_value(&cand) <= f0 + lin + sq / (2.0 * s) + 4.0 * f64::EPSILON * f0.abs() {
            return Some((cand, s));
        }
        s *= shrink_factor;
    }
    None
}

pub(crate) fn prox_grad_solve(
    prob: &OuterProblem<'_>,
    c0: &[f64],
    cfg: &OuterSolveConfig,
) -> OuterSolution {
    let tol = cfg.tolerance(prob.alpha);
    let mut c = c0.to_vec();
    let mut step = cfg.prox_step_init;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let grad = prob.smooth_grad(&c);
        let Some((next, s)) = prox_grad_step(prob, &c, &grad, step, cfg.armijo_shrink) else {
            break;
        };
        iterations += 1;
        residual = max_abs(next.iter().zip(&c).map(|(u, v)| (u - v) / s));
        c = next;
        if residual <= tol {
            converged = true;
            break;
        }
        step = s * 2.0;
    }
    let support = c.iter().filter(|v| **v != 0.0).count();
    OuterSolution {
        diagnostics: OuterDiagnostics {
            iterations,
            residual,
            support,
            objective: prob.objective(&c),
            converged,
            fallbacks: 0,
        },
        c,
    }
}

/// Proximal gradient descent on the outer weights of `net`, warm-started at its weights.
pub fn prox_grad_outer(
    net: &ShallowNet,
    data: &Dataset,
    penalty: &Penalty,
    alpha: f64,
    cfg: &OuterSolveConfig,
) -> Result<OuterSolution> {
    check_dims(net, data)?;
    let prob = OuterProblem::new(design_matrix(net.nodes(), data), data, penalty, alpha);
    Ok(prox_grad_solve(&prob, net.weights(), cfg))
}

struct NormalMap {
    c: Vec<f64>,
    r: Vec<f64>,
    norm: f64,
}

fn normal_map(prob: &OuterProblem<'_>, q: &[f64], lambda: f64) -> NormalMap {
    let c: Vec<f64> = q.iter().map(|&v| shrink(lambda, v)).collect();
    let g = prob.smooth_grad(&c);
    let scale = prob.alpha / lambda;
    let r: Vec<f64> = g
        .iter()
        .zip(q.iter().zip(&c))
        .map(|(gi, (qi, ci))| gi + scale * (qi - ci))
        .collect();
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    NormalMap { c, r, norm }
}

/// Solves `H x = rhs` for the symmetric active block, shifting `H` when it is not
/// positive definite.
fn solve_active(h: DMatrix<f64>, gram_block: &DMatrix<f64>, rhs: DVector<f64>, shift_hint: f64) -> DVector<f64> {
    if let Some(ch) = h.clone().cholesky() {
        return ch.solve(&rhs);
    }
    let sigma_min = SymmetricEigen::new(gram_block.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut shift = (shift_hint - sigma_min).max(0.0) + 1e-12;
    let n = h.nrows();
    loop {
        let shifted = &h + DMatrix::<f64>::identity(n, n) * shift;
        if let Some(ch) = shifted.cholesky() {
            return ch.solve(&rhs);
        }
        shift *= 10.0;
    }
}

/// Smallest `t > 0` at which an active `q_i + t delta_i` reaches `|.| = lambda`.
fn first_breakpoint(q: &[f64], delta: &[f64], active: &[usize], lambda: f64) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for &i in active {
        let (qi, di) = (q[i], delta[i]);
        if qi * di >= 0.0 {
            continue;
        }
        let t = (qi.abs() - lambda) / di.abs();
        if t > 0.0 && best.is_none_or(|(b, _)| t < b) {
            best = Some((t, i));
        }
    }
    best
}

const LM_NU_MIN: f64 = 1e-4;
const LM_RETRIES: usize = 12;

/// A `q` with `P(q) = c` whose inactive entries zero the normal map where possible.
fn lift(prob: &OuterProblem<'_>, c: &[f64], lambda: f64) -> Vec<f64> {
    let g = prob.smooth_grad(c);
    c.iter()
        .zip(&g)
        .map(|(&ci, gi)| {
            if ci == 0.0 {
                (-(lambda / prob.alpha) * gi).clamp(-lambda, lambda)
            } else {
                ci + lambda * ci.signum()
            }
        })
        .collect()
}

pub(crate) fn ssn_solve(
    prob: &OuterProblem<'_>,
    c0: &[f64],
    cfg: &OuterSolveConfig,
    lambda: f64,
) -> OuterSolution {
    let n = c0.len();
    let tol = cfg.tolerance(prob.alpha);
    let alpha = prob.alpha;
    let curvature = prob.penalty.curvature();
    let gram = prob.gram();

    let mut q = lift(prob, c0, lambda);
    let mut state = normal_map(prob, &q, lambda);
    let mut iterations = 0;
    let mut fallbacks = 0;
    let mut consecutive_fallbacks = 0;
    let mut converged = false;
    let mut lm_nu = LM_NU_MIN;

    while iterations < cfg.newton_max_iters {
        if max_abs(state.r.iter().copied()) <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        // Generalized Jacobian M = H D + (alpha / lambda)(I - D) with D the active
        // indicator: solve the active block first, then back-substitute. The active
        // block carries a Levenberg-Marquardt term nu |R|^2, which keeps steps
        // bounded when features are (nearly) collinear on the data and vanishes
        // at the solution; nu grows whenever the line search fails.
        //
        // A step is a Newton step if it reduces |R| without increasing J. The
        // residual alone is a poor merit where the penalty curvature makes the
        // active Hessian indefinite, so a step that only decreases J is kept as a
        // descent step, and a proximal gradient step is the last resort.
        let active: Vec<usize> = (0..n).filter(|&i| q[i].abs() > lambda).collect();
        let m = active.len();
        let gram_block = DMatrix::from_fn(m, m, |i, j| gram[(active[i], active[j])]);
        let j_now = prob.objective(&state.c);
        let j_slack = 1e-13 * j_now.abs().max(f64::MIN_POSITIVE);
        let mut accepted = None;
        let mut descent = None;
        let mut nu = lm_nu;
        for _ in 0..LM_RETRIES {
            let mu = nu * state.norm * state.norm;
            let mut delta = vec![0.0; n];
            if m > 0 {
                let mut h = gram_block.clone();
                for (i, &ai) in active.iter().enumerate() {
                    h[(i, i)] += alpha * prob.penalty.second_derivative(state.c[ai].abs()) + mu;
                }
                let rhs = DVector::from_iterator(m, active.iter().map(|&ai| -state.r[ai]));
                let sol = solve_active(h, &gram_block, rhs, alpha * curvature);
                for (i, &ai) in active.iter().enumerate() {
                    delta[ai] = sol[i];
                }
            }
            for i in 0..n {
                if q[i].abs() <= lambda {
                    let coupling: f64 = active.iter().map(|&j| gram[(i, j)] * delta[j]).sum();
                    delta[i] = -(lambda / alpha) * (state.r[i] + coupling);
                }
            }
            let slope: f64 = active.iter().map(|&i| state.r[i] * delta[i]).sum();
            // On (nearly) dependent features the step runs along a flat valley
            // of |R| that only ends where an active coordinate leaves the
            // active set, so try that breakpoint exactly.
            if let Some((tb, ib)) = first_breakpoint(&q, &delta, &active, lambda) {
                let mut trial: Vec<f64> = q.iter().zip(&delta).map(|(qi, di)| qi + tb * di).collect();
                trial[ib] = lambda.copysign(q[ib]);
                let st = normal_map(prob, &trial, lambda);
                let jt = prob.objective(&st.c);
                if st.norm < state.norm && jt <= j_now + j_slack {
                    accepted = Some((trial, st));
                } else if descent.is_none() && jt < j_now - j_slack {
                    descent = Some((trial, st));
                }
            }
            if accepted.is_some() {
                lm_nu = (nu * 0.1).max(LM_NU_MIN);
                break;
            }
            let mut t = 1.0;
            while t >= 1e-6 {
                let trial: Vec<f64> = q.iter().zip(&delta).map(|(qi, di)| qi + t * di).collect();
                let st = normal_map(prob, &trial, lambda);
                let jt = prob.objective(&st.c);
                if st.norm < (1.0 - cfg.armijo_slope * t) * state.norm && jt <= j_now + j_slack {
                    accepted = Some((trial, st));
                    break;
                }
                if descent.is_none() && jt < j_now + cfg.armijo_slope * t * slope.min(0.0) - j_slack {
                    descent = Some((trial, st));
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                lm_nu = (nu * 0.1).max(LM_NU_MIN);
                break;
            }
            nu *= 10.0;
        }
        if let Some((trial, st)) = accepted {
            q = trial;
            state = st;
            consecutive_fallbacks = 0;
            continue;
        }
        fallbacks += 1;
        consecutive_fallbacks += 1;
        if let Some((trial, st)) = descent {
            q = trial;
            state = st;
            continue;
        }
        if consecutive_fallbacks > 50 {
            break;
        }
        let grad = prob.smooth_grad(&state.c);
        match prox_grad_step(prob, &state.c, &grad, cfg.prox_step_init, cfg.armijo_shrink) {
            Some((c_next, _)) if prob.objective(&c_next) < j_now => {
                q = lift(prob, &c_next, lambda);
                state = normal_map(prob, &q, lambda);
            }
            _ => break,
        }
    }
    let residual = max_abs(state.r.iter().copied());
    if residual <= tol {
        converged = true;
    }
    let c = state.c;
    OuterSolution {
        diagnostics: OuterDiagnostics {
            iterations,
            residual,
            support: c.iter().filter(|v| **v != 0.0).count(),
            objective: prob.objective(&c),
            converged,
            fallbacks,
        },
        c,
    }
}

/// Semi-smooth Newton on the normal map, warm-started at the weights of `net`.
///
/// The returned weights are `P(q*)` and therefore contain exact zeros.
pub fn ssn_outer(
    net: &ShallowNet,
    data: &Dataset,
    penalty: &Penalty,
    alpha: f64,
    cfg: &OuterSolveConfig,
) -> Result<OuterSolution> {
    check_dims(net, data)?;
    let lambda = cfg.lambda_for(penalty);
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("normal-map lambda must be positive, got {lambda}")));
    }
    let lg = lambda * penalty.curvature();
    if lg >= 1.0 {
        return Err(Error::NonUniqueProx(lg));
    }
    let prob = OuterProblem::new(design_matrix(net.nodes(), data), data, penalty, alpha);
    Ok(ssn_solve(&prob, net.weights(), cfg, lambda))
}
