//! Greedy node insertion: sample trial nodes on the sphere, climb `|p|` from each
//! of them, and insert every distinct local maximum with `|p| > alpha` at weight 0.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{ChartPoint, SphereNode};
use crate::loss_dual::DualField;
use crate::network::{ShallowNet, DEFAULT_DEDUP_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InsertionConfig {
    pub n_trial: usize,
    pub ascent_max_iters: usize,
    pub ascent_grad_tol: f64,
    pub dedup_tol: f64,
    pub seed: u64,
}

impl Default for InsertionConfig {
    fn default() -> Self {
        InsertionConfig {
            n_trial: 50,
            ascent_max_iters: 200,
            ascent_grad_tol: 1e-8,
            dedup_tol: DEFAULT_DEDUP_TOL,
            seed: 0,
        }
    }
}

// Armijo parameters of the ascent; the step is a chart-space length along the
// normalized gradient.
const ASCENT_STEP_INIT: f64 = 1.0;
const ASCENT_SHRINK: f64 = 0.5;
const ASCENT_SLOPE: f64 = 1e-4;
const ASCENT_MIN_STEP: f64 = 1e-12;

/// A point on the sphere drawn uniformly, mapped to the chart.
pub(crate) fn uniform_sphere_chart(rng: &mut ChaCha8Rng, dim: usize) -> ChartPoint {
    loop {
        let v: Vec<f64> = (0..=dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let b = v[dim] / norm;
        if b < -1.0 + 1e-9 {
            continue;
        }
        let den = 1.0 + b;
        return ChartPoint::new(v[..dim].iter().map(|a| a / norm / den).collect());
    }
}

/// `n_trial` chart points whose sphere images are i.i.d. uniform on `S^d`.
pub fn sample_trials(cfg: &InsertionConfig, dim: usize) -> Vec<ChartPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_trial)
        .map(|_| uniform_sphere_chart(&mut rng, dim))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AscentResult {
    pub z: ChartPoint,
    /// `|p|` at `z`.
    pub abs_p: f64,
    /// Signed `p` at `z`.
    pub p: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `|p|` after every accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

/// Gradient ascent on `|p|` in chart coordinates with Armijo backtracking.
pub fn ascend_dual(field: &DualField<'_>, z0: &ChartPoint, cfg: &InsertionConfig) -> AscentResult {
    let mut z = z0.z.clone();
    let (mut p, mut grad) = field.chart_value_grad(&z);
    let mut trace = vec![p.abs()];
    let mut step = ASCENT_STEP_INIT;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.ascent_max_iters {
        let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= cfg.ascent_grad_tol {
            converged = true;
            break;
        }
        let sign = if p >= 0.0 { 1.0 } else { -1.0 };
        let dir: Vec<f64> = grad.iter().map(|g| sign * g / gnorm).collect();
        let mut accepted = false;
        while step >= ASCENT_MIN_STEP {
            let trial: Vec<f64> = z.iter().zip(&dir).map(|(zi, di)| zi + step * di).collect();
            let (pt, gt) = field.chart_value_grad(&trial);
            if pt.abs() >= p.abs() + ASCENT_SLOPE * step * gnorm {
                z = trial;
                p = pt;
                grad = gt;
                accepted = true;
                break;
            }
            step *= ASCENT_SHRINK;
        }
        iterations += 1;
        if !accepted {
            // no ascent direction left at machine resolution
            converged = true;
            break;
        }
        trace.push(p.abs());
        step = (step * 2.0).min(ASCENT_STEP_INIT);
    }
    AscentResult {
        z: ChartPoint::new(z),
        abs_p: p.abs(),
        p,
        iterations,
        converged,
        trace,
    }
}

/// Runs [`ascend_dual`] from every start, in parallel, and orders the results by
/// `|p|` descending with ties broken lexicographically on `z`.
pub fn ascend_all(
    field: &DualField<'_>,
    starts: &[ChartPoint],
    cfg: &InsertionConfig,
) -> Vec<AscentResult> {
    let mut results: Vec<AscentResult> = starts
        .par_iter()
        .map(|z0| ascend_dual(field, z0, cfg))
        .collect();
    results.sort_by(|a, b| {
        b.abs_p.total_cmp(&a.abs_p).then_with(|| {
            a.z.z
                .iter()
                .zip(&b.z.z)
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    results
}

/// Appends, with weight 0, every candidate whose `|p|` exceeds `alpha` and which is
/// not within `dedup_tol` of an existing node or of a better candidate.
///
/// Candidates must already be sorted as returned by [`ascend_all`]. Returns the
/// new network and the number of inserted nodes.
pub fn select_and_insert(
    net: &ShallowNet,
    candidates: &[AscentResult],
    alpha: f64,
    dedup_tol: f64,
) -> (ShallowNet, usize) {
    let mut out = net.clone();
    let mut inserted = 0;
    for cand in candidates.iter().filter(|c| c.abs_p > alpha) {
        let node: SphereNode = cand.z.to_sphere();
        if node.b() <= -1.0 + 1e-12 {
            continue;
        }
        if out
            .nodes()
            .iter()
            .any(|n| n.chord_distance(&node) <= dedup_tol)
        {
            continue;
        }
        out.push(node, 0.0)
            .expect("candidate dimension matches the network");
        inserted += 1;
    }
    (out, inserted)
}
