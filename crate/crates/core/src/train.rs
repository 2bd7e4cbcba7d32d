//! Joint training of nodes and weights, and the insertion/training/pruning loop.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis::{check_stationarity_with, StationarityOptions, StationarityReport};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{chart_feature_grad, ChartPoint};
use crate::insertion::{ascend_all, sample_trials, select_and_insert, InsertionConfig};
use crate::loss_dual::{loss_value, DualField};
use crate::network::ShallowNet;
use crate::outer::{prox_grad_step, ssn_solve, OuterDiagnostics, OuterProblem, OuterSolveConfig};
use crate::penalty::Penalty;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JointConfig {
    pub epochs: usize,
    /// Initial step of the outer-weight proximal gradient step.
    pub step_init: f64,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
    /// Stop once an epoch decreases `J` by less than this fraction.
    pub rel_tol: f64,
    /// Cap on the chart-space length of a single node move.
    pub max_node_move: f64,
}

impl Default for JointConfig {
    fn default() -> Self {
        JointConfig {
            epochs: 200,
            step_init: 1.0,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
            rel_tol: 1e-12,
            max_node_move: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointDiagnostics {
    pub epochs: usize,
    pub objective_start: f64,
    pub objective_end: f64,
    /// Stopped because the relative decrease fell below the tolerance.
    pub converged: bool,
    /// Neither block could make progress.
    pub step_underflow: bool,
}

/// Features and chart gradients of all nodes at all data points.
struct Features {
    /// K x N.
    s: DMatrix<f64>,
    /// `ds[n][k * d + j] = d s_{kn} / d z_{n j}`.
    ds: Vec<Vec<f64>>,
}

fn features(zs: &[Vec<f64>], data: &Dataset) -> Features {
    let k = data.len();
    let d = data.dim();
    let mut s = DMatrix::zeros(k, zs.len());
    let mut ds = Vec::with_capacity(zs.len());
    for (n, z) in zs.iter().enumerate() {
        let mut g = vec![0.0; k * d];
        for (i, x) in data.xs().enumerate() {
            s[(i, n)] = chart_feature_grad(z, x, &mut g[i * d..(i + 1) * d]);
        }
        ds.push(g);
    }
    Features { s, ds }
}

fn feature_matrix(zs: &[Vec<f64>], data: &Dataset) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(data.len(), zs.len());
    let mut scratch = vec![0.0; data.dim()];
    for (n, z) in zs.iter().enumerate() {
        for (i, x) in data.xs().enumerate() {
            s[(i, n)] = chart_feature_grad(z, x, &mut scratch);
        }
    }
    s
}

fn objective_at(s: &DMatrix<f64>, c: &[f64], data: &Dataset, penalty: &Penalty, alpha: f64) -> f64 {
    let r = s * DVector::from_column_slice(c) - DVector::from_column_slice(data.ys());
    0.5 * r.norm_squared() / data.len() as f64 + alpha * penalty.total(c)
}

/// Nodes whose pre-activation vanishes (to roundoff) at some data point.
fn kink_pinned(zs: &[Vec<f64>], data: &Dataset) -> Vec<bool> {
    zs.iter()
        .map(|z| {
            let zz: f64 = z.iter().map(|v| v * v).sum();
            data.xs().any(|x| {
                let zx: f64 = z.iter().zip(x).map(|(u, v)| u * v).sum();
                let pre = (2.0 * zx + 1.0 - zz) / (1.0 + zz);
                pre.abs() <= 1e-9
            })
        })
        .collect()
}

/// Marquardt damping carried across epochs.
struct Damping {
    free: f64,
    pinned: f64,
    /// Epochs left in which the unrestricted step is skipped.
    skip_free: usize,
}

/// Damped Gauss-Newton step in the chart coordinates and weights of the nodes
/// with nonzero weight. On success returns the new coordinates, weights and
/// objective.
///
/// A node whose kink passes through a data point can sit at a corner of `J`
/// where no joint step descends; if the full step fails, it is retried with
/// such nodes held in place, and the next few epochs go straight to the
/// restricted step.
#[allow(clippy::too_many_arguments)]
fn lm_step(
    zs: &[Vec<f64>],
    c: &[f64],
    feats: &Features,
    data: &Dataset,
    penalty: &Penalty,
    alpha: f64,
    j: f64,
    damping: &mut Damping,
    cfg: &JointConfig,
) -> Option<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    let d = data.dim();
    let k = data.len();
    let inv_k = 1.0 / k as f64;
    let active: Vec<usize> = (0..c.len()).filter(|&n| c[n] != 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let m = active.len() * (d + 1);
    // columns: for each active node, d chart directions then its weight
    let mut jac = DMatrix::zeros(k, m);
    for (a, &n) in active.iter().enumerate() {
        let col = a * (d + 1);
        let dsn = &feats.ds[n];
        for i in 0..k {
            for q in 0..d {
                jac[(i, col + q)] = c[n] * dsn[i * d + q];
            }
            jac[(i, col + d)] = feats.s[(i, n)];
        }
    }
    let r = &feats.s * DVector::from_column_slice(c) - DVector::from_column_slice(data.ys());
    let mut g = jac.tr_mul(&r) * inv_k;
    let mut h = jac.transpose() * &jac * inv_k;
    drop(jac);
    for (a, &n) in active.iter().enumerate() {
        let idx = a * (d + 1) + d;
        let z = c[n].abs();
        g[idx] += alpha * penalty.dphi(z) * c[n].signum();
        h[(idx, idx)] += alpha * penalty.second_derivative(z);
    }

    let attempt = |h: &DMatrix<f64>, g: &DVector<f64>, mu: &mut f64| {
        let scale: Vec<f64> = (0..m).map(|i| h[(i, i)].abs().max(1e-300)).collect();
        for _ in 0..12 {
            let mut sys = h.clone();
            for i in 0..m {
                sys[(i, i)] += *mu * scale[i] + 1e-14 * scale[i];
            }
            let Some(ch) = sys.cholesky() else {
                *mu *= 10.0;
                continue;
            };
            let step = ch.solve(&(-g));
            let mut zn = zs.to_vec();
            let mut cn = c.to_vec();
            for (a, &n) in active.iter().enumerate() {
                let col = a * (d + 1);
                let mut dz: Vec<f64> = (0..d).map(|q| step[col + q]).collect();
                let len = dz.iter().map(|v| v * v).sum::<f64>().sqrt();
                if len > cfg.max_node_move {
                    dz.iter_mut().for_each(|v| *v *= cfg.max_node_move / len);
                }
                zn[n].iter_mut().zip(&dz).for_each(|(z, v)| *z += v);
                let next = c[n] + step[col + d];
                // a weight that would change sign stops at zero
                cn[n] = if next * c[n] <= 0.0 { 0.0 } else { next };
            }
            let jt = objective_at(&feature_matrix(&zn, data), &cn, data, penalty, alpha);
            if jt < j {
                *mu = (*mu / 3.0).max(1e-12);
                return Some((zn, cn, jt));
            }
            *mu *= 4.0;
            if *mu > 1e12 {
                break;
            }
        }
        *mu = mu.min(1e6);
        None
    };

    if damping.skip_free == 0 {
        if let Some(found) = attempt(&h, &g, &mut damping.free) {
            return Some(found);
        }
    } else {
        damping.skip_free -= 1;
    }
    let pinned = kink_pinned(zs, data);
    if !active.iter().any(|&n| pinned[n]) {
        damping.skip_free = 0;
        return None;
    }
    for (a, &n) in active.iter().enumerate() {
        if pinned[n] {
            for q in a * (d + 1)..a * (d + 1) + d {
                h.row_mut(q).fill(0.0);
                h.column_mut(q).fill(0.0);
                h[(q, q)] = 1.0;
                g[q] = 0.0;
            }
        }
    }
    let found = attempt(&h, &g, &mut damping.pinned);
    if found.is_some() && damping.skip_free == 0 {
        damping.skip_free = 8;
    }
    found
}

/// Alternating local training of the objective in all weights.
///
/// Each epoch takes one backtracked proximal gradient step in the outer weights
/// (soft-thresholding on the `l1` split of the penalty) and one damped
/// Gauss-Newton step jointly in the chart coordinates and nonzero weights of
/// all nodes. Both steps are accepted only if they decrease `J`, so the
/// objective is nonincreasing.
pub fn train_joint(
    net: &ShallowNet,
    data: &Dataset,
    penalty: &Penalty,
    alpha: f64,
    cfg: &JointConfig,
) -> Result<(ShallowNet, JointDiagnostics)> {
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: net.dim(),
        });
    }
    let d = data.dim();
    let mut zs: Vec<Vec<f64>> = net
        .nodes()
        .iter()
        .map(|n| n.to_chart().map(|c| c.z))
        .collect::<Result<_>>()?;
    let z_start = zs.clone();
    let mut c = net.weights().to_vec();

    let mut feats = features(&zs, data);
    let mut j = objective_at(&feats.s, &c, data, penalty, alpha);
    let mut diag = JointDiagnostics {
        objective_start: j,
        objective_end: j,
        ..Default::default()
    };
    if net.is_empty() {
        diag.converged = true;
        return Ok((net.clone(), diag));
    }
    let mut c_step = cfg.step_init;
    let mut damping = Damping {
        free: 1e-3,
        pinned: 1e-3,
        skip_free: 0,
    };

    for _ in 0..cfg.epochs {
        diag.epochs += 1;
        let j_epoch = j;
        let mut progressed = false;

        // outer weights
        {
            let prob = OuterProblem::new(feats.s.clone(), data, penalty, alpha);
            let grad = prob.smooth_grad(&c);
            if let Some((next, s)) = prox_grad_step(&prob, &c, &grad, c_step, cfg.armijo_shrink) {
                let jn = prob.objective(&next);
                if jn < j {
                    c = next;
                    j = jn;
                    progressed = true;
                }
                c_step = (2.0 * s).min(1e12);
            }
        }

        // nodes and nonzero weights together
        let step = lm_step(&zs, &c, &feats, data, penalty, alpha, j, &mut damping, cfg);
        if let Some((zn, cn, jn)) = step {
            zs = zn;
            c = cn;
            j = jn;
            progressed = true;
            feats = features(&zs, data);
        }

        if !progressed {
            diag.step_underflow = true;
            break;
        }
        if j_epoch - j <= cfg.rel_tol * j_epoch.abs() {
            diag.converged = true;
            break;
        }
    }
    diag.objective_end = j;
    // nodes that never moved keep their exact coordinates
    let nodes = zs
        .into_iter()
        .zip(&z_start)
        .zip(net.nodes())
        .map(|((z, z0), orig)| if &z == z0 { orig.clone() } else { ChartPoint::new(z).to_sphere() })
        .collect();
    Ok((ShallowNet::new(d, nodes, c)?, diag))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgorithmConfig {
    pub alpha: f64,
    pub penalty: Penalty,
    /// Number of insertion/training rounds.
    pub iterations: usize,
    pub insertion: InsertionConfig,
    pub outer: OuterSolveConfig,
    pub joint: JointConfig,
    pub seed: u64,
    /// Sphere samples of the final stationarity check (0 disables it).
    pub stationarity_samples: usize,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            alpha: 1e-5,
            penalty: Penalty::L1,
            iterations: 15,
            insertion: InsertionConfig::default(),
            outer: OuterSolveConfig::default(),
            joint: JointConfig::default(),
            seed: 0,
            stationarity_samples: 10_000,
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        let lambda = self.outer.lambda_for(&self.penalty);
        if lambda * self.penalty.curvature() >= 1.0 {
            return Err(Error::NonUniqueProx(lambda * self.penalty.curvature()));
        }
        Ok(())
    }

    /// Seed of the trial nodes in round `t`.
    pub fn round_seed(&self, t: usize) -> u64 {
        // splitmix64 finalizer over (seed, t)
        let mut x = self
            .seed
            .wrapping_add((t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^ (x >> 31)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub trial_seed: u64,
    /// `N(t)`.
    pub width_start: usize,
    /// `N(t + 1/2)`: width after insertion.
    pub width_inserted: usize,
    /// `N(t + 1)`: width after pruning.
    pub width_end: usize,
    pub inserted: usize,
    pub pruned: usize,
    pub merged: usize,
    /// Largest `|p|` found by the trial ascents.
    pub max_abs_p: f64,
    pub objective: f64,
    pub loss: f64,
    pub penalty: f64,
    pub joint: JointDiagnostics,
    pub outer: OuterDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: AlgorithmConfig,
    pub iterations: Vec<IterationRecord>,
    pub final_width: usize,
    pub final_objective: f64,
    pub final_loss: f64,
    /// RMS error against the noise-free targets, when the dataset carries them.
    pub final_error: Option<f64>,
    pub stationarity: Option<StationarityReport>,
    /// Wall time per round, in seconds. Kept apart from the records so that
    /// those compare equal across identical runs.
    pub round_seconds: Vec<f64>,
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the insertion/training/pruning loop from the empty network.
pub fn run_algorithm(data: &Dataset, cfg: &AlgorithmConfig) -> Result<(ShallowNet, TrainReport)> {
    run_algorithm_from(ShallowNet::empty(data.dim()), data, cfg)
}

/// Runs the loop from an arbitrary initial network.
///
/// Each round: sample trial nodes, climb `|p|` from all of them in parallel,
/// insert the distinct maxima with `|p| > alpha`, train all weights jointly,
/// merge coincident nodes, polish the outer weights with semi-smooth Newton and
/// drop the nodes whose weight is exactly zero. Solver failures are recorded in
/// the report and never abort the run.
pub fn run_algorithm_from(
    init: ShallowNet,
    data: &Dataset,
    cfg: &AlgorithmConfig,
) -> Result<(ShallowNet, TrainReport)> {
    cfg.validate()?;
    if init.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: init.dim(),
        });
    }
    let start = Instant::now();
    let alpha = cfg.alpha;
    let lambda = cfg.outer.lambda_for(&cfg.penalty);
    let mut net = init;
    let mut records = Vec::new();
    let mut round_seconds = Vec::new();

    for t in 0..cfg.iterations {
        let round_start = Instant::now();
        let width_start = net.width();
        let j_before = loss_value(&net, data)? + alpha * cfg.penalty.total(net.weights());

        let ins_cfg = InsertionConfig {
            seed: cfg.round_seed(t),
            ..cfg.insertion.clone()
        };
        let field = DualField::new(&net, data)?;
        let trials = sample_trials(&ins_cfg, data.dim());
        let candidates = ascend_all(&field, &trials, &ins_cfg);
        let max_abs_p = candidates.first().map_or(0.0, |c| c.abs_p);
        let (grown, inserted) = select_and_insert(&net, &candidates, alpha, ins_cfg.dedup_tol);
        let width_inserted = grown.width();

        // give the fresh nodes their optimal weights before moving anything
        let mut grown = grown;
        if inserted > 0 {
            let prob = OuterProblem::new(
                crate::loss_dual::design_matrix(grown.nodes(), data),
                data,
                &cfg.penalty,
                alpha,
            );
            let warm = ssn_solve(&prob, grown.weights(), &cfg.outer, lambda);
            if prob.objective(&warm.c) <= prob.objective(grown.weights()) {
                grown.set_weights(warm.c)?;
            }
        }

        let (trained, joint) = train_joint(&grown, data, &cfg.penalty, alpha, &cfg.joint)?;
        let merged_net = trained.merge_duplicates(ins_cfg.dedup_tol);
        let merged = trained.width() - merged_net.width();

        let prob = OuterProblem::new(
            crate::loss_dual::design_matrix(merged_net.nodes(), data),
            data,
            &cfg.penalty,
            alpha,
        );
        let sol = ssn_solve(&prob, merged_net.weights(), &cfg.outer, lambda);
        let mut polished = merged_net;
        polished.set_weights(sol.c)?;
        let pruned_net = polished.prune_zeros();
        let pruned = polished.width() - pruned_net.width();
        net = pruned_net;

        let loss = loss_value(&net, data)?;
        let pen = cfg.penalty.total(net.weights());
        let objective = loss + alpha * pen;
        records.push(IterationRecord {
            t,
            trial_seed: ins_cfg.seed,
            width_start,
            width_inserted,
            width_end: net.width(),
            inserted,
            pruned,
            merged,
            max_abs_p,
            objective,
            loss,
            penalty: pen,
            joint,
            outer: sol.diagnostics,
        });
        round_seconds.push(round_start.elapsed().as_secs_f64());

        let settled = (j_before - objective).abs() <= 1e-10 * j_before.abs().max(f64::MIN_POSITIVE);
        if inserted == 0 && settled {
            break;
        }
    }

    let stationarity = if cfg.stationarity_samples > 0 {
        let opts = StationarityOptions {
            n_samples: cfg.stationarity_samples,
            seed: cfg.seed,
            ..Default::default()
        };
        Some(check_stationarity_with(&net, data, &cfg.penalty, alpha, &opts)?)
    } else {
        None
    };
    let final_loss = loss_value(&net, data)?;
    let final_error = match data.clean() {
        Some(_) => Some(crate::loss_dual::rms_error(&net, data)?),
        None => None,
    };
    let report = TrainReport {
        config: cfg.clone(),
        final_width: net.width(),
        final_objective: final_loss + alpha * cfg.penalty.total(net.weights()),
        final_loss,
        final_error,
        stationarity,
        iterations: records,
        round_seconds,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Sampling, SyntheticSpec, Target};
    use crate::geometry::SphereNode;

    fn damped_sine(k: usize) -> Dataset {
        SyntheticSpec {
            target: Target::DampedSine,
            sampling: Sampling::Grid1d { k },
            noise_sigma: 0.0,
            seed: 0,
        }
        .generate()
        .unwrap()
    }

    fn quick_cfg(alpha: f64, penalty: Penalty) -> AlgorithmConfig {
        AlgorithmConfig {
            alpha,
            penalty,
            iterations: 6,
            insertion: InsertionConfig {
                n_trial: 20,
                ..Default::default()
            },
            stationarity_samples: 0,
            ..Default::default()
        }
    }

    #[test]
    fn stationary_start_is_unchanged() {
        let d = damped_sine(40);
        let empty = ShallowNet::empty(1);
        let (out, diag) = train_joint(&empty, &d, &Penalty::L1, 1e-3, &JointConfig::default()).unwrap();
        assert_eq!(out, empty);
        assert_eq!(diag.objective_start, diag.objective_end);

        // zero weights with alpha above every |p|: nothing moves
        let node = SphereNode::normalized(&[1.0, 0.3]).unwrap().0;
        let net = ShallowNet::new(1, vec![node], vec![0.0]).unwrap();
        let (out, _) = train_joint(&net, &d, &Penalty::L1, 10.0, &JointConfig::default()).unwrap();
        assert_eq!(out.weights(), &[0.0]);
        assert_eq!(out.nodes()[0].as_slice(), net.nodes()[0].as_slice());
    }

    #[test]
    fn joint_objective_is_nonincreasing() {
        let d = damped_sine(200);
        let nodes: Vec<SphereNode> = (0..8)
            .map(|i| {
                let t = -1.0 + 0.45 * i as f64;
                SphereNode::normalized(&[t.cos(), t.sin()]).unwrap().0
            })
            .collect();
        let mut net = ShallowNet::new(1, nodes, vec![0.1; 8]).unwrap();
        let p = Penalty::MixedLogL1 { gamma: 1.0 };
        let one = JointConfig {
            epochs: 1,
            rel_tol: 0.0,
            ..Default::default()
        };
        let mut last = f64::INFINITY;
        for _ in 0..60 {
            let (next, diag) = train_joint(&net, &d, &p, 1e-5, &one).unwrap();
            assert!(diag.objective_end <= diag.objective_start);
            assert!(diag.objective_end <= last);
            last = diag.objective_end;
            net = next;
        }
    }

    #[test]
    fn single_relu_target_is_fitted() {
        let xs: Vec<f64> = (0..50).map(|i| -1.0 + 2.0 * i as f64 / 49.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.max(0.0)).collect();
        let d = Dataset::new(1, xs, ys).unwrap();
        // start a little off the exact node (1, 0) / sqrt(1)
        let node = SphereNode::normalized(&[1.0, 0.15]).unwrap().0;
        let net = ShallowNet::new(1, vec![node], vec![0.5]).unwrap();
        let cfg = JointConfig {
            epochs: 2000,
            rel_tol: 0.0,
            ..Default::default()
        };
        let (out, _) = train_joint(&net, &d, &Penalty::L1, 1e-12, &cfg).unwrap();
        assert!(loss_value(&out, &d).unwrap() <= 1e-8, "{}", loss_value(&out, &d).unwrap());
    }

    #[test]
    fn planted_single_node_is_recovered() {
        let truth_node = SphereNode::normalized(&[0.8, 0.2]).unwrap().0;
        let truth = ShallowNet::new(1, vec![truth_node], vec![1.5]).unwrap();
        let xs: Vec<f64> = (0..101).map(|i| -1.0 + 2.0 * i as f64 / 100.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| truth.evaluate(&[*x]).unwrap()).collect();
        let d = Dataset::new(1, xs, ys).unwrap();
        let cfg = quick_cfg(1e-6, Penalty::Log { gamma: 1.0 });
        let (net, report) = run_algorithm(&d, &cfg).unwrap();
        assert!((1..=3).contains(&net.width()), "width {}", net.width());
        assert!(report.final_loss <= 1e-6, "loss {}", report.final_loss);
    }

    #[test]
    fn large_alpha_gives_empty_network() {
        let d = damped_sine(50);
        let field = DualField::new(&ShallowNet::empty(1), &d).unwrap();
        // |p| <= |x|_lifted |y|_mean, which bounds every possible dual value
        let bound = d.max_lifted_norm() * d.ys().iter().map(|v| v.abs()).sum::<f64>() / d.len() as f64;
        assert!(field.value(&SphereNode::normalized(&[0.0, 1.0]).unwrap().0).abs() <= bound);
        let (net, report) = run_algorithm(&d, &quick_cfg(bound * 1.01, Penalty::L1)).unwrap();
        assert!(net.is_empty());
        assert_eq!(report.iterations[0].inserted, 0);
    }

    #[test]
    fn identical_seeds_give_identical_reports() {
        let d = damped_sine(100);
        let cfg = quick_cfg(1e-4, Penalty::MixedLogL1 { gamma: 1.0 });
        let (a, ra) = run_algorithm(&d, &cfg).unwrap();
        let (b, rb) = run_algorithm(&d, &cfg).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(ra.iterations, rb.iterations);
    }

    #[test]
    fn widths_respect_round_structure() {
        let d = damped_sine(100);
        let cfg = quick_cfg(1e-4, Penalty::L1);
        let (net, report) = run_algorithm(&d, &cfg).unwrap();
        let mut prev = 0;
        for r in &report.iterations {
            assert_eq!(r.width_start, prev);
            assert!(r.width_inserted <= r.width_start + cfg.insertion.n_trial);
            assert_eq!(r.width_inserted, r.width_start + r.inserted);
            assert_eq!(r.width_end, r.width_inserted - r.merged - r.pruned);
            assert!(r.objective.is_finite());
            prev = r.width_end;
        }
        assert_eq!(net.width(), prev);
        assert!(net.width() <= d.len());
    }

    #[test]
    fn round_seeds_differ() {
        let cfg = AlgorithmConfig::default();
        assert_ne!(cfg.round_seed(0), cfg.round_seed(1));
    }
}
