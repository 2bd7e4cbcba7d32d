//! Diagnostics derived from the optimality theory: stationarity certificates, the
//! width bound `N <= K`, the fidelity bound with an explicit radial W-norm, and
//! the rescaling identities linking `l2` weight decay to the `l1` outer penalty.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, SphereNode};
use crate::insertion::{ascend_dual, uniform_sphere_chart, InsertionConfig};
use crate::loss_dual::DualField;
use crate::network::ShallowNet;
use crate::penalty::Penalty;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StationarityOptions {
    pub n_samples: usize,
    /// Number of best samples refined by dual ascent.
    pub n_ascent: usize,
    pub ascent_max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for StationarityOptions {
    fn default() -> Self {
        StationarityOptions {
            n_samples: 10_000,
            n_ascent: 16,
            ascent_max_iters: 200,
            tol: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub alpha: f64,
    pub tol: f64,
    pub n_sphere_samples: usize,
    /// Largest `|p|` over the uniform samples.
    pub max_abs_dual_sampled: f64,
    /// Largest `|p|` after refining the best samples by ascent.
    pub max_abs_dual_ascent: f64,
    /// `|p(omega_n) + alpha phi'(|c_n|) sign c_n|` for `c_n != 0`, and the excess
    /// `max(|p(omega_n)| - alpha, 0)` for `c_n = 0`.
    pub per_node_residual: Vec<f64>,
    pub max_node_residual: f64,
    pub dual_pass: bool,
    pub node_pass: bool,
    pub pass: bool,
}

/// [`check_stationarity_with`] using default sampling options.
pub fn check_stationarity(
    net: &ShallowNet,
    data: &Dataset,
    penalty: &Penalty,
    alpha: f64,
    n_samples: usize,
    tol: f64,
) -> Result<StationarityReport> {
    let opts = StationarityOptions {
        n_samples,
        tol,
        ..Default::default()
    };
    check_stationarity_with(net, data, penalty, alpha, &opts)
}

/// Evidence for the first-order conditions `|p| <= alpha` on the sphere and
/// `p(omega_n) = -alpha phi'(|c_n|) sign c_n` on the support.
///
/// Sampling cannot prove the global bound; the sampled maximum is refined by
/// ascent from the best samples and both values are reported.
pub fn check_stationarity_with(
    net: &ShallowNet,
    data: &Dataset,
    penalty: &Penalty,
    alpha: f64,
    opts: &StationarityOptions,
) -> Result<StationarityReport> {
    let field = DualField::new(net, data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_57a7);
    let samples: Vec<ChartPoint> = (0..opts.n_samples)
        .map(|_| uniform_sphere_chart(&mut rng, data.dim()))
        .collect();
    let values: Vec<f64> = samples
        .par_iter()
        .map(|z| field.value(&z.to_sphere()).abs())
        .collect();
    let max_sampled = values.iter().fold(0.0f64, |m, v| m.max(*v));

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let asc_cfg = InsertionConfig {
        ascent_max_iters: opts.ascent_max_iters,
        ..Default::default()
    };
    let max_ascent = order
        .iter()
        .take(opts.n_ascent)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&i| ascend_dual(&field, &samples[i], &asc_cfg).abs_p)
        .collect::<Vec<_>>()
        .into_iter()
        .fold(max_sampled, f64::max);

    let per_node_residual: Vec<f64> = net
        .nodes()
        .iter()
        .zip(net.weights())
        .map(|(node, &c)| {
            let p = field.value(node);
            if c == 0.0 {
                (p.abs() - alpha).max(0.0)
            } else {
                (p + alpha * penalty.dphi(c.abs()) * c.signum()).abs()
            }
        })
        .collect();
    let max_node_residual = per_node_residual.iter().fold(0.0f64, |m, v| m.max(*v));
    let dual_pass = max_ascent <= alpha * (1.0 + opts.tol);
    let node_pass = max_node_residual <= alpha * opts.tol;
    Ok(StationarityReport {
        alpha,
        tol: opts.tol,
        n_sphere_samples: opts.n_samples,
        max_abs_dual_sampled: max_sampled,
        max_abs_dual_ascent: max_ascent,
        per_node_residual,
        max_node_residual,
        dual_pass,
        node_pass,
        pass: dual_pass && node_pass,
    })
}

/// Local solutions fitted to `K` points have at most `K` nodes.
pub fn representer_check(net: &ShallowNet, data: &Dataset) -> bool {
    net.width() <= data.len()
}

fn check_center(center: [f64; 2]) -> Result<f64> {
    let h = (center[0] * center[0] + center[1] * center[1]).sqrt();
    if !(h < 1.0) {
        return Err(Error::Domain(format!("radial center must lie inside the unit disc, |center| = {h}")));
    }
    Ok(h)
}

/// Node and weight density of the measure representing `x -> |x - center|`.
///
/// From `|y| = (1/2) int_{S^1} max(u . y, 0) du`, the raw node for direction
/// `u = (cos t, sin t)` is `(u, -u . center)` with norm `r(t)`; normalizing it
/// moves the factor `r(t)` into the weight, so the density in `t` is `r(t) / 2`.
fn radial_atom(center: [f64; 2], t: f64) -> (SphereNode, f64) {
    let (s, c) = t.sin_cos();
    let b = -(c * center[0] + s * center[1]);
    let (node, r) = SphereNode::normalized(&[c, s, b]).expect("radial nodes have |a| = 1");
    (node, 0.5 * r)
}

/// Total variation of the measure on the great circle `{b = -a . center}` that
/// represents `x -> |x - center|`, by the periodic trapezoid rule with `n_quad`
/// points. This bounds the W-norm of the radial function from above.
pub fn wnorm_radial_2d(center: [f64; 2], n_quad: usize) -> Result<f64> {
    check_center(center)?;
    if n_quad == 0 {
        return Err(Error::Domain("n_quad must be positive".into()));
    }
    let dt = 2.0 * PI / n_quad as f64;
    let sum: f64 = (0..n_quad).map(|i| radial_atom(center, i as f64 * dt).1).sum();
    Ok(sum * dt)
}

/// The same measure discretized into `n_quad` atoms, as a network approximating
/// `x -> |x - center|`.
pub fn radial_measure(center: [f64; 2], n_quad: usize) -> Result<ShallowNet> {
    check_center(center)?;
    if n_quad == 0 {
        return Err(Error::Domain("n_quad must be positive".into()));
    }
    let dt = 2.0 * PI / n_quad as f64;
    let (nodes, weights) = (0..n_quad)
        .map(|i| {
            let (node, w) = radial_atom(center, (i as f64 + 0.5) * dt);
            (node, w * dt)
        })
        .unzip();
    ShallowNet::new(2, nodes, weights)
}

/// `|N - f|^2 - (2 alpha w_norm + |y - f|^2)` in the empirical `L^2` norm of the
/// data points; nonpositive for local solutions.
pub fn fidelity_gap(
    net: &ShallowNet,
    data: &Dataset,
    f: &[f64],
    alpha: f64,
    w_norm: f64,
) -> Result<f64> {
    if f.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: f.len(),
        });
    }
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: net.dim(),
        });
    }
    let k = data.len() as f64;
    let mut lhs = 0.0;
    let mut noise = 0.0;
    for ((x, y), fk) in data.xs().zip(data.ys()).zip(f) {
        let e = net.eval_unchecked(x) - fk;
        lhs += e * e;
        noise += (y - fk) * (y - fk);
    }
    Ok(lhs / k - (2.0 * alpha * w_norm + noise / k))
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::Domain(format!("exponents must be >= 1, got p = {p}, q = {q}")));
    }
    Ok(())
}

/// Exponent `s = 2pq / (p + q)` of the outer penalty equivalent to penalizing
/// inner weights with `|.|^q / q` and outer weights with `|.|^p / p`.
pub fn equiv_exponent(p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    Ok(2.0 * p * q / (p + q))
}

/// `(1/p) |c / tau|^p + (1/q) tau^q`.
pub fn rebalanced_cost(c_abs: f64, tau: f64, p: f64, q: f64) -> f64 {
    (c_abs / tau).powf(p) / p + tau.powf(q) / q
}

/// The minimizer `tau = |c|^(p / (p + q))` of [`rebalanced_cost`].
pub fn optimal_tau(c_abs: f64, p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    if !(c_abs > 0.0) {
        return Err(Error::Domain(format!("|c| must be positive, got {c_abs}")));
    }
    Ok(c_abs.powf(p / (p + q)))
}

/// `(1/2) sum_n (|omega_n|^2 + c_n^2)` for unnormalized nodes.
pub fn l2_weight_cost(raw_nodes: &[Vec<f64>], c: &[f64]) -> f64 {
    raw_nodes
        .iter()
        .zip(c)
        .map(|(w, cn)| 0.5 * (w.iter().map(|v| v * v).sum::<f64>() + cn * cn))
        .sum()
}

/// `sum_n |c_n|` of the network after moving all node scale into the weights.
pub fn l1_outer_cost(raw_nodes: &[Vec<f64>], c: &[f64]) -> Result<f64> {
    Ok(ShallowNet::normalize_homogeneous(raw_nodes, c)?
        .weights()
        .iter()
        .map(|v| v.abs())
        .sum())
}

/// Rescales every node so that `|omega_n|^2 = |c_n|`, the scaling at which the
/// `l2` weight cost equals the `l1` outer cost. Zero-weight nodes are kept at unit norm.
pub fn balanced_scaling(net: &ShallowNet) -> (Vec<Vec<f64>>, Vec<f64>) {
    net.nodes()
        .iter()
        .zip(net.weights())
        .map(|(node, &c)| {
            if c == 0.0 {
                return (node.as_slice().to_vec(), 0.0);
            }
            let tau = c.abs().sqrt();
            (node.as_slice().iter().map(|v| v * tau).collect(), c / tau)
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Sampling, SyntheticSpec, Target};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn empty_net_on_zero_targets_passes() {
        let d = Dataset::new(1, vec![-0.5, 0.0, 0.5], vec![0.0; 3]).unwrap();
        let r = check_stationarity(&ShallowNet::empty(1), &d, &Penalty::L1, 1e-3, 500, 1e-2).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_abs_dual_sampled, 0.0);
        assert_eq!(r.max_abs_dual_ascent, 0.0);
    }

    #[test]
    fn random_net_fails() {
        let d = SyntheticSpec {
            target: Target::DampedSine,
            sampling: Sampling::Grid1d { k: 50 },
            noise_sigma: 0.0,
            seed: 0,
        }
        .generate()
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let c: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let net = ShallowNet::normalize_homogeneous(&raw, &c).unwrap();
        let r = check_stationarity(&net, &d, &Penalty::L1, 1e-4, 1000, 1e-2).unwrap();
        assert!(!r.pass);
        assert!(r.max_node_residual > 1e-2);
    }

    #[test]
    fn representer_cases() {
        let d = Dataset::new(1, vec![0.3], vec![1.0]).unwrap();
        assert!(representer_check(&ShallowNet::empty(1), &d));
        let node = SphereNode::normalized(&[1.0, 0.0]).unwrap().0;
        let one = ShallowNet::new(1, vec![node.clone()], vec![1.0]).unwrap();
        assert!(representer_check(&one, &d));
        let two = ShallowNet::new(1, vec![node.clone(), node], vec![1.0, 2.0]).unwrap();
        assert!(!representer_check(&two, &d));
    }

    #[test]
    fn radial_wnorm_at_origin_is_pi() {
        for n in [16, 100, 1000] {
            assert!((wnorm_radial_2d([0.0, 0.0], n).unwrap() - PI).abs() <= 1e-10);
        }
    }

    #[test]
    fn radial_wnorm_converges_and_is_rotation_invariant() {
        let a = wnorm_radial_2d([0.1, 0.1], 1000).unwrap();
        let b = wnorm_radial_2d([0.1, 0.1], 2000).unwrap();
        assert!((a - b).abs() <= 1e-8);
        let c = wnorm_radial_2d([0.02f64.sqrt(), 0.0], 2000).unwrap();
        assert!((b - c).abs() <= 1e-10);
    }

    fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = 2.0 * PI / n as f64;
        let mut s = f(0.0) + f(2.0 * PI);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn radial_wnorm_matches_independent_quadrature() {
        // (1/2) int_0^{2 pi} sqrt(1 + h^2 cos^2 t) dt by composite Simpson
        for center in [[0.1, 0.1], [0.5, -0.2], [0.0, 0.9]] {
            let h2 = center[0] * center[0] + center[1] * center[1];
            let oracle = 0.5 * simpson(|t| (1.0 + h2 * t.cos().powi(2)).sqrt(), 20_000);
            let w = wnorm_radial_2d(center, 4000).unwrap();
            assert!((w - oracle).abs() <= 1e-10, "{w} vs {oracle}");
        }
    }

    #[test]
    fn radial_wnorm_rejects_outside_disc() {
        assert!(matches!(wnorm_radial_2d([1.0, 0.0], 10), Err(Error::Domain(_))));
    }

    #[test]
    fn radial_measure_reproduces_distance() {
        let center = [0.1, 0.1];
        let net = radial_measure(center, 4000).unwrap();
        let total: f64 = net.weights().iter().sum();
        assert!((total - wnorm_radial_2d(center, 4000).unwrap()).abs() <= 1e-9);
        for x in [[0.0, 0.0], [0.7, -0.3], [-1.0, 1.0], [0.1, 0.1], [0.4, 0.9]] {
            let f = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
            let n = net.evaluate(&x).unwrap();
            assert!((n - f).abs() <= 1e-5, "{x:?}: {n} vs {f}");
        }
    }

    #[test]
    fn fidelity_gap_cases() {
        let center = [0.1, 0.1];
        let net = radial_measure(center, 2000).unwrap();
        let xs = vec![0.0, 0.0, 0.5, 0.5, -0.5, 0.3];
        let f: Vec<f64> = xs.chunks(2).map(|x| net.evaluate(x).unwrap()).collect();
        let d = Dataset::new(2, xs, f.clone()).unwrap();
        let gap = fidelity_gap(&net, &d, &f, 1e-3, 3.0).unwrap();
        assert!((gap + 2.0 * 1e-3 * 3.0).abs() <= 1e-15);

        // alpha = 0: sign of |N - f|^2 - |y - f|^2
        let noisy: Vec<f64> = f.iter().map(|v| v + 0.1).collect();
        let dn = Dataset::new(2, d.xs().flatten().copied().collect(), noisy).unwrap();
        let gap0 = fidelity_gap(&net, &dn, &f, 0.0, 3.0).unwrap();
        assert!((gap0 + 0.01).abs() <= 1e-12);
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(equiv_exponent(2.0, 2.0).unwrap(), 2.0);
        assert_eq!(equiv_exponent(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(equiv_exponent(1.0, 3.0).unwrap(), 1.5);
        assert!(equiv_exponent(0.5, 2.0).is_err());
        assert_eq!(optimal_tau(1.0, 1.7, 2.3).unwrap(), 1.0);
        assert!((optimal_tau(16.0, 1.0, 3.0).unwrap() - 2.0).abs() <= 1e-15);
    }

    fn grid_min(c: f64, p: f64, q: f64) -> (f64, f64) {
        // golden-section refinement after a coarse log grid
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=4000 {
            let tau = 10f64.powf(-4.0 + 8.0 * i as f64 / 4000.0);
            let v = rebalanced_cost(c, tau, p, q);
            if v < best.0 {
                best = (v, tau);
            }
        }
        let (mut lo, mut hi) = (best.1 * 10f64.powf(-0.002), best.1 * 10f64.powf(0.002));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if rebalanced_cost(c, a, p, q) < rebalanced_cost(c, b, p, q) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let t = 0.5 * (lo + hi);
        (rebalanced_cost(c, t, p, q), t)
    }

    #[test]
    fn optimal_tau_beats_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let c = 10f64.powf(rng.random_range(-2.0..2.0));
            let p = rng.random_range(1.0..4.0);
            let q = rng.random_range(1.0..4.0);
            let tau = optimal_tau(c, p, q).unwrap();
            let v = rebalanced_cost(c, tau, p, q);
            let (grid, _) = grid_min(c, p, q);
            assert!(v - grid <= 1e-8, "{v} vs {grid}");
            let identity = (1.0 / p + 1.0 / q) * c.powf(p * q / (p + q));
            assert!((v - identity).abs() <= 1e-10 * identity.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn l2_cost_dominates_l1_outer_cost(
            raw in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..6),
            c in prop::collection::vec(-3.0f64..3.0, 6),
        ) {
            prop_assume!(raw.iter().all(|w| w.iter().map(|v| v * v).sum::<f64>() > 1e-6));
            prop_assume!(raw.iter().all(|w| w[2] > -1.0 || w[..2].iter().any(|v| v.abs() > 1e-6)));
            let c = &c[..raw.len()];
            let l1 = l1_outer_cost(&raw, c).unwrap();
            prop_assert!(l2_weight_cost(&raw, c) >= l1 - 1e-12);

            let net = ShallowNet::normalize_homogeneous(&raw, c).unwrap();
            let (braw, bc) = balanced_scaling(&net);
            let nonzero: Vec<usize> = (0..bc.len()).filter(|&i| bc[i] != 0.0).collect();
            let braw: Vec<Vec<f64>> = nonzero.iter().map(|&i| braw[i].clone()).collect();
            let bc: Vec<f64> = nonzero.iter().map(|&i| bc[i]).collect();
            if !bc.is_empty() {
                let l1b = l1_outer_cost(&braw, &bc).unwrap();
                prop_assert!((l2_weight_cost(&braw, &bc) - l1b).abs() <= 1e-10 * l1b.max(1.0));
                prop_assert!((l1b - l1).abs() <= 1e-10 * l1.max(1.0));
            }
        }
    }
}
