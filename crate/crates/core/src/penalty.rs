//! Scalar sparsity penalties `phi` for the outer weights.
//!
//! Every penalty here is concave and nondecreasing on `[0, inf)` with
//! `phi(0) = 0` and `phi'(0) = 1`, so `phi(z) <= z`. The curved variants are
//! `gamma`-convex: `phi'(z1) - phi'(z2) <= gamma (z2 - z1)` for `z1 <= z2`,
//! which keeps `c -> 0.5 (c - q)^2 + lambda phi(|c|)` strongly convex as long as
//! `lambda * gamma < 1`. All proximal maps below are closed form in that regime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The penalty family applied to `|c_n|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PenaltyRepr", into = "PenaltyRepr")]
pub enum Penalty {
    /// `phi(z) = z`.
    L1,
    /// `phi(z) = log(1 + gamma z) / gamma`.
    Log { gamma: f64 },
    /// Minimax concave penalty: `z - gamma z^2 / 2` below `1 / gamma`, constant beyond.
    Mcp { gamma: f64 },
    /// `phi(z) = (z + log(1 + 2 gamma z) / (2 gamma)) / 2`.
    MixedLogL1 { gamma: f64 },
}

#[derive(Serialize, Deserialize)]
struct PenaltyRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
}

impl TryFrom<PenaltyRepr> for Penalty {
    type Error = Error;

    fn try_from(repr: PenaltyRepr) -> Result<Self> {
        let gamma = || -> Result<f64> {
            match repr.gamma {
                Some(g) if g > 0.0 && g.is_finite() => Ok(g),
                Some(g) => Err(Error::Domain(format!("gamma must be positive, got {g}"))),
                None => Err(Error::Domain(format!(
                    "penalty kind {:?} requires gamma",
                    repr.kind
                ))),
            }
        };
        match repr.kind.as_str() {
            "l1" => Ok(Penalty::L1),
            "log" => Ok(Penalty::Log { gamma: gamma()? }),
            "mcp" => Ok(Penalty::Mcp { gamma: gamma()? }),
            "mixed_log_l1" => Ok(Penalty::MixedLogL1 { gamma: gamma()? }),
            other => Err(Error::Domain(format!("unknown penalty kind {other:?}"))),
        }
    }
}

impl From<Penalty> for PenaltyRepr {
    fn from(p: Penalty) -> Self {
        let (kind, gamma) = match p {
            Penalty::L1 => ("l1", None),
            Penalty::Log { gamma } => ("log", Some(gamma)),
            Penalty::Mcp { gamma } => ("mcp", Some(gamma)),
            Penalty::MixedLogL1 { gamma } => ("mixed_log_l1", Some(gamma)),
        };
        PenaltyRepr {
            kind: kind.to_string(),
            gamma,
        }
    }
}

fn check_nonneg(z: f64) -> Result<()> {
    if z >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "penalty argument must be nonnegative, got {z}"
        )))
    }
}

/// Prox of `lambda * log(1 + gamma |c|) / gamma` for `|q| > lambda`, positive branch.
fn log_prox_positive(gamma: f64, lambda: f64, q: f64) -> f64 {
    let t = gamma * q - 1.0;
    (t + (t * t + 4.0 * gamma * (q - lambda)).sqrt()) / (2.0 * gamma)
}

impl Penalty {
    /// Short label used in reports and file names.
    pub fn label(&self) -> String {
        match self {
            Penalty::L1 => "l1".to_string(),
            Penalty::Log { gamma } => format!("log(gamma={gamma})"),
            Penalty::Mcp { gamma } => format!("mcp(gamma={gamma})"),
            Penalty::MixedLogL1 { gamma } => format!("mixed_log_l1(gamma={gamma})"),
        }
    }

    pub fn is_l1(&self) -> bool {
        matches!(self, Penalty::L1)
    }

    /// The curvature constant `gamma` of the `gamma`-convexity bound; 0 for `L1`.
    pub fn curvature(&self) -> f64 {
        match *self {
            Penalty::L1 => 0.0,
            Penalty::Log { gamma } | Penalty::Mcp { gamma } | Penalty::MixedLogL1 { gamma } => {
                gamma
            }
        }
    }

    pub fn value(&self, z: f64) -> Result<f64> {
        check_nonneg(z)?;
        Ok(self.phi(z))
    }

    pub fn derivative(&self, z: f64) -> Result<f64> {
        check_nonneg(z)?;
        Ok(self.dphi(z))
    }

    pub(crate) fn phi(&self, z: f64) -> f64 {
        match *self {
            Penalty::L1 => z,
            Penalty::Log { gamma } => (gamma * z).ln_1p() / gamma,
            Penalty::Mcp { gamma } => {
                if z < 1.0 / gamma {
                    z - 0.5 * gamma * z * z
                } else {
                    0.5 / gamma
                }
            }
            Penalty::MixedLogL1 { gamma } => 0.5 * (z + (2.0 * gamma * z).ln_1p() / (2.0 * gamma)),
        }
    }

    pub(crate) fn dphi(&self, z: f64) -> f64 {
        match *self {
            Penalty::L1 => 1.0,
            Penalty::Log { gamma } => 1.0 / (1.0 + gamma * z),
            Penalty::Mcp { gamma } => (1.0 - gamma * z).max(0.0),
            Penalty::MixedLogL1 { gamma } => 0.5 * (1.0 + 1.0 / (1.0 + 2.0 * gamma * z)),
        }
    }

    /// Second derivative for `z >= 0`. At the MCP kink `z = 1/gamma` the left value is used.
    pub fn second_derivative(&self, z: f64) -> f64 {
        match *self {
            Penalty::L1 => 0.0,
            Penalty::Log { gamma } => {
                let d = 1.0 + gamma * z;
                -gamma / (d * d)
            }
            Penalty::Mcp { gamma } => {
                if z <= 1.0 / gamma {
                    -gamma
                } else {
                    0.0
                }
            }
            Penalty::MixedLogL1 { gamma } => {
                let d = 1.0 + 2.0 * gamma * z;
                -gamma / (d * d)
            }
        }
    }

    /// `argmin_c 0.5 (c - q)^2 + lambda phi(|c|)`.
    ///
    /// Requires `lambda > 0` and, for the curved variants, `lambda * gamma < 1`.
    pub fn prox(&self, lambda: f64, q: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!(
                "prox parameter lambda must be positive, got {lambda}"
            )));
        }
        let lg = lambda * self.curvature();
        if lg >= 1.0 {
            return Err(Error::NonUniqueProx(lg));
        }
        Ok(self.prox_unchecked(lambda, q))
    }

    pub(crate) fn prox_unchecked(&self, lambda: f64, q: f64) -> f64 {
        let aq = q.abs();
        if aq <= lambda {
            return 0.0;
        }
        let mag = match *self {
            Penalty::L1 => aq - lambda,
            Penalty::Log { gamma } => log_prox_positive(gamma, lambda, aq),
            Penalty::Mcp { gamma } => {
                if aq < 1.0 / gamma {
                    (aq - lambda) / (1.0 - lambda * gamma)
                } else {
                    aq
                }
            }
            // The l1 half shifts q by lambda/2; the rest is the log prox with
            // (lambda/2, 2 gamma).
            Penalty::MixedLogL1 { gamma } => {
                log_prox_positive(2.0 * gamma, 0.5 * lambda, aq - 0.5 * lambda)
            }
        };
        mag.copysign(q)
    }

    /// `sum_n phi(|c_n|)`.
    pub fn total(&self, c: &[f64]) -> f64 {
        c.iter().map(|ci| self.phi(ci.abs())).sum()
    }

    /// Numerically checks the structural assumptions on a uniform grid of
    /// `n_points` over `[0, grid_max]`.
    pub fn validate(&self, grid_max: f64, n_points: usize) -> Result<PenaltyValidity> {
        if n_points < 3 || !(grid_max > 0.0) {
            return Err(Error::Domain(
                "validation grid needs n_points >= 3 and grid_max > 0".into(),
            ));
        }
        Ok(validate_on_grid(self, grid_max, n_points))
    }
}

/// Outcome of [`Penalty::validate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyValidity {
    /// `phi(0) = 0`, `phi'(0) = 1`, nondecreasing, concave with bounded
    /// curvature, and still growing at the end of the grid.
    pub a1: bool,
    /// Strict concavity with constant `gamma_hat > 0` on `[0, z_hat]`.
    pub a2: bool,
    pub monotone: bool,
    pub concave: bool,
    pub unbounded: bool,
    /// Largest observed slope decrease per unit length.
    pub gamma: f64,
    /// Smallest observed slope decrease per unit length on `[0, z_hat]`.
    pub gamma_hat: f64,
    pub z_hat: f64,
}

const SLOPE_TOL: f64 = 1e-8;

fn validate_on_grid(p: &Penalty, grid_max: f64, n: usize) -> PenaltyValidity {
    let h = grid_max / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|i| p.phi(i as f64 * h)).collect();
    let slopes: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]) / h).collect();

    let monotone = slopes.iter().all(|&s| s >= -SLOPE_TOL);
    let concave = slopes.windows(2).all(|w| w[1] - w[0] <= SLOPE_TOL);
    let unbounded = *slopes.last().unwrap() > SLOPE_TOL;
    let normalized = vals[0] == 0.0 && (p.dphi(0.0) - 1.0).abs() <= 1e-12;

    // Curvature estimates from consecutive slope differences; the slopes sit
    // at midpoints spaced h apart.
    let curv: Vec<f64> = slopes.windows(2).map(|w| (w[0] - w[1]) / h).collect();
    let gamma = curv.iter().copied().fold(0.0, f64::max);

    let nominal = p.curvature();
    let z_hat = if nominal > 0.0 {
        (1.0 / nominal).min(grid_max)
    } else {
        grid_max
    };
    // Slope pair i spans [i h, (i + 2) h].
    let gamma_hat = curv
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i + 2) as f64 * h <= z_hat * (1.0 + 1e-12))
        .map(|(_, &c)| c)
        .fold(f64::INFINITY, f64::min);
    let gamma_hat = if gamma_hat.is_finite() { gamma_hat } else { 0.0 };

    PenaltyValidity {
        a1: normalized && monotone && concave && unbounded && gamma.is_finite(),
        a2: gamma_hat > SLOPE_TOL,
        monotone,
        concave,
        unbounded,
        gamma,
        gamma_hat,
        z_hat,
    }
}

/// Componentwise `sign(q) max(|q| - lambda, 0)`.
pub fn soft_threshold(lambda: f64, q: &[f64]) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "soft-threshold parameter must be positive, got {lambda}"
        )));
    }
    Ok(q.iter().map(|&v| shrink(lambda, v)).collect())
}

#[inline]
pub(crate) fn shrink(lambda: f64, v: f64) -> f64 {
    let m = v.abs() - lambda;
    if m > 0.0 {
        m.copysign(v)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;
    use proptest::prelude::*;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
        }
    }

    const ALL_CURVED: [fn(f64) -> Penalty; 3] = [
        |g| Penalty::Log { gamma: g },
        |g| Penalty::Mcp { gamma: g },
        |g| Penalty::MixedLogL1 { gamma: g },
    ];

    /// Grid minimizer of the prox objective at resolution `h`.
    fn grid_prox(p: &Penalty, lambda: f64, q: f64, h: f64) -> (f64, f64) {
        let obj = |c: f64| 0.5 * (c - q) * (c - q) + lambda * p.phi(c.abs());
        let r = q.abs() + 1.0;
        let n = (2.0 * r / h).ceil() as i64;
        let mut best = (0.0, obj(0.0));
        for i in 0..=n {
            let c = -r + i as f64 * h;
            let v = obj(c);
            if v < best.1 {
                best = (c, v);
            }
        }
        best
    }

    #[test]
    fn phi_value_examples() {
        let log1 = Penalty::Log { gamma: 1.0 };
        assert!(close(log1.value(std::f64::consts::E - 1.0).unwrap(), 1.0, 1e-15));
        for p in [Penalty::L1, log1, Penalty::Mcp { gamma: 2.0 }, Penalty::MixedLogL1 { gamma: 3.0 }] {
            assert_eq!(p.value(0.0).unwrap(), 0.0);
            assert_eq!(p.derivative(0.0).unwrap(), 1.0);
        }
        assert!(close(Penalty::Mcp { gamma: 1.0 }.value(0.5).unwrap(), 0.375, 1e-15));
        assert!(log1.value(-1.0).is_err());
        assert!(log1.derivative(-1e-3).is_err());
    }

    #[test]
    fn phi_derivative_examples() {
        assert!(close(Penalty::Log { gamma: 1.0 }.derivative(1.0).unwrap(), 0.5, 1e-15));
        assert_eq!(Penalty::L1.derivative(7.3).unwrap(), 1.0);
    }

    #[test]
    fn derivative_matches_central_differences() {
        for mk in ALL_CURVED {
            for gamma in [0.1, 1.0, 5.0] {
                let p = mk(gamma);
                for i in 1..200 {
                    let z = i as f64 * 0.05 / gamma;
                    if matches!(p, Penalty::Mcp { .. }) && (z * gamma - 1.0).abs() < 1e-3 {
                        continue;
                    }
                    let h = 1e-6 * z.max(1e-3);
                    let fd = (p.phi(z + h) - p.phi(z - h)) / (2.0 * h);
                    let d = p.dphi(z);
                    assert!((fd - d).abs() <= 1e-6 * d.abs().max(1e-3), "{p:?} z={z}: {fd} vs {d}");
                    let fd2 = (p.dphi(z + h) - p.dphi(z - h)) / (2.0 * h);
                    let d2 = p.second_derivative(z);
                    assert!((fd2 - d2).abs() <= 1e-5 * gamma, "{p:?} z={z}: {fd2} vs {d2}");
                }
            }
        }
    }

    #[test]
    fn log_prox_examples() {
        let p = Penalty::Log { gamma: 1.0 };
        let expected = 0.5 * (1.0 + 7f64.sqrt());
        assert!(close(p.prox(0.5, 2.0).unwrap(), expected, 1e-15));
        assert!(close(expected, 1.82287, 1e-5));
        assert_eq!(p.prox(0.5, 0.3).unwrap(), 0.0);
        assert!(close(p.prox(0.5, -2.0).unwrap(), -expected, 1e-15));
        // grid oracle for the same case
        let (c, _) = grid_prox(&p, 0.5, 2.0, 1e-4);
        assert!((c - expected).abs() <= 1e-4);
    }

    #[test]
    fn prox_errors() {
        let p = Penalty::Log { gamma: 2.0 };
        assert!(matches!(p.prox(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(p.prox(-1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(p.prox(0.5, 1.0), Err(Error::NonUniqueProx(_))));
        assert!(Penalty::L1.prox(10.0, 1.0).is_ok());
    }

    #[test]
    fn prox_grid_oracle_all_variants() {
        for mk in ALL_CURVED {
            for &(gamma, lf) in &[(0.5, 0.3), (1.0, 0.8), (4.0, 0.5)] {
                let p = mk(gamma);
                let lambda = lf / gamma;
                for i in 0..41 {
                    let q = -5.0 + 0.25 * i as f64;
                    let c = p.prox(lambda, q).unwrap();
                    let (cg, vg) = grid_prox(&p, lambda, q, 1e-4);
                    let obj = 0.5 * (c - q) * (c - q) + lambda * p.phi(c.abs());
                    assert!((c - cg).abs() <= 1e-3, "{p:?} lambda={lambda} q={q}: {c} vs {cg}");
                    assert!(obj <= vg + 1e-8);
                }
            }
        }
        let (c, _) = grid_prox(&Penalty::L1, 0.7, 2.0, 1e-4);
        assert!((Penalty::L1.prox(0.7, 2.0).unwrap() - c).abs() <= 1e-4);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(1.0, &[2.5]).unwrap(), vec![1.5]);
        assert_eq!(soft_threshold(1.0, &[-0.5]).unwrap(), vec![0.0]);
        assert_eq!(soft_threshold(1.0, &[-3.0, 0.0, 1.0]).unwrap(), vec![-2.0, 0.0, 0.0]);
        assert!(soft_threshold(0.0, &[1.0]).is_err());
    }

    #[test]
    fn total_penalty_examples() {
        let log1 = Penalty::Log { gamma: 1.0 };
        let t = log1.total(&[1.0, -2.0]);
        assert!(close(t, 2f64.ln() + 3f64.ln(), 1e-15));
        assert!(close(t, 1.79176, 1e-5));
        assert_eq!(log1.total(&[]), 0.0);
        assert_eq!(Penalty::L1.total(&[1.0, -2.0]), 3.0);
    }

    #[test]
    fn validate_examples() {
        let l1 = Penalty::L1.validate(10.0, 1001).unwrap();
        assert!(l1.a1 && !l1.a2);

        let log1 = Penalty::Log { gamma: 1.0 }.validate(10.0, 1001).unwrap();
        assert!(log1.a1 && log1.a2, "{log1:?}");
        // curvature gamma/(1 + gamma z)^2 is smallest at z_hat = 1/gamma
        assert!(close(log1.gamma, 1.0, 2e-2));
        assert!(close(log1.gamma_hat, 0.25, 2e-2));

        let mixed = Penalty::MixedLogL1 { gamma: 1.0 }.validate(10.0, 1001).unwrap();
        assert!(mixed.a1 && mixed.a2, "{mixed:?}");
        assert!(close(mixed.gamma, 1.0, 2e-2));
        // gamma/(1 + 2 gamma z)^2 at z_hat = 1/gamma
        assert!(close(mixed.gamma_hat, 1.0 / 9.0, 2e-2));
        assert_eq!(mixed.z_hat, 1.0);

        // MCP saturates, so it cannot grow without bound.
        let mcp = Penalty::Mcp { gamma: 1.0 }.validate(10.0, 1001).unwrap();
        assert!(!mcp.a1 && mcp.a2 && !mcp.unbounded);
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let p: Penalty = serde_json::from_str(r#"{"kind":"log","gamma":2.5}"#).unwrap();
        assert_eq!(p, Penalty::Log { gamma: 2.5 });
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"kind":"log","gamma":2.5}"#);
        let l1: Penalty = serde_json::from_str(r#"{"kind":"l1","gamma":1.0}"#).unwrap();
        assert_eq!(l1, Penalty::L1);
        assert_eq!(serde_json::to_string(&l1).unwrap(), r#"{"kind":"l1"}"#);
        let m: Penalty = serde_json::from_str(r#"{"kind":"mixed_log_l1","gamma":1}"#).unwrap();
        assert_eq!(m, Penalty::MixedLogL1 { gamma: 1.0 });
        assert!(serde_json::from_str::<Penalty>(r#"{"kind":"mcp","gamma":-1}"#).is_err());
        assert!(serde_json::from_str::<Penalty>(r#"{"kind":"mcp"}"#).is_err());
        assert!(serde_json::from_str::<Penalty>(r#"{"kind":"scad","gamma":1}"#).is_err());
    }

    fn any_penalty() -> impl Strategy<Value = Penalty> {
        prop_oneof![
            Just(Penalty::L1),
            (0.1f64..10.0).prop_map(|g| Penalty::Log { gamma: g }),
            (0.1f64..10.0).prop_map(|g| Penalty::Mcp { gamma: g }),
            (0.1f64..10.0).prop_map(|g| Penalty::MixedLogL1 { gamma: g }),
        ]
    }

    proptest! {
        #[test]
        fn quadratic_sandwich(p in any_penalty(), t in 0.0f64..1.0) {
            let g = p.curvature().max(0.1);
            let z = t * 10.0 / g;
            let v = p.phi(z);
            prop_assert!(v <= z + 1e-12);
            prop_assert!(z - 0.5 * p.curvature() * z * z <= v + 1e-12);
        }

        #[test]
        fn subadditive(p in any_penalty(), z1 in 0.0f64..20.0, z2 in 0.0f64..20.0) {
            prop_assert!(p.phi(z1 + z2) <= p.phi(z1) + p.phi(z2) + 1e-12);
        }

        #[test]
        fn prox_odd_monotone_dead_zone(p in any_penalty(), lf in 0.01f64..0.9, q in -5.0f64..5.0, dq in 0.0f64..1.0) {
            let g = p.curvature();
            let lambda = if g > 0.0 { lf / g } else { lf * 2.0 };
            let c = p.prox(lambda, q).unwrap();
            prop_assert_eq!(p.prox(lambda, -q).unwrap(), -c);
            prop_assert!(p.prox(lambda, q + dq).unwrap() >= c);
            prop_assert_eq!(c == 0.0, q.abs() <= lambda);
        }
    }
}
