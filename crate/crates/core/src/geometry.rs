//! Nodes on the unit sphere `S^d` and the stereographic chart used to optimize them.
//!
//! The chart projects from the south pole `(0, -1)`:
//! `omega(z) = (2 z, 1 - |z|^2) / (1 + |z|^2)`. The south pole itself is the
//! neuron `max(-1, 0) = 0` and is excluded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A unit vector `(a, b)` in `R^{d+1}`, stored as `[a_1, .., a_d, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereNode {
    omega: Vec<f64>,
}

/// Stereographic coordinates `z` in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub z: Vec<f64>,
}

const UNIT_TOL: f64 = 1e-12;
const POLE_TOL: f64 = 1e-12;

impl SphereNode {
    /// Wraps `[a, b]`, which must have unit norm and must not be the south pole.
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 {
            return Err(Error::Domain(
                "sphere nodes need at least one input coordinate and an offset".into(),
            ));
        }
        let norm = norm2(&omega);
        if (norm - 1.0).abs() > UNIT_TOL * 10.0 {
            return Err(Error::Domain(format!("node norm is {norm}, expected 1")));
        }
        if *omega.last().unwrap() <= -1.0 + POLE_TOL {
            return Err(Error::SouthPole);
        }
        Ok(SphereNode { omega })
    }

    /// Scales an arbitrary nonzero `(a, b)` onto the sphere, returning the node and the scale.
    pub fn normalized(raw: &[f64]) -> Result<(Self, f64)> {
        let norm = norm2(raw);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("cannot normalize a zero node".into()));
        }
        let omega: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        if *omega.last().unwrap() <= -1.0 + POLE_TOL {
            return Err(Error::SouthPole);
        }
        Ok((SphereNode { omega }, norm))
    }

    /// Input dimension `d`.
    pub fn dim(&self) -> usize {
        self.omega.len() - 1
    }

    pub fn a(&self) -> &[f64] {
        &self.omega[..self.dim()]
    }

    pub fn b(&self) -> f64 {
        self.omega[self.dim()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.omega
    }

    /// Euclidean (chord) distance between two nodes.
    pub fn chord_distance(&self, other: &SphereNode) -> f64 {
        self.omega
            .iter()
            .zip(&other.omega)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    }

    /// Stereographic coordinates `a / (1 + b)`.
    pub fn to_chart(&self) -> Result<ChartPoint> {
        let b = self.b();
        if b <= -1.0 + POLE_TOL {
            return Err(Error::SouthPole);
        }
        // Near the pole 1 + b cancels; 1 + b = |a|^2 / (1 - b) on the sphere.
        let den = if b < 0.0 {
            self.a().iter().map(|v| v * v).sum::<f64>() / (1.0 - b)
        } else {
            1.0 + b
        };
        Ok(ChartPoint {
            z: self.a().iter().map(|ai| ai / den).collect(),
        })
    }

    /// `max(a . x + b, 0)`.
    pub fn feature(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(relu_feature(&self.omega, x))
    }

    /// Angle `atan2(b, a)` of a node on `S^1`.
    pub fn angle(&self) -> f64 {
        self.omega[1].atan2(self.omega[0])
    }
}

impl ChartPoint {
    pub fn new(z: Vec<f64>) -> Self {
        ChartPoint { z }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// `(2 z, 1 - |z|^2) / (1 + |z|^2)`.
    pub fn to_sphere(&self) -> SphereNode {
        SphereNode {
            omega: chart_to_omega(&self.z),
        }
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn chart_to_omega(z: &[f64]) -> Vec<f64> {
    let zz: f64 = z.iter().map(|v| v * v).sum();
    let den = 1.0 + zz;
    let mut omega: Vec<f64> = z.iter().map(|v| 2.0 * v / den).collect();
    omega.push((1.0 - zz) / den);
    omega
}

/// `max(a . x + b, 0)` for `omega = [a, b]`; no dimension check.
#[inline]
pub(crate) fn relu_feature(omega: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    let s = omega[..d].iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() + omega[d];
    s.max(0.0)
}

/// Value of `z -> sigma(omega(z) . (x, 1))` and its gradient, written into `grad`.
///
/// The gradient is zero wherever the pre-activation is `<= 0`.
#[inline]
pub(crate) fn chart_feature_grad(z: &[f64], x: &[f64], grad: &mut [f64]) -> f64 {
    let zz: f64 = z.iter().map(|v| v * v).sum();
    let zx: f64 = z.iter().zip(x).map(|(u, v)| u * v).sum();
    let den = 1.0 + zz;
    let s = (2.0 * zx + 1.0 - zz) / den;
    if s > 0.0 {
        for ((g, zi), xi) in grad.iter_mut().zip(z).zip(x) {
            *g = 2.0 * (xi - zi - s * zi) / den;
        }
        s
    } else {
        grad.iter_mut().for_each(|g| *g = 0.0);
        0.0
    }
}

/// Gradient of `z -> sigma(chart_to_sphere(z) . (x, 1))`, with subgradient 0 at the kink.
pub fn feature_grad_chart(z: &ChartPoint, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            got: x.len(),
        });
    }
    let mut g = vec![0.0; z.dim()];
    chart_feature_grad(&z.z, x, &mut g);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chart_examples() {
        assert_eq!(ChartPoint::new(vec![0.0]).to_sphere().as_slice(), &[0.0, 1.0]);
        assert_eq!(ChartPoint::new(vec![1.0]).to_sphere().as_slice(), &[1.0, 0.0]);
        assert_eq!(
            ChartPoint::new(vec![1.0, 0.0]).to_sphere().as_slice(),
            &[1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn inverse_chart_examples() {
        let n = SphereNode::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(n.to_chart().unwrap().z, vec![0.0]);
        let n = SphereNode::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(n.to_chart().unwrap().z, vec![1.0]);
        assert!(matches!(SphereNode::new(vec![0.0, -1.0]), Err(Error::SouthPole)));
        assert!(SphereNode::new(vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn relu_examples() {
        let n = SphereNode::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(n.feature(&[0.5]).unwrap(), 0.5);
        assert_eq!(n.feature(&[-0.5]).unwrap(), 0.0);
        let c = SphereNode::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(c.feature(&[123.0]).unwrap(), 1.0);
        assert!(matches!(
            n.feature(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn feature_gradient_cases() {
        // active: finite differences
        let z = ChartPoint::new(vec![0.3, -0.2]);
        let x = [0.4, 0.1];
        let g = feature_grad_chart(&z, &x).unwrap();
        let f = |zz: &[f64]| relu_feature(&chart_to_omega(zz), &x);
        for i in 0..2 {
            let h = 1e-6;
            let mut zp = z.z.clone();
            let mut zm = z.z.clone();
            zp[i] += h;
            zm[i] -= h;
            let fd = (f(&zp) - f(&zm)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5 * fd.abs().max(1e-8));
        }
        // inactive: z = 1 is (a, b) = (1, 0), x = -0.5 gives -0.5
        assert_eq!(feature_grad_chart(&ChartPoint::new(vec![1.0]), &[-0.5]).unwrap(), vec![0.0]);
        // kink: (1, 0) at x = 0
        assert_eq!(feature_grad_chart(&ChartPoint::new(vec![1.0]), &[0.0]).unwrap(), vec![0.0]);
    }

    proptest! {
        #[test]
        fn chart_is_unit_and_invertible(z in proptest::collection::vec(-1e3f64..1e3, 1..4)) {
            let node = ChartPoint::new(z.clone()).to_sphere();
            prop_assert!((norm2(node.as_slice()) - 1.0).abs() <= 1e-12);
            let back = node.to_chart().unwrap();
            for (u, v) in back.z.iter().zip(&z) {
                prop_assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }

        #[test]
        fn relu_positively_homogeneous(a in -1.0f64..1.0, b in -1.0f64..1.0, x in -3.0f64..3.0, tau in 0.01f64..100.0) {
            let s1 = relu_feature(&[tau * a, tau * b], &[x]);
            let s2 = tau * relu_feature(&[a, b], &[x]);
            prop_assert!((s1 - s2).abs() <= 1e-12 * (1.0 + s2.abs()));
        }
    }
}
