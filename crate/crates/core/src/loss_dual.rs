//! Least-squares loss `(1/2K) sum_k |N(x_k) - y_k|^2`, its residual and the dual
//! variable `p(omega) = (1/K) sum_k sigma(omega, x_k) g_k`.

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{chart_feature_grad, relu_feature, ChartPoint, SphereNode};
use crate::network::ShallowNet;

fn check_dims(net: &ShallowNet, data: &Dataset) -> Result<()> {
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: net.dim(),
        });
    }
    Ok(())
}

/// `A_{kn} = sigma(omega_n, x_k)`, shape `K x N`.
pub fn design_matrix(nodes: &[SphereNode], data: &Dataset) -> DMatrix<f64> {
    let k = data.len();
    DMatrix::from_fn(k, nodes.len(), |row, col| {
        relu_feature(nodes[col].as_slice(), data.x(row))
    })
}

/// `g_k = N(x_k) - y_k`.
pub fn residual(net: &ShallowNet, data: &Dataset) -> Result<Vec<f64>> {
    check_dims(net, data)?;
    Ok(data
        .xs()
        .zip(data.ys())
        .map(|(x, y)| net.eval_unchecked(x) - y)
        .collect())
}

pub(crate) fn half_mean_square(g: &[f64]) -> f64 {
    0.5 * g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64
}

pub fn loss_value(net: &ShallowNet, data: &Dataset) -> Result<f64> {
    Ok(half_mean_square(&residual(net, data)?))
}

/// Root mean square of `N(x_k) - f(x_k)` against the noise-free targets
/// (or against `y` for datasets without them).
pub fn rms_error(net: &ShallowNet, data: &Dataset) -> Result<f64> {
    check_dims(net, data)?;
    let reference = data.clean().unwrap_or(data.ys());
    let s: f64 = data
        .xs()
        .zip(reference)
        .map(|(x, f)| {
            let e = net.eval_unchecked(x) - f;
            e * e
        })
        .sum();
    Ok((s / data.len() as f64).sqrt())
}

/// The dual variable for a fixed residual.
#[derive(Clone, Debug)]
pub struct DualField<'a> {
    data: &'a Dataset,
    residual: Vec<f64>,
}

impl<'a> DualField<'a> {
    pub fn new(net: &ShallowNet, data: &'a Dataset) -> Result<Self> {
        Ok(DualField {
            residual: residual(net, data)?,
            data,
        })
    }

    pub fn from_residual(data: &'a Dataset, residual: Vec<f64>) -> Result<Self> {
        if residual.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: data.len(),
                got: residual.len(),
            });
        }
        Ok(DualField { data, residual })
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    /// `p(omega)` for `omega = [a, b]` given as a slice.
    pub(crate) fn value_raw(&self, omega: &[f64]) -> f64 {
        let s: f64 = self
            .data
            .xs()
            .zip(&self.residual)
            .map(|(x, g)| relu_feature(omega, x) * g)
            .sum();
        s / self.data.len() as f64
    }

    pub fn value(&self, node: &SphereNode) -> f64 {
        self.value_raw(node.as_slice())
    }

    /// `p` and its gradient at chart coordinates `z`.
    pub(crate) fn chart_value_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let d = z.len();
        let mut grad = vec![0.0; d];
        let mut fg = vec![0.0; d];
        let mut p = 0.0;
        for (x, g) in self.data.xs().zip(&self.residual) {
            let s = chart_feature_grad(z, x, &mut fg);
            if s > 0.0 {
                p += s * g;
                for (acc, v) in grad.iter_mut().zip(&fg) {
                    *acc += v * g;
                }
            }
        }
        let inv_k = 1.0 / self.data.len() as f64;
        grad.iter_mut().for_each(|v| *v *= inv_k);
        (p * inv_k, grad)
    }

    /// Gradient of `z -> p(chart_to_sphere(z))`.
    pub fn dual_grad_chart(&self, z: &ChartPoint) -> Result<Vec<f64>> {
        if z.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.dim(),
            });
        }
        Ok(self.chart_value_grad(&z.z).1)
    }
}

/// `d loss / d c_n`, which is the dual variable evaluated at each node.
pub fn outer_gradient(net: &ShallowNet, data: &Dataset) -> Result<Vec<f64>> {
    let field = DualField::new(net, data)?;
    Ok(net.nodes().iter().map(|n| field.value(n)).collect())
}
