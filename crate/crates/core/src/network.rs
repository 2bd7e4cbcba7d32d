//! The shallow network `N(x) = sum_n c_n max(a_n . x + b_n, 0)` viewed as the
//! atomic measure `sum_n c_n delta_{omega_n}` on the sphere.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{relu_feature, SphereNode};

/// Default chord distance under which two nodes are treated as the same atom.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShallowNet {
    dim: usize,
    nodes: Vec<SphereNode>,
    weights: Vec<f64>,
}

impl ShallowNet {
    pub fn empty(dim: usize) -> Self {
        ShallowNet {
            dim,
            nodes: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn new(dim: usize, nodes: Vec<SphereNode>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if let Some(n) = nodes.iter().find(|n| n.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: n.dim(),
            });
        }
        Ok(ShallowNet {
            dim,
            nodes,
            weights,
        })
    }

    /// Builds a network from unnormalized `(a, b)` rows using ReLU homogeneity:
    /// `c max(a.x + b, 0) = (c r) max((a.x + b) / r, 0)` with `r = |(a, b)|`.
    pub fn normalize_homogeneous(raw_nodes: &[Vec<f64>], c: &[f64]) -> Result<Self> {
        if raw_nodes.len() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: raw_nodes.len(),
                got: c.len(),
            });
        }
        let dim = raw_nodes.first().map_or(1, |r| r.len().saturating_sub(1));
        let mut nodes = Vec::with_capacity(c.len());
        let mut weights = Vec::with_capacity(c.len());
        for (raw, &ci) in raw_nodes.iter().zip(c) {
            if raw.len() != dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: dim + 1,
                    got: raw.len(),
                });
            }
            let (node, scale) = SphereNode::normalized(raw)?;
            nodes.push(node);
            weights.push(ci * scale);
        }
        Ok(ShallowNet {
            dim,
            nodes,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes `N`.
    pub fn width(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SphereNode] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes.len(),
                got: weights.len(),
            });
        }
        self.weights = weights;
        Ok(())
    }

    /// Appends a node.
    pub fn push(&mut self, node: SphereNode, weight: f64) -> Result<()> {
        if node.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: node.dim(),
            });
        }
        self.nodes.push(node);
        self.weights.push(weight);
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(n, c)| c * relu_feature(n.as_slice(), x))
            .sum()
    }

    /// Merges nodes closer than `tol` (chord distance) into one atom carrying the
    /// summed weight, placed at the member with the largest `|c|`.
    pub fn merge_duplicates(&self, tol: f64) -> ShallowNet {
        let n = self.width();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            self.weights[j]
                .abs()
                .total_cmp(&self.weights[i].abs())
                .then(i.cmp(&j))
        });
        let mut owner = vec![usize::MAX; n];
        let mut sums = vec![0.0; n];
        for &i in &order {
            if owner[i] != usize::MAX {
                continue;
            }
            owner[i] = i;
            sums[i] = self.weights[i];
            for &j in &order {
                if owner[j] == usize::MAX && self.nodes[i].chord_distance(&self.nodes[j]) <= tol {
                    owner[j] = i;
                    sums[i] += self.weights[j];
                }
            }
        }
        let mut out = ShallowNet::empty(self.dim);
        for i in 0..n {
            if owner[i] == i {
                out.nodes.push(self.nodes[i].clone());
                out.weights.push(sums[i]);
            }
        }
        out
    }

    /// Drops nodes whose weight is exactly zero.
    pub fn prune_zeros(&self) -> ShallowNet {
        let (nodes, weights) = self
            .nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, &c)| c != 0.0)
            .map(|(n, &c)| (n.clone(), c))
            .unzip();
        ShallowNet {
            dim: self.dim,
            nodes,
            weights,
        }
    }

    /// CSV with header `a_1,..,a_d,b,c`, one row per node, 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for i in 1..=self.dim {
            let _ = write!(s, "a_{i},");
        }
        s.push_str("b,c\n");
        for (node, c) in self.nodes.iter().zip(&self.weights) {
            for v in node.as_slice() {
                let _ = write!(s, "{v:.16e},");
            }
            let _ = writeln!(s, "{c:.16e}");
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    /// Reads a network CSV. Rows are renormalized onto the sphere, so files with
    /// slightly perturbed or unnormalized nodes describe the same function.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        let cols = header.len();
        if cols < 3 || &header[cols - 1] != "c" || &header[cols - 2] != "b" {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: 1,
                column: cols,
                message: "expected header a_1,..,a_d,b,c".into(),
            });
        }
        let mut raw = Vec::new();
        let mut c = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let row = parse_row(path, r + 2, &rec, cols)?;
            raw.push(row[..cols - 1].to_vec());
            c.push(row[cols - 1]);
        }
        if raw.is_empty() {
            return Ok(ShallowNet::empty(cols - 2));
        }
        Self::normalize_homogeneous(&raw, &c)
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let (row, column) = match e.position() {
        Some(p) => (p.line() as usize, 0),
        None => (0, 0),
    };
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse {
            path: path.to_path_buf(),
            row,
            column,
            message: format!("{kind:?}"),
        },
    }
}

pub(crate) fn parse_row(
    path: &Path,
    row: usize,
    rec: &csv::StringRecord,
    cols: usize,
) -> Result<Vec<f64>> {
    if rec.len() != cols {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            column: rec.len().min(cols) + 1,
            message: format!("expected {cols} fields, found {}", rec.len()),
        });
    }
    rec.iter()
        .enumerate()
        .map(|(j, field)| {
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: j + 1,
                    message: format!("not a finite number: {field:?}"),
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn node(v: &[f64]) -> SphereNode {
        SphereNode::new(v.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let net = ShallowNet::new(1, vec![node(&[1.0, 0.0])], vec![2.0]).unwrap();
        assert_eq!(net.evaluate(&[1.0]).unwrap(), 2.0);
        assert_eq!(ShallowNet::empty(1).evaluate(&[0.3]).unwrap(), 0.0);
        let net = ShallowNet::new(1, vec![node(&[1.0, 0.0]), node(&[0.0, 1.0])], vec![1.0, 3.0]).unwrap();
        assert_eq!(net.evaluate(&[2.0]).unwrap(), 5.0);
        assert!(net.evaluate(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let net = ShallowNet::normalize_homogeneous(&[vec![2.0, 0.0]], &[1.0]).unwrap();
        assert_eq!(net.nodes()[0].as_slice(), &[1.0, 0.0]);
        assert_eq!(net.weights(), &[2.0]);
        let net = ShallowNet::normalize_homogeneous(&[vec![0.6, 0.8]], &[1.5]).unwrap();
        assert_eq!(net.nodes()[0].as_slice(), &[0.6, 0.8]);
        assert_eq!(net.weights(), &[1.5]);
        assert!(ShallowNet::normalize_homogeneous(&[vec![0.0, 0.0]], &[1.0]).is_err());
    }

    #[test]
    fn normalize_preserves_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw: Vec<Vec<f64>> = (0..12)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-0.5..3.0)])
            .collect();
        let c: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
        let net = ShallowNet::normalize_homogeneous(&raw, &c).unwrap();
        for _ in 0..100 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let direct: f64 = raw
                .iter()
                .zip(&c)
                .map(|(r, ci)| ci * (r[0] * x[0] + r[1] * x[1] + r[2]).max(0.0))
                .sum();
            assert!((net.evaluate(&x).unwrap() - direct).abs() <= 1e-10);
        }
    }

    #[test]
    fn merge_examples() {
        let n = node(&[0.6, 0.8]);
        let net = ShallowNet::new(1, vec![n.clone(), n.clone()], vec![1.0, 2.0]).unwrap();
        let m = net.merge_duplicates(DEFAULT_DEDUP_TOL);
        assert_eq!(m.width(), 1);
        assert_eq!(m.weights(), &[3.0]);

        let far = ShallowNet::new(1, vec![node(&[1.0, 0.0]), node(&[0.0, 1.0])], vec![1.0, 2.0]).unwrap();
        assert_eq!(far.merge_duplicates(DEFAULT_DEDUP_TOL), far);

        let opp = ShallowNet::new(1, vec![n.clone(), n], vec![1.0, -1.0]).unwrap();
        let m = opp.merge_duplicates(DEFAULT_DEDUP_TOL);
        assert_eq!(m.weights(), &[0.0]);
        assert!(m.prune_zeros().is_empty());
    }

    #[test]
    fn merge_respects_lipschitz_bound() {
        let tol = 1e-3;
        let (a, _) = SphereNode::normalized(&[0.6, 0.8]).unwrap();
        let (b, _) = SphereNode::normalized(&[0.6 + 4e-4, 0.8]).unwrap();
        let net = ShallowNet::new(1, vec![a, b], vec![1.0, -2.5]).unwrap();
        let m = net.merge_duplicates(tol);
        assert_eq!(m.width(), 1);
        for i in 0..21 {
            let x = -1.0 + 0.1 * i as f64;
            let bound = 3.5 * tol * (x * x + 1.0f64).sqrt();
            assert!((m.evaluate(&[x]).unwrap() - net.evaluate(&[x]).unwrap()).abs() <= bound);
        }
    }

    #[test]
    fn prune_examples() {
        let nodes = vec![node(&[1.0, 0.0]), node(&[0.0, 1.0]), node(&[0.6, 0.8])];
        let net = ShallowNet::new(1, nodes.clone(), vec![0.0, 1.0, 0.0]).unwrap();
        let p = net.prune_zeros();
        assert_eq!(p.width(), 1);
        for x in [-1.0, 0.0, 0.7] {
            assert_eq!(p.evaluate(&[x]).unwrap(), net.evaluate(&[x]).unwrap());
        }
        let full = ShallowNet::new(1, nodes.clone(), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(full.prune_zeros(), full);
        let zero = ShallowNet::new(1, nodes, vec![0.0; 3]).unwrap();
        assert!(zero.prune_zeros().is_empty());
    }

    #[test]
    fn evaluate_is_linear_in_weights() {
        let nodes = vec![node(&[0.6, 0.8]), node(&[-0.8, 0.6]), node(&[1.0, 0.0])];
        let c1 = vec![0.3, -1.2, 2.0];
        let c2 = vec![-0.7, 0.4, 1.1];
        let sum: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a + b).collect();
        let n1 = ShallowNet::new(1, nodes.clone(), c1).unwrap();
        let n2 = ShallowNet::new(1, nodes.clone(), c2).unwrap();
        let ns = ShallowNet::new(1, nodes, sum).unwrap();
        for i in 0..11 {
            let x = [-1.0 + 0.2 * i as f64];
            let lhs = ns.evaluate(&x).unwrap();
            let rhs = n1.evaluate(&x).unwrap() + n2.evaluate(&x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-14);
        }
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let (a, _) = SphereNode::normalized(&[0.123456789, -0.98765, 0.3]).unwrap();
        let (b, _) = SphereNode::normalized(&[-1.0, 1.0 / 3.0, 0.25]).unwrap();
        let net = ShallowNet::new(2, vec![a, b], vec![std::f64::consts::PI, -1e-7]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.csv");
        net.write_csv(&path).unwrap();
        let back = ShallowNet::read_csv(&path).unwrap();
        assert_eq!(back.width(), 2);
        for (u, v) in back.nodes().iter().zip(net.nodes()) {
            assert!(u.chord_distance(v) <= 1e-15);
        }
        for (u, v) in back.weights().iter().zip(net.weights()) {
            assert!((u - v).abs() <= 1e-15 * v.abs());
        }
        assert!(net.to_csv_string().starts_with("a_1,a_2,b,c\n"));
    }
}
