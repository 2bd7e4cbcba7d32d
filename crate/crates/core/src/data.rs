//! Training data: CSV datasets and the synthetic targets of the reference experiments.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{csv_error, parse_row};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv,
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source: DataSource,
    pub seed: Option<u64>,
    pub noise_sigma: f64,
}

/// Points `x_k` (row-major `K x d`) with targets `y_k`.
///
/// Synthetic datasets also keep the noise-free values `f(x_k)` so that
/// approximation errors can be measured against the target function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    clean: Option<Vec<f64>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(dim: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if dim == 0 || xs.len() != dim * ys.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * ys.len(),
                got: xs.len(),
            });
        }
        if ys.is_empty() {
            return Err(Error::Domain("a dataset needs at least one point".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::Domain("dataset entries must be finite".into()));
        }
        Ok(Dataset {
            dim,
            xs,
            ys,
            clean: None,
            meta: DatasetMeta {
                source: DataSource::Csv,
                seed: None,
                noise_sigma: 0.0,
            },
        })
    }

    pub fn with_clean_targets(mut self, clean: Vec<f64>) -> Result<Self> {
        if clean.len() != self.ys.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ys.len(),
                got: clean.len(),
            });
        }
        self.clean = Some(clean);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points `K`.
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn x(&self, k: usize) -> &[f64] {
        &self.xs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn xs(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.xs.chunks_exact(self.dim)
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Noise-free target values, when known.
    pub fn clean(&self) -> Option<&[f64]> {
        self.clean.as_deref()
    }

    /// `max_k |(x_k, 1)|`.
    pub fn max_lifted_norm(&self) -> f64 {
        self.xs()
            .map(|x| (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt())
            .fold(0.0, f64::max)
    }

    /// CSV with header `x_1,..,x_d,y`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for i in 1..=self.dim {
            let _ = write!(s, "x_{i},");
        }
        s.push_str("y\n");
        for (x, y) in self.xs().zip(&self.ys) {
            for v in x {
                let _ = write!(s, "{v:.16e},");
            }
            let _ = writeln!(s, "{y:.16e}");
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
            ));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        let cols = header.len();
        if cols < 2 || header.iter().all(str::is_empty) {
            return Err(Error::NoData {
                path: path.to_path_buf(),
            });
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let row = parse_row(path, r + 2, &rec, cols)?;
            xs.extend_from_slice(&row[..cols - 1]);
            ys.push(row[cols - 1]);
        }
        if ys.is_empty() {
            return Err(Error::NoData {
                path: path.to_path_buf(),
            });
        }
        Dataset::new(cols - 1, xs, ys)
    }
}

/// Target functions of the reference experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// `cos(10 (1e-3 + x^2)^(1/8))` on `[-1, 1]`.
    KinkedCos,
    /// `exp(-x^2 / 2) |sin(7 sqrt(1 + x^2))|` on `[-1, 1]`.
    DampedSine,
    /// `exp(-(x_1^2 + x_2^2) / 2) cos(10 x_1 x_2)` on `[-1, 1]^2`.
    DampedCos2d,
    /// `|x - center|` on `[-1, 1]^2`.
    Radial { center: [f64; 2] },
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::KinkedCos | Target::DampedSine => 1,
            Target::DampedCos2d | Target::Radial { .. } => 2,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match self {
            Target::KinkedCos => (10.0 * (1e-3 + x[0] * x[0]).powf(0.125)).cos(),
            Target::DampedSine => {
                (-0.5 * x[0] * x[0]).exp() * (7.0 * (1.0 + x[0] * x[0]).sqrt()).sin().abs()
            }
            Target::DampedCos2d => {
                (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp() * (10.0 * x[0] * x[1]).cos()
            }
            Target::Radial { center } => (x[0] - center[0]).hypot(x[1] - center[1]),
        })
    }
}

/// How the sample points are laid out in `[-1, 1]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    /// `k` i.i.d. uniform draws on `[-1, 1]`.
    Uniform1d { k: usize },
    /// `k` equispaced points including both endpoints.
    Grid1d { k: usize },
    /// `m x m` tensor grid on `[-1, 1]^2`.
    Grid2d { m: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub target: Target,
    pub sampling: Sampling,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn grid(k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| -1.0 + 2.0 * i as f64 / (k - 1) as f64)
}

impl SyntheticSpec {
    pub fn eval_target(&self, x: &[f64]) -> Result<f64> {
        self.target.eval(x)
    }

    /// Samples points, evaluates the target and adds seeded Gaussian noise.
    pub fn generate(&self) -> Result<Dataset> {
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Domain("noise_sigma must be nonnegative".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (dim, xs): (usize, Vec<f64>) = match self.sampling {
            Sampling::Uniform1d { k } => {
                if k == 0 {
                    return Err(Error::Domain("need at least one sample".into()));
                }
                (1, (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect())
            }
            Sampling::Grid1d { k } => {
                if k < 2 {
                    return Err(Error::Domain("grid sizes must be at least 2".into()));
                }
                (1, grid(k).collect())
            }
            Sampling::Grid2d { m } => {
                if m < 2 {
                    return Err(Error::Domain("grid sizes must be at least 2".into()));
                }
                let pts = grid(m)
                    .flat_map(|u| grid(m).flat_map(move |v| [u, v]))
                    .collect();
                (2, pts)
            }
        };
        if dim != self.target.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.target.dim(),
                got: dim,
            });
        }
        let clean: Vec<f64> = xs
            .chunks_exact(dim)
            .map(|x| self.target.eval(x))
            .collect::<Result<_>>()?;
        let ys = if self.noise_sigma > 0.0 {
            let normal = Normal::new(0.0, self.noise_sigma)
                .map_err(|e| Error::Domain(e.to_string()))?;
            clean.iter().map(|f| f + normal.sample(&mut rng)).collect()
        } else {
            clean.clone()
        };
        let mut data = Dataset::new(dim, xs, ys)?.with_clean_targets(clean)?;
        data.meta = DatasetMeta {
            source: DataSource::Synthetic,
            seed: Some(self.seed),
            noise_sigma: self.noise_sigma,
        };
        Ok(data)
    }
}
