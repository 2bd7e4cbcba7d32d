//! Presets for the reference experiments: `l1` against a nonconvex penalty in one
//! and two dimensions, curvature sweeps with warm starts, and the fidelity check
//! on a radial target.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{fidelity_gap, wnorm_radial_2d};
use crate::data::{Dataset, Sampling, SyntheticSpec, Target};
use crate::error::{Error, Result};
use crate::insertion::InsertionConfig;
use crate::network::ShallowNet;
use crate::penalty::Penalty;
use crate::train::{run_algorithm_from, AlgorithmConfig, TrainReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Fig1,
    Exp1d,
    Exp2d,
    Table1,
    Table2,
    RadialFidelity,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig1,
        Preset::Exp1d,
        Preset::Exp2d,
        Preset::Table1,
        Preset::Table2,
        Preset::RadialFidelity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Exp1d => "exp1d",
            Preset::Exp2d => "exp2d",
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::RadialFidelity => "radial-fidelity",
        }
    }

    /// Sweeps report `gamma,nodes,error`; comparisons also carry a label.
    pub fn is_sweep(self) -> bool {
        matches!(self, Preset::Table1 | Preset::Table2)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown experiment '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentOptions {
    pub seed: u64,
    /// Override of the grid side for two-dimensional presets.
    pub grid: Option<usize>,
    /// Override of the number of rounds.
    pub iterations: Option<usize>,
    /// Sphere samples of the stationarity check on every trained network.
    pub stationarity_samples: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            seed: 0,
            grid: None,
            iterations: None,
            stationarity_samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub label: String,
    pub gamma: Option<f64>,
    pub alpha: f64,
    pub nodes: usize,
    /// RMS error against the noise-free target on the data points.
    pub error: f64,
    pub objective: f64,
    pub stationarity_pass: Option<bool>,
    pub fidelity_gap: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub seed: u64,
    pub data: SyntheticSpec,
    pub w_norm: Option<f64>,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentSummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `gamma,nodes,error` for sweeps, `label,gamma,nodes,error` otherwise.
    pub fn to_csv_string(&self, sweep: bool) -> String {
        let mut out = String::new();
        if sweep {
            out.push_str("gamma,nodes,error\n");
        } else {
            out.push_str("label,gamma,nodes,error\n");
        }
        for r in &self.rows {
            let gamma = r.gamma.map(|g| format!("{g:e}")).unwrap_or_default();
            if sweep {
                let _ = writeln!(out, "{gamma},{},{:.6e}", r.nodes, r.error);
            } else {
                let _ = writeln!(out, "{},{gamma},{},{:.6e}", r.label, r.nodes, r.error);
            }
        }
        out
    }
}

/// One trained network of an experiment, with its report.
#[derive(Clone, Debug)]
pub struct TrainedRun {
    pub label: String,
    pub net: ShallowNet,
    pub report: TrainReport,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub preset: Preset,
    pub summary: ExperimentSummary,
    pub runs: Vec<TrainedRun>,
}

impl ExperimentOutcome {
    /// Writes `summary.json`, `summary.csv` and one network CSV per run into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("summary.json");
        std::fs::write(&json, self.summary.to_json()?).map_err(|e| Error::io(&json, e))?;
        let csv = dir.join("summary.csv");
        std::fs::write(&csv, self.summary.to_csv_string(self.preset.is_sweep()))
            .map_err(|e| Error::io(&csv, e))?;
        for run in &self.runs {
            run.net.write_csv(dir.join(format!("network_{}.csv", run.label)))?;
        }
        Ok(())
    }
}

fn base_config(alpha: f64, penalty: Penalty, iterations: usize, seed: u64, opts: &ExperimentOptions) -> AlgorithmConfig {
    AlgorithmConfig {
        alpha,
        penalty,
        iterations: opts.iterations.unwrap_or(iterations),
        insertion: InsertionConfig {
            n_trial: 50,
            ..Default::default()
        },
        seed,
        stationarity_samples: opts.stationarity_samples,
        ..Default::default()
    }
}

fn row(label: String, gamma: Option<f64>, cfg: &AlgorithmConfig, run: &TrainedRun) -> ExperimentRow {
    ExperimentRow {
        label,
        gamma,
        alpha: cfg.alpha,
        nodes: run.net.width(),
        error: run.report.final_error.unwrap_or(f64::NAN),
        objective: run.report.final_objective,
        stationarity_pass: run.report.stationarity.as_ref().map(|s| s.pass),
        fidelity_gap: None,
        seconds: run.report.wall_seconds,
    }
}

fn train(label: &str, init: ShallowNet, data: &Dataset, cfg: &AlgorithmConfig) -> Result<TrainedRun> {
    let (net, report) = run_algorithm_from(init, data, cfg)?;
    Ok(TrainedRun {
        label: label.to_string(),
        net,
        report,
    })
}

/// The data of a preset.
pub fn preset_data(preset: Preset, opts: &ExperimentOptions) -> SyntheticSpec {
    let grid = |default: usize| Sampling::Grid2d {
        m: opts.grid.unwrap_or(default),
    };
    let (target, sampling, noise_sigma) = match preset {
        Preset::Fig1 => (Target::KinkedCos, Sampling::Uniform1d { k: 5000 }, 0.05),
        Preset::Exp1d | Preset::Table1 => (Target::DampedSine, Sampling::Grid1d { k: 1000 }, 0.0),
        Preset::Exp2d => (Target::DampedCos2d, grid(51), 0.0),
        Preset::Table2 | Preset::RadialFidelity => (
            Target::Radial {
                center: RADIAL_CENTER,
            },
            grid(21),
            0.0,
        ),
    };
    SyntheticSpec {
        target,
        sampling,
        noise_sigma,
        seed: opts.seed,
    }
}

pub const RADIAL_CENTER: [f64; 2] = [0.1, 0.1];
pub const TABLE1_GAMMAS: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
pub const TABLE2_GAMMAS: [f64; 5] = [1e-3, 2.5e-2, 1.25e-1, 6.25e-1, 3.12];

/// Runs a preset end to end.
pub fn run_preset(preset: Preset, opts: &ExperimentOptions) -> Result<ExperimentOutcome> {
    let spec = preset_data(preset, opts);
    let data = spec.generate()?;
    let empty = ShallowNet::empty(data.dim());
    let seed = opts.seed;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut w_norm = None;

    let compare = |alpha: f64, phi: Penalty, iterations: usize, rows: &mut Vec<ExperimentRow>, runs: &mut Vec<TrainedRun>| -> Result<()> {
        for (label, penalty) in [("l1", Penalty::L1), ("phi", phi)] {
            let cfg = base_config(alpha, penalty, iterations, seed, opts);
            let run = train(label, empty.clone(), &data, &cfg)?;
            let gamma = (!penalty.is_l1()).then(|| penalty.curvature());
            rows.push(row(label.to_string(), gamma, &cfg, &run));
            runs.push(run);
        }
        Ok(())
    };

    match preset {
        Preset::Fig1 => compare(1e-4, Penalty::Log { gamma: 1.0 }, 15, &mut rows, &mut runs)?,
        Preset::Exp1d => compare(1e-5, Penalty::MixedLogL1 { gamma: 1.0 }, 15, &mut rows, &mut runs)?,
        Preset::Exp2d => compare(1e-5, Penalty::MixedLogL1 { gamma: 5.0 }, 10, &mut rows, &mut runs)?,
        Preset::Table1 | Preset::Table2 => {
            let (gammas, iterations) = if preset == Preset::Table1 {
                (TABLE1_GAMMAS, 15)
            } else {
                (TABLE2_GAMMAS, 10)
            };
            let mut init = empty.clone();
            for gamma in gammas {
                let penalty = if preset == Preset::Table1 {
                    Penalty::MixedLogL1 { gamma }
                } else {
                    Penalty::Log { gamma }
                };
                let cfg = base_config(1e-5, penalty, iterations, seed, opts);
                let label = format!("gamma_{gamma:e}");
                let run = train(&label, init, &data, &cfg)?;
                rows.push(row(label, Some(gamma), &cfg, &run));
                init = run.net.clone();
                runs.push(run);
            }
        }
        Preset::RadialFidelity => {
            let w = wnorm_radial_2d(RADIAL_CENTER, 4000)?;
            w_norm = Some(w);
            let f = data.clean().expect("synthetic data carries clean targets").to_vec();
            for alpha in [1e-4, 1e-5] {
                for (name, penalty) in [("l1", Penalty::L1), ("phi", Penalty::Log { gamma: 1.0 })] {
                    let cfg = base_config(alpha, penalty, 15, seed, opts);
                    let label = format!("{name}_alpha_{alpha:e}");
                    let run = train(&label, empty.clone(), &data, &cfg)?;
                    let gamma = (!penalty.is_l1()).then(|| penalty.curvature());
                    let mut r = row(label, gamma, &cfg, &run);
                    r.fidelity_gap = Some(fidelity_gap(&run.net, &data, &f, alpha, w)?);
                    rows.push(r);
                    runs.push(run);
                }
            }
        }
    }
    Ok(ExperimentOutcome {
        preset,
        summary: ExperimentSummary {
            name: preset.name().to_string(),
            seed,
            data: spec,
            w_norm,
            rows,
        },
        runs,
    })
}
