//! Command-line front end: `train`, `experiment`, `check`, `export-dual` and
//! `generate-data`. Artifacts go to files; diagnostics go to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{check_stationarity_with, fidelity_gap, representer_check, wnorm_radial_2d, StationarityOptions};
use crate::data::{Dataset, Sampling, SyntheticSpec, Target};
use crate::error::{Error, Result};
use crate::experiment::{preset_data, run_preset, ExperimentOptions, Preset};
use crate::geometry::ChartPoint;
use crate::loss_dual::DualField;
use crate::network::ShallowNet;
use crate::penalty::Penalty;
use crate::train::{run_algorithm, AlgorithmConfig};

#[derive(Debug, Parser)]
#[command(name = "sparsenet", version, about = "Sparse shallow ReLU networks with nonconvex penalties")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network from a JSON config, with flag overrides.
    Train(TrainArgs),
    /// Run an experiment preset.
    Experiment(ExperimentArgs),
    /// Check stationarity, the width bound and optionally the fidelity bound.
    Check(CheckArgs),
    /// Export the dual variable over a grid of nodes.
    ExportDual(ExportArgs),
    /// Write a synthetic dataset as CSV.
    GenerateData(GenerateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PenaltyKind {
    L1,
    Log,
    Mcp,
    MixedLogL1,
}

fn make_penalty(kind: PenaltyKind, gamma: Option<f64>) -> Result<Penalty> {
    let need = |g: Option<f64>| g.ok_or_else(|| Error::Config("--gamma is required for curved penalties".into()));
    let p = match kind {
        PenaltyKind::L1 => Penalty::L1,
        PenaltyKind::Log => Penalty::Log { gamma: need(gamma)? },
        PenaltyKind::Mcp => Penalty::Mcp { gamma: need(gamma)? },
        PenaltyKind::MixedLogL1 => Penalty::MixedLogL1 { gamma: need(gamma)? },
    };
    if p.curvature() < 0.0 || !(p.is_l1() || p.curvature() > 0.0) {
        return Err(Error::Config("gamma must be positive".into()));
    }
    Ok(p)
}

/// Replaces the curvature of a curved penalty.
fn with_gamma(p: Penalty, gamma: f64) -> Result<Penalty> {
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    Ok(match p {
        Penalty::L1 => return Err(Error::Config("--gamma needs a curved penalty (use --penalty)".into())),
        Penalty::Log { .. } => Penalty::Log { gamma },
        Penalty::Mcp { .. } => Penalty::Mcp { gamma },
        Penalty::MixedLogL1 { .. } => Penalty::MixedLogL1 { gamma },
    })
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV (overrides the config's data source).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub penalty: Option<PenaltyKind>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub n_trial: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where the training data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataConfig {
    Csv(PathBuf),
    Synthetic(SyntheticSpec),
}

/// The JSON document read by `train`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl TrainConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn apply(&mut self, args: &TrainArgs) -> Result<()> {
        if let Some(p) = &args.data {
            self.data = DataConfig::Csv(p.clone());
        }
        let a = &mut self.algorithm;
        if let Some(v) = args.alpha {
            a.alpha = v;
        }
        if let Some(kind) = args.penalty {
            a.penalty = make_penalty(kind, args.gamma.or(Some(a.penalty.curvature()).filter(|g| *g > 0.0)))?;
        } else if let Some(g) = args.gamma {
            a.penalty = with_gamma(a.penalty, g)?;
        }
        if let Some(v) = args.iterations {
            a.iterations = v;
        }
        if let Some(v) = args.n_trial {
            a.insertion.n_trial = v;
        }
        if let Some(v) = args.seed {
            a.seed = v;
        }
        if let Some(o) = &args.out {
            self.out = o.clone();
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// One of fig1, exp1d, exp2d, table1, table2, radial-fidelity.
    pub name: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Grid side for the two-dimensional presets.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "l1")]
    pub penalty: PenaltyKind,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// W-norm bound of the target for the fidelity check.
    #[arg(long)]
    pub w_norm: Option<f64>,
    /// Center of a radial target `|x - center|`; derives the W-norm bound and
    /// the noise-free values.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub radial_center: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Grid points: angles for d = 1, points per chart axis for d = 2.
    #[arg(long, default_value_t = 360)]
    pub grid: usize,
    /// Half-width of the chart box for d = 2.
    #[arg(long, default_value_t = 3.0)]
    pub extent: f64,
    /// Output directory (`dual.csv`, `nodes.csv`).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetKind {
    KinkedCos,
    DampedSine,
    DampedCos2d,
    Radial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SamplingKind {
    Uniform,
    Grid,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Use the data of an experiment preset.
    #[arg(long, conflicts_with = "target")]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub target: Option<TargetKind>,
    #[arg(long, value_delimiter = ',', num_args = 2, default_value = "0.1,0.1")]
    pub center: Vec<f64>,
    #[arg(long, value_enum, default_value = "grid")]
    pub sampling: SamplingKind,
    /// Number of points in 1D, grid side in 2D.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_data(cfg: &DataConfig) -> Result<Dataset> {
    match cfg {
        DataConfig::Csv(p) => Dataset::load_csv(p),
        DataConfig::Synthetic(s) => s.generate(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// `x_1..x_d,y,prediction` rows.
pub fn predictions_csv(net: &ShallowNet, data: &Dataset) -> String {
    let mut out = String::new();
    for j in 1..=data.dim() {
        let _ = write!(out, "x_{j},");
    }
    out.push_str("y,prediction\n");
    for (x, y) in data.xs().zip(data.ys()) {
        for v in x {
            let _ = write!(out, "{v:.16e},");
        }
        let _ = writeln!(out, "{y:.16e},{:.16e}", net.eval_unchecked(x));
    }
    out
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => TrainConfig::load(p)?,
        None => {
            let data = args
                .data
                .clone()
                .ok_or_else(|| Error::Config("train needs --config or --data".into()))?;
            TrainConfig {
                data: DataConfig::Csv(data),
                algorithm: AlgorithmConfig::default(),
                out: default_out(),
            }
        }
    };
    cfg.apply(args)?;
    let data = load_data(&cfg.data)?;
    let (net, report) = run_algorithm(&data, &cfg.algorithm)?;
    write_file(&cfg.out.join("network.csv"), &net.to_csv_string())?;
    #[derive(Serialize)]
    struct Artifact<'a> {
        data: &'a DataConfig,
        report: &'a crate::train::TrainReport,
    }
    let json = serde_json::to_string_pretty(&Artifact {
        data: &cfg.data,
        report: &report,
    })?;
    write_file(&cfg.out.join("report.json"), &json)?;
    write_file(&cfg.out.join("predictions.csv"), &predictions_csv(&net, &data))?;
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let preset: Preset = args.name.parse()?;
    let opts = ExperimentOptions {
        seed: args.seed,
        grid: args.grid,
        iterations: args.iterations,
        ..Default::default()
    };
    let outcome = run_preset(preset, &opts)?;
    outcome.write(&args.out)
}

/// Returns whether every requested check passed.
fn cmd_check(args: &CheckArgs) -> Result<bool> {
    let net = ShallowNet::read_csv(&args.network)?;
    let data = Dataset::load_csv(&args.data)?;
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: net.dim(),
        });
    }
    let penalty = make_penalty(args.penalty, args.gamma)?;
    let opts = StationarityOptions {
        n_samples: args.samples,
        tol: args.tol,
        seed: args.seed,
        ..Default::default()
    };
    let stat = check_stationarity_with(&net, &data, &penalty, args.alpha, &opts)?;
    let representer = representer_check(&net, &data);

    let center = args.radial_center.as_ref().map(|c| [c[0], c[1]]);
    let w_norm = match (args.w_norm, center) {
        (Some(w), _) => Some(w),
        (None, Some(c)) => Some(wnorm_radial_2d(c, 4000)?),
        _ => None,
    };
    let fidelity = match w_norm {
        Some(w) => {
            let f: Vec<f64> = match center {
                Some(c) => data
                    .xs()
                    .map(|x| Target::Radial { center: c }.eval(x))
                    .collect::<Result<_>>()?,
                None => data.ys().to_vec(),
            };
            Some(fidelity_gap(&net, &data, &f, args.alpha, w)?)
        }
        None => None,
    };

    let mut out = String::new();
    let _ = writeln!(out, "width {} / points {}: representer {}", net.width(), data.len(), pass_word(representer));
    let _ = writeln!(
        out,
        "max |p| sampled {:.6e}, after ascent {:.6e}, alpha {:.6e}: dual {}",
        stat.max_abs_dual_sampled,
        stat.max_abs_dual_ascent,
        args.alpha,
        pass_word(stat.dual_pass)
    );
    let _ = writeln!(out, "max node residual {:.6e}: nodes {}", stat.max_node_residual, pass_word(stat.node_pass));
    if !stat.node_pass {
        out.push_str("node,c,residual\n");
        for (i, (c, r)) in net.weights().iter().zip(&stat.per_node_residual).enumerate() {
            let _ = writeln!(out, "{i},{c:.6e},{r:.6e}");
        }
    }
    if let Some(g) = fidelity {
        let _ = writeln!(out, "fidelity gap {g:.6e}: fidelity {}", pass_word(g <= 0.0));
    }
    print!("{out}");
    Ok(stat.pass && representer && fidelity.is_none_or(|g| g <= 0.0))
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Dual values over the node grid and at the network nodes, as CSV text.
pub fn export_dual(net: &ShallowNet, data: &Dataset, grid: usize, extent: f64) -> Result<(String, String)> {
    let field = DualField::new(net, data)?;
    let mut dual = String::new();
    let mut nodes = String::new();
    match data.dim() {
        1 => {
            dual.push_str("angle,a,b,p\n");
            for i in 0..grid {
                let t = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / grid as f64;
                let (b, a) = t.sin_cos();
                let p = field.value_raw(&[a, b]);
                let _ = writeln!(dual, "{t:.16e},{a:.16e},{b:.16e},{p:.16e}");
            }
            nodes.push_str("angle,knot,a,b,c,p\n");
            for (n, c) in net.nodes().iter().zip(net.weights()) {
                let (a, b) = (n.a()[0], n.b());
                let knot = if a != 0.0 { -b / a } else { f64::NAN };
                let _ = writeln!(
                    nodes,
                    "{:.16e},{knot:.16e},{a:.16e},{b:.16e},{c:.16e},{:.16e}",
                    n.angle(),
                    field.value(n)
                );
            }
        }
        2 => {
            dual.push_str("z_1,z_2,a_1,a_2,b,p\n");
            let m = grid.max(2);
            for i in 0..m {
                for j in 0..m {
                    let z1 = -extent + 2.0 * extent * i as f64 / (m - 1) as f64;
                    let z2 = -extent + 2.0 * extent * j as f64 / (m - 1) as f64;
                    let node = ChartPoint::new(vec![z1, z2]).to_sphere();
                    let w = node.as_slice();
                    let _ = writeln!(
                        dual,
                        "{z1:.16e},{z2:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                        w[0],
                        w[1],
                        w[2],
                        field.value(&node)
                    );
                }
            }
            nodes.push_str("z_1,z_2,a_1,a_2,b,c,p\n");
            for (n, c) in net.nodes().iter().zip(net.weights()) {
                let z = n.to_chart()?.z;
                let w = n.as_slice();
                let _ = writeln!(
                    nodes,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{c:.16e},{:.16e}",
                    z[0],
                    z[1],
                    w[0],
                    w[1],
                    w[2],
                    field.value(n)
                );
            }
        }
        d => return Err(Error::Config(format!("export-dual supports d = 1 or 2, got d = {d}"))),
    }
    Ok((dual, nodes))
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    let net = ShallowNet::read_csv(&args.network)?;
    let data = Dataset::load_csv(&args.data)?;
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: net.dim(),
        });
    }
    let (dual, nodes) = export_dual(&net, &data, args.grid, args.extent)?;
    write_file(&args.out.join("dual.csv"), &dual)?;
    write_file(&args.out.join("nodes.csv"), &nodes)
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let spec = match (&args.preset, args.target) {
        (Some(name), _) => preset_data(
            name.parse()?,
            &ExperimentOptions {
                seed: args.seed,
                ..Default::default()
            },
        ),
        (None, Some(kind)) => {
            let target = match kind {
                TargetKind::KinkedCos => Target::KinkedCos,
                TargetKind::DampedSine => Target::DampedSine,
                TargetKind::DampedCos2d => Target::DampedCos2d,
                TargetKind::Radial => Target::Radial {
                    center: [args.center[0], args.center[1]],
                },
            };
            let sampling = match (target.dim(), args.sampling) {
                (1, SamplingKind::Uniform) => Sampling::Uniform1d { k: args.points },
                (1, SamplingKind::Grid) => Sampling::Grid1d { k: args.points },
                (_, SamplingKind::Grid) => Sampling::Grid2d { m: args.points },
                (_, SamplingKind::Uniform) => {
                    return Err(Error::Config("uniform sampling is one-dimensional; use --sampling grid".into()))
                }
            };
            SyntheticSpec {
                target,
                sampling,
                noise_sigma: args.noise,
                seed: args.seed,
            }
        }
        (None, None) => return Err(Error::Config("generate-data needs --preset or --target".into())),
    };
    spec.generate()?.write_csv(&args.out)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // only the first pool configuration in a process takes effect
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a).map(|_| true),
        Command::Experiment(a) => cmd_experiment(a).map(|_| true),
        Command::Check(a) => cmd_check(a),
        Command::ExportDual(a) => cmd_export(a).map(|_| true),
        Command::GenerateData(a) => cmd_generate(a).map(|_| true),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
