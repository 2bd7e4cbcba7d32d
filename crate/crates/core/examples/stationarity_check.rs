//! Trains a small network and certifies it: `|p| <= alpha` on the sphere and
//! the support condition on every node.
//!
//! ```text
//! cargo run --release --example stationarity_check
//! ```

use sparsenet::analysis::{check_stationarity, representer_check};
use sparsenet::data::{Sampling, SyntheticSpec, Target};
use sparsenet::penalty::Penalty;
use sparsenet::train::{run_algorithm, AlgorithmConfig};

fn main() -> sparsenet::Result<()> {
    let data = SyntheticSpec {
        target: Target::DampedSine,
        sampling: Sampling::Grid1d { k: 200 },
        noise_sigma: 0.0,
        seed: 0,
    }
    .generate()?;
    let cfg = AlgorithmConfig {
        alpha: 1e-4,
        penalty: Penalty::Log { gamma: 1.0 },
        iterations: 10,
        stationarity_samples: 0,
        ..Default::default()
    };
    let (net, report) = run_algorithm(&data, &cfg)?;
    let stat = check_stationarity(&net, &data, &cfg.penalty, cfg.alpha, 10_000, 1e-2)?;
    println!("N = {}  J = {:.6e}", net.width(), report.final_objective);
    println!(
        "max|p|/alpha = {:.6} (sampled {:.6})  max node residual/alpha = {:.2e}",
        stat.max_abs_dual_ascent / cfg.alpha,
        stat.max_abs_dual_sampled / cfg.alpha,
        stat.max_node_residual / cfg.alpha
    );
    println!("stationary: {}  N <= K: {}", stat.pass, representer_check(&net, &data));
    Ok(())
}
