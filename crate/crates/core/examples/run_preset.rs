//! Runs one experiment preset and prints its summary table.
//!
//! ```text
//! cargo run --release --example run_preset -- exp1d 0 [grid]
//! ```

use sparsenet::experiment::{run_preset, ExperimentOptions, Preset};

fn main() -> sparsenet::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().as_deref().unwrap_or("exp1d").parse()?;
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let grid = args.next().map(|s| s.parse().expect("grid must be an integer"));
    let opts = ExperimentOptions {
        seed,
        grid,
        ..Default::default()
    };
    let outcome = run_preset(preset, &opts)?;
    for (row, run) in outcome.summary.rows.iter().zip(&outcome.runs) {
        let widths: Vec<String> = run.report.iterations.iter().map(|r| r.width_end.to_string()).collect();
        let stat = run.report.stationarity.as_ref();
        println!(
            "{:<24} N = {:>4}  error = {:.3e}  J = {:.6e}  {:>6.1}s  stationary: {:?} (max|p|/alpha {:.4}, node {:.2e})  widths {}",
            row.label,
            row.nodes,
            row.error,
            row.objective,
            row.seconds,
            row.stationarity_pass,
            stat.map_or(f64::NAN, |s| s.max_abs_dual_ascent / row.alpha),
            stat.map_or(f64::NAN, |s| s.max_node_residual / row.alpha),
            widths.join(",")
        );
        if let Some(g) = row.fidelity_gap {
            println!("    fidelity gap {g:.3e}");
        }
    }
    Ok(())
}
