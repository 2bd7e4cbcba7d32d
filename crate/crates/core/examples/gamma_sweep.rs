//! Warm-started sweep over the curvature of the mixed log/l1 penalty: larger
//! `gamma` buys fewer nodes at little cost in accuracy.
//!
//! ```text
//! cargo run --release --example gamma_sweep
//! ```

use sparsenet::experiment::{run_preset, ExperimentOptions, Preset};

fn main() -> sparsenet::Result<()> {
    let outcome = run_preset(Preset::Table1, &ExperimentOptions::default())?;
    print!("{}", outcome.summary.to_csv_string(true));
    Ok(())
}
