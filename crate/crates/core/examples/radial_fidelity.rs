//! Fidelity bound on `|x - x0|`: the squared error of a trained network stays
//! below `2 alpha |f|_W` plus the noise level.
//!
//! ```text
//! cargo run --release --example radial_fidelity
//! ```

use sparsenet::analysis::wnorm_radial_2d;
use sparsenet::experiment::{run_preset, ExperimentOptions, Preset, RADIAL_CENTER};

fn main() -> sparsenet::Result<()> {
    println!("|f|_W = {:.10}", wnorm_radial_2d(RADIAL_CENTER, 4000)?);
    let outcome = run_preset(Preset::RadialFidelity, &ExperimentOptions::default())?;
    for row in &outcome.summary.rows {
        println!(
            "{:<22} N = {:>3}  error = {:.3e}  gap = {:.3e}",
            row.label,
            row.nodes,
            row.error,
            row.fidelity_gap.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
