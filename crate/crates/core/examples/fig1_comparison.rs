//! Noisy kinked cosine: `l1` against the log penalty over three seeds.
//!
//! ```text
//! cargo run --release --example fig1_comparison
//! ```

use sparsenet::experiment::{run_preset, ExperimentOptions, Preset};

fn main() -> sparsenet::Result<()> {
    for seed in 0..3 {
        let opts = ExperimentOptions { seed, ..Default::default() };
        let outcome = run_preset(Preset::Fig1, &opts)?;
        for row in &outcome.summary.rows {
            println!(
                "seed {seed}  {:<4} N = {:>3}  error = {:.3e}  stationary = {:?}",
                row.label, row.nodes, row.error, row.stationarity_pass
            );
        }
    }
    Ok(())
}
