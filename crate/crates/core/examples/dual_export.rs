//! Trains on the damped sine and writes the dual variable over the circle of
//! nodes, plus the nodes themselves, as CSV.
//!
//! ```text
//! cargo run --release --example dual_export -- out_dir
//! ```

use sparsenet::cli::export_dual;
use sparsenet::data::{Sampling, SyntheticSpec, Target};
use sparsenet::penalty::Penalty;
use sparsenet::train::{run_algorithm, AlgorithmConfig};

fn main() -> sparsenet::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "dual_out".into()));
    let data = SyntheticSpec {
        target: Target::DampedSine,
        sampling: Sampling::Grid1d { k: 200 },
        noise_sigma: 0.0,
        seed: 0,
    }
    .generate()?;
    let cfg = AlgorithmConfig {
        alpha: 1e-4,
        penalty: Penalty::MixedLogL1 { gamma: 1.0 },
        iterations: 8,
        ..Default::default()
    };
    let (net, _) = run_algorithm(&data, &cfg)?;
    let (grid_csv, nodes_csv) = export_dual(&net, &data, 360, 2.0)?;
    std::fs::create_dir_all(&out).map_err(|e| sparsenet::Error::io(&out, e))?;
    for (name, body) in [("dual.csv", grid_csv), ("nodes.csv", nodes_csv)] {
        let path = out.join(name);
        std::fs::write(&path, body).map_err(|e| sparsenet::Error::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
