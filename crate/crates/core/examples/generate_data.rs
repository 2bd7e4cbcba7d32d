//! Writes each synthetic target as a dataset CSV and reads it back.
//!
//! ```text
//! cargo run --release --example generate_data -- out_dir
//! ```

use sparsenet::data::{Dataset, Sampling, SyntheticSpec, Target};

fn main() -> sparsenet::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data_out".into()));
    std::fs::create_dir_all(&out).map_err(|e| sparsenet::Error::io(&out, e))?;
    let specs = [
        ("kinked_cos", Target::KinkedCos, Sampling::Uniform1d { k: 5000 }, 0.05),
        ("damped_sine", Target::DampedSine, Sampling::Grid1d { k: 1000 }, 0.0),
        ("damped_cos_2d", Target::DampedCos2d, Sampling::Grid2d { m: 51 }, 0.0),
        ("radial", Target::Radial { center: [0.1, 0.1] }, Sampling::Grid2d { m: 21 }, 0.0),
    ];
    for (name, target, sampling, noise_sigma) in specs {
        let data = SyntheticSpec { target, sampling, noise_sigma, seed: 0 }.generate()?;
        let path = out.join(format!("{name}.csv"));
        data.write_csv(&path)?;
        let back = Dataset::load_csv(&path)?;
        println!("{:<14} K = {:>4}  d = {}  -> {}", name, back.len(), back.dim(), path.display());
    }
    Ok(())
}
