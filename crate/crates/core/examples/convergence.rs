//! Refinement study on the two-hole plate with the manufactured solution.
//!
//! cargo run --release --example convergence -- [family] [p] [levels]

use plate_fem::meshes;
use plate_fem::study::{run_convergence, StudyConfig};
use plate_fem::system::{MaterialParams, Scheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family = args.first().map(String::as_str).unwrap_or("rt");
    let p = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(2);
    let levels = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let config = StudyConfig {
        scheme: Scheme::parse(family, p)?,
        ts: vec![1.0, 1e-1, 1e-2, 1e-3],
        levels,
        material: MaterialParams::default(),
        mesh: meshes::holey(),
    };
    let start = std::time::Instant::now();
    let report = run_convergence(&config)?;
    print!("{}", report.to_csv());
    eprintln!("{:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
