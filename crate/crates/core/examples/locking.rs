//! Shear locking of plain P1 x P1 at small thickness, next to the RT family on the same meshes.
//!
//! cargo run --release --example locking -- [t] [levels]

use plate_fem::meshes;
use plate_fem::study::{run_convergence, StudyConfig};
use plate_fem::system::{MaterialParams, Scheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let t: f64 = args.first().map(|s| s.parse()).transpose()?.unwrap_or(1e-3);
    let levels = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let plain = StudyConfig {
        scheme: Scheme::parse("plain", 1)?,
        ts: vec![t],
        levels,
        material: MaterialParams::default(),
        mesh: meshes::holey(),
    };
    let rt = StudyConfig { scheme: Scheme::RtMitc(2), ..plain.clone() };
    let a = run_convergence(&plain)?;
    let b = run_convergence(&rt)?;
    println!("level,h,plain_w_ratio,plain_total,rt_total");
    for (p, r) in a.rows.iter().zip(&b.rows) {
        println!("{},{:.4e},{:.3e},{:.3e},{:.3e}", p.level, p.h, p.errors.w_ratio, p.errors.total, r.errors.total);
    }
    Ok(())
}
