//! Structural condition report for one scheme on a bundled mesh.
//!
//! cargo run --release --example diagnostics -- [family] [p] [mesh] [levels]

use plate_fem::diagnostics::{run_diagnostics, DiagnosticsOptions};
use plate_fem::mesh::refine_uniform;
use plate_fem::meshes;
use plate_fem::system::{Discretization, Scheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family = args.first().map(String::as_str).unwrap_or("rt");
    let p = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(2);
    let name = args.get(2).map(String::as_str).unwrap_or("holey");
    let levels: usize = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let mut mesh = meshes::by_name(name).ok_or("unknown mesh")?;
    for level in 0..levels {
        let d = Discretization::new(&mesh, Scheme::parse(family, p)?)?;
        let rep = run_diagnostics(&d, level, DiagnosticsOptions::default())?;
        println!("{}", rep.to_key_value());
        mesh = refine_uniform(&mesh);
    }
    Ok(())
}
