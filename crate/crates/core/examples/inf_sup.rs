//! Inf-sup estimates under refinement.
//!
//! cargo run --release --example inf_sup -- [family] [p] [mesh] [levels]

use plate_fem::diagnostics::{estimate_beta_harmonic, estimate_beta_rot, harmonic_basis};
use plate_fem::mesh::refine_uniform;
use plate_fem::meshes;
use plate_fem::system::{Discretization, Scheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family = args.first().map(String::as_str).unwrap_or("rt");
    let p = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(2);
    let name = args.get(2).map(String::as_str).unwrap_or("holey");
    let levels: usize = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let scheme = Scheme::parse(family, p)?;
    let mut mesh = meshes::by_name(name).ok_or("unknown mesh")?;
    println!("level,h,beta_rot,zero_modes,beta_harmonic");
    for level in 0..levels {
        let d = Discretization::new(&mesh, scheme)?;
        let br = estimate_beta_rot(&d.v, &d.q)?;
        let h = harmonic_basis(&d.w, &d.u, &d.q)?;
        let bh = estimate_beta_harmonic(&d.v, &d.r, &d.q, &h)?;
        println!("{level},{:.4e},{:.6e},{},{:.6e}", mesh.h(), br.value, br.zero_modes, bh.value);
        mesh = refine_uniform(&mesh);
    }
    Ok(())
}
