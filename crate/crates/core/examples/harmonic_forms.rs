//! Discrete harmonic forms and their circulations around the loops in I*.
//!
//! cargo run --release --example harmonic_forms -- [family] [mesh]

use plate_fem::diagnostics::{boundary_circulation, circulation, harmonic_basis};
use plate_fem::mesh::boundary_topology;
use plate_fem::meshes;
use plate_fem::system::{Discretization, Scheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family = args.first().map(String::as_str).unwrap_or("rt");
    let name = args.get(1).map(String::as_str).unwrap_or("fig1");
    let mesh = meshes::by_name(name).ok_or("unknown mesh")?;
    let topo = boundary_topology(&mesh);
    let d = Discretization::new(&mesh, Scheme::parse(family, 2)?)?;
    let h = harmonic_basis(&d.w, &d.u, &d.q)?;
    println!("{topo}");
    println!(
        "dim = {} (formula {}), rot kernel {}, smallest gap {:.3e}",
        h.dim(),
        topo.harmonic_dimension(),
        h.rot_kernel_dim,
        h.min_gap()
    );
    for j in 0..h.dim() {
        let f = h.field(j);
        let circ: Vec<String> =
            topo.reduced_index_set.iter().map(|&i| format!("C{i}={:+.4e}", circulation(&f, i))).collect();
        println!("eta_{j}: {}  int rot = {:+.1e}", circ.join(" "), boundary_circulation(&f));
    }
    Ok(())
}
