//! Boundary topology of a mesh and how refinement leaves it unchanged.
//!
//! cargo run --release --example mesh_topology -- [mesh name or file]

use plate_fem::mesh::{alfeld_split, boundary_topology, read_mesh_file, refine_uniform_times};
use plate_fem::meshes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "fig1".into());
    let mesh = match meshes::by_name(&arg) {
        Some(m) => m,
        None => read_mesh_file(&arg)?,
    };
    let topo = boundary_topology(&mesh);
    println!(
        "{arg}: V={} T={} E={} holes={}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.num_edges(),
        mesh.num_holes()
    );
    println!("{topo}");
    println!("harmonic dimension |I*| + Ncs - 1 = {}", topo.harmonic_dimension());
    for (i, c) in topo.cs_components.iter().enumerate() {
        println!("  cs component {i}: {} boundary edges", c.len());
    }
    for (i, c) in topo.free_components.iter().enumerate() {
        println!("  free component {i}: {} boundary edges", c.len());
    }

    for n in 1..=2 {
        let fine = refine_uniform_times(&mesh, n);
        let t = boundary_topology(&fine);
        println!(
            "refined x{n}: T={} h={:.4e} same index sets: {}",
            fine.num_triangles(),
            fine.h(),
            t.index_set == topo.index_set && t.n_cs() == topo.n_cs()
        );
    }
    let split = alfeld_split(&mesh);
    println!("alfeld: T={} V={} (one new vertex per triangle)", split.num_triangles(), split.num_vertices());
    Ok(())
}
