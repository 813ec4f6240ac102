//! The primal reduced scheme and the mixed scheme with shear stress give the same solution.
//!
//! cargo run --release --example mixed_equivalence -- [family] [t]

use plate_fem::meshes;
use plate_fem::study::ManufacturedSolution;
use plate_fem::system::{shear_stress, solve_mixed, solve_primal, Discretization, MaterialParams, Scheme};

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() / n
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family = args.first().map(String::as_str).unwrap_or("bdm");
    let t: f64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(1e-2);
    let mat = MaterialParams::default().with_t(t);
    let d = Discretization::new(&meshes::holey(), Scheme::parse(family, 2)?)?;
    let load = ManufacturedSolution::new(mat);
    let p = solve_primal(&d, &mat, &load)?;
    let m = solve_mixed(&d, &mat, &load)?;
    println!("primal: {} unknowns, backward error {:.2e}", p.info.unknowns, p.info.backward_error);
    println!("mixed:  {} unknowns, backward error {:.2e}", m.info.unknowns, m.info.backward_error);
    println!("w      rel diff {:.3e}", rel(p.w.coeffs(), m.w.coeffs()));
    println!("theta  rel diff {:.3e}", rel(p.theta.coeffs(), m.theta.coeffs()));
    let g = shear_stress(&d, &m.w, &m.theta, &mat);
    println!("gamma vs lambda t^-2 Xi_R(w, theta) rel diff {:.3e}", rel(g.coeffs(), m.gamma.coeffs()));
    Ok(())
}
