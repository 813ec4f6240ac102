//! The reduction operator: commuting diagram, edge moments, idempotency and its norm.
//!
//! cargo run --release --example reduction -- [family] [mesh]

use plate_fem::diagnostics::operator_residuals;
use plate_fem::femlib::{interpolate_scalar, interpolate_vector};
use plate_fem::meshes;
use plate_fem::reduction::{measure_cr, xi_r};
use plate_fem::system::{Discretization, Scheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family = args.first().map(String::as_str).unwrap_or("rt");
    let name = args.get(1).map(String::as_str).unwrap_or("holey");
    let mesh = meshes::by_name(name).ok_or("unknown mesh")?;
    let d = Discretization::new(&mesh, Scheme::parse(family, 2)?)?;
    println!("{:?}: V {} -> U {} free dofs", d.r.kind(), d.v.nfree(), d.u.nfree());

    let res = operator_residuals(&d.r, &d.q, 20, 0)?;
    println!(
        "commuting {:.2e}  edge moments {:.2e}  idempotency {:.2e}  ({} trials)",
        res.commuting, res.edge_moment, res.idempotency, res.trials
    );
    let cr = measure_cr(&d.r, 20, 0)?;
    println!("C_R: sampled {:.4} operator norm {:.4}", cr.sampled, cr.operator_norm);

    // A Kirchhoff pair theta = grad v with v quadratic: Xi_R vanishes exactly.
    let v = interpolate_scalar(&d.w, |x| x[0] * x[1] + x[0] * x[0]);
    let psi = interpolate_vector(&d.v, |x| [x[1] + 2.0 * x[0], x[0]]);
    let xi = xi_r(&v, &psi, &d.r)?;
    let n = xi.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    println!("max |Xi_R(v, grad v)| coefficient {n:.2e}");
    Ok(())
}
