//! Reduction operators into the shear space and the associated L2 projections.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PlateError, Result};
use crate::femlib::assembly::{mass_matrix, DofSet};
use crate::femlib::{triangle_rule, DiscreteField, FESpace, Family, Tabulation, OVERSAMPLING};
use crate::linalg::{factorize, norm, solve_checked_tol, sparse_solve, SolveKind, SparseMatrix, TripletBuilder};
use crate::mesh::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReductionKind {
    RTInterpolant(usize),
    BDMInterpolant(usize),
    /// No reduction: the target space contains the source space.
    Identity,
}

/// Element-local interpolation of a rotation space into an H(rot) space.
#[derive(Debug)]
pub struct ReductionOperator {
    kind: ReductionKind,
    source: Arc<FESpace>,
    target: Arc<FESpace>,
    /// Per cell, row-major `n_target_local x n_source_local`.
    local: Vec<Vec<f64>>,
    global: SparseMatrix,
}

/// Applies the target's dof functionals to the tabulated source basis on cell `k`.
fn local_interpolation(target: &FESpace, source: &FESpace, k: usize, grad: bool) -> Vec<f64> {
    let el = target.hrot_element().expect("target must be an H(rot) space");
    let mesh = target.mesh();
    let fq = el.functionals(mesh, k, source.family().max_poly_degree());
    let tab = source.tabulate(k, &fq.reference);
    let nu = fq.n_functionals;
    let nv = tab.n_basis;
    let mut out = vec![0.0; nu * nv];
    for j in 0..nv {
        let vals: Vec<[f64; 2]> =
            (0..fq.n_points()).map(|q| if grad { tab.scalar_grad(j, q) } else { tab.vector(j, q) }).collect();
        let l = fq.apply(&vals);
        for i in 0..nu {
            out[i * nv + j] = l[i];
        }
    }
    out
}

/// Assembles local interpolation matrices into a global one, each target dof taken from
/// the first cell that owns it.
fn assemble_owned(target: &FESpace, source: &FESpace, local: &[Vec<f64>]) -> SparseMatrix {
    let mut t = TripletBuilder::new(target.ndofs(), source.ndofs());
    let mut done = vec![false; target.ndofs()];
    for (k, lk) in local.iter().enumerate() {
        let ud = target.cell_dofs(k);
        let vd = source.cell_dofs(k);
        for (i, &gi) in ud.iter().enumerate() {
            if done[gi] {
                continue;
            }
            done[gi] = true;
            for (j, &gj) in vd.iter().enumerate() {
                let v = lk[i * vd.len() + j];
                if v != 0.0 {
                    t.push(gi, gj, v);
                }
            }
        }
    }
    t.build()
}

impl ReductionOperator {
    pub fn new(kind: ReductionKind, source: Arc<FESpace>, target: Arc<FESpace>) -> Result<Self> {
        if !Arc::ptr_eq(source.mesh(), target.mesh()) {
            return Err(PlateError::FamilyMismatch("source and target live on different meshes".into()));
        }
        let ok = match (kind, target.family()) {
            (ReductionKind::RTInterpolant(p), Family::RaviartThomas(q)) => p == q,
            (ReductionKind::BDMInterpolant(p), Family::BrezziDouglasMarini(q)) => p == q,
            (ReductionKind::Identity, Family::BrezziDouglasMarini(q)) => {
                source.family().max_poly_degree() <= q && !matches!(source.family(), Family::BubbleEnrichedVector(_))
            }
            _ => false,
        };
        if !ok || source.ncomp() != 2 || source.family().is_hrot() {
            return Err(PlateError::FamilyMismatch(format!(
                "{kind:?} cannot map {:?} into {:?}",
                source.family(),
                target.family()
            )));
        }
        let local: Vec<Vec<f64>> =
            (0..source.mesh().num_triangles()).map(|k| local_interpolation(&target, &source, k, false)).collect();
        let global = assemble_owned(&target, &source, &local);
        Ok(Self { kind, source, target, local, global })
    }

    pub fn kind(&self) -> ReductionKind {
        self.kind
    }

    pub fn source(&self) -> &Arc<FESpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FESpace> {
        &self.target
    }

    /// Local matrix of cell `k`: target local dofs by source local dofs.
    pub fn local_matrix(&self, k: usize) -> &[f64] {
        &self.local[k]
    }

    /// Global matrix over all dofs (target x source).
    pub fn global_matrix(&self) -> &SparseMatrix {
        &self.global
    }

    pub fn reduce(&self, psi: &DiscreteField) -> Result<DiscreteField> {
        if !Arc::ptr_eq(psi.space(), &self.source) {
            return Err(PlateError::FamilyMismatch("field does not live on the source space".into()));
        }
        Ok(DiscreteField::new(self.target.clone(), self.global.matvec(psi.coeffs())))
    }

    /// Interpolates an analytic vector field (degrees of freedom by oversampled quadrature).
    pub fn reduce_analytic(&self, g: impl Fn(Point) -> [f64; 2]) -> DiscreteField {
        crate::femlib::interpolate_vector(&self.target, g)
    }

    /// Values of `R phi_j` for every local source basis function at the tabulated points.
    pub fn reduced_basis_values(&self, k: usize, target_tab: &Tabulation) -> Vec<[f64; 2]> {
        let nu = target_tab.n_basis;
        let nv = self.local[k].len() / nu;
        let nq = target_tab.n_points;
        let mut out = vec![[0.0; 2]; nv * nq];
        for j in 0..nv {
            for i in 0..nu {
                let r = self.local[k][i * nv + j];
                if r == 0.0 {
                    continue;
                }
                for q in 0..nq {
                    out[j * nq + q][0] += r * target_tab.value(i, q, 0);
                    out[j * nq + q][1] += r * target_tab.value(i, q, 1);
                }
            }
        }
        out
    }
}

impl ReductionOperator {
    /// `rot(R phi_j)` at the tabulated points, `j * nq + q`.
    pub fn reduced_basis_rot(&self, k: usize, target_tab: &Tabulation) -> Vec<f64> {
        let nu = target_tab.n_basis;
        let nv = self.local[k].len() / nu;
        let nq = target_tab.n_points;
        let mut out = vec![0.0; nv * nq];
        for j in 0..nv {
            for i in 0..nu {
                let r = self.local[k][i * nv + j];
                if r != 0.0 {
                    for q in 0..nq {
                        out[j * nq + q] += r * target_tab.rot(i, q);
                    }
                }
            }
        }
        out
    }

    /// Applies the target dof functionals to a field that already lives in the target
    /// space (the identity up to roundoff).
    pub fn reinterpolate(&self, eta: &DiscreteField) -> Result<DiscreteField> {
        if !Arc::ptr_eq(eta.space(), &self.target) {
            return Err(PlateError::FamilyMismatch("field does not live on the target space".into()));
        }
        let local: Vec<Vec<f64>> = (0..self.target.mesh().num_triangles())
            .map(|k| local_interpolation(&self.target, &self.target, k, false))
            .collect();
        let m = assemble_owned(&self.target, &self.target, &local);
        Ok(DiscreteField::new(self.target.clone(), m.matvec(eta.coeffs())))
    }
}

/// Global matrix interpolating gradients of a scalar space into an H(rot) space.
pub fn gradient_matrix(w: &FESpace, u: &FESpace) -> SparseMatrix {
    let local: Vec<Vec<f64>> = (0..w.mesh().num_triangles()).map(|k| local_interpolation(u, w, k, true)).collect();
    assemble_owned(u, w, &local)
}

/// `grad v - R psi`, expressed in the target space.
pub fn xi_r(v: &DiscreteField, psi: &DiscreteField, r: &ReductionOperator) -> Result<DiscreteField> {
    if v.space().ncomp() != 1 || !matches!(v.space().family(), Family::LagrangeScalar(_)) {
        return Err(PlateError::FamilyMismatch("first argument must be a continuous scalar field".into()));
    }
    let g = gradient_matrix(v.space(), r.target());
    let gv = g.matvec(v.coeffs());
    let rp = r.reduce(psi)?;
    let c = gv.iter().zip(rp.coeffs()).map(|(a, b)| a - b).collect();
    Ok(DiscreteField::new(r.target().clone(), c))
}

/// Mass-matrix solves are held to this backward error.
const MASS_TOL: f64 = 1e-12;

/// L2 projection of a scalar source into a (possibly mean-zero) discontinuous space.
/// `f(cell, reference points)` returns the source values at those points.
pub fn project_q(
    space: &Arc<FESpace>,
    source_degree: usize,
    f: impl Fn(usize, &[[f64; 2]]) -> Vec<f64>,
) -> Result<DiscreteField> {
    if !matches!(space.family(), Family::DiscontinuousScalar(_)) {
        return Err(PlateError::FamilyMismatch("project_q needs a discontinuous scalar space".into()));
    }
    let n = space.ndofs();
    let mesh = space.mesh();
    let rule = triangle_rule(source_degree + space.family().degree());
    let mut rhs = vec![0.0; n];
    for k in 0..mesh.num_triangles() {
        let det = mesh.cell_geometry(k).det;
        let tab = space.tabulate(k, &rule.points);
        let vals = f(k, &rule.points);
        for (i, &d) in space.cell_dofs(k).iter().enumerate() {
            rhs[d] += det * (0..rule.points.len()).map(|q| rule.weights[q] * vals[q] * tab.value(i, q, 0)).sum::<f64>();
        }
    }
    let m = mass_matrix(space, DofSet::All);
    let x = if space.mean_zero() {
        let ones = crate::femlib::assembly::basis_integrals(space, DofSet::All);
        let mut t = TripletBuilder::new(n + 1, n + 1);
        for (i, j, v) in m.entries() {
            t.push(i, j, v);
        }
        for (i, &o) in ones.iter().enumerate() {
            t.push(i, n, o);
            t.push(n, i, o);
        }
        let a = t.build();
        let mut b = rhs.clone();
        b.push(0.0);
        let f = factorize(&a, SolveKind::Saddle)?;
        let mut x = solve_checked_tol(&a, &f, &b, MASS_TOL)?;
        x.truncate(n);
        x
    } else {
        let f = factorize(&m, SolveKind::Spd)?;
        solve_checked_tol(&m, &f, &rhs, MASS_TOL)?
    };
    Ok(DiscreteField::new(space.clone(), x))
}

/// `P rot psi` for a discrete vector field.
pub fn project_rot(space_q: &Arc<FESpace>, psi: &DiscreteField) -> Result<DiscreteField> {
    let deg = psi.space().family().max_poly_degree();
    project_q(space_q, deg.saturating_sub(1), |k, pts| psi.eval_many(k, pts).iter().map(|v| v.rot()).collect())
}

/// L2 projection into the constrained H(rot) space.
pub fn project_u(
    space: &Arc<FESpace>,
    source_degree: usize,
    eta: impl Fn(usize, &[[f64; 2]]) -> Vec<[f64; 2]>,
) -> Result<DiscreteField> {
    if !space.family().is_hrot() {
        return Err(PlateError::FamilyMismatch("project_u needs an H(rot) space".into()));
    }
    let mesh = space.mesh();
    let rule = triangle_rule(source_degree + space.family().degree());
    let mut rhs = vec![0.0; space.nfree()];
    for k in 0..mesh.num_triangles() {
        let det = mesh.cell_geometry(k).det;
        let tab = space.tabulate(k, &rule.points);
        let vals = eta(k, &rule.points);
        for (i, &d) in space.cell_dofs(k).iter().enumerate() {
            if let Some(g) = space.free_index(d) {
                rhs[g] += det
                    * (0..rule.points.len())
                        .map(|q| {
                            let b = tab.vector(i, q);
                            rule.weights[q] * (vals[q][0] * b[0] + vals[q][1] * b[1])
                        })
                        .sum::<f64>();
            }
        }
    }
    let m = mass_matrix(space, DofSet::Free);
    let f = factorize(&m, SolveKind::Spd)?;
    let x = solve_checked_tol(&m, &f, &rhs, MASS_TOL)?;
    Ok(DiscreteField::from_free(space.clone(), &x))
}

/// Projection of an analytic field into the constrained H(rot) space.
pub fn project_u_analytic(space: &Arc<FESpace>, eta: impl Fn(Point) -> [f64; 2]) -> Result<DiscreteField> {
    let mesh = space.mesh().clone();
    project_u(space, space.family().degree() + OVERSAMPLING, |k, pts| {
        let g = mesh.cell_geometry(k);
        pts.iter().map(|r| eta(g.to_physical(*r))).collect()
    })
}

/// Measured size of the reduction operator in L2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrEstimate {
    /// Largest `|R psi| / |psi|` over the random trials (a lower bound).
    pub sampled: f64,
    /// Operator norm from the generalized eigenproblem `R^T M_U R x = mu M_V x`.
    pub operator_norm: f64,
}

/// Measures `|R psi| / |psi|` on the constrained source space.
pub fn measure_cr(r: &ReductionOperator, trials: usize, seed: u64) -> Result<CrEstimate> {
    if r.kind() == ReductionKind::Identity {
        return Ok(CrEstimate { sampled: 1.0, operator_norm: 1.0 });
    }
    let v = r.source();
    let u = r.target();
    let mv = mass_matrix(v, DofSet::Free);
    let mu = mass_matrix(u, DofSet::All);
    let rg = r.global_matrix();
    let apply = |x: &[f64]| -> Vec<f64> {
        let full = v.expand(x);
        let rx = rg.matvec(&full);
        let t = mu.matvec(&rx);
        v.restrict(&rg.transpose_matvec(&t))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = v.nfree();
    let mut sampled: f64 = 0.0;
    for _ in 0..trials {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let num = crate::linalg::dot(&x, &apply(&x));
        let den = mv.bilinear(&x, &x);
        sampled = sampled.max((num / den).sqrt());
    }
    let f = factorize(&mv, SolveKind::Spd)?;
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut mu_est = 0.0;
    for _ in 0..500 {
        let y = f.solve(&apply(&x));
        let ny = norm(&y);
        if ny == 0.0 {
            break;
        }
        let next: Vec<f64> = y.iter().map(|v| v / ny).collect();
        let rq = crate::linalg::dot(&next, &apply(&next)) / mv.bilinear(&next, &next);
        x = next;
        if (rq - mu_est).abs() <= 1e-12 * rq {
            mu_est = rq;
            break;
        }
        mu_est = rq;
    }
    Ok(CrEstimate { sampled, operator_norm: mu_est.sqrt().max(sampled) })
}

/// Solves `M x = b` on the free dofs of `space` (helper for diagnostics).
pub fn mass_solve(space: &FESpace, b: &[f64]) -> Result<Vec<f64>> {
    sparse_solve(&mass_matrix(space, DofSet::Free), b, SolveKind::Spd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femlib::{build_space, integrate, interpolate_scalar, Bc};
    use crate::mesh::Mesh;

    fn random_field(space: &Arc<FESpace>, rng: &mut ChaCha8Rng) -> DiscreteField {
        let x: Vec<f64> = (0..space.nfree()).map(|_| rng.random_range(-1.0..1.0)).collect();
        DiscreteField::from_free(space.clone(), &x)
    }

    struct Triple {
        w: Arc<FESpace>,
        v: Arc<FESpace>,
        q: Arc<FESpace>,
        r: ReductionOperator,
    }

    fn triple(mesh: Mesh, rt: bool) -> Triple {
        let m = Arc::new(mesh);
        let p = 2;
        let (wf, vf, uf, kind) = if rt {
            (
                Family::LagrangeScalar(p),
                Family::BubbleEnrichedVector(p),
                Family::RaviartThomas(p),
                ReductionKind::RTInterpolant(p),
            )
        } else {
            (
                Family::LagrangeScalar(p + 1),
                Family::BubbleEnrichedVector(p),
                Family::BrezziDouglasMarini(p),
                ReductionKind::BDMInterpolant(p),
            )
        };
        let w = build_space(&m, wf, Bc::Essential).unwrap();
        let v = build_space(&m, vf, Bc::Essential).unwrap();
        let u = build_space(&m, uf, Bc::Essential).unwrap();
        let q = build_space(&m, Family::DiscontinuousScalar(p - 1), Bc::Essential).unwrap();
        let r = ReductionOperator::new(kind, v.clone(), u).unwrap();
        Triple { w, v, q, r }
    }

    fn l2(f: &DiscreteField) -> f64 {
        let deg = 2 * f.space().family().max_poly_degree();
        integrate(f.space().mesh(), deg, |k, r, _| {
            let v = f.eval_ref(k, r).value;
            v[0] * v[0] + v[1] * v[1]
        })
        .sqrt()
    }

    #[test]
    fn idempotent_and_exact_on_gradients() {
        for rt in [true, false] {
            let t = triple(crate::meshes::holey(), rt);
            let u = t.r.target().clone();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..5 {
                let psi = random_field(&t.v, &mut rng);
                let rp = t.r.reduce(&psi).unwrap();
                let mesh = u.mesh().clone();
                let mut back = vec![0.0; u.ndofs()];
                let el = u.hrot_element().unwrap();
                for k in 0..mesh.num_triangles() {
                    let fq = el.functionals(&mesh, k, el.poly_degree());
                    let vals: Vec<[f64; 2]> = rp.eval_many(k, &fq.reference).iter().map(|v| v.value).collect();
                    for (i, &d) in u.cell_dofs(k).iter().enumerate() {
                        back[d] = fq.apply(&vals)[i];
                    }
                }
                let diff: f64 = back.iter().zip(rp.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(diff < 1e-11 * l2(&psi).max(1.0), "rt={rt}: {diff}");
            }
            let wv = random_field(&t.w, &mut rng);
            let g = gradient_matrix(&t.w, &u).matvec(wv.coeffs());
            let gf = DiscreteField::new(u.clone(), g);
            let mesh = u.mesh().clone();
            let err = integrate(&mesh, 8, |k, r, _| {
                let a = gf.eval_ref(k, r).value;
                let b = wv.eval_ref(k, r).grad();
                (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
            });
            assert!(err.sqrt() < 1e-10, "rt={rt}: {err}");
        }
    }

    #[test]
    fn commuting_square() {
        for rt in [true, false] {
            let t = triple(crate::meshes::holey(), rt);
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..3 {
                let psi = random_field(&t.v, &mut rng);
                let rp = t.r.reduce(&psi).unwrap();
                let prot = project_rot(&t.q, &psi).unwrap();
                let err = integrate(t.q.mesh(), 6, |k, r, _| {
                    (rp.eval_ref(k, r).rot() - prot.eval_ref(k, r).scalar()).powi(2)
                });
                assert!(err.sqrt() < 1e-10 * l2(&psi).max(1.0), "rt={rt}: {}", err.sqrt());
            }
        }
    }

    #[test]
    fn edge_moments_preserved_and_local() {
        let t = triple(crate::meshes::holey(), true);
        let mesh = t.v.mesh().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = random_field(&t.v, &mut rng);
        let rp = t.r.reduce(&psi).unwrap();
        let (gx, gw) = crate::femlib::quadrature::line_rule(6);
        for e in 0..mesh.num_edges() {
            let (k, _) = mesh.edge_triangles(e);
            let g = mesh.cell_geometry(k);
            let [a, b] = mesh.edges()[e];
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            let tg = mesh.edge_tangent(e);
            let len = mesh.edge_length(e);
            let mut d = 0.0;
            for (s, w) in gx.iter().zip(&gw) {
                let x = [
                    0.5 * (pa[0] + pb[0]) + 0.5 * s * (pb[0] - pa[0]),
                    0.5 * (pa[1] + pb[1]) + 0.5 * s * (pb[1] - pa[1]),
                ];
                let r = g.to_reference(x);
                let u = rp.eval_ref(k, r).value;
                let v = psi.eval_ref(k, r).value;
                d += 0.5 * len * w * ((u[0] - v[0]) * tg[0] + (u[1] - v[1]) * tg[1]);
            }
            assert!(d.abs() < 1e-11, "edge {e}: {d}");
        }
        // Changing the input away from one cell leaves that cell's output untouched.
        let k0 = 5;
        let own: std::collections::HashSet<usize> = t.v.cell_dofs(k0).iter().copied().collect();
        let mut other = psi.clone();
        for (d, c) in other.coeffs_mut().iter_mut().enumerate() {
            if !own.contains(&d) {
                *c += 1.0;
            }
        }
        other.apply_constraints();
        let ro = t.r.reduce(&other).unwrap();
        for &d in t.r.target().cell_dofs(k0) {
            assert!((ro.coeffs()[d] - rp.coeffs()[d]).abs() < 1e-13, "dof {d} of cell {k0}");
        }
    }

    #[test]
    fn projections_of_constants() {
        let holey = Arc::new(crate::meshes::holey());
        let q = build_space(&holey, Family::DiscontinuousScalar(1), Bc::Essential).unwrap();
        let c = project_q(&q, 0, |_, p| vec![2.5; p.len()]).unwrap();
        assert!(c.coeffs().iter().all(|v| (v - 2.5).abs() < 1e-12));
        let sq = Arc::new(crate::meshes::square_clamped());
        let q0 = build_space(&sq, Family::DiscontinuousScalar(1), Bc::Essential).unwrap();
        assert!(q0.mean_zero());
        let z = project_q(&q0, 0, |_, p| vec![2.5; p.len()]).unwrap();
        assert!(z.coeffs().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn project_u_reproduces_members() {
        let t = triple(crate::meshes::holey(), true);
        let u = t.r.target().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eta = random_field(&u, &mut rng);
        let p = project_u(&u, u.family().degree(), |k, pts| eta.eval_many(k, pts).iter().map(|v| v.value).collect())
            .unwrap();
        let diff: f64 = p.coeffs().iter().zip(eta.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn xi_r_with_zero_rotation_is_the_gradient() {
        let m = Arc::new(crate::meshes::square_clamped());
        let w = build_space(&m, Family::LagrangeScalar(2), Bc::Essential).unwrap();
        let v = build_space(&m, Family::LagrangeVector(2), Bc::Essential).unwrap();
        let u = build_space(&m, Family::BrezziDouglasMarini(2), Bc::Essential).unwrap();
        let r = ReductionOperator::new(ReductionKind::Identity, v.clone(), u).unwrap();
        let wf = interpolate_scalar(&w, |x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
        let zero = DiscreteField::zero(v.clone());
        let xi = xi_r(&wf, &zero, &r).unwrap();
        let g = gradient_matrix(&w, r.target()).matvec(wf.coeffs());
        assert_eq!(xi.coeffs(), &g[..]);
    }

    #[test]
    fn identity_has_unit_constant() {
        let m = Arc::new(crate::meshes::square_clamped());
        let v = build_space(&m, Family::LagrangeVector(2), Bc::Essential).unwrap();
        let u = build_space(&m, Family::BrezziDouglasMarini(2), Bc::Essential).unwrap();
        let r = ReductionOperator::new(ReductionKind::Identity, v, u).unwrap();
        assert_eq!(measure_cr(&r, 5, 1).unwrap().operator_norm, 1.0);
    }

    #[test]
    fn cr_is_at_least_one_for_rt() {
        let t = triple(crate::meshes::holey(), true);
        let c = measure_cr(&t.r, 10, 1).unwrap();
        assert!(c.operator_norm >= 1.0 - 1e-9 && c.operator_norm < 10.0, "{c:?}");
        assert!(c.sampled <= c.operator_norm + 1e-9);
    }
}
