//! Plate bilinear forms, loads, and the primal and mixed solvers.

use std::sync::Arc;
use std::time::Instant;

use crate::error::{PlateError, Result};
use crate::femlib::assembly::DofSet;
use crate::femlib::{build_space, triangle_rule, Bc, DiscreteField, FESpace, Family, Tabulation, OVERSAMPLING};
use crate::linalg::{backward_error, factorize, solve_checked, SolveKind, SparseMatrix, TripletBuilder};
use crate::mesh::{alfeld_split, Mesh, Point};
use crate::reduction::{gradient_matrix, ReductionKind, ReductionOperator};

/// Material and thickness parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    pub e: f64,
    pub nu: f64,
    pub kappa: f64,
    pub t: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { e: 1.0, nu: 0.3, kappa: 5.0 / 6.0, t: 1.0 }
    }
}

impl MaterialParams {
    pub fn with_t(self, t: f64) -> Self {
        Self { t, ..self }
    }

    /// Shear modulus times the correction factor, `E k / (2 (1 + nu))`.
    pub fn lambda(&self) -> f64 {
        self.e * self.kappa / (2.0 * (1.0 + self.nu))
    }

    /// Bending stiffness `E / (12 (1 - nu^2))`.
    pub fn bending(&self) -> f64 {
        self.e / (12.0 * (1.0 - self.nu * self.nu))
    }

    /// Coefficient of the shear term, `lambda / t^2`.
    pub fn shear_factor(&self) -> f64 {
        self.lambda() / (self.t * self.t)
    }

    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.e > 0.0) {
            return Err(PlateError::Config(format!("E must be positive, got {}", self.e)));
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(PlateError::Config(format!("nu must lie in [0, 1/2), got {}", self.nu)));
        }
        if !(self.kappa > 0.0) {
            return Err(PlateError::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(PlateError::Config(format!("t must lie in (0, 1], got {}", self.t)));
        }
        Ok(())
    }

    /// Bending stress `D ((1 - nu) eps(theta) + nu div(theta) I)` for a rotation Jacobian.
    pub fn bending_stress(&self, jac: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let d = self.bending();
        let div = jac[0][0] + jac[1][1];
        let off = 0.5 * (jac[0][1] + jac[1][0]);
        [
            [d * ((1.0 - self.nu) * jac[0][0] + self.nu * div), d * (1.0 - self.nu) * off],
            [d * (1.0 - self.nu) * off, d * ((1.0 - self.nu) * jac[1][1] + self.nu * div)],
        ]
    }
}

/// Discretization scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `W = P_p`, `V = [P_p]^2 + bubbles`, `U = RT_p`, `R` the RT interpolant.
    RtMitc(usize),
    /// `W = P_{p+1}`, `V = [P_p]^2`, `U = BDM_p`, `R` the BDM interpolant.
    BdmMitc(usize),
    /// `W = P_{p+1}`, `V = [P_p]^2` on the Alfeld split, no reduction.
    Macro(usize),
    /// `W = P_{p+1}`, `V = [P_p]^2`, no reduction.
    Standard(usize),
    /// `W = P_{pw}`, `V = [P_{ptheta}]^2`, no reduction.
    PlainLagrange(usize, usize),
}

impl Scheme {
    /// Parses a family name (`rt`, `bdm`, `macro`, `standard`, `plain`) with its degree.
    /// `plain` uses the same degree for both fields.
    pub fn parse(family: &str, p: usize) -> Result<Scheme> {
        let s = match family.to_ascii_lowercase().as_str() {
            "rt" => Scheme::RtMitc(p),
            "bdm" => Scheme::BdmMitc(p),
            "macro" => Scheme::Macro(p),
            "standard" => Scheme::Standard(p),
            "plain" => Scheme::PlainLagrange(p, p),
            other => return Err(PlateError::Config(format!("unknown family '{other}'"))),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::RtMitc(_) => "rt",
            Scheme::BdmMitc(_) => "bdm",
            Scheme::Macro(_) => "macro",
            Scheme::Standard(_) => "standard",
            Scheme::PlainLagrange(..) => "plain",
        }
    }

    /// Rotation degree.
    pub fn degree(&self) -> usize {
        match *self {
            Scheme::RtMitc(p) | Scheme::BdmMitc(p) | Scheme::Macro(p) | Scheme::Standard(p) => p,
            Scheme::PlainLagrange(_, p) => p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |min: usize, why: &str| {
            Err(PlateError::DegreeOutOfRange {
                family: format!("{self:?}"),
                degree: self.degree(),
                reason: format!("{why} requires p >= {min}"),
            })
        };
        match *self {
            Scheme::RtMitc(p) if p < 2 => bad(2, "the RT family"),
            Scheme::BdmMitc(p) if p < 2 => bad(2, "the BDM family"),
            Scheme::Macro(p) if p < 2 => bad(2, "the macro family"),
            Scheme::Standard(p) if p < 4 => bad(4, "the standard family"),
            Scheme::PlainLagrange(pw, pt) if pw == 0 || pt == 0 || pw > pt + 1 => Err(PlateError::DegreeOutOfRange {
                family: format!("{self:?}"),
                degree: pw,
                reason: "needs 1 <= pw <= ptheta + 1".into(),
            }),
            _ if self.degree() > 7 => bad(0, "degree at most 7"),
            _ => Ok(()),
        }
    }

    pub fn uses_alfeld(&self) -> bool {
        matches!(self, Scheme::Macro(_))
    }

    /// Families of `(W, V, U, Q)`.
    pub fn families(&self) -> (Family, Family, Family, Family) {
        match *self {
            Scheme::RtMitc(p) => (
                Family::LagrangeScalar(p),
                Family::BubbleEnrichedVector(p),
                Family::RaviartThomas(p),
                Family::DiscontinuousScalar(p - 1),
            ),
            Scheme::BdmMitc(p) => (
                Family::LagrangeScalar(p + 1),
                Family::BubbleEnrichedVector(p),
                Family::BrezziDouglasMarini(p),
                Family::DiscontinuousScalar(p - 1),
            ),
            Scheme::Macro(p) | Scheme::Standard(p) => (
                Family::LagrangeScalar(p + 1),
                Family::LagrangeVector(p),
                Family::BrezziDouglasMarini(p),
                Family::DiscontinuousScalar(p - 1),
            ),
            Scheme::PlainLagrange(pw, pt) => (
                Family::LagrangeScalar(pw),
                Family::LagrangeVector(pt),
                Family::BrezziDouglasMarini(pt),
                Family::DiscontinuousScalar(pt - 1),
            ),
        }
    }

    pub fn reduction_kind(&self) -> ReductionKind {
        match *self {
            Scheme::RtMitc(p) => ReductionKind::RTInterpolant(p),
            Scheme::BdmMitc(p) => ReductionKind::BDMInterpolant(p),
            _ => ReductionKind::Identity,
        }
    }
}

/// The four spaces of a scheme on one mesh together with its reduction operator.
#[derive(Debug)]
pub struct Discretization {
    pub scheme: Scheme,
    /// Mesh the spaces live on (the Alfeld split for the macro family).
    pub mesh: Arc<Mesh>,
    pub w: Arc<FESpace>,
    pub v: Arc<FESpace>,
    pub u: Arc<FESpace>,
    pub q: Arc<FESpace>,
    pub r: ReductionOperator,
    /// Interpolation of gradients of `W` into `U`.
    pub grad: SparseMatrix,
}

impl Discretization {
    pub fn new(mesh: &Mesh, scheme: Scheme) -> Result<Self> {
        scheme.validate()?;
        let m = Arc::new(if scheme.uses_alfeld() { alfeld_split(mesh) } else { mesh.clone() });
        Self::on_mesh(m, scheme)
    }

    /// Builds the spaces on `mesh` exactly as given (no Alfeld split).
    pub fn on_mesh(mesh: Arc<Mesh>, scheme: Scheme) -> Result<Self> {
        scheme.validate()?;
        let (wf, vf, uf, qf) = scheme.families();
        let w = build_space(&mesh, wf, Bc::Essential)?;
        let v = build_space(&mesh, vf, Bc::Essential)?;
        let u = build_space(&mesh, uf, Bc::Essential)?;
        let q = build_space(&mesh, qf, Bc::Essential)?;
        let r = ReductionOperator::new(scheme.reduction_kind(), v.clone(), u.clone())?;
        let grad = gradient_matrix(&w, &u);
        Ok(Self { scheme, mesh, w, v, u, q, r, grad })
    }

    /// Number of primal unknowns `(w, theta)` after constraints.
    pub fn primal_dofs(&self) -> usize {
        self.w.nfree() + self.v.nfree()
    }

    fn quad_degree(&self) -> usize {
        let pw = self.w.family().max_poly_degree();
        let pv = self.v.family().max_poly_degree();
        let pu = self.u.family().max_poly_degree();
        2 * pv.max(pu).max(pw)
    }
}

/// Load densities at a point: `F(v) = int f0 v + f1 . grad v` and
/// `G(psi) = int g0 . psi + g1 : grad psi`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LoadDensity {
    pub f0: f64,
    pub f1: [f64; 2],
    pub g0: [f64; 2],
    pub g1: [[f64; 2]; 2],
}

impl LoadDensity {
    pub fn scaled(self, c: f64) -> Self {
        Self {
            f0: c * self.f0,
            f1: [c * self.f1[0], c * self.f1[1]],
            g0: [c * self.g0[0], c * self.g0[1]],
            g1: [[c * self.g1[0][0], c * self.g1[0][1]], [c * self.g1[1][0], c * self.g1[1][1]]],
        }
    }
}

/// Source of the right-hand side functionals.
pub trait PlateLoad {
    fn density(&self, x: Point) -> LoadDensity;
}

impl<F: Fn(Point) -> LoadDensity> PlateLoad for F {
    fn density(&self, x: Point) -> LoadDensity {
        self(x)
    }
}

/// Zero load.
pub struct NoLoad;

impl PlateLoad for NoLoad {
    fn density(&self, _: Point) -> LoadDensity {
        LoadDensity::default()
    }
}

fn sym_inner(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

fn bending_density(mat: &MaterialParams, ja: [[f64; 2]; 2], jb: [[f64; 2]; 2]) -> f64 {
    sym_inner(mat.bending_stress(ja), jb)
}

/// Bending form `a` on one space, indexed by `set`.
pub fn assemble_a(v: &FESpace, set: DofSet, mat: &MaterialParams) -> SparseMatrix {
    crate::femlib::assembly::coupling_matrix(v, set, v, set, 2 * v.family().max_poly_degree(), |ti, tj, i, j, q| {
        bending_density(mat, ti.jacobian(i, q), tj.jacobian(j, q))
    })
}

/// Per-cell tabulations used by the plate assemblers.
struct CellData {
    det: f64,
    tw: Tabulation,
    tv: Tabulation,
    tu: Tabulation,
    /// `R phi_j` at the quadrature points, `j * nq + q`.
    rv: Vec<[f64; 2]>,
}

fn cell_data(d: &Discretization, k: usize, points: &[[f64; 2]]) -> CellData {
    let tu = d.u.tabulate(k, points);
    CellData {
        det: d.mesh.cell_geometry(k).det,
        tw: d.w.tabulate(k, points),
        tv: d.v.tabulate(k, points),
        rv: d.r.reduced_basis_values(k, &tu),
        tu,
    }
}

/// `B_{t,R}` over the free dofs of `W x V`, `w` unknowns first.
pub fn assemble_b_tr(d: &Discretization, mat: &MaterialParams) -> SparseMatrix {
    assemble_primal(d, mat, true, mat.shear_factor())
}

/// Assembles `a` (if `with_bending`) plus `shear (Xi_R, Xi_R)`.
fn assemble_primal(d: &Discretization, mat: &MaterialParams, with_bending: bool, shear: f64) -> SparseMatrix {
    let nw = d.w.nfree();
    let n = nw + d.v.nfree();
    let mut t = TripletBuilder::new(n, n);
    let rule = triangle_rule(d.quad_degree());
    let nq = rule.points.len();
    let s = shear;
    let with_shear = s != 0.0;
    for k in 0..d.mesh.num_triangles() {
        let c = cell_data(d, k, &rule.points);
        let wd = d.w.cell_dofs(k);
        let vd = d.v.cell_dofs(k);
        // Local shear vectors: gradients of W then -R of V.
        let nloc = wd.len() + vd.len();
        let mut xi = vec![[0.0; 2]; nloc * nq];
        let mut glob = Vec::with_capacity(nloc);
        for (i, &g) in wd.iter().enumerate() {
            glob.push(d.w.free_index(g));
            for q in 0..nq {
                xi[i * nq + q] = c.tw.scalar_grad(i, q);
            }
        }
        for (j, &g) in vd.iter().enumerate() {
            glob.push(d.v.free_index(g).map(|x| x + nw));
            for q in 0..nq {
                let r = c.rv[j * nq + q];
                xi[(wd.len() + j) * nq + q] = [-r[0], -r[1]];
            }
        }
        for a in 0..nloc {
            let Some(ga) = glob[a] else { continue };
            for b in 0..nloc {
                let Some(gb) = glob[b] else { continue };
                let mut v = 0.0;
                if with_bending && a >= wd.len() && b >= wd.len() {
                    let (ja, jb) = (a - wd.len(), b - wd.len());
                    for q in 0..nq {
                        v += rule.weights[q] * bending_density(mat, c.tv.jacobian(ja, q), c.tv.jacobian(jb, q));
                    }
                }
                if with_shear {
                    let mut sh = 0.0;
                    for q in 0..nq {
                        let (x, y) = (xi[a * nq + q], xi[b * nq + q]);
                        sh += rule.weights[q] * (x[0] * y[0] + x[1] * y[1]);
                    }
                    v += s * sh;
                }
                if v != 0.0 {
                    t.push(ga, gb, v * c.det);
                }
            }
        }
    }
    t.build()
}

/// `[F(v); G(psi)]` over the free dofs of `W x V`.
pub fn assemble_rhs(d: &Discretization, load: &dyn PlateLoad) -> Vec<f64> {
    let nw = d.w.nfree();
    let mut b = vec![0.0; nw + d.v.nfree()];
    let rule = triangle_rule(d.quad_degree() / 2 + d.w.family().max_poly_degree() + OVERSAMPLING);
    for k in 0..d.mesh.num_triangles() {
        let g = d.mesh.cell_geometry(k);
        let tw = d.w.tabulate(k, &rule.points);
        let tv = d.v.tabulate(k, &rule.points);
        let dens: Vec<LoadDensity> = rule.points.iter().map(|r| load.density(g.to_physical(*r))).collect();
        for (i, &dof) in d.w.cell_dofs(k).iter().enumerate() {
            let Some(gi) = d.w.free_index(dof) else { continue };
            let mut s = 0.0;
            for (q, l) in dens.iter().enumerate() {
                let gr = tw.scalar_grad(i, q);
                s += rule.weights[q] * (l.f0 * tw.value(i, q, 0) + l.f1[0] * gr[0] + l.f1[1] * gr[1]);
            }
            b[gi] += s * g.det;
        }
        for (j, &dof) in d.v.cell_dofs(k).iter().enumerate() {
            let Some(gj) = d.v.free_index(dof) else { continue };
            let mut s = 0.0;
            for (q, l) in dens.iter().enumerate() {
                let v = tv.vector(j, q);
                s += rule.weights[q] * (l.g0[0] * v[0] + l.g0[1] * v[1] + sym_inner(l.g1, tv.jacobian(j, q)));
            }
            b[nw + gj] += s * g.det;
        }
    }
    b
}

/// Solve metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveInfo {
    pub unknowns: usize,
    pub backward_error: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub w: DiscreteField,
    pub theta: DiscreteField,
    pub gamma: DiscreteField,
    pub info: SolveInfo,
}

/// `lambda t^-2 (grad w - R theta)` as a field in `U`.
pub fn shear_stress(
    d: &Discretization,
    w: &DiscreteField,
    theta: &DiscreteField,
    mat: &MaterialParams,
) -> DiscreteField {
    let g = d.grad.matvec(w.coeffs());
    let r = d.r.global_matrix().matvec(theta.coeffs());
    let s = mat.shear_factor();
    let c = g.iter().zip(&r).map(|(a, b)| s * (a - b)).collect();
    DiscreteField::new(d.u.clone(), c)
}

/// Reduced primal problem: find `(w, theta)` with `B_{t,R}((w, theta), (v, psi)) = F(v) + G(psi)`.
pub fn solve_primal(d: &Discretization, mat: &MaterialParams, load: &dyn PlateLoad) -> Result<DiscreteSolution> {
    mat.validate()?;
    let start = Instant::now();
    solve_primal_matrix(d, mat, assemble_b_tr(d, mat), assemble_rhs(d, load), start)
}

/// As [`solve_primal`], with an assembled right-hand side over the free dofs of `W x V`.
pub fn solve_primal_rhs(d: &Discretization, mat: &MaterialParams, b: Vec<f64>) -> Result<DiscreteSolution> {
    mat.validate()?;
    if b.len() != d.primal_dofs() {
        return Err(PlateError::Config(format!(
            "right-hand side has length {}, expected {}",
            b.len(),
            d.primal_dofs()
        )));
    }
    let start = Instant::now();
    solve_primal_matrix(d, mat, assemble_b_tr(d, mat), b, start)
}

fn solve_primal_matrix(
    d: &Discretization,
    mat: &MaterialParams,
    a: SparseMatrix,
    b: Vec<f64>,
    start: Instant,
) -> Result<DiscreteSolution> {
    let x = if b.is_empty() {
        Vec::new()
    } else {
        let f = factorize(&a, SolveKind::Spd)?;
        solve_checked(&a, &f, &b)?
    };
    let be = if b.is_empty() { 0.0 } else { backward_error(&a, &x, &b) };
    Ok(finish_primal(d, mat, &x, be, start))
}

fn finish_primal(d: &Discretization, mat: &MaterialParams, x: &[f64], be: f64, start: Instant) -> DiscreteSolution {
    let nw = d.w.nfree();
    let w = DiscreteField::from_free(d.w.clone(), &x[..nw]);
    let theta = DiscreteField::from_free(d.v.clone(), &x[nw..]);
    let gamma = shear_stress(d, &w, &theta, mat);
    DiscreteSolution {
        w,
        theta,
        gamma,
        info: SolveInfo { unknowns: x.len(), backward_error: be, seconds: start.elapsed().as_secs_f64() },
    }
}

/// Mixed problem with the shear stress `gamma` in `U` as a third unknown.
pub fn solve_mixed(d: &Discretization, mat: &MaterialParams, load: &dyn PlateLoad) -> Result<DiscreteSolution> {
    mat.validate()?;
    let start = Instant::now();
    let nw = d.w.nfree();
    let np = nw + d.v.nfree();
    let nu = d.u.nfree();
    let n = np + nu;
    let mut t = TripletBuilder::new(n, n);
    for (i, j, v) in assemble_primal(d, mat, true, 0.0).entries() {
        t.push(i, j, v);
    }
    let rule = triangle_rule(d.quad_degree());
    let nq = rule.points.len();
    let c2 = mat.t * mat.t / mat.lambda();
    for k in 0..d.mesh.num_triangles() {
        let c = cell_data(d, k, &rule.points);
        let ud = d.u.cell_dofs(k);
        for (i, &gu) in ud.iter().enumerate() {
            let Some(row) = d.u.free_index(gu).map(|x| x + np) else { continue };
            let eta: Vec<[f64; 2]> = (0..nq).map(|q| c.tu.vector(i, q)).collect();
            let mut push = |col: usize, v: f64| {
                if v != 0.0 {
                    t.push(row, col, v * c.det);
                    t.push(col, row, v * c.det);
                }
            };
            for (j, &g) in d.w.cell_dofs(k).iter().enumerate() {
                let Some(col) = d.w.free_index(g) else { continue };
                let v: f64 = (0..nq)
                    .map(|q| {
                        let gr = c.tw.scalar_grad(j, q);
                        rule.weights[q] * (eta[q][0] * gr[0] + eta[q][1] * gr[1])
                    })
                    .sum();
                push(col, v);
            }
            for (j, &g) in d.v.cell_dofs(k).iter().enumerate() {
                let Some(col) = d.v.free_index(g).map(|x| x + nw) else { continue };
                let v: f64 = (0..nq)
                    .map(|q| {
                        let r = c.rv[j * nq + q];
                        -rule.weights[q] * (eta[q][0] * r[0] + eta[q][1] * r[1])
                    })
                    .sum();
                push(col, v);
            }
            for (j, &g) in ud.iter().enumerate() {
                let Some(col) = d.u.free_index(g).map(|x| x + np) else { continue };
                let v: f64 = (0..nq)
                    .map(|q| {
                        let b = c.tu.vector(j, q);
                        rule.weights[q] * (eta[q][0] * b[0] + eta[q][1] * b[1])
                    })
                    .sum();
                if v != 0.0 {
                    t.push(row, col, -c2 * v * c.det);
                }
            }
        }
    }
    let a = t.build();
    let mut b = assemble_rhs(d, load);
    b.resize(n, 0.0);
    let f = factorize(&a, SolveKind::Saddle)?;
    let x = solve_checked(&a, &f, &b)?;
    let be = backward_error(&a, &x, &b);
    Ok(DiscreteSolution {
        w: DiscreteField::from_free(d.w.clone(), &x[..nw]),
        theta: DiscreteField::from_free(d.v.clone(), &x[nw..np]),
        gamma: DiscreteField::from_free(d.u.clone(), &x[np..]),
        info: SolveInfo { unknowns: n, backward_error: be, seconds: start.elapsed().as_secs_f64() },
    })
}

/// Discrete energy `1/2 B_{t,R}(x, x) - F(x)` of a primal solution.
pub fn energy(d: &Discretization, mat: &MaterialParams, load: &dyn PlateLoad, sol: &DiscreteSolution) -> f64 {
    let a = assemble_b_tr(d, mat);
    let b = assemble_rhs(d, load);
    let mut x = sol.w.free_coeffs();
    x.extend(sol.theta.free_coeffs());
    0.5 * a.bilinear(&x, &x) - crate::linalg::dot(&b, &x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femlib::interpolate_vector;

    fn load(x: Point) -> LoadDensity {
        LoadDensity { f0: 1.0 + x[0], f1: [0.0, x[1]], g0: [x[1], -0.5], g1: [[0.0, x[0]], [0.2, 0.0]] }
    }

    #[test]
    fn bending_energy_of_linear_rotation() {
        let m = Arc::new(crate::meshes::holey());
        let v = build_space(&m, Family::LagrangeVector(1), Bc::Natural).unwrap();
        let mat = MaterialParams::default();
        let a = assemble_a(&v, DofSet::All, &mat);
        let th = interpolate_vector(&v, |x| [x[0], 0.0]);
        let val = a.bilinear(th.coeffs(), th.coeffs());
        assert!((val - 1.5 / 10.92).abs() < 1e-12, "{val}");
        let one = interpolate_vector(&v, |_| [1.0, 0.0]);
        assert!(a.bilinear(one.coeffs(), one.coeffs()).abs() < 1e-14);
        assert!(a.max_asymmetry() <= 1e-12 * a.max_abs());
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        let d = Discretization::new(&crate::meshes::holey(), Scheme::RtMitc(2)).unwrap();
        let s = solve_primal(&d, &MaterialParams::default(), &NoLoad).unwrap();
        assert!(s.w.coeffs().iter().chain(s.theta.coeffs()).all(|c| *c == 0.0));
    }

    #[test]
    fn scheme_validation() {
        assert!(Scheme::parse("rt", 1).is_err());
        assert!(Scheme::parse("standard", 3).is_err());
        assert!(Scheme::parse("bdm", 2).is_ok());
        assert!(Scheme::parse("nope", 2).is_err());
    }

    #[test]
    fn primal_and_mixed_agree() {
        for scheme in [Scheme::RtMitc(2), Scheme::BdmMitc(2)] {
            let d = Discretization::new(&crate::meshes::holey(), scheme).unwrap();
            for t in [1.0, 1e-2] {
                let mat = MaterialParams::default().with_t(t);
                let p = solve_primal(&d, &mat, &load).unwrap();
                let m = solve_mixed(&d, &mat, &load).unwrap();
                let rel = |a: &[f64], b: &[f64]| {
                    let n: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() / n
                };
                assert!(rel(p.w.coeffs(), m.w.coeffs()) < 1e-8, "{scheme:?} t={t}");
                assert!(rel(p.theta.coeffs(), m.theta.coeffs()) < 1e-8, "{scheme:?} t={t}");
                let g = shear_stress(&d, &m.w, &m.theta, &mat);
                assert!(rel(g.coeffs(), m.gamma.coeffs()) < 1e-8, "{scheme:?} t={t}");
                let b = assemble_b_tr(&d, &mat);
                assert!(b.max_asymmetry() <= 1e-12 * b.max_abs());
            }
        }
    }
}
