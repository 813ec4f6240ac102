//! Numerical checks of the structural conditions: harmonic forms, circulations,
//! exactness, H1, and inf-sup estimates.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PlateError, Result};
use crate::femlib::assembly::{coupling_matrix, h1_gram, mass_matrix, DofSet};
use crate::femlib::quadrature::line_rule;
use crate::femlib::{integrate, triangle_rule, DiscreteField, DofLocation, FESpace};
use crate::linalg::{factorize, null_space, rank, RankDecision, SolveKind, SparseMatrix, TripletBuilder};
use crate::mesh::{boundary_topology, BoundaryTopology, Mesh, Point};
use crate::reduction::{gradient_matrix, project_rot, ReductionKind, ReductionOperator};
use crate::system::Discretization;

/// Eigenvalues below this fraction of the largest are treated as zero modes in the
/// inf-sup estimates (singular values below `1e-5` of the largest).
pub const EIGEN_ZERO_TOL: f64 = 1e-10;

fn dense(a: &SparseMatrix) -> Mat<f64> {
    a.to_dense()
}

/// `(q_i, rot eta_j)` over all dofs of `q` and the free dofs of `u`.
pub fn rot_matrix(u: &FESpace, q: &FESpace) -> SparseMatrix {
    let deg = u.family().max_poly_degree() + q.family().degree();
    coupling_matrix(q, DofSet::All, u, DofSet::Free, deg, |tq, tu, i, j, p| tq.value(i, p, 0) * tu.rot(j, p))
}

/// `(grad v_i, eta_j)` over the free dofs of `w` and `u`.
pub fn gradient_coupling(w: &FESpace, u: &FESpace) -> SparseMatrix {
    let deg = w.family().max_poly_degree() + u.family().max_poly_degree();
    coupling_matrix(w, DofSet::Free, u, DofSet::Free, deg, |tw, tu, i, j, p| {
        let g = tw.scalar_grad(i, p);
        let e = tu.vector(j, p);
        g[0] * e[0] + g[1] * e[1]
    })
}

/// L2-orthonormalizes the columns of `h` (free coordinates of `space`).
fn orthonormalize(space: &FESpace, h: &Mat<f64>) -> Result<Mat<f64>> {
    if h.ncols() == 0 {
        return Ok(h.clone());
    }
    let m = dense(&mass_matrix(space, DofSet::Free));
    let gram = h.transpose() * &m * h;
    let llt =
        gram.llt(Side::Lower).map_err(|e| PlateError::Eigen(format!("harmonic Gram matrix is not SPD: {e:?}")))?;
    let linv = crate::linalg::dense_inverse(&llt.L().to_owned());
    Ok(h * linv.transpose())
}

/// L2-orthonormal basis of the discrete harmonic forms in the constrained space `u`.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub space: Arc<FESpace>,
    /// Free coefficients, one column per basis field.
    pub coeffs: Mat<f64>,
    /// Rank decisions taken: kernel of rot, then orthogonality to gradients.
    pub decisions: Vec<RankDecision>,
    /// Dimension of the kernel of rot in `u`.
    pub rot_kernel_dim: usize,
    /// Rank of the rot matrix.
    pub rot_rank: usize,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn field(&self, i: usize) -> DiscreteField {
        let c: Vec<f64> = (0..self.coeffs.nrows()).map(|r| self.coeffs[(r, i)]).collect();
        DiscreteField::from_free(self.space.clone(), &c)
    }

    /// Smallest singular-value gap over all rank decisions.
    pub fn min_gap(&self) -> f64 {
        self.decisions.iter().map(|d| d.gap_ratio).fold(f64::INFINITY, f64::min)
    }
}

/// Nullspace of `[rot; (., grad W_Gamma)]` in `U_Gamma`. `q` must contain `rot U`.
pub fn harmonic_basis(w: &FESpace, u: &Arc<FESpace>, q: &FESpace) -> Result<HarmonicBasis> {
    let brot = dense(&rot_matrix(u, q));
    let (d1, k) = null_space(&brot)?;
    let g = dense(&gradient_coupling(w, u));
    let gk = &g * &k;
    let (d2, n) = null_space(&gk)?;
    let h = &k * &n;
    Ok(HarmonicBasis {
        space: u.clone(),
        coeffs: orthonormalize(u, &h)?,
        rot_kernel_dim: k.ncols(),
        rot_rank: d1.rank,
        decisions: vec![d1, d2],
    })
}

/// Computed harmonic dimension against `|I*| + N_cs - 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimCheck {
    pub computed: usize,
    pub formula: usize,
    pub min_gap: f64,
}

impl DimCheck {
    pub fn pass(&self) -> bool {
        self.computed == self.formula && self.min_gap >= crate::linalg::MIN_GAP
    }
}

pub fn check_dim_formula(topology: &BoundaryTopology, basis: &HarmonicBasis) -> DimCheck {
    DimCheck { computed: basis.dim(), formula: topology.harmonic_dimension(), min_gap: basis.min_gap() }
}

/// Loops are stored with the domain on the left: the outer loop runs counterclockwise and
/// holes clockwise.
fn ccw_sign(i: usize) -> f64 {
    if i == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `sum_q w_q t . f(x_q) |e| / 2` over the boundary edges of loop `i`, evaluated by
/// `f(edge cell, reference point, physical point)`; counterclockwise orientation.
fn loop_integral(mesh: &Mesh, i: usize, degree: usize, f: impl Fn(usize, [f64; 2], Point) -> [f64; 2]) -> f64 {
    let (gx, gw) = line_rule(degree);
    let sign = ccw_sign(i);
    let mut total = 0.0;
    for &b in &mesh.loops()[i].edges {
        let be = &mesh.boundary_edges()[b];
        let (k, _) = mesh.edge_triangles(be.edge);
        let g = mesh.cell_geometry(k);
        let [a, c] = be.vertices;
        let (pa, pc) = (mesh.vertices()[a], mesh.vertices()[c]);
        let len = mesh.edge_length(be.edge);
        let t = [(pc[0] - pa[0]) / len, (pc[1] - pa[1]) / len];
        for (s, w) in gx.iter().zip(&gw) {
            let x =
                [0.5 * (pa[0] + pc[0]) + 0.5 * s * (pc[0] - pa[0]), 0.5 * (pa[1] + pc[1]) + 0.5 * s * (pc[1] - pa[1])];
            let v = f(k, g.to_reference(x), x);
            total += 0.5 * len * w * (t[0] * v[0] + t[1] * v[1]);
        }
    }
    sign * total
}

/// Circulation of a discrete vector field around loop `i`, traversed counterclockwise.
pub fn circulation(f: &DiscreteField, i: usize) -> f64 {
    let mesh = f.space().mesh().clone();
    let deg = f.space().family().max_poly_degree() + 2;
    loop_integral(&mesh, i, deg, |k, r, _| f.eval_ref(k, r).value)
}

/// Circulation of an analytic field around loop `i` by edgewise Gauss quadrature.
pub fn circulation_analytic(mesh: &Mesh, i: usize, degree: usize, f: impl Fn(Point) -> [f64; 2]) -> f64 {
    loop_integral(mesh, i, degree, |_, _, x| f(x))
}

/// `C_0 - sum_{i >= 1} C_i`, the total boundary circulation with the domain on the left;
/// equals the integral of rot.
pub fn boundary_circulation(f: &DiscreteField) -> f64 {
    let n = f.space().mesh().loops().len();
    (0..n).map(|i| if i == 0 { circulation(f, 0) } else { -circulation(f, i) }).sum()
}

/// Rows: circulations of the free basis functions of `u` around the given loops.
pub fn circulation_matrix(u: &FESpace, loops: &[usize]) -> Mat<f64> {
    let mesh = u.mesh().clone();
    let deg = u.family().max_poly_degree() + 2;
    let mut out = Mat::zeros(loops.len(), u.nfree());
    for (row, &i) in loops.iter().enumerate() {
        let (gx, gw) = line_rule(deg);
        let sign = ccw_sign(i);
        for &b in &mesh.loops()[i].edges {
            let be = &mesh.boundary_edges()[b];
            let (k, _) = mesh.edge_triangles(be.edge);
            let g = mesh.cell_geometry(k);
            let [a, c] = be.vertices;
            let (pa, pc) = (mesh.vertices()[a], mesh.vertices()[c]);
            let len = mesh.edge_length(be.edge);
            let t = [(pc[0] - pa[0]) / len, (pc[1] - pa[1]) / len];
            let pts: Vec<[f64; 2]> = gx
                .iter()
                .map(|s| {
                    g.to_reference([
                        0.5 * (pa[0] + pc[0]) + 0.5 * s * (pc[0] - pa[0]),
                        0.5 * (pa[1] + pc[1]) + 0.5 * s * (pc[1] - pa[1]),
                    ])
                })
                .collect();
            let tab = u.tabulate(k, &pts);
            for (j, &d) in u.cell_dofs(k).iter().enumerate() {
                let Some(fj) = u.free_index(d) else { continue };
                let v: f64 = (0..pts.len())
                    .map(|q| {
                        let e = tab.vector(j, q);
                        0.5 * len * gw[q] * (t[0] * e[0] + t[1] * e[1])
                    })
                    .sum();
                out[(row, fj)] += sign * v;
            }
        }
    }
    out
}

/// `W^h` functions vanishing on the first cs-component and constant on the others:
/// free dofs of `w` followed by one generator per further component (full coordinates).
pub fn tied_w_basis(w: &FESpace, topology: &BoundaryTopology) -> Vec<Vec<f64>> {
    let mesh = w.mesh();
    let mut cols = Vec::new();
    for &d in w.free_dofs() {
        let mut c = vec![0.0; w.ndofs()];
        c[d] = 1.0;
        cols.push(c);
    }
    for comp in topology.cs_components.iter().skip(1) {
        let edges: BTreeSet<usize> = comp.iter().map(|&b| mesh.boundary_edges()[b].edge).collect();
        let verts: BTreeSet<usize> = comp.iter().flat_map(|&b| mesh.boundary_edges()[b].vertices).collect();
        let mut c = vec![0.0; w.ndofs()];
        for (d, v) in c.iter_mut().enumerate() {
            let on = match w.location(d) {
                DofLocation::Vertex(x) => verts.contains(&x),
                DofLocation::Edge(e, _) => edges.contains(&e),
                DofLocation::Interior(..) => false,
            };
            if on {
                *v = 1.0;
            }
        }
        cols.push(c);
    }
    cols
}

/// Outcome of the H1 check.
#[derive(Clone, Debug, PartialEq)]
pub struct H1Check {
    /// Largest coefficient of a tied gradient on a constrained dof of `u`, relative to
    /// the largest coefficient overall (zero when the inclusion holds).
    pub inclusion_residual: f64,
    /// Number of independent rot-free fields with vanishing reduced circulations.
    pub tested: usize,
    /// Largest relative L2 distance of such a field to the tied gradients.
    pub max_distance: f64,
    pub min_gap: f64,
}

pub const H1_INCLUSION_TOL: f64 = 1e-10;
pub const H1_DISTANCE_TOL: f64 = 1e-8;

impl H1Check {
    pub fn pass(&self) -> bool {
        self.inclusion_residual <= H1_INCLUSION_TOL && self.max_distance <= H1_DISTANCE_TOL
    }
}

pub fn check_h1(w: &FESpace, u: &FESpace, q: &FESpace, topology: &BoundaryTopology) -> Result<H1Check> {
    let gfull = gradient_matrix(w, u);
    let gens = tied_w_basis(w, topology);
    let mut inc: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut gt = Mat::zeros(u.nfree(), gens.len());
    for (j, c) in gens.iter().enumerate() {
        let g = gfull.matvec(c);
        for (d, v) in g.iter().enumerate() {
            scale = scale.max(v.abs());
            match u.free_index(d) {
                Some(f) => gt[(f, j)] = *v,
                None => inc = inc.max(v.abs()),
            }
        }
    }
    let inclusion_residual = if scale > 0.0 { inc / scale } else { 0.0 };
    let brot = dense(&rot_matrix(u, q));
    let (d1, k) = null_space(&brot)?;
    let circ = circulation_matrix(u, &topology.reduced_index_set);
    let ck = &circ * &k;
    let (d2, n) = null_space(&ck)?;
    let z = &k * &n;
    // M-orthonormal basis of the tied gradients.
    let m = dense(&mass_matrix(u, DofSet::Free));
    let l = m.llt(Side::Lower).map_err(|e| PlateError::Eigen(format!("mass matrix is not SPD: {e:?}")))?.L().to_owned();
    let lt = l.transpose().to_owned();
    let y = &lt * &gt;
    let mut decisions = vec![d1, d2];
    let basis = if y.ncols() == 0 {
        Mat::zeros(y.nrows(), 0)
    } else {
        let svd = y.svd().map_err(|e| PlateError::Eigen(format!("SVD failed: {e:?}")))?;
        let s = svd.S().column_vector();
        let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
        let d = crate::linalg::decide_rank(&sv)?;
        let uu = svd.U();
        let b = Mat::from_fn(y.nrows(), d.rank, |i, j| uu[(i, j)]);
        decisions.push(d);
        b
    };
    let mut max_distance: f64 = 0.0;
    for j in 0..z.ncols() {
        let zj = Mat::from_fn(z.nrows(), 1, |i, _| z[(i, j)]);
        let yz = &lt * &zj;
        let proj = &basis * (basis.transpose() * &yz);
        let r = &yz - &proj;
        let nz = yz.norm_l2();
        if nz > 0.0 {
            max_distance = max_distance.max(r.norm_l2() / nz);
        }
    }
    Ok(H1Check {
        inclusion_residual,
        tested: z.ncols(),
        max_distance,
        min_gap: decisions.iter().map(|d| d.gap_ratio).fold(f64::INFINITY, f64::min),
    })
}

/// An inf-sup estimate; `value` is infinite when the condition is vacuous.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaEstimate {
    pub value: f64,
    /// Eigenvalues classified as zero and skipped.
    pub zero_modes: usize,
}

impl BetaEstimate {
    pub fn vacuous(&self) -> bool {
        self.value.is_infinite()
    }

    fn vacuous_value() -> Self {
        Self { value: f64::INFINITY, zero_modes: 0 }
    }
}

fn smallest_nonzero(eigs: &[f64]) -> BetaEstimate {
    let max = eigs.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return BetaEstimate { value: 0.0, zero_modes: eigs.len() };
    }
    let zero = eigs.iter().filter(|&&e| e <= EIGEN_ZERO_TOL * max).count();
    let min = eigs.iter().cloned().filter(|&e| e > EIGEN_ZERO_TOL * max).fold(f64::INFINITY, f64::min);
    BetaEstimate { value: min.sqrt(), zero_modes: zero }
}

/// Dense `A^{-1} B^T` for SPD sparse `A`.
fn solve_columns(a: &SparseMatrix, bt: &Mat<f64>) -> Result<Mat<f64>> {
    if bt.ncols() == 0 || a.nrows() == 0 {
        return Ok(Mat::zeros(a.nrows(), bt.ncols()));
    }
    Ok(factorize(a, SolveKind::Spd)?.solve_mat(bt))
}

/// `sup_psi (rot psi, q) / (|psi|_1 |q|)`: square root of the smallest nonzero eigenvalue of
/// `B A^{-1} B^T` against the `Q` mass matrix.
pub fn estimate_beta_rot(v: &FESpace, q: &FESpace) -> Result<BetaEstimate> {
    if q.dim() == 0 || v.nfree() == 0 {
        return Ok(BetaEstimate::vacuous_value());
    }
    let deg = v.family().max_poly_degree() + q.family().degree();
    let b = coupling_matrix(q, DofSet::All, v, DofSet::Free, deg, |tq, tv, i, j, p| tq.value(i, p, 0) * tv.rot(j, p));
    let a = h1_gram(v, DofSet::Free);
    let bt = dense(&b.transpose());
    let x = solve_columns(&a, &bt)?;
    let s = dense(&b) * &x;
    let mq = dense(&mass_matrix(q, DofSet::All));
    let eigs = crate::linalg::generalized_eigenvalues(&s, &mq)?;
    Ok(smallest_nonzero(&eigs))
}

/// `inf_h sup_{psi : rot R psi = 0} (R psi, h) / (|psi|_1 |h|)` over the harmonic forms.
pub fn estimate_beta_harmonic(
    v: &FESpace,
    r: &ReductionOperator,
    q: &FESpace,
    basis: &HarmonicBasis,
) -> Result<BetaEstimate> {
    if basis.dim() == 0 {
        return Ok(BetaEstimate::vacuous_value());
    }
    let u = r.target();
    let mesh = v.mesh().clone();
    let nv = v.nfree();
    // D = (q_i, rot R psi_j) and C = (R psi_j, h_i).
    let rule = triangle_rule(u.family().max_poly_degree() + q.family().degree().max(u.family().max_poly_degree()));
    let nq = rule.points.len();
    let mut dt = TripletBuilder::new(q.ndofs(), nv);
    let mut c = Mat::<f64>::zeros(basis.dim(), nv);
    let hfields: Vec<DiscreteField> = (0..basis.dim()).map(|i| basis.field(i)).collect();
    for k in 0..mesh.num_triangles() {
        let det = mesh.cell_geometry(k).det;
        let tu = u.tabulate(k, &rule.points);
        let tq = q.tabulate(k, &rule.points);
        let rv = r.reduced_basis_values(k, &tu);
        let rr = r.reduced_basis_rot(k, &tu);
        let hv: Vec<Vec<[f64; 2]>> =
            hfields.iter().map(|h| h.eval_tabulated(k, &tu).iter().map(|f| f.value).collect()).collect();
        for (j, &dv) in v.cell_dofs(k).iter().enumerate() {
            let Some(fj) = v.free_index(dv) else { continue };
            for (i, &dq) in q.cell_dofs(k).iter().enumerate() {
                let s: f64 = (0..nq).map(|p| rule.weights[p] * tq.value(i, p, 0) * rr[j * nq + p]).sum();
                if s != 0.0 {
                    dt.push(dq, fj, s * det);
                }
            }
            for (i, h) in hv.iter().enumerate() {
                let s: f64 = (0..nq)
                    .map(|p| {
                        let a = rv[j * nq + p];
                        rule.weights[p] * (a[0] * h[p][0] + a[1] * h[p][1])
                    })
                    .sum();
                c[(i, fj)] += s * det;
            }
        }
    }
    let d = dt.build();
    let a = h1_gram(v, DofSet::Free);
    let dtd = dense(&d.transpose());
    let ct = c.transpose().to_owned();
    let z = solve_columns(&a, &dtd)?;
    let y = solve_columns(&a, &ct)?;
    let sd = dense(&d) * &z;
    let p = dense(&d) * &y;
    // Pseudo-inverse of the PSD Schur complement on its numerical range.
    let n = sd.nrows();
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (sd[(i, j)] + sd[(j, i)]));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| PlateError::Eigen(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let vecs = evd.U();
    let smax = (0..n).map(|i| s[i]).fold(0.0, f64::max);
    let mut t = &c * &y;
    for k in 0..n {
        if s[k] <= EIGEN_ZERO_TOL * smax {
            continue;
        }
        let col = vecs.col(k);
        let proj = Mat::from_fn(basis.dim(), 1, |i, _| (0..n).map(|r| col[r] * p[(r, i)]).sum::<f64>());
        t -= (&proj * proj.transpose()) * (1.0 / s[k]);
    }
    let m = basis.dim();
    let tsym = Mat::from_fn(m, m, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    let eigs = tsym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| PlateError::Eigen(format!("symmetric eigensolver failed: {e:?}")))?;
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(BetaEstimate { value: min.max(0.0).sqrt(), zero_modes: 0 })
}

/// Rank identities of the discrete complex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactnessCheck {
    pub rank_rot: usize,
    pub dim_q: usize,
    pub dim_u: usize,
    pub dim_grad_w: usize,
    pub dim_harmonic: usize,
    pub min_gap: f64,
}

impl ExactnessCheck {
    /// `dim Q - rank rot`.
    pub fn defect(&self) -> isize {
        self.dim_q as isize - self.rank_rot as isize
    }

    pub fn pass(&self) -> bool {
        self.defect() == 0
            && self.dim_u == self.dim_grad_w + self.dim_harmonic + self.dim_q
            && self.min_gap >= crate::linalg::MIN_GAP
    }
}

pub fn check_exactness(w: &FESpace, u: &Arc<FESpace>, q: &FESpace) -> Result<ExactnessCheck> {
    let h = harmonic_basis(w, u, q)?;
    Ok(ExactnessCheck {
        rank_rot: h.rot_rank,
        dim_q: q.dim(),
        dim_u: u.nfree(),
        dim_grad_w: w.nfree(),
        dim_harmonic: h.dim(),
        min_gap: h.min_gap(),
    })
}

/// For schemes without reduction: rank of `[grad W_Gamma, V_Gamma]` in `U_Gamma` against
/// `dim U_Gamma`.
pub fn check_image_rank(d: &Discretization) -> Result<(RankDecision, usize)> {
    let g = gradient_matrix(&d.w, &d.u);
    let r = d.r.global_matrix();
    let (nw, nv) = (d.w.nfree(), d.v.nfree());
    let mut m = Mat::zeros(d.u.nfree(), nw + nv);
    for (i, j, v) in g.entries() {
        if let (Some(fi), Some(fj)) = (d.u.free_index(i), d.w.free_index(j)) {
            m[(fi, fj)] = v;
        }
    }
    for (i, j, v) in r.entries() {
        if let (Some(fi), Some(fj)) = (d.u.free_index(i), d.v.free_index(j)) {
            m[(fi, nw + fj)] = v;
        }
    }
    Ok((rank(&m)?, d.u.nfree()))
}

fn random_field(space: &Arc<FESpace>, rng: &mut ChaCha8Rng) -> DiscreteField {
    let x: Vec<f64> = (0..space.nfree()).map(|_| rng.random_range(-1.0..1.0)).collect();
    DiscreteField::from_free(space.clone(), &x)
}

fn norm_sq(f: &DiscreteField, with_grad: bool) -> f64 {
    let deg = 2 * f.space().family().max_poly_degree();
    integrate(f.space().mesh(), deg, |k, r, _| {
        let v = f.eval_ref(k, r);
        let mut s = v.value[0] * v.value[0] + v.value[1] * v.value[1];
        if with_grad {
            s += v.jac.iter().flatten().map(|a| a * a).sum::<f64>();
        }
        s
    })
}

/// Residuals of the operator invariants over random fields of the source space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorResiduals {
    /// `max |rot R psi - P rot psi| / |psi|_1`.
    pub commuting: f64,
    /// `max_e |int_e t . (R psi - psi)|` over all edges.
    pub edge_moment: f64,
    /// `max |R R psi - R psi| / |psi|`.
    pub idempotency: f64,
    pub trials: usize,
}

pub const COMMUTING_TOL: f64 = 1e-10;
pub const EDGE_MOMENT_TOL: f64 = 1e-11;
pub const IDEMPOTENCY_TOL: f64 = 1e-11;

pub fn operator_residuals(
    r: &ReductionOperator,
    q: &Arc<FESpace>,
    trials: usize,
    seed: u64,
) -> Result<OperatorResiduals> {
    let v = r.source().clone();
    let mesh = v.mesh().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = OperatorResiduals { commuting: 0.0, edge_moment: 0.0, idempotency: 0.0, trials };
    let deg = v.family().max_poly_degree() + 2;
    let (gx, gw) = line_rule(deg);
    for _ in 0..trials {
        let psi = random_field(&v, &mut rng);
        let rp = r.reduce(&psi)?;
        let prot = project_rot(q, &psi)?;
        let err = integrate(&mesh, 2 * deg, |k, x, _| (rp.eval_ref(k, x).rot() - prot.eval_ref(k, x).scalar()).powi(2));
        let n1 = norm_sq(&psi, true).sqrt();
        out.commuting = out.commuting.max(err.sqrt() / n1);
        for e in 0..mesh.num_edges() {
            let (k, _) = mesh.edge_triangles(e);
            let g = mesh.cell_geometry(k);
            let [a, b] = mesh.edges()[e];
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            let t = mesh.edge_tangent(e);
            let len = mesh.edge_length(e);
            let pts: Vec<[f64; 2]> = gx
                .iter()
                .map(|s| {
                    g.to_reference([
                        0.5 * (pa[0] + pb[0]) + 0.5 * s * (pb[0] - pa[0]),
                        0.5 * (pa[1] + pb[1]) + 0.5 * s * (pb[1] - pa[1]),
                    ])
                })
                .collect();
            let ru = rp.eval_many(k, &pts);
            let pv = psi.eval_many(k, &pts);
            let d: f64 = (0..pts.len())
                .map(|i| {
                    let (x, y) = (ru[i].value, pv[i].value);
                    0.5 * len * gw[i] * (t[0] * (x[0] - y[0]) + t[1] * (x[1] - y[1]))
                })
                .sum();
            out.edge_moment = out.edge_moment.max(d.abs());
        }
        let rr = r.reinterpolate(&rp)?;
        let diff = rr.axpy(-1.0, &rp);
        out.idempotency = out.idempotency.max((norm_sq(&diff, false) / norm_sq(&psi, false)).sqrt());
    }
    Ok(out)
}

/// Full condition report for one discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsReport {
    pub scheme: String,
    pub level: usize,
    pub topology: String,
    pub dim: DimCheck,
    pub exactness: ExactnessCheck,
    pub residuals: OperatorResiduals,
    pub h1: H1Check,
    pub beta_rot: BetaEstimate,
    pub beta_harmonic: BetaEstimate,
    /// `C_R` measured for the reduction (1 without reduction).
    pub c_r: f64,
    /// Image rank check for schemes without reduction: `(rank, dim U)`.
    pub image_rank: Option<(usize, usize)>,
    pub seed: u64,
}

impl DiagnosticsReport {
    /// `beta_rot beta_harmonic / C_R^2`, a lower bound for the reduced inf-sup constant up to
    /// an unquantified constant (taken as 1).
    pub fn beta_r_bound(&self) -> f64 {
        if self.beta_harmonic.vacuous() {
            self.beta_rot.value / (self.c_r * self.c_r)
        } else {
            self.beta_rot.value * self.beta_harmonic.value / (self.c_r * self.c_r)
        }
    }

    /// `(name, pass, detail)` per condition.
    pub fn conditions(&self) -> Vec<(&'static str, &'static str, String)> {
        let flag = |b: bool| if b { "PASS" } else { "FAIL" };
        let r = &self.residuals;
        let mut v = vec![
            ("C1", flag(r.commuting <= COMMUTING_TOL), format!("commuting residual {:.3e}", r.commuting)),
            ("H3", flag(r.edge_moment <= EDGE_MOMENT_TOL), format!("edge moment residual {:.3e}", r.edge_moment)),
            ("idempotency", flag(r.idempotency <= IDEMPOTENCY_TOL), format!("residual {:.3e}", r.idempotency)),
            (
                "H1",
                flag(self.h1.pass()),
                format!(
                    "inclusion {:.3e}, distance {:.3e} over {} fields",
                    self.h1.inclusion_residual, self.h1.max_distance, self.h1.tested
                ),
            ),
            (
                "dim-formula",
                flag(self.dim.pass()),
                format!("computed {} formula {} gap {:.3e}", self.dim.computed, self.dim.formula, self.dim.min_gap),
            ),
            (
                "exactness",
                flag(self.exactness.pass()),
                format!(
                    "rank rot {} dim Q {} dim U {} = {} + {} + {}",
                    self.exactness.rank_rot,
                    self.exactness.dim_q,
                    self.exactness.dim_u,
                    self.exactness.dim_grad_w,
                    self.exactness.dim_harmonic,
                    self.exactness.dim_q
                ),
            ),
        ];
        let beta = |b: &BetaEstimate| {
            if b.vacuous() {
                ("VACUOUS", "no constraint".to_string())
            } else {
                (if b.value > 0.0 { "PASS" } else { "FAIL" }, format!("beta {:.6e}", b.value))
            }
        };
        let (s, d) = beta(&self.beta_rot);
        v.push(("C3", s, d));
        let (s, d) = beta(&self.beta_harmonic);
        v.push(("C4", s, d));
        if let Some((rk, n)) = self.image_rank {
            v.push(("image-rank", flag(rk == n), format!("rank {rk} dim U {n}")));
        }
        v
    }

    pub fn all_pass(&self) -> bool {
        self.conditions().iter().all(|(_, s, _)| *s != "FAIL")
    }

    /// Flat `key = value` block.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let e = &self.exactness;
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "level = {}", self.level);
        let _ = writeln!(s, "topology = {}", self.topology);
        let _ = writeln!(s, "dim_harmonic = {}", self.dim.computed);
        let _ = writeln!(s, "dim_harmonic_formula = {}", self.dim.formula);
        let _ = writeln!(s, "rank_gap_min = {:.6e}", self.dim.min_gap.min(e.min_gap).min(self.h1.min_gap));
        let _ = writeln!(s, "exactness_defect = {}", e.defect());
        let _ = writeln!(s, "commuting_residual = {:.6e}", self.residuals.commuting);
        let _ = writeln!(s, "edge_moment_residual = {:.6e}", self.residuals.edge_moment);
        let _ = writeln!(s, "idempotency_residual = {:.6e}", self.residuals.idempotency);
        let _ = writeln!(s, "h1_inclusion_residual = {:.6e}", self.h1.inclusion_residual);
        let _ = writeln!(s, "h1_distance = {:.6e}", self.h1.max_distance);
        let _ = writeln!(s, "beta_rot = {:.10e}", self.beta_rot.value);
        let _ = writeln!(s, "beta_harmonic = {:.10e}", self.beta_harmonic.value);
        let _ = writeln!(s, "c_r = {:.10e}", self.c_r);
        let _ = writeln!(s, "beta_r_bound_unquantified_constant = {:.10e}", self.beta_r_bound());
        let _ = writeln!(s, "seed = {}", self.seed);
        for (name, status, _) in self.conditions() {
            let _ = writeln!(s, "pass_{} = {}", name.replace('-', "_"), status);
        }
        s
    }

    pub const CSV_HEADER: &'static str = "scheme,level,condition,status,detail";

    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for (name, status, detail) in self.conditions() {
            let _ = writeln!(s, "{},{},{},{},\"{}\"", self.scheme, self.level, name, status, detail);
        }
        s
    }
}

/// Options of [`run_diagnostics`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsOptions {
    pub trials: usize,
    pub seed: u64,
    /// Constrain one interior dof of `U` (negative control).
    pub drop_interior_dof: bool,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { trials: 20, seed: 0, drop_interior_dof: false }
    }
}

/// Runs every check on one discretization.
pub fn run_diagnostics(d: &Discretization, level: usize, opts: DiagnosticsOptions) -> Result<DiagnosticsReport> {
    let topology = &boundary_topology(&d.mesh);
    let u = if opts.drop_interior_dof {
        let dof = (0..d.u.ndofs())
            .find(|&i| matches!(d.u.location(i), DofLocation::Interior(..)) && !d.u.is_constrained(i))
            .ok_or_else(|| PlateError::Config("no interior dof to drop".into()))?;
        d.u.with_extra_constraint(dof)
    } else {
        d.u.clone()
    };
    let r = ReductionOperator::new(d.r.kind(), d.v.clone(), u.clone())?;
    let basis = harmonic_basis(&d.w, &u, &d.q)?;
    let dim = check_dim_formula(topology, &basis);
    let exactness = ExactnessCheck {
        rank_rot: basis.rot_rank,
        dim_q: d.q.dim(),
        dim_u: u.nfree(),
        dim_grad_w: d.w.nfree(),
        dim_harmonic: basis.dim(),
        min_gap: basis.min_gap(),
    };
    let residuals = operator_residuals(&r, &d.q, opts.trials, opts.seed)?;
    let h1 = check_h1(&d.w, &u, &d.q, topology)?;
    let beta_rot = estimate_beta_rot(&d.v, &d.q)?;
    let beta_harmonic = estimate_beta_harmonic(&d.v, &r, &d.q, &basis)?;
    let c_r = crate::reduction::measure_cr(&r, opts.trials, opts.seed)?.operator_norm;
    let image_rank = if r.kind() == ReductionKind::Identity {
        let (rk, n) = check_image_rank(d)?;
        Some((rk.rank, n))
    } else {
        None
    };
    Ok(DiagnosticsReport {
        scheme: format!("{}{}", d.scheme.name(), d.scheme.degree()),
        level,
        topology: topology.to_string(),
        dim,
        exactness,
        residuals,
        h1,
        beta_rot,
        beta_harmonic,
        c_r,
        image_rank,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femlib::interpolate_vector;
    use crate::meshes;
    use crate::system::Scheme;

    fn disc(mesh: &Mesh, family: &str) -> Discretization {
        Discretization::new(mesh, Scheme::parse(family, 2).unwrap()).unwrap()
    }

    #[test]
    fn harmonic_dimension_matches_topology() {
        for (name, expected) in [("square_clamped", 0), ("annulus_clamped", 1), ("holey", 3), ("fig1", 4)] {
            let mesh = meshes::by_name(name).unwrap();
            let topo = boundary_topology(&mesh);
            assert_eq!(topo.harmonic_dimension(), expected, "{name}");
            for family in ["rt", "bdm"] {
                let d = disc(&mesh, family);
                let h = harmonic_basis(&d.w, &d.u, &d.q).unwrap();
                let c = check_dim_formula(&topo, &h);
                assert!(c.pass(), "{name} {family}: {c:?}");
            }
        }
    }

    #[test]
    fn winding_field_circulates_two_pi() {
        let mesh = meshes::annulus_clamped();
        let c = mesh.vertices().iter().fold([0.0, 0.0], |a, v| [a[0] + v[0], a[1] + v[1]]);
        let n = mesh.num_vertices() as f64;
        let c = [c[0] / n, c[1] / n];
        let f = |x: Point| {
            let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
            let r2 = dx * dx + dy * dy;
            [-dy / r2, dx / r2]
        };
        let hole = circulation_analytic(&mesh, 1, 12, f);
        let outer = circulation_analytic(&mesh, 0, 12, f);
        assert!((hole - 2.0 * std::f64::consts::PI).abs() < 1e-3, "{hole}");
        assert!((outer - hole).abs() < 1e-3);
    }

    #[test]
    fn discrete_boundary_circulation_is_integral_of_rot() {
        let mesh = Arc::new(meshes::holey());
        let d = Discretization::on_mesh(mesh.clone(), Scheme::parse("rt", 2).unwrap()).unwrap();
        let u = crate::femlib::build_space(&mesh, d.u.family(), crate::femlib::Bc::Natural).unwrap();
        let f = interpolate_vector(&u, |x| [x[1] * x[1] - x[0] * x[1], x[0] * x[0] * x[1]]);
        let rot = integrate(&mesh, 6, |k, r, _| f.eval_ref(k, r).rot());
        assert!((boundary_circulation(&f) - rot).abs() < 1e-10 * rot.abs().max(1.0));
    }

    #[test]
    fn conditions_hold_for_rt_and_bdm() {
        let mesh = meshes::holey();
        for family in ["rt", "bdm"] {
            let d = disc(&mesh, family);
            let rep = run_diagnostics(&d, 0, DiagnosticsOptions { trials: 3, ..Default::default() }).unwrap();
            assert!(rep.all_pass(), "{family}\n{}", rep.to_key_value());
            assert!(rep.beta_rot.value > 0.0 && rep.beta_harmonic.value > 0.0);
        }
    }

    #[test]
    fn dropping_an_interior_dof_breaks_h1() {
        let mesh = meshes::holey();
        let d = disc(&mesh, "rt");
        let opts = DiagnosticsOptions { trials: 2, seed: 1, drop_interior_dof: true };
        let rep = run_diagnostics(&d, 0, opts).unwrap();
        assert!(!rep.h1.pass(), "{:?}", rep.h1);
        assert!(!rep.all_pass());
    }

    #[test]
    fn tied_generators_are_constant_on_components() {
        let mesh = Arc::new(meshes::fig1());
        let topo = boundary_topology(&mesh);
        let d = Discretization::on_mesh(mesh, Scheme::parse("rt", 2).unwrap()).unwrap();
        let cols = tied_w_basis(&d.w, &topo);
        assert_eq!(cols.len(), d.w.nfree() + topo.n_cs() - 1);
    }
}
