//! Manufactured solutions, error norms, and refinement studies.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{PlateError, Result};
use crate::femlib::{triangle_rule, FieldValue};
use crate::mesh::{refine_uniform, Mesh, Point};
use crate::system::{
    assemble_rhs, solve_primal_rhs, DiscreteSolution, Discretization, LoadDensity, MaterialParams, PlateLoad, Scheme,
};

/// Exact plate fields built from a displacement `w` with `theta = (1 - 100 t^2 / lambda) grad w`
/// and `gamma = 100 grad w`, so that `lambda t^-2 (grad w - theta) = gamma`.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedSolution {
    pub material: MaterialParams,
}

/// Shear amplitude of the manufactured solution.
pub const SHEAR_AMPLITUDE: f64 = 100.0;

fn s3(a: f64) -> (f64, f64, f64) {
    // sin^3(4 pi a) and its first two derivatives.
    let k = 4.0 * PI;
    let (s, c) = (k * a).sin_cos();
    (s * s * s, 3.0 * k * s * s * c, 3.0 * k * k * s * (2.0 * c * c - s * s))
}

impl ManufacturedSolution {
    pub fn new(material: MaterialParams) -> Self {
        Self { material }
    }

    /// `w = sin^3(4 pi x) sin^3(4 pi y)`.
    pub fn w(&self, x: Point) -> f64 {
        s3(x[0]).0 * s3(x[1]).0
    }

    pub fn grad_w(&self, x: Point) -> [f64; 2] {
        let (fx, dfx, _) = s3(x[0]);
        let (fy, dfy, _) = s3(x[1]);
        [dfx * fy, fx * dfy]
    }

    pub fn hessian_w(&self, x: Point) -> [[f64; 2]; 2] {
        let (fx, dfx, ddfx) = s3(x[0]);
        let (fy, dfy, ddfy) = s3(x[1]);
        [[ddfx * fy, dfx * dfy], [dfx * dfy, fx * ddfy]]
    }

    /// `1 - 100 t^2 / lambda`, so that `theta = theta_factor * grad w`.
    pub fn theta_factor(&self) -> f64 {
        let m = &self.material;
        1.0 - SHEAR_AMPLITUDE * m.t * m.t / m.lambda()
    }

    pub fn theta(&self, x: Point) -> [f64; 2] {
        let g = self.grad_w(x);
        let c = self.theta_factor();
        [c * g[0], c * g[1]]
    }

    pub fn grad_theta(&self, x: Point) -> [[f64; 2]; 2] {
        let h = self.hessian_w(x);
        let c = self.theta_factor();
        [[c * h[0][0], c * h[0][1]], [c * h[1][0], c * h[1][1]]]
    }

    pub fn gamma(&self, x: Point) -> [f64; 2] {
        let g = self.grad_w(x);
        [SHEAR_AMPLITUDE * g[0], SHEAR_AMPLITUDE * g[1]]
    }

    pub fn w_value(&self, x: Point) -> FieldValue {
        FieldValue { value: [self.w(x), 0.0], jac: [self.grad_w(x), [0.0; 2]] }
    }

    pub fn theta_value(&self, x: Point) -> FieldValue {
        FieldValue { value: self.theta(x), jac: self.grad_theta(x) }
    }

    pub fn gamma_value(&self, x: Point) -> FieldValue {
        FieldValue { value: self.gamma(x), jac: [[0.0; 2]; 2] }
    }
}

impl ManufacturedSolution {
    /// Load part independent of `t`: `F(v) = (gamma, grad v)` and `-(gamma, psi)`.
    pub fn shear_load(&self) -> impl PlateLoad + '_ {
        move |x: Point| {
            let g = self.gamma(x);
            LoadDensity { f1: g, g0: [-g[0], -g[1]], ..Default::default() }
        }
    }

    /// `a(grad w, psi)`; the full load is `shear_load + theta_factor * bending_load`.
    pub fn bending_load(&self) -> impl PlateLoad + '_ {
        move |x: Point| LoadDensity { g1: self.material.bending_stress(self.hessian_w(x)), ..Default::default() }
    }
}

impl PlateLoad for ManufacturedSolution {
    /// `F(v) = (gamma, grad v)`, `G(psi) = a(theta, psi) - (gamma, psi)`.
    fn density(&self, x: Point) -> LoadDensity {
        let g = self.gamma(x);
        LoadDensity { f0: 0.0, f1: g, g0: [-g[0], -g[1]], g1: self.material.bending_stress(self.grad_theta(x)) }
    }
}

/// Relative errors of one discrete solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRecord {
    pub w_h1: f64,
    pub theta_h1: f64,
    pub gamma_l2: f64,
    /// `(|w - w_h|_1 + |theta - theta_h|_1 + t |gamma - gamma_h|) / (|w|_1 + |theta|_1 + t |gamma|)`.
    pub total: f64,
    /// `|w_h|_1 / |w|_1`.
    pub w_ratio: f64,
}

/// Extra quadrature degree on top of `2p` for the trigonometric data.
pub const ERROR_OVERSAMPLING: usize = 8;

/// Errors of `sol` against `exact` with quadrature of degree `2p + oversampling`.
pub fn error_norms_with(sol: &DiscreteSolution, exact: &ManufacturedSolution, oversampling: usize) -> ErrorRecord {
    let mesh = sol.w.space().mesh().clone();
    let p = sol.w.space().family().max_poly_degree().max(sol.theta.space().family().max_poly_degree());
    let rule = triangle_rule(2 * p + oversampling);
    let c = exact.theta_factor();
    // Squared integrals: errors of w, theta (H1), gamma (L2); norms of w, grad w, Hessian of w; |w_h|_1.
    let mut acc = [0.0f64; 7];
    for k in 0..mesh.num_triangles() {
        let g = mesh.cell_geometry(k);
        let wh = sol.w.eval_many(k, &rule.points);
        let th = sol.theta.eval_many(k, &rule.points);
        let gh = sol.gamma.eval_many(k, &rule.points);
        for (q, (r, wt)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = g.to_physical(*r);
            let (fx, dfx, ddfx) = s3(x[0]);
            let (fy, dfy, ddfy) = s3(x[1]);
            let w = fx * fy;
            let gw = [dfx * fy, fx * dfy];
            let hw = [[ddfx * fy, dfx * dfy], [dfx * dfy, fx * ddfy]];
            let wt = wt * g.det;
            let (a, b, e) = (&wh[q], &th[q], &gh[q]);
            let mut ew = (a.value[0] - w).powi(2);
            let mut whn = a.value[0].powi(2);
            let mut et = 0.0;
            let mut eg = 0.0;
            let mut nh = 0.0;
            for i in 0..2 {
                ew += (a.jac[0][i] - gw[i]).powi(2);
                whn += a.jac[0][i].powi(2);
                et += (b.value[i] - c * gw[i]).powi(2);
                eg += (e.value[i] - SHEAR_AMPLITUDE * gw[i]).powi(2);
                for (j, &h) in hw[i].iter().enumerate() {
                    et += (b.jac[i][j] - c * h).powi(2);
                    nh += h * h;
                }
            }
            let ng = gw[0] * gw[0] + gw[1] * gw[1];
            for (s, v) in acc.iter_mut().zip([ew, et, eg, w * w, ng, nh, whn]) {
                *s += wt * v;
            }
        }
    }
    let [ew, et, eg, n_w, n_g, n_h, whn] = acc.map(f64::sqrt);
    let w_norm = (n_w * n_w + n_g * n_g).sqrt();
    let t_norm = c.abs() * (n_g * n_g + n_h * n_h).sqrt();
    let g_norm = SHEAR_AMPLITUDE * n_g;
    let t = exact.material.t;
    ErrorRecord {
        w_h1: ew / w_norm,
        theta_h1: et / t_norm,
        gamma_l2: eg / g_norm,
        total: (ew + et + t * eg) / (w_norm + t_norm + t * g_norm),
        w_ratio: whn / w_norm,
    }
}

pub fn error_norms(sol: &DiscreteSolution, exact: &ManufacturedSolution) -> ErrorRecord {
    error_norms_with(sol, exact, ERROR_OVERSAMPLING)
}

/// Refinement study parameters.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub scheme: Scheme,
    pub ts: Vec<f64>,
    /// Number of levels; level `l` is the start mesh refined `l` times.
    pub levels: usize,
    pub material: MaterialParams,
    pub mesh: Mesh,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if self.levels < 2 {
            return Err(PlateError::Config(format!("need at least 2 levels, got {}", self.levels)));
        }
        if self.ts.is_empty() {
            return Err(PlateError::Config("t list is empty".into()));
        }
        for &t in &self.ts {
            self.material.with_t(t).validate()?;
        }
        Ok(())
    }
}

/// One `(level, t)` entry of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub family: &'static str,
    pub p: usize,
    pub level: usize,
    pub h: f64,
    pub ndof_w: usize,
    pub ndof_theta: usize,
    pub t: f64,
    pub errors: ErrorRecord,
    /// `log2(e_{l-1} / e_l)` of the total error; `None` on the first level.
    pub rate_total: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Whether the `w_h1_ratio` column is emitted.
    pub locking: bool,
}

pub const CSV_HEADER: &str =
    "family,p,level,h,ndof_w,ndof_theta,t,err_w_h1,err_theta_h1,err_gamma_l2,err_total,rate_total";

impl ConvergenceReport {
    pub fn rows_for_t(&self, t: f64) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(move |r| r.t == t)
    }

    pub fn finest(&self, t: f64) -> Option<&ConvergenceRow> {
        self.rows_for_t(t).max_by_key(|r| r.level)
    }

    /// Rate of `quantity` between the last two levels for thickness `t`.
    pub fn final_rate(&self, t: f64, quantity: impl Fn(&ErrorRecord) -> f64) -> Option<f64> {
        let mut rows: Vec<&ConvergenceRow> = self.rows_for_t(t).collect();
        rows.sort_by_key(|r| r.level);
        let n = rows.len();
        (n >= 2).then(|| (quantity(&rows[n - 2].errors) / quantity(&rows[n - 1].errors)).log2())
    }

    /// Largest over smallest finest-level total error across all `t`.
    pub fn t_spread(&self) -> f64 {
        let mut ts: Vec<f64> = self.rows.iter().map(|r| r.t).collect();
        ts.dedup();
        let e: Vec<f64> = ts.iter().filter_map(|&t| self.finest(t)).map(|r| r.errors.total).collect();
        let max = e.iter().cloned().fold(f64::MIN, f64::max);
        let min = e.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        if self.locking {
            s.push_str(",w_h1_ratio");
        }
        s.push('\n');
        for r in &self.rows {
            let rate = r.rate_total.map(|v| format!("{v:.12e}")).unwrap_or_default();
            let e = &r.errors;
            let _ = write!(
                s,
                "{},{},{},{:.12e},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                r.family, r.p, r.level, r.h, r.ndof_w, r.ndof_theta, r.t, e.w_h1, e.theta_h1, e.gamma_l2, e.total, rate
            );
            if self.locking {
                let _ = write!(s, ",{:.12e}", e.w_ratio);
            }
            s.push('\n');
        }
        s
    }
}

/// Runs the refinement study. On failure the rows computed so far are handed to
/// `on_row` before the error is returned.
pub fn run_convergence_with(
    config: &StudyConfig,
    mut on_row: impl FnMut(&ConvergenceRow),
) -> std::result::Result<ConvergenceReport, (ConvergenceReport, PlateError)> {
    let mut report =
        ConvergenceReport { rows: Vec::new(), locking: matches!(config.scheme, Scheme::PlainLagrange(..)) };
    if let Err(e) = config.validate() {
        return Err((report, e));
    }
    let mut mesh = config.mesh.clone();
    let mut prev: Vec<Option<f64>> = vec![None; config.ts.len()];
    for level in 0..config.levels {
        if level > 0 {
            mesh = refine_uniform(&mesh);
        }
        let d = match Discretization::new(&mesh, config.scheme) {
            Ok(d) => d,
            Err(e) => return Err((report, e)),
        };
        let base = ManufacturedSolution::new(config.material);
        let shear_rhs = assemble_rhs(&d, &base.shear_load());
        let bending_rhs = assemble_rhs(&d, &base.bending_load());
        for (ti, &t) in config.ts.iter().enumerate() {
            let mat = config.material.with_t(t);
            let exact = ManufacturedSolution::new(mat);
            let c = exact.theta_factor();
            let rhs = shear_rhs.iter().zip(&bending_rhs).map(|(a, b)| a + c * b).collect();
            let sol = match solve_primal_rhs(&d, &mat, rhs) {
                Ok(s) => s,
                Err(e) => return Err((report, e)),
            };
            let errors = error_norms(&sol, &exact);
            let rate_total = prev[ti].map(|p| (p / errors.total).log2());
            prev[ti] = Some(errors.total);
            let row = ConvergenceRow {
                family: config.scheme.name(),
                p: config.scheme.degree(),
                level,
                h: mesh.h(),
                ndof_w: d.w.nfree(),
                ndof_theta: d.v.nfree(),
                t,
                errors,
                rate_total,
            };
            on_row(&row);
            report.rows.push(row);
        }
    }
    Ok(report)
}

pub fn run_convergence(config: &StudyConfig) -> Result<ConvergenceReport> {
    run_convergence_with(config, |_| {}).map_err(|(_, e)| e)
}

/// Locking demonstration: the unreduced lowest-order Lagrange scheme at small `t`.
pub fn run_locking_demo(config: &StudyConfig) -> Result<ConvergenceReport> {
    if !matches!(config.scheme, Scheme::PlainLagrange(..)) {
        return Err(PlateError::Config("the locking demo runs the plain Lagrange scheme".into()));
    }
    if config.ts.iter().any(|&t| t > 1e-2) {
        return Err(PlateError::Config("the locking demo needs t <= 1e-2".into()));
    }
    run_convergence(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femlib::{error_squared, integrate, interpolate_scalar, interpolate_vector};
    use rand::{Rng, SeedableRng};

    #[test]
    fn manufactured_fields_are_consistent() {
        let mat = MaterialParams::default().with_t(0.1);
        let m = ManufacturedSolution::new(mat);
        assert!((m.w([0.125, 0.125]) - 1.0).abs() < 1e-14);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let x = [rng.random_range(0.0..2.0), rng.random_range(0.0..1.0)];
            let g = m.grad_w(x);
            let th = m.theta(x);
            let s = mat.shear_factor();
            let gam = m.gamma(x);
            for c in 0..2 {
                assert!((s * (g[c] - th[c]) - gam[c]).abs() < 1e-12 * (1.0 + gam[c].abs()));
            }
            // Finite-difference check of the Hessian.
            let e = 1e-6;
            let gp = m.grad_w([x[0] + e, x[1]]);
            let gm = m.grad_w([x[0] - e, x[1]]);
            let h = m.hessian_w(x);
            assert!(((gp[0] - gm[0]) / (2.0 * e) - h[0][0]).abs() < 1e-4 * (1.0 + h[0][0].abs()));
            assert!(((gp[1] - gm[1]) / (2.0 * e) - h[1][0]).abs() < 1e-4 * (1.0 + h[1][0].abs()));
        }
        for y in [0.1, 0.3, 0.77] {
            assert_eq!(m.w([0.0, y]), 0.0);
            assert_eq!(m.grad_w([0.0, y]), [0.0, 0.0]);
            assert!(m.w([2.0, y]).abs() < 1e-12);
            assert!(m.theta([2.0, y])[1].abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_solution_as_exact_has_zero_error() {
        let mat = MaterialParams::default();
        let d = Discretization::new(&crate::meshes::holey(), Scheme::RtMitc(2)).unwrap();
        let m = ManufacturedSolution::new(mat);
        let sol = crate::system::solve_primal(&d, &mat, &m).unwrap();
        let (l2, h1) = error_squared(&sol.w, 12, |x| {
            let (k, r) = locate(&d.mesh, x);
            sol.w.eval_ref(k, r)
        });
        assert!(l2 + h1 < 1e-20, "{l2} {h1}");
    }

    fn locate(mesh: &Mesh, x: Point) -> (usize, [f64; 2]) {
        for k in 0..mesh.num_triangles() {
            let r = mesh.cell_geometry(k).to_reference(x);
            if r[0] >= -1e-12 && r[1] >= -1e-12 && r[0] + r[1] <= 1.0 + 1e-12 {
                return (k, r);
            }
        }
        panic!("point outside mesh");
    }

    #[test]
    fn interpolation_error_is_below_galerkin_error_scale() {
        let mat = MaterialParams::default();
        let mesh = refine_uniform(&crate::meshes::holey());
        let d = Discretization::new(&mesh, Scheme::BdmMitc(2)).unwrap();
        let m = ManufacturedSolution::new(mat);
        let sol = crate::system::solve_primal(&d, &mat, &m).unwrap();
        let e = error_norms(&sol, &m);
        let wi = interpolate_scalar(&d.w, |x| m.w(x));
        let (a, b) = error_squared(&wi, 14, |x| m.w_value(x));
        let ti = interpolate_vector(&d.v, |x| m.theta(x));
        let (c, dd) = error_squared(&ti, 14, |x| m.theta_value(x));
        let w_norm =
            integrate(&d.mesh, 14, |_, _, x| m.w(x).powi(2) + m.grad_w(x).iter().map(|g| g * g).sum::<f64>()).sqrt();
        assert!((a + b).sqrt() / w_norm < 5.0 * e.w_h1);
        assert!(c + dd > 0.0);
        let e2 = error_norms_with(&sol, &m, 2 * ERROR_OVERSAMPLING);
        assert!((e.total - e2.total).abs() < 1e-6 * e.total);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let cfg = StudyConfig {
            scheme: Scheme::RtMitc(2),
            ts: vec![1.0, 0.1],
            levels: 2,
            material: MaterialParams::default(),
            mesh: crate::meshes::holey(),
        };
        let rep = run_convergence(&cfg).unwrap();
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(rep.rows.iter().all(|r| r.errors.total.is_finite()));
        for t in [1.0, 0.1] {
            let rows: Vec<_> = rep.rows_for_t(t).collect();
            assert!(rows[0].rate_total.is_none());
            assert!(rows[1].errors.total < rows[0].errors.total);
            assert!(rows[1].rate_total.unwrap() > 0.0);
        }
    }

    #[test]
    fn single_pass_errors_match_fieldwise_quadrature() {
        let mat = MaterialParams::default().with_t(0.05);
        let d = Discretization::new(&crate::meshes::holey(), Scheme::BdmMitc(2)).unwrap();
        let m = ManufacturedSolution::new(mat);
        let sol = crate::system::solve_primal(&d, &mat, &m).unwrap();
        let e = error_norms(&sol, &m);
        let deg = 2 * 3 + ERROR_OVERSAMPLING;
        let norm = |f: &dyn Fn(Point) -> FieldValue| {
            integrate(&d.mesh, deg, |_, _, x| {
                let v = f(x);
                v.value.iter().chain(v.jac.iter().flatten()).map(|a| a * a).sum::<f64>()
            })
            .sqrt()
        };
        let (a, b) = error_squared(&sol.w, deg, |x| m.w_value(x));
        let (c, dd) = error_squared(&sol.theta, deg, |x| m.theta_value(x));
        let (g, _) = error_squared(&sol.gamma, deg, |x| m.gamma_value(x));
        let wn = norm(&|x| m.w_value(x));
        let tn = norm(&|x| m.theta_value(x));
        let gn = norm(&|x| m.gamma_value(x));
        let total = ((a + b).sqrt() + (c + dd).sqrt() + 0.05 * g.sqrt()) / (wn + tn + 0.05 * gn);
        assert!((e.total - total).abs() < 1e-12 * total);
        assert!((e.w_h1 - (a + b).sqrt() / wn).abs() < 1e-12 * e.w_h1);
        assert!((e.gamma_l2 - g.sqrt() / gn).abs() < 1e-12 * e.gamma_l2);
    }

    #[test]
    fn split_load_matches_full_load() {
        let mat = MaterialParams::default().with_t(0.3);
        let d = Discretization::new(&crate::meshes::holey(), Scheme::RtMitc(2)).unwrap();
        let m = ManufacturedSolution::new(mat);
        let full = assemble_rhs(&d, &m);
        let a = assemble_rhs(&d, &m.shear_load());
        let b = assemble_rhs(&d, &m.bending_load());
        let c = m.theta_factor();
        let scale = full.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for i in 0..full.len() {
            assert!((full[i] - a[i] - c * b[i]).abs() < 1e-12 * scale);
        }
    }
}
