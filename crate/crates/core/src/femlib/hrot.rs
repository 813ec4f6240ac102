//! Tangentially continuous (H(rot)) elements: rotated Raviart-Thomas and BDM.
//!
//! Bases are built on each physical element from a scaled monomial spanning set by
//! inverting the matrix of degree-of-freedom functionals. Edge functionals are Legendre
//! moments of the tangential component, taken along the global edge orientation and
//! normalized by the edge length; interior functionals are mean moments against a
//! fixed vector polynomial space.

use faer::Mat;

use super::quadrature::{legendre_values, line_rule, triangle_rule};
use super::reference::{homogeneous_exponents, monomial, monomial_exponents};
use crate::linalg::dense_inverse;
use crate::mesh::{Mesh, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HrotKind {
    RaviartThomas,
    Bdm,
}

/// Vector polynomial as a sum of `coef * x^a y^b` terms in component `comp`.
#[derive(Clone, Debug)]
pub(crate) struct VecPoly {
    terms: Vec<(usize, f64, usize, usize)>,
}

impl VecPoly {
    fn eval(&self, s: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let mut v = [0.0; 2];
        let mut d = [[0.0; 2]; 2];
        for &(c, coef, a, b) in &self.terms {
            let (m, g) = monomial(a, b, s[0], s[1]);
            v[c] += coef * m;
            d[c][0] += coef * g[0];
            d[c][1] += coef * g[1];
        }
        (v, d)
    }
}

/// Basis of `P_k^2`.
fn full_span(k: usize) -> Vec<VecPoly> {
    let mut out = Vec::new();
    for (a, b) in monomial_exponents(k) {
        out.push(VecPoly { terms: vec![(0, 1.0, a, b)] });
        out.push(VecPoly { terms: vec![(1, 1.0, a, b)] });
    }
    out
}

/// Basis of `P_k^2 + x^perp P~_k` (rotated Raviart-Thomas of degree `k + 1`).
fn rotated_rt_span(k: usize) -> Vec<VecPoly> {
    let mut out = full_span(k);
    for (a, b) in homogeneous_exponents(k) {
        out.push(VecPoly { terms: vec![(0, -1.0, a, b + 1), (1, 1.0, a + 1, b)] });
    }
    out
}

/// Basis of `P_k^2 + x P~_k`. Interior BDM moments must test against this space:
/// with `x^perp` in place of `x` the gradient of the cubic bubble annihilates every
/// test and the functionals are not unisolvent.
fn radial_rt_span(k: usize) -> Vec<VecPoly> {
    let mut out = full_span(k);
    for (a, b) in homogeneous_exponents(k) {
        out.push(VecPoly { terms: vec![(0, 1.0, a + 1, b), (1, 1.0, a, b + 1)] });
    }
    out
}

/// Functionals expressed as weighted point evaluations: `l_i(u) = sum_q w[i][q] . u(x_q)`.
#[derive(Clone, Debug)]
pub struct FunctionalQuadrature {
    pub phys: Vec<Point>,
    pub reference: Vec<[f64; 2]>,
    /// Row-major `n_functionals x n_points` weight vectors.
    pub weights: Vec<[f64; 2]>,
    pub n_functionals: usize,
}

impl FunctionalQuadrature {
    pub fn n_points(&self) -> usize {
        self.phys.len()
    }

    pub fn weight(&self, i: usize, q: usize) -> [f64; 2] {
        self.weights[i * self.n_points() + q]
    }

    /// Applies every functional to values sampled at `phys`.
    pub fn apply(&self, values: &[[f64; 2]]) -> Vec<f64> {
        let nq = self.n_points();
        (0..self.n_functionals)
            .map(|i| {
                (0..nq)
                    .map(|q| {
                        let w = self.weights[i * nq + q];
                        w[0] * values[q][0] + w[1] * values[q][1]
                    })
                    .sum()
            })
            .collect()
    }
}

/// Degree-of-freedom layout and spanning sets for one family and degree.
#[derive(Clone, Debug)]
pub struct HrotElement {
    pub kind: HrotKind,
    pub degree: usize,
    span: Vec<VecPoly>,
    interior_tests: Vec<VecPoly>,
}

impl HrotElement {
    pub fn new(kind: HrotKind, degree: usize) -> Self {
        assert!(degree >= 1);
        let (span, interior_tests) = match kind {
            HrotKind::RaviartThomas => {
                (rotated_rt_span(degree - 1), if degree >= 2 { full_span(degree - 2) } else { Vec::new() })
            }
            HrotKind::Bdm => (full_span(degree), if degree >= 2 { radial_rt_span(degree - 2) } else { Vec::new() }),
        };
        let el = Self { kind, degree, span, interior_tests };
        assert_eq!(el.local_dim(), 3 * el.edge_dofs() + el.interior_dofs());
        el
    }

    pub fn local_dim(&self) -> usize {
        self.span.len()
    }

    /// Tangential moments per edge.
    pub fn edge_dofs(&self) -> usize {
        match self.kind {
            HrotKind::RaviartThomas => self.degree,
            HrotKind::Bdm => self.degree + 1,
        }
    }

    pub fn interior_dofs(&self) -> usize {
        self.interior_tests.len()
    }

    /// Polynomial degree of the local space.
    pub fn poly_degree(&self) -> usize {
        self.degree
    }

    /// Functionals on cell `k`, exact for inputs of polynomial degree `input_degree`.
    pub fn functionals(&self, mesh: &Mesh, k: usize, input_degree: usize) -> FunctionalQuadrature {
        let g = mesh.cell_geometry(k);
        let ne = self.edge_dofs();
        let (gx, gw) = line_rule(input_degree + ne);
        let tri = triangle_rule(input_degree + self.degree);
        let n_edge_pts = 3 * gx.len();
        let npts = n_edge_pts + tri.points.len();
        let nfun = self.local_dim();
        let mut phys = Vec::with_capacity(npts);
        let mut reference = Vec::with_capacity(npts);
        let mut weights = vec![[0.0; 2]; nfun * npts];
        let tri_v = mesh.triangles()[k];
        let edges = mesh.triangle_edges(k);
        for (j, &e) in edges.iter().enumerate() {
            let [lo, hi] = mesh.edges()[e];
            debug_assert!(tri_v.contains(&lo) && tri_v.contains(&hi));
            let (a, b) = (mesh.vertices()[lo], mesh.vertices()[hi]);
            let t = mesh.edge_tangent(e);
            for (qi, (&s, &w)) in gx.iter().zip(&gw).enumerate() {
                let x = [0.5 * (a[0] + b[0]) + 0.5 * s * (b[0] - a[0]), 0.5 * (a[1] + b[1]) + 0.5 * s * (b[1] - a[1])];
                phys.push(x);
                reference.push(g.to_reference(x));
                let leg = legendre_values(ne, s);
                let q = j * gx.len() + qi;
                for m in 0..ne {
                    let c = 0.5 * w * leg[m];
                    weights[(j * ne + m) * npts + q] = [c * t[0], c * t[1]];
                }
            }
        }
        let h = g.diameter;
        for (qi, (r, &w)) in tri.points.iter().zip(&tri.weights).enumerate() {
            let x = g.to_physical(*r);
            phys.push(x);
            reference.push(*r);
            let s = [(x[0] - g.centroid[0]) / h, (x[1] - g.centroid[1]) / h];
            let q = n_edge_pts + qi;
            for (m, eta) in self.interior_tests.iter().enumerate() {
                let (v, _) = eta.eval(s);
                weights[(3 * ne + m) * npts + q] = [2.0 * w * v[0], 2.0 * w * v[1]];
            }
        }
        FunctionalQuadrature { phys, reference, weights, n_functionals: nfun }
    }

    /// Coefficients of the nodal basis in the scaled spanning set on cell `k`.
    pub fn cell_basis(&self, mesh: &Mesh, k: usize) -> CellBasis {
        let g = mesh.cell_geometry(k);
        let fq = self.functionals(mesh, k, self.degree);
        let n = self.local_dim();
        let h = g.diameter;
        let c = g.centroid;
        let vals: Vec<Vec<[f64; 2]>> = self
            .span
            .iter()
            .map(|p| fq.phys.iter().map(|x| p.eval([(x[0] - c[0]) / h, (x[1] - c[1]) / h]).0).collect())
            .collect();
        let mut d = Mat::zeros(n, n);
        for (kk, v) in vals.iter().enumerate() {
            let l = fq.apply(v);
            for i in 0..n {
                d[(i, kk)] = l[i];
            }
        }
        let inv = dense_inverse(&d);
        let coeffs = (0..n * n).map(|idx| inv[(idx / n, idx % n)]).collect();
        CellBasis { center: c, scale: h, coeffs, n }
    }

    /// Values and physical Jacobians (`d[c][dir]`) of the cell basis at physical point `x`.
    pub fn eval_basis(&self, cb: &CellBasis, x: Point, vals: &mut Vec<[f64; 2]>, jacs: &mut Vec<[[f64; 2]; 2]>) {
        let s = [(x[0] - cb.center[0]) / cb.scale, (x[1] - cb.center[1]) / cb.scale];
        let raw: Vec<([f64; 2], [[f64; 2]; 2])> = self.span.iter().map(|p| p.eval(s)).collect();
        let n = cb.n;
        vals.clear();
        jacs.clear();
        let inv_h = 1.0 / cb.scale;
        for j in 0..n {
            let mut v = [0.0; 2];
            let mut d = [[0.0; 2]; 2];
            for (kk, (rv, rd)) in raw.iter().enumerate() {
                let cf = cb.coeffs[kk * n + j];
                if cf == 0.0 {
                    continue;
                }
                for comp in 0..2 {
                    v[comp] += cf * rv[comp];
                    d[comp][0] += cf * rd[comp][0] * inv_h;
                    d[comp][1] += cf * rd[comp][1] * inv_h;
                }
            }
            vals.push(v);
            jacs.push(d);
        }
    }
}

/// Per-cell basis data: `basis_j = sum_k coeffs[k * n + j] * span_k((x - center) / scale)`.
#[derive(Clone, Debug)]
pub struct CellBasis {
    pub center: Point,
    pub scale: f64,
    pub coeffs: Vec<f64>,
    pub n: usize,
}
