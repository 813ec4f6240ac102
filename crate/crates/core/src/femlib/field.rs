use std::sync::Arc;

use faer::Mat;

use super::quadrature::triangle_rule;
use super::reference::ReferenceLagrange;
use super::space::{DofLocation, FESpace, Family, Tabulation};
use crate::linalg::dense_inverse;
use crate::mesh::{Mesh, Point};

/// Value and first derivatives of a field at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValue {
    /// Components; the second is zero for scalar fields.
    pub value: [f64; 2],
    /// `jac[c][d]`: derivative of component `c` in direction `d`.
    pub jac: [[f64; 2]; 2],
}

impl FieldValue {
    pub fn scalar(&self) -> f64 {
        self.value[0]
    }

    pub fn grad(&self) -> [f64; 2] {
        self.jac[0]
    }

    pub fn rot(&self) -> f64 {
        self.jac[1][0] - self.jac[0][1]
    }

    pub fn div(&self) -> f64 {
        self.jac[0][0] + self.jac[1][1]
    }
}

/// Coefficient vector over all dofs of a space; constrained entries are zero for
/// members of the constrained space.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    space: Arc<FESpace>,
    coeffs: Vec<f64>,
}

impl DiscreteField {
    pub fn new(space: Arc<FESpace>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.ndofs());
        Self { space, coeffs }
    }

    pub fn zero(space: Arc<FESpace>) -> Self {
        let n = space.ndofs();
        Self::new(space, vec![0.0; n])
    }

    pub fn from_free(space: Arc<FESpace>, free: &[f64]) -> Self {
        let coeffs = space.expand(free);
        Self::new(space, coeffs)
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn free_coeffs(&self) -> Vec<f64> {
        self.space.restrict(&self.coeffs)
    }

    /// Zeroes every eliminated dof.
    pub fn apply_constraints(&mut self) {
        for d in 0..self.coeffs.len() {
            if self.space.is_constrained(d) {
                self.coeffs[d] = 0.0;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.space.clone(), self.coeffs.iter().map(|c| a * c).collect())
    }

    /// `self + a * other`; both must live on the same space.
    pub fn axpy(&self, a: f64, other: &DiscreteField) -> Self {
        assert!(Arc::ptr_eq(&self.space, &other.space), "fields live on different spaces");
        let c = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + a * y).collect();
        Self::new(self.space.clone(), c)
    }

    /// Evaluates at barycentric coordinates `(l0, l1, l2)` of cell `k`.
    pub fn eval(&self, k: usize, bary: [f64; 3]) -> FieldValue {
        self.eval_ref(k, [bary[1], bary[2]])
    }

    pub fn eval_ref(&self, k: usize, r: [f64; 2]) -> FieldValue {
        self.eval_many(k, &[r])[0]
    }

    pub fn eval_many(&self, k: usize, points: &[[f64; 2]]) -> Vec<FieldValue> {
        let tab = self.space.tabulate(k, points);
        self.eval_tabulated(k, &tab)
    }

    pub fn eval_tabulated(&self, k: usize, tab: &Tabulation) -> Vec<FieldValue> {
        let dofs = self.space.cell_dofs(k);
        (0..tab.n_points)
            .map(|q| {
                let mut fv = FieldValue { value: [0.0; 2], jac: [[0.0; 2]; 2] };
                for (j, &d) in dofs.iter().enumerate() {
                    let c = self.coeffs[d];
                    if c == 0.0 {
                        continue;
                    }
                    for comp in 0..tab.ncomp {
                        fv.value[comp] += c * tab.value(j, q, comp);
                        fv.jac[comp][0] += c * tab.grad(j, q, comp, 0);
                        fv.jac[comp][1] += c * tab.grad(j, q, comp, 1);
                    }
                }
                fv
            })
            .collect()
    }
}

/// Sums `f(cell, reference point, physical point) * weight` over all cells.
pub fn integrate(mesh: &Mesh, degree: usize, f: impl Fn(usize, [f64; 2], Point) -> f64) -> f64 {
    let rule = triangle_rule(degree);
    (0..mesh.num_triangles())
        .map(|k| {
            let g = mesh.cell_geometry(k);
            let s: f64 = rule.points.iter().zip(&rule.weights).map(|(r, w)| w * f(k, *r, g.to_physical(*r))).sum();
            s * g.det
        })
        .sum()
}

/// Extra quadrature degree applied to non-polynomial data.
pub const OVERSAMPLING: usize = 8;

/// Canonical interpolant of a scalar function (Lagrange families: nodal values).
pub fn interpolate_scalar(space: &Arc<FESpace>, g: impl Fn(Point) -> f64) -> DiscreteField {
    assert_eq!(space.ncomp(), 1, "scalar interpolation needs a scalar space");
    let mut coeffs = vec![0.0; space.ndofs()];
    for k in 0..space.mesh().num_triangles() {
        let nodes = space.lagrange_node_positions(k);
        for (j, &d) in space.cell_dofs(k).iter().enumerate() {
            coeffs[d] = g(nodes[j]);
        }
    }
    DiscreteField::new(space.clone(), coeffs)
}

/// Canonical interpolant of a vector function: nodal values projected on the dof
/// directions (plus a local bubble projection) for Lagrange types, dof functionals
/// for H(rot) families.
pub fn interpolate_vector(space: &Arc<FESpace>, g: impl Fn(Point) -> [f64; 2]) -> DiscreteField {
    assert_eq!(space.ncomp(), 2, "vector interpolation needs a vector space");
    let mesh = space.mesh().clone();
    let mut coeffs = vec![0.0; space.ndofs()];
    match space.family() {
        Family::RaviartThomas(_) | Family::BrezziDouglasMarini(_) => {
            let el = space.hrot_element().unwrap();
            for k in 0..mesh.num_triangles() {
                let fq = el.functionals(&mesh, k, el.poly_degree() + OVERSAMPLING);
                let vals: Vec<[f64; 2]> = fq.phys.iter().map(|x| g(*x)).collect();
                let l = fq.apply(&vals);
                for (j, &d) in space.cell_dofs(k).iter().enumerate() {
                    coeffs[d] = l[j];
                }
            }
        }
        Family::LagrangeVector(p) | Family::BubbleEnrichedVector(p) => {
            let nnode = ReferenceLagrange::get(p).len();
            for k in 0..mesh.num_triangles() {
                let nodes = space.lagrange_node_positions(k);
                let dofs = space.cell_dofs(k);
                for (s, x) in nodes.iter().enumerate() {
                    let v = g(*x);
                    for c in 0..2 {
                        let d = dofs[2 * s + c];
                        let dir = space.dof_direction(d).unwrap();
                        coeffs[d] = v[0] * dir[0] + v[1] * dir[1];
                    }
                }
                if dofs.len() > 2 * nnode {
                    project_bubbles(space, k, nnode, &g, &mut coeffs);
                }
            }
        }
        _ => unreachable!(),
    }
    DiscreteField::new(space.clone(), coeffs)
}

/// Chooses the bubble coefficients of cell `k` by L2-projecting the nodal residual.
fn project_bubbles(space: &Arc<FESpace>, k: usize, nnode: usize, g: &impl Fn(Point) -> [f64; 2], coeffs: &mut [f64]) {
    let mesh = space.mesh();
    let geo = mesh.cell_geometry(k);
    let rule = triangle_rule(2 * space.family().max_poly_degree() + OVERSAMPLING);
    let tab = space.tabulate(k, &rule.points);
    let dofs = space.cell_dofs(k);
    let nb = dofs.len() - 2 * nnode;
    let bubble = |j: usize| 2 * nnode + j;
    let mut mass = Mat::<f64>::zeros(nb, nb);
    let mut rhs = vec![0.0; nb];
    for (q, (r, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let x = geo.to_physical(*r);
        let gv = g(x);
        let mut nodal = [0.0; 2];
        for j in 0..2 * nnode {
            let c = coeffs[dofs[j]];
            nodal[0] += c * tab.value(j, q, 0);
            nodal[1] += c * tab.value(j, q, 1);
        }
        let res = [gv[0] - nodal[0], gv[1] - nodal[1]];
        for a in 0..nb {
            let ba = tab.vector(bubble(a), q);
            rhs[a] += w * (res[0] * ba[0] + res[1] * ba[1]);
            for b in 0..nb {
                let bb = tab.vector(bubble(b), q);
                mass[(a, b)] += w * (ba[0] * bb[0] + ba[1] * bb[1]);
            }
        }
    }
    let inv = dense_inverse(&mass);
    for a in 0..nb {
        coeffs[dofs[bubble(a)]] = (0..nb).map(|b| inv[(a, b)] * rhs[b]).sum();
    }
}

/// Nodal interpolant for discontinuous spaces.
pub fn interpolate_discontinuous(space: &Arc<FESpace>, g: impl Fn(usize, Point) -> f64) -> DiscreteField {
    assert!(matches!(space.family(), Family::DiscontinuousScalar(_)));
    let mut coeffs = vec![0.0; space.ndofs()];
    for k in 0..space.mesh().num_triangles() {
        let nodes = space.lagrange_node_positions(k);
        for (j, &d) in space.cell_dofs(k).iter().enumerate() {
            coeffs[d] = g(k, nodes[j]);
        }
    }
    DiscreteField::new(space.clone(), coeffs)
}

/// L2 and H1-seminorm squared of a field minus an exact reference, by quadrature.
pub fn error_squared(field: &DiscreteField, degree: usize, exact: impl Fn(Point) -> FieldValue) -> (f64, f64) {
    let mesh = field.space().mesh().clone();
    let rule = triangle_rule(degree);
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for k in 0..mesh.num_triangles() {
        let g = mesh.cell_geometry(k);
        let vals = field.eval_many(k, &rule.points);
        for ((r, w), fv) in rule.points.iter().zip(&rule.weights).zip(&vals) {
            let e = exact(g.to_physical(*r));
            let wt = w * g.det;
            for c in 0..2 {
                l2 += wt * (fv.value[c] - e.value[c]).powi(2);
                for d in 0..2 {
                    h1 += wt * (fv.jac[c][d] - e.jac[c][d]).powi(2);
                }
            }
        }
    }
    (l2, h1)
}

/// Whether dof `d` is interior to a cell.
pub fn is_interior(space: &FESpace, d: usize) -> bool {
    matches!(space.location(d), DofLocation::Interior(..))
}
