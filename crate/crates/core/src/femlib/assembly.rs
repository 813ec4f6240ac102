//! Generic Gram matrices over a single space.

use super::quadrature::triangle_rule;
use super::space::FESpace;
use crate::linalg::{SparseMatrix, TripletBuilder};

/// Which dofs index the rows and columns of an assembled matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofSet {
    /// Every dof, constrained or not.
    All,
    /// Only unconstrained dofs, numbered by `FESpace::free_index`.
    Free,
}

pub(crate) fn index_of(space: &FESpace, set: DofSet, d: usize) -> Option<usize> {
    match set {
        DofSet::All => Some(d),
        DofSet::Free => space.free_index(d),
    }
}

pub(crate) fn size_of(space: &FESpace, set: DofSet) -> usize {
    match set {
        DofSet::All => space.ndofs(),
        DofSet::Free => space.nfree(),
    }
}

/// Assembles `sum_K int_K kernel(tab, i, j, q)` over one space.
fn assemble(
    space: &FESpace,
    set: DofSet,
    degree: usize,
    kernel: impl Fn(&super::Tabulation, usize, usize, usize) -> f64,
) -> SparseMatrix {
    let n = size_of(space, set);
    let mut t = TripletBuilder::new(n, n);
    let rule = triangle_rule(degree);
    let mesh = space.mesh();
    for k in 0..mesh.num_triangles() {
        let det = mesh.cell_geometry(k).det;
        let tab = space.tabulate(k, &rule.points);
        let dofs = space.cell_dofs(k);
        for (i, &di) in dofs.iter().enumerate() {
            let Some(gi) = index_of(space, set, di) else { continue };
            for (j, &dj) in dofs.iter().enumerate() {
                let Some(gj) = index_of(space, set, dj) else { continue };
                let v: f64 = rule.weights.iter().enumerate().map(|(q, w)| w * kernel(&tab, i, j, q)).sum();
                if v != 0.0 {
                    t.push(gi, gj, v * det);
                }
            }
        }
    }
    t.build()
}

/// L2 Gram matrix.
pub fn mass_matrix(space: &FESpace, set: DofSet) -> SparseMatrix {
    let nc = space.ncomp();
    assemble(space, set, 2 * space.family().max_poly_degree(), |tab, i, j, q| {
        (0..nc).map(|c| tab.value(i, q, c) * tab.value(j, q, c)).sum()
    })
}

/// Gram matrix of the full first-derivative tensor (`grad : grad`).
pub fn stiffness_matrix(space: &FESpace, set: DofSet) -> SparseMatrix {
    let nc = space.ncomp();
    assemble(space, set, 2 * space.family().max_poly_degree(), |tab, i, j, q| {
        (0..nc).map(|c| tab.grad(i, q, c, 0) * tab.grad(j, q, c, 0) + tab.grad(i, q, c, 1) * tab.grad(j, q, c, 1)).sum()
    })
}

/// H1 Gram matrix (mass plus stiffness).
pub fn h1_gram(space: &FESpace, set: DofSet) -> SparseMatrix {
    let nc = space.ncomp();
    assemble(space, set, 2 * space.family().max_poly_degree(), |tab, i, j, q| {
        (0..nc)
            .map(|c| {
                tab.value(i, q, c) * tab.value(j, q, c)
                    + tab.grad(i, q, c, 0) * tab.grad(j, q, c, 0)
                    + tab.grad(i, q, c, 1) * tab.grad(j, q, c, 1)
            })
            .sum()
    })
}

/// Integral of every basis function (scalar spaces), indexed by `set`.
pub fn basis_integrals(space: &FESpace, set: DofSet) -> Vec<f64> {
    let mut out = vec![0.0; size_of(space, set)];
    let rule = triangle_rule(space.family().max_poly_degree());
    let mesh = space.mesh();
    for k in 0..mesh.num_triangles() {
        let det = mesh.cell_geometry(k).det;
        let tab = space.tabulate(k, &rule.points);
        for (i, &d) in space.cell_dofs(k).iter().enumerate() {
            if let Some(g) = index_of(space, set, d) {
                out[g] += det * rule.weights.iter().enumerate().map(|(q, w)| w * tab.value(i, q, 0)).sum::<f64>();
            }
        }
    }
    out
}

/// Assembles `sum_K int_K kernel(row_tab, col_tab, i, j, q)` between two spaces on the same mesh.
pub fn coupling_matrix(
    rows: &FESpace,
    row_set: DofSet,
    cols: &FESpace,
    col_set: DofSet,
    degree: usize,
    kernel: impl Fn(&super::Tabulation, &super::Tabulation, usize, usize, usize) -> f64,
) -> SparseMatrix {
    assert!(std::sync::Arc::ptr_eq(rows.mesh(), cols.mesh()), "spaces live on different meshes");
    let mut t = TripletBuilder::new(size_of(rows, row_set), size_of(cols, col_set));
    let rule = triangle_rule(degree);
    let mesh = rows.mesh();
    for k in 0..mesh.num_triangles() {
        let det = mesh.cell_geometry(k).det;
        let tr = rows.tabulate(k, &rule.points);
        let tc = cols.tabulate(k, &rule.points);
        for (i, &di) in rows.cell_dofs(k).iter().enumerate() {
            let Some(gi) = index_of(rows, row_set, di) else { continue };
            for (j, &dj) in cols.cell_dofs(k).iter().enumerate() {
                let Some(gj) = index_of(cols, col_set, dj) else { continue };
                let v: f64 = rule.weights.iter().enumerate().map(|(q, w)| w * kernel(&tr, &tc, i, j, q)).sum();
                if v != 0.0 {
                    t.push(gi, gj, v * det);
                }
            }
        }
    }
    t.build()
}
