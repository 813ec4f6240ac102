use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use super::hrot::{CellBasis, HrotElement, HrotKind};
use super::reference::{enriched_bubbles, ReferenceLagrange};
use crate::error::{PlateError, Result};
use crate::mesh::{BoundaryTag, Mesh};

/// Finite element family and polynomial degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    LagrangeScalar(usize),
    LagrangeVector(usize),
    /// Continuous `[P_p]^2` plus interior degree `p + 1` bubbles.
    BubbleEnrichedVector(usize),
    RaviartThomas(usize),
    BrezziDouglasMarini(usize),
    DiscontinuousScalar(usize),
}

impl Family {
    pub fn degree(self) -> usize {
        match self {
            Family::LagrangeScalar(p)
            | Family::LagrangeVector(p)
            | Family::BubbleEnrichedVector(p)
            | Family::RaviartThomas(p)
            | Family::BrezziDouglasMarini(p)
            | Family::DiscontinuousScalar(p) => p,
        }
    }

    pub fn ncomp(self) -> usize {
        match self {
            Family::LagrangeScalar(_) | Family::DiscontinuousScalar(_) => 1,
            _ => 2,
        }
    }

    /// Highest total polynomial degree of a basis function.
    pub fn max_poly_degree(self) -> usize {
        match self {
            Family::BubbleEnrichedVector(p) => p + 1,
            f => f.degree(),
        }
    }

    pub fn is_hrot(self) -> bool {
        matches!(self, Family::RaviartThomas(_) | Family::BrezziDouglasMarini(_))
    }

    fn validate(self) -> Result<()> {
        let p = self.degree();
        let err = |reason: &str| {
            Err(PlateError::DegreeOutOfRange { family: format!("{self:?}"), degree: p, reason: reason.into() })
        };
        match self {
            Family::DiscontinuousScalar(p) if p > 8 => err("degree must be at most 8"),
            Family::DiscontinuousScalar(_) => Ok(()),
            Family::BubbleEnrichedVector(p) if p < 2 => err("bubble enrichment needs p >= 2"),
            _ if p == 0 => err("degree must be at least 1"),
            _ if p > 8 => err("degree must be at most 8"),
            _ => Ok(()),
        }
    }
}

/// Boundary constraint selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bc {
    /// No essential constraints.
    Natural,
    /// The family's natural essential conditions on clamped and simply supported edges
    /// (and mean-zero for discontinuous spaces when there is no free boundary).
    Essential,
}

/// Geometric owner of a degree of freedom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofLocation {
    Vertex(usize),
    /// Global edge and position along it.
    Edge(usize, usize),
    /// Cell and local interior index.
    Interior(usize, usize),
}

/// Values and physical derivatives of all local basis functions at a set of points.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub n_basis: usize,
    pub n_points: usize,
    pub ncomp: usize,
    values: Vec<f64>,
    grads: Vec<f64>,
}

impl Tabulation {
    fn new(n_basis: usize, n_points: usize, ncomp: usize) -> Self {
        Self {
            n_basis,
            n_points,
            ncomp,
            values: vec![0.0; n_basis * n_points * ncomp],
            grads: vec![0.0; n_basis * n_points * ncomp * 2],
        }
    }

    #[inline]
    pub fn value(&self, j: usize, q: usize, c: usize) -> f64 {
        self.values[(j * self.n_points + q) * self.ncomp + c]
    }

    /// Derivative of component `c` in direction `d`.
    #[inline]
    pub fn grad(&self, j: usize, q: usize, c: usize, d: usize) -> f64 {
        self.grads[((j * self.n_points + q) * self.ncomp + c) * 2 + d]
    }

    #[inline]
    pub fn vector(&self, j: usize, q: usize) -> [f64; 2] {
        [self.value(j, q, 0), self.value(j, q, 1)]
    }

    #[inline]
    pub fn jacobian(&self, j: usize, q: usize) -> [[f64; 2]; 2] {
        [[self.grad(j, q, 0, 0), self.grad(j, q, 0, 1)], [self.grad(j, q, 1, 0), self.grad(j, q, 1, 1)]]
    }

    #[inline]
    pub fn scalar_grad(&self, j: usize, q: usize) -> [f64; 2] {
        [self.grad(j, q, 0, 0), self.grad(j, q, 0, 1)]
    }

    #[inline]
    pub fn rot(&self, j: usize, q: usize) -> f64 {
        self.grad(j, q, 1, 0) - self.grad(j, q, 0, 1)
    }

    #[inline]
    fn set(&mut self, j: usize, q: usize, c: usize, v: f64, g: [f64; 2]) {
        let i = (j * self.n_points + q) * self.ncomp + c;
        self.values[i] = v;
        self.grads[2 * i] = g[0];
        self.grads[2 * i + 1] = g[1];
    }
}

/// Reference values and gradients of the scalar Lagrange basis (plus `nb` enriched
/// bubbles) at a point set, point-major.
struct ReferenceTable {
    points: Vec<[f64; 2]>,
    n: usize,
    vals: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

type TableCache = HashMap<(usize, usize), Vec<Rc<ReferenceTable>>>;

thread_local! {
    static REFERENCE_TABLES: RefCell<TableCache> = RefCell::new(HashMap::new());
}

/// Quadrature point sets are few and reused for every cell, so tables are cached by content.
fn reference_table(p: usize, nb: usize, points: &[[f64; 2]]) -> Rc<ReferenceTable> {
    REFERENCE_TABLES.with(|cell| {
        let mut map = cell.borrow_mut();
        let list = map.entry((p, nb)).or_default();
        if let Some(t) = list.iter().find(|t| t.points == points) {
            return t.clone();
        }
        let lag = ReferenceLagrange::get(p);
        let (mut v, mut gr) = (Vec::new(), Vec::new());
        let (mut bv, mut bg) = (Vec::new(), Vec::new());
        let mut vals = Vec::new();
        let mut grads = Vec::new();
        for r in points {
            lag.eval(*r, &mut v, &mut gr);
            vals.extend_from_slice(&v);
            grads.extend_from_slice(&gr);
            if nb > 0 {
                enriched_bubbles(p, *r, &mut bv, &mut bg);
                vals.extend_from_slice(&bv);
                grads.extend_from_slice(&bg);
            }
        }
        let t = Rc::new(ReferenceTable { points: points.to_vec(), n: lag.len() + nb, vals, grads });
        if list.len() >= 32 {
            list.remove(0);
        }
        list.push(t.clone());
        t
    })
}

/// A global finite element space with its degree-of-freedom maps and constraints.
#[derive(Debug)]
pub struct FESpace {
    mesh: Arc<Mesh>,
    family: Family,
    bc: Bc,
    ndofs: usize,
    cell_dofs: Vec<Vec<usize>>,
    locations: Vec<DofLocation>,
    dof_dirs: Vec<[f64; 2]>,
    constrained: Vec<bool>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    mean_zero: bool,
    hrot: Option<(HrotElement, Vec<CellBasis>)>,
}

impl FESpace {
    pub fn new(mesh: Arc<Mesh>, family: Family, bc: Bc) -> Result<Arc<FESpace>> {
        family.validate()?;
        let mut s = match family {
            Family::LagrangeScalar(p) => Self::lagrange(mesh, family, p, 1, 0),
            Family::LagrangeVector(p) => Self::lagrange(mesh, family, p, 2, 0),
            Family::BubbleEnrichedVector(p) => Self::lagrange(mesh, family, p, 2, p - 1),
            Family::DiscontinuousScalar(p) => Self::discontinuous(mesh, family, p),
            Family::RaviartThomas(p) => Self::hrot(mesh, family, HrotKind::RaviartThomas, p),
            Family::BrezziDouglasMarini(p) => Self::hrot(mesh, family, HrotKind::Bdm, p),
        };
        s.bc = bc;
        if bc == Bc::Essential {
            s.apply_essential();
        }
        s.rebuild_free();
        Ok(Arc::new(s))
    }

    fn empty(mesh: Arc<Mesh>, family: Family) -> Self {
        Self {
            mesh,
            family,
            bc: Bc::Natural,
            ndofs: 0,
            cell_dofs: Vec::new(),
            locations: Vec::new(),
            dof_dirs: Vec::new(),
            constrained: Vec::new(),
            free_index: Vec::new(),
            free_dofs: Vec::new(),
            mean_zero: false,
            hrot: None,
        }
    }

    fn lagrange(mesh: Arc<Mesh>, family: Family, p: usize, ncomp: usize, nbubbles: usize) -> Self {
        let lag = ReferenceLagrange::get(p);
        let (nv, ne, nt) = (mesh.num_vertices(), mesh.num_edges(), mesh.num_triangles());
        let npe = lag.num_edge_nodes();
        let npi = lag.num_interior_nodes();
        let nnodes = nv + ne * npe + nt * npi;
        let mut locations = Vec::with_capacity(nnodes);
        locations.extend((0..nv).map(DofLocation::Vertex));
        for e in 0..ne {
            locations.extend((0..npe).map(|i| DofLocation::Edge(e, i)));
        }
        for k in 0..nt {
            locations.extend((0..npi).map(|i| DofLocation::Interior(k, i)));
        }
        let mut cell_dofs = Vec::with_capacity(nt);
        for k in 0..nt {
            let tri = mesh.triangles()[k];
            let edges = mesh.triangle_edges(k);
            let mut nodes = Vec::with_capacity(lag.len());
            nodes.extend_from_slice(&tri);
            for (j, &e) in edges.iter().enumerate() {
                let forward = tri[(j + 1) % 3] < tri[(j + 2) % 3];
                for i in 0..npe {
                    let pos = if forward { i } else { npe - 1 - i };
                    nodes.push(nv + e * npe + pos);
                }
            }
            for i in 0..npi {
                nodes.push(nv + ne * npe + k * npi + i);
            }
            let mut dofs: Vec<usize> = nodes.iter().flat_map(|&n| (0..ncomp).map(move |c| ncomp * n + c)).collect();
            for b in 0..nbubbles {
                for c in 0..ncomp {
                    dofs.push(ncomp * nnodes + (k * nbubbles + b) * ncomp + c);
                }
            }
            cell_dofs.push(dofs);
        }
        let mut dof_locations = Vec::new();
        for loc in &locations {
            for _ in 0..ncomp {
                dof_locations.push(*loc);
            }
        }
        for k in 0..nt {
            for b in 0..nbubbles {
                for _ in 0..ncomp {
                    dof_locations.push(DofLocation::Interior(k, npi + b));
                }
            }
        }
        let ndofs = dof_locations.len();
        let dof_dirs = if ncomp == 2 {
            (0..ndofs).map(|d| if d % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] }).collect()
        } else {
            Vec::new()
        };
        Self { ndofs, cell_dofs, locations: dof_locations, dof_dirs, ..Self::empty(mesh, family) }
    }

    fn discontinuous(mesh: Arc<Mesh>, family: Family, p: usize) -> Self {
        let nloc = (p + 1) * (p + 2) / 2;
        let nt = mesh.num_triangles();
        let cell_dofs = (0..nt).map(|k| (k * nloc..(k + 1) * nloc).collect()).collect();
        let locations = (0..nt).flat_map(|k| (0..nloc).map(move |i| DofLocation::Interior(k, i))).collect();
        Self { ndofs: nt * nloc, cell_dofs, locations, ..Self::empty(mesh, family) }
    }

    fn hrot(mesh: Arc<Mesh>, family: Family, kind: HrotKind, p: usize) -> Self {
        let el = HrotElement::new(kind, p);
        let (ne, nt) = (mesh.num_edges(), mesh.num_triangles());
        let nde = el.edge_dofs();
        let ndi = el.interior_dofs();
        let mut cell_dofs = Vec::with_capacity(nt);
        for k in 0..nt {
            let mut dofs = Vec::with_capacity(el.local_dim());
            for &e in &mesh.triangle_edges(k) {
                dofs.extend((0..nde).map(|m| e * nde + m));
            }
            dofs.extend((0..ndi).map(|i| ne * nde + k * ndi + i));
            cell_dofs.push(dofs);
        }
        let mut locations = Vec::with_capacity(ne * nde + nt * ndi);
        for e in 0..ne {
            locations.extend((0..nde).map(|m| DofLocation::Edge(e, m)));
        }
        for k in 0..nt {
            locations.extend((0..ndi).map(|i| DofLocation::Interior(k, i)));
        }
        let bases = (0..nt).map(|k| el.cell_basis(&mesh, k)).collect();
        Self { ndofs: locations.len(), cell_dofs, locations, hrot: Some((el, bases)), ..Self::empty(mesh, family) }
    }

    fn apply_essential(&mut self) {
        let mesh = self.mesh.clone();
        self.constrained = vec![false; self.ndofs];
        match self.family {
            Family::DiscontinuousScalar(_) => {
                self.mean_zero = mesh.boundary_edges().iter().all(|b| !b.tag.is_free());
            }
            Family::RaviartThomas(_) | Family::BrezziDouglasMarini(_) => {
                for (d, loc) in self.locations.iter().enumerate() {
                    if let DofLocation::Edge(e, _) = *loc {
                        if mesh.edge_boundary(e).is_some_and(|b| !b.tag.is_free()) {
                            self.constrained[d] = true;
                        }
                    }
                }
            }
            Family::LagrangeScalar(_) => {
                let mut on_cs = vec![false; mesh.num_vertices()];
                for b in mesh.boundary_edges().iter().filter(|b| !b.tag.is_free()) {
                    on_cs[b.vertices[0]] = true;
                    on_cs[b.vertices[1]] = true;
                }
                for (d, loc) in self.locations.iter().enumerate() {
                    self.constrained[d] = match *loc {
                        DofLocation::Vertex(v) => on_cs[v],
                        DofLocation::Edge(e, _) => mesh.edge_boundary(e).is_some_and(|b| !b.tag.is_free()),
                        DofLocation::Interior(..) => false,
                    };
                }
            }
            Family::LagrangeVector(_) | Family::BubbleEnrichedVector(_) => {
                self.apply_vector_essential(&mesh);
            }
        }
    }

    /// Clamped: both components fixed. Simply supported: the tangential component is
    /// fixed through a rotated (tangent, normal) dof pair.
    fn apply_vector_essential(&mut self, mesh: &Mesh) {
        enum Rule {
            Full,
            Tangent([f64; 2]),
        }
        let rule_for = |tags: &[(BoundaryTag, [f64; 2])]| -> Option<Rule> {
            if tags.iter().any(|(t, _)| *t == BoundaryTag::Clamped) {
                return Some(Rule::Full);
            }
            let ss: Vec<[f64; 2]> =
                tags.iter().filter(|(t, _)| *t == BoundaryTag::SimplySupported).map(|(_, t)| *t).collect();
            let first = *ss.first()?;
            if ss.iter().any(|t| (first[0] * t[1] - first[1] * t[0]).abs() > 1e-12) {
                Some(Rule::Full)
            } else {
                Some(Rule::Tangent(first))
            }
        };
        let mut vertex_tags: HashMap<usize, Vec<(BoundaryTag, [f64; 2])>> = HashMap::new();
        for b in mesh.boundary_edges() {
            let t = mesh.edge_tangent(b.edge);
            for v in b.vertices {
                vertex_tags.entry(v).or_default().push((b.tag, t));
            }
        }
        for d in (0..self.ndofs).step_by(2) {
            let tags = match self.locations[d] {
                DofLocation::Vertex(v) => vertex_tags.get(&v).cloned().unwrap_or_default(),
                DofLocation::Edge(e, _) => {
                    mesh.edge_boundary(e).map(|b| vec![(b.tag, mesh.edge_tangent(e))]).unwrap_or_default()
                }
                DofLocation::Interior(..) => Vec::new(),
            };
            match rule_for(&tags) {
                Some(Rule::Full) => {
                    self.constrained[d] = true;
                    self.constrained[d + 1] = true;
                }
                Some(Rule::Tangent(t)) => {
                    self.dof_dirs[d] = t;
                    self.dof_dirs[d + 1] = [-t[1], t[0]];
                    self.constrained[d] = true;
                }
                None => {}
            }
        }
    }

    fn rebuild_free(&mut self) {
        if self.constrained.len() != self.ndofs {
            self.constrained = vec![false; self.ndofs];
        }
        self.free_index = vec![None; self.ndofs];
        self.free_dofs.clear();
        for d in 0..self.ndofs {
            if !self.constrained[d] {
                self.free_index[d] = Some(self.free_dofs.len());
                self.free_dofs.push(d);
            }
        }
    }

    /// Copy of this space with one extra eliminated dof (used for negative controls).
    pub fn with_extra_constraint(&self, dof: usize) -> Arc<FESpace> {
        let mut s = FESpace {
            mesh: self.mesh.clone(),
            family: self.family,
            bc: self.bc,
            ndofs: self.ndofs,
            cell_dofs: self.cell_dofs.clone(),
            locations: self.locations.clone(),
            dof_dirs: self.dof_dirs.clone(),
            constrained: self.constrained.clone(),
            free_index: Vec::new(),
            free_dofs: Vec::new(),
            mean_zero: self.mean_zero,
            hrot: self.hrot.clone(),
        };
        s.constrained[dof] = true;
        s.rebuild_free();
        Arc::new(s)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn bc(&self) -> Bc {
        self.bc
    }

    pub fn ncomp(&self) -> usize {
        self.family.ncomp()
    }

    /// Number of dofs before constraints.
    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    /// Number of dofs after elimination (the mean-zero condition is not subtracted).
    pub fn nfree(&self) -> usize {
        self.free_dofs.len()
    }

    /// Dimension of the constrained space.
    pub fn dim(&self) -> usize {
        self.nfree() - usize::from(self.mean_zero && self.nfree() > 0)
    }

    pub fn cell_dofs(&self, k: usize) -> &[usize] {
        &self.cell_dofs[k]
    }

    pub fn location(&self, d: usize) -> DofLocation {
        self.locations[d]
    }

    pub fn is_constrained(&self, d: usize) -> bool {
        self.constrained[d]
    }

    pub fn free_index(&self, d: usize) -> Option<usize> {
        self.free_index[d]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// Direction carried by a vector Lagrange dof.
    pub fn dof_direction(&self, d: usize) -> Option<[f64; 2]> {
        self.dof_dirs.get(d).copied()
    }

    pub fn hrot_element(&self) -> Option<&HrotElement> {
        self.hrot.as_ref().map(|h| &h.0)
    }

    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.nfree());
        let mut full = vec![0.0; self.ndofs];
        for (i, &d) in self.free_dofs.iter().enumerate() {
            full[d] = free[i];
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }

    /// Tabulates all local basis functions of cell `k` at reference points.
    pub fn tabulate(&self, k: usize, points: &[[f64; 2]]) -> Tabulation {
        let g = self.mesh.cell_geometry(k);
        let nloc = self.cell_dofs[k].len();
        let ncomp = self.ncomp();
        let mut tab = Tabulation::new(nloc, points.len(), ncomp);
        match self.family {
            Family::LagrangeScalar(p) | Family::DiscontinuousScalar(p) => {
                let rt = reference_table(p, 0, points);
                for q in 0..points.len() {
                    for j in 0..nloc {
                        let i = q * rt.n + j;
                        tab.set(j, q, 0, rt.vals[i], g.push_gradient(rt.grads[i]));
                    }
                }
            }
            Family::LagrangeVector(p) | Family::BubbleEnrichedVector(p) => {
                let nb = if matches!(self.family, Family::BubbleEnrichedVector(_)) { p - 1 } else { 0 };
                let dofs = &self.cell_dofs[k];
                let rt = reference_table(p, nb, points);
                for q in 0..points.len() {
                    let v = &rt.vals[q * rt.n..(q + 1) * rt.n];
                    let gr = &rt.grads[q * rt.n..(q + 1) * rt.n];
                    for (s, (&sv, &sg)) in v.iter().zip(gr.iter()).enumerate() {
                        let pg = g.push_gradient(sg);
                        for c in 0..2 {
                            let j = 2 * s + c;
                            let dir = self.dof_dirs[dofs[j]];
                            for (comp, &dc) in dir.iter().enumerate() {
                                tab.set(j, q, comp, dc * sv, [dc * pg[0], dc * pg[1]]);
                            }
                        }
                    }
                }
            }
            Family::RaviartThomas(_) | Family::BrezziDouglasMarini(_) => {
                let (el, bases) = self.hrot.as_ref().unwrap();
                let (mut v, mut d) = (Vec::new(), Vec::new());
                for (q, r) in points.iter().enumerate() {
                    el.eval_basis(&bases[k], g.to_physical(*r), &mut v, &mut d);
                    for j in 0..nloc {
                        for comp in 0..2 {
                            tab.set(j, q, comp, v[j][comp], d[j][comp]);
                        }
                    }
                }
            }
        }
        tab
    }

    /// Positions of the nodal dofs of a Lagrange-type space, indexed by scalar node.
    pub(crate) fn lagrange_node_positions(&self, k: usize) -> Vec<[f64; 2]> {
        ReferenceLagrange::get(self.family.degree())
            .nodes
            .clone()
            .into_iter()
            .map(|r| self.mesh.cell_geometry(k).to_physical(r))
            .collect()
    }
}
