//! Triangulated polygonal domains with holes and tagged boundary edges.

mod io;
mod refine;
mod topology;

pub use io::{format_mesh, load_mesh, read_mesh_file};
pub use refine::{alfeld_split, refine_uniform, refine_uniform_times};
pub use topology::{boundary_topology, BoundaryTopology};

use std::collections::HashMap;

use crate::error::{PlateError, Result};

pub type Point = [f64; 2];

/// Boundary condition attached to a boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Clamped,
    SimplySupported,
    Free,
}

impl BoundaryTag {
    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "c" => Some(Self::Clamped),
            "s" => Some(Self::SimplySupported),
            "f" => Some(Self::Free),
            _ => None,
        }
    }

    pub fn code(self) -> char {
        match self {
            Self::Clamped => 'c',
            Self::SimplySupported => 's',
            Self::Free => 'f',
        }
    }

    pub fn is_free(self) -> bool {
        self == Self::Free
    }
}

/// A boundary edge oriented so that the domain lies on its left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
    /// Index into the global edge table.
    pub edge: usize,
}

/// A closed boundary loop traversed with the domain on the left.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    pub vertices: Vec<usize>,
    /// Indices into `Mesh::boundary_edges`, in traversal order.
    pub edges: Vec<usize>,
    pub signed_area: f64,
}

/// Affine map data of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub origin: Point,
    /// Columns are `x1 - x0` and `x2 - x0`.
    pub jac: [[f64; 2]; 2],
    pub inv_jac: [[f64; 2]; 2],
    pub det: f64,
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
}

impl CellGeometry {
    pub fn to_physical(&self, r: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [self.inv_jac[0][0] * d[0] + self.inv_jac[0][1] * d[1], self.inv_jac[1][0] * d[0] + self.inv_jac[1][1] * d[1]]
    }

    /// Maps a reference gradient to a physical one (`J^{-T} g`).
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [self.inv_jac[0][0] * g[0] + self.inv_jac[1][0] * g[1], self.inv_jac[0][1] * g[0] + self.inv_jac[1][1] * g[1]]
    }
}

/// Immutable triangulation with adjacency tables and classified boundary loops.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    tri_edges: Vec<[usize; 3]>,
    edge_tris: Vec<(usize, Option<usize>)>,
    boundary_edges: Vec<BoundaryEdge>,
    edge_boundary: Vec<Option<usize>>,
    loops: Vec<BoundaryLoop>,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn polygon_area(vertices: &[Point], cycle: &[usize]) -> f64 {
    let n = cycle.len();
    (0..n)
        .map(|i| {
            let p = vertices[cycle[i]];
            let q = vertices[cycle[(i + 1) % n]];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        * 0.5
}

fn point_in_polygon(p: Point, vertices: &[Point], cycle: &[usize]) -> bool {
    let n = cycle.len();
    let mut inside = false;
    for i in 0..n {
        let a = vertices[cycle[i]];
        let b = vertices[cycle[(i + 1) % n]];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_polygon_boundary(p: Point, vertices: &[Point], cycle: &[usize]) -> bool {
    let n = cycle.len();
    (0..n).any(|i| {
        let a = vertices[cycle[i]];
        let b = vertices[cycle[(i + 1) % n]];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let cross = signed_area(a, b, p).abs() * 2.0;
        let dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]);
        cross <= 1e-12 * len * len && dot >= 0.0 && dot <= len * len
    })
}

impl Mesh {
    /// Builds and validates a mesh. Boundary edges may be given in either orientation.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<([usize; 2], BoundaryTag)>,
    ) -> Result<Mesh> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(PlateError::Topology("mesh has no triangles".into()));
        }
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(PlateError::Topology(format!("triangle {k} references a vertex outside 0..{nv}")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(PlateError::Topology(format!("triangle {k} repeats a vertex")));
            }
            let a = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if a <= 0.0 {
                return Err(PlateError::Topology(format!(
                    "triangle {k} ({} {} {}) is not counterclockwise (signed area {a:e})",
                    t[0], t[1], t[2]
                )));
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        let mut edge_tris: Vec<(usize, Option<usize>)> = Vec::new();
        for (k, t) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for (j, slot) in te.iter_mut().enumerate() {
                let a = t[(j + 1) % 3];
                let b = t[(j + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_tris.push((k, None));
                    edges.len() - 1
                });
                if edge_tris[e].0 != k {
                    if edge_tris[e].1.is_some() {
                        return Err(PlateError::Topology(format!(
                            "edge ({} {}) is shared by more than two triangles",
                            key.0, key.1
                        )));
                    }
                    edge_tris[e].1 = Some(k);
                }
                *slot = e;
            }
            tri_edges.push(te);
        }

        let mut edge_boundary = vec![None; edges.len()];
        let mut boundary_edges = Vec::with_capacity(boundary.len());
        for ([a, b], tag) in boundary {
            let key = (a.min(b), a.max(b));
            let e = *edge_index.get(&key).ok_or_else(|| {
                PlateError::Topology(format!("dangling boundary edge ({a} {b}): not an edge of any triangle"))
            })?;
            if edge_tris[e].1.is_some() {
                return Err(PlateError::Topology(format!("dangling boundary edge ({a} {b}): edge is interior")));
            }
            if edge_boundary[e].is_some() {
                return Err(PlateError::Topology(format!("boundary edge ({a} {b}) listed twice")));
            }
            // Orient along the owning triangle's counterclockwise traversal.
            let t = triangles[edge_tris[e].0];
            let j = tri_edges[edge_tris[e].0].iter().position(|&x| x == e).unwrap();
            let oriented = [t[(j + 1) % 3], t[(j + 2) % 3]];
            edge_boundary[e] = Some(boundary_edges.len());
            boundary_edges.push(BoundaryEdge { vertices: oriented, tag, edge: e });
        }
        for (e, &(_, other)) in edge_tris.iter().enumerate() {
            if other.is_none() && edge_boundary[e].is_none() {
                return Err(PlateError::Topology(format!(
                    "boundary edge ({} {}) carries no tag",
                    edges[e][0], edges[e][1]
                )));
            }
        }
        if !boundary_edges.iter().any(|b| !b.tag.is_free()) {
            return Err(PlateError::Topology(
                "no clamped or simply supported edge: the union of c and s edges must be non-empty".into(),
            ));
        }

        let loops = Self::trace_loops(&vertices, &boundary_edges)?;

        let mesh = Mesh { vertices, triangles, edges, tri_edges, edge_tris, boundary_edges, edge_boundary, loops };
        mesh.check_holes_inside()?;
        Ok(mesh)
    }

    fn trace_loops(vertices: &[Point], bedges: &[BoundaryEdge]) -> Result<Vec<BoundaryLoop>> {
        let mut outgoing: HashMap<usize, usize> = HashMap::new();
        let mut incoming: HashMap<usize, usize> = HashMap::new();
        for (i, b) in bedges.iter().enumerate() {
            if outgoing.insert(b.vertices[0], i).is_some() {
                return Err(PlateError::Topology(format!(
                    "boundary is not a set of simple loops at vertex {}",
                    b.vertices[0]
                )));
            }
            incoming.insert(b.vertices[1], i);
        }
        for b in bedges {
            if !outgoing.contains_key(&b.vertices[1]) || !incoming.contains_key(&b.vertices[0]) {
                return Err(PlateError::Topology(format!("open boundary loop at vertex {}", b.vertices[1])));
            }
        }
        let mut visited = vec![false; bedges.len()];
        let mut loops = Vec::new();
        for start in 0..bedges.len() {
            if visited[start] {
                continue;
            }
            let mut vs = Vec::new();
            let mut es = Vec::new();
            let mut cur = start;
            while !visited[cur] {
                visited[cur] = true;
                vs.push(bedges[cur].vertices[0]);
                es.push(cur);
                cur = outgoing[&bedges[cur].vertices[1]];
            }
            if cur != start {
                return Err(PlateError::Topology(format!("open boundary loop at vertex {}", bedges[cur].vertices[0])));
            }
            let signed_area = polygon_area(vertices, &vs);
            loops.push(BoundaryLoop { vertices: vs, edges: es, signed_area });
        }
        let outer: Vec<usize> = (0..loops.len()).filter(|&i| loops[i].signed_area > 0.0).collect();
        if outer.len() != 1 {
            return Err(PlateError::Topology(format!(
                "expected exactly one counterclockwise outer loop, found {}",
                outer.len()
            )));
        }
        let outer_loop = loops.remove(outer[0]);
        loops.sort_by_key(|l| *l.vertices.iter().min().unwrap());
        loops.insert(0, outer_loop);
        Ok(loops)
    }

    fn check_holes_inside(&self) -> Result<()> {
        let outer = &self.loops[0].vertices;
        for (i, l) in self.loops.iter().enumerate().skip(1) {
            for &v in &l.vertices {
                let p = self.vertices[v];
                if !point_in_polygon(p, &self.vertices, outer) || on_polygon_boundary(p, &self.vertices, outer) {
                    return Err(PlateError::Topology(format!(
                        "vertex {v} of hole loop {i} is not strictly inside the outer loop"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Local edge `j` of a triangle is opposite its local vertex `j`.
    pub fn triangle_edges(&self, k: usize) -> [usize; 3] {
        self.tri_edges[k]
    }

    pub fn edge_triangles(&self, e: usize) -> (usize, Option<usize>) {
        self.edge_tris[e]
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Boundary record of a global edge, if it lies on the boundary.
    pub fn edge_boundary(&self, e: usize) -> Option<&BoundaryEdge> {
        self.edge_boundary[e].map(|i| &self.boundary_edges[i])
    }

    /// Loop 0 is the outer boundary; holes follow ordered by smallest vertex index.
    pub fn loops(&self) -> &[BoundaryLoop] {
        &self.loops
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_holes(&self) -> usize {
        self.loops.len() - 1
    }

    pub fn cell_geometry(&self, k: usize) -> CellGeometry {
        let [a, b, c] = self.triangles[k];
        let (p0, p1, p2) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let jac = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_jac = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        let dist = |p: Point, q: Point| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        CellGeometry {
            origin: p0,
            jac,
            inv_jac,
            det,
            area: 0.5 * det,
            centroid: [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0],
            diameter: dist(p0, p1).max(dist(p1, p2)).max(dist(p2, p0)),
        }
    }

    /// Largest element diameter.
    pub fn h(&self) -> f64 {
        (0..self.num_triangles()).map(|k| self.cell_geometry(k).diameter).fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        (0..self.num_triangles()).map(|k| self.cell_geometry(k).area).sum()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
    }

    /// Unit tangent of a global edge, pointing from its lower to its higher vertex index.
    pub fn edge_tangent(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let l = self.edge_length(e);
        [(q[0] - p[0]) / l, (q[1] - p[1]) / l]
    }

    /// Total length of free boundary.
    pub fn free_boundary_length(&self) -> f64 {
        self.boundary_edges.iter().filter(|b| b.tag.is_free()).map(|b| self.edge_length(b.edge)).sum()
    }

    /// Applies `f` to every vertex coordinate, keeping connectivity and tags.
    /// Fails if the map reverses orientation.
    pub fn map_vertices(&self, f: impl Fn(Point) -> Point) -> Result<Mesh> {
        let vertices = self.vertices.iter().map(|&p| f(p)).collect();
        let boundary = self.boundary_edges.iter().map(|b| (b.vertices, b.tag)).collect();
        Mesh::new(vertices, self.triangles.clone(), boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![([0, 1], BoundaryTag::Clamped), ([1, 2], BoundaryTag::Clamped), ([2, 0], BoundaryTag::Clamped)],
        )
        .unwrap()
    }

    #[test]
    fn reference_triangle_tables() {
        let m = single();
        assert_eq!(m.num_vertices(), 3);
        assert_eq!(m.num_edges(), 3);
        assert_eq!(m.boundary_edges().len(), 3);
        assert_eq!(m.num_holes(), 0);
        assert!((m.area() - 0.5).abs() < 1e-15);
        assert!((m.h() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn boundary_edges_are_reoriented() {
        let m = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![([1, 0], BoundaryTag::Clamped), ([2, 1], BoundaryTag::Free), ([0, 2], BoundaryTag::Free)],
        )
        .unwrap();
        let b = &m.boundary_edges()[0];
        assert_eq!(b.vertices, [0, 1]);
        assert!(m.loops()[0].signed_area > 0.0);
    }

    #[test]
    fn clockwise_triangle_is_named() {
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![([0, 1], BoundaryTag::Clamped), ([1, 2], BoundaryTag::Clamped), ([2, 0], BoundaryTag::Clamped)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("triangle 0"), "{err}");
    }

    #[test]
    fn untagged_and_dangling_edges_fail() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let untagged =
            Mesh::new(v.clone(), vec![[0, 1, 2]], vec![([0, 1], BoundaryTag::Clamped), ([1, 2], BoundaryTag::Clamped)]);
        assert!(matches!(untagged, Err(PlateError::Topology(_))));
        let dangling = Mesh::new(
            v,
            vec![[0, 1, 2]],
            vec![
                ([0, 1], BoundaryTag::Clamped),
                ([1, 2], BoundaryTag::Clamped),
                ([2, 0], BoundaryTag::Clamped),
                ([0, 3], BoundaryTag::Free),
            ],
        );
        assert!(matches!(dangling, Err(PlateError::Topology(_))));
    }

    #[test]
    fn all_free_boundary_is_rejected() {
        let r = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![([0, 1], BoundaryTag::Free), ([1, 2], BoundaryTag::Free), ([2, 0], BoundaryTag::Free)],
        );
        assert!(r.is_err());
    }

    #[test]
    fn geometry_maps_round_trip() {
        let m = Mesh::new(
            vec![[1.0, 1.0], [3.0, 1.5], [1.5, 4.0]],
            vec![[0, 1, 2]],
            vec![([0, 1], BoundaryTag::Clamped), ([1, 2], BoundaryTag::Free), ([2, 0], BoundaryTag::Free)],
        )
        .unwrap();
        let g = m.cell_geometry(0);
        let x = g.to_physical([0.2, 0.3]);
        let r = g.to_reference(x);
        assert!((r[0] - 0.2).abs() < 1e-14 && (r[1] - 0.3).abs() < 1e-14);
        assert_eq!(g.to_physical([1.0, 0.0]), [3.0, 1.5]);
    }
}
