use super::{Mesh, Point};

/// Red refinement: every triangle is split into four congruent children.
/// Edge `e` gets the new vertex `V + e`.
pub fn refine_uniform(m: &Mesh) -> Mesh {
    let nv = m.num_vertices();
    let mut vertices: Vec<Point> = m.vertices().to_vec();
    for &[a, b] in m.edges() {
        let (p, q) = (m.vertices()[a], m.vertices()[b]);
        vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
    }
    let mut triangles = Vec::with_capacity(4 * m.num_triangles());
    for (k, &[a, b, c]) in m.triangles().iter().enumerate() {
        let [ea, eb, ec] = m.triangle_edges(k);
        let (ma, mb, mc) = (nv + ea, nv + eb, nv + ec);
        triangles.push([a, mc, mb]);
        triangles.push([mc, b, ma]);
        triangles.push([mb, ma, c]);
        triangles.push([ma, mb, mc]);
    }
    let mut boundary = Vec::with_capacity(2 * m.boundary_edges().len());
    for be in m.boundary_edges() {
        let mid = nv + be.edge;
        boundary.push(([be.vertices[0], mid], be.tag));
        boundary.push(([mid, be.vertices[1]], be.tag));
    }
    Mesh::new(vertices, triangles, boundary).expect("refinement of a valid mesh is valid")
}

pub fn refine_uniform_times(m: &Mesh, times: usize) -> Mesh {
    let mut out = m.clone();
    for _ in 0..times {
        out = refine_uniform(&out);
    }
    out
}

/// Alfeld split: each triangle is joined to its barycenter, which becomes vertex `V + k`.
pub fn alfeld_split(m: &Mesh) -> Mesh {
    let nv = m.num_vertices();
    let mut vertices: Vec<Point> = m.vertices().to_vec();
    let mut triangles = Vec::with_capacity(3 * m.num_triangles());
    for (k, &[a, b, c]) in m.triangles().iter().enumerate() {
        let (p, q, r) = (m.vertices()[a], m.vertices()[b], m.vertices()[c]);
        vertices.push([(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]);
        let g = nv + k;
        triangles.push([a, b, g]);
        triangles.push([b, c, g]);
        triangles.push([c, a, g]);
    }
    let boundary = m.boundary_edges().iter().map(|b| (b.vertices, b.tag)).collect();
    Mesh::new(vertices, triangles, boundary).expect("Alfeld split of a valid mesh is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryTag;

    fn tri() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![([0, 1], BoundaryTag::Clamped), ([1, 2], BoundaryTag::Free), ([2, 0], BoundaryTag::SimplySupported)],
        )
        .unwrap()
    }

    #[test]
    fn red_refinement_counts() {
        let r = refine_uniform(&tri());
        assert_eq!((r.num_triangles(), r.num_vertices(), r.num_edges()), (4, 6, 9));
        assert_eq!(refine_uniform_times(&tri(), 3).num_triangles(), 64);
        assert!((r.area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tags_are_inherited() {
        let r = refine_uniform(&tri());
        let clamped = r.boundary_edges().iter().filter(|b| b.tag == BoundaryTag::Clamped).count();
        assert_eq!(clamped, 2);
    }

    #[test]
    fn alfeld_counts() {
        let a = alfeld_split(&tri());
        assert_eq!((a.num_triangles(), a.num_vertices()), (3, 4));
        assert_eq!(a.boundary_edges().len(), 3);
        assert_eq!(alfeld_split(&a).num_triangles(), 9);
    }
}
