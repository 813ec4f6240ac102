use std::collections::BTreeSet;

use super::Mesh;

/// Classification of the boundary into loops and tag components.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTopology {
    /// Vertex cycles, loop 0 outer, holes after; domain on the left.
    pub loops: Vec<Vec<usize>>,
    /// Maximal runs of clamped/simply supported edges (boundary-edge indices).
    pub cs_components: Vec<Vec<usize>>,
    /// Maximal runs of free edges (boundary-edge indices).
    pub free_components: Vec<Vec<usize>>,
    /// Loops carrying at least one free edge.
    pub index_set: Vec<usize>,
    /// `index_set` without its smallest entry.
    pub reduced_index_set: Vec<usize>,
}

impl BoundaryTopology {
    pub fn n_cs(&self) -> usize {
        self.cs_components.len()
    }

    pub fn n_f(&self) -> usize {
        self.free_components.len()
    }

    pub fn num_holes(&self) -> usize {
        self.loops.len() - 1
    }

    /// Dimension predicted for the discrete harmonic forms.
    pub fn harmonic_dimension(&self) -> usize {
        self.reduced_index_set.len() + self.n_cs() - 1
    }

    /// Vertices in the closure of cs-component `i`.
    pub fn cs_component_vertices(&self, mesh: &Mesh, i: usize) -> BTreeSet<usize> {
        self.cs_components[i].iter().flat_map(|&b| mesh.boundary_edges()[b].vertices).collect()
    }
}

fn format_set(s: &[usize]) -> String {
    let inner: Vec<String> = s.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

impl std::fmt::Display for BoundaryTopology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "H={} Ncs={} I={} I*={}",
            self.num_holes(),
            self.n_cs(),
            format_set(&self.index_set),
            format_set(&self.reduced_index_set)
        )
    }
}

/// Splits each loop into runs of equal free/non-free class.
pub fn boundary_topology(m: &Mesh) -> BoundaryTopology {
    let bedges = m.boundary_edges();
    let mut cs: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    let mut free: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    let mut index_set = Vec::new();

    for (li, l) in m.loops().iter().enumerate() {
        let n = l.edges.len();
        let class = |i: usize| bedges[l.edges[i % n]].tag.is_free();
        if (0..n).any(class) {
            index_set.push(li);
        }
        let start = (0..n).find(|&i| class(i) != class(i + n - 1)).unwrap_or(0);
        let mut runs: Vec<(bool, Vec<usize>)> = Vec::new();
        for off in 0..n {
            let i = (start + off) % n;
            match runs.last_mut() {
                Some((c, run)) if *c == class(i) => run.push(l.edges[i]),
                _ => runs.push((class(i), vec![l.edges[i]])),
            }
        }
        for (is_free, run) in runs {
            let key = run.iter().flat_map(|&b| bedges[b].vertices).min().unwrap();
            if is_free {
                free.push((li, key, run));
            } else {
                cs.push((li, key, run));
            }
        }
    }
    cs.sort_by_key(|c| (c.0, c.1));
    free.sort_by_key(|c| (c.0, c.1));
    let reduced_index_set = index_set.iter().skip(1).copied().collect();
    BoundaryTopology {
        loops: m.loops().iter().map(|l| l.vertices.clone()).collect(),
        cs_components: cs.into_iter().map(|c| c.2).collect(),
        free_components: free.into_iter().map(|c| c.2).collect(),
        index_set,
        reduced_index_set,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryTag, Mesh};

    fn square(tags: [BoundaryTag; 4]) -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![([0, 1], tags[0]), ([1, 2], tags[1]), ([2, 3], tags[2]), ([3, 0], tags[3])],
        )
        .unwrap()
    }

    #[test]
    fn fully_clamped_square_has_one_component() {
        use BoundaryTag::*;
        let t = boundary_topology(&square([Clamped; 4]));
        assert_eq!(t.n_cs(), 1);
        assert_eq!(t.n_f(), 0);
        assert!(t.index_set.is_empty());
        assert_eq!(t.harmonic_dimension(), 0);
    }

    #[test]
    fn alternating_tags_give_two_runs_each() {
        use BoundaryTag::*;
        let t = boundary_topology(&square([Clamped, Free, SimplySupported, Free]));
        assert_eq!((t.n_cs(), t.n_f()), (2, 2));
        assert_eq!(t.index_set, vec![0]);
        assert!(t.reduced_index_set.is_empty());
        assert_eq!(t.to_string(), "H=0 Ncs=2 I={0} I*={}");
    }

    #[test]
    fn wrapping_run_is_merged() {
        use BoundaryTag::*;
        let t = boundary_topology(&square([Clamped, Free, Free, Clamped]));
        assert_eq!((t.n_cs(), t.n_f()), (1, 1));
        assert_eq!(t.cs_components[0].len(), 2);
    }
}
