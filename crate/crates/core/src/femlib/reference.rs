//! Monomial utilities and nodal Lagrange bases on the reference triangle.

use std::sync::OnceLock;

use faer::Mat;

use crate::linalg::dense_inverse;

/// Exponents `(a, b)` of all monomials `x^a y^b` with `a + b <= degree`.
pub fn monomial_exponents(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Exponents of the homogeneous monomials of exact degree `degree`.
pub fn homogeneous_exponents(degree: usize) -> Vec<(usize, usize)> {
    (0..=degree).map(|b| (degree - b, b)).collect()
}

/// Value and gradient of `x^a y^b`.
#[inline]
pub fn monomial(a: usize, b: usize, x: f64, y: f64) -> (f64, [f64; 2]) {
    let (xa1, yb1) = (if a > 0 { x.powi(a as i32 - 1) } else { 0.0 }, if b > 0 { y.powi(b as i32 - 1) } else { 0.0 });
    let xa = if a > 0 { xa1 * x } else { 1.0 };
    let yb = if b > 0 { yb1 * y } else { 1.0 };
    (xa * yb, [a as f64 * xa1 * yb, b as f64 * xa * yb1])
}

/// Nodal Lagrange basis of degree `p` on equispaced nodes.
///
/// Node order: the three vertices, then the `p - 1` nodes of each edge (edge `k` is
/// opposite vertex `k` and runs from vertex `k + 1` to vertex `k + 2`), then interior nodes.
#[derive(Debug)]
pub struct ReferenceLagrange {
    pub degree: usize,
    pub nodes: Vec<[f64; 2]>,
    exps: Vec<(usize, usize)>,
    /// `coeffs[(m, j)]`: coefficient of monomial `m` in basis function `j`.
    coeffs: Mat<f64>,
}

const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

impl ReferenceLagrange {
    fn build(p: usize) -> Self {
        let nodes = Self::node_positions(p);
        let exps = monomial_exponents(p);
        let n = exps.len();
        assert_eq!(nodes.len(), n);
        let vand = Mat::from_fn(n, n, |i, m| monomial(exps[m].0, exps[m].1, nodes[i][0], nodes[i][1]).0);
        let coeffs = dense_inverse(&vand);
        Self { degree: p, nodes, exps, coeffs }
    }

    fn node_positions(p: usize) -> Vec<[f64; 2]> {
        if p == 0 {
            return vec![[1.0 / 3.0, 1.0 / 3.0]];
        }
        let mut nodes = REF_VERTICES.to_vec();
        let pf = p as f64;
        for k in 0..3 {
            let a = REF_VERTICES[(k + 1) % 3];
            let b = REF_VERTICES[(k + 2) % 3];
            for i in 1..p {
                let s = i as f64 / pf;
                nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        for j in 1..p {
            for i in 1..p {
                if i + j < p {
                    nodes.push([i as f64 / pf, j as f64 / pf]);
                }
            }
        }
        nodes
    }

    /// Cached basis for degree `p <= 10`.
    pub fn get(p: usize) -> &'static ReferenceLagrange {
        static CACHE: OnceLock<Vec<ReferenceLagrange>> = OnceLock::new();
        let all = CACHE.get_or_init(|| (0..=10).map(ReferenceLagrange::build).collect());
        &all[p]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_edge_nodes(&self) -> usize {
        self.degree.saturating_sub(1)
    }

    pub fn num_interior_nodes(&self) -> usize {
        let p = self.degree;
        if p < 3 {
            0
        } else {
            (p - 1) * (p - 2) / 2
        }
    }

    /// Values and reference gradients of all basis functions at `r`.
    pub fn eval(&self, r: [f64; 2], vals: &mut Vec<f64>, grads: &mut Vec<[f64; 2]>) {
        let n = self.exps.len();
        let mono: Vec<(f64, [f64; 2])> = self.exps.iter().map(|&(a, b)| monomial(a, b, r[0], r[1])).collect();
        vals.clear();
        grads.clear();
        for j in 0..n {
            let mut v = 0.0;
            let mut g = [0.0, 0.0];
            for (m, (mv, mg)) in mono.iter().enumerate() {
                let c = self.coeffs[(m, j)];
                v += c * mv;
                g[0] += c * mg[0];
                g[1] += c * mg[1];
            }
            vals.push(v);
            grads.push(g);
        }
    }
}

/// Interior bubbles `b * l1^a * l2^(p-2-a)`, `b = l0 l1 l2`, corrected to vanish at all
/// degree-`p` Lagrange nodes. Returns values and reference gradients.
pub fn enriched_bubbles(p: usize, r: [f64; 2], vals: &mut Vec<f64>, grads: &mut Vec<[f64; 2]>) {
    let raw = |r: [f64; 2]| -> Vec<(f64, [f64; 2])> {
        let l0 = 1.0 - r[0] - r[1];
        let (l1, l2) = (r[0], r[1]);
        (0..p - 1)
            .map(|a| {
                let e1 = a + 1;
                let e2 = p - 1 - a;
                let p1 = l1.powi(e1 as i32);
                let p2 = l2.powi(e2 as i32);
                let d1 = e1 as f64 * l1.powi(e1 as i32 - 1);
                let d2 = if e2 > 0 { e2 as f64 * l2.powi(e2 as i32 - 1) } else { 0.0 };
                let v = l0 * p1 * p2;
                let gx = -p1 * p2 + l0 * d1 * p2;
                let gy = -p1 * p2 + l0 * p1 * d2;
                (v, [gx, gy])
            })
            .collect()
    };
    let lag = ReferenceLagrange::get(p);
    let mut lv = Vec::new();
    let mut lg = Vec::new();
    lag.eval(r, &mut lv, &mut lg);
    let at_r = raw(r);
    vals.clear();
    grads.clear();
    for (k, (v, g)) in at_r.into_iter().enumerate() {
        let mut v = v;
        let mut g = g;
        for (n, node) in lag.nodes.iter().enumerate() {
            let bn = raw(*node)[k].0;
            if bn != 0.0 {
                v -= bn * lv[n];
                g[0] -= bn * lg[n][0];
                g[1] -= bn * lg[n][1];
            }
        }
        vals.push(v);
        grads.push(g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodal_property_and_partition_of_unity() {
        for p in 0..=6 {
            let l = ReferenceLagrange::get(p);
            assert_eq!(l.len(), (p + 1) * (p + 2) / 2);
            let (mut v, mut g) = (Vec::new(), Vec::new());
            for (i, node) in l.nodes.iter().enumerate() {
                l.eval(*node, &mut v, &mut g);
                for (j, vj) in v.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((vj - e).abs() < 1e-11, "p={p} i={i} j={j}");
                }
            }
            l.eval([0.21, 0.37], &mut v, &mut g);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let gs = g.iter().fold([0.0, 0.0], |s, x| [s[0] + x[0], s[1] + x[1]]);
            assert!(gs[0].abs() < 1e-10 && gs[1].abs() < 1e-10);
        }
    }

    #[test]
    fn bubbles_vanish_on_nodes_and_edges() {
        for p in 2..=4 {
            let (mut v, mut g) = (Vec::new(), Vec::new());
            for node in &ReferenceLagrange::get(p).nodes {
                enriched_bubbles(p, *node, &mut v, &mut g);
                assert!(v.iter().all(|x| x.abs() < 1e-12));
            }
            enriched_bubbles(p, [0.37, 0.0], &mut v, &mut g);
            assert!(v.iter().all(|x| x.abs() < 1e-12));
            enriched_bubbles(p, [0.3, 0.7], &mut v, &mut g);
            assert!(v.iter().all(|x| x.abs() < 1e-12));
            enriched_bubbles(p, [0.2, 0.3], &mut v, &mut g);
            assert_eq!(v.len(), p - 1);
            assert!(v.iter().any(|x| x.abs() > 1e-4));
        }
    }

    #[test]
    fn bubble_gradient_matches_finite_difference() {
        let (mut v0, mut g0, mut vp, mut gp) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let r = [0.23, 0.41];
        let h = 1e-6;
        enriched_bubbles(3, r, &mut v0, &mut g0);
        enriched_bubbles(3, [r[0] + h, r[1]], &mut vp, &mut gp);
        let fd: Vec<f64> = vp.iter().zip(&v0).map(|(a, b)| (a - b) / h).collect();
        for (k, d) in fd.iter().enumerate() {
            assert!((d - g0[k][0]).abs() < 1e-4);
        }
    }
}
