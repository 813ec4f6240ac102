//! Structural invariants checked over randomized inputs.

use approx::assert_relative_eq;
use proptest::prelude::*;

use plate_fem::diagnostics::{circulation, operator_residuals, COMMUTING_TOL, EDGE_MOMENT_TOL, IDEMPOTENCY_TOL};
use plate_fem::femlib::{triangle_rule, DiscreteField};
use plate_fem::mesh::{alfeld_split, boundary_topology, refine_uniform_times, Mesh};
use plate_fem::meshes;
use plate_fem::system::{Discretization, Scheme};

fn bundled(i: usize) -> Mesh {
    [meshes::square_clamped, meshes::annulus_clamped, meshes::holey, meshes::fig1][i]()
}

fn monomial_integral(a: u32, b: u32) -> f64 {
    let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
    f(a) * f(b) / f(a + b + 2)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn triangle_rules_integrate_monomials(a in 0u32..12, b in 0u32..12, extra in 0usize..4) {
        let rule = triangle_rule((a + b) as usize + extra);
        let q: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
        assert_relative_eq!(q, monomial_integral(a, b), max_relative = 1e-12);
        prop_assert!(rule.weights.iter().all(|&w| w > 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn refinement_counts_and_topology(which in 0usize..4, times in 0usize..3) {
        let m = bundled(which);
        let f = refine_uniform_times(&m, times);
        let s = 4usize.pow(times as u32);
        prop_assert_eq!(f.num_triangles(), s * m.num_triangles());
        // Euler: V - E + T = 1 - holes on every level.
        let euler = |x: &Mesh| x.num_vertices() as i64 - x.num_edges() as i64 + x.num_triangles() as i64;
        prop_assert_eq!(euler(&f), euler(&m));
        prop_assert_eq!(euler(&m), 1 - m.num_holes() as i64);
        assert_relative_eq!(f.area(), m.area(), max_relative = 1e-12);
        let (a, b) = (boundary_topology(&m), boundary_topology(&f));
        prop_assert_eq!(&a.index_set, &b.index_set);
        prop_assert_eq!(a.n_cs(), b.n_cs());
        prop_assert_eq!(a.n_f(), b.n_f());
    }

    #[test]
    fn alfeld_split_counts(which in 0usize..4) {
        let m = bundled(which);
        let a = alfeld_split(&m);
        prop_assert_eq!(a.num_triangles(), 3 * m.num_triangles());
        prop_assert_eq!(a.num_vertices(), m.num_vertices() + m.num_triangles());
        prop_assert_eq!(a.num_edges(), m.num_edges() + 3 * m.num_triangles());
        prop_assert_eq!(boundary_topology(&a).harmonic_dimension(), boundary_topology(&m).harmonic_dimension());
    }

    #[test]
    fn topology_is_invariant_under_similarities(
        which in 0usize..4,
        angle in 0.0f64..std::f64::consts::TAU,
        scale in 0.1f64..10.0,
        shift in prop::array::uniform2(-5.0f64..5.0),
    ) {
        let m = bundled(which);
        let (c, s) = (angle.cos(), angle.sin());
        let moved = m.map_vertices(|x| [scale * (c * x[0] - s * x[1]) + shift[0], scale * (s * x[0] + c * x[1]) + shift[1]]).unwrap();
        prop_assert_eq!(boundary_topology(&moved), boundary_topology(&m));
        assert_relative_eq!(moved.area(), scale * scale * m.area(), max_relative = 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn reduction_residuals_hold_for_any_seed(seed in any::<u64>(), bdm in any::<bool>()) {
        let d = Discretization::new(&meshes::holey(), Scheme::parse(if bdm { "bdm" } else { "rt" }, 2).unwrap()).unwrap();
        let r = operator_residuals(&d.r, &d.q, 5, seed).unwrap();
        prop_assert!(r.commuting <= COMMUTING_TOL, "{:?}", r);
        prop_assert!(r.edge_moment <= EDGE_MOMENT_TOL, "{:?}", r);
        prop_assert!(r.idempotency <= IDEMPOTENCY_TOL, "{:?}", r);
    }

    #[test]
    fn gradients_have_no_circulation(coeffs in prop::collection::vec(-1.0f64..1.0, 1000), which in 2usize..4) {
        let mesh = bundled(which);
        let d = Discretization::new(&mesh, Scheme::RtMitc(2)).unwrap();
        let free: Vec<f64> = (0..d.w.nfree()).map(|i| coeffs[i % coeffs.len()]).collect();
        let w = DiscreteField::from_free(d.w.clone(), &free);
        let g = DiscreteField::new(d.u.clone(), d.grad.matvec(w.coeffs()));
        let scale = g.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        for i in 0..mesh.loops().len() {
            prop_assert!(circulation(&g, i).abs() <= 1e-11 * scale.max(1.0), "loop {}", i);
        }
    }
}
