//! Gauss-Legendre rules on [-1, 1] and collapsed (Duffy) rules on the reference triangle.

use std::sync::OnceLock;

/// Rule on the reference triangle {(x, y): x, y >= 0, x + y <= 1}.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Legendre polynomials `L_0..=L_n` at `s`.
pub fn legendre_values(n: usize, s: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(1.0);
    if n >= 1 {
        v.push(s);
    }
    for k in 2..=n {
        let next = ((2 * k - 1) as f64 * s * v[k - 1] - (k - 1) as f64 * v[k - 2]) / k as f64;
        v.push(next);
    }
    v
}

/// Gauss-Legendre rule exact for polynomials of the given degree on [-1, 1].
pub fn line_rule(degree: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(degree / 2 + 1)
}

const MAX_DEGREE: usize = 48;

fn build_triangle(degree: usize) -> QuadratureRule {
    // The collapsed integrand has degree <= degree + 1 in the first variable.
    let n = (degree + 2).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            points.push([u, v * (1.0 - u)]);
            weights.push(0.25 * w[i] * w[j] * (1.0 - u));
        }
    }
    QuadratureRule { points, weights, degree }
}

/// Cached triangle rule exact for polynomials of total degree `degree`.
pub fn triangle_rule(degree: usize) -> &'static QuadratureRule {
    static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=MAX_DEGREE).map(build_triangle).collect());
    assert!(degree <= MAX_DEGREE, "quadrature degree {degree} exceeds {MAX_DEGREE}");
    &rules[degree]
}

#[cfg(test)]
mod tests {
    use super::*;

    // Exact integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn gauss_legendre_small_rules() {
        let (x, w) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert!(x[1].abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn line_rules_are_exact() {
        for d in 0..30 {
            let (x, w) = line_rule(d);
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
            let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
            assert!((got - exact).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn triangle_rules_are_exact_and_positive() {
        for d in 0..=24usize {
            let r = triangle_rule(d);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let got: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!((got - exact).abs() <= 1e-14 * exact.max(1e-300), "d={d} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn legendre_orthogonality() {
        let (x, w) = gauss_legendre(8);
        for m in 0..6 {
            for n in 0..6 {
                let s: f64 =
                    x.iter().zip(&w).map(|(&x, w)| w * legendre_values(6, x)[m] * legendre_values(6, x)[n]).sum();
                let expect = if m == n { 2.0 / (2 * m + 1) as f64 } else { 0.0 };
                assert!((s - expect).abs() < 1e-14);
            }
        }
    }
}
