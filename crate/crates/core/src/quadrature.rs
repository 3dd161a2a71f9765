//! Quadrature on the reference triangle `(0,0),(1,0),(0,1)` and on `[0,1]`.
//!
//! Triangle rules are conical (collapsed) products of Gauss-Legendre rules.
//! Every point is strictly interior to the triangle, which matters for the
//! piecewise loads that are discontinuous across mesh-aligned lines.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Highest exactness degree offered for triangle rules.
pub const MAX_TRIANGLE_DEGREE: usize = 12;

#[derive(Debug, Clone)]
pub struct QuadRule {
    /// Reference coordinates. For edge rules only the first component is used.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Legendre polynomial `P_n(z)` and its derivative.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree `deg`.
pub fn edge_rule(deg: usize) -> QuadRule {
    let n = (deg + 2) / 2;
    let n = n.max(1);
    let (x, w) = gauss_legendre(n);
    QuadRule {
        points: x.iter().map(|&t| [0.5 * (t + 1.0), 0.0]).collect(),
        weights: w.iter().map(|&wi| 0.5 * wi).collect(),
        degree: 2 * n - 1,
    }
}

/// Rule on the reference triangle exact for bivariate polynomials of total
/// degree `deg`; weights sum to `1/2`.
pub fn triangle_rule(deg: usize) -> Result<QuadRule> {
    if deg > MAX_TRIANGLE_DEGREE {
        return Err(Error::QuadratureDegree {
            requested: deg,
            max: MAX_TRIANGLE_DEGREE,
        });
    }
    // The collapsed map adds one degree in the first variable.
    let n = (deg + 3) / 2;
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&xu, &wu) in x.iter().zip(&w) {
        let u = 0.5 * (xu + 1.0);
        for (&xv, &wv) in x.iter().zip(&w) {
            let v = 0.5 * (xv + 1.0);
            points.push([u, v * (1.0 - u)]);
            weights.push(0.25 * wu * wv * (1.0 - u));
        }
    }
    Ok(QuadRule {
        points,
        weights,
        degree: deg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    /// Exact integral of `x^a y^b` over the reference triangle.
    fn monomial_integral(a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn triangle_basic_values() {
        let r = triangle_rule(2).unwrap();
        let s: f64 = r.weights.iter().sum();
        assert!((s - 0.5).abs() < 1e-15);
        let xy: f64 = r.iter().map(|(p, w)| w * p[0] * p[1]).sum();
        assert!((xy - 1.0 / 24.0).abs() < 1e-15);
        let r4 = triangle_rule(4).unwrap();
        let x2y2: f64 = r4.iter().map(|(p, w)| w * p[0].powi(2) * p[1].powi(2)).sum();
        assert!((x2y2 - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_exactness_sweep() {
        for deg in 0..=MAX_TRIANGLE_DEGREE {
            let r = triangle_rule(deg).unwrap();
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    let q: f64 = r
                        .iter()
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!(
                        ((q - exact) / exact).abs() < 1e-14,
                        "deg {deg} monomial ({a},{b}): {q} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_points_strictly_interior() {
        for deg in 0..=MAX_TRIANGLE_DEGREE {
            for (p, w) in triangle_rule(deg).unwrap().iter() {
                assert!(p[0] > 0.0 && p[1] > 0.0 && p[0] + p[1] < 1.0);
                assert!(w > 0.0);
            }
        }
    }

    #[test]
    fn triangle_degree_beyond_table() {
        assert!(matches!(
            triangle_rule(13),
            Err(Error::QuadratureDegree { requested: 13, .. })
        ));
    }

    #[test]
    fn edge_values() {
        let r = edge_rule(0);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let r3 = edge_rule(3);
        assert_eq!(r3.len(), 2);
        let t3: f64 = r3.iter().map(|(p, w)| w * p[0].powi(3)).sum();
        assert!((t3 - 0.25).abs() < 1e-15);
        let r7 = edge_rule(7);
        assert_eq!(r7.len(), 4);
        let t6: f64 = r7.iter().map(|(p, w)| w * p[0].powi(6)).sum();
        assert!((t6 - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn edge_exactness_sweep() {
        for deg in 0..=25 {
            let r = edge_rule(deg);
            assert!(r.degree >= deg);
            for a in 0..=deg {
                let q: f64 = r.iter().map(|(p, w)| w * p[0].powi(a as i32)).sum();
                let exact = 1.0 / (a as f64 + 1.0);
                assert!(((q - exact) / exact).abs() < 1e-14, "deg {deg} t^{a}");
            }
        }
    }
}
