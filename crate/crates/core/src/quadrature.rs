//! Gauss quadrature on the reference segment and the reference triangle.
//!
//! Segment rules are Gauss–Legendre on [0, 1]. Triangle rules are conical
//! products of two segment rules with the collapse Jacobian folded into the
//! weights, so a rule of declared degree `d` integrates every bivariate
//! polynomial of total degree ≤ d exactly on the reference triangle
//! (0,0)-(1,0)-(0,1).

use crate::geo::{self, Pt};

/// Gauss–Legendre rule on the reference segment [0, 1].
#[derive(Debug, Clone)]
pub struct SegmentRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SegmentRule {
    /// n-point rule; exact for polynomials of degree ≤ 2n − 1.
    pub fn with_points(n: usize) -> Self {
        assert!(n >= 1, "segment rule needs at least one point");
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Newton iteration on P_n over [-1, 1], Chebyshev initial guess.
            let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points.push(0.5 * (x + 1.0));
            weights.push(0.5 * w);
        }
        SegmentRule { points, weights }
    }

    /// Smallest rule exact for polynomials of degree ≤ `degree`.
    pub fn of_degree(degree: usize) -> Self {
        Self::with_points(degree / 2 + 1)
    }

    /// Integrate `f` over the physical segment from `a` to `b`.
    pub fn integrate(&self, a: Pt, b: Pt, mut f: impl FnMut(Pt) -> f64) -> f64 {
        let len = geo::dist(a, b);
        let mut sum = 0.0;
        for (&t, &w) in self.points.iter().zip(&self.weights) {
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            sum += w * f(p);
        }
        sum * len
    }
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on the reference triangle (0,0)-(1,0)-(0,1).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<Pt>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Rule exact for total degree ≤ `degree`.
    pub fn of_degree(degree: usize) -> Self {
        // x = ξ, y = η(1−ξ): the Jacobian (1−ξ) raises the ξ-degree by one.
        let nx = (degree + 2) / 2 + 1;
        let ny = degree / 2 + 1;
        let gx = SegmentRule::with_points(nx.max(1));
        let gy = SegmentRule::with_points(ny.max(1));
        let mut points = Vec::with_capacity(nx * ny);
        let mut weights = Vec::with_capacity(nx * ny);
        for (&xi, &wx) in gx.points.iter().zip(&gx.weights) {
            for (&eta, &wy) in gy.points.iter().zip(&gy.weights) {
                points.push([xi, eta * (1.0 - xi)]);
                weights.push(wx * wy * (1.0 - xi));
            }
        }
        TriangleRule { points, weights, degree }
    }

    /// Integrate `f(x)` over the physical triangle (a, b, c).
    pub fn integrate(&self, a: Pt, b: Pt, c: Pt, mut f: impl FnMut(Pt) -> f64) -> f64 {
        let m = geo::AffineMap::new(a, b, c);
        let jac = m.det.abs();
        let mut sum = 0.0;
        for (&r, &w) in self.points.iter().zip(&self.weights) {
            sum += w * f(m.to_physical(r));
        }
        sum * jac
    }

    /// Integrate `f` over the triangle after `levels` rounds of uniform
    /// midpoint subdivision (4^levels congruent subtriangles). Used near
    /// flagged singular points where the integrand is not smooth.
    pub fn integrate_subdivided(
        &self,
        a: Pt,
        b: Pt,
        c: Pt,
        levels: usize,
        f: &mut impl FnMut(Pt) -> f64,
    ) -> f64 {
        if levels == 0 {
            return self.integrate(a, b, c, f);
        }
        let ab = geo::midpoint(a, b);
        let bc = geo::midpoint(b, c);
        let ca = geo::midpoint(c, a);
        self.integrate_subdivided(a, ab, ca, levels - 1, f)
            + self.integrate_subdivided(ab, b, bc, levels - 1, f)
            + self.integrate_subdivided(ca, bc, c, levels - 1, f)
            + self.integrate_subdivided(ab, bc, ca, levels - 1, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫ x^p y^q over the reference triangle = p! q! / (p+q+2)!.
    fn monomial_integral(p: u32, q: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
        fact(p) * fact(q) / fact(p + q + 2)
    }

    #[test]
    fn segment_weights_positive_and_sum_to_one() {
        for n in 1..=12 {
            let r = SegmentRule::with_points(n);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            let total: f64 = r.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-13, "n={n}: {total}");
        }
    }

    #[test]
    fn segment_monomial_exactness() {
        for n in 1..=12 {
            let r = SegmentRule::with_points(n);
            for d in 0..=(2 * n - 1) {
                let val: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(&x, &w)| w * x.powi(d as i32))
                    .sum();
                let exact = 1.0 / (d as f64 + 1.0);
                assert!(
                    (val - exact).abs() < 1e-12,
                    "n={n} d={d}: {val} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn triangle_weights_positive_and_sum_to_half() {
        for d in [1usize, 2, 4, 5, 6, 10, 20] {
            let r = TriangleRule::of_degree(d);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            let total: f64 = r.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-13, "degree {d}: {total}");
        }
    }

    #[test]
    fn triangle_monomial_exactness() {
        for deg in [2usize, 4, 5, 6, 10, 20] {
            let r = TriangleRule::of_degree(deg);
            for p in 0..=deg as u32 {
                for q in 0..=(deg as u32 - p) {
                    let val: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(&[x, y], &w)| w * x.powi(p as i32) * y.powi(q as i32))
                        .sum();
                    let exact = monomial_integral(p, q);
                    assert!(
                        (val - exact).abs() < 1e-12 * exact.max(1.0),
                        "deg={deg} x^{p} y^{q}: {val} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn physical_triangle_area() {
        let r = TriangleRule::of_degree(2);
        let area = r.integrate([0.0, 0.0], [2.0, 0.0], [0.0, 3.0], |_| 1.0);
        assert!((area - 3.0).abs() < 1e-13);
    }

    #[test]
    fn subdivided_matches_plain_for_smooth_integrand() {
        let r = TriangleRule::of_degree(6);
        let f = |p: Pt| p[0].powi(3) * p[1] + 1.0;
        let plain = r.integrate([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], f);
        let subdivided =
            r.integrate_subdivided([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], 3, &mut { f });
        assert!((plain - subdivided).abs() < 1e-13);
    }

    #[test]
    fn edge_integration_of_linear() {
        let r = SegmentRule::with_points(2);
        let val = r.integrate([0.0, 0.0], [3.0, 4.0], |p| p[0] + p[1]);
        // ∫ over segment of length 5, integrand goes 0 → 7 linearly.
        assert!((val - 17.5).abs() < 1e-12);
    }
}
