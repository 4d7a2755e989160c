//! Benchmark problem library: three built-in configurations (a smooth peaked
//! solution, a point singularity inside a homogeneous domain, and the
//! checkerboard interface singularity) plus the transmission eigenproblem
//! that produces the checkerboard exponent and coefficients.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geo::Pt;
use crate::partition::SubdomainPartition;

type ScalarFn = Arc<dyn Fn(Pt) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(Pt) -> Pt + Send + Sync>;

/// Exact solution callables for error reporting.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad: GradFn,
}

/// A complete problem instance: geometry, data, and metadata.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub partition: SubdomainPartition,
    /// Initial cells per side in every subdomain.
    pub default_grid: usize,
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub exact: Option<ExactSolution>,
    pub singular_points: Vec<Pt>,
}

impl ProblemSpec {
    /// Check that `g` matches the exact trace on ∂Ω by sampling boundary
    /// points (no-op when no exact solution is attached).
    pub fn check_boundary_consistency(&self, samples: usize) -> Result<()> {
        let Some(exact) = &self.exact else { return Ok(()) };
        let boundary_sides = self.boundary_sides();
        if boundary_sides.is_empty() {
            return Err(Error::Internal("partition has no boundary sides".into()));
        }
        for i in 0..samples {
            let (a, b) = boundary_sides[i % boundary_sides.len()];
            let s = (i as f64 + 0.5) / samples as f64;
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let gv = (self.g)(x);
            let uv = (exact.u)(x);
            if (gv - uv).abs() > 1e-12 * (1.0 + uv.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "boundary data differs from the exact trace at {x:?}: {gv} vs {uv}"
                )));
            }
        }
        Ok(())
    }

    /// Rectangle sides lying on ∂Ω.
    fn boundary_sides(&self) -> Vec<(Pt, Pt)> {
        let mut sides = Vec::new();
        for rect in &self.partition.rects {
            let corners = [
                ([rect.x0, rect.y0], [rect.x0, rect.y1]),
                ([rect.x1, rect.y0], [rect.x1, rect.y1]),
                ([rect.x0, rect.y0], [rect.x1, rect.y0]),
                ([rect.x0, rect.y1], [rect.x1, rect.y1]),
            ];
            for (a, b) in corners {
                let is_interface = self.partition.interfaces.iter().any(|itf| {
                    crate::geo::dist(itf.start, a) < 1e-12 && crate::geo::dist(itf.end, b) < 1e-12
                });
                if !is_interface {
                    sides.push((a, b));
                }
            }
        }
        sides
    }
}

/// Built-in problem by name: `example1`, `example2`, or `example3`.
pub fn builtin_problems(id: &str) -> Result<ProblemSpec> {
    match id {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "example3" => example3(),
        other => Err(Error::InvalidArgument(format!(
            "unknown problem `{other}` (expected example1, example2, or example3)"
        ))),
    }
}

/// Smooth peaked solution u = 1000·x·y·exp(−100(x²+y²)) on (0,1)² with four
/// square subdomains and ρ = 1.
fn example1() -> ProblemSpec {
    let u = |x: Pt| 1000.0 * x[0] * x[1] * (-100.0 * (x[0] * x[0] + x[1] * x[1])).exp();
    let grad = |x: Pt| {
        let e = (-100.0 * (x[0] * x[0] + x[1] * x[1])).exp();
        [
            1000.0 * x[1] * e * (1.0 - 200.0 * x[0] * x[0]),
            1000.0 * x[0] * e * (1.0 - 200.0 * x[1] * x[1]),
        ]
    };
    let f = |x: Pt| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let e = (-100.0 * r2).exp();
        1000.0 * x[0] * x[1] * e * (1200.0 - 40000.0 * r2)
    };
    ProblemSpec {
        name: "example1".into(),
        partition: SubdomainPartition::unit_square_quadrants([1.0; 4]).unwrap(),
        default_grid: 2,
        f: Arc::new(f),
        g: Arc::new(u),
        exact: Some(ExactSolution { u: Arc::new(u), grad: Arc::new(grad) }),
        singular_points: vec![],
    }
}

/// Point singularity u = r^{1/2}·cos(2θ) about (0.5, 0.5) on (0,1)² with
/// four square subdomains and ρ = 1. The solution is not harmonic, so the
/// source term f = −Δu = (15/4)·r^{−3/2}·cos(2θ) is singular at the center.
fn example2() -> ProblemSpec {
    const C: Pt = [0.5, 0.5];
    let polar = |x: Pt| {
        let (dx, dy) = (x[0] - C[0], x[1] - C[1]);
        ((dx * dx + dy * dy).sqrt(), dy.atan2(dx))
    };
    let u = move |x: Pt| {
        let (r, th) = polar(x);
        r.sqrt() * (2.0 * th).cos()
    };
    let grad = move |x: Pt| {
        let (r, th) = polar(x);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let ur = 0.5 / r.sqrt() * (2.0 * th).cos();
        let ut_over_r = -2.0 / r.sqrt() * (2.0 * th).sin();
        [
            ur * th.cos() - ut_over_r * th.sin(),
            ur * th.sin() + ut_over_r * th.cos(),
        ]
    };
    let f = move |x: Pt| {
        let (r, th) = polar(x);
        if r == 0.0 {
            return 0.0;
        }
        3.75 * r.powf(-1.5) * (2.0 * th).cos()
    };
    ProblemSpec {
        name: "example2".into(),
        partition: SubdomainPartition::unit_square_quadrants([1.0; 4]).unwrap(),
        default_grid: 2,
        f: Arc::new(f),
        g: Arc::new(u),
        exact: Some(ExactSolution { u: Arc::new(u), grad: Arc::new(grad) }),
        singular_points: vec![C],
    }
}

/// Checkerboard interface problem on (−1,1)² with ρ = (5, 1, 5, 1) on the
/// counterclockwise quadrants and the exact solution r^α(K_i sin αθ +
/// S_i cos αθ), singular at the origin.
fn example3() -> Result<ProblemSpec> {
    let kellogg = kellogg_constants(5.0, 1.0)?;
    let sol = kellogg.clone();
    let grad_sol = kellogg.clone();
    Ok(ProblemSpec {
        name: "example3".into(),
        partition: SubdomainPartition::quadrants_counterclockwise([5.0, 1.0, 5.0, 1.0])?,
        default_grid: 2,
        f: Arc::new(|_| 0.0),
        g: Arc::new(move |x| sol.eval(x)),
        exact: Some(ExactSolution {
            u: {
                let k = kellogg.clone();
                Arc::new(move |x| k.eval(x))
            },
            grad: Arc::new(move |x| grad_sol.grad(x)),
        }),
        singular_points: vec![[0.0, 0.0]],
    })
}

/// Singular exponent and per-quadrant coefficients of the checkerboard
/// solution u(r,θ) = r^α (K_i sin(αθ) + S_i cos(αθ)).
#[derive(Debug, Clone)]
pub struct KelloggSolution {
    pub alpha: f64,
    /// (K_i, S_i) per counterclockwise quadrant, starting at {x>0, y>0}.
    pub coeffs: [[f64; 2]; 4],
    pub rho: [f64; 4],
}

impl KelloggSolution {
    fn quadrant_of(theta: f64) -> usize {
        ((theta / (PI / 2.0)) as usize).min(3)
    }

    pub fn eval(&self, x: Pt) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r == 0.0 {
            return 0.0;
        }
        let mut theta = x[1].atan2(x[0]);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        let [k, s] = self.coeffs[Self::quadrant_of(theta)];
        let a = self.alpha;
        r.powf(a) * (k * (a * theta).sin() + s * (a * theta).cos())
    }

    pub fn grad(&self, x: Pt) -> Pt {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let mut theta = x[1].atan2(x[0]);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        let [k, s] = self.coeffs[Self::quadrant_of(theta)];
        let a = self.alpha;
        let g = k * (a * theta).sin() + s * (a * theta).cos();
        let dg = k * (a * theta).cos() - s * (a * theta).sin();
        let ur = a * r.powf(a - 1.0) * g;
        let ut_over_r = a * r.powf(a - 1.0) * dg;
        [
            ur * theta.cos() - ut_over_r * theta.sin(),
            ur * theta.sin() + ut_over_r * theta.cos(),
        ]
    }

    /// Largest residual of the transmission conditions (continuity of u and
    /// of ρ ∂u/∂θ across the four axis interfaces), sampled at `n_radii`
    /// radii in (0, 1].
    pub fn interface_residual(&self, n_radii: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 1..=4usize {
            let theta = m as f64 * PI / 2.0;
            let (q_in, q_out) = (m - 1, m % 4);
            let a = self.alpha;
            let g = |q: usize, th: f64| {
                let [k, s] = self.coeffs[q];
                k * (a * th).sin() + s * (a * th).cos()
            };
            let dg = |q: usize, th: f64| {
                let [k, s] = self.coeffs[q];
                a * (k * (a * th).cos() - s * (a * th).sin())
            };
            let th_out = if m == 4 { 0.0 } else { theta };
            for i in 1..=n_radii {
                let r = i as f64 / n_radii as f64;
                let ra = r.powf(a);
                worst = worst.max((ra * (g(q_in, theta) - g(q_out, th_out))).abs());
                worst = worst.max(
                    (ra * (self.rho[q_in] * dg(q_in, theta) - self.rho[q_out] * dg(q_out, th_out)))
                        .abs(),
                );
            }
        }
        worst
    }
}

/// Determinant of the 8×8 transmission system for the exponent candidate
/// `alpha` with coefficients ρ = (a, b, a, b).
pub fn transmission_determinant(a: f64, b: f64, alpha: f64) -> f64 {
    let m = transmission_matrix(a, b, alpha);
    det8(&m)
}

fn transmission_matrix(a: f64, b: f64, alpha: f64) -> [[f64; 8]; 8] {
    let rho = [a, b, a, b];
    let mut m = [[0.0; 8]; 8];
    for q in 0..4usize {
        let theta = (q + 1) as f64 * PI / 2.0;
        let q_next = (q + 1) % 4;
        let th_next = if q == 3 { 0.0 } else { theta };
        let (sin_in, cos_in) = ((alpha * theta).sin(), (alpha * theta).cos());
        let (sin_out, cos_out) = ((alpha * th_next).sin(), (alpha * th_next).cos());
        // continuity of u
        m[2 * q][2 * q] = sin_in;
        m[2 * q][2 * q + 1] = cos_in;
        m[2 * q][2 * q_next] -= sin_out;
        m[2 * q][2 * q_next + 1] -= cos_out;
        // continuity of ρ ∂u/∂θ (the common factor α divides out)
        m[2 * q + 1][2 * q] = rho[q] * cos_in;
        m[2 * q + 1][2 * q + 1] = -rho[q] * sin_in;
        m[2 * q + 1][2 * q_next] -= rho[q_next] * cos_out;
        m[2 * q + 1][2 * q_next + 1] -= -rho[q_next] * sin_out;
    }
    m
}

fn det8(m: &[[f64; 8]; 8]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(col, pivot);
            det = -det;
        }
        det *= a[col][col];
        for row in (col + 1)..8 {
            let factor = a[row][col] / a[col][col];
            for k in col..8 {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    det
}

/// Solve the transmission eigenproblem: smallest α in (0, 1) where the
/// system becomes singular, with the null vector normalized by
/// K₁² + S₁² = 1 and K₁ > 0.
pub fn kellogg_constants(a: f64, b: f64) -> Result<KelloggSolution> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(
            "diffusion coefficients must be positive".into(),
        ));
    }
    // bracket the first sign change of the determinant
    let n_scan = 2000;
    let mut bracket = None;
    let mut prev = (1e-9, transmission_determinant(a, b, 1e-9));
    for i in 1..=n_scan {
        let alpha = i as f64 / n_scan as f64;
        let alpha = alpha.min(1.0 - 1e-9);
        let d = transmission_determinant(a, b, alpha);
        if d == 0.0 {
            bracket = Some((alpha, alpha));
            break;
        }
        if prev.1.signum() != d.signum() {
            bracket = Some((prev.0, alpha));
            break;
        }
        prev = (alpha, d);
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::Config {
        path: "rho".into(),
        message: format!("no singular exponent in (0, 1) for rho = ({a}, {b})"),
    })?;
    let d_lo = transmission_determinant(a, b, lo);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let d_mid = transmission_determinant(a, b, mid);
        if d_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if d_mid.signum() == d_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);

    // null vector via dense SVD
    let m = transmission_matrix(a, b, alpha);
    let mat = faer::Mat::from_fn(8, 8, |i, j| m[i][j]);
    let svd = mat.svd().map_err(|e| Error::Internal(format!("SVD failed: {e:?}")))?;
    let v = svd.V();
    let mut x = [0.0; 8];
    for (i, slot) in x.iter_mut().enumerate() {
        *slot = v[(i, 7)];
    }
    let norm = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if norm < 1e-12 {
        return Err(Error::Internal(
            "transmission null vector degenerate in the first quadrant".into(),
        ));
    }
    let sign = if x[0] != 0.0 { x[0].signum() } else { x[1].signum() };
    for slot in &mut x {
        *slot /= norm * sign;
    }
    let solution = KelloggSolution {
        alpha,
        coeffs: [[x[0], x[1]], [x[2], x[3]], [x[4], x[5]], [x[6], x[7]]],
        rho: [a, b, a, b],
    };
    let residual = solution.interface_residual(50);
    if residual > 1e-8 {
        return Err(Error::Internal(format!(
            "transmission conditions violated by {residual:.3e} after the eigensolve"
        )));
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 5-point central-difference Laplacian.
    fn fd_neg_laplacian(u: &dyn Fn(Pt) -> f64, x: Pt, h: f64) -> f64 {
        -(u([x[0] + h, x[1]]) + u([x[0] - h, x[1]]) + u([x[0], x[1] + h]) + u([x[0], x[1] - h])
            - 4.0 * u(x))
            / (h * h)
    }

    fn fd_grad(u: &dyn Fn(Pt) -> f64, x: Pt, h: f64) -> Pt {
        [
            (u([x[0] + h, x[1]]) - u([x[0] - h, x[1]])) / (2.0 * h),
            (u([x[0], x[1] + h]) - u([x[0], x[1] - h])) / (2.0 * h),
        ]
    }

    #[test]
    fn example1_source_matches_finite_differences() {
        let p = builtin_problems("example1").unwrap();
        let exact = p.exact.as_ref().unwrap();
        for x in [[0.1, 0.2], [0.05, 0.15], [0.3, 0.1], [0.2, 0.25]] {
            let fd = fd_neg_laplacian(&*exact.u, x, 1e-5);
            let f = (p.f)(x);
            assert!(
                (fd - f).abs() <= 1e-6 * f.abs().max(1.0),
                "at {x:?}: fd {fd} vs analytic {f}"
            );
            let g_fd = fd_grad(&*exact.u, x, 1e-5);
            let g = (exact.grad)(x);
            for c in 0..2 {
                assert!((g_fd[c] - g[c]).abs() <= 1e-6 * g[c].abs().max(1.0));
            }
        }
    }

    #[test]
    fn example2_source_matches_finite_differences() {
        let p = builtin_problems("example2").unwrap();
        let exact = p.exact.as_ref().unwrap();
        for x in [[0.8, 0.7], [0.25, 0.6], [0.9, 0.2]] {
            let fd = fd_neg_laplacian(&*exact.u, x, 1e-5);
            let f = (p.f)(x);
            assert!(
                (fd - f).abs() <= 1e-6 * f.abs().max(1.0),
                "at {x:?}: fd {fd} vs analytic {f}"
            );
        }
    }

    #[test]
    fn example2_point_values() {
        let p = builtin_problems("example2").unwrap();
        let exact = p.exact.as_ref().unwrap();
        // r = 0.25 along θ = 0 from the center
        let v = (exact.u)([0.75, 0.5]);
        assert!((v - 0.5).abs() < 1e-14);
        // example1 vanishes on the axes
        let p1 = builtin_problems("example1").unwrap();
        assert_eq!((p1.exact.as_ref().unwrap().u)([0.0, 0.0]), 0.0);
    }

    #[test]
    fn uniform_rho_has_root_at_one() {
        // harmonic linear functions make α = 1 a root of the determinant
        let d = transmission_determinant(3.0, 3.0, 1.0);
        assert!(d.abs() < 1e-9, "det(1) = {d}");
        // and no singular exponent below 1
        assert!(kellogg_constants(3.0, 3.0).is_err());
    }

    #[test]
    fn checkerboard_five_one_exponent() {
        let sol = kellogg_constants(5.0, 1.0).unwrap();
        assert!(
            (sol.alpha - 0.53544095).abs() < 1e-7,
            "alpha = {}",
            sol.alpha
        );
        assert!(sol.interface_residual(50) <= 1e-8);
        // normalization
        let [k1, s1] = sol.coeffs[0];
        assert!((k1 * k1 + s1 * s1 - 1.0).abs() < 1e-12);
        assert!(k1 > 0.0);
    }

    #[test]
    fn example3_flux_continuity_across_axes() {
        let p = builtin_problems("example3").unwrap();
        let exact = p.exact.as_ref().unwrap();
        // ρ ∇u · n continuous across the positive y-axis (normal (1, 0))
        for r in [0.2, 0.5, 0.9] {
            let eps = 1e-9;
            let left = (exact.grad)([-eps, r]);
            let right = (exact.grad)([eps, r]);
            let flux_left = 1.0 * left[0]; // quadrant 2, ρ = 1
            let flux_right = 5.0 * right[0]; // quadrant 1, ρ = 5
            assert!(
                (flux_left - flux_right).abs() < 1e-5 * flux_left.abs().max(1e-3),
                "r={r}: {flux_left} vs {flux_right}"
            );
            let u_left = (exact.u)([-eps, r]);
            let u_right = (exact.u)([eps, r]);
            assert!((u_left - u_right).abs() < 1e-8);
        }
    }

    #[test]
    fn boundary_consistency_of_builtins() {
        for id in ["example1", "example2", "example3"] {
            let p = builtin_problems(id).unwrap();
            p.check_boundary_consistency(100).unwrap();
        }
    }

    #[test]
    fn unknown_problem_rejected() {
        assert!(matches!(
            builtin_problems("example9"),
            Err(Error::InvalidArgument(_))
        ));
    }
}
