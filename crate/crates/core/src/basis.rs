//! Local polynomial bases: nodal Lagrange basis on the reference triangle
//! for the elementwise fields, and orthonormal Legendre polynomials on edges
//! for moment constraints and interface multipliers.

use crate::error::{Error, Result};
use crate::geo::Pt;
use crate::staggered::FineMesh;

/// Number of scalar coefficients of P^k on a triangle.
pub fn dim_pk(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Nodal Lagrange basis of P^k on the reference triangle (0,0)-(1,0)-(0,1).
/// For k = 1 the nodes are the vertices, so the basis is the barycentric one.
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    pub k: usize,
    pub n: usize,
    /// Monomial exponents (p, q) in a fixed order.
    exponents: Vec<(usize, usize)>,
    /// coeffs[a][m]: coefficient of monomial m in basis function a.
    coeffs: Vec<Vec<f64>>,
    pub nodes: Vec<Pt>,
}

impl ReferenceBasis {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "polynomial degree must be at least 1");
        let n = dim_pk(k);
        let mut exponents = Vec::with_capacity(n);
        let mut nodes = Vec::with_capacity(n);
        for j in 0..=k {
            for i in 0..=(k - j) {
                exponents.push((i, j));
                nodes.push([i as f64 / k as f64, j as f64 / k as f64]);
            }
        }
        // Solve V c_a = e_a with V[b][m] = mono_m(node_b).
        let mut v = vec![vec![0.0; n]; n];
        for (b, &node) in nodes.iter().enumerate() {
            for (m, &(p, q)) in exponents.iter().enumerate() {
                v[b][m] = node[0].powi(p as i32) * node[1].powi(q as i32);
            }
        }
        let mut coeffs = vec![vec![0.0; n]; n];
        for a in 0..n {
            let mut rhs = vec![0.0; n];
            rhs[a] = 1.0;
            coeffs[a] = solve_dense(&v, &rhs).expect("Lagrange Vandermonde is invertible");
        }
        ReferenceBasis { k, n, exponents, coeffs, nodes }
    }

    /// Values of all basis functions at a reference point.
    pub fn eval(&self, p: Pt) -> Vec<f64> {
        let monos: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(a, b)| p[0].powi(a as i32) * p[1].powi(b as i32))
            .collect();
        self.coeffs
            .iter()
            .map(|c| c.iter().zip(&monos).map(|(ci, mi)| ci * mi).sum())
            .collect()
    }

    /// Reference gradients of all basis functions at a reference point.
    pub fn eval_grad(&self, p: Pt) -> Vec<Pt> {
        let dmonos: Vec<Pt> = self
            .exponents
            .iter()
            .map(|&(a, b)| {
                let dx = if a == 0 {
                    0.0
                } else {
                    a as f64 * p[0].powi(a as i32 - 1) * p[1].powi(b as i32)
                };
                let dy = if b == 0 {
                    0.0
                } else {
                    b as f64 * p[0].powi(a as i32) * p[1].powi(b as i32 - 1)
                };
                [dx, dy]
            })
            .collect();
        self.coeffs
            .iter()
            .map(|c| {
                let mut g = [0.0, 0.0];
                for (ci, dm) in c.iter().zip(&dmonos) {
                    g[0] += ci * dm[0];
                    g[1] += ci * dm[1];
                }
                g
            })
            .collect()
    }
}

/// Basis values, physical gradients, and the affine map data at a point of a
/// fine triangle.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub gradients: Vec<Pt>,
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
}

/// Evaluate the local basis of fine triangle `tri` at a reference point.
/// The point must lie in the reference triangle up to a barycentric slack of
/// 1e-12.
pub fn evaluate_basis(
    fine: &FineMesh,
    basis: &ReferenceBasis,
    tri: usize,
    ref_pt: Pt,
) -> Result<BasisEval> {
    if tri >= fine.n_tris() {
        return Err(Error::InvalidArgument(format!(
            "triangle {tri} out of range ({} fine triangles)",
            fine.n_tris()
        )));
    }
    let bary = [1.0 - ref_pt[0] - ref_pt[1], ref_pt[0], ref_pt[1]];
    if bary.iter().any(|&l| l < -1e-12) {
        return Err(Error::InvalidArgument(format!(
            "reference point {ref_pt:?} lies outside the reference triangle"
        )));
    }
    let map = fine.affine_map(tri);
    let values = basis.eval(ref_pt);
    let gradients = basis
        .eval_grad(ref_pt)
        .into_iter()
        .map(|g| map.grad_to_physical(g))
        .collect();
    Ok(BasisEval { values, gradients, jacobian: map.jac, det: map.det })
}

/// Legendre polynomial P_m on [-1, 1].
pub fn legendre(m: usize, x: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => x,
        _ => {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// m-th orthonormal Legendre function on an edge of length `h`, evaluated at
/// the normalized arclength position `s` ∈ [0, 1]. The family satisfies
/// ∫_e φ_m φ_n ds = δ_mn.
pub fn edge_legendre(m: usize, s: f64, h: f64) -> f64 {
    ((2.0 * m as f64 + 1.0) / h).sqrt() * legendre(m, 2.0 * s - 1.0)
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in (row + 1)..n {
            sum -= m[row][k] * x[k];
        }
        x[row] = sum / m[row][row];
    }
    Some(x)
}
