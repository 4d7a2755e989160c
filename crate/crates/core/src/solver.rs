//! Sparse direct solve of the saddle-point system and evaluation of the
//! resulting discrete fields.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::assembly::{Discretization, SaddleSystem};
use crate::basis::edge_legendre;
use crate::error::{Error, Result};
use crate::geo::Pt;

/// Relative residual bound a successful solve must satisfy.
const RESIDUAL_TOL: f64 = 1e-10;

/// Coefficient vectors of the solved fields.
#[derive(Debug, Clone)]
pub struct SolutionFields {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Constraint multipliers (kept for diagnostics).
    pub mu: Vec<f64>,
    /// Scaled residual of the direct solve.
    pub residual: f64,
}

/// Factor and solve; fails on singular or numerically rank-deficient systems
/// and on residuals above the solver tolerance.
pub fn solve(system: &SaddleSystem) -> Result<SolutionFields> {
    let triplets: Vec<Triplet<usize, usize, f64>> = system
        .triplets
        .iter()
        .map(|&(r, c, v)| Triplet::new(r, c, v))
        .collect();
    let mat = SparseColMat::try_new_from_triplets(system.n, system.n, &triplets)
        .map_err(|e| Error::Solver { stage: "matrix construction".into(), message: format!("{e:?}") })?;
    let lu = mat.sp_lu().map_err(|e| Error::Solver {
        stage: "factorization".into(),
        message: format!("sparse LU failed: {e:?}"),
    })?;
    let mut rhs = faer::Mat::zeros(system.n, 1);
    for (i, &v) in system.rhs.iter().enumerate() {
        rhs[(i, 0)] = v;
    }
    let x = lu.solve(&rhs);
    let x: Vec<f64> = (0..system.n).map(|i| x[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver {
            stage: "back substitution".into(),
            message: "singular system: factorization produced non-finite values".into(),
        });
    }

    let ax = system.apply(&x);
    let r_norm = ax
        .iter()
        .zip(&system.rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let b_norm = system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = b_norm + system.max_abs_entry() * x_norm;
    let residual = if scale > 0.0 { r_norm / scale } else { r_norm };
    if residual > RESIDUAL_TOL {
        return Err(Error::Solver {
            stage: "residual check".into(),
            message: format!("scaled residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"),
        });
    }

    let (n_z, n_u, n_lam) = (system.n_z, system.n_u, system.n_lambda);
    Ok(SolutionFields {
        z: x[0..n_z].to_vec(),
        u: x[n_z..n_z + n_u].to_vec(),
        lambda: x[n_z + n_u..n_z + n_u + n_lam].to_vec(),
        mu: x[n_z + n_u + n_lam..].to_vec(),
        residual,
    })
}

impl SolutionFields {
    /// Construct directly from coefficient vectors (used by tests feeding
    /// synthetic fields into the estimators).
    pub fn from_coefficients(z: Vec<f64>, u: Vec<f64>, lambda: Vec<f64>) -> Self {
        SolutionFields { z, u, lambda, mu: Vec::new(), residual: 0.0 }
    }

    fn u_coeff(&self, disc: &Discretization, gtri: usize, b: usize) -> f64 {
        self.u[disc.dofs.u_dof(gtri, b) - disc.dofs.u_offset()]
    }

    fn z_coeff(&self, disc: &Discretization, gtri: usize, comp: usize, b: usize) -> f64 {
        self.z[disc.dofs.z_dof(gtri, comp, b)]
    }

    /// Value of u_h at a physical point of a fine triangle.
    pub fn u_value(&self, disc: &Discretization, sub: usize, tri: usize, x: Pt) -> f64 {
        let mesh = &disc.fine[sub];
        let r = mesh.affine_map(tri).to_reference(x);
        let vals = disc.basis.eval(r);
        let gt = disc.dofs.gtri(sub, tri);
        vals.iter()
            .enumerate()
            .map(|(b, v)| v * self.u_coeff(disc, gt, b))
            .sum()
    }

    /// Gradient of u_h at a physical point of a fine triangle.
    pub fn u_grad(&self, disc: &Discretization, sub: usize, tri: usize, x: Pt) -> Pt {
        let mesh = &disc.fine[sub];
        let map = mesh.affine_map(tri);
        let r = map.to_reference(x);
        let grads = disc.basis.eval_grad(r);
        let gt = disc.dofs.gtri(sub, tri);
        let mut g = [0.0, 0.0];
        for (b, gr) in grads.iter().enumerate() {
            let c = self.u_coeff(disc, gt, b);
            let pg = map.grad_to_physical(*gr);
            g[0] += c * pg[0];
            g[1] += c * pg[1];
        }
        g
    }

    /// Value of z_h at a physical point of a fine triangle.
    pub fn z_value(&self, disc: &Discretization, sub: usize, tri: usize, x: Pt) -> Pt {
        let mesh = &disc.fine[sub];
        let r = mesh.affine_map(tri).to_reference(x);
        let vals = disc.basis.eval(r);
        let gt = disc.dofs.gtri(sub, tri);
        let mut z = [0.0, 0.0];
        for (b, v) in vals.iter().enumerate() {
            z[0] += v * self.z_coeff(disc, gt, 0, b);
            z[1] += v * self.z_coeff(disc, gt, 1, b);
        }
        z
    }

    /// ∇·z_h at a physical point of a fine triangle.
    pub fn z_div(&self, disc: &Discretization, sub: usize, tri: usize, x: Pt) -> f64 {
        let mesh = &disc.fine[sub];
        let map = mesh.affine_map(tri);
        let r = map.to_reference(x);
        let grads = disc.basis.eval_grad(r);
        let gt = disc.dofs.gtri(sub, tri);
        let mut div = 0.0;
        for (b, gr) in grads.iter().enumerate() {
            let pg = map.grad_to_physical(*gr);
            div += self.z_coeff(disc, gt, 0, b) * pg[0];
            div += self.z_coeff(disc, gt, 1, b) * pg[1];
        }
        div
    }

    /// Value of λ_h at arclength `t` along the interface at position
    /// `interface_pos` in the mortar layout.
    pub fn lambda_value(&self, disc: &Discretization, interface_pos: usize, t: f64) -> f64 {
        let dofs = &disc.dofs;
        let offset = dofs.lambda_offset_by_interface[interface_pos];
        let end = dofs
            .lambda_offset_by_interface
            .get(interface_pos + 1)
            .copied()
            .unwrap_or(dofs.lambda_edges.len());
        // find the edge containing t
        let mut edge_idx = offset;
        for e in offset..end {
            let le = &dofs.lambda_edges[e];
            if t <= le.t1 || e == end - 1 {
                edge_idx = e;
                break;
            }
        }
        let le = &dofs.lambda_edges[edge_idx];
        let s = ((t - le.t0) / le.h).clamp(0.0, 1.0);
        (0..=dofs.k)
            .map(|m| {
                self.lambda[dofs.lambda_dof(edge_idx, m) - dofs.lambda_offset()]
                    * edge_legendre(m, s, le.h)
            })
            .sum()
    }

    /// L2 norm of u_h over the whole domain.
    pub fn u_l2_norm(&self, disc: &Discretization) -> f64 {
        let rule = crate::quadrature::TriangleRule::of_degree(2 * disc.cfg.k);
        let mut acc = 0.0;
        for (sub, mesh) in disc.fine.iter().enumerate() {
            for t in 0..mesh.n_tris() {
                let [a, b, c] = mesh.tri_points(t);
                acc += rule.integrate(a, b, c, |x| {
                    let v = self.u_value(disc, sub, t, x);
                    v * v
                });
            }
        }
        acc.sqrt()
    }

    /// Residuals of the mortar matching rows, scaled by ‖u_h‖₀.
    pub fn mortar_matching_residual(&self, disc: &Discretization) -> f64 {
        let mut full = vec![0.0; disc.dofs.n_fields()];
        full[..self.z.len()].copy_from_slice(&self.z);
        full[disc.dofs.u_offset()..disc.dofs.lambda_offset()].copy_from_slice(&self.u);
        full[disc.dofs.lambda_offset()..].copy_from_slice(&self.lambda);
        let norm = self.u_l2_norm(disc).max(f64::MIN_POSITIVE);
        disc.constraints
            .mortar_rows()
            .map(|row| row.apply(&full).abs())
            .fold(0.0, f64::max)
            / norm
    }

    /// Largest residual over all homogeneous space constraints, relative to
    /// the coefficient scale.
    pub fn constraint_residual(&self, disc: &Discretization) -> f64 {
        let mut full = vec![0.0; disc.dofs.n_fields()];
        full[..self.z.len()].copy_from_slice(&self.z);
        full[disc.dofs.u_offset()..disc.dofs.lambda_offset()].copy_from_slice(&self.u);
        full[disc.dofs.lambda_offset()..].copy_from_slice(&self.lambda);
        let scale = full
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        disc.constraints
            .space_rows()
            .filter(|row| row.rhs == 0.0)
            .map(|row| row.apply(&full).abs())
            .fold(0.0, f64::max)
            / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_global_system;
    use crate::mesh::{build_initial_mesh, Diagonal};
    use crate::mortar::MortarRule;
    use crate::partition::SubdomainPartition;
    use crate::space::SpaceConfig;

    fn patch_disc() -> Discretization {
        // non-matching grids: 1 vs 2
        let p = SubdomainPartition::two_halves([1.0, 1.0]).unwrap();
        let coarse = build_initial_mesh(&p, &[1, 2], Diagonal::default()).unwrap();
        Discretization::build(
            &p,
            &coarse,
            SpaceConfig::new(1).unwrap(),
            MortarRule::FinerSide,
            &|x| x[0],
        )
        .unwrap()
    }

    #[test]
    fn patch_test_reproduces_linear_solution() {
        let disc = patch_disc();
        let sys = build_global_system(&disc, &|_| 0.0, &[]).unwrap();
        let fields = solve(&sys).unwrap();

        // u_h = x, z_h = (1, 0) everywhere
        for (sub, mesh) in disc.fine.iter().enumerate() {
            for t in 0..mesh.n_tris() {
                let [a, b, c] = mesh.tri_points(t);
                let x = crate::geo::centroid(a, b, c);
                assert!((fields.u_value(&disc, sub, t, x) - x[0]).abs() < 1e-9);
                let z = fields.z_value(&disc, sub, t, x);
                assert!((z[0] - 1.0).abs() < 1e-9);
                assert!(z[1].abs() < 1e-9);
                let g = fields.u_grad(&disc, sub, t, x);
                assert!((g[0] - 1.0).abs() < 1e-9);
                assert!(g[1].abs() < 1e-9);
            }
        }
        // λ_h approximates z·n_ij = 1 on the vertical interface
        for t in [0.1, 0.5, 0.9] {
            assert!((fields.lambda_value(&disc, 0, t) - 1.0).abs() < 1e-9);
        }
        assert!(fields.constraint_residual(&disc) < 1e-9);
        assert!(fields.mortar_matching_residual(&disc) < 1e-9);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let p = SubdomainPartition::two_halves([1.0, 1.0]).unwrap();
        let coarse = build_initial_mesh(&p, &[1, 2], Diagonal::default()).unwrap();
        let disc = Discretization::build(
            &p,
            &coarse,
            SpaceConfig::new(1).unwrap(),
            MortarRule::FinerSide,
            &|_| 0.0,
        )
        .unwrap();
        let sys = build_global_system(&disc, &|_| 0.0, &[]).unwrap();
        let fields = solve(&sys).unwrap();
        assert!(fields.u.iter().all(|v| v.abs() < 1e-12));
        assert!(fields.z.iter().all(|v| v.abs() < 1e-12));
        assert!(fields.lambda.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn solve_is_linear_in_data() {
        let p = SubdomainPartition::two_halves([1.0, 1.0]).unwrap();
        let coarse = build_initial_mesh(&p, &[2, 1], Diagonal::default()).unwrap();
        let cfg = SpaceConfig::new(1).unwrap();
        let g1 = |x: Pt| x[0] * x[1];
        let g10 = |x: Pt| 10.0 * x[0] * x[1];
        let f1 = |x: Pt| x[0] + 2.0;
        let f10 = |x: Pt| 10.0 * (x[0] + 2.0);
        let d1 = Discretization::build(&p, &coarse, cfg, MortarRule::FinerSide, &g1).unwrap();
        let d10 = Discretization::build(&p, &coarse, cfg, MortarRule::FinerSide, &g10).unwrap();
        let s1 = solve(&build_global_system(&d1, &f1, &[]).unwrap()).unwrap();
        let s10 = solve(&build_global_system(&d10, &f10, &[]).unwrap()).unwrap();
        for (a, b) in s1.u.iter().zip(&s10.u) {
            assert!((10.0 * a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
        for (a, b) in s1.lambda.iter().zip(&s10.lambda) {
            assert!((10.0 * a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn singular_system_reported() {
        // a system with an empty row is structurally singular
        let sys = crate::assembly::SaddleSystem {
            n: 3,
            n_fields: 3,
            n_z: 1,
            n_u: 1,
            n_lambda: 1,
            n_mu: 0,
            triplets: vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 0.0), (2, 0, 0.0)],
            rhs: vec![1.0, 1.0, 1.0],
        };
        let err = solve(&sys).unwrap_err();
        assert!(matches!(err, Error::Solver { .. }));
    }
}
