//! Assembly of the subdomain bilinear forms, mortar coupling, load vector,
//! and the global saddle-point system.
//!
//! The two first-order forms are assembled independently:
//!
//!   b(z, v)  = (z, ∇v) − Σ_{e∈F_p} ⟨z·n, v⟩_e
//!   b*(v, q) = −(v, ∇·q) + Σ_{e∈F_u^0} ⟨q·n, v⟩_e + (v, q·n_i)_{∂Ω_i}
//!
//! where ⟨a, b⟩_e = (a₁b₁ − a₂b₂)_e is the full two-sided trace product
//! (side 1 on the side the fixed normal leaves). On the constrained trial
//! spaces it collapses to the staggered edge terms (z·n, ⟦v⟧) and
//! (v, ⟦q·n⟧); on the raw spaces it makes the two assembled matrices exact
//! transposes by elementwise integration by parts, which doubles as the
//! strongest available check on the edge-sign bookkeeping. The boundary term
//! runs over all of ∂Ω_i and carries the Dirichlet trace moments when the
//! boundary data is nonzero.
//!
//! Constraints enter as explicit rows with their own multipliers; the mortar
//! matching rows are the λ-block equations and need none.

use crate::basis::ReferenceBasis;
use crate::error::{Error, Result};
use crate::geo::{self, Pt};
use crate::mesh::CoarseMesh;
use crate::mortar::{MortarLayout, MortarRule};
use crate::partition::SubdomainPartition;
use crate::quadrature::{SegmentRule, TriangleRule};
use crate::space::{build_constraints, ConstraintSet, DofMap, SpaceConfig};
use crate::staggered::{EdgeTag, FineMesh};

/// Extra quadrature degrees for a general (non-polynomial) source term.
const SOURCE_DEGREE_BUMP: usize = 4;
/// Local quadrature subdivision depth on elements touching a singular point.
pub const SINGULAR_SUBDIVISION_LEVELS: usize = 3;

/// Everything that defines the discrete problem on one mesh level.
pub struct Discretization {
    pub partition: SubdomainPartition,
    pub coarse: Vec<CoarseMesh>,
    pub fine: Vec<FineMesh>,
    pub layout: MortarLayout,
    pub dofs: DofMap,
    pub constraints: ConstraintSet,
    pub basis: ReferenceBasis,
    pub cfg: SpaceConfig,
}

impl Discretization {
    pub fn build(
        partition: &SubdomainPartition,
        coarse: &[CoarseMesh],
        cfg: SpaceConfig,
        rule: MortarRule,
        g: &dyn Fn(Pt) -> f64,
    ) -> Result<Self> {
        let fine: Vec<FineMesh> = coarse
            .iter()
            .map(|m| FineMesh::build(m, partition))
            .collect::<Result<_>>()?;
        let layout = MortarLayout::build(partition, &fine, rule)?;
        let dofs = DofMap::build(&fine, &layout, cfg);
        let basis = ReferenceBasis::new(cfg.k);
        let constraints = build_constraints(&fine, partition, &layout, &dofs, &basis, g)?;
        Ok(Discretization {
            partition: partition.clone(),
            coarse: coarse.to_vec(),
            fine,
            layout,
            dofs,
            constraints,
            basis,
            cfg,
        })
    }

    pub fn n_coarse_tris(&self) -> usize {
        self.coarse.iter().map(|m| m.n_tris()).sum()
    }

    pub fn n_fine_tris(&self) -> usize {
        self.dofs.n_tri
    }

    /// Volume rule: exact for all polynomial blocks plus the source bump.
    pub fn volume_rule(&self) -> TriangleRule {
        let k = self.cfg.k;
        TriangleRule::of_degree((2 * k).max(k + SOURCE_DEGREE_BUMP))
    }

    pub fn edge_rule(&self) -> SegmentRule {
        SegmentRule::with_points(self.cfg.k + 1)
    }

    /// Whether a fine triangle touches one of the flagged singular points.
    pub fn touches_singular(&self, sub: usize, tri: usize, singular: &[Pt]) -> bool {
        if singular.is_empty() {
            return false;
        }
        let [a, b, c] = self.fine[sub].tri_points(tri);
        singular
            .iter()
            .any(|&p| geo::point_in_triangle(p, a, b, c, 1e-9))
    }
}

/// Sparse triplets of the per-subdomain blocks, indexed by global field dofs.
#[derive(Debug, Default)]
pub struct SubdomainBlocks {
    /// ρ_i^{-1}-weighted flux mass; (z row, z col).
    pub mass: Vec<(usize, usize, f64)>,
    /// b(z, v); (u row, z col).
    pub b: Vec<(usize, usize, f64)>,
    /// b*(v, q); (z row, u col).
    pub bstar: Vec<(usize, usize, f64)>,
    /// Load moments (f, v); indexed by u dof.
    pub load: Vec<(usize, f64)>,
}

/// Assemble mass, b, b* and the load for one subdomain.
pub fn assemble_subdomain_blocks(
    disc: &Discretization,
    sub: usize,
    rho_i: f64,
    f: &dyn Fn(Pt) -> f64,
    singular: &[Pt],
) -> SubdomainBlocks {
    let mesh = &disc.fine[sub];
    let dofs = &disc.dofs;
    let basis = &disc.basis;
    let d = dofs.d;
    let vol = disc.volume_rule();
    let edge_rule = disc.edge_rule();
    let mut out = SubdomainBlocks::default();

    // Reference-point basis tables for the volume rule.
    let ref_values: Vec<Vec<f64>> = vol.points.iter().map(|&p| basis.eval(p)).collect();
    let ref_grads: Vec<Vec<Pt>> = vol.points.iter().map(|&p| basis.eval_grad(p)).collect();

    for t in 0..mesh.n_tris() {
        let gt = dofs.gtri(sub, t);
        let map = mesh.affine_map(t);
        let jac = map.det.abs();
        // mass and gradient coupling
        let mut s_mat = vec![0.0; d * d]; // ∫ φ_a φ_b
        let mut g_mat = vec![[0.0; 2]; d * d]; // ∫ φ_b ∇φ_a
        for (q, &w) in vol.weights.iter().enumerate() {
            let vals = &ref_values[q];
            let grads: Vec<Pt> = ref_grads[q].iter().map(|&g| map.grad_to_physical(g)).collect();
            for a in 0..d {
                for b in 0..d {
                    s_mat[a * d + b] += w * jac * vals[a] * vals[b];
                    g_mat[a * d + b][0] += w * jac * grads[a][0] * vals[b];
                    g_mat[a * d + b][1] += w * jac * grads[a][1] * vals[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..d {
                let m_ab = s_mat[a * d + b] / rho_i;
                for comp in 0..2 {
                    out.mass.push((dofs.z_dof(gt, comp, a), dofs.z_dof(gt, comp, b), m_ab));
                    // (z, ∇v): u test a, z trial (comp, b)
                    out.b.push((
                        dofs.u_dof(gt, a),
                        dofs.z_dof(gt, comp, b),
                        g_mat[a * d + b][comp],
                    ));
                    // −(v, ∇·q): z test (comp, b), u trial a
                    out.bstar.push((
                        dofs.z_dof(gt, comp, b),
                        dofs.u_dof(gt, a),
                        -g_mat[b * d + a][comp],
                    ));
                }
            }
        }
        // load
        let [pa, pb, pc] = mesh.tri_points(t);
        let mut load = vec![0.0; d];
        if disc.touches_singular(sub, t, singular) {
            let fv = |x: Pt, a: usize| {
                let vals = crate::space::u_basis_at(mesh, basis, t, x);
                f(x) * vals[a]
            };
            for (a, slot) in load.iter_mut().enumerate() {
                *slot = vol.integrate_subdivided(pa, pb, pc, SINGULAR_SUBDIVISION_LEVELS, &mut |x| {
                    fv(x, a)
                });
            }
        } else {
            for (q, &w) in vol.weights.iter().enumerate() {
                let x = map.to_physical(vol.points[q]);
                let fx = f(x) * w * jac;
                for a in 0..d {
                    load[a] += fx * ref_values[q][a];
                }
            }
        }
        for (a, &v) in load.iter().enumerate() {
            out.load.push((dofs.u_dof(gt, a), v));
        }
    }

    // Edge terms.
    for edge in &mesh.edges {
        let (p0, p1) = (mesh.vertices[edge.v[0]], mesh.vertices[edge.v[1]]);
        let h = edge.h;
        match edge.tag {
            EdgeTag::Fp => {
                // b: −⟨z·n, v⟩, side-diagonal
                let (t0, t1) = (edge.tris[0].unwrap(), edge.tris[1].unwrap());
                for (&s, &w) in edge_rule.points.iter().zip(&edge_rule.weights) {
                    let x = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                    let ds = w * h;
                    for (side, sign) in [(t0, 1.0), (t1, -1.0)] {
                        let vals = crate::space::u_basis_at(mesh, basis, side, x);
                        let gt = dofs.gtri(sub, side);
                        for a in 0..d {
                            for b in 0..d {
                                for comp in 0..2 {
                                    out.b.push((
                                        dofs.u_dof(gt, a),
                                        dofs.z_dof(gt, comp, b),
                                        -sign * vals[a] * vals[b] * edge.normal[comp] * ds,
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            EdgeTag::FuInterior => {
                // b*: +⟨q·n, v⟩, side-diagonal
                let (t0, t1) = (edge.tris[0].unwrap(), edge.tris[1].unwrap());
                for (&s, &w) in edge_rule.points.iter().zip(&edge_rule.weights) {
                    let x = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                    let ds = w * h;
                    for (side, sign) in [(t0, 1.0), (t1, -1.0)] {
                        let vals = crate::space::u_basis_at(mesh, basis, side, x);
                        let gt = dofs.gtri(sub, side);
                        for a in 0..d {
                            for b in 0..d {
                                for comp in 0..2 {
                                    out.bstar.push((
                                        dofs.z_dof(gt, comp, b),
                                        dofs.u_dof(gt, a),
                                        sign * vals[a] * vals[b] * edge.normal[comp] * ds,
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            EdgeTag::FuBoundary | EdgeTag::Interface(_) => {
                // b*: +(v, q·n_i) with the outward normal of the subdomain
                let t0 = edge.tris[0].unwrap();
                let gt = dofs.gtri(sub, t0);
                let n_out = match edge.tag {
                    EdgeTag::Interface(idx) => {
                        let sign = disc.partition.interfaces[idx].sign_for(sub);
                        geo::scale(edge.normal, sign)
                    }
                    _ => edge.normal,
                };
                for (&s, &w) in edge_rule.points.iter().zip(&edge_rule.weights) {
                    let x = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                    let ds = w * h;
                    let vals = crate::space::u_basis_at(mesh, basis, t0, x);
                    for a in 0..d {
                        for b in 0..d {
                            for comp in 0..2 {
                                out.bstar.push((
                                    dofs.z_dof(gt, comp, b),
                                    dofs.u_dof(gt, a),
                                    vals[a] * vals[b] * n_out[comp] * ds,
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Assemble the mortar coupling entries c_i(v, ψ) as (u dof, λ dof, value)
/// triplets, integrating over merged segments.
pub fn assemble_mortar_blocks(disc: &Discretization) -> Vec<(usize, usize, f64)> {
    let dofs = &disc.dofs;
    let basis = &disc.basis;
    let gauss = disc.edge_rule();
    let mut out = Vec::new();
    for (pos, itf_layout) in disc.layout.interfaces.iter().enumerate() {
        let itf = &disc.partition.interfaces[itf_layout.interface];
        let nm_trace = itf_layout.nonmortar_trace();
        let m_trace = itf_layout.mortar_trace();
        let (nm_sub, m_sub) = (itf_layout.nonmortar, itf_layout.mortar);
        let (nm_sign, m_sign) = (itf.sign_for(nm_sub), itf.sign_for(m_sub));
        for merged in &itf_layout.merged {
            let lam_edge_idx = dofs.lambda_edge_of(pos, merged.nonmortar_seg);
            let lam_edge = &dofs.lambda_edges[lam_edge_idx];
            let nm_seg = &nm_trace.segments[merged.nonmortar_seg];
            let m_seg = &m_trace.segments[merged.mortar_seg];
            let len = merged.t1 - merged.t0;
            for (&s, &w) in gauss.points.iter().zip(&gauss.weights) {
                let t = merged.t0 + s * len;
                let x = itf.point_at(t);
                let ds = w * len;
                for m in 0..=dofs.k {
                    let psi =
                        crate::basis::edge_legendre(m, (t - lam_edge.t0) / lam_edge.h, lam_edge.h);
                    let lam = dofs.lambda_dof(lam_edge_idx, m);
                    for (sub, tri, sign) in [
                        (nm_sub, nm_seg.fine_tri, nm_sign),
                        (m_sub, m_seg.fine_tri, m_sign),
                    ] {
                        let vals = crate::space::u_basis_at(&disc.fine[sub], basis, tri, x);
                        let gt = dofs.gtri(sub, tri);
                        for (a, &v) in vals.iter().enumerate() {
                            out.push((dofs.u_dof(gt, a), lam, sign * v * psi * ds));
                        }
                    }
                }
            }
        }
    }
    out
}

/// The assembled square saddle-point system.
pub struct SaddleSystem {
    pub n: usize,
    pub n_fields: usize,
    pub n_z: usize,
    pub n_u: usize,
    pub n_lambda: usize,
    /// Space-constraint multiplier count.
    pub n_mu: usize,
    /// Unmerged triplets; duplicates sum.
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

impl SaddleSystem {
    /// Largest absolute entry after duplicate merge, for residual scaling.
    pub fn max_abs_entry(&self) -> f64 {
        let mut merged: std::collections::HashMap<(usize, usize), f64> =
            std::collections::HashMap::new();
        for &(r, c, v) in &self.triplets {
            *merged.entry((r, c)).or_insert(0.0) += v;
        }
        merged.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// y = A·x from the triplets.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
        y
    }
}

/// Assemble the full system for a given source and boundary data (the
/// Dirichlet moments are already inside `disc.constraints`).
pub fn build_global_system(
    disc: &Discretization,
    f: &dyn Fn(Pt) -> f64,
    singular: &[Pt],
) -> Result<SaddleSystem> {
    let dofs = &disc.dofs;
    let n_fields = dofs.n_fields();
    let n_mu = disc.constraints.n_space_rows();
    let n = n_fields + n_mu;
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];

    for sub in 0..disc.partition.n_subdomains() {
        let blocks =
            assemble_subdomain_blocks(disc, sub, disc.partition.rho[sub], f, singular);
        // eq 1: M z − B* u (+ C_zᵀ μ) = 0
        triplets.extend(blocks.mass.iter().copied());
        triplets.extend(blocks.bstar.iter().map(|&(r, c, v)| (r, c, -v)));
        // eq 2: B z − C λ (+ C_uᵀ μ) = F
        triplets.extend(blocks.b.iter().copied());
        for (row, v) in blocks.load {
            rhs[row] += v;
        }
    }

    // mortar coupling in eq 2 and the matching rows as the λ equations
    let c_blocks = assemble_mortar_blocks(disc);
    triplets.extend(c_blocks.iter().map(|&(u, lam, v)| (u, lam, -v)));
    let n_mortar_rows = disc.constraints.count(crate::space::ConstraintKind::Mortar);
    if n_mortar_rows != dofs.n_lambda() {
        return Err(Error::Internal(format!(
            "{n_mortar_rows} mortar rows for {} multiplier dofs",
            dofs.n_lambda()
        )));
    }
    for (idx, row) in disc.constraints.mortar_rows().enumerate() {
        let r = dofs.lambda_offset() + idx;
        for &(j, v) in &row.entries {
            triplets.push((r, j, v));
        }
        rhs[r] = row.rhs;
    }

    // space-constraint rows and their multiplier columns
    for (mu, row) in disc.constraints.space_rows().enumerate() {
        let r = n_fields + mu;
        for &(j, v) in &row.entries {
            if j >= n_fields {
                return Err(Error::Internal(
                    "constraint row touches a non-field dof".into(),
                ));
            }
            triplets.push((r, j, v));
            triplets.push((j, r, v));
        }
        rhs[r] = row.rhs;
    }

    Ok(SaddleSystem {
        n,
        n_fields,
        n_z: dofs.n_z(),
        n_u: dofs.n_u(),
        n_lambda: dofs.n_lambda(),
        n_mu,
        triplets,
        rhs,
    })
}
