//! Residual a posteriori error estimators: the potential-L2 estimator η1 and
//! the energy estimator η2, their per-element breakdowns, coarse-mesh
//! indicators, and exact errors against a known solution.
//!
//! Each fine element carries five squared terms per estimator: volume
//! residual, flux/gradient mismatch, jump of z·n across interior initial
//! edges, interface flux mismatch against the multiplier, and the scalar
//! jump across subdivision and interface edges. Interface flux terms are
//! computed on both sides (each with its own trace of z_h and its own edge
//! length); the interface scalar-jump terms attach to non-mortar triangles
//! only. Estimator integrands are sampled with the same fixed rules as the
//! assembly even on the singular benchmarks: the exact volume-residual
//! integral diverges at the singular point, and the fixed rule keeps the
//! indicator finite while still flagging the offending elements.

use crate::assembly::Discretization;
use crate::error::{Error, Result};
use crate::geo::{self, Pt};
use crate::quadrature::TriangleRule;
use crate::solver::SolutionFields;
use crate::staggered::EdgeTag;

/// Which estimator drives marking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Potential-L2 estimator η1.
    Eta1,
    /// Energy estimator η2.
    #[default]
    Eta2,
}

/// How fine-element estimators aggregate to coarse indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateRule {
    /// Sum over the three children of each coarse triangle.
    #[default]
    Children,
    /// Sum over every fine element whose closure touches the coarse
    /// triangle, including across interfaces.
    Touching,
}

/// Squared term breakdown for one fine element.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalEstimator {
    /// [volume residual, flux/gradient mismatch, F_u^0 jump of z·n,
    ///  interface flux mismatch, scalar jump on F_p ∪ interface].
    pub eta_terms: [f64; 5],
    pub etabar_terms: [f64; 5],
}

impl LocalEstimator {
    pub fn eta_sq(&self) -> f64 {
        self.eta_terms.iter().sum()
    }

    pub fn etabar_sq(&self) -> f64 {
        self.etabar_terms.iter().sum()
    }
}

/// Per-fine-element estimators in global element order.
#[derive(Debug, Clone)]
pub struct LocalEstimatorField {
    pub local: Vec<LocalEstimator>,
}

impl LocalEstimatorField {
    pub fn of(&self, kind: EstimatorKind, gtri: usize) -> f64 {
        match kind {
            EstimatorKind::Eta1 => self.local[gtri].eta_sq(),
            EstimatorKind::Eta2 => self.local[gtri].etabar_sq(),
        }
    }
}

/// Squared indicators on the coarse mesh, in global coarse element order.
#[derive(Debug, Clone)]
pub struct CoarseIndicatorField {
    pub xi_sq: Vec<f64>,
    /// Global coarse id offset per subdomain; the last entry is the total.
    pub offsets: Vec<usize>,
}

impl CoarseIndicatorField {
    pub fn total(&self) -> f64 {
        self.xi_sq.iter().sum()
    }
}

/// Compute both estimators for every fine element.
///
/// `rho` is passed explicitly (rather than read from the partition) so the
/// term-level ρ-homogeneity is testable on fixed fields.
pub fn compute_local_estimators(
    disc: &Discretization,
    fields: &SolutionFields,
    rho: &[f64],
    f: &dyn Fn(Pt) -> f64,
) -> Result<LocalEstimatorField> {
    let vol = disc.volume_rule();
    let edge_rule = disc.edge_rule();
    let mut local = vec![LocalEstimator::default(); disc.dofs.n_tri];

    for (sub, mesh) in disc.fine.iter().enumerate() {
        let rho_i = rho[sub];
        // volume terms
        for t in 0..mesh.n_tris() {
            let gt = disc.dofs.gtri(sub, t);
            let [a, b, c] = mesh.tri_points(t);
            let h = mesh.h_tri[t];
            let r_sq = vol.integrate(a, b, c, |x| {
                let r = f(x) + fields.z_div(disc, sub, t, x);
                r * r
            });
            let d_sq = vol.integrate(a, b, c, |x| {
                let z = fields.z_value(disc, sub, t, x);
                let g = fields.u_grad(disc, sub, t, x);
                let dx = z[0] / rho_i - g[0];
                let dy = z[1] / rho_i - g[1];
                dx * dx + dy * dy
            });
            let est = &mut local[gt];
            est.eta_terms[0] = h.powi(4) * r_sq;
            est.etabar_terms[0] = h * h / rho_i * r_sq;
            est.eta_terms[1] = h * h * d_sq;
            est.etabar_terms[1] = rho_i * d_sq;
        }
        // edge terms local to the subdomain
        for edge in &mesh.edges {
            let (p0, p1) = (mesh.vertices[edge.v[0]], mesh.vertices[edge.v[1]]);
            let h = edge.h;
            match edge.tag {
                EdgeTag::FuInterior => {
                    let (t0, t1) = (edge.tris[0].unwrap(), edge.tris[1].unwrap());
                    let mut j_sq = 0.0;
                    for (&s, &w) in edge_rule.points.iter().zip(&edge_rule.weights) {
                        let x = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                        let z0 = fields.z_value(disc, sub, t0, x);
                        let z1 = fields.z_value(disc, sub, t1, x);
                        let jump = geo::dot(geo::sub(z0, z1), edge.normal);
                        j_sq += w * h * jump * jump;
                    }
                    for t in [t0, t1] {
                        let est = &mut local[disc.dofs.gtri(sub, t)];
                        est.eta_terms[2] += h.powi(3) * j_sq;
                        est.etabar_terms[2] += h / rho_i * j_sq;
                    }
                }
                EdgeTag::Fp => {
                    let (t0, t1) = (edge.tris[0].unwrap(), edge.tris[1].unwrap());
                    let mut u_sq = 0.0;
                    for (&s, &w) in edge_rule.points.iter().zip(&edge_rule.weights) {
                        let x = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                        let jump =
                            fields.u_value(disc, sub, t0, x) - fields.u_value(disc, sub, t1, x);
                        u_sq += w * h * jump * jump;
                    }
                    for t in [t0, t1] {
                        let est = &mut local[disc.dofs.gtri(sub, t)];
                        est.eta_terms[4] += h * u_sq;
                        est.etabar_terms[4] += rho_i / h * u_sq;
                    }
                }
                _ => {}
            }
        }
    }

    // interface terms over merged segments
    for (pos, itf_layout) in disc.layout.interfaces.iter().enumerate() {
        let itf = &disc.partition.interfaces[itf_layout.interface];
        let nm_sub = itf_layout.nonmortar;
        let nm_trace = itf_layout.nonmortar_trace();
        let m_trace = itf_layout.mortar_trace();
        let tol = 1e-9 * itf.length;

        // coverage check: merged pieces must tile every trace segment
        for (trace, nonmortar_side) in [(nm_trace, true), (m_trace, false)] {
            for (si, seg) in trace.segments.iter().enumerate() {
                let covered: f64 = itf_layout
                    .merged
                    .iter()
                    .filter(|mg| {
                        if nonmortar_side {
                            mg.nonmortar_seg == si
                        } else {
                            mg.mortar_seg == si
                        }
                    })
                    .map(|mg| mg.t1 - mg.t0)
                    .sum();
                if (covered - (seg.t1 - seg.t0)).abs() > tol {
                    return Err(Error::Internal(format!(
                        "trace segment {si} on interface {} lacks multiplier coverage",
                        itf_layout.interface
                    )));
                }
            }
        }

        for merged in &itf_layout.merged {
            let lam_edge_idx = disc.dofs.lambda_edge_of(pos, merged.nonmortar_seg);
            let lam_edge = disc.dofs.lambda_edges[lam_edge_idx];
            let nm_seg = nm_trace.segments[merged.nonmortar_seg];
            let m_seg = m_trace.segments[merged.mortar_seg];
            let len = merged.t1 - merged.t0;

            // flux mismatch, each side with its own trace and edge length
            for (side_sub, seg) in [(nm_sub, nm_seg), (itf_layout.mortar, m_seg)] {
                let sign = itf.sign_for(side_sub);
                let mut flux_sq = 0.0;
                for (&s, &w) in edge_rule.points.iter().zip(&edge_rule.weights) {
                    let t = merged.t0 + s * len;
                    let x = itf.point_at(t);
                    let lam = fields.lambda_value(disc, pos, t);
                    let z = fields.z_value(disc, side_sub, seg.fine_tri, x);
                    let zn = geo::dot(z, itf.normal) * sign;
                    let diff = lam * sign - zn;
                    flux_sq += w * len * diff * diff;
                }
                let gt = disc.dofs.gtri(side_sub, seg.fine_tri);
                let h_e = seg.t1 - seg.t0;
                let est = &mut local[gt];
                est.eta_terms[3] += h_e.powi(3) * flux_sq;
                est.etabar_terms[3] += h_e / rho[side_sub] * flux_sq;
            }

            // scalar jump, attached to the non-mortar triangle only
            let mut jump_sq = 0.0;
            for (&s, &w) in edge_rule.points.iter().zip(&edge_rule.weights) {
                let t = merged.t0 + s * len;
                let x = itf.point_at(t);
                let u_nm = fields.u_value(disc, nm_sub, nm_seg.fine_tri, x);
                let u_m = fields.u_value(disc, itf_layout.mortar, m_seg.fine_tri, x);
                let diff = u_nm - u_m;
                jump_sq += w * len * diff * diff;
            }
            let gt = disc.dofs.gtri(nm_sub, nm_seg.fine_tri);
            let h_e = lam_edge.h;
            let est = &mut local[gt];
            est.eta_terms[4] += h_e * jump_sq;
            est.etabar_terms[4] += rho[nm_sub] / h_e * jump_sq;
        }
    }

    Ok(LocalEstimatorField { local })
}

/// Aggregate fine-element squared estimators into coarse indicators ξ².
pub fn aggregate_indicators(
    local: &LocalEstimatorField,
    kind: EstimatorKind,
    disc: &Discretization,
    rule: AggregateRule,
) -> CoarseIndicatorField {
    let mut offsets = Vec::with_capacity(disc.coarse.len() + 1);
    let mut acc = 0;
    for m in &disc.coarse {
        offsets.push(acc);
        acc += m.n_tris();
    }
    offsets.push(acc);
    let mut xi_sq = vec![0.0; acc];

    match rule {
        AggregateRule::Children => {
            for (sub, mesh) in disc.fine.iter().enumerate() {
                for t in 0..mesh.n_tris() {
                    let gt = disc.dofs.gtri(sub, t);
                    xi_sq[offsets[sub] + mesh.parent[t]] += local.of(kind, gt);
                }
            }
        }
        AggregateRule::Touching => {
            aggregate_touching(local, kind, disc, &offsets, &mut xi_sq);
        }
    }
    CoarseIndicatorField { xi_sq, offsets }
}

fn aggregate_touching(
    local: &LocalEstimatorField,
    kind: EstimatorKind,
    disc: &Discretization,
    offsets: &[usize],
    xi_sq: &mut [f64],
) {
    let tol = 1e-12;
    // within each subdomain: children of vertex-sharing coarse neighbors
    for (sub, coarse) in disc.coarse.iter().enumerate() {
        let fine = &disc.fine[sub];
        let mut by_vertex: std::collections::HashMap<usize, Vec<usize>> =
            std::collections::HashMap::new();
        for (c, tri) in coarse.tris.iter().enumerate() {
            for &v in tri {
                by_vertex.entry(v).or_default().push(c);
            }
        }
        for c in 0..coarse.n_tris() {
            let [ca, cb, cc] = coarse.tri_points(c);
            let mut candidates: Vec<usize> = coarse.tris[c]
                .iter()
                .flat_map(|v| by_vertex[v].iter().copied())
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            for parent in candidates {
                for child in 3 * parent..3 * parent + 3 {
                    let [fa, fb, fc] = fine.tri_points(child);
                    let touches = [fa, fb, fc]
                        .iter()
                        .any(|&p| geo::point_in_triangle(p, ca, cb, cc, tol))
                        || [ca, cb, cc]
                            .iter()
                            .any(|&p| geo::point_in_triangle(p, fa, fb, fc, tol));
                    if touches {
                        xi_sq[offsets[sub] + c] += local.of(kind, disc.dofs.gtri(sub, child));
                    }
                }
            }
        }
    }
    // across interfaces: 1-D extent overlap between fine interface edges and
    // coarse triangles of the opposite side
    for itf_layout in &disc.layout.interfaces {
        let itf = &disc.partition.interfaces[itf_layout.interface];
        let tol1 = 1e-12 * itf.length;
        for (side, other) in [
            (&itf_layout.trace_lo, &itf_layout.trace_hi),
            (&itf_layout.trace_hi, &itf_layout.trace_lo),
        ] {
            let fine_sub = side.side_subdomain;
            for seg in &side.segments {
                let gt = disc.dofs.gtri(fine_sub, seg.fine_tri);
                let value = local.of(kind, gt);
                for oseg in &other.segments {
                    if seg.t1 >= oseg.t0 - tol1 && oseg.t1 >= seg.t0 - tol1 {
                        let parent = disc.fine[other.side_subdomain].parent[oseg.fine_tri];
                        xi_sq[offsets[other.side_subdomain] + parent] += value;
                    }
                }
            }
        }
    }
}

/// Global estimators (η1, η2), summed in canonical element order.
pub fn global_estimates(local: &LocalEstimatorField) -> (f64, f64) {
    let mut eta1_sq = 0.0;
    let mut eta2_sq = 0.0;
    for l in &local.local {
        eta1_sq += l.eta_sq();
        eta2_sq += l.etabar_sq();
    }
    (eta1_sq.sqrt(), eta2_sq.sqrt())
}

/// Exact errors ‖u − u_h‖₀ and ‖ρ^{1/2}∇(u − u_h)‖₀ with a degree-10 rule;
/// elements touching a flagged singular point use three levels of local
/// quadrature subdivision.
pub fn compute_exact_errors(
    disc: &Discretization,
    fields: &SolutionFields,
    exact_u: &dyn Fn(Pt) -> f64,
    exact_grad: &dyn Fn(Pt) -> Pt,
    rho: &[f64],
    singular: &[Pt],
) -> (f64, f64) {
    let rule = TriangleRule::of_degree(10);
    let mut l2 = 0.0;
    let mut energy = 0.0;
    for (sub, mesh) in disc.fine.iter().enumerate() {
        let rho_i = rho[sub];
        for t in 0..mesh.n_tris() {
            let [a, b, c] = mesh.tri_points(t);
            let mut f_l2 = |x: Pt| {
                let d = exact_u(x) - fields.u_value(disc, sub, t, x);
                d * d
            };
            let mut f_en = |x: Pt| {
                let ge = exact_grad(x);
                let gh = fields.u_grad(disc, sub, t, x);
                let dx = ge[0] - gh[0];
                let dy = ge[1] - gh[1];
                rho_i * (dx * dx + dy * dy)
            };
            if disc.touches_singular(sub, t, singular) {
                let levels = crate::assembly::SINGULAR_SUBDIVISION_LEVELS;
                l2 += rule.integrate_subdivided(a, b, c, levels, &mut f_l2);
                energy += rule.integrate_subdivided(a, b, c, levels, &mut f_en);
            } else {
                l2 += rule.integrate(a, b, c, f_l2);
                energy += rule.integrate(a, b, c, f_en);
            }
        }
    }
    (l2.sqrt(), energy.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_global_system;
    use crate::mesh::{build_initial_mesh, CoarseMesh, Diagonal};
    use crate::mortar::MortarRule;
    use crate::partition::{Rect, SubdomainPartition};
    use crate::solver::solve;
    use crate::space::SpaceConfig;

    fn patch_disc() -> Discretization {
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
    fn patch_solution_has_zero_estimators() {
        let disc = patch_disc();
        let sys = build_global_system(&disc, &|_| 0.0, &[]).unwrap();
        let fields = solve(&sys).unwrap();
        let local =
            compute_local_estimators(&disc, &fields, &disc.partition.rho, &|_| 0.0).unwrap();
        for l in &local.local {
            assert!(l.eta_sq() < 1e-18);
            assert!(l.etabar_sq() < 1e-18);
        }
        let (eta1, eta2) = global_estimates(&local);
        assert!(eta1 < 1e-9);
        assert!(eta2 < 1e-9);
    }

    #[test]
    fn piecewise_constant_jump_terms() {
        // isoceles triangle whose two forward centroid edges have length 1/2
        let a = 3.0f64.sqrt() / 2.0;
        let p = SubdomainPartition::single(Rect::new(-1.0, -1.0, 2.0, 2.0), 1.0).unwrap();
        let coarse = CoarseMesh::from_triangles(
            0,
            vec![[0.0, 0.0], [a, 0.0], [a / 2.0, 0.75]],
            vec![[0, 1, 2]],
            15.0,
        )
        .unwrap();
        let disc = Discretization::build(
            &p,
            &[coarse],
            SpaceConfig::new(1).unwrap(),
            MortarRule::FinerSide,
            &|_| 0.0,
        )
        .unwrap();
        // F_p edges from vertices 0 and 1 to the centroid have length 1/2
        let fine = &disc.fine[0];
        let g = fine.centroid_vertex[0];
        for e in &fine.edges {
            if e.tag == EdgeTag::Fp {
                let other = if e.v[0] == g { e.v[1] } else { e.v[0] };
                if other != 2 {
                    assert!((e.h - 0.5).abs() < 1e-12, "edge length {}", e.h);
                }
            }
        }
        // u ≡ 1 on child 0 = (v0, v1, g), u ≡ 0 elsewhere; z ≡ 0, f ≡ 0
        let dofs = &disc.dofs;
        let mut u = vec![0.0; dofs.n_u()];
        for b in 0..dofs.d {
            u[dofs.u_dof(0, b) - dofs.u_offset()] = 1.0;
        }
        let fields = crate::solver::SolutionFields::from_coefficients(
            vec![0.0; dofs.n_z()],
            u,
            vec![0.0; dofs.n_lambda()],
        );
        let local = compute_local_estimators(&disc, &fields, &[1.0], &|_| 0.0).unwrap();
        // children 1 and 2 each see exactly one jumping edge of length 1/2:
        // η gains h_e·‖⟦u⟧‖² = 0.5·0.5, η̄ gains h_e⁻¹·‖⟦u⟧‖² = 2·0.5
        for child in [1usize, 2] {
            let l = &local.local[child];
            assert!((l.eta_terms[4] - 0.25).abs() < 1e-12, "{:?}", l.eta_terms);
            assert!((l.etabar_terms[4] - 1.0).abs() < 1e-12);
            for i in 0..4 {
                assert!(l.eta_terms[i].abs() < 1e-15);
                assert!(l.etabar_terms[i].abs() < 1e-15);
            }
        }
        // child 0 sees both jumping edges
        let l0 = &local.local[0];
        assert!((l0.eta_terms[4] - 0.5).abs() < 1e-12);
        assert!((l0.etabar_terms[4] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn volume_residual_terms() {
        // coarse triangle whose first child is the unit right triangle
        let p = SubdomainPartition::single(Rect::new(-2.0, -2.0, 2.0, 2.0), 1.0).unwrap();
        let coarse = CoarseMesh::from_triangles(
            0,
            vec![[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]],
            vec![[0, 1, 2]],
            15.0,
        )
        .unwrap();
        let disc = Discretization::build(
            &p,
            &[coarse],
            SpaceConfig::new(1).unwrap(),
            MortarRule::FinerSide,
            &|_| 0.0,
        )
        .unwrap();
        let fine = &disc.fine[0];
        assert!((fine.tri_area(0) - 0.5).abs() < 1e-14);
        assert!((fine.h_tri[0] - 2.0f64.sqrt()).abs() < 1e-14);
        let dofs = &disc.dofs;
        let fields = crate::solver::SolutionFields::from_coefficients(
            vec![0.0; dofs.n_z()],
            vec![0.0; dofs.n_u()],
            vec![0.0; dofs.n_lambda()],
        );
        // f + ∇·z ≡ 1 on the unit right triangle: η term h⁴‖1‖² = 4·(1/2),
        // η̄ term h²‖1‖² = 2·(1/2)
        let local = compute_local_estimators(&disc, &fields, &[1.0], &|_| 1.0).unwrap();
        let l0 = &local.local[0];
        assert!((l0.eta_terms[0] - 2.0).abs() < 1e-12, "{}", l0.eta_terms[0]);
        assert!((l0.etabar_terms[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_homogeneity_of_terms() {
        let disc = patch_disc();
        let dofs = &disc.dofs;
        // arbitrary fixed fields
        let mut u = vec![0.0; dofs.n_u()];
        let mut z = vec![0.0; dofs.n_z()];
        for (i, v) in u.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        for (i, v) in z.iter_mut().enumerate() {
            *v = (i as f64 * 0.13).cos();
        }
        let lam = vec![0.25; dofs.n_lambda()];
        let fields = crate::solver::SolutionFields::from_coefficients(z, u, lam);
        let f = |x: Pt| x[0] - x[1];
        let base = compute_local_estimators(&disc, &fields, &[1.3, 0.8], &f).unwrap();
        let c = 5.0;
        let scaled = compute_local_estimators(&disc, &fields, &[1.3 * c, 0.8 * c], &f).unwrap();
        for (b, s) in base.local.iter().zip(&scaled.local) {
            // η̄ volume term scales by 1/c, η̄ scalar-jump term by c
            assert!(
                (s.etabar_terms[0] - b.etabar_terms[0] / c).abs()
                    <= 1e-14 * b.etabar_terms[0].max(1e-30)
            );
            assert!(
                (s.etabar_terms[4] - b.etabar_terms[4] * c).abs()
                    <= 1e-14 * (b.etabar_terms[4] * c).max(1e-30)
            );
            // η terms without ρ are unchanged
            assert_eq!(s.eta_terms[0], b.eta_terms[0]);
            assert_eq!(s.eta_terms[4], b.eta_terms[4]);
        }
    }

    #[test]
    fn aggregation_children_sums() {
        let disc = patch_disc();
        let n = disc.dofs.n_tri;
        let mut local = LocalEstimatorField { local: vec![LocalEstimator::default(); n] };
        for (i, l) in local.local.iter_mut().enumerate() {
            l.eta_terms[0] = (i + 1) as f64;
        }
        let agg = aggregate_indicators(&local, EstimatorKind::Eta1, &disc, AggregateRule::Children);
        // children {1,2,3} of the first coarse triangle sum to 6
        assert!((agg.xi_sq[0] - 6.0).abs() < 1e-14);
        // total matches the squared global estimator
        let (eta1, _) = global_estimates(&local);
        assert!((agg.total() - eta1 * eta1).abs() <= 1e-12 * agg.total());
    }

    #[test]
    fn aggregation_touching_dominates_children() {
        let disc = patch_disc();
        let n = disc.dofs.n_tri;
        let mut local = LocalEstimatorField { local: vec![LocalEstimator::default(); n] };
        for l in local.local.iter_mut() {
            l.eta_terms[0] = 1.0;
        }
        let children =
            aggregate_indicators(&local, EstimatorKind::Eta1, &disc, AggregateRule::Children);
        let touching =
            aggregate_indicators(&local, EstimatorKind::Eta1, &disc, AggregateRule::Touching);
        for (c, t) in children.xi_sq.iter().zip(&touching.xi_sq) {
            assert!(t >= c, "touching must dominate children: {t} < {c}");
        }
    }

    #[test]
    fn exact_error_of_linear_gap() {
        // u = x against u_h = 0 on the unit square
        let p = SubdomainPartition::single(Rect::new(0.0, 0.0, 1.0, 1.0), 1.0).unwrap();
        let coarse = build_initial_mesh(&p, &[2], Diagonal::default()).unwrap();
        let disc = Discretization::build(
            &p,
            &coarse,
            SpaceConfig::new(1).unwrap(),
            MortarRule::FinerSide,
            &|_| 0.0,
        )
        .unwrap();
        let dofs = &disc.dofs;
        let fields = crate::solver::SolutionFields::from_coefficients(
            vec![0.0; dofs.n_z()],
            vec![0.0; dofs.n_u()],
            vec![0.0; dofs.n_lambda()],
        );
        let (l2, en) =
            compute_exact_errors(&disc, &fields, &|x| x[0], &|_| [1.0, 0.0], &[1.0], &[]);
        assert!((l2 - 1.0 / 3.0f64.sqrt()).abs() < 1e-12);
        assert!((en - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_error_matches_high_order_oracle() {
        // u = x² solved with k = 1 on a fixed two-subdomain mesh
        let p = SubdomainPartition::two_halves([1.0, 1.0]).unwrap();
        let coarse = build_initial_mesh(&p, &[2, 1], Diagonal::default()).unwrap();
        let u = |x: Pt| x[0] * x[0];
        let disc = Discretization::build(
            &p,
            &coarse,
            SpaceConfig::new(1).unwrap(),
            MortarRule::FinerSide,
            &u,
        )
        .unwrap();
        let sys = build_global_system(&disc, &|_| -2.0, &[]).unwrap();
        let fields = solve(&sys).unwrap();
        let (l2, _) =
            compute_exact_errors(&disc, &fields, &u, &|x| [2.0 * x[0], 0.0], &[1.0, 1.0], &[]);
        // independent degree-20 oracle
        let rule = TriangleRule::of_degree(20);
        let mut acc = 0.0;
        for (sub, mesh) in disc.fine.iter().enumerate() {
            for t in 0..mesh.n_tris() {
                let [a, b, c] = mesh.tri_points(t);
                acc += rule.integrate(a, b, c, |x| {
                    let d = u(x) - fields.u_value(&disc, sub, t, x);
                    d * d
                });
            }
        }
        let oracle = acc.sqrt();
        assert!(
            (l2 - oracle).abs() <= 1e-6 * oracle,
            "degree-10 {l2} vs degree-20 {oracle}"
        );
    }
}
