//! Degree-of-freedom layout and the linear constraints that carve the
//! staggered spaces out of the raw elementwise polynomial fields.
//!
//! Raw layout: per fine triangle, d_k = (k+1)(k+2)/2 coefficients for each of
//! the two flux components, then d_k for the scalar field; globally the flux
//! block comes first, then the scalar block, then the interface multipliers
//! ((k+1) orthonormal Legendre coefficients per non-mortar interface edge).
//!
//! Constraints (all edge moment conditions, exact by Gauss quadrature):
//! continuity of the scalar field across interior initial edges, Dirichlet
//! trace moments on boundary edges, normal flux continuity across the
//! subdivision edges, and the mortar matching condition across interfaces.

use crate::basis::{dim_pk, edge_legendre, ReferenceBasis};
use crate::error::{Error, Result};
use crate::geo::Pt;
use crate::mortar::MortarLayout;
use crate::partition::SubdomainPartition;
use crate::quadrature::SegmentRule;
use crate::staggered::{EdgeTag, FineMesh};

/// Polynomial order of the discrete spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceConfig {
    pub k: usize,
}

impl SpaceConfig {
    pub fn new(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidArgument(
                "polynomial degree must be at least 1".into(),
            ));
        }
        Ok(SpaceConfig { k })
    }
}

/// One non-mortar interface fine edge carrying (k+1) multiplier dofs.
#[derive(Debug, Clone, Copy)]
pub struct LambdaEdge {
    pub interface: usize,
    /// Index into the non-mortar trace's segments.
    pub seg: usize,
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
}

/// Global dof bookkeeping: flux block, scalar block, multiplier block.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub k: usize,
    /// Scalar coefficients per triangle.
    pub d: usize,
    /// Global fine-triangle offset per subdomain; the last entry is the
    /// total count.
    pub tri_offset: Vec<usize>,
    pub n_tri: usize,
    pub lambda_edges: Vec<LambdaEdge>,
    /// Offset of each interface's lambda edges in `lambda_edges`.
    pub lambda_offset_by_interface: Vec<usize>,
}

impl DofMap {
    pub fn build(fine: &[FineMesh], layout: &MortarLayout, cfg: SpaceConfig) -> Self {
        let mut tri_offset = Vec::with_capacity(fine.len() + 1);
        let mut acc = 0;
        for mesh in fine {
            tri_offset.push(acc);
            acc += mesh.n_tris();
        }
        tri_offset.push(acc);
        let mut lambda_edges = Vec::new();
        let mut lambda_offset_by_interface = Vec::with_capacity(layout.interfaces.len());
        for itf in &layout.interfaces {
            lambda_offset_by_interface.push(lambda_edges.len());
            let trace = itf.nonmortar_trace();
            for (seg, s) in trace.segments.iter().enumerate() {
                lambda_edges.push(LambdaEdge {
                    interface: itf.interface,
                    seg,
                    t0: s.t0,
                    t1: s.t1,
                    h: s.t1 - s.t0,
                });
            }
        }
        DofMap {
            k: cfg.k,
            d: dim_pk(cfg.k),
            tri_offset,
            n_tri: acc,
            lambda_edges,
            lambda_offset_by_interface,
        }
    }

    /// Global fine-triangle index.
    pub fn gtri(&self, subdomain: usize, local: usize) -> usize {
        self.tri_offset[subdomain] + local
    }

    pub fn n_z(&self) -> usize {
        2 * self.d * self.n_tri
    }

    pub fn n_u(&self) -> usize {
        self.d * self.n_tri
    }

    pub fn n_lambda(&self) -> usize {
        (self.k + 1) * self.lambda_edges.len()
    }

    /// Total field unknowns (z, u, λ).
    pub fn n_fields(&self) -> usize {
        self.n_z() + self.n_u() + self.n_lambda()
    }

    pub fn u_offset(&self) -> usize {
        self.n_z()
    }

    pub fn lambda_offset(&self) -> usize {
        self.n_z() + self.n_u()
    }

    /// Flux dof: component 0 is the x part, 1 the y part.
    pub fn z_dof(&self, gtri: usize, comp: usize, b: usize) -> usize {
        gtri * 2 * self.d + comp * self.d + b
    }

    pub fn u_dof(&self, gtri: usize, b: usize) -> usize {
        self.u_offset() + gtri * self.d + b
    }

    pub fn lambda_dof(&self, edge: usize, m: usize) -> usize {
        self.lambda_offset() + edge * (self.k + 1) + m
    }

    /// Lambda edge index for a non-mortar trace segment.
    pub fn lambda_edge_of(&self, interface_pos: usize, seg: usize) -> usize {
        self.lambda_offset_by_interface[interface_pos] + seg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// ∫_e ⟦v⟧ q ds = 0 on interior initial edges.
    UContinuity,
    /// ∫_e v q ds = ∫_e g q ds on boundary initial edges.
    UDirichlet,
    /// ∫_e ⟦z·n⟧ w ds = 0 on subdivision edges.
    ZNormal,
    /// Σ_i c_i(u, ψ) = 0 across an interface, per multiplier basis ψ.
    Mortar,
}

/// One sparse linear functional on the raw coefficients.
#[derive(Debug, Clone)]
pub struct ConstraintRow {
    pub kind: ConstraintKind,
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl ConstraintRow {
    /// Residual of the row on a raw coefficient vector.
    pub fn apply(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, c)| c * x[j]).sum::<f64>() - self.rhs
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintSet {
    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.rows.iter().filter(|r| r.kind == kind).count()
    }

    /// Rows that receive their own multiplier in the saddle system
    /// (everything except the mortar rows, which are the λ equations).
    pub fn space_rows(&self) -> impl Iterator<Item = &ConstraintRow> {
        self.rows.iter().filter(|r| r.kind != ConstraintKind::Mortar)
    }

    pub fn mortar_rows(&self) -> impl Iterator<Item = &ConstraintRow> {
        self.rows.iter().filter(|r| r.kind == ConstraintKind::Mortar)
    }

    pub fn n_space_rows(&self) -> usize {
        self.rows.len() - self.count(ConstraintKind::Mortar)
    }
}

/// Basis values of a triangle's scalar field at a physical point.
pub fn u_basis_at(fine: &FineMesh, basis: &ReferenceBasis, tri: usize, x: Pt) -> Vec<f64> {
    let r = fine.affine_map(tri).to_reference(x);
    basis.eval(r)
}

/// Build all constraint rows in deterministic order: per subdomain, per fine
/// edge, then the mortar rows per interface.
pub fn build_constraints(
    fine: &[FineMesh],
    partition: &SubdomainPartition,
    layout: &MortarLayout,
    dofs: &DofMap,
    basis: &ReferenceBasis,
    g: &dyn Fn(Pt) -> f64,
) -> Result<ConstraintSet> {
    let k = dofs.k;
    let gauss = SegmentRule::with_points(k + 1);
    let gauss_g = SegmentRule::with_points(k + 3);
    let mut rows = Vec::new();

    for mesh in fine {
        if !mesh.classified {
            return Err(Error::MeshInconsistency(
                "fine mesh must be classified before building constraints".into(),
            ));
        }
        let sub = mesh.subdomain;
        for edge in &mesh.edges {
            let (p0, p1) = (mesh.vertices[edge.v[0]], mesh.vertices[edge.v[1]]);
            let h = edge.h;
            match edge.tag {
                EdgeTag::FuInterior | EdgeTag::Fp => {
                    let (t0, t1) = (edge.tris[0].unwrap(), edge.tris[1].unwrap());
                    let flux = edge.tag == EdgeTag::Fp;
                    for m in 0..=k {
                        let mut entries: Vec<(usize, f64)> = Vec::new();
                        for (&s, &w) in gauss.points.iter().zip(&gauss.weights) {
                            let x = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                            let psi = edge_legendre(m, s, h) * w * h;
                            for (side, sign) in [(t0, 1.0), (t1, -1.0)] {
                                let values = u_basis_at(mesh, basis, side, x);
                                let gt = dofs.gtri(sub, side);
                                for (b, &v) in values.iter().enumerate() {
                                    if flux {
                                        for comp in 0..2 {
                                            entries.push((
                                                dofs.z_dof(gt, comp, b),
                                                sign * psi * v * edge.normal[comp],
                                            ));
                                        }
                                    } else {
                                        entries.push((dofs.u_dof(gt, b), sign * psi * v));
                                    }
                                }
                            }
                        }
                        rows.push(ConstraintRow {
                            kind: if flux {
                                ConstraintKind::ZNormal
                            } else {
                                ConstraintKind::UContinuity
                            },
                            entries: compress(entries),
                            rhs: 0.0,
                        });
                    }
                }
                EdgeTag::FuBoundary => {
                    let t0 = edge.tris[0].unwrap();
                    let gt = dofs.gtri(sub, t0);
                    for m in 0..=k {
                        let mut entries: Vec<(usize, f64)> = Vec::new();
                        for (&s, &w) in gauss.points.iter().zip(&gauss.weights) {
                            let x = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                            let psi = edge_legendre(m, s, h) * w * h;
                            let values = u_basis_at(mesh, basis, t0, x);
                            for (b, &v) in values.iter().enumerate() {
                                entries.push((dofs.u_dof(gt, b), psi * v));
                            }
                        }
                        let mut rhs = 0.0;
                        for (&s, &w) in gauss_g.points.iter().zip(&gauss_g.weights) {
                            let x = [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
                            rhs += edge_legendre(m, s, h) * w * h * g(x);
                        }
                        rows.push(ConstraintRow {
                            kind: ConstraintKind::UDirichlet,
                            entries: compress(entries),
                            rhs,
                        });
                    }
                }
                EdgeTag::Interface(_) => {} // handled by the mortar rows
            }
        }
    }

    // Mortar rows: Σ_i c_i(u, ψ) = 0 with ψ the orthonormal Legendre basis
    // on each non-mortar edge, integrated over merged segments.
    for itf_layout in &layout.interfaces {
        let itf = &partition.interfaces[itf_layout.interface];
        let nm_trace = itf_layout.nonmortar_trace();
        let m_trace = itf_layout.mortar_trace();
        let (nm_sub, m_sub) = (itf_layout.nonmortar, itf_layout.mortar);
        let (nm_sign, m_sign) = (itf.sign_for(nm_sub), itf.sign_for(m_sub));
        for (seg_idx, lam_edge) in nm_trace.segments.iter().enumerate() {
            let h = lam_edge.t1 - lam_edge.t0;
            for m in 0..=k {
                let mut entries: Vec<(usize, f64)> = Vec::new();
                for merged in itf_layout.merged.iter().filter(|s| s.nonmortar_seg == seg_idx) {
                    let len = merged.t1 - merged.t0;
                    let m_seg = &m_trace.segments[merged.mortar_seg];
                    for (&s, &w) in gauss.points.iter().zip(&gauss.weights) {
                        let t = merged.t0 + s * len;
                        let x = itf.point_at(t);
                        let psi = edge_legendre(m, (t - lam_edge.t0) / h, h) * w * len;
                        for (sub, tri, sign) in [
                            (nm_sub, lam_edge.fine_tri, nm_sign),
                            (m_sub, m_seg.fine_tri, m_sign),
                        ] {
                            let values = u_basis_at(&fine[sub], basis, tri, x);
                            let gt = dofs.gtri(sub, tri);
                            for (b, &v) in values.iter().enumerate() {
                                entries.push((dofs.u_dof(gt, b), sign * psi * v));
                            }
                        }
                    }
                }
                rows.push(ConstraintRow {
                    kind: ConstraintKind::Mortar,
                    entries: compress(entries),
                    rhs: 0.0,
                });
            }
        }
    }

    Ok(ConstraintSet { rows })
}

/// Accumulate duplicate column indices.
fn compress(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (j, c) in entries {
        match out.last_mut() {
            Some((last, acc)) if *last == j => *acc += c,
            _ => out.push((j, c)),
        }
    }
    out
}
