//! Interface trace meshes, mortar/non-mortar side selection, and the merged
//! 1-D segmentation used for exact cross-grid quadrature.
//!
//! All cross-grid integrals (mortar matching, interface coupling, interface
//! estimator terms) run over merged segments, on which every integrand is a
//! plain polynomial, so fixed-order Gauss rules are exact.

use crate::error::{Error, Result};
use crate::partition::SubdomainPartition;
use crate::staggered::{EdgeTag, FineMesh};

/// Rule for selecting the non-mortar side of an interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MortarRule {
    /// The side with more interface segments is non-mortar; tie goes to the
    /// lower subdomain index.
    #[default]
    FinerSide,
    /// The lower-index subdomain is always non-mortar.
    LowerIndex,
    /// The higher-index subdomain is always non-mortar.
    HigherIndex,
}

/// Restriction of one subdomain's fine mesh to an interface.
#[derive(Debug, Clone)]
pub struct TraceMesh {
    pub interface: usize,
    pub side_subdomain: usize,
    /// Strictly increasing arclength breakpoints from 0 to |Γ_ij|.
    pub breakpoints: Vec<f64>,
    pub segments: Vec<TraceSegment>,
}

/// One interface fine edge of one side, in arclength coordinates.
#[derive(Debug, Clone, Copy)]
pub struct TraceSegment {
    pub t0: f64,
    pub t1: f64,
    /// Local fine triangle owning the edge.
    pub fine_tri: usize,
    pub fine_edge: usize,
}

impl TraceMesh {
    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }
}

/// A maximal interval lying inside exactly one segment of each side.
#[derive(Debug, Clone, Copy)]
pub struct MergedSegment {
    pub t0: f64,
    pub t1: f64,
    /// Index into the non-mortar trace's segments.
    pub nonmortar_seg: usize,
    /// Index into the mortar trace's segments.
    pub mortar_seg: usize,
}

/// Everything the assembly needs about one interface.
#[derive(Debug, Clone)]
pub struct InterfaceLayout {
    pub interface: usize,
    pub nonmortar: usize,
    pub mortar: usize,
    /// Traces keyed by subdomain: `.0` for the pair's lower index.
    pub trace_lo: TraceMesh,
    pub trace_hi: TraceMesh,
    pub merged: Vec<MergedSegment>,
}

impl InterfaceLayout {
    pub fn trace_for(&self, subdomain: usize) -> &TraceMesh {
        if self.trace_lo.side_subdomain == subdomain {
            &self.trace_lo
        } else {
            debug_assert_eq!(self.trace_hi.side_subdomain, subdomain);
            &self.trace_hi
        }
    }

    pub fn nonmortar_trace(&self) -> &TraceMesh {
        self.trace_for(self.nonmortar)
    }

    pub fn mortar_trace(&self) -> &TraceMesh {
        self.trace_for(self.mortar)
    }
}

/// Per-interface layouts for the whole partition.
#[derive(Debug, Clone)]
pub struct MortarLayout {
    pub interfaces: Vec<InterfaceLayout>,
}

impl MortarLayout {
    /// Build traces, pick sides, and merge, for every interface.
    pub fn build(
        partition: &SubdomainPartition,
        fine: &[FineMesh],
        rule: MortarRule,
    ) -> Result<Self> {
        let mut interfaces = Vec::with_capacity(partition.interfaces.len());
        for (k, itf) in partition.interfaces.iter().enumerate() {
            let (i, j) = itf.pair;
            let trace_lo = extract_trace_mesh(&fine[i], partition, k)?;
            let trace_hi = extract_trace_mesh(&fine[j], partition, k)?;
            let (nonmortar, mortar) = assign_mortar_sides(&trace_lo, &trace_hi, rule);
            let (nm, m) = if nonmortar == i {
                (&trace_lo, &trace_hi)
            } else {
                (&trace_hi, &trace_lo)
            };
            let merged = merge_segments(nm, m, itf.length)?;
            interfaces.push(InterfaceLayout {
                interface: k,
                nonmortar,
                mortar,
                trace_lo,
                trace_hi,
                merged,
            });
        }
        Ok(MortarLayout { interfaces })
    }

    /// Total number of non-mortar fine interface edges.
    pub fn n_nonmortar_edges(&self) -> usize {
        self.interfaces
            .iter()
            .map(|l| l.nonmortar_trace().n_segments())
            .sum()
    }
}

/// Collect the interface fine edges of one side and sort them by arclength.
pub fn extract_trace_mesh(
    fine: &FineMesh,
    partition: &SubdomainPartition,
    interface: usize,
) -> Result<TraceMesh> {
    let itf = &partition.interfaces[interface];
    let tol = 1e-12 * itf.length;
    let mut segments = Vec::new();
    for (id, edge) in fine.edges.iter().enumerate() {
        if edge.tag != EdgeTag::Interface(interface) {
            continue;
        }
        let (p0, p1) = (fine.vertices[edge.v[0]], fine.vertices[edge.v[1]]);
        let (mut t0, mut t1) = (itf.arclength_of(p0), itf.arclength_of(p1));
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let fine_tri = edge.tris[0].ok_or_else(|| {
            Error::MeshInconsistency(format!("interface edge {id} has no triangle"))
        })?;
        segments.push(TraceSegment { t0, t1, fine_tri, fine_edge: id });
    }
    if segments.is_empty() {
        return Err(Error::MeshInconsistency(format!(
            "subdomain {} has no fine edges on interface {interface}",
            fine.subdomain
        )));
    }
    segments.sort_by(|a, b| a.t0.partial_cmp(&b.t0).unwrap());

    // Segments must tile [0, |Γ|] exactly.
    let mut breakpoints = Vec::with_capacity(segments.len() + 1);
    breakpoints.push(segments[0].t0);
    for s in &segments {
        breakpoints.push(s.t1);
    }
    if breakpoints[0].abs() > tol
        || (breakpoints[breakpoints.len() - 1] - itf.length).abs() > tol
    {
        return Err(Error::MeshInconsistency(format!(
            "trace of subdomain {} does not span interface {interface}",
            fine.subdomain
        )));
    }
    for w in segments.windows(2) {
        if (w[0].t1 - w[1].t0).abs() > tol {
            return Err(Error::MeshInconsistency(format!(
                "trace of subdomain {} has a gap on interface {interface}",
                fine.subdomain
            )));
        }
    }
    breakpoints[0] = 0.0;
    *breakpoints.last_mut().unwrap() = itf.length;
    Ok(TraceMesh {
        interface,
        side_subdomain: fine.subdomain,
        breakpoints,
        segments,
    })
}

/// Pick (non-mortar, mortar) subdomain ids.
pub fn assign_mortar_sides(
    trace_lo: &TraceMesh,
    trace_hi: &TraceMesh,
    rule: MortarRule,
) -> (usize, usize) {
    let (lo, hi) = (trace_lo.side_subdomain, trace_hi.side_subdomain);
    match rule {
        MortarRule::FinerSide => {
            if trace_hi.n_segments() > trace_lo.n_segments() {
                (hi, lo)
            } else {
                (lo, hi)
            }
        }
        MortarRule::LowerIndex => (lo, hi),
        MortarRule::HigherIndex => (hi, lo),
    }
}

/// Sorted union of both breakpoint lists, with duplicate collapse at
/// tolerance 1e-12·|Γ_ij|, mapped back to one parent segment per side.
pub fn merge_segments(
    nonmortar: &TraceMesh,
    mortar: &TraceMesh,
    length: f64,
) -> Result<Vec<MergedSegment>> {
    let tol = 1e-12 * length;
    for t in [nonmortar, mortar] {
        let first = *t.breakpoints.first().unwrap();
        let last = *t.breakpoints.last().unwrap();
        if first.abs() > tol || (last - length).abs() > tol {
            return Err(Error::Geometry(format!(
                "trace endpoints ({first}, {last}) do not match interface length {length}"
            )));
        }
    }
    let mut cuts: Vec<f64> = nonmortar
        .breakpoints
        .iter()
        .chain(mortar.breakpoints.iter())
        .copied()
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged_cuts: Vec<f64> = Vec::with_capacity(cuts.len());
    for c in cuts {
        if merged_cuts.last().map_or(true, |&last| c - last > tol) {
            merged_cuts.push(c);
        }
    }
    *merged_cuts.first_mut().unwrap() = 0.0;
    *merged_cuts.last_mut().unwrap() = length;

    let locate = |trace: &TraceMesh, mid: f64| -> Result<usize> {
        trace
            .segments
            .iter()
            .position(|s| mid >= s.t0 - tol && mid <= s.t1 + tol)
            .ok_or_else(|| {
                Error::Geometry(format!(
                    "point {mid} on interface {} not covered by side {}",
                    trace.interface, trace.side_subdomain
                ))
            })
    };
    let mut merged = Vec::with_capacity(merged_cuts.len() - 1);
    for w in merged_cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        merged.push(MergedSegment {
            t0,
            t1,
            nonmortar_seg: locate(nonmortar, mid)?,
            mortar_seg: locate(mortar, mid)?,
        });
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_initial_mesh, refine_red_green, Diagonal};
    use crate::partition::SubdomainPartition;

    fn synthetic_trace(breaks: &[f64]) -> TraceMesh {
        TraceMesh {
            interface: 0,
            side_subdomain: 0,
            breakpoints: breaks.to_vec(),
            segments: breaks
                .windows(2)
                .enumerate()
                .map(|(i, w)| TraceSegment { t0: w[0], t1: w[1], fine_tri: i, fine_edge: i })
                .collect(),
        }
    }

    #[test]
    fn merge_two_and_three_cells() {
        let a = synthetic_trace(&[0.0, 0.5, 1.0]);
        let b = synthetic_trace(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let merged = merge_segments(&b, &a, 1.0).unwrap();
        assert_eq!(merged.len(), 4);
        let cuts: Vec<f64> = merged.iter().map(|m| m.t0).chain([1.0]).collect();
        let expect = [0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0];
        for (c, e) in cuts.iter().zip(expect.iter()) {
            assert!((c - e).abs() < 1e-14);
        }
        let total: f64 = merged.iter().map(|m| m.t1 - m.t0).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merge_matching_traces_is_identity() {
        let a = synthetic_trace(&[0.0, 0.5, 1.0]);
        let merged = merge_segments(&a, &a, 1.0).unwrap();
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn near_duplicate_breakpoints_collapse() {
        let a = synthetic_trace(&[0.0, 0.5, 1.0]);
        let b = synthetic_trace(&[0.0, 0.5 + 1e-15, 1.0]);
        let merged = merge_segments(&a, &b, 1.0).unwrap();
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn endpoint_mismatch_rejected() {
        let a = synthetic_trace(&[0.0, 0.5, 1.0]);
        let b = synthetic_trace(&[0.0, 0.5, 0.9]);
        assert!(matches!(merge_segments(&a, &b, 1.0), Err(Error::Geometry(_))));
    }

    #[test]
    fn finer_side_rule_and_tie_break() {
        let two = synthetic_trace(&[0.0, 0.5, 1.0]);
        let mut three = synthetic_trace(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        three.side_subdomain = 1;
        assert_eq!(assign_mortar_sides(&two, &three, MortarRule::FinerSide), (1, 0));
        let mut two_hi = two.clone();
        two_hi.side_subdomain = 1;
        assert_eq!(assign_mortar_sides(&two, &two_hi, MortarRule::FinerSide), (0, 1));
        assert_eq!(assign_mortar_sides(&two, &two_hi, MortarRule::HigherIndex), (1, 0));
    }

    #[test]
    fn traces_from_meshes() {
        let p = SubdomainPartition::two_halves([1.0, 1.0]).unwrap();
        let coarse = build_initial_mesh(&p, &[1, 2], Diagonal::default()).unwrap();
        let fine: Vec<_> = coarse
            .iter()
            .map(|m| FineMesh::build(m, &p).unwrap())
            .collect();
        let t0 = extract_trace_mesh(&fine[0], &p, 0).unwrap();
        let t1 = extract_trace_mesh(&fine[1], &p, 0).unwrap();
        assert_eq!(t0.breakpoints, vec![0.0, 1.0]);
        assert_eq!(t1.breakpoints.len(), 3);
        assert!((t1.breakpoints[1] - 0.5).abs() < 1e-14);

        let layout = MortarLayout::build(&p, &fine, MortarRule::FinerSide).unwrap();
        assert_eq!(layout.interfaces[0].nonmortar, 1);
        assert_eq!(layout.interfaces[0].merged.len(), 2);
        assert_eq!(layout.n_nonmortar_edges(), 2);
    }

    #[test]
    fn refining_one_side_adds_one_breakpoint() {
        let p = SubdomainPartition::two_halves([1.0, 1.0]).unwrap();
        let coarse = build_initial_mesh(&p, &[1, 1], Diagonal::default()).unwrap();
        let fine0 = FineMesh::build(&coarse[0], &p).unwrap();
        let before = extract_trace_mesh(&fine0, &p, 0).unwrap();

        // Mark the interface-adjacent coarse triangle on side 0. Its
        // interface edge is bisected by red refinement.
        let itf_tri = (0..coarse[0].n_tris())
            .find(|&t| {
                let pts = coarse[0].tri_points(t);
                pts.iter().filter(|q| (q[0] - 0.5).abs() < 1e-12).count() == 2
            })
            .unwrap();
        let refined = refine_red_green(&coarse[0], &[itf_tri]).unwrap();
        let fine_ref = FineMesh::build(&refined, &p).unwrap();
        let after = extract_trace_mesh(&fine_ref, &p, 0).unwrap();
        assert_eq!(after.breakpoints.len(), before.breakpoints.len() + 1);
        assert!(after.breakpoints.iter().any(|b| (b - 0.5).abs() < 1e-14));
    }

    #[test]
    fn merged_quadrature_is_exact_for_piecewise_polynomials() {
        use crate::quadrature::SegmentRule;
        // degree-k polynomial per non-mortar cell times degree-k per mortar
        // cell, integrated with (k+1)-point Gauss per merged segment
        let nm = synthetic_trace(&[0.0, 0.5, 1.0]);
        let m = synthetic_trace(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        for k in 1..=3usize {
            let rule = SegmentRule::with_points(k + 1);
            let merged = merge_segments(&nm, &m, 1.0).unwrap();
            // f = (t - a_i)^k on non-mortar cells, g = (t - b_j)^k on mortar
            let f = |t: f64| {
                let a = if t < 0.5 { 0.0 } else { 0.5 };
                (t - a).powi(k as i32)
            };
            let g = |t: f64| {
                let b = (t * 3.0).floor().min(2.0) / 3.0;
                (t - b).powi(k as i32)
            };
            let mut total = 0.0;
            for seg in &merged {
                let len = seg.t1 - seg.t0;
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let t = seg.t0 + x * len;
                    total += w * len * f(t) * g(t);
                }
            }
            // oracle: very fine composite Gauss
            let fine_rule = SegmentRule::with_points(8);
            let mut oracle = 0.0;
            let n = 3000;
            for i in 0..n {
                let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                for (&x, &w) in fine_rule.points.iter().zip(&fine_rule.weights) {
                    let t = a + x * (b - a);
                    oracle += w * (b - a) * f(t) * g(t);
                }
            }
            assert!(
                (total - oracle).abs() <= 1e-12 * oracle.abs().max(1.0),
                "k={k}: {total} vs {oracle}"
            );
        }
    }
}
