//! Staggered subdivision: every coarse triangle is split into three
//! subtriangles through its centroid, and the resulting fine edges are
//! classified into the staggered edge sets.
//!
//! Coarse edges survive unchanged: they become the `FuBoundary`,
//! `FuInterior` or `Interface` fine edges, while the three new
//! centroid-to-vertex edges of each coarse triangle form the `Fp` set.

use crate::error::{Error, Result};
use crate::geo::{self, AffineMap, Pt};
use crate::mesh::CoarseMesh;
use crate::partition::SubdomainPartition;

/// Classification of a fine edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTag {
    /// Initial-triangulation edge on the outer boundary ∂Ω.
    FuBoundary,
    /// Initial-triangulation edge interior to its subdomain.
    FuInterior,
    /// Edge created by the centroid subdivision.
    Fp,
    /// Initial-triangulation edge on the subdomain interface with the given
    /// index into `SubdomainPartition::interfaces`.
    Interface(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct FineEdge {
    /// Vertex pair, `v[0] < v[1]`.
    pub v: [usize; 2],
    /// Adjacent fine triangles. For interior edges the fixed unit normal
    /// points from `tris[0]` into `tris[1]`; one-sided edges keep the single
    /// triangle in `tris[0]`.
    pub tris: [Option<usize>; 2],
    pub tag: EdgeTag,
    /// Fixed unit normal: the interface normal n_ij on interface edges, the
    /// outward normal on boundary edges, a fixed orientation otherwise.
    pub normal: Pt,
    pub h: f64,
}

/// The subdivided (staggered) mesh of one subdomain.
#[derive(Debug, Clone)]
pub struct FineMesh {
    pub subdomain: usize,
    /// Coarse vertices followed by one centroid per coarse triangle.
    pub vertices: Vec<Pt>,
    pub n_coarse_vertices: usize,
    /// Counterclockwise vertex triples; children 3t, 3t+1, 3t+2 of coarse
    /// triangle t.
    pub tris: Vec<[usize; 3]>,
    /// Coarse parent of each fine triangle.
    pub parent: Vec<usize>,
    /// Centroid vertex of each coarse triangle.
    pub centroid_vertex: Vec<usize>,
    pub edges: Vec<FineEdge>,
    /// Edge id of each local edge (v_k, v_{k+1 mod 3}) per triangle.
    pub tri_edges: Vec<[usize; 3]>,
    pub h_tri: Vec<f64>,
    /// Whether classify_edges has run.
    pub classified: bool,
}

impl FineMesh {
    pub fn n_tris(&self) -> usize {
        self.tris.len()
    }

    pub fn tri_points(&self, t: usize) -> [Pt; 3] {
        let v = self.tris[t];
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri_points(t);
        geo::signed_area(a, b, c)
    }

    pub fn affine_map(&self, t: usize) -> AffineMap {
        let [a, b, c] = self.tri_points(t);
        AffineMap::new(a, b, c)
    }

    pub fn edge_points(&self, e: usize) -> (Pt, Pt) {
        let v = self.edges[e].v;
        (self.vertices[v[0]], self.vertices[v[1]])
    }

    /// Local index of edge `e` within triangle `t`.
    pub fn local_edge(&self, t: usize, e: usize) -> Option<usize> {
        self.tri_edges[t].iter().position(|&x| x == e)
    }

    pub fn edge_count_by_tag(&self, tag: EdgeTag) -> usize {
        self.edges.iter().filter(|e| e.tag == tag).count()
    }

    /// Build and classify in one step.
    pub fn build(coarse: &CoarseMesh, partition: &SubdomainPartition) -> Result<Self> {
        let mut fine = subdivide_centroid(coarse)?;
        classify_edges(&mut fine, partition)?;
        Ok(fine)
    }
}

/// Split every coarse triangle into three subtriangles through its centroid.
pub fn subdivide_centroid(coarse: &CoarseMesh) -> Result<FineMesh> {
    let n_coarse_vertices = coarse.vertices.len();
    let mut vertices = coarse.vertices.clone();
    let mut tris = Vec::with_capacity(3 * coarse.n_tris());
    let mut parent = Vec::with_capacity(3 * coarse.n_tris());
    let mut centroid_vertex = Vec::with_capacity(coarse.n_tris());
    for t in 0..coarse.n_tris() {
        let [a, b, c] = coarse.tris[t];
        let [pa, pb, pc] = coarse.tri_points(t);
        if geo::signed_area(pa, pb, pc) <= 0.0 {
            return Err(Error::Geometry(format!(
                "coarse triangle {t} in subdomain {} is degenerate",
                coarse.subdomain
            )));
        }
        let g = vertices.len();
        vertices.push(geo::centroid(pa, pb, pc));
        centroid_vertex.push(g);
        for child in [[a, b, g], [b, c, g], [c, a, g]] {
            tris.push(child);
            parent.push(t);
        }
    }

    // Edge table with first-encounter adjacency order.
    let mut map = std::collections::HashMap::new();
    let mut edges: Vec<FineEdge> = Vec::new();
    let mut tri_edges = vec![[usize::MAX; 3]; tris.len()];
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = [a.min(b), a.max(b)];
            let id = *map.entry(key).or_insert_with(|| {
                edges.push(FineEdge {
                    v: key,
                    tris: [None, None],
                    tag: EdgeTag::FuInterior,
                    normal: [0.0, 0.0],
                    h: geo::dist(vertices[key[0]], vertices[key[1]]),
                });
                edges.len() - 1
            });
            let slot = &mut edges[id].tris;
            if slot[0].is_none() {
                slot[0] = Some(t);
            } else if slot[1].is_none() {
                slot[1] = Some(t);
            } else {
                return Err(Error::MeshInconsistency(format!(
                    "fine edge ({}, {}) adjacent to more than two triangles",
                    key[0], key[1]
                )));
            }
            tri_edges[t][k] = id;
        }
    }

    let h_tri = (0..tris.len())
        .map(|t| {
            let v = tris[t];
            geo::diameter(vertices[v[0]], vertices[v[1]], vertices[v[2]])
        })
        .collect();

    Ok(FineMesh {
        subdomain: coarse.subdomain,
        vertices,
        n_coarse_vertices,
        tris,
        parent,
        centroid_vertex,
        edges,
        tri_edges,
        h_tri,
        classified: false,
    })
}

/// Fill in edge tags and fixed normals. Idempotent.
pub fn classify_edges(fine: &mut FineMesh, partition: &SubdomainPartition) -> Result<()> {
    let sub = fine.subdomain;
    let scale = partition
        .rects
        .iter()
        .map(|r| r.width().max(r.height()))
        .fold(0.0, f64::max);
    let tol = 1e-12 * scale;
    let probe = 1e-7 * scale;

    // Resolve borrow: gather per-edge data first.
    let mut updates: Vec<(usize, EdgeTag, Pt, [Option<usize>; 2])> = Vec::new();
    for (id, edge) in fine.edges.iter().enumerate() {
        let (p0, p1) = (fine.vertices[edge.v[0]], fine.vertices[edge.v[1]]);
        let mid = geo::midpoint(p0, p1);
        let tangent = geo::scale(geo::sub(p1, p0), 1.0 / edge.h);
        let perp = [tangent[1], -tangent[0]];
        match (edge.tris[0], edge.tris[1]) {
            (Some(t0), Some(t1)) => {
                let is_fp = edge.v[0] >= fine.n_coarse_vertices
                    || edge.v[1] >= fine.n_coarse_vertices;
                let tag = if is_fp { EdgeTag::Fp } else { EdgeTag::FuInterior };
                // Normal points from tris[0] into tris[1].
                let c0 = centroid_of(fine, t0);
                let (tris, normal) = if geo::dot(perp, geo::sub(c0, mid)) < 0.0 {
                    ([Some(t0), Some(t1)], perp)
                } else {
                    ([Some(t1), Some(t0)], perp)
                };
                updates.push((id, tag, normal, tris));
            }
            (Some(t0), None) => {
                let c0 = centroid_of(fine, t0);
                let outward = if geo::dot(perp, geo::sub(c0, mid)) < 0.0 {
                    perp
                } else {
                    [-perp[0], -perp[1]]
                };
                let on_interface = partition.interfaces.iter().position(|itf| {
                    itf.contains(p0, tol) && itf.contains(p1, tol)
                });
                match on_interface {
                    Some(k) => {
                        let itf = &partition.interfaces[k];
                        if itf.pair.0 != sub && itf.pair.1 != sub {
                            return Err(Error::PartitionInconsistency(format!(
                                "edge ({}, {}) of subdomain {sub} lies on interface {:?} \
                                 which does not involve this subdomain",
                                edge.v[0], edge.v[1], itf.pair
                            )));
                        }
                        updates.push((id, EdgeTag::Interface(k), itf.normal, [Some(t0), None]));
                    }
                    None => {
                        // Interior to Ω but on no registered interface is a
                        // broken adjacency set; probe just outside the edge.
                        let q = geo::add(mid, geo::scale(outward, probe));
                        let inside_other = partition.rects.iter().enumerate().any(|(j, r)| {
                            j != sub
                                && q[0] > r.x0 + tol
                                && q[0] < r.x1 - tol
                                && q[1] > r.y0 + tol
                                && q[1] < r.y1 - tol
                        });
                        if inside_other {
                            return Err(Error::PartitionInconsistency(format!(
                                "boundary edge ({}, {}) of subdomain {sub} faces another \
                                 subdomain but matches no registered interface",
                                edge.v[0], edge.v[1]
                            )));
                        }
                        updates.push((id, EdgeTag::FuBoundary, outward, [Some(t0), None]));
                    }
                }
            }
            _ => {
                return Err(Error::MeshInconsistency(format!(
                    "fine edge {id} has no adjacent triangle"
                )))
            }
        }
    }
    for (id, tag, normal, tris) in updates {
        let e = &mut fine.edges[id];
        e.tag = tag;
        e.normal = normal;
        e.tris = tris;
    }
    fine.classified = true;
    Ok(())
}

fn centroid_of(fine: &FineMesh, t: usize) -> Pt {
    let [a, b, c] = fine.tri_points(t);
    geo::centroid(a, b, c)
}
