//! Per-subdomain coarse triangulations and red–green adaptive refinement.
//!
//! Vertex tables are append-only across refinement levels, so vertex ids stay
//! valid from one level to the next. Red refinement splits a triangle into
//! four congruent children through its edge midpoints; green refinement
//! bisects a neighbor to remove a hanging node. Green triangles are never
//! refined further: when a green child is marked, or gains a hanging node,
//! the pair is coarsened back and its parent is red-refined instead.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::geo::{self, Pt};
use crate::partition::SubdomainPartition;

/// Default shape-regularity floor on the minimum interior angle, in degrees.
pub const DEFAULT_MIN_ANGLE_DEG: f64 = 15.0;

/// Diagonal direction used when splitting grid squares into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum Diagonal {
    /// Diagonal from the lower-left to the upper-right cell corner.
    #[default]
    LowerLeftToUpperRight,
    /// Diagonal from the upper-left to the lower-right cell corner.
    UpperLeftToLowerRight,
}

/// How a triangle was created by the most recent refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineTag {
    /// Level-0 triangle, or copied unchanged by the last refinement.
    None,
    /// One of the four congruent children of `parent` (previous-level id).
    Red { parent: usize },
    /// Bisection child of `parent`; `mate` is the sibling in this mesh and
    /// `verts` the counterclockwise vertex triple of the bisected triangle,
    /// with (verts[0], verts[1]) the split edge.
    Green {
        parent: usize,
        mate: usize,
        verts: [usize; 3],
    },
}

impl RefineTag {
    pub fn is_green(&self) -> bool {
        matches!(self, RefineTag::Green { .. })
    }
}

/// Undirected mesh edge with two-sided triangle adjacency.
#[derive(Debug, Clone, Copy)]
pub struct MeshEdge {
    /// Vertex pair, `v[0] < v[1]`.
    pub v: [usize; 2],
    /// Adjacent triangles in first-encounter order.
    pub tris: [Option<usize>; 2],
    pub h: f64,
}

/// Conforming triangulation of one subdomain.
#[derive(Debug, Clone)]
pub struct CoarseMesh {
    pub subdomain: usize,
    pub level: usize,
    pub vertices: Vec<Pt>,
    /// Counterclockwise vertex triples.
    pub tris: Vec<[usize; 3]>,
    pub tags: Vec<RefineTag>,
    /// Previous-level triangle containing each triangle (None at level 0).
    pub parents: Vec<Option<usize>>,
    pub edges: Vec<MeshEdge>,
    /// Edge id for each local edge (v_k, v_{k+1 mod 3}) of each triangle.
    pub tri_edges: Vec<[usize; 3]>,
    /// Triangle diameters.
    pub h_tri: Vec<f64>,
    /// Shape-regularity floor enforced on this mesh, in degrees.
    pub min_angle_floor: f64,
}

impl CoarseMesh {
    /// Build a level-0 mesh directly from a triangle soup.
    pub fn from_triangles(
        subdomain: usize,
        vertices: Vec<Pt>,
        tris: Vec<[usize; 3]>,
        min_angle_floor: f64,
    ) -> Result<Self> {
        let n = tris.len();
        let mut mesh = CoarseMesh {
            subdomain,
            level: 0,
            vertices,
            tris,
            tags: vec![RefineTag::None; n],
            parents: vec![None; n],
            edges: Vec::new(),
            tri_edges: Vec::new(),
            h_tri: Vec::new(),
            min_angle_floor,
        };
        mesh.rebuild_topology()?;
        mesh.validate()?;
        Ok(mesh)
    }

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

    pub fn total_area(&self) -> f64 {
        (0..self.n_tris()).map(|t| self.tri_area(t)).sum()
    }

    pub fn min_angle_deg(&self) -> f64 {
        (0..self.n_tris())
            .map(|t| {
                let [a, b, c] = self.tri_points(t);
                geo::min_angle_deg(a, b, c)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn rebuild_topology(&mut self) -> Result<()> {
        let (edges, tri_edges) = build_edges(&self.tris, &self.vertices)?;
        self.edges = edges;
        self.tri_edges = tri_edges;
        self.h_tri = (0..self.n_tris())
            .map(|t| {
                let [a, b, c] = self.tri_points(t);
                geo::diameter(a, b, c)
            })
            .collect();
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for t in 0..self.n_tris() {
            if self.tri_area(t) <= 0.0 {
                return Err(Error::Geometry(format!(
                    "triangle {t} in subdomain {} has non-positive area",
                    self.subdomain
                )));
            }
        }
        let min = self.min_angle_deg();
        if min < self.min_angle_floor - 1e-9 {
            return Err(Error::Geometry(format!(
                "minimum interior angle {min:.3}° below the {:.3}° floor in subdomain {}",
                self.min_angle_floor, self.subdomain
            )));
        }
        Ok(())
    }

    /// Exhaustive hanging-node scan: a used vertex lying strictly inside a
    /// triangle edge breaks conformity. O(V·E); intended for tests.
    pub fn check_conforming(&self) -> Result<()> {
        if !find_hanging_edges(&self.vertices, &self.tris, &self.edges).is_empty() {
            return Err(Error::MeshInconsistency(format!(
                "hanging node in subdomain {}",
                self.subdomain
            )));
        }
        Ok(())
    }
}

fn build_edges(tris: &[[usize; 3]], vertices: &[Pt]) -> Result<(Vec<MeshEdge>, Vec<[usize; 3]>)> {
    let mut map: HashMap<[usize; 2], usize> = HashMap::new();
    let mut edges: Vec<MeshEdge> = Vec::new();
    let mut tri_edges = vec![[usize::MAX; 3]; tris.len()];
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = [a.min(b), a.max(b)];
            let id = *map.entry(key).or_insert_with(|| {
                edges.push(MeshEdge {
                    v: key,
                    tris: [None, None],
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
                    "edge ({}, {}) adjacent to more than two triangles",
                    key[0], key[1]
                )));
            }
            tri_edges[t][k] = id;
        }
    }
    Ok((edges, tri_edges))
}

fn coord_key(p: Pt) -> (u64, u64) {
    (p[0].to_bits(), p[1].to_bits())
}

/// Edges whose exact midpoint exists as a vertex of the mesh, i.e. edges
/// carrying a hanging node.
fn find_hanging_edges(
    vertices: &[Pt],
    tris: &[[usize; 3]],
    edges: &[MeshEdge],
) -> HashSet<[usize; 2]> {
    let mut used = vec![false; vertices.len()];
    for tri in tris {
        for &v in tri {
            used[v] = true;
        }
    }
    let mut coord_map: HashMap<(u64, u64), usize> = HashMap::new();
    for (i, &p) in vertices.iter().enumerate() {
        if used[i] {
            coord_map.insert(coord_key(p), i);
        }
    }
    let mut hanging = HashSet::new();
    for e in edges {
        let mid = geo::midpoint(vertices[e.v[0]], vertices[e.v[1]]);
        if coord_map.contains_key(&coord_key(mid)) {
            hanging.insert(e.v);
        }
    }
    hanging
}

/// Build the initial coarse triangulations, one per subdomain: a grid×grid
/// array of squares each split into two triangles by the configured diagonal.
pub fn build_initial_mesh(
    partition: &SubdomainPartition,
    grid: &[usize],
    diagonal: Diagonal,
) -> Result<Vec<CoarseMesh>> {
    if grid.len() != partition.n_subdomains() {
        return Err(Error::InvalidArgument(format!(
            "{} grid entries for {} subdomains",
            grid.len(),
            partition.n_subdomains()
        )));
    }
    if let Some(i) = grid.iter().position(|&g| g == 0) {
        return Err(Error::InvalidArgument(format!(
            "grid for subdomain {i} must be at least 1"
        )));
    }
    let mut meshes = Vec::with_capacity(partition.n_subdomains());
    for (s, rect) in partition.rects.iter().enumerate() {
        let n = grid[s];
        let (dx, dy) = (rect.width() / n as f64, rect.height() / n as f64);
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([rect.x0 + i as f64 * dx, rect.y0 + j as f64 * dy]);
            }
        }
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut tris = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (ll, lr, ur, ul) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                match diagonal {
                    Diagonal::LowerLeftToUpperRight => {
                        tris.push([ll, lr, ur]);
                        tris.push([ll, ur, ul]);
                    }
                    Diagonal::UpperLeftToLowerRight => {
                        tris.push([ll, lr, ul]);
                        tris.push([lr, ur, ul]);
                    }
                }
            }
        }
        let n_tris = tris.len();
        let mut mesh = CoarseMesh {
            subdomain: s,
            level: 0,
            vertices,
            tris,
            tags: vec![RefineTag::None; n_tris],
            parents: vec![None; n_tris],
            edges: Vec::new(),
            tri_edges: Vec::new(),
            h_tri: Vec::new(),
            min_angle_floor: DEFAULT_MIN_ANGLE_DEG,
        };
        mesh.rebuild_topology()?;
        mesh.validate()?;
        meshes.push(mesh);
    }
    Ok(meshes)
}

/// Red–green refinement of the marked triangles, with conforming closure
/// inside the subdomain. Cross-subdomain interfaces are left non-matching.
pub fn refine_red_green(mesh: &CoarseMesh, marked: &[usize]) -> Result<CoarseMesh> {
    for &t in marked {
        if t >= mesh.n_tris() {
            return Err(Error::InvalidArgument(format!(
                "marked triangle {t} out of range ({} triangles)",
                mesh.n_tris()
            )));
        }
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }

    // A refinement round can leave hanging nodes when a coarsened green pair
    // meets an already twice-split neighbor edge; rounds repeat until the
    // mesh is conforming, composing parent maps back to the input mesh.
    let mut current = mesh.clone();
    let mut marks: Vec<usize> = marked.to_vec();
    let mut parent_of_current: Vec<Option<usize>> = (0..mesh.n_tris()).map(Some).collect();
    for round in 0.. {
        if round > 64 {
            return Err(Error::Internal("refinement closure did not terminate".into()));
        }
        let next = refine_round(&current, &marks)?;
        let composed: Vec<Option<usize>> = next
            .parents
            .iter()
            .map(|p| p.and_then(|q| parent_of_current[q]))
            .collect();
        let hanging = find_hanging_edges(&next.vertices, &next.tris, &next.edges);
        parent_of_current = composed;
        current = next;
        if hanging.is_empty() {
            break;
        }
        marks = Vec::new();
    }
    current.parents = parent_of_current;
    current.level = mesh.level + 1;
    // Tag parents refer to round-internal ids; rewrite them against the
    // input mesh. A None-tagged triangle whose geometry changed was created
    // in an inner round and then copied, i.e. it is a red child.
    for i in 0..current.tris.len() {
        let Some(q) = current.parents[i] else { continue };
        match &mut current.tags[i] {
            RefineTag::Red { parent } => *parent = q,
            RefineTag::Green { parent, .. } => *parent = q,
            tag @ RefineTag::None => {
                if current.tris[i] != mesh.tris[q] {
                    *tag = RefineTag::Red { parent: q };
                }
            }
        }
    }
    current.validate()?;
    Ok(current)
}

/// Refine every triangle (uniform red refinement).
pub fn refine_uniform(mesh: &CoarseMesh) -> Result<CoarseMesh> {
    let all: Vec<usize> = (0..mesh.n_tris()).collect();
    refine_red_green(mesh, &all)
}

fn refine_round(mesh: &CoarseMesh, marked: &[usize]) -> Result<CoarseMesh> {
    let n = mesh.n_tris();
    let mut red = vec![false; n];
    let mark_red = |red: &mut Vec<bool>, t: usize, tags: &[RefineTag]| {
        red[t] = true;
        if let RefineTag::Green { mate, .. } = tags[t] {
            red[mate] = true;
        }
    };
    for &t in marked {
        mark_red(&mut red, t, &mesh.tags);
    }

    // Hanging nodes inherited from a previous round count as bisections.
    let pre_bisected = find_hanging_edges(&mesh.vertices, &mesh.tris, &mesh.edges);

    // Closure: collect bisected edges of the red set, then promote neighbors
    // until stable. A green pair refines through its bisected parent, whose
    // unsplit edges are the outer edges of the two children.
    loop {
        let mut bisected: HashSet<[usize; 2]> = pre_bisected.clone();
        for t in 0..n {
            if !red[t] {
                continue;
            }
            match mesh.tags[t] {
                RefineTag::Green { mate, verts, .. } => {
                    if t > mate && red[mate] {
                        continue;
                    }
                    let [_, vb, vc] = verts;
                    let va = verts[0];
                    bisected.insert(sorted_pair(vb, vc));
                    bisected.insert(sorted_pair(vc, va));
                }
                _ => {
                    let tri = mesh.tris[t];
                    for k in 0..3 {
                        bisected.insert(sorted_pair(tri[k], tri[(k + 1) % 3]));
                    }
                }
            }
        }
        let mut changed = false;
        for t in 0..n {
            if red[t] {
                continue;
            }
            let tri = mesh.tris[t];
            let count = (0..3)
                .filter(|&k| bisected.contains(&sorted_pair(tri[k], tri[(k + 1) % 3])))
                .count();
            let promote = if mesh.tags[t].is_green() { count >= 1 } else { count >= 2 };
            if promote {
                mark_red(&mut red, t, &mesh.tags);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Final bisected set for the emit pass.
    let mut bisected: HashSet<[usize; 2]> = pre_bisected;
    for t in 0..n {
        if !red[t] {
            continue;
        }
        match mesh.tags[t] {
            RefineTag::Green { mate, verts, .. } => {
                if t > mate && red[mate] {
                    continue;
                }
                bisected.insert(sorted_pair(verts[1], verts[2]));
                bisected.insert(sorted_pair(verts[2], verts[0]));
            }
            _ => {
                let tri = mesh.tris[t];
                for k in 0..3 {
                    bisected.insert(sorted_pair(tri[k], tri[(k + 1) % 3]));
                }
            }
        }
    }

    let mut vertices = mesh.vertices.clone();
    let mut midpoint_ids: HashMap<[usize; 2], usize> = HashMap::new();
    // Existing midpoints must be reused, not duplicated.
    {
        let mut coord_map: HashMap<(u64, u64), usize> = HashMap::new();
        for (i, &p) in mesh.vertices.iter().enumerate() {
            coord_map.insert(coord_key(p), i);
        }
        for e in &mesh.edges {
            let mid = geo::midpoint(mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
            if let Some(&m) = coord_map.get(&coord_key(mid)) {
                midpoint_ids.insert(e.v, m);
            }
        }
    }
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Pt>| -> usize {
        let key = sorted_pair(a, b);
        *midpoint_ids.entry(key).or_insert_with(|| {
            vertices.push(geo::midpoint(vertices[a], vertices[b]));
            vertices.len() - 1
        })
    };

    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut tags: Vec<RefineTag> = Vec::new();
    let mut parents: Vec<Option<usize>> = Vec::new();
    let mut copy_map: HashMap<usize, usize> = HashMap::new();
    let mut copied_green: Vec<(usize, usize)> = Vec::new(); // (new id, old mate)

    let emit_red = |triple: [usize; 3],
                        vertices: &mut Vec<Pt>,
                        tris: &mut Vec<[usize; 3]>,
                        tags: &mut Vec<RefineTag>,
                        parents: &mut Vec<Option<usize>>,
                        mid: &mut dyn FnMut(usize, usize, &mut Vec<Pt>) -> usize,
                        parent_of: &dyn Fn(Pt) -> usize| {
        let [a, b, c] = triple;
        let mab = mid(a, b, vertices);
        let mbc = mid(b, c, vertices);
        let mca = mid(c, a, vertices);
        for child in [[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]] {
            let centroid = geo::centroid(
                vertices[child[0]],
                vertices[child[1]],
                vertices[child[2]],
            );
            let p = parent_of(centroid);
            tris.push(child);
            tags.push(RefineTag::Red { parent: p });
            parents.push(Some(p));
        }
    };

    for t in 0..n {
        let tri = mesh.tris[t];
        if red[t] {
            match mesh.tags[t] {
                RefineTag::Green { mate, verts, .. } => {
                    if t > mate && red[mate] {
                        continue; // pair handled at its canonical member
                    }
                    let self_pts = mesh.tri_points(t);
                    let parent_of = |c: Pt| -> usize {
                        if geo::point_in_triangle(c, self_pts[0], self_pts[1], self_pts[2], 1e-12) {
                            t
                        } else {
                            mate
                        }
                    };
                    emit_red(
                        verts,
                        &mut vertices,
                        &mut tris,
                        &mut tags,
                        &mut parents,
                        &mut mid,
                        &parent_of,
                    );
                }
                _ => {
                    let parent_of = |_: Pt| -> usize { t };
                    emit_red(
                        tri,
                        &mut vertices,
                        &mut tris,
                        &mut tags,
                        &mut parents,
                        &mut mid,
                        &parent_of,
                    );
                }
            }
            continue;
        }

        let split: Vec<usize> = (0..3)
            .filter(|&k| bisected.contains(&sorted_pair(tri[k], tri[(k + 1) % 3])))
            .collect();
        match split.len() {
            0 => {
                let new_id = tris.len();
                copy_map.insert(t, new_id);
                tris.push(tri);
                parents.push(Some(t));
                match mesh.tags[t] {
                    RefineTag::Green { mate, verts, .. } => {
                        copied_green.push((new_id, mate));
                        tags.push(RefineTag::Green { parent: t, mate: usize::MAX, verts });
                    }
                    _ => tags.push(RefineTag::None),
                }
            }
            1 => {
                debug_assert!(!mesh.tags[t].is_green());
                let k = split[0];
                let (va, vb, vc) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let m = mid(va, vb, &mut vertices);
                let id0 = tris.len();
                tris.push([va, m, vc]);
                tags.push(RefineTag::Green { parent: t, mate: id0 + 1, verts: [va, vb, vc] });
                parents.push(Some(t));
                tris.push([m, vb, vc]);
                tags.push(RefineTag::Green { parent: t, mate: id0, verts: [va, vb, vc] });
                parents.push(Some(t));
            }
            _ => {
                return Err(Error::Internal(
                    "closure left a triangle with two bisected edges".into(),
                ))
            }
        }
    }

    for (new_id, old_mate) in copied_green {
        let new_mate = *copy_map.get(&old_mate).ok_or_else(|| {
            Error::Internal("green mate not copied alongside its sibling".into())
        })?;
        if let RefineTag::Green { mate, .. } = &mut tags[new_id] {
            *mate = new_mate;
        }
    }

    let n_tris = tris.len();
    let mut out = CoarseMesh {
        subdomain: mesh.subdomain,
        level: mesh.level + 1,
        vertices,
        tris,
        tags,
        parents,
        edges: Vec::new(),
        tri_edges: Vec::new(),
        h_tri: Vec::new(),
        min_angle_floor: mesh.min_angle_floor,
    };
    debug_assert_eq!(out.tags.len(), n_tris);
    out.rebuild_topology()?;
    Ok(out)
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}
