//! Geometrically conforming partitions of the computational domain into
//! axis-aligned rectangular subdomains with piecewise constant diffusion.

use crate::error::{Error, Result};
use crate::geo::Pt;

const TOL: f64 = 1e-12;

/// Axis-aligned rectangle (x0, x1) × (y0, y1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    fn scale(&self) -> f64 {
        self.width().max(self.height())
    }

    /// The four sides as (start, end, outward normal), in the order
    /// left, right, bottom, top. Start/end are ordered by ascending
    /// arclength coordinate (ascending y for vertical, ascending x for
    /// horizontal sides).
    fn sides(&self) -> [(Pt, Pt, Pt); 4] {
        [
            ([self.x0, self.y0], [self.x0, self.y1], [-1.0, 0.0]),
            ([self.x1, self.y0], [self.x1, self.y1], [1.0, 0.0]),
            ([self.x0, self.y0], [self.x1, self.y0], [0.0, -1.0]),
            ([self.x0, self.y1], [self.x1, self.y1], [0.0, 1.0]),
        ]
    }
}

/// A 1-D interface Γ_ij between two subdomains, a full common side of both
/// rectangles. The fixed normal points from the lower-index subdomain into
/// the higher-index one, and the arclength coordinate runs from `start` to
/// `end` (ascending x or ascending y).
#[derive(Debug, Clone, Copy)]
pub struct Interface {
    /// (i, j) with i < j.
    pub pair: (usize, usize),
    pub start: Pt,
    pub end: Pt,
    pub normal: Pt,
    pub length: f64,
}

impl Interface {
    /// Arclength coordinate of a point assumed to lie on the interface.
    pub fn arclength_of(&self, p: Pt) -> f64 {
        let t = [
            (self.end[0] - self.start[0]) / self.length,
            (self.end[1] - self.start[1]) / self.length,
        ];
        (p[0] - self.start[0]) * t[0] + (p[1] - self.start[1]) * t[1]
    }

    /// Physical point at arclength `t`.
    pub fn point_at(&self, t: f64) -> Pt {
        let s = t / self.length;
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }

    /// Whether `p` lies on the interface segment (within `tol`).
    pub fn contains(&self, p: Pt, tol: f64) -> bool {
        let t = self.arclength_of(p);
        if t < -tol || t > self.length + tol {
            return false;
        }
        let q = self.point_at(t.clamp(0.0, self.length));
        (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol
    }

    /// Sign n_i·n_ij for the given member subdomain (+1 for the lower index).
    pub fn sign_for(&self, subdomain: usize) -> f64 {
        if subdomain == self.pair.0 {
            1.0
        } else {
            debug_assert_eq!(subdomain, self.pair.1);
            -1.0
        }
    }
}

/// Partition of Ω into pairwise disjoint rectangles with per-subdomain
/// diffusion ρ_i > 0 and the derived interface set S.
#[derive(Debug, Clone)]
pub struct SubdomainPartition {
    pub rects: Vec<Rect>,
    pub rho: Vec<f64>,
    pub interfaces: Vec<Interface>,
}

impl SubdomainPartition {
    pub fn new(rects: Vec<Rect>, rho: Vec<f64>) -> Result<Self> {
        if rects.is_empty() {
            return Err(Error::InvalidPartition("no subdomains".into()));
        }
        if rects.len() != rho.len() {
            return Err(Error::InvalidPartition(format!(
                "{} subdomains but {} diffusion values",
                rects.len(),
                rho.len()
            )));
        }
        for (i, r) in rects.iter().enumerate() {
            if !(r.x1 > r.x0 && r.y1 > r.y0) {
                return Err(Error::InvalidPartition(format!(
                    "subdomain {i} is degenerate"
                )));
            }
        }
        for (i, &value) in rho.iter().enumerate() {
            if !(value > 0.0) {
                return Err(Error::InvalidPartition(format!(
                    "rho[{i}] = {value} is not positive"
                )));
            }
        }
        let scale = rects.iter().map(Rect::scale).fold(0.0, f64::max);
        let tol = TOL * scale;

        // Interior overlap check.
        for i in 0..rects.len() {
            for j in (i + 1)..rects.len() {
                let (a, b) = (&rects[i], &rects[j]);
                let wx = a.x1.min(b.x1) - a.x0.max(b.x0);
                let wy = a.y1.min(b.y1) - a.y0.max(b.y0);
                if wx > tol && wy > tol {
                    return Err(Error::InvalidPartition(format!(
                        "subdomains {i} and {j} overlap"
                    )));
                }
            }
        }

        let interfaces = derive_interfaces(&rects, tol)?;

        // Connectivity: Ω must be a single region.
        let mut root: Vec<usize> = (0..rects.len()).collect();
        fn find(root: &mut Vec<usize>, mut x: usize) -> usize {
            while root[x] != x {
                root[x] = root[root[x]];
                x = root[x];
            }
            x
        }
        for itf in &interfaces {
            let a = find(&mut root, itf.pair.0);
            let b = find(&mut root, itf.pair.1);
            root[a] = b;
        }
        let r0 = find(&mut root, 0);
        for i in 1..rects.len() {
            if find(&mut root, i) != r0 {
                return Err(Error::InvalidPartition(
                    "subdomains do not form a connected domain".into(),
                ));
            }
        }

        Ok(SubdomainPartition { rects, rho, interfaces })
    }

    pub fn n_subdomains(&self) -> usize {
        self.rects.len()
    }

    pub fn total_area(&self) -> f64 {
        self.rects.iter().map(Rect::area).sum()
    }

    /// Interface index for the pair (i, j), if the two subdomains share one.
    pub fn interface_between(&self, i: usize, j: usize) -> Option<usize> {
        let pair = (i.min(j), i.max(j));
        self.interfaces.iter().position(|s| s.pair == pair)
    }

    /// Unit square (0,1)² split into four equal square subdomains, numbered
    /// lower-left, lower-right, upper-left, upper-right.
    pub fn unit_square_quadrants(rho: [f64; 4]) -> Result<Self> {
        let rects = vec![
            Rect::new(0.0, 0.0, 0.5, 0.5),
            Rect::new(0.5, 0.0, 1.0, 0.5),
            Rect::new(0.0, 0.5, 0.5, 1.0),
            Rect::new(0.5, 0.5, 1.0, 1.0),
        ];
        Self::new(rects, rho.to_vec())
    }

    /// (−1,1)² split along the Cartesian axes; subdomain 0 is the quadrant
    /// {x>0, y>0} and the numbering continues counterclockwise.
    pub fn quadrants_counterclockwise(rho: [f64; 4]) -> Result<Self> {
        let rects = vec![
            Rect::new(0.0, 0.0, 1.0, 1.0),
            Rect::new(-1.0, 0.0, 0.0, 1.0),
            Rect::new(-1.0, -1.0, 0.0, 0.0),
            Rect::new(0.0, -1.0, 1.0, 0.0),
        ];
        Self::new(rects, rho.to_vec())
    }

    /// (0,1)² split into a left and a right half.
    pub fn two_halves(rho: [f64; 2]) -> Result<Self> {
        let rects = vec![Rect::new(0.0, 0.0, 0.5, 1.0), Rect::new(0.5, 0.0, 1.0, 1.0)];
        Self::new(rects, rho.to_vec())
    }

    /// A single rectangular subdomain.
    pub fn single(rect: Rect, rho: f64) -> Result<Self> {
        Self::new(vec![rect], vec![rho])
    }
}

fn segments_equal(a: (Pt, Pt), b: (Pt, Pt), tol: f64) -> bool {
    let close = |p: Pt, q: Pt| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol;
    close(a.0, b.0) && close(a.1, b.1)
}

/// 1-D overlap length of two parallel axis-aligned segments, or 0.
fn side_overlap(a: (Pt, Pt), b: (Pt, Pt)) -> f64 {
    let vertical_a = (a.0[0] - a.1[0]).abs() < (a.0[1] - a.1[1]).abs();
    let vertical_b = (b.0[0] - b.1[0]).abs() < (b.0[1] - b.1[1]).abs();
    if vertical_a != vertical_b {
        return 0.0;
    }
    let (fixed, lo_a, hi_a, lo_b, hi_b) = if vertical_a {
        (a.0[0] - b.0[0], a.0[1], a.1[1], b.0[1], b.1[1])
    } else {
        (a.0[1] - b.0[1], a.0[0], a.1[0], b.0[0], b.1[0])
    };
    if fixed.abs() > 1e-12 {
        return 0.0;
    }
    (hi_a.min(hi_b) - lo_a.max(lo_b)).max(0.0)
}

fn derive_interfaces(rects: &[Rect], tol: f64) -> Result<Vec<Interface>> {
    let mut interfaces = Vec::new();
    for i in 0..rects.len() {
        for j in (i + 1)..rects.len() {
            let mut matched = None;
            let mut partial = false;
            for (sa, ea, na) in rects[i].sides() {
                for (sb, eb, _) in rects[j].sides() {
                    if segments_equal((sa, ea), (sb, eb), tol) {
                        matched = Some((sa, ea, na));
                    } else if side_overlap((sa, ea), (sb, eb)) > tol {
                        partial = true;
                    }
                }
            }
            match matched {
                Some((start, end, normal_i)) => {
                    // n_ij points from the lower index into the higher one.
                    interfaces.push(Interface {
                        pair: (i, j),
                        start,
                        end,
                        normal: normal_i,
                        length: crate::geo::dist(start, end),
                    });
                }
                None if partial => {
                    return Err(Error::InvalidPartition(format!(
                        "subdomains {i} and {j} share a partial side; the partition \
                         must be geometrically conforming"
                    )));
                }
                None => {}
            }
        }
    }
    Ok(interfaces)
}
