//! Small planar geometry helpers used by the mesh modules.

/// A point or vector in the plane.
pub type Pt = [f64; 2];

pub fn sub(a: Pt, b: Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Pt, b: Pt) -> Pt {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Pt, s: f64) -> Pt {
    [a[0] * s, a[1] * s]
}

pub fn dot(a: Pt, b: Pt) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// z-component of the cross product of two planar vectors.
pub fn cross(a: Pt, b: Pt) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Pt) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: Pt, b: Pt) -> f64 {
    norm(sub(a, b))
}

pub fn midpoint(a: Pt, b: Pt) -> Pt {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Signed area of the triangle (a, b, c); positive for counterclockwise order.
pub fn signed_area(a: Pt, b: Pt, c: Pt) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

/// Longest edge length of the triangle.
pub fn diameter(a: Pt, b: Pt, c: Pt) -> f64 {
    dist(a, b).max(dist(b, c)).max(dist(c, a))
}

pub fn centroid(a: Pt, b: Pt, c: Pt) -> Pt {
    [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
}

/// Smallest interior angle of the triangle, in degrees.
pub fn min_angle_deg(a: Pt, b: Pt, c: Pt) -> f64 {
    let mut min = f64::INFINITY;
    let pts = [a, b, c];
    for i in 0..3 {
        let u = sub(pts[(i + 1) % 3], pts[i]);
        let v = sub(pts[(i + 2) % 3], pts[i]);
        let cosine = dot(u, v) / (norm(u) * norm(v));
        let angle = cosine.clamp(-1.0, 1.0).acos().to_degrees();
        min = min.min(angle);
    }
    min
}

/// Barycentric coordinates of `p` with respect to the triangle (a, b, c).
pub fn barycentric(p: Pt, a: Pt, b: Pt, c: Pt) -> [f64; 3] {
    let area = signed_area(a, b, c);
    let la = signed_area(p, b, c) / area;
    let lb = signed_area(a, p, c) / area;
    [la, lb, 1.0 - la - lb]
}

/// Whether `p` lies in the closed triangle (a, b, c), up to `tol` in
/// barycentric coordinates.
pub fn point_in_triangle(p: Pt, a: Pt, b: Pt, c: Pt, tol: f64) -> bool {
    let bary = barycentric(p, a, b, c);
    bary.iter().all(|&l| l >= -tol)
}

/// Affine map from the reference triangle (0,0)-(1,0)-(0,1) to a physical
/// triangle, with the inverse and the gradient transform.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: Pt,
    /// Columns are the edge vectors v1-v0 and v2-v0.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
}

impl AffineMap {
    pub fn new(v0: Pt, v1: Pt, v2: Pt) -> Self {
        let jac = [
            [v1[0] - v0[0], v2[0] - v0[0]],
            [v1[1] - v0[1], v2[1] - v0[1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        AffineMap { origin: v0, jac, det }
    }

    pub fn to_physical(&self, r: Pt) -> Pt {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn to_reference(&self, p: Pt) -> Pt {
        let d = sub(p, self.origin);
        [
            (self.jac[1][1] * d[0] - self.jac[0][1] * d[1]) / self.det,
            (-self.jac[1][0] * d[0] + self.jac[0][0] * d[1]) / self.det,
        ]
    }

    /// Push a reference gradient to the physical gradient (J^{-T} · g).
    pub fn grad_to_physical(&self, g: Pt) -> Pt {
        [
            (self.jac[1][1] * g[0] - self.jac[1][0] * g[1]) / self.det,
            (-self.jac[0][1] * g[0] + self.jac[0][0] * g[1]) / self.det,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_map_round_trip() {
        let m = AffineMap::new([1.0, 2.0], [3.0, 2.5], [1.5, 4.0]);
        let r = [0.3, 0.4];
        let p = m.to_physical(r);
        let back = m.to_reference(p);
        assert!((back[0] - r[0]).abs() < 1e-14);
        assert!((back[1] - r[1]).abs() < 1e-14);
    }

    #[test]
    fn right_isoceles_angles() {
        let angle = min_angle_deg([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert!((angle - 45.0).abs() < 1e-12);
    }

    #[test]
    fn barycentric_of_vertex() {
        let bary = barycentric([0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert!((bary[0] - 1.0).abs() < 1e-14);
        assert!(bary[1].abs() < 1e-14);
        assert!(bary[2].abs() < 1e-14);
    }
}
