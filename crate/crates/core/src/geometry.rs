//! Planar primitives: points, segments and convex polygons.
//!
//! Polygons are stored counterclockwise. Consecutive collinear vertices are
//! allowed, so that a cell side carrying a hanging node can be represented
//! without breaking convexity checks.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Relative tolerance for geometric predicates, scaled by the local diameter.
pub const GEOM_TOL: f64 = 1e-12;

/// A point (or a displacement vector) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// Displacements share the point representation.
pub type Vec2 = Point2;

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotation by -90 degrees; the outward normal direction of a CCW side.
    pub fn perp_cw(self) -> Self {
        Self::new(self.y, -self.x)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// A nondegenerate straight segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidGeometry("non-finite segment endpoint".into()));
        }
        if a == b {
            return Err(Error::InvalidGeometry(format!(
                "segment endpoints coincide at ({}, {})",
                a.x, a.y
            )));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    /// Barycenter of the segment.
    pub fn midpoint(&self) -> Point2 {
        segment_midpoint(self)
    }

    /// Distance from `p` to the closed segment.
    pub fn distance_to(&self, p: Point2) -> f64 {
        let d = self.b - self.a;
        let t = ((p - self.a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        p.dist(self.a + d * t)
    }
}

pub fn segment_midpoint(s: &Segment) -> Point2 {
    Point2::new(0.5 * (s.a.x + s.b.x), 0.5 * (s.a.y + s.b.y))
}

/// A convex polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Validates and wraps a counterclockwise vertex loop.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite polygon vertex".into()));
        }
        let n = vertices.len();
        let diam = max_pairwise_distance(&vertices);
        if diam == 0.0 {
            return Err(Error::InvalidGeometry(
                "polygon collapses to a point".into(),
            ));
        }
        for i in 0..n {
            if vertices[i].dist(vertices[(i + 1) % n]) <= GEOM_TOL * diam {
                return Err(Error::InvalidGeometry(format!(
                    "repeated consecutive vertex at index {i}"
                )));
            }
        }
        let area = signed_area(&vertices);
        if area <= GEOM_TOL * diam * diam {
            return Err(Error::InvalidGeometry(format!(
                "polygon area {area:e} is not positive (clockwise or degenerate loop)"
            )));
        }
        let mut turning = 0.0;
        for i in 0..n {
            let e0 = vertices[(i + 1) % n] - vertices[i];
            let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
            let c = e0.cross(e1);
            if c < -GEOM_TOL * e0.norm() * e1.norm() {
                return Err(Error::InvalidGeometry(format!(
                    "polygon is not convex at vertex {}",
                    (i + 1) % n
                )));
            }
            turning += c.atan2(e0.dot(e1));
        }
        if (turning - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
            return Err(Error::InvalidGeometry(
                "polygon boundary winds more than once".into(),
            ));
        }
        Ok(Self { vertices })
    }

    /// Builds a polygon, reversing a clockwise loop first.
    pub fn from_any_orientation(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() >= 3 && signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Sides in counterclockwise order; a side `(a, b)` has the interior on its left.
    pub fn sides(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        polygon_measure(self)
    }

    pub fn centroid(&self) -> Point2 {
        polygon_centroid(self)
    }

    pub fn diameter(&self) -> f64 {
        polygon_diameter(self)
    }

    /// Strict interior test, with a margin of `GEOM_TOL * diam`.
    pub fn contains_strictly(&self, p: Point2) -> bool {
        let tol = GEOM_TOL * self.diameter();
        self.sides().all(|(a, b)| {
            let d = b - a;
            d.cross(p - a) / d.norm() > tol
        })
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.sides()
            .map(|(a, b)| Segment { a, b }.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, t: Vec2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&p| p + t).collect(),
        }
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

fn max_pairwise_distance(v: &[Point2]) -> f64 {
    let mut d = 0.0f64;
    for (i, p) in v.iter().enumerate() {
        for q in &v[i + 1..] {
            d = d.max(p.dist(*q));
        }
    }
    d
}

/// Shoelace area.
pub fn polygon_measure(p: &ConvexPolygon) -> f64 {
    signed_area(&p.vertices)
}

/// Area-weighted centroid.
pub fn polygon_centroid(p: &ConvexPolygon) -> Point2 {
    // Shift to the first vertex to limit cancellation in the cross products.
    let o = p.vertices[0];
    let n = p.vertices.len();
    let mut a2 = 0.0;
    let mut c = Point2::ZERO;
    for i in 0..n {
        let pi = p.vertices[i] - o;
        let pj = p.vertices[(i + 1) % n] - o;
        let w = pi.cross(pj);
        a2 += w;
        c += (pi + pj) * w;
    }
    o + c * (1.0 / (3.0 * a2))
}

/// Largest vertex-to-vertex distance, which is the diameter of a convex polygon.
pub fn polygon_diameter(p: &ConvexPolygon) -> f64 {
    max_pairwise_distance(&p.vertices)
}

/// A supporting half-plane `normal . x <= offset` with unit normal.
#[derive(Clone, Copy, Debug)]
struct HalfPlane {
    normal: Vec2,
    offset: f64,
}

fn supporting_half_planes(p: &ConvexPolygon) -> Vec<HalfPlane> {
    let diam = p.diameter();
    let mut planes: Vec<HalfPlane> = Vec::with_capacity(p.len());
    for (a, b) in p.sides() {
        let d = b - a;
        let normal = d.perp_cw() * (1.0 / d.norm());
        let offset = normal.dot(a);
        // Collinear sides (hanging nodes) carry the same supporting line.
        let dup = planes.iter().any(|h| {
            (h.normal - normal).norm() <= 1e-9 && (h.offset - offset).abs() <= 1e-9 * diam
        });
        if !dup {
            planes.push(HalfPlane { normal, offset });
        }
    }
    planes
}

/// Chebyshev center and radius of the largest inscribed disk.
///
/// Solves `max r` subject to `n_i . c + r <= d_i` over the supporting lines.
/// With three unknowns the optimum sits on a basis of three active
/// constraints; all bases are enumerated and the best feasible one kept.
pub fn chebyshev_center(p: &ConvexPolygon) -> Result<(Point2, f64)> {
    let planes = supporting_half_planes(p);
    let scale = p.diameter();
    let feas_tol = 1e-10 * scale;
    let mut best: Option<(Point2, f64)> = None;
    let m = planes.len();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let rows = [planes[i], planes[j], planes[k]];
                let Some((c, r)) = solve_active_set(&rows) else {
                    continue;
                };
                if r <= 0.0 {
                    continue;
                }
                let feasible = planes
                    .iter()
                    .all(|h| h.normal.dot(c) + r <= h.offset + feas_tol);
                if feasible && best.is_none_or(|(_, rb)| r > rb) {
                    best = Some((c, r));
                }
            }
        }
    }
    best.ok_or_else(|| Error::InvalidGeometry("inscribed-disk linear program is infeasible".into()))
}

/// Solves the 3x3 system of three active constraints by Cramer's rule.
fn solve_active_set(rows: &[HalfPlane; 3]) -> Option<(Point2, f64)> {
    let a = rows.map(|h| [h.normal.x, h.normal.y, 1.0]);
    let b = rows.map(|h| h.offset);
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let det = det3(&a);
    if det.abs() < 1e-12 {
        return None;
    }
    let mut sol = [0.0; 3];
    for (col, s) in sol.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][col] = b[r];
        }
        *s = det3(&m) / det;
    }
    Some((Point2::new(sol[0], sol[1]), sol[2]))
}

/// Radius of the largest disk contained in the polygon.
pub fn polygon_inradius(p: &ConvexPolygon) -> Result<f64> {
    chebyshev_center(p).map(|(_, r)| r)
}

/// Unit normal to `s`, pointing out of `cell`.
pub fn outward_normal(s: &Segment, cell: &ConvexPolygon) -> Result<Vec2> {
    let tol = 1e-9 * cell.diameter();
    let on_side = cell.sides().any(|(a, b)| {
        let side = Segment { a, b };
        side.distance_to(s.a) <= tol && side.distance_to(s.b) <= tol
    });
    if !on_side {
        return Err(Error::InvalidGeometry(format!(
            "segment ({}, {})-({}, {}) does not lie on the cell boundary",
            s.a.x, s.a.y, s.b.x, s.b.y
        )));
    }
    let d = s.b - s.a;
    let n = d.perp_cw() * (1.0 / d.norm());
    if n.dot(s.midpoint() - cell.centroid()) < 0.0 {
        Ok(-n)
    } else {
        Ok(n)
    }
}

/// Recovers a constant vector from its normal components on the sides of a
/// polygon: `(1/m) sum_sides |side| (e . n) (x_side - x_ref)`.
///
/// Equals `e` exactly for any reference point; this is the identity behind
/// the discrete gradient of the mixed finite volume scheme.
pub fn reconstruct_from_side_fluxes(p: &ConvexPolygon, reference: Point2, e: Vec2) -> Vec2 {
    let mut acc = Point2::ZERO;
    for (a, b) in p.sides() {
        let d = b - a;
        let len = d.norm();
        let n = d.perp_cw() * (1.0 / len);
        let mid = Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
        acc += (mid - reference) * (len * e.dot(n));
    }
    acc * (1.0 / p.area())
}
