//! Planar primitives for sectors and discs. Angles are in degrees.

use crate::model::EPS;

/// Angular slack when testing sector membership.
pub const ANGLE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }
}

/// Unsigned angle in `[0, 180]` between rays `apex→a` and `apex→b`.
pub fn angle_between(apex: Point, a: Point, b: Point) -> f64 {
    let (da, db) = (a.sub(apex), b.sub(apex));
    da.cross(db).atan2(da.dot(db)).abs().to_degrees()
}

/// Closed sector with apex, unit direction, half-angle and radius.
#[derive(Clone, Copy, Debug)]
pub struct Sector {
    pub apex: Point,
    dir: Point,
    pub half_angle: f64,
    pub radius: f64,
}

impl Sector {
    /// `None` when `toward` coincides with the apex.
    pub fn new(apex: Point, toward: Point, beamwidth: f64, radius: f64) -> Option<Self> {
        let d = toward.sub(apex);
        let n = d.norm();
        if n <= EPS {
            return None;
        }
        Some(Sector { apex, dir: d.scale(1.0 / n), half_angle: beamwidth / 2.0, radius })
    }

    fn angle_to(&self, p: Point) -> f64 {
        let d = p.sub(self.apex);
        self.dir.cross(d).atan2(self.dir.dot(d)).abs().to_degrees()
    }

    pub fn contains(&self, p: Point) -> bool {
        let r = p.dist(self.apex);
        if r > self.radius + EPS {
            return false;
        }
        r <= EPS || self.angle_to(p) <= self.half_angle + ANGLE_EPS
    }

    /// End of the boundary radius rotated by `sign * half_angle`.
    fn edge_tip(&self, sign: f64) -> Point {
        let a = (sign * self.half_angle).to_radians();
        let (s, c) = a.sin_cos();
        let rotated = Point::new(self.dir.x * c - self.dir.y * s, self.dir.x * s + self.dir.y * c);
        self.apex.add(rotated.scale(self.radius))
    }

    /// Whether the closed segment `a-b` meets the closed sector.
    pub fn meets_segment(&self, a: Point, b: Point) -> bool {
        if self.contains(a) || self.contains(b) {
            return true;
        }
        if self.half_angle >= 180.0 - ANGLE_EPS {
            return segment_point_distance(a, b, self.apex) <= self.radius + EPS;
        }
        for sign in [1.0, -1.0] {
            if segments_meet(self.apex, self.edge_tip(sign), a, b) {
                return true;
            }
        }
        circle_crossings(a, b, self.apex, self.radius).into_iter().any(|p| self.contains(p))
    }
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) - EPS && p.x <= a.x.max(b.x) + EPS && p.y >= a.y.min(b.y) - EPS && p.y <= a.y.max(b.y) + EPS
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

/// Closed segment intersection, collinear overlaps included.
pub fn segments_meet(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let scale = [p1, p2, q1, q2].iter().map(|p| p.x.abs().max(p.y.abs())).fold(1.0, f64::max);
    let tol = EPS * scale * scale;
    let sgn = |v: f64| {
        if v > tol {
            1
        } else if v < -tol {
            -1
        } else {
            0
        }
    };
    let d1 = sgn(orient(q1, q2, p1));
    let d2 = sgn(orient(q1, q2, p2));
    let d3 = sgn(orient(p1, p2, q1));
    let d4 = sgn(orient(p1, p2, q2));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on_segment(q1, q2, p1))
        || (d2 == 0 && on_segment(q1, q2, p2))
        || (d3 == 0 && on_segment(p1, p2, q1))
        || (d4 == 0 && on_segment(p1, p2, q2))
}

pub fn segment_point_distance(a: Point, b: Point, p: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 <= 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

/// Points where the segment crosses the circle.
fn circle_crossings(a: Point, b: Point, center: Point, radius: f64) -> Vec<Point> {
    let d = b.sub(a);
    let f = a.sub(center);
    let qa = d.dot(d);
    if qa <= 0.0 {
        return vec![];
    }
    let qb = 2.0 * f.dot(d);
    let qc = f.dot(f) - radius * radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return vec![];
    }
    let root = disc.sqrt();
    [(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)]
        .into_iter()
        .filter(|t| (-EPS..=1.0 + EPS).contains(t))
        .map(|t| a.add(d.scale(t)))
        .collect()
}

/// Two discs overlap when their centers are closer than the radii sum;
/// tangent discs do not.
pub fn discs_overlap(c1: Point, r1: f64, c2: Point, r2: f64) -> bool {
    c1.dist(c2) < r1 + r2
}

/// Two sectors at one apex share more than a boundary ray.
pub fn sectors_overlap(apex: Point, dir1: Point, bw1: f64, dir2: Point, bw2: f64) -> bool {
    angle_between(apex, dir1, dir2) < (bw1 + bw2) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter() -> Sector {
        Sector::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 90.0, 10.0).unwrap()
    }

    #[test]
    fn membership() {
        let s = quarter();
        assert!(s.contains(Point::new(3.0, 0.0)));
        assert!(!s.contains(Point::new(0.0, 5.0)));
        assert!(s.contains(Point::new(5.0, 5.0)));
        assert!(!s.contains(Point::new(11.0, 0.0)));
        assert!(s.contains(Point::new(10.0, 0.0)));
    }

    #[test]
    fn segment_tests() {
        let s = quarter();
        assert!(!s.meets_segment(Point::new(20.0, -1.0), Point::new(20.0, 1.0)));
        // crosses the arc only
        assert!(s.meets_segment(Point::new(9.0, -1.0), Point::new(12.0, 1.0)));
        // crosses both boundary radii without endpoints inside
        assert!(s.meets_segment(Point::new(2.0, -5.0), Point::new(2.0, 5.0)));
        // passes behind the apex
        assert!(!s.meets_segment(Point::new(-1.0, -5.0), Point::new(-1.0, 5.0)));
        // touches the apex
        assert!(s.meets_segment(Point::new(-1.0, 0.0), Point::new(0.0, 0.0)));
    }

    #[test]
    fn wide_sector_segment() {
        let s = Sector::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 300.0, 5.0).unwrap();
        assert!(s.contains(Point::new(-3.0, 3.0)));
        assert!(!s.contains(Point::new(-3.0, 0.0)));
        assert!(!s.meets_segment(Point::new(-4.0, -1.0), Point::new(-4.0, 1.0)));
        // one end outside the notch
        assert!(s.meets_segment(Point::new(-4.0, -1.0), Point::new(-1.0, 1.0)));
    }

    #[test]
    fn degenerate_direction() {
        assert!(Sector::new(Point::new(1.0, 1.0), Point::new(1.0, 1.0), 90.0, 5.0).is_none());
    }

    #[test]
    fn disc_overlap_is_strict() {
        let o = Point::new(0.0, 0.0);
        assert!(discs_overlap(o, 5.0, Point::new(8.0, 0.0), 4.0));
        assert!(!discs_overlap(o, 5.0, Point::new(10.0, 0.0), 4.0));
        assert!(!discs_overlap(o, 5.0, Point::new(9.0, 0.0), 4.0));
    }

    #[test]
    fn sector_disjointness() {
        let o = Point::new(0.0, 0.0);
        assert!(sectors_overlap(o, Point::new(1.0, 0.0), 90.0, Point::new(0.0, 1.0), 100.0));
        assert!(!sectors_overlap(o, Point::new(1.0, 0.0), 90.0, Point::new(0.0, 1.0), 90.0));
    }
}
