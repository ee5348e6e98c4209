//! Re-verification of a hybrid plan from first principles.
//!
//! Sector reach is recomputed by clipping each segment parametrically against
//! the disc and the angular wedge, which shares no code with the search.

use crate::cnd::CapacityPlan;
use crate::error::{Error, Result};
use crate::model::{total_cost, HeightFunction, PlanningInstance, EPS};
use crate::steiner_tc::SteinerTree;

use super::HybridPlan;

const SLACK: f64 = 1e-7;

type Interval = (f64, f64);

fn intersect(a: Interval, b: Interval) -> Option<Interval> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo <= hi + SLACK).then_some((lo, hi))
}

/// Parameters `t` in `[0, 1]` with `c0 + t c1 >= 0`.
fn half_line(c0: f64, c1: f64) -> Option<Interval> {
    let unit = (0.0, 1.0);
    if c1.abs() < 1e-15 {
        return (c0 >= -SLACK).then_some(unit);
    }
    let root = -c0 / c1;
    if c1 > 0.0 {
        intersect(unit, (root, f64::INFINITY))
    } else {
        intersect(unit, (f64::NEG_INFINITY, root))
    }
}

struct Wedge {
    ox: f64,
    oy: f64,
    /// Direction angle in radians.
    dir: f64,
    half: f64,
    radius: f64,
}

impl Wedge {
    fn holds(&self, px: f64, py: f64) -> bool {
        let (dx, dy) = (px - self.ox, py - self.oy);
        let r = dx.hypot(dy);
        if r > self.radius * (1.0 + 1e-12) + SLACK {
            return false;
        }
        if r < SLACK || self.half >= std::f64::consts::PI {
            return true;
        }
        let cos = (dx * self.dir.cos() + dy * self.dir.sin()) / r;
        cos >= self.half.cos() - 1e-9
    }

    /// Whether some point of segment `p-q` lies in the wedge.
    fn reaches(&self, p: (f64, f64), q: (f64, f64)) -> bool {
        let (ax, ay) = (p.0 - self.ox, p.1 - self.oy);
        let (sx, sy) = (q.0 - p.0, q.1 - p.1);

        // Disc part: |a + t s|^2 <= r^2.
        let qa = sx * sx + sy * sy;
        let qb = 2.0 * (ax * sx + ay * sy);
        let qc = ax * ax + ay * ay - self.radius * self.radius;
        let disc_part = if qa < 1e-15 {
            (qc <= SLACK * self.radius.max(1.0)).then_some((0.0, 1.0))
        } else {
            let d = qb * qb - 4.0 * qa * qc;
            if d < -SLACK * qa * self.radius.max(1.0) {
                None
            } else {
                let root = d.max(0.0).sqrt();
                intersect((0.0, 1.0), ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)))
            }
        };
        let Some(disc_part) = disc_part else { return false };
        if self.half >= std::f64::consts::PI {
            return true;
        }

        // Wedge part: the two bounding half-planes through the apex.
        let side = |angle: f64, sign: f64| {
            let (bx, by) = (angle.cos(), angle.sin());
            // sign * cross(b, a + t s) >= 0
            half_line(sign * (bx * ay - by * ax), sign * (bx * sy - by * sx))
        };
        let right = side(self.dir - self.half, 1.0);
        let left = side(self.dir + self.half, -1.0);
        let pieces: Vec<Interval> = if self.half <= std::f64::consts::FRAC_PI_2 {
            match (right, left) {
                (Some(r), Some(l)) => intersect(r, l).into_iter().collect(),
                _ => vec![],
            }
        } else {
            right.into_iter().chain(left).collect()
        };
        pieces.into_iter().filter_map(|iv| intersect(iv, disc_part)).any(|(lo, hi)| {
            // Confirm on a sample point to absorb tolerance at the seams.
            let t = ((lo + hi) / 2.0).clamp(0.0, 1.0);
            let ends = [lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0), t];
            ends.iter().any(|&t| self.holds(p.0 + t * sx, p.1 + t * sy))
        })
    }
}

fn pos(inst: &PlanningInstance, v: usize) -> (f64, f64) {
    let vx = inst.vertex(v);
    (vx.x, vx.y)
}

fn fail<T>(msg: String) -> Result<T> {
    Err(Error::Inconsistent(msg))
}

/// Checks every adopted configuration against cost, capacity, range and
/// interference rules, plus height overrides and the cost totals.
pub fn verify_hybrid(
    inst: &PlanningInstance,
    h: &HeightFunction,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    plan: &HybridPlan,
) -> Result<()> {
    let radio = inst.radio();
    let ant = &inst.costs().antenna;
    let n = inst.len();
    let mut owner = vec![0u32; n];
    let tree_edges = tree.edges();

    for c in &plan.mp {
        let id = inst.id(c.apex);
        if c.covered.len() < 2 {
            return fail(format!("sector at {id} covers fewer than two children"));
        }
        if !(c.beamwidth >= 0.0 && c.beamwidth <= radio.max_beamwidth + EPS) {
            return fail(format!("sector at {id} has beamwidth {}", c.beamwidth));
        }
        if !(c.radius > 0.0 && c.radius <= radio.mp_range + EPS) {
            return fail(format!("sector at {id} has radius {}", c.radius));
        }
        let (ox, oy) = pos(inst, c.apex);
        let (tx, ty) = pos(inst, c.target);
        if (tx - ox).hypot(ty - oy) <= EPS {
            return Err(Error::DegenerateDirection(id));
        }
        let wedge =
            Wedge { ox, oy, dir: (ty - oy).atan2(tx - ox), half: c.beamwidth.to_radians() / 2.0, radius: c.radius };
        let mut load = 0.0;
        for &x in &c.covered {
            if tree.parent(x) != Some(c.apex) {
                return fail(format!("sector at {id} covers non-child {}", inst.id(x)));
            }
            if cap.copies(x) != 1 {
                return fail(format!("sector at {id} replaces multi-copy link to {}", inst.id(x)));
            }
            let (px, py) = pos(inst, x);
            if !wedge.holds(px, py) {
                return fail(format!("child {} lies outside the sector at {id}", inst.id(x)));
            }
            owner[x] += 1;
            load += cap.flow(x);
        }
        if !(ant.mp < ant.pp * c.covered.len() as f64) {
            return fail(format!("sector at {id} does not save antenna cost"));
        }
        if load > radio.link_capacity + EPS {
            return fail(format!("sector at {id} carries {load} over capacity"));
        }
        for te in &tree_edges {
            if te.parent == c.apex && c.covered.contains(&te.child) {
                continue;
            }
            let hit = if te.parent == c.apex || te.child == c.apex {
                let other = if te.parent == c.apex { te.child } else { te.parent };
                let (px, py) = pos(inst, other);
                wedge.holds(px, py)
            } else {
                wedge.reaches(pos(inst, te.child), pos(inst, te.parent))
            };
            if hit {
                return fail(format!(
                    "sector at {id} interferes with edge {}-{}",
                    inst.id(te.child),
                    inst.id(te.parent)
                ));
            }
        }
    }
    for (i, a) in plan.mp.iter().enumerate() {
        for b in &plan.mp[i + 1..] {
            if a.apex != b.apex {
                continue;
            }
            let (ox, oy) = pos(inst, a.apex);
            let (ax, ay) = pos(inst, a.target);
            let (bx, by) = pos(inst, b.target);
            let da = (ay - oy).atan2(ax - ox);
            let db = (by - oy).atan2(bx - ox);
            let mut gap = (da - db).abs().to_degrees() % 360.0;
            if gap > 180.0 {
                gap = 360.0 - gap;
            }
            if gap + 1e-9 < (a.beamwidth + b.beamwidth) / 2.0 {
                return fail(format!("sectors at {} overlap", inst.id(a.apex)));
            }
        }
    }

    let mut expected_overrides = std::collections::BTreeMap::new();
    for c in &plan.omni {
        let id = inst.id(c.center);
        if c.covered.is_empty() {
            return fail(format!("disc at {id} covers nothing"));
        }
        if !(c.radius >= 0.0 && c.radius <= radio.omni_range + EPS) {
            return fail(format!("disc at {id} has radius {}", c.radius));
        }
        let mut load = 0.0;
        for &x in &c.covered {
            if tree.parent(x) != Some(c.center) {
                return fail(format!("disc at {id} covers non-child {}", inst.id(x)));
            }
            if cap.copies(x) != 1 {
                return fail(format!("disc at {id} replaces multi-copy link to {}", inst.id(x)));
            }
            let (cx, cy) = pos(inst, c.center);
            let (px, py) = pos(inst, x);
            if (px - cx).hypot(py - cy) > c.radius + EPS {
                return fail(format!("child {} is outside the disc at {id}", inst.id(x)));
            }
            owner[x] += 1;
            load += cap.flow(x);
        }
        if load > radio.omni_capacity + EPS {
            return fail(format!("disc at {id} carries {load} over capacity"));
        }
        let leaves: Vec<usize> = c.covered.iter().copied().filter(|&x| tree.children(x).is_empty()).collect();
        if leaves != c.subordinate {
            return fail(format!("disc at {id} lists the wrong subordinate set"));
        }
        let cost = |height: f64| inst.tower_cost(height);
        let k = c.covered.len() as f64;
        let lhs = ant.omni
            + ant.omni_sd * k
            + cost(radio.omni_height.max(h.at(c.center)))
            + leaves.len() as f64 * cost(radio.omni_sd_height);
        let rhs = 2.0 * ant.pp * k + cost(h.at(c.center)) + leaves.iter().map(|&u| cost(h.at(u))).sum::<f64>();
        if !(lhs < rhs) {
            return fail(format!("disc at {id} does not lower cost ({lhs} vs {rhs})"));
        }
        expected_overrides.insert(c.center, radio.omni_height.max(h.at(c.center)));
        for &u in &leaves {
            expected_overrides.insert(u, radio.omni_sd_height);
        }
    }
    for (i, a) in plan.omni.iter().enumerate() {
        for b in &plan.omni[i + 1..] {
            let (ax, ay) = pos(inst, a.center);
            let (bx, by) = pos(inst, b.center);
            if (ax - bx).hypot(ay - by) < a.radius + b.radius {
                return fail(format!("discs at {} and {} overlap", inst.id(a.center), inst.id(b.center)));
            }
        }
    }
    if let Some(x) = (0..n).find(|&x| owner[x] > 1) {
        return fail(format!("link above {} is replaced twice", inst.id(x)));
    }
    expected_overrides.retain(|&v, height| *height != h.at(v));
    if expected_overrides != plan.height_overrides {
        return fail("height overrides do not match the discs".into());
    }

    let before = total_cost(inst, h, tree, cap, None)?;
    let after = total_cost(inst, h, tree, cap, Some(plan))?;
    if (before.total - plan.cost_before.total).abs() > 1e-6 || (after.total - plan.cost_after.total).abs() > 1e-6 {
        return fail("recorded costs do not match a fresh recomputation".into());
    }
    if after.total > before.total + EPS || (plan.adopted() > 0 && after.total >= before.total) {
        return fail(format!("hyperlinks raise cost from {} to {}", before.total, after.total));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter() -> Wedge {
        Wedge { ox: 0.0, oy: 0.0, dir: 0.0, half: std::f64::consts::FRAC_PI_4, radius: 10.0 }
    }

    #[test]
    fn wedge_agrees_with_hand_cases() {
        let w = quarter();
        assert!(w.reaches((3.0, 0.0), (4.0, 0.0)));
        assert!(!w.reaches((20.0, -1.0), (20.0, 1.0)));
        assert!(w.reaches((9.0, -1.0), (12.0, 1.0)));
        assert!(w.reaches((2.0, -5.0), (2.0, 5.0)));
        assert!(!w.reaches((-1.0, -5.0), (-1.0, 5.0)));
        assert!(!w.reaches((0.0, 5.0), (-5.0, 5.0)));
    }

    #[test]
    fn wide_wedge() {
        let w = Wedge { ox: 0.0, oy: 0.0, dir: 0.0, half: 150f64.to_radians(), radius: 5.0 };
        assert!(!w.reaches((-4.0, -1.0), (-4.0, 1.0)));
        assert!(w.reaches((-4.0, -3.0), (-4.0, 3.0)));
    }
}
