//! Point-to-multipoint sectors replacing p2p links to several children.

use super::geometry::{sectors_overlap, Sector};
use super::{point, Eligibility};
use crate::cnd::CapacityPlan;
use crate::error::{Error, Result};
use crate::model::{PlanningInstance, EPS};
use crate::steiner_tc::SteinerTree;

/// One sector antenna at `apex` aimed at `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpConfig {
    pub apex: usize,
    pub target: usize,
    /// Degrees.
    pub beamwidth: f64,
    pub radius: f64,
    /// Covered children in ascending order.
    pub covered: Vec<usize>,
}

impl MpConfig {
    pub fn sector(&self, inst: &PlanningInstance) -> Result<Sector> {
        Sector::new(point(inst, self.apex), point(inst, self.target), self.beamwidth, self.radius)
            .ok_or(Error::DegenerateDirection(inst.id(self.apex)))
    }
}

/// Whether the sector at `apex` toward `target` reaches the tree edge `a-b`.
///
/// An edge at the apex counts when its far endpoint lies in the sector; any
/// other edge counts when its segment meets the sector.
pub fn sector_covers(
    inst: &PlanningInstance,
    a: usize,
    b: usize,
    apex: usize,
    target: usize,
    beamwidth: f64,
    radius: f64,
) -> Result<bool> {
    let sector = Sector::new(point(inst, apex), point(inst, target), beamwidth, radius)
        .ok_or(Error::DegenerateDirection(inst.id(apex)))?;
    Ok(if a == apex {
        sector.contains(point(inst, b))
    } else if b == apex {
        sector.contains(point(inst, a))
    } else {
        sector.meets_segment(point(inst, a), point(inst, b))
    })
}

/// Checks cost, capacity, interference and same-apex disjointness for a
/// sector covering exactly `covered`.
pub(crate) fn constraints_hold(
    inst: &PlanningInstance,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    cfg: &MpConfig,
    adopted: &[MpConfig],
) -> Result<bool> {
    let ant = &inst.costs().antenna;
    let n = cfg.covered.len() as f64;
    if !(ant.mp < ant.pp * n) {
        return Ok(false);
    }
    let load: f64 = cfg.covered.iter().map(|&x| cap.flow(x)).sum();
    if load > inst.radio().link_capacity + EPS {
        return Ok(false);
    }
    for te in tree.edges() {
        if te.parent == cfg.apex && cfg.covered.contains(&te.child) {
            continue;
        }
        if sector_covers(inst, te.child, te.parent, cfg.apex, cfg.target, cfg.beamwidth, cfg.radius)? {
            return Ok(false);
        }
    }
    let apex = point(inst, cfg.apex);
    Ok(!adopted
        .iter()
        .filter(|o| o.apex == cfg.apex)
        .any(|o| sectors_overlap(apex, point(inst, cfg.target), cfg.beamwidth, point(inst, o.target), o.beamwidth)))
}

fn members(inst: &PlanningInstance, pool: &[usize], sector: &Sector) -> Vec<usize> {
    pool.iter().copied().filter(|&x| sector.contains(point(inst, x))).collect()
}

/// Narrows the sector aimed at `target` until the constraints hold or at most
/// one child is left. Each step drops the children on the current angular
/// boundary and pulls the radius in to the farthest survivor; when every
/// member sits on the axis the farthest one is dropped instead. An accepted
/// sector ends at its farthest member.
fn tune(
    inst: &PlanningInstance,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    apex: usize,
    target: usize,
    pool: &[usize],
    adopted: &[MpConfig],
) -> Result<Option<MpConfig>> {
    let radio = inst.radio();
    let v = point(inst, apex);
    let mut cfg = MpConfig { apex, target, beamwidth: radio.max_beamwidth, radius: radio.mp_range, covered: vec![] };
    let dir = point(inst, target);
    let angle_of = |x: usize| super::geometry::angle_between(v, dir, point(inst, x));
    cfg.covered = members(inst, pool, &cfg.sector(inst)?);
    loop {
        if cfg.covered.len() <= 1 {
            return Ok(None);
        }
        if constraints_hold(inst, tree, cap, &cfg, adopted)? {
            cfg.radius = cfg.covered.iter().map(|&x| inst.dist(apex, x)).fold(0.0, f64::max);
            return Ok(Some(cfg));
        }
        let widest = cfg.covered.iter().map(|&x| angle_of(x)).fold(0.0, f64::max);
        if widest > super::geometry::ANGLE_EPS {
            let inner = cfg.covered.iter().map(|&x| angle_of(x)).filter(|&a| a < widest - super::geometry::ANGLE_EPS);
            cfg.beamwidth = 2.0 * inner.fold(0.0, f64::max);
        } else {
            let far = cfg.covered.iter().map(|&x| inst.dist(apex, x)).fold(0.0, f64::max);
            cfg.radius = cfg.covered.iter().map(|&x| inst.dist(apex, x)).filter(|&d| d < far - EPS).fold(0.0, f64::max);
        }
        cfg.covered = members(inst, pool, &cfg.sector(inst)?);
        if let Some(far) = cfg.covered.iter().map(|&x| inst.dist(apex, x)).reduce(f64::max) {
            cfg.radius = far;
        }
    }
}

/// Greedy sector placement at `v`: tune one sector per remaining child,
/// adopt the one covering the most children (smaller target index on ties),
/// and repeat on the uncovered rest.
pub fn mp_ant_replace(
    inst: &PlanningInstance,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    v: usize,
    eligibility: &mut Eligibility,
    adopted: &mut Vec<MpConfig>,
) -> Result<Vec<MpConfig>> {
    let mut pool = eligibility.children(tree, cap, v);
    let mut placed = Vec::new();
    while !pool.is_empty() {
        let mut best: Option<MpConfig> = None;
        for &u in &pool {
            if let Some(c) = tune(inst, tree, cap, v, u, &pool, adopted)? {
                if best.as_ref().map_or(true, |b| c.covered.len() > b.covered.len()) {
                    best = Some(c);
                }
            }
        }
        let Some(cfg) = best else { break };
        log::debug!("sector at {} toward {} covers {:?}", inst.id(v), inst.id(cfg.target), cfg.covered);
        pool.retain(|x| !cfg.covered.contains(x));
        for &x in &cfg.covered {
            eligibility.mark(x);
        }
        adopted.push(cfg.clone());
        placed.push(cfg);
    }
    Ok(placed)
}

/// Visits non-leaf tree vertices deepest first and places sectors at each.
pub fn mp_deploy(
    inst: &PlanningInstance,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    eligibility: &mut Eligibility,
) -> Result<Vec<MpConfig>> {
    let mut adopted = Vec::new();
    for v in tree.internal_by_depth() {
        mp_ant_replace(inst, tree, cap, v, eligibility, &mut adopted)?;
    }
    Ok(adopted)
}
