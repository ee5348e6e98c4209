//! Omnidirectional discs replacing p2p links to nearby children.

use super::geometry::discs_overlap;
use super::{point, Eligibility};
use crate::cnd::CapacityPlan;
use crate::model::{HeightFunction, PlanningInstance, EPS};
use crate::steiner_tc::SteinerTree;

#[derive(Clone, Debug, PartialEq)]
pub struct OmniConfig {
    pub center: usize,
    pub radius: f64,
    /// Covered children in ascending order.
    pub covered: Vec<usize>,
    /// Covered leaves, whose towers drop to the subordinate height.
    pub subordinate: Vec<usize>,
}

/// Disc overlap with the strict rule: tangent discs are disjoint.
pub fn omni_overlap(inst: &PlanningInstance, u: usize, rad_u: f64, v: usize, rad_v: f64) -> bool {
    discs_overlap(point(inst, u), rad_u, point(inst, v), rad_v)
}

fn farthest(inst: &PlanningInstance, v: usize, xs: &[usize]) -> f64 {
    xs.iter().map(|&x| inst.dist(v, x)).fold(0.0, f64::max)
}

/// Whether replacing links to `covered` (with leaves `subordinate`) by a disc
/// at `v` lowers antenna plus tower cost, under heights `h`.
pub(crate) fn cost_reduced(
    inst: &PlanningInstance,
    h: &HeightFunction,
    v: usize,
    covered: &[usize],
    subordinate: &[usize],
) -> bool {
    let radio = inst.radio();
    let ant = &inst.costs().antenna;
    let n = covered.len() as f64;
    let sd_new: f64 = subordinate.iter().map(|_| inst.tower_cost(radio.omni_sd_height)).sum();
    let sd_old: f64 = subordinate.iter().map(|&u| inst.tower_cost(h.at(u))).sum();
    let lhs = ant.omni + ant.omni_sd * n + inst.tower_cost(radio.omni_height.max(h.at(v))) + sd_new;
    let rhs = 2.0 * ant.pp * n + inst.tower_cost(h.at(v)) + sd_old;
    lhs < rhs
}

fn max_by_key_then_index(xs: &[usize], key: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for &x in xs {
        let k = key(x);
        if best.map_or(true, |(bk, bx)| k > bk + EPS || ((k - bk).abs() <= EPS && x < bx)) {
            best = Some((k, x));
        }
    }
    best.map(|(_, x)| x)
}

/// Trims the children within range of `v` until cost and capacity hold and
/// the disc clears every placed disc. While the disc overlaps another the
/// farthest child goes; otherwise the heaviest, leaves last. The radius
/// always follows the farthest remaining child.
pub fn omni_ant_replace(
    inst: &PlanningInstance,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    h: &HeightFunction,
    placed: &[OmniConfig],
    v: usize,
    eligibility: &Eligibility,
) -> Option<OmniConfig> {
    let radio = inst.radio();
    let mut covered: Vec<usize> =
        eligibility.children(tree, cap, v).into_iter().filter(|&x| inst.dist(v, x) <= radio.omni_range + EPS).collect();
    loop {
        if covered.is_empty() {
            return None;
        }
        let radius = farthest(inst, v, &covered);
        let subordinate: Vec<usize> = covered.iter().copied().filter(|&x| tree.is_leaf(x)).collect();
        let overlaps = placed.iter().any(|p| omni_overlap(inst, p.center, p.radius, v, radius));
        let load: f64 = covered.iter().map(|&x| cap.flow(x)).sum();
        if !overlaps && load <= radio.omni_capacity + EPS && cost_reduced(inst, h, v, &covered, &subordinate) {
            return Some(OmniConfig { center: v, radius, covered, subordinate });
        }
        let evict = if overlaps {
            max_by_key_then_index(&covered, |x| inst.dist(v, x))
        } else {
            let inner: Vec<usize> = covered.iter().copied().filter(|x| !subordinate.contains(x)).collect();
            let pool = if inner.is_empty() { &covered } else { &inner };
            max_by_key_then_index(pool, |x| cap.flow(x))
        }
        .expect("covered is non-empty");
        covered.retain(|&x| x != evict);
    }
}

/// Deepest-first disc placement. Each success raises the center to at least
/// the omni height and drops its covered leaves to the subordinate height in
/// `h`, so later placements see the updated towers.
pub fn omni_deploy(
    inst: &PlanningInstance,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    h: &mut HeightFunction,
    eligibility: &mut Eligibility,
) -> Vec<OmniConfig> {
    let radio = inst.radio();
    let mut placed: Vec<OmniConfig> = Vec::new();
    for v in tree.internal_by_depth() {
        if let Some(cfg) = omni_ant_replace(inst, tree, cap, h, &placed, v, eligibility) {
            log::debug!("disc at {} radius {:.1} covers {:?}", inst.id(v), cfg.radius, cfg.covered);
            h.set(v, radio.omni_height.max(h.at(v)));
            for &u in &cfg.subordinate {
                h.set(u, radio.omni_sd_height);
            }
            for &x in &cfg.covered {
                eligibility.mark(x);
            }
            placed.push(cfg);
        }
    }
    placed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::InstanceBuilder;
    use crate::cnd::install_capacity;
    use crate::steiner_tc::steiner_tc_solve;

    /// Tower table `{10: 100, 20: 700, 30: 2000}`.
    fn builder() -> InstanceBuilder {
        InstanceBuilder::new()
            .heights(10.0, 30.0, 10.0)
            .tower_costs(vec![(10.0, 100.0), (20.0, 700.0), (30.0, 2000.0)])
            .antenna(50.0, 90.0, 600.0, 80.0)
            .radio(|r| {
                r.omni_capacity = 100.0;
                r.omni_range = 1000.0;
                r.omni_height = 20.0;
                r.omni_sd_height = 10.0;
            })
    }

    fn plan(b: InstanceBuilder) -> (PlanningInstance, SteinerTree, CapacityPlan, HeightFunction) {
        let inst = b.build();
        let sol = steiner_tc_solve(&inst).unwrap();
        let cap = install_capacity(&inst, &sol.tree).unwrap();
        (inst, sol.tree, cap, sol.heights)
    }

    #[test]
    fn overlap_examples() {
        let inst = builder().terminal(1, 8.0, 0.0, 1.0).terminal(2, 10.0, 0.0, 1.0).terminal(3, 9.0, 0.0, 1.0).build();
        assert!(omni_overlap(&inst, 0, 5.0, 1, 4.0));
        assert!(!omni_overlap(&inst, 0, 5.0, 2, 4.0));
        assert!(!omni_overlap(&inst, 0, 5.0, 3, 4.0));
    }

    /// Relay 1 at x = 1000 hangs off the landline; leaves `2..` hang off the relay.
    fn relay_star(b: InstanceBuilder, leaves: &[(f64, f64, f64)], ob: f64) -> InstanceBuilder {
        let mut b = b.relay(1, 1000.0, 0.0, 10.0).edge(0, 1, 0.0);
        for (i, &(dx, dy, demand)) in leaves.iter().enumerate() {
            let id = i as u32 + 2;
            b = b.terminal(id, 1000.0 + dx, dy, demand).edge(1, id, ob);
        }
        b
    }

    #[test]
    fn tall_leaves_are_worth_a_disc() {
        // Each leaf needs 30 m to clear ob 20 against the 10 m relay.
        let b = relay_star(builder(), &[(100.0, 0.0, 5.0), (0.0, 100.0, 5.0), (-100.0, 0.0, 5.0)], 20.0);
        let (inst, tree, cap, mut h) = plan(b);
        for t in 2..=4 {
            assert_eq!(h.at(t), 30.0);
        }
        let mut el = Eligibility::new(inst.len());
        let cfgs = omni_deploy(&inst, &tree, &cap, &mut h, &mut el);
        assert_eq!(cfgs.len(), 1);
        assert_eq!(cfgs[0].center, 1);
        assert_eq!(cfgs[0].covered, vec![2, 3, 4]);
        assert_eq!(cfgs[0].subordinate, vec![2, 3, 4]);
        assert_eq!(h.at(1), 20.0);
        assert_eq!(h.at(2), 10.0);
    }

    #[test]
    fn heaviest_child_goes_first() {
        let b = builder().radio(|r| r.omni_capacity = 10.0);
        let b = relay_star(b, &[(100.0, 0.0, 6.0), (0.0, 100.0, 4.0), (-100.0, 0.0, 6.0)], 20.0);
        let (inst, tree, cap, h) = plan(b);
        let el = Eligibility::new(inst.len());
        let cfg = omni_ant_replace(&inst, &tree, &cap, &h, &[], 1, &el).unwrap();
        assert_eq!(cfg.covered, vec![3, 4]);
    }

    #[test]
    fn overlap_drops_the_farthest_child() {
        let b = relay_star(builder(), &[(100.0, 0.0, 5.0), (-300.0, 0.0, 5.0)], 20.0);
        let (inst, tree, cap, h) = plan(b);
        let el = Eligibility::new(inst.len());
        let other = OmniConfig { center: 3, radius: 150.0, covered: vec![], subordinate: vec![] };
        let cfg = omni_ant_replace(&inst, &tree, &cap, &h, &[other], 1, &el).unwrap();
        assert_eq!(cfg.covered, vec![2]);
        assert_eq!(cfg.radius, 100.0);
    }

    #[test]
    fn nothing_passes_the_cost_test() {
        // Leaves already at the floor: a disc only adds antenna cost.
        let b = relay_star(builder(), &[(100.0, 0.0, 5.0), (-100.0, 0.0, 5.0)], 0.0);
        let (inst, tree, cap, mut h) = plan(b);
        let before = h.clone();
        let mut el = Eligibility::new(inst.len());
        assert!(omni_deploy(&inst, &tree, &cap, &mut h, &mut el).is_empty());
        assert_eq!(h, before);
    }

    #[test]
    fn distant_subtrees_get_separate_discs() {
        let mut b = builder().radio(|r| {
            r.p2p_range = 1.0e6;
            r.omni_range = 200.0;
        });
        b = b.terminal(1, 5000.0, 0.0, 5.0).edge(0, 1, 0.0);
        b = b.terminal(2, -5000.0, 0.0, 5.0).edge(0, 2, 0.0);
        for (id, parent, x) in [(3, 1, 5100.0), (4, 1, 4900.0), (5, 2, -5100.0), (6, 2, -4900.0)] {
            b = b.terminal(id, x, 50.0, 5.0).edge(parent, id, 20.0);
        }
        let (inst, tree, cap, mut h) = plan(b);
        let mut el = Eligibility::new(inst.len());
        let cfgs = omni_deploy(&inst, &tree, &cap, &mut h, &mut el);
        let centers: Vec<usize> = cfgs.iter().map(|c| c.center).collect();
        assert_eq!(centers, vec![1, 2]);
    }
}
