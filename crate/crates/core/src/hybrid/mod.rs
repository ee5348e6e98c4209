//! Replacing underused p2p links to children with shared hyperlinks.
//!
//! Tree, routes and flows stay fixed. Only single-copy links from a vertex to
//! its children are candidates; the link to a vertex's parent never is.

mod check;
pub mod geometry;
mod mp;
mod omni;
mod power;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use check::verify_hybrid;
pub use mp::{mp_ant_replace, mp_deploy, sector_covers, MpConfig};
pub use omni::{omni_ant_replace, omni_deploy, omni_overlap, OmniConfig};
pub use power::{assign_transmit_power, Antenna, PowerSetting};

use crate::cnd::CapacityPlan;
use crate::error::{Error, Result};
use crate::model::{total_cost, CostReport, HeightFunction, PlanningInstance, EPS};
use crate::steiner_tc::SteinerTree;

pub(crate) fn point(inst: &PlanningInstance, v: usize) -> geometry::Point {
    let vx = inst.vertex(v);
    geometry::Point::new(vx.x, vx.y)
}

/// Tracks which child links have already been replaced.
#[derive(Clone, Debug)]
pub struct Eligibility {
    replaced: Vec<bool>,
}

impl Eligibility {
    pub fn new(n: usize) -> Self {
        Eligibility { replaced: vec![false; n] }
    }

    /// Children of `v` whose single-copy link is still a p2p link.
    pub fn children(&self, tree: &SteinerTree, cap: &CapacityPlan, v: usize) -> Vec<usize> {
        tree.children(v).iter().copied().filter(|&x| !self.replaced[x] && cap.copies(x) == 1).collect()
    }

    pub fn mark(&mut self, child: usize) {
        self.replaced[child] = true;
    }

    pub fn is_replaced(&self, child: usize) -> bool {
        self.replaced[child]
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.replaced
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pass {
    Mp,
    Omni,
}

/// Which replacement passes run, in order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HybridOrder {
    None,
    Mp,
    Omni,
    #[default]
    MpOmni,
    OmniMp,
}

impl HybridOrder {
    pub fn passes(self) -> &'static [Pass] {
        match self {
            HybridOrder::None => &[],
            HybridOrder::Mp => &[Pass::Mp],
            HybridOrder::Omni => &[Pass::Omni],
            HybridOrder::MpOmni => &[Pass::Mp, Pass::Omni],
            HybridOrder::OmniMp => &[Pass::Omni, Pass::Mp],
        }
    }
}

impl FromStr for HybridOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(HybridOrder::None),
            "mp" => Ok(HybridOrder::Mp),
            "omni" => Ok(HybridOrder::Omni),
            "mp,omni" => Ok(HybridOrder::MpOmni),
            "omni,mp" => Ok(HybridOrder::OmniMp),
            other => Err(Error::Config(format!("unknown hybrid order '{other}'"))),
        }
    }
}

impl fmt::Display for HybridOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HybridOrder::None => "none",
            HybridOrder::Mp => "mp",
            HybridOrder::Omni => "omni",
            HybridOrder::MpOmni => "mp,omni",
            HybridOrder::OmniMp => "omni,mp",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridPlan {
    pub order: HybridOrder,
    pub mp: Vec<MpConfig>,
    /// In placement order.
    pub omni: Vec<OmniConfig>,
    pub height_overrides: BTreeMap<usize, f64>,
    pub power: Vec<PowerSetting>,
    pub cost_before: CostReport,
    pub cost_after: CostReport,
}

impl HybridPlan {
    /// `replaced[x]` is set when the link from `x` to its parent is a hyperlink member.
    pub fn replaced(&self, n: usize) -> Vec<bool> {
        let mut out = vec![false; n];
        let covered = self.mp.iter().flat_map(|c| &c.covered).chain(self.omni.iter().flat_map(|c| &c.covered));
        for &x in covered {
            if x < n {
                out[x] = true;
            }
        }
        out
    }

    pub fn effective_heights(&self, h: &HeightFunction) -> HeightFunction {
        let mut out = h.clone();
        for (&v, &height) in &self.height_overrides {
            out.set(v, height);
        }
        out
    }

    pub fn cost_delta(&self) -> f64 {
        self.cost_after.total - self.cost_before.total
    }

    pub fn adopted(&self) -> usize {
        self.mp.len() + self.omni.len()
    }
}

/// Runs the requested passes, then assigns power and prices the result.
pub fn run_hybrid(
    inst: &PlanningInstance,
    h: &HeightFunction,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    order: HybridOrder,
) -> Result<HybridPlan> {
    let cost_before = total_cost(inst, h, tree, cap, None)?;
    let mut eligibility = Eligibility::new(inst.len());
    let mut heights = h.clone();
    let mut mp = Vec::new();
    let mut omni = Vec::new();
    for pass in order.passes() {
        match pass {
            Pass::Mp => mp = mp_deploy(inst, tree, cap, &mut eligibility)?,
            Pass::Omni => omni = omni_deploy(inst, tree, cap, &mut heights, &mut eligibility),
        }
    }
    let height_overrides: BTreeMap<usize, f64> =
        (0..inst.len()).filter(|&v| heights.at(v) != h.at(v)).map(|v| (v, heights.at(v))).collect();
    let replaced = eligibility.into_inner();
    let power = assign_transmit_power(inst, tree, cap, &replaced, &mp, &omni)?;
    let mut plan = HybridPlan {
        order,
        mp,
        omni,
        height_overrides,
        power,
        cost_before: cost_before.clone(),
        cost_after: cost_before,
    };
    plan.cost_after = total_cost(inst, h, tree, cap, Some(&plan))?;
    if plan.cost_delta() > EPS || (plan.adopted() > 0 && plan.cost_delta() >= 0.0) {
        return Err(Error::Inconsistent(format!(
            "hyperlinks changed cost by {} with {} configurations",
            plan.cost_delta(),
            plan.adopted()
        )));
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::InstanceBuilder;
    use crate::cnd::install_capacity;
    use crate::steiner_tc::steiner_tc_solve;

    #[test]
    fn order_parsing() {
        for s in ["none", "mp", "omni", "mp,omni", "omni,mp"] {
            assert_eq!(s.parse::<HybridOrder>().unwrap().to_string(), s);
        }
        assert!("mp,mp".parse::<HybridOrder>().is_err());
        assert_eq!(HybridOrder::default().passes(), &[Pass::Mp, Pass::Omni]);
    }

    fn star() -> PlanningInstance {
        InstanceBuilder::new()
            .heights(10.0, 30.0, 10.0)
            .tower_costs(vec![(10.0, 100.0), (20.0, 700.0), (30.0, 2000.0)])
            .radio(|r| {
                r.omni_range = 500.0;
                r.omni_capacity = 100.0;
            })
            .relay(1, 1000.0, 0.0, 10.0)
            .edge(0, 1, 0.0)
            .terminal(2, 1100.0, 0.0, 5.0)
            .terminal(3, 1100.0, 20.0, 5.0)
            .terminal(4, 1000.0, 300.0, 5.0)
            .edge(1, 2, 20.0)
            .edge(1, 3, 20.0)
            .edge(1, 4, 20.0)
            .build()
    }

    fn run(order: HybridOrder) -> (PlanningInstance, HybridPlan) {
        let inst = star();
        let sol = steiner_tc_solve(&inst).unwrap();
        let cap = install_capacity(&inst, &sol.tree).unwrap();
        let plan = run_hybrid(&inst, &sol.heights, &sol.tree, &cap, order).unwrap();
        verify_hybrid(&inst, &sol.heights, &sol.tree, &cap, &plan).unwrap();
        (inst, plan)
    }

    #[test]
    fn none_changes_nothing() {
        let (_, plan) = run(HybridOrder::None);
        assert_eq!(plan.adopted(), 0);
        assert_eq!(plan.cost_delta(), 0.0);
    }

    #[test]
    fn pass_order_matters() {
        let (_, mp_first) = run(HybridOrder::MpOmni);
        assert_eq!(mp_first.mp.len(), 1);
        assert_eq!(mp_first.mp[0].covered, vec![2, 3]);
        assert_eq!(mp_first.omni.len(), 1);
        assert_eq!(mp_first.omni[0].covered, vec![4]);

        let (_, omni_first) = run(HybridOrder::OmniMp);
        assert!(omni_first.mp.is_empty());
        assert_eq!(omni_first.omni[0].covered, vec![2, 3, 4]);
        assert!(omni_first.cost_delta() < mp_first.cost_delta());
    }

    #[test]
    fn disc_power_follows_the_final_radius() {
        let (inst, plan) = run(HybridOrder::Omni);
        let disc = plan.power.iter().find(|p| matches!(p.antenna, Antenna::Disc { .. })).unwrap();
        assert_eq!(disc.reach, plan.omni[0].radius);
        assert!(disc.reach < inst.radio().omni_range);
        assert_eq!(disc.power_dbm, inst.power_table().level_for(disc.reach).unwrap().power_dbm);
    }
}
