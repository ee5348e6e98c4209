use serde::{Deserialize, Serialize};

use super::{HeightFunction, PlanningInstance};
use crate::cnd::CapacityPlan;
use crate::error::{Error, Result};
use crate::hybrid::HybridPlan;
use crate::steiner_tc::SteinerTree;

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct CostReport {
    pub tower: f64,
    pub link: f64,
    pub antenna: f64,
    pub total: f64,
}

/// Tower, link and antenna cost of a plan.
///
/// Towers are charged at terminals. A non-terminal raised by a hyperlink pays
/// the difference to its existing tower. Every p2p link copy carries two PP
/// antennas unless a hyperlink replaced it.
pub fn total_cost(
    inst: &PlanningInstance,
    h: &HeightFunction,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    hybrid: Option<&HybridPlan>,
) -> Result<CostReport> {
    for l in &cap.loads {
        if tree.parent(l.child) != Some(l.parent) {
            return Err(Error::Inconsistent(format!(
                "flow on edge {}-{} which is not in the tree",
                inst.id(l.child),
                inst.id(l.parent)
            )));
        }
    }
    if cap.loads.len() != tree.edge_count() {
        return Err(Error::Inconsistent("capacity plan does not cover every tree edge".into()));
    }

    let effective = hybrid.map_or_else(|| h.clone(), |p| p.effective_heights(h));
    let mut tower: f64 = inst.terminals().iter().map(|&t| inst.tower_cost(effective.at(t))).sum();
    if let Some(p) = hybrid {
        for (&v, &height) in &p.height_overrides {
            if !inst.is_terminal(v) {
                tower += inst.tower_cost(height) - inst.tower_cost(h.at(v));
            }
        }
    }

    let link: f64 = cap.loads.iter().map(|l| inst.costs().link.cost(l.copies)).sum();

    let ant = &inst.costs().antenna;
    let replaced = hybrid.map_or_else(|| vec![false; inst.len()], |p| p.replaced(inst.len()));
    let mut antenna: f64 = cap
        .loads
        .iter()
        .map(|l| {
            let p2p = if replaced[l.child] { l.copies - 1 } else { l.copies };
            2.0 * ant.pp * p2p as f64
        })
        .sum();
    if let Some(p) = hybrid {
        antenna += p.mp.iter().map(|c| ant.mp + ant.pp * c.covered.len() as f64).sum::<f64>();
        antenna += p.omni.iter().map(|c| ant.omni + ant.omni_sd * c.covered.len() as f64).sum::<f64>();
    }

    Ok(CostReport { tower, link, antenna, total: tower + link + antenna })
}
