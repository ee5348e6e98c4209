//! End-to-end pipeline and the serialized plan document.
//!
//! Every vertex in a [`PlanDocument`] is referenced by id. Field order is
//! fixed, and identical inputs give byte-identical JSON.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{bound_report, BoundReport};
use crate::cnd::{install_capacity, residual_capacity, verify_capacity_plan, CapacityPlan, EdgeLoad, Group};
use crate::error::{Error, Result};
use crate::hybrid::{
    assign_transmit_power, run_hybrid, verify_hybrid, Antenna, HybridOrder, HybridPlan, MpConfig, OmniConfig,
    PowerSetting,
};
use crate::model::{cover, los_holds, total_cost, CostReport, HeightFunction, PlanningInstance, VertexId, EPS};
use crate::steiner_tc::{steiner_tc_solve, IterationTrace, SteinerSolution, SteinerTree};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlanOptions {
    pub hybrid: HybridOrder,
    /// Include the greedy iteration trace.
    pub trace: bool,
}

/// In-memory results of one pipeline run.
#[derive(Clone, Debug)]
pub struct PlanArtifacts {
    pub solution: SteinerSolution,
    pub capacity: CapacityPlan,
    pub hybrid: Option<HybridPlan>,
    pub cost: CostReport,
    pub bounds: BoundReport,
}

/// Heights, tree, capacity, optional hyperlinks, then cost and bounds.
pub fn execute(inst: &PlanningInstance, hybrid: HybridOrder) -> Result<PlanArtifacts> {
    let solution = steiner_tc_solve(inst)?;
    let capacity = install_capacity(inst, &solution.tree)?;
    let hybrid = match hybrid {
        HybridOrder::None => None,
        order => Some(run_hybrid(inst, &solution.heights, &solution.tree, &capacity, order)?),
    };
    let cost = total_cost(inst, &solution.heights, &solution.tree, &capacity, hybrid.as_ref())?;
    let bounds = bound_report(inst)?;
    Ok(PlanArtifacts { solution, capacity, hybrid, cost, bounds })
}

pub fn run_pipeline(inst: &PlanningInstance, opts: PlanOptions) -> Result<PlanDocument> {
    let artifacts = execute(inst, opts.hybrid)?;
    PlanDocument::build(inst, &artifacts, opts.trace)
}

/// Hex SHA-256 of the canonical instance JSON.
pub fn instance_digest(inst: &PlanningInstance) -> Result<String> {
    Ok(format!("{:x}", Sha256::digest(inst.to_json()?.as_bytes())))
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct HeightEntry {
    pub id: VertexId,
    pub height: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct TreeEdgeDoc {
    pub child: VertexId,
    pub parent: VertexId,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct TreeDoc {
    pub root: VertexId,
    pub edges: Vec<TreeEdgeDoc>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct GroupDoc {
    pub hub: VertexId,
    pub members: Vec<VertexId>,
    pub demand: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct LoadDoc {
    pub child: VertexId,
    pub parent: VertexId,
    /// Toward the landline.
    pub up: f64,
    pub down: f64,
    pub flow: f64,
    pub copies: u32,
    pub residual: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct RouteDoc {
    pub terminal: VertexId,
    pub path: Vec<VertexId>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct CapacityDoc {
    pub link_capacity: f64,
    pub groups: Vec<GroupDoc>,
    pub edges: Vec<LoadDoc>,
    pub routes: Vec<RouteDoc>,
    pub hub_distance_sum: usize,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct MpDoc {
    pub apex: VertexId,
    pub target: VertexId,
    /// Degrees.
    pub beamwidth: f64,
    pub radius: f64,
    pub covered: Vec<VertexId>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct OmniDoc {
    pub center: VertexId,
    pub radius: f64,
    pub covered: Vec<VertexId>,
    pub subordinate: Vec<VertexId>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "antenna", rename_all = "snake_case")]
pub enum AntennaDoc {
    Link { child: VertexId, parent: VertexId },
    Sector { apex: VertexId, target: VertexId },
    Disc { center: VertexId },
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct PowerDoc {
    #[serde(flatten)]
    pub antenna: AntennaDoc,
    pub reach: f64,
    pub power_dbm: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct HybridDoc {
    pub order: String,
    pub mp: Vec<MpDoc>,
    pub omni: Vec<OmniDoc>,
    pub height_overrides: Vec<HeightEntry>,
    pub power: Vec<PowerDoc>,
    pub cost_before: CostReport,
    pub cost_after: CostReport,
    pub cost_delta: f64,
}

/// The serialized result of a planning run.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct PlanDocument {
    pub instance_digest: String,
    pub heights: Vec<HeightEntry>,
    pub tree: TreeDoc,
    pub capacity: CapacityDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hybrid: Option<HybridDoc>,
    pub cost: CostReport,
    pub bounds: BoundReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<IterationTrace>,
}

fn ids(inst: &PlanningInstance, idx: &[usize]) -> Vec<VertexId> {
    idx.iter().map(|&i| inst.id(i)).collect()
}

fn indices(inst: &PlanningInstance, ids: &[VertexId]) -> Result<Vec<usize>> {
    ids.iter().map(|&id| inst.index_of(id)).collect()
}

impl PlanDocument {
    pub fn build(inst: &PlanningInstance, a: &PlanArtifacts, trace: bool) -> Result<Self> {
        let tree = &a.solution.tree;
        let cap = &a.capacity;
        let heights =
            (0..inst.len()).map(|i| HeightEntry { id: inst.id(i), height: a.solution.heights.at(i) }).collect();
        let tree_doc = TreeDoc {
            root: inst.id(tree.root()),
            edges: tree
                .edges()
                .iter()
                .map(|e| TreeEdgeDoc { child: inst.id(e.child), parent: inst.id(e.parent) })
                .collect(),
        };
        let capacity = CapacityDoc {
            link_capacity: cap.capacity(),
            groups: cap
                .groups
                .iter()
                .map(|g| GroupDoc { hub: inst.id(g.hub), members: ids(inst, &g.members), demand: g.demand })
                .collect(),
            edges: cap
                .loads
                .iter()
                .map(|l| LoadDoc {
                    child: inst.id(l.child),
                    parent: inst.id(l.parent),
                    up: l.up,
                    down: l.down,
                    flow: l.flow(),
                    copies: l.copies,
                    residual: residual_capacity(l.flow(), cap.capacity()),
                })
                .collect(),
            routes: cap
                .routes
                .iter()
                .enumerate()
                .filter_map(|(t, r)| r.as_ref().map(|p| RouteDoc { terminal: inst.id(t), path: ids(inst, p) }))
                .collect(),
            hub_distance_sum: cap.hub_distance_sum(tree),
        };
        let hybrid = a.hybrid.as_ref().map(|p| hybrid_doc(inst, p));
        Ok(PlanDocument {
            instance_digest: instance_digest(inst)?,
            heights,
            tree: tree_doc,
            capacity,
            hybrid,
            cost: a.cost.clone(),
            bounds: a.bounds.clone(),
            trace: trace.then(|| a.solution.trace.clone()),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn height_function(&self, inst: &PlanningInstance) -> Result<HeightFunction> {
        let map = self.heights.iter().map(|e| (e.id, e.height)).collect();
        HeightFunction::from_map(inst, &map)
    }

    pub fn steiner_tree(&self, inst: &PlanningInstance) -> Result<SteinerTree> {
        let links = self
            .tree
            .edges
            .iter()
            .map(|e| Ok((inst.index_of(e.child)?, inst.index_of(e.parent)?)))
            .collect::<Result<Vec<_>>>()?;
        SteinerTree::from_parents(inst, inst.index_of(self.tree.root)?, &links)
    }

    pub fn capacity_plan(&self, inst: &PlanningInstance, tree: &SteinerTree) -> Result<CapacityPlan> {
        let c = &self.capacity;
        let groups = c
            .groups
            .iter()
            .map(|g| Ok(Group { members: indices(inst, &g.members)?, hub: inst.index_of(g.hub)?, demand: g.demand }))
            .collect::<Result<Vec<_>>>()?;
        let mut routes = vec![None; inst.len()];
        for r in &c.routes {
            routes[inst.index_of(r.terminal)?] = Some(indices(inst, &r.path)?);
        }
        let loads = c
            .edges
            .iter()
            .map(|l| {
                let child = inst.index_of(l.child)?;
                let parent = inst.index_of(l.parent)?;
                let edge = tree
                    .parent_edge(child)
                    .filter(|_| tree.parent(child) == Some(parent))
                    .or_else(|| inst.edge_between(child, parent))
                    .ok_or_else(|| Error::Inconsistent(format!("no edge {}-{}", l.child, l.parent)))?;
                Ok(EdgeLoad { child, parent, edge, up: l.up, down: l.down, copies: l.copies })
            })
            .collect::<Result<Vec<_>>>()?;
        CapacityPlan::from_parts(groups, routes, loads, inst.len(), c.link_capacity)
    }

    pub fn hybrid_plan(&self, inst: &PlanningInstance) -> Result<Option<HybridPlan>> {
        let Some(d) = &self.hybrid else { return Ok(None) };
        let mp =
            d.mp.iter()
                .map(|c| {
                    Ok(MpConfig {
                        apex: inst.index_of(c.apex)?,
                        target: inst.index_of(c.target)?,
                        beamwidth: c.beamwidth,
                        radius: c.radius,
                        covered: indices(inst, &c.covered)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        let omni = d
            .omni
            .iter()
            .map(|c| {
                Ok(OmniConfig {
                    center: inst.index_of(c.center)?,
                    radius: c.radius,
                    covered: indices(inst, &c.covered)?,
                    subordinate: indices(inst, &c.subordinate)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let height_overrides =
            d.height_overrides.iter().map(|e| Ok((inst.index_of(e.id)?, e.height))).collect::<Result<_>>()?;
        let power = d
            .power
            .iter()
            .map(|p| {
                let antenna = match p.antenna {
                    AntennaDoc::Link { child, parent } => {
                        Antenna::Link { child: inst.index_of(child)?, parent: inst.index_of(parent)? }
                    }
                    AntennaDoc::Sector { apex, target } => {
                        Antenna::Sector { apex: inst.index_of(apex)?, target: inst.index_of(target)? }
                    }
                    AntennaDoc::Disc { center } => Antenna::Disc { center: inst.index_of(center)? },
                };
                Ok(PowerSetting { antenna, reach: p.reach, power_dbm: p.power_dbm })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(HybridPlan {
            order: d.order.parse()?,
            mp,
            omni,
            height_overrides,
            power,
            cost_before: d.cost_before.clone(),
            cost_after: d.cost_after.clone(),
        }))
    }
}

fn hybrid_doc(inst: &PlanningInstance, p: &HybridPlan) -> HybridDoc {
    HybridDoc {
        order: p.order.to_string(),
        mp: p
            .mp
            .iter()
            .map(|c| MpDoc {
                apex: inst.id(c.apex),
                target: inst.id(c.target),
                beamwidth: c.beamwidth,
                radius: c.radius,
                covered: ids(inst, &c.covered),
            })
            .collect(),
        omni: p
            .omni
            .iter()
            .map(|c| OmniDoc {
                center: inst.id(c.center),
                radius: c.radius,
                covered: ids(inst, &c.covered),
                subordinate: ids(inst, &c.subordinate),
            })
            .collect(),
        height_overrides: p
            .height_overrides
            .iter()
            .map(|(&v, &height)| HeightEntry { id: inst.id(v), height })
            .collect(),
        power: p
            .power
            .iter()
            .map(|s| PowerDoc {
                antenna: match s.antenna {
                    Antenna::Link { child, parent } => {
                        AntennaDoc::Link { child: inst.id(child), parent: inst.id(parent) }
                    }
                    Antenna::Sector { apex, target } => {
                        AntennaDoc::Sector { apex: inst.id(apex), target: inst.id(target) }
                    }
                    Antenna::Disc { center } => AntennaDoc::Disc { center: inst.id(center) },
                },
                reach: s.reach,
                power_dbm: s.power_dbm,
            })
            .collect(),
        cost_before: p.cost_before.clone(),
        cost_after: p.cost_after.clone(),
        cost_delta: p.cost_delta(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
}

fn same_cost(a: &CostReport, b: &CostReport) -> bool {
    close(a.tower, b.tower) && close(a.link, b.link) && close(a.antenna, b.antenna) && close(a.total, b.total)
}

/// Re-checks a stored plan against its instance without rerunning any solver.
///
/// Links replaced by an omni disc are exempt from the line-of-sight check
/// under overridden heights; the disc itself carries them.
pub fn validate(inst: &PlanningInstance, doc: &PlanDocument) -> Result<()> {
    let fail = |msg: String| Err(Error::Inconsistent(msg));
    if doc.instance_digest != instance_digest(inst)? {
        return fail("instance digest does not match".into());
    }
    let h = doc.height_function(inst)?;
    h.validate(inst)?;
    if cover(inst, &h).phi() != 1 {
        return fail("covered subgraph does not connect every terminal".into());
    }
    let tree = doc.steiner_tree(inst)?;
    if tree.root() != inst.landline() {
        return fail("tree is not rooted at the landline".into());
    }
    if let Some(&t) = inst.terminals().iter().find(|&&t| !tree.contains(t)) {
        return fail(format!("terminal {} is not in the tree", inst.id(t)));
    }
    let hybrid = doc.hybrid_plan(inst)?;
    let effective = hybrid.as_ref().map_or_else(|| h.clone(), |p| p.effective_heights(&h));
    let mut on_disc = vec![false; inst.len()];
    for c in hybrid.iter().flat_map(|p| &p.omni) {
        for &x in &c.covered {
            on_disc[x] = true;
        }
    }
    for te in tree.edges() {
        let ob = inst.edges()[te.edge].ob;
        for (label, heights) in [("base", &h), ("effective", &effective)] {
            if label == "effective" && on_disc[te.child] {
                continue;
            }
            if !los_holds(heights.at(te.child), heights.at(te.parent), ob) {
                return fail(format!(
                    "tree edge {}-{} lacks line of sight under {label} heights",
                    inst.id(te.child),
                    inst.id(te.parent)
                ));
            }
        }
    }

    let cap = doc.capacity_plan(inst, &tree)?;
    verify_capacity_plan(inst, &tree, &cap)?;
    if (cap.capacity() - inst.radio().link_capacity).abs() > EPS {
        return fail("capacity plan uses a different link capacity".into());
    }
    for l in &doc.capacity.edges {
        let flow = l.up + l.down;
        if !close(flow, l.flow) || !close(residual_capacity(flow, cap.capacity()), l.residual) {
            return fail(format!("flow or residual mismatch on edge {}-{}", l.child, l.parent));
        }
    }
    if cap.hub_distance_sum(&tree) != doc.capacity.hub_distance_sum {
        return fail("hub distance sum mismatch".into());
    }

    if let Some(p) = &hybrid {
        verify_hybrid(inst, &h, &tree, &cap, p)?;
        let power = assign_transmit_power(inst, &tree, &cap, &p.replaced(inst.len()), &p.mp, &p.omni)?;
        if power != p.power {
            return fail("transmit power settings do not match the configurations".into());
        }
        let delta = doc.hybrid.as_ref().map_or(0.0, |d| d.cost_delta);
        if !close(delta, p.cost_delta()) {
            return fail("cost delta mismatch".into());
        }
    }
    let cost = total_cost(inst, &h, &tree, &cap, hybrid.as_ref())?;
    if !same_cost(&cost, &doc.cost) {
        return fail(format!("cost mismatch: recomputed {} against {}", cost.total, doc.cost.total));
    }
    let bounds = bound_report(inst)?;
    if bounds.case != doc.bounds.case
        || !close(bounds.ratio, doc.bounds.ratio)
        || !close(bounds.gamma, doc.bounds.gamma)
    {
        return fail("bound report mismatch".into());
    }
    Ok(())
}
