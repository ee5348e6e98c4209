//! Greedy tower-height selection.
//!
//! Each iteration evaluates, for every terminal `v` and every height increment
//! on a doubling grid, the cheapest star of logical neighbors around `v`
//! ([`star_steiner_tc`]) and applies the proposal with the lowest
//! cost-to-benefit ratio. The loop stops once all terminals share one covered
//! component; the covered subgraph is then reduced to a Steiner tree.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cover, los_holds, CoverState, HeightFunction, PlanningInstance, VertexId, EPS};

/// Smallest on-grid raise `β` at `u` so that `fixed_side + h(u) + β >= 2 ob`.
///
/// Returns `None` when even the top grid height at `u` is not enough.
pub fn min_increment_to_cover(inst: &PlanningInstance, ob: f64, fixed_side: f64, current: f64) -> Option<f64> {
    let required = 2.0 * ob - fixed_side;
    if current >= required - EPS {
        return Some(0.0);
    }
    let target = inst.snap_up(required)?;
    Some((target - current).max(0.0))
}

/// A terminal reachable from the star center through non-terminals only.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalNeighbor {
    pub terminal: usize,
    /// Vertex indices from the center to `terminal`; length 2 for a direct edge.
    pub path: Vec<usize>,
    /// Height raise needed at `terminal`.
    pub beta: f64,
    /// Tower cost of that raise.
    pub cost: f64,
}

impl LogicalNeighbor {
    pub fn is_direct(&self) -> bool {
        self.path.len() == 2
    }

    /// Relay vertices strictly between the center and the terminal.
    pub fn interior(&self) -> &[usize] {
        &self.path[1..self.path.len() - 1]
    }
}

/// A relay path `(v, v1, .., vs, u)` with non-terminal interior.
#[derive(Clone, Debug, PartialEq)]
pub struct RelayPath {
    pub vertices: Vec<usize>,
    pub beta: f64,
}

/// Orders candidate routes to one neighbor: smaller raise, fewer hops, then
/// lexicographically smaller interior.
fn route_order(a_beta: f64, a_interior: &[usize], b_beta: f64, b_interior: &[usize]) -> Ordering {
    a_beta
        .partial_cmp(&b_beta)
        .unwrap_or(Ordering::Equal)
        .then(a_interior.len().cmp(&b_interior.len()))
        .then_with(|| a_interior.cmp(b_interior))
}

/// Breadth-first search over non-terminals from `v` raised by `delta`.
///
/// Returns, per reached non-terminal, its hop count and the lexicographically
/// smallest shortest interior sequence leading to it.
fn relay_frontier(inst: &PlanningInstance, h: &HeightFunction, v: usize, delta: f64) -> Vec<Option<Vec<usize>>> {
    let mut reached: Vec<Option<Vec<usize>>> = vec![None; inst.len()];
    let mut queue = VecDeque::new();
    let raised = h.at(v) + delta;
    for &(r, e) in inst.neighbors(v) {
        if !inst.is_terminal(r) && los_holds(raised, h.at(r), inst.edges()[e].ob) {
            reached[r] = Some(vec![r]);
            queue.push_back(r);
        }
    }
    while let Some(r) = queue.pop_front() {
        for &(s, e) in inst.neighbors(r) {
            if inst.is_terminal(s) || reached[s].is_some() {
                continue;
            }
            if los_holds(h.at(r), h.at(s), inst.edges()[e].ob) {
                let mut seq = reached[r].clone().unwrap();
                seq.push(s);
                reached[s] = Some(seq);
                queue.push_back(s);
            }
        }
    }
    reached
}

/// Best relay options (excluding the direct edge) for every terminal.
fn relay_options(
    inst: &PlanningInstance,
    h: &HeightFunction,
    v: usize,
    delta: f64,
) -> BTreeMap<usize, (f64, Vec<usize>)> {
    let frontier = relay_frontier(inst, h, v, delta);
    let mut best: BTreeMap<usize, (f64, Vec<usize>)> = BTreeMap::new();
    for (r, seq) in frontier.iter().enumerate() {
        let Some(seq) = seq else { continue };
        for &(u, e) in inst.neighbors(r) {
            if u == v || !inst.is_terminal(u) {
                continue;
            }
            let Some(beta) = min_increment_to_cover(inst, inst.edges()[e].ob, h.at(r), h.at(u)) else {
                continue;
            };
            let better = match best.get(&u) {
                None => true,
                Some((b, s)) => route_order(beta, seq, *b, s) == Ordering::Less,
            };
            if better {
                best.insert(u, (beta, seq.clone()));
            }
        }
    }
    best
}

/// Terminals outside `v`'s component that `v`, raised by `delta`, can reach
/// directly or through covered non-terminal relays. Each comes with its
/// cheapest route; a direct edge wins ties.
pub fn logical_neighbors(
    inst: &PlanningInstance,
    h: &HeightFunction,
    state: &CoverState,
    v: usize,
    delta: f64,
) -> Vec<LogicalNeighbor> {
    let raised = h.at(v) + delta;
    let mut options = relay_options(inst, h, v, delta);
    for &(u, e) in inst.neighbors(v) {
        if !inst.is_terminal(u) {
            continue;
        }
        if let Some(beta) = min_increment_to_cover(inst, inst.edges()[e].ob, raised, h.at(u)) {
            let better = match options.get(&u) {
                None => true,
                Some((b, s)) => route_order(beta, &[], *b, s) != Ordering::Greater,
            };
            if better {
                options.insert(u, (beta, Vec::new()));
            }
        }
    }
    options
        .into_iter()
        .filter(|&(u, _)| !state.same_component(u, v))
        .map(|(u, (beta, interior))| {
            let mut path = Vec::with_capacity(interior.len() + 2);
            path.push(v);
            path.extend(interior);
            path.push(u);
            let cost = inst.tower_cost(h.at(u) + beta) - inst.tower_cost(h.at(u));
            LogicalNeighbor { terminal: u, path, beta, cost }
        })
        .collect()
}

/// Cheapest path from `v` (raised by `delta`) to `u` whose interior is made of
/// non-terminals, ignoring any direct edge.
pub fn best_relay_path(
    inst: &PlanningInstance,
    h: &HeightFunction,
    v: usize,
    delta: f64,
    u: usize,
) -> Result<RelayPath> {
    let options = relay_options(inst, h, v, delta);
    let (beta, interior) =
        options.get(&u).ok_or(Error::NotLogicalNeighbor { center: inst.id(v), neighbor: inst.id(u) })?;
    let mut vertices = vec![v];
    vertices.extend(interior.iter().copied());
    vertices.push(u);
    Ok(RelayPath { vertices, beta: *beta })
}

/// Height increments chosen around one center vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementProposal {
    pub center: usize,
    pub delta: f64,
    /// Chosen neighbors, ascending by cost.
    pub neighbors: Vec<LogicalNeighbor>,
    /// Total tower cost increase, center included.
    pub cost: f64,
    /// Number of terminal components merged into the center's.
    pub benefit: usize,
    pub ratio: f64,
}

impl IncrementProposal {
    /// `(vertex, raise)` pairs with the center first.
    pub fn increments(&self) -> Vec<(usize, f64)> {
        std::iter::once((self.center, self.delta)).chain(self.neighbors.iter().map(|n| (n.terminal, n.beta))).collect()
    }

    pub fn apply(&self, h: &mut HeightFunction) {
        for (i, raise) in self.increments() {
            h.set(i, h.at(i) + raise);
        }
    }
}

/// Best star around `v` raised by `delta`: sort per-component cheapest
/// neighbors by cost and take the prefix with the lowest average cost per
/// merged component. `None` stands for an infinite ratio.
pub fn star_steiner_tc(
    inst: &PlanningInstance,
    h: &HeightFunction,
    state: &CoverState,
    v: usize,
    delta: f64,
) -> Option<IncrementProposal> {
    let center_cost = inst.tower_cost(h.at(v) + delta) - inst.tower_cost(h.at(v));
    let mut list = logical_neighbors(inst, h, state, v, delta);
    list.sort_by(|a, b| {
        a.cost
            .partial_cmp(&b.cost)
            .unwrap_or(Ordering::Equal)
            .then(a.beta.partial_cmp(&b.beta).unwrap_or(Ordering::Equal))
            .then(a.terminal.cmp(&b.terminal))
    });
    let mut seen_components = Vec::new();
    list.retain(|n| {
        let c = state.component(n.terminal);
        if seen_components.contains(&c) {
            false
        } else {
            seen_components.push(c);
            true
        }
    });

    let mut best_ratio = f64::INFINITY;
    let mut best_k = 0;
    let mut running = center_cost;
    for (i, n) in list.iter().enumerate() {
        running += n.cost;
        let ratio = running / (i + 1) as f64;
        if ratio < best_ratio {
            best_ratio = ratio;
            best_k = i + 1;
        }
    }
    if best_k == 0 {
        return None;
    }
    list.truncate(best_k);
    let cost = center_cost + list.iter().map(|n| n.cost).sum::<f64>();
    Some(IncrementProposal { center: v, delta, neighbors: list, cost, benefit: best_k, ratio: best_ratio })
}

/// `{step, 2 step, 4 step, ..} ∪ {cap}`, all capped at `cap`.
pub fn doubling_increments(step: f64, cap: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if cap <= EPS {
        return out;
    }
    let mut d = step;
    while d < cap - EPS {
        out.push(d);
        d *= 2.0;
    }
    out.push(cap);
    out
}

/// One applied greedy step.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub center: VertexId,
    pub delta: f64,
    /// Tower cost increase `c_i`.
    pub cost: f64,
    /// Components merged as counted by the star, `b_i`.
    pub benefit: usize,
    pub ratio: f64,
    pub phi_before: usize,
    pub phi_after: usize,
}

#[derive(Serialize, Deserialize, Clone, Debug, Default, PartialEq)]
pub struct IterationTrace(pub Vec<IterationRecord>);

impl IterationTrace {
    pub fn total_cost(&self) -> f64 {
        self.0.iter().map(|r| r.cost).sum()
    }
}

/// Covered tree connecting every terminal, rooted at the landline.
#[derive(Clone, Debug, PartialEq)]
pub struct SteinerTree {
    root: usize,
    in_tree: Vec<bool>,
    parent: Vec<Option<usize>>,
    parent_edge: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
}

/// A tree edge, identified by its lower endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub child: usize,
    pub parent: usize,
    pub edge: usize,
}

impl SteinerTree {
    /// Builds a tree from parent links. Fails on cycles, unknown edges or
    /// vertices that do not reach the root.
    pub fn from_parents(inst: &PlanningInstance, root: usize, links: &[(usize, usize)]) -> Result<Self> {
        let n = inst.len();
        let mut parent = vec![None; n];
        let mut parent_edge = vec![None; n];
        let mut in_tree = vec![false; n];
        in_tree[root] = true;
        for &(child, p) in links {
            if child == root || parent[child].is_some() {
                return Err(Error::Inconsistent(format!("vertex {} has two parents", inst.id(child))));
            }
            let e = inst.edge_between(child, p).ok_or_else(|| {
                Error::Inconsistent(format!("tree edge {}-{} is not in the graph", inst.id(child), inst.id(p)))
            })?;
            parent[child] = Some(p);
            parent_edge[child] = Some(e);
            in_tree[child] = true;
            in_tree[p] = true;
        }
        let mut depth = vec![0; n];
        for v in 0..n {
            if !in_tree[v] {
                continue;
            }
            let mut d = 0;
            let mut cur = v;
            while let Some(p) = parent[cur] {
                d += 1;
                cur = p;
                if d > n {
                    return Err(Error::Inconsistent("tree contains a cycle".into()));
                }
            }
            if cur != root {
                return Err(Error::Inconsistent(format!("vertex {} does not reach the root", inst.id(v))));
            }
            depth[v] = d;
        }
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = parent[v] {
                children[p].push(v);
            }
        }
        Ok(SteinerTree { root, in_tree, parent, parent_edge, children, depth })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn contains(&self, v: usize) -> bool {
        self.in_tree[v]
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.in_tree.iter().enumerate().filter(|(_, &t)| t).map(|(i, _)| i)
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parent_edge(&self, v: usize) -> Option<usize> {
        self.parent_edge[v]
    }

    /// Children in ascending index order.
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.in_tree[v] && self.children[v].is_empty()
    }

    /// Tree edges ordered by child index.
    pub fn edges(&self) -> Vec<TreeEdge> {
        (0..self.parent.len())
            .filter_map(|c| Some(TreeEdge { child: c, parent: self.parent[c]?, edge: self.parent_edge[c]? }))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }

    /// Vertices from `v` up to and including the root.
    pub fn path_to_root(&self, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path
    }

    /// Unique tree path from `a` to `b`, both ends included.
    pub fn path_between(&self, a: usize, b: usize) -> Vec<usize> {
        let up_a = self.path_to_root(a);
        let up_b = self.path_to_root(b);
        let on_b: std::collections::HashSet<usize> = up_b.iter().copied().collect();
        let lca_pos = up_a.iter().position(|x| on_b.contains(x)).expect("tree is connected");
        let lca = up_a[lca_pos];
        let mut path: Vec<usize> = up_a[..=lca_pos].to_vec();
        let lca_in_b = up_b.iter().position(|&x| x == lca).unwrap();
        path.extend(up_b[..lca_in_b].iter().rev());
        path
    }

    /// Vertices in post-order, children visited in ascending index order.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((v, next)) = stack.pop() {
            if next < self.children[v].len() {
                stack.push((v, next + 1));
                stack.push((self.children[v][next], 0));
            } else {
                out.push(v);
            }
        }
        out
    }

    /// Non-leaf tree vertices, deepest first, ties by index.
    pub fn internal_by_depth(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.vertices().filter(|&x| !self.children[x].is_empty()).collect();
        v.sort_by(|&a, &b| self.depth[b].cmp(&self.depth[a]).then(a.cmp(&b)));
        v
    }
}

/// Breadth-first spanning tree of the landline's covered component, rooted at
/// the landline with lowest-index-first expansion, then stripped of
/// non-terminal leaves.
pub fn extract_steiner_tree(inst: &PlanningInstance, state: &CoverState) -> Result<SteinerTree> {
    if state.phi() != 1 {
        return Err(Error::Precondition(format!("cover has {} terminal components, need 1", state.phi())));
    }
    let n = inst.len();
    let root = inst.landline();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    visited[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &(y, e) in inst.neighbors(x) {
            if !visited[y] && state.is_covered(e) {
                visited[y] = true;
                parent[y] = Some(x);
                queue.push_back(y);
            }
        }
    }
    let mut child_count = vec![0usize; n];
    for p in parent.iter().flatten() {
        child_count[*p] += 1;
    }
    let mut alive = visited.clone();
    let mut leaves: Vec<usize> =
        (0..n).filter(|&v| alive[v] && v != root && child_count[v] == 0 && !inst.is_terminal(v)).collect();
    while let Some(v) = leaves.pop() {
        alive[v] = false;
        if let Some(p) = parent[v] {
            child_count[p] -= 1;
            if child_count[p] == 0 && p != root && !inst.is_terminal(p) {
                leaves.push(p);
            }
        }
    }
    let links: Vec<(usize, usize)> = (0..n).filter(|&v| alive[v]).filter_map(|v| parent[v].map(|p| (v, p))).collect();
    let tree = SteinerTree::from_parents(inst, root, &links)?;
    if let Some(&t) = inst.terminals().iter().find(|&&t| !tree.contains(t)) {
        return Err(Error::Inconsistent(format!("terminal {} missing from tree", inst.id(t))));
    }
    Ok(tree)
}

/// Output of the greedy solver.
#[derive(Clone, Debug)]
pub struct SteinerSolution {
    pub heights: HeightFunction,
    pub tree: SteinerTree,
    pub trace: IterationTrace,
}

impl SteinerSolution {
    /// Σ cTower(h(v)) over terminals.
    pub fn tower_cost(&self, inst: &PlanningInstance) -> f64 {
        terminal_tower_cost(inst, &self.heights)
    }
}

pub fn terminal_tower_cost(inst: &PlanningInstance, h: &HeightFunction) -> f64 {
    inst.terminals().iter().map(|&t| inst.tower_cost(h.at(t))).sum()
}

fn proposal_order(a: &IncrementProposal, b: &IncrementProposal) -> Ordering {
    a.ratio
        .partial_cmp(&b.ratio)
        .unwrap_or(Ordering::Equal)
        .then(a.cost.partial_cmp(&b.cost).unwrap_or(Ordering::Equal))
        .then(a.center.cmp(&b.center))
}

/// Cheapest-ratio proposal over all terminals and doubling increments.
pub fn best_proposal(inst: &PlanningInstance, h: &HeightFunction, state: &CoverState) -> Option<IncrementProposal> {
    let top = inst.top_height();
    let mut best: Option<IncrementProposal> = None;
    for &v in inst.terminals() {
        for delta in doubling_increments(inst.height_step(), top - h.at(v)) {
            let Some(p) = star_steiner_tc(inst, h, state, v, delta) else { continue };
            if best.as_ref().map_or(true, |b| proposal_order(&p, b) == Ordering::Less) {
                best = Some(p);
            }
        }
    }
    best
}

/// Runs the greedy from the initial heights until one terminal component
/// remains, then extracts the tree.
pub fn steiner_tc_solve(inst: &PlanningInstance) -> Result<SteinerSolution> {
    inst.check_feasible()?;
    let mut h = HeightFunction::initial(inst);
    let mut state = cover(inst, &h);
    let mut trace = IterationTrace::default();
    while state.phi() > 1 {
        let phi_before = state.phi();
        let proposal = best_proposal(inst, &h, &state).ok_or_else(|| {
            Error::Infeasible(format!("no height increment merges any of the {phi_before} components"))
        })?;
        proposal.apply(&mut h);
        state = cover(inst, &h);
        log::debug!(
            "center {} +{} m: ratio {} merges {} components ({} -> {})",
            inst.id(proposal.center),
            proposal.delta,
            proposal.ratio,
            proposal.benefit,
            phi_before,
            state.phi()
        );
        if state.phi() + proposal.benefit > phi_before {
            return Err(Error::Inconsistent(format!(
                "proposal promised {} merges but components went {phi_before} -> {}",
                proposal.benefit,
                state.phi()
            )));
        }
        trace.0.push(IterationRecord {
            center: inst.id(proposal.center),
            delta: proposal.delta,
            cost: proposal.cost,
            benefit: proposal.benefit,
            ratio: proposal.ratio,
            phi_before,
            phi_after: state.phi(),
        });
    }
    let tree = extract_steiner_tree(inst, &state)?;
    Ok(SteinerSolution { heights: h, tree, trace })
}
