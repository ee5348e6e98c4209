//! Capacity installation on the Steiner tree.
//!
//! Terminals are packed into groups of total demand at most `U` along a
//! post-order walk from the landline. Each group forwards its aggregate from a
//! hub (the member closest to the landline) so members only ever send their
//! own demand to the hub. Link copies are then installed per edge until the
//! flow fits.

use crate::error::{Error, Result};
use crate::model::{PlanningInstance, EPS};
use crate::steiner_tc::SteinerTree;

/// Terminals sharing one hub.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    /// Members in packing order.
    pub members: Vec<usize>,
    pub hub: usize,
    /// Total member demand, hub included.
    pub demand: f64,
}

impl Group {
    /// Traffic the hub receives from the other members.
    pub fn internal_traffic(&self, inst: &PlanningInstance) -> f64 {
        self.demand - inst.demand(self.hub)
    }
}

/// Load on one tree edge, named by its child endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLoad {
    pub child: usize,
    pub parent: usize,
    pub edge: usize,
    /// Flow toward the landline.
    pub up: f64,
    /// Flow away from the landline (members below-left of their hub).
    pub down: f64,
    pub copies: u32,
}

impl EdgeLoad {
    pub fn flow(&self) -> f64 {
        self.up + self.down
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityPlan {
    pub groups: Vec<Group>,
    /// `routes[t]` is the walk from terminal `t` to its hub and on to the landline.
    pub routes: Vec<Option<Vec<usize>>>,
    /// One entry per tree edge, ordered by child index.
    pub loads: Vec<EdgeLoad>,
    by_child: Vec<Option<usize>>,
    capacity: f64,
}

impl CapacityPlan {
    pub fn load(&self, child: usize) -> Option<&EdgeLoad> {
        self.by_child.get(child).copied().flatten().map(|i| &self.loads[i])
    }

    pub fn flow(&self, child: usize) -> f64 {
        self.load(child).map_or(0.0, EdgeLoad::flow)
    }

    pub fn copies(&self, child: usize) -> u32 {
        self.load(child).map_or(0, |l| l.copies)
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn group_of(&self, t: usize) -> Option<&Group> {
        self.groups.iter().find(|g| g.members.contains(&t))
    }

    /// Σ over groups of the hub's hop distance to the landline.
    pub fn hub_distance_sum(&self, tree: &SteinerTree) -> usize {
        self.groups.iter().map(|g| tree.depth(g.hub)).sum()
    }

    /// Rebuilds a plan from explicit loads, e.g. when reading a stored plan back.
    pub fn from_parts(
        groups: Vec<Group>,
        routes: Vec<Option<Vec<usize>>>,
        mut loads: Vec<EdgeLoad>,
        vertex_count: usize,
        capacity: f64,
    ) -> Result<Self> {
        loads.sort_by_key(|l| l.child);
        let mut by_child = vec![None; vertex_count];
        for (i, l) in loads.iter().enumerate() {
            let slot = by_child
                .get_mut(l.child)
                .ok_or_else(|| Error::Inconsistent(format!("load on unknown vertex index {}", l.child)))?;
            if slot.replace(i).is_some() {
                return Err(Error::Inconsistent(format!("two loads on the edge above index {}", l.child)));
            }
        }
        Ok(CapacityPlan { groups, routes, loads, by_child, capacity })
    }
}

/// Packs terminals into groups along the post-order of the tree, children in
/// ascending index order, closing a group when the next terminal would push
/// it past `capacity`.
pub fn partition_groups(inst: &PlanningInstance, tree: &SteinerTree, capacity: f64) -> Result<Vec<Vec<usize>>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut load = 0.0;
    for v in tree.post_order() {
        if !inst.is_terminal(v) {
            continue;
        }
        let d = inst.demand(v);
        if d > capacity + EPS {
            return Err(Error::DemandExceedsCapacity { vertex: inst.id(v), demand: d, capacity });
        }
        if !current.is_empty() && load + d > capacity + EPS {
            groups.push(std::mem::take(&mut current));
            load = 0.0;
        }
        current.push(v);
        load += d;
    }
    if !current.is_empty() {
        groups.push(current);
    }
    Ok(groups)
}

/// Member with the fewest tree hops to the landline, smallest index on ties.
pub fn select_hub(members: &[usize], tree: &SteinerTree) -> Option<usize> {
    members.iter().copied().min_by_key(|&m| (tree.depth(m), m))
}

/// Residual capacity `U ⌈f/U⌉ - f` of installed links carrying `flow`.
pub fn residual_capacity(flow: f64, capacity: f64) -> f64 {
    if flow <= 0.0 {
        return 0.0;
    }
    let rem = flow % capacity;
    if rem.abs() <= EPS * capacity.max(1.0) || (capacity - rem).abs() <= EPS * capacity.max(1.0) {
        0.0
    } else {
        capacity - rem
    }
}

/// Fewest copies with `flow <= U * copies`, at least one.
pub fn copies_needed(flow: f64, capacity: f64) -> u32 {
    let mut copies = 1u32;
    while flow > capacity * copies as f64 + EPS {
        copies += 1;
    }
    copies
}

/// Adds `amount` along the walk `path`, crediting each traversed tree edge in
/// the direction of travel.
fn push_along(tree: &SteinerTree, up: &mut [f64], down: &mut [f64], path: &[usize], amount: f64) {
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if tree.parent(a) == Some(b) {
            up[a] += amount;
        } else {
            down[b] += amount;
        }
    }
}

/// Groups terminals, selects hubs, routes every demand through its hub and
/// installs link copies.
///
/// Each tree edge starts with one link. Member-to-hub traffic is placed
/// first, then each group's aggregate along its hub path in group order,
/// adding a copy whenever the running flow exceeds the installed capacity.
pub fn install_capacity(inst: &PlanningInstance, tree: &SteinerTree) -> Result<CapacityPlan> {
    let capacity = inst.radio().link_capacity;
    let n = inst.len();
    let root = tree.root();
    let packed = partition_groups(inst, tree, capacity)?;
    let mut groups = Vec::with_capacity(packed.len());
    let mut routes: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut member_up = vec![0.0; n];
    let mut member_down = vec![0.0; n];
    for members in packed {
        let hub = select_hub(&members, tree).expect("groups are non-empty");
        let demand: f64 = members.iter().map(|&m| inst.demand(m)).sum();
        let hub_path = tree.path_to_root(hub);
        for &m in &members {
            let to_hub = tree.path_between(m, hub);
            push_along(tree, &mut member_up, &mut member_down, &to_hub, inst.demand(m));
            let mut walk = to_hub;
            walk.extend_from_slice(&hub_path[1..]);
            routes[m] = Some(walk);
        }
        groups.push(Group { members, hub, demand });
    }

    let mut up = member_up.clone();
    let down = member_down;
    let mut copies = vec![0u32; n];
    for v in tree.vertices().filter(|&v| v != root) {
        copies[v] = copies_needed(member_up[v] + down[v], capacity);
    }
    for g in &groups {
        for &v in &tree.path_to_root(g.hub)[..tree.depth(g.hub)] {
            up[v] += g.demand;
            while up[v] + down[v] > capacity * copies[v] as f64 + EPS {
                copies[v] += 1;
            }
        }
    }

    let loads: Vec<EdgeLoad> = tree
        .edges()
        .into_iter()
        .map(|te| EdgeLoad {
            child: te.child,
            parent: te.parent,
            edge: te.edge,
            up: up[te.child],
            down: down[te.child],
            copies: copies[te.child],
        })
        .collect();
    for l in &loads {
        if l.flow() > capacity * l.copies as f64 + EPS {
            return Err(Error::Inconsistent(format!(
                "edge {}-{} carries {} over {} copies",
                inst.id(l.child),
                inst.id(l.parent),
                l.flow(),
                l.copies
            )));
        }
    }
    CapacityPlan::from_parts(groups, routes, loads, n, capacity)
}

/// Independent re-check of a capacity plan against its tree.
pub fn verify_capacity_plan(inst: &PlanningInstance, tree: &SteinerTree, plan: &CapacityPlan) -> Result<()> {
    let u = plan.capacity();
    let fail = |msg: String| Err(Error::Inconsistent(msg));
    let tree_edges = tree.edges();
    if tree_edges.len() != plan.loads.len() {
        return fail(format!("{} tree edges but {} loads", tree_edges.len(), plan.loads.len()));
    }
    for te in &tree_edges {
        let Some(l) = plan.load(te.child) else {
            return fail(format!("no load on tree edge above {}", inst.id(te.child)));
        };
        if l.parent != te.parent || l.edge != te.edge {
            return fail(format!("load above {} names the wrong edge", inst.id(te.child)));
        }
        if l.copies < 1 {
            return fail(format!("edge above {} has no link", inst.id(te.child)));
        }
        if l.up < -EPS || l.down < -EPS || l.flow() > u * l.copies as f64 + EPS {
            return fail(format!("edge above {} carries {} over {} copies", inst.id(te.child), l.flow(), l.copies));
        }
    }

    let mut seen = vec![false; inst.len()];
    for g in &plan.groups {
        if !g.members.contains(&g.hub) {
            return fail(format!("hub {} is not a member of its group", inst.id(g.hub)));
        }
        let total: f64 = g.members.iter().map(|&m| inst.demand(m)).sum();
        if (total - g.demand).abs() > EPS || total > u + EPS {
            return fail(format!("group at hub {} has demand {total}", inst.id(g.hub)));
        }
        if g.internal_traffic(inst) > u - inst.demand(g.hub) + EPS {
            return fail(format!("group at hub {} overloads its hub", inst.id(g.hub)));
        }
        if g.members.iter().any(|&m| (tree.depth(m), m) < (tree.depth(g.hub), g.hub)) {
            return fail(format!("hub {} is not the member closest to the landline", inst.id(g.hub)));
        }
        for &m in &g.members {
            if !inst.is_terminal(m) || std::mem::replace(&mut seen[m], true) {
                return fail(format!("vertex {} is misgrouped", inst.id(m)));
            }
        }
    }
    if let Some(&t) = inst.terminals().iter().find(|&&t| !seen[t]) {
        return fail(format!("terminal {} belongs to no group", inst.id(t)));
    }

    // Rebuild arc flows from the routes and compare.
    let n = inst.len();
    let mut up = vec![0.0; n];
    let mut down = vec![0.0; n];
    for &t in inst.terminals() {
        let Some(route) = plan.routes.get(t).and_then(|r| r.as_ref()) else {
            return fail(format!("terminal {} has no route", inst.id(t)));
        };
        if route.first() != Some(&t) || route.last() != Some(&tree.root()) {
            return fail(format!("route of {} does not run to the landline", inst.id(t)));
        }
        for w in route.windows(2) {
            if tree.parent(w[0]) != Some(w[1]) && tree.parent(w[1]) != Some(w[0]) {
                return fail(format!("route of {} leaves the tree", inst.id(t)));
            }
        }
        push_along(tree, &mut up, &mut down, route, inst.demand(t));
    }
    for l in &plan.loads {
        if (up[l.child] - l.up).abs() > 1e-6 || (down[l.child] - l.down).abs() > 1e-6 {
            return fail(format!("flow above {} does not match the routes", inst.id(l.child)));
        }
    }

    // Net outflow equals own demand at every vertex; the landline absorbs the rest.
    let mut net = vec![0.0; n];
    for l in &plan.loads {
        net[l.child] += l.up - l.down;
        net[l.parent] += l.down - l.up;
    }
    for v in tree.vertices() {
        let expected = if v == tree.root() {
            inst.demand(v) - inst.terminals().iter().map(|&t| inst.demand(t)).sum::<f64>()
        } else {
            inst.demand(v)
        };
        if (net[v] - expected).abs() > 1e-6 {
            return fail(format!("flow is not conserved at {}", inst.id(v)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::build_worst_chain;
    use crate::builder::InstanceBuilder;
    use crate::steiner_tc::steiner_tc_solve;
    use proptest::prelude::*;

    fn solved(inst: &PlanningInstance) -> SteinerTree {
        steiner_tc_solve(inst).unwrap().tree
    }

    fn chain(n_terminals: u32, demand: f64, capacity: f64) -> PlanningInstance {
        let mut b = InstanceBuilder::new().capacity(capacity);
        for i in 1..=n_terminals {
            b = b.terminal(i, 10.0 * i as f64, 0.0, demand).edge(i - 1, i, 0.0);
        }
        b.build()
    }

    #[test]
    fn chain_groups_pack_from_the_far_end() {
        let inst = chain(4, 3.0, 10.0);
        let tree = solved(&inst);
        let groups = partition_groups(&inst, &tree, 10.0).unwrap();
        assert_eq!(groups, vec![vec![4, 3, 2], vec![1, 0]]);
    }

    #[test]
    fn hub_is_closest_to_the_landline() {
        let inst = chain(4, 3.0, 10.0);
        let tree = solved(&inst);
        assert_eq!(select_hub(&[4, 2, 3], &tree), Some(2));
        assert_eq!(select_hub(&[3], &tree), Some(3));
    }

    #[test]
    fn hub_ties_go_to_smallest_index() {
        let inst = InstanceBuilder::new()
            .terminal(1, 10.0, 0.0, 1.0)
            .terminal(2, 0.0, 10.0, 1.0)
            .edge(0, 1, 0.0)
            .edge(0, 2, 0.0)
            .build();
        let tree = solved(&inst);
        assert_eq!(select_hub(&[2, 1], &tree), Some(1));
    }

    #[test]
    fn single_group_when_demand_fits() {
        let inst = chain(4, 2.0, 10.0);
        let tree = solved(&inst);
        let plan = install_capacity(&inst, &tree).unwrap();
        assert_eq!(plan.groups.len(), 1);
        assert_eq!(plan.groups[0].hub, inst.landline());
        assert!(plan.loads.iter().all(|l| l.copies == 1));
        verify_capacity_plan(&inst, &tree, &plan).unwrap();
    }

    #[test]
    fn demand_above_capacity_is_rejected() {
        let inst = chain(2, 8.0, 10.0);
        let tree = solved(&inst);
        assert!(matches!(partition_groups(&inst, &tree, 5.0), Err(Error::DemandExceedsCapacity { .. })));
    }

    #[test]
    fn two_hub_paths_over_one_edge_need_three_copies() {
        // Relay 9 feeds the landline; three branches of demand 10 hang off it.
        let inst = InstanceBuilder::new()
            .capacity(10.0)
            .relay(9, 10.0, 0.0, 20.0)
            .terminal(1, 20.0, 10.0, 10.0)
            .terminal(2, 20.0, 0.0, 10.0)
            .terminal(3, 20.0, -10.0, 10.0)
            .edge(0, 9, 0.0)
            .edge(9, 1, 0.0)
            .edge(9, 2, 0.0)
            .edge(9, 3, 0.0)
            .build();
        let tree = solved(&inst);
        let plan = install_capacity(&inst, &tree).unwrap();
        let relay = inst.index_of(9).unwrap();
        assert_eq!(plan.groups.len(), 3);
        assert_eq!(plan.flow(relay), 30.0);
        assert_eq!(plan.copies(relay), 3);
        for t in 1..=3 {
            assert_eq!(plan.copies(inst.index_of(t).unwrap()), 1);
        }
        verify_capacity_plan(&inst, &tree, &plan).unwrap();
    }

    #[test]
    fn members_below_the_hub_send_downhill() {
        // Branches 1-2 and 3 under the landline; post-order packs {2,1,3} with hub 1.
        let inst = InstanceBuilder::new()
            .capacity(10.0)
            .terminal(1, 10.0, 0.0, 3.0)
            .terminal(2, 20.0, 0.0, 3.0)
            .terminal(3, 0.0, 10.0, 3.0)
            .terminal(4, 0.0, 20.0, 3.0)
            .edge(0, 1, 0.0)
            .edge(1, 2, 0.0)
            .edge(0, 3, 0.0)
            .edge(3, 4, 0.0)
            .build();
        let tree = solved(&inst);
        let plan = install_capacity(&inst, &tree).unwrap();
        assert_eq!(plan.groups[0].members, vec![2, 1, 4]);
        assert_eq!(plan.groups[0].hub, 1);
        assert_eq!(plan.routes[4].as_deref(), Some(&[4, 3, 0, 1, 0][..]));
        let l = plan.load(1).unwrap();
        assert_eq!((l.up, l.down), (9.0, 3.0));
        verify_capacity_plan(&inst, &tree, &plan).unwrap();
    }

    #[test]
    fn worst_chain_hub_distances() {
        for (a, b, gamma, expected) in [(8, 3, 2, 21), (6, 0, 2, 6), (10, 4, 5, 9)] {
            let inst = build_worst_chain(a, b, gamma, 5.0).unwrap();
            let tree = solved(&inst);
            let plan = install_capacity(&inst, &tree).unwrap();
            assert_eq!(plan.hub_distance_sum(&tree), expected, "chain ({a},{b},{gamma})");
        }
    }

    #[test]
    fn residual_examples() {
        assert_eq!(residual_capacity(7.0, 10.0), 3.0);
        assert_eq!(residual_capacity(0.0, 10.0), 0.0);
        assert_eq!(residual_capacity(13.0, 10.0), 7.0);
        assert_eq!(residual_capacity(20.0, 10.0), 0.0);
    }

    #[test]
    fn copies_examples() {
        assert_eq!(copies_needed(0.0, 10.0), 1);
        assert_eq!(copies_needed(10.0, 10.0), 1);
        assert_eq!(copies_needed(13.0, 10.0), 2);
    }

    proptest! {
        #[test]
        fn residual_matches_ceiling_form(f in 0u32..5000, u in 1u32..200) {
            let (f, u) = (f as f64, u as f64);
            let r = residual_capacity(f, u);
            prop_assert_eq!(r, u * (f / u).ceil() - f);
            prop_assert!(r >= 0.0 && r < u);
        }

        #[test]
        fn chain_plans_are_feasible(n in 2u32..12, demand in 1u32..10, per_group in 1u32..6) {
            let cap = demand * per_group;
            let inst = chain(n, demand as f64, cap as f64);
            let tree = solved(&inst);
            let plan = install_capacity(&inst, &tree).unwrap();
            verify_capacity_plan(&inst, &tree, &plan).unwrap();
            let total = (n * demand) as f64;
            prop_assert_eq!(plan.groups.len(), (total / cap as f64).ceil().max(1.0) as usize);
        }
    }
}
