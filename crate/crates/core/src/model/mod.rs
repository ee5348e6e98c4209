//! Domain types shared by every solver: the instance, tower heights, the
//! line-of-sight rule and the covered-subgraph component structure.

mod cost;
mod instance;

use std::collections::BTreeMap;

pub use cost::{total_cost, CostReport};
pub use instance::{
    distance, AntennaCosts, CostTables, Edge, InstanceFile, LinkCost, PlanningInstance, PowerLevel, PowerTable,
    RadioParams, TowerCost, Vertex, VertexId, VertexKind, EPS,
};

use crate::error::{Error, Result};

/// Line-of-sight rule: the endpoint towers must sum to at least twice the
/// midpoint obstruction.
#[inline]
pub fn los_holds(height_u: f64, height_v: f64, ob: f64) -> bool {
    height_u + height_v >= 2.0 * ob - EPS
}

/// Tower height per vertex, indexed like [`PlanningInstance::vertices`].
#[derive(Clone, Debug, PartialEq)]
pub struct HeightFunction {
    values: Vec<f64>,
}

impl HeightFunction {
    /// Terminals at HTMIN, non-terminals at their fixed heights.
    pub fn initial(inst: &PlanningInstance) -> Self {
        let min = inst.radio().min_height;
        let values = inst.vertices().iter().map(|v| v.fixed_height.unwrap_or(min)).collect();
        HeightFunction { values }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        HeightFunction { values }
    }

    /// Builds a height function from an id-keyed map covering every vertex.
    pub fn from_map(inst: &PlanningInstance, map: &BTreeMap<VertexId, f64>) -> Result<Self> {
        let mut values = vec![f64::NAN; inst.len()];
        for (&id, &h) in map {
            values[inst.index_of(id)?] = h;
        }
        if let Some(i) = values.iter().position(|h| h.is_nan()) {
            return Err(Error::Inconsistent(format!("no height for vertex {}", inst.id(i))));
        }
        Ok(HeightFunction { values })
    }

    pub fn to_map(&self, inst: &PlanningInstance) -> BTreeMap<VertexId, f64> {
        self.values.iter().enumerate().map(|(i, &h)| (inst.id(i), h)).collect()
    }

    #[inline]
    pub fn at(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn set(&mut self, idx: usize, height: f64) {
        self.values[idx] = height;
    }

    pub fn get(&self, inst: &PlanningInstance, id: VertexId) -> Result<f64> {
        Ok(self.values[inst.index_of(id)?])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Checks the domain: fixed non-terminal heights and on-grid terminal heights.
    pub fn validate(&self, inst: &PlanningInstance) -> Result<()> {
        if self.values.len() != inst.len() {
            return Err(Error::Inconsistent("height function does not cover the instance".into()));
        }
        for (i, v) in inst.vertices().iter().enumerate() {
            let h = self.values[i];
            match v.fixed_height {
                Some(fixed) if (fixed - h).abs() > EPS => {
                    return Err(Error::Inconsistent(format!("non-terminal {} moved from {fixed} to {h}", v.id)));
                }
                Some(_) => {}
                None => {
                    if inst.snap_up(h).map_or(true, |s| (s - h).abs() > 1e-6) {
                        return Err(Error::Inconsistent(format!("terminal {} height {h} is off the grid", v.id)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Whether `edge` has line of sight under `h`, looked up by vertex id.
pub fn los_covered(inst: &PlanningInstance, edge: &Edge, h: &HeightFunction) -> Result<bool> {
    let hu = h.at(inst.index_of(edge.u)?);
    let hv = h.at(inst.index_of(edge.v)?);
    Ok(los_holds(hu, hv, edge.ob))
}

/// Edge index version of [`los_covered`].
#[inline]
pub fn edge_covered(inst: &PlanningInstance, edge: usize, h: &HeightFunction) -> bool {
    let (a, b) = inst.edge_ends(edge);
    los_holds(h.at(a), h.at(b), inst.edges()[edge].ob)
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when two distinct sets were merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Components of the covered subgraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverState {
    covered: Vec<bool>,
    /// Component label per vertex: the smallest vertex index in the component.
    component: Vec<usize>,
    phi: usize,
}

impl CoverState {
    pub fn is_covered(&self, edge: usize) -> bool {
        self.covered[edge]
    }

    pub fn covered_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.covered.iter().enumerate().filter(|(_, &c)| c).map(|(e, _)| e)
    }

    pub fn component(&self, idx: usize) -> usize {
        self.component[idx]
    }

    pub fn same_component(&self, a: usize, b: usize) -> bool {
        self.component[a] == self.component[b]
    }

    /// Number of components holding at least one terminal.
    pub fn phi(&self) -> usize {
        self.phi
    }
}

/// Computes which edges are covered under `h` and the resulting components.
pub fn cover(inst: &PlanningInstance, h: &HeightFunction) -> CoverState {
    let n = inst.len();
    let mut dsu = DisjointSet::new(n);
    let covered: Vec<bool> = (0..inst.edges().len())
        .map(|e| {
            let c = edge_covered(inst, e, h);
            if c {
                let (a, b) = inst.edge_ends(e);
                dsu.union(a, b);
            }
            c
        })
        .collect();
    let mut label = vec![usize::MAX; n];
    let mut component = vec![0; n];
    for i in 0..n {
        let root = dsu.find(i);
        if label[root] == usize::MAX {
            label[root] = i;
        }
        component[i] = label[root];
    }
    let mut terminal_components: Vec<usize> = inst.terminals().iter().map(|&t| component[t]).collect();
    terminal_components.sort_unstable();
    terminal_components.dedup();
    CoverState { covered, component, phi: terminal_components.len() }
}
