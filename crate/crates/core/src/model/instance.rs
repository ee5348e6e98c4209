use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Absolute slack used for every height and distance comparison.
pub const EPS: f64 = 1e-9;

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Terminal,
    NonTerminal,
    Landline,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub x: f64,
    pub y: f64,
    pub kind: VertexKind,
    #[serde(default)]
    pub demand: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_height: Option<f64>,
}

impl Vertex {
    /// Terminals include the landline.
    pub fn is_terminal(&self) -> bool {
        self.kind != VertexKind::NonTerminal
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    /// Normalized obstruction height at the midpoint, in meters.
    pub ob: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct RadioParams {
    /// p2p and p2mp link capacity (Mbps).
    #[serde(rename = "U")]
    pub link_capacity: f64,
    /// Maximum p2p link length (m).
    #[serde(rename = "R")]
    pub p2p_range: f64,
    #[serde(rename = "HTMIN")]
    pub min_height: f64,
    #[serde(rename = "HTMAX")]
    pub max_height: f64,
    #[serde(rename = "R_MP")]
    pub mp_range: f64,
    /// Degrees.
    #[serde(rename = "BWMAX")]
    pub max_beamwidth: f64,
    #[serde(rename = "U_Omni")]
    pub omni_capacity: f64,
    #[serde(rename = "R_Omni")]
    pub omni_range: f64,
    #[serde(rename = "HTOmni")]
    pub omni_height: f64,
    #[serde(rename = "HTOmniSD")]
    pub omni_sd_height: f64,
}

impl RadioParams {
    fn validate(&self) -> Result<()> {
        let named = [
            ("U", self.link_capacity),
            ("R", self.p2p_range),
            ("HTMIN", self.min_height),
            ("HTMAX", self.max_height),
            ("R_MP", self.mp_range),
            ("BWMAX", self.max_beamwidth),
            ("U_Omni", self.omni_capacity),
            ("R_Omni", self.omni_range),
            ("HTOmni", self.omni_height),
            ("HTOmniSD", self.omni_sd_height),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidInstance(format!("radio.{name} must be positive, got {value}")));
            }
        }
        if self.min_height > self.max_height {
            return Err(Error::InvalidInstance("HTMIN exceeds HTMAX".into()));
        }
        if self.mp_range > self.p2p_range + EPS {
            return Err(Error::InvalidInstance("R_MP exceeds R".into()));
        }
        if self.max_beamwidth > 360.0 {
            return Err(Error::InvalidInstance("BWMAX exceeds 360 degrees".into()));
        }
        Ok(())
    }
}

/// Tower cost as a sorted list of `(height, cost)` breakpoints.
///
/// A tower of height `h` costs as much as the shortest listed tower that is at
/// least `h` tall. Heights below the first breakpoint cost the first entry.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct TowerCost(pub Vec<(f64, f64)>);

impl TowerCost {
    pub fn cost(&self, height: f64) -> f64 {
        let idx = self.0.partition_point(|&(h, _)| h < height - EPS);
        match self.0.get(idx) {
            Some(&(_, c)) => c,
            None => self.0.last().map(|&(_, c)| c).unwrap_or(0.0),
        }
    }

    fn validate(&self, max_height: f64) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::InvalidInstance("cTower has no breakpoints".into()));
        }
        for w in self.0.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidInstance("cTower heights must be strictly increasing".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidInstance("cTower must be non-decreasing".into()));
            }
        }
        if self.0.iter().any(|&(_, c)| c < 0.0 || !c.is_finite()) {
            return Err(Error::InvalidInstance("cTower costs must be non-negative".into()));
        }
        let (top, _) = *self.0.last().unwrap();
        if top < max_height - EPS {
            return Err(Error::InvalidInstance(format!(
                "cTower must price towers up to HTMAX ({max_height}), last breakpoint is {top}"
            )));
        }
        Ok(())
    }
}

/// Cost of installing `k` parallel p2p link copies on one edge.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
pub enum LinkCost {
    /// `k * unit`.
    Unit(f64),
    /// `table[k - 1]`; counts past the end add `table[0]` per extra copy.
    Table(Vec<f64>),
}

impl LinkCost {
    pub fn cost(&self, copies: u32) -> f64 {
        if copies == 0 {
            return 0.0;
        }
        match self {
            LinkCost::Unit(unit) => unit * copies as f64,
            LinkCost::Table(table) => {
                let k = copies as usize;
                if k <= table.len() {
                    table[k - 1]
                } else {
                    table[table.len() - 1] + (k - table.len()) as f64 * table[0]
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            LinkCost::Unit(u) => u.is_finite() && *u >= 0.0,
            LinkCost::Table(t) => !t.is_empty() && t.iter().all(|c| c.is_finite() && *c >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInstance("cLink must be a non-negative unit cost or non-empty table".into()))
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct AntennaCosts {
    #[serde(rename = "PP")]
    pub pp: f64,
    #[serde(rename = "MP")]
    pub mp: f64,
    #[serde(rename = "Omni")]
    pub omni: f64,
    #[serde(rename = "OmniSD")]
    pub omni_sd: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct CostTables {
    #[serde(rename = "cTower")]
    pub tower: TowerCost,
    #[serde(rename = "cLink")]
    pub link: LinkCost,
    #[serde(rename = "cAntenna")]
    pub antenna: AntennaCosts,
}

/// One step of a monotone distance to transmit-power table.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct PowerLevel {
    /// Farthest distance (m) reachable at this level.
    pub max_distance: f64,
    pub power_dbm: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct PowerTable(pub Vec<PowerLevel>);

impl Default for PowerTable {
    fn default() -> Self {
        let levels = [
            (2_000.0, 14.0),
            (5_000.0, 20.0),
            (10_000.0, 23.0),
            (20_000.0, 27.0),
            (50_000.0, 30.0),
            (100_000.0, 33.0),
            (200_000.0, 36.0),
        ];
        PowerTable(levels.iter().map(|&(max_distance, power_dbm)| PowerLevel { max_distance, power_dbm }).collect())
    }
}

impl PowerTable {
    /// Lowest level whose reach covers `distance`.
    pub fn level_for(&self, distance: f64) -> Result<&PowerLevel> {
        self.0
            .iter()
            .find(|level| distance <= level.max_distance + EPS)
            .ok_or_else(|| Error::Config(format!("distance {distance} m is beyond the power table")))
    }

    fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::InvalidInstance("power table is empty".into()));
        }
        for w in self.0.windows(2) {
            if w[1].max_distance <= w[0].max_distance || w[1].power_dbm < w[0].power_dbm {
                return Err(Error::InvalidInstance("power table must be increasing".into()));
            }
        }
        Ok(())
    }
}

fn default_height_step() -> f64 {
    1.0
}

/// On-disk representation of an instance.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct InstanceFile {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub landline: VertexId,
    pub radio: RadioParams,
    pub costs: CostTables,
    #[serde(default = "default_height_step")]
    pub height_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerTable>,
}

/// A validated planning instance.
///
/// Vertices are stored sorted by id, so a vertex index order is also id order.
/// All solvers work on indices; ids appear only at the boundaries.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct PlanningInstance {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    /// `(endpoint index, endpoint index)` per edge, `lo < hi`.
    ends: Vec<(usize, usize)>,
    landline: usize,
    radio: RadioParams,
    costs: CostTables,
    height_step: f64,
    power: Option<PowerTable>,
    index: HashMap<VertexId, usize>,
    /// Neighbor index and edge index, sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    terminals: Vec<usize>,
    default_power: PowerTable,
}

impl TryFrom<InstanceFile> for PlanningInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        PlanningInstance::new(file)
    }
}

impl From<PlanningInstance> for InstanceFile {
    fn from(inst: PlanningInstance) -> Self {
        inst.to_file()
    }
}

impl PlanningInstance {
    pub fn new(file: InstanceFile) -> Result<Self> {
        let InstanceFile { mut vertices, edges, landline, radio, costs, height_step, power } = file;
        radio.validate()?;
        costs.tower.validate(radio.max_height)?;
        costs.link.validate()?;
        let a = &costs.antenna;
        if [a.pp, a.mp, a.omni, a.omni_sd].iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidInstance("antenna costs must be non-negative".into()));
        }
        if let Some(p) = &power {
            p.validate()?;
        }
        if !(height_step.is_finite() && height_step > 0.0) {
            return Err(Error::InvalidInstance("height_step must be positive".into()));
        }

        vertices.sort_by_key(|v| v.id);
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.id, i).is_some() {
                return Err(Error::InvalidInstance(format!("duplicate vertex id {}", v.id)));
            }
            if !(v.x.is_finite() && v.y.is_finite()) {
                return Err(Error::InvalidInstance(format!("vertex {} has non-finite position", v.id)));
            }
            match v.kind {
                VertexKind::NonTerminal => {
                    if v.demand != 0.0 {
                        return Err(Error::InvalidInstance(format!("non-terminal {} has demand", v.id)));
                    }
                    let h = v
                        .fixed_height
                        .ok_or_else(|| Error::InvalidInstance(format!("non-terminal {} lacks fixed_height", v.id)))?;
                    if h < radio.min_height - EPS || h > radio.max_height + EPS {
                        return Err(Error::InvalidInstance(format!(
                            "fixed_height {h} of vertex {} outside [HTMIN, HTMAX]",
                            v.id
                        )));
                    }
                }
                VertexKind::Terminal | VertexKind::Landline => {
                    if v.fixed_height.is_some() {
                        return Err(Error::InvalidInstance(format!("terminal {} has fixed_height", v.id)));
                    }
                    if v.kind == VertexKind::Terminal && !(v.demand > 0.0) {
                        return Err(Error::InvalidInstance(format!("terminal {} needs positive demand", v.id)));
                    }
                    if !(v.demand >= 0.0) {
                        return Err(Error::InvalidInstance(format!("vertex {} has negative demand", v.id)));
                    }
                    if v.demand > radio.link_capacity + EPS {
                        return Err(Error::DemandExceedsCapacity {
                            vertex: v.id,
                            demand: v.demand,
                            capacity: radio.link_capacity,
                        });
                    }
                }
            }
        }

        let landline_idx = *index.get(&landline).ok_or(Error::UnknownVertex(landline))?;
        if vertices[landline_idx].kind != VertexKind::Landline {
            return Err(Error::InvalidInstance(format!("vertex {landline} is not marked as landline")));
        }
        let landline_count = vertices.iter().filter(|v| v.kind == VertexKind::Landline).count();
        if landline_count != 1 {
            return Err(Error::InvalidInstance(format!("expected exactly one landline, found {landline_count}")));
        }
        let terminals: Vec<usize> = (0..vertices.len()).filter(|&i| vertices[i].is_terminal()).collect();
        if terminals.len() < 2 {
            return Err(Error::InvalidInstance("need at least two terminals including the landline".into()));
        }

        let mut seen = BTreeSet::new();
        let mut ends = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (ei, e) in edges.iter().enumerate() {
            let iu = *index.get(&e.u).ok_or(Error::UnknownVertex(e.u))?;
            let iv = *index.get(&e.v).ok_or(Error::UnknownVertex(e.v))?;
            if iu == iv {
                return Err(Error::InvalidInstance(format!("self-loop at vertex {}", e.u)));
            }
            let key = (iu.min(iv), iu.max(iv));
            if !seen.insert(key) {
                return Err(Error::InvalidInstance(format!("duplicate edge {}-{}", e.u, e.v)));
            }
            if !(e.ob.is_finite() && e.ob >= 0.0) {
                return Err(Error::InvalidInstance(format!("edge {}-{} has negative obstruction", e.u, e.v)));
            }
            let d = distance(&vertices[iu], &vertices[iv]);
            if d > radio.p2p_range + EPS {
                return Err(Error::InvalidInstance(format!(
                    "edge {}-{} spans {d:.1} m, beyond R = {}",
                    e.u, e.v, radio.p2p_range
                )));
            }
            ends.push(key);
            adjacency[iu].push((iv, ei));
            adjacency[iv].push((iu, ei));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        Ok(PlanningInstance {
            vertices,
            edges,
            ends,
            landline: landline_idx,
            radio,
            costs,
            height_step,
            power,
            index,
            adjacency,
            terminals,
            default_power: PowerTable::default(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
            landline: self.vertices[self.landline].id,
            radio: self.radio.clone(),
            costs: self.costs.clone(),
            height_step: self.height_step,
            power: self.power.clone(),
        }
    }

    /// Same instance with a different height discretization.
    pub fn with_height_step(&self, step: f64) -> Result<Self> {
        let mut file = self.to_file();
        file.height_step = step;
        PlanningInstance::new(file)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, idx: usize) -> &Vertex {
        &self.vertices[idx]
    }

    pub fn id(&self, idx: usize) -> VertexId {
        self.vertices[idx].id
    }

    pub fn index_of(&self, id: VertexId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownVertex(id))
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_ends(&self, edge: usize) -> (usize, usize) {
        self.ends[edge]
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].binary_search_by_key(&b, |&(n, _)| n).ok().map(|pos| self.adjacency[a][pos].1)
    }

    /// `(neighbor, edge)` pairs sorted by neighbor index.
    pub fn neighbors(&self, idx: usize) -> &[(usize, usize)] {
        &self.adjacency[idx]
    }

    pub fn landline(&self) -> usize {
        self.landline
    }

    /// Terminal indices (landline included), ascending.
    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn non_terminal_count(&self) -> usize {
        self.vertices.len() - self.terminals.len()
    }

    pub fn is_terminal(&self, idx: usize) -> bool {
        self.vertices[idx].is_terminal()
    }

    pub fn demand(&self, idx: usize) -> f64 {
        self.vertices[idx].demand
    }

    pub fn radio(&self) -> &RadioParams {
        &self.radio
    }

    pub fn costs(&self) -> &CostTables {
        &self.costs
    }

    pub fn height_step(&self) -> f64 {
        self.height_step
    }

    pub fn power_table(&self) -> &PowerTable {
        self.power.as_ref().unwrap_or(&self.default_power)
    }

    pub fn tower_cost(&self, height: f64) -> f64 {
        self.costs.tower.cost(height)
    }

    pub fn dist(&self, a: usize, b: usize) -> f64 {
        distance(&self.vertices[a], &self.vertices[b])
    }

    /// Number of terminal height levels on the discrete grid.
    pub fn height_levels(&self) -> usize {
        ((self.radio.max_height - self.radio.min_height) / self.height_step + EPS).floor() as usize + 1
    }

    pub fn level_height(&self, level: usize) -> f64 {
        self.radio.min_height + level as f64 * self.height_step
    }

    /// Tallest terminal height on the grid (HTMAX rounded down to a level).
    pub fn top_height(&self) -> f64 {
        self.level_height(self.height_levels() - 1)
    }

    /// Smallest grid height that is at least `required`, if any.
    pub fn snap_up(&self, required: f64) -> Option<f64> {
        let min = self.radio.min_height;
        if required <= min + EPS {
            return Some(min);
        }
        let level = ((required - min) / self.height_step - EPS).ceil() as usize;
        (level < self.height_levels()).then(|| self.level_height(level))
    }

    /// Whether the edge could ever be covered: terminals at the top grid height,
    /// non-terminals at their fixed heights.
    pub fn coverable_at_max(&self, edge: usize) -> bool {
        let (a, b) = self.ends[edge];
        let cap = |i: usize| self.vertices[i].fixed_height.unwrap_or_else(|| self.top_height());
        cap(a) + cap(b) >= 2.0 * self.edges[edge].ob - EPS
    }

    /// Checks that edges coverable at maximum height connect every terminal.
    pub fn check_feasible(&self) -> Result<()> {
        let mut dsu = super::DisjointSet::new(self.len());
        for e in 0..self.edges.len() {
            if self.coverable_at_max(e) {
                let (a, b) = self.ends[e];
                dsu.union(a, b);
            }
        }
        let root = dsu.find(self.landline);
        match self.terminals.iter().find(|&&t| dsu.find(t) != root) {
            None => Ok(()),
            Some(&t) => {
                Err(Error::Infeasible(format!("terminal {} cannot reach the landline even at HTMAX", self.id(t))))
            }
        }
    }
}

pub fn distance(a: &Vertex, b: &Vertex) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}
