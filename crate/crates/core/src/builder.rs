//! Fluent construction of small instances, mostly for tests and examples.

use crate::model::{
    AntennaCosts, CostTables, Edge, InstanceFile, LinkCost, PlanningInstance, RadioParams, TowerCost, Vertex, VertexId,
    VertexKind,
};

/// Starts with a landline `0` at the origin and permissive radio parameters.
#[derive(Clone, Debug)]
pub struct InstanceBuilder {
    file: InstanceFile,
    custom_tower: bool,
    per_meter: f64,
}

impl Default for InstanceBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl InstanceBuilder {
    pub fn new() -> Self {
        let radio = RadioParams {
            link_capacity: 100.0,
            p2p_range: 1.0e6,
            min_height: 10.0,
            max_height: 50.0,
            mp_range: 1.0e6,
            max_beamwidth: 90.0,
            omni_capacity: 100.0,
            omni_range: 1.0e6,
            omni_height: 20.0,
            omni_sd_height: 10.0,
        };
        let costs = CostTables {
            tower: TowerCost(vec![]),
            link: LinkCost::Unit(50.0),
            antenna: AntennaCosts { pp: 50.0, mp: 90.0, omni: 600.0, omni_sd: 80.0 },
        };
        InstanceBuilder {
            file: InstanceFile {
                vertices: vec![Vertex {
                    id: 0,
                    x: 0.0,
                    y: 0.0,
                    kind: VertexKind::Landline,
                    demand: 0.0,
                    fixed_height: None,
                }],
                edges: vec![],
                landline: 0,
                radio,
                costs,
                height_step: 1.0,
                power: None,
            },
            custom_tower: false,
            per_meter: 10.0,
        }
    }

    pub fn landline_at(mut self, x: f64, y: f64) -> Self {
        let ln = self.file.landline;
        if let Some(v) = self.file.vertices.iter_mut().find(|v| v.id == ln) {
            v.x = x;
            v.y = y;
        }
        self
    }

    pub fn terminal(mut self, id: VertexId, x: f64, y: f64, demand: f64) -> Self {
        self.file.vertices.push(Vertex { id, x, y, kind: VertexKind::Terminal, demand, fixed_height: None });
        self
    }

    pub fn relay(mut self, id: VertexId, x: f64, y: f64, fixed_height: f64) -> Self {
        self.file.vertices.push(Vertex {
            id,
            x,
            y,
            kind: VertexKind::NonTerminal,
            demand: 0.0,
            fixed_height: Some(fixed_height),
        });
        self
    }

    pub fn edge(mut self, u: VertexId, v: VertexId, ob: f64) -> Self {
        self.file.edges.push(Edge { u, v, ob });
        self
    }

    pub fn heights(mut self, min: f64, max: f64, step: f64) -> Self {
        self.file.radio.min_height = min;
        self.file.radio.max_height = max;
        self.file.height_step = step;
        self
    }

    pub fn min_height(mut self, min: f64) -> Self {
        self.file.radio.min_height = min;
        self
    }

    pub fn capacity(mut self, u: f64) -> Self {
        self.file.radio.link_capacity = u;
        self
    }

    pub fn radio(mut self, f: impl FnOnce(&mut RadioParams)) -> Self {
        f(&mut self.file.radio);
        self
    }

    /// Linear tower price (cost per meter) sampled at every grid step.
    pub fn tower_per_meter(mut self, per_meter: f64) -> Self {
        self.per_meter = per_meter;
        self.custom_tower = false;
        self
    }

    pub fn tower_costs(mut self, breakpoints: Vec<(f64, f64)>) -> Self {
        self.file.costs.tower = TowerCost(breakpoints);
        self.custom_tower = true;
        self
    }

    pub fn link_cost(mut self, link: LinkCost) -> Self {
        self.file.costs.link = link;
        self
    }

    pub fn antenna(mut self, pp: f64, mp: f64, omni: f64, omni_sd: f64) -> Self {
        self.file.costs.antenna = AntennaCosts { pp, mp, omni, omni_sd };
        self
    }

    /// The raw file, with the default tower table filled in.
    pub fn file(&self) -> InstanceFile {
        let mut file = self.file.clone();
        if !self.custom_tower {
            let step = file.height_step;
            let max = file.radio.max_height;
            let mut table = Vec::new();
            let mut k = 0usize;
            loop {
                let h = k as f64 * step;
                table.push((h, h * self.per_meter));
                if h >= max {
                    break;
                }
                k += 1;
            }
            file.costs.tower = TowerCost(table);
        }
        file
    }

    /// Panics when the assembled instance is invalid.
    pub fn build(&self) -> PlanningInstance {
        PlanningInstance::new(self.file()).expect("builder produced an invalid instance")
    }
}
