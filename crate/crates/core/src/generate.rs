//! Seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AntennaCosts, CostTables, Edge, InstanceFile, LinkCost, PlanningInstance, RadioParams, TowerCost, Vertex, VertexId,
    VertexKind,
};

/// How midpoint obstruction heights are drawn.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Obstruction {
    /// Whole meters, uniform in `[0, max]`.
    Uniform { max: u32 },
    /// A Gaussian hill of height `peak` and spread `sigma` centered in the
    /// area, plus uniform clutter up to `clutter`.
    Hill { peak: f64, sigma: f64, clutter: u32 },
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    /// Terminals including the landline.
    pub terminals: usize,
    pub non_terminals: usize,
    /// Side of the square area, meters.
    pub area: f64,
    /// Inclusive integer demand range for non-landline terminals.
    pub demand_min: u32,
    pub demand_max: u32,
    pub obstruction: Obstruction,
    pub radio: RadioParams,
    pub costs: CostTables,
    pub height_step: f64,
    pub max_attempts: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 0,
            terminals: 5,
            non_terminals: 2,
            area: 10_000.0,
            demand_min: 5,
            demand_max: 40,
            obstruction: Obstruction::Uniform { max: 30 },
            radio: default_radio(),
            costs: default_costs(),
            height_step: 5.0,
            max_attempts: 1000,
        }
    }
}

pub fn default_radio() -> RadioParams {
    RadioParams {
        link_capacity: 100.0,
        p2p_range: 6_000.0,
        min_height: 10.0,
        max_height: 35.0,
        mp_range: 6_000.0,
        max_beamwidth: 90.0,
        omni_capacity: 50.0,
        omni_range: 4_000.0,
        omni_height: 20.0,
        omni_sd_height: 10.0,
    }
}

pub fn default_costs() -> CostTables {
    CostTables {
        tower: TowerCost(vec![
            (10.0, 100.0),
            (15.0, 300.0),
            (20.0, 700.0),
            (25.0, 1300.0),
            (30.0, 2200.0),
            (35.0, 3400.0),
            (45.0, 5000.0),
        ]),
        link: LinkCost::Unit(50.0),
        antenna: AntennaCosts { pp: 50.0, mp: 90.0, omni: 600.0, omni_sd: 80.0 },
    }
}

fn draw_obstruction(rng: &mut ChaCha8Rng, model: &Obstruction, mid: (f64, f64), area: f64) -> f64 {
    match *model {
        Obstruction::Uniform { max } => rng.gen_range(0..=max) as f64,
        Obstruction::Hill { peak, sigma, clutter } => {
            let (cx, cy) = (area / 2.0, area / 2.0);
            let d2 = (mid.0 - cx).powi(2) + (mid.1 - cy).powi(2);
            let hill = peak * (-d2 / (2.0 * sigma * sigma)).exp();
            (hill + rng.gen_range(0..=clutter) as f64).round()
        }
    }
}

fn attempt(rng: &mut ChaCha8Rng, p: &GenParams) -> Result<PlanningInstance> {
    let levels = ((p.radio.max_height - p.radio.min_height) / p.height_step).floor() as u32;
    let mut vertices = Vec::with_capacity(p.terminals + p.non_terminals);
    for i in 0..p.terminals + p.non_terminals {
        let x = rng.gen_range(0..=p.area as u32) as f64;
        let y = rng.gen_range(0..=p.area as u32) as f64;
        let (kind, demand, fixed_height) = if i == 0 {
            (VertexKind::Landline, 0.0, None)
        } else if i < p.terminals {
            (VertexKind::Terminal, rng.gen_range(p.demand_min..=p.demand_max) as f64, None)
        } else {
            let level = rng.gen_range(0..=levels);
            (VertexKind::NonTerminal, 0.0, Some(p.radio.min_height + level as f64 * p.height_step))
        };
        vertices.push(Vertex { id: i as VertexId, x, y, kind, demand, fixed_height });
    }
    let mut edges = Vec::new();
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            let (va, vb) = (&vertices[a], &vertices[b]);
            if crate::model::distance(va, vb) <= p.p2p_range() {
                let mid = ((va.x + vb.x) / 2.0, (va.y + vb.y) / 2.0);
                let ob = draw_obstruction(rng, &p.obstruction, mid, p.area);
                edges.push(Edge { u: va.id, v: vb.id, ob });
            }
        }
    }
    let inst = PlanningInstance::new(InstanceFile {
        vertices,
        edges,
        landline: 0,
        radio: p.radio.clone(),
        costs: p.costs.clone(),
        height_step: p.height_step,
        power: None,
    })?;
    inst.check_feasible()?;
    Ok(inst)
}

impl GenParams {
    fn p2p_range(&self) -> f64 {
        self.radio.p2p_range
    }

    fn check(&self) -> Result<()> {
        if self.terminals < 2 {
            return Err(Error::Config("need at least two terminals including the landline".into()));
        }
        if self.demand_min == 0 || self.demand_min > self.demand_max {
            return Err(Error::Config("demand range must be positive and ordered".into()));
        }
        if self.demand_max as f64 > self.radio.link_capacity {
            return Err(Error::Config("demand_max exceeds link capacity".into()));
        }
        if !(self.area > 0.0) {
            return Err(Error::Config("area must be positive".into()));
        }
        Ok(())
    }
}

/// Draws instances from `params.seed` until one is valid and feasible.
pub fn generate(params: &GenParams) -> Result<PlanningInstance> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for n in 0..params.max_attempts {
        match attempt(&mut rng, params) {
            Ok(inst) => return Ok(inst),
            Err(Error::Infeasible(_)) => log::trace!("attempt {n} infeasible, redrawing"),
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed(params.max_attempts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let p = GenParams { seed: 42, ..Default::default() };
        let a = generate(&p).unwrap().to_json().unwrap();
        let b = generate(&p).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = generate(&GenParams { seed: 43, ..p }).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn counts_follow_parameters() {
        let p = GenParams { seed: 7, terminals: 5, non_terminals: 3, ..Default::default() };
        let inst = generate(&p).unwrap();
        assert_eq!(inst.terminals().len(), 5);
        assert_eq!(inst.non_terminal_count(), 3);
        assert!(inst.check_feasible().is_ok());
    }

    #[test]
    fn hill_model_generates() {
        let p = GenParams {
            seed: 3,
            obstruction: Obstruction::Hill { peak: 25.0, sigma: 3000.0, clutter: 5 },
            ..Default::default()
        };
        assert!(generate(&p).is_ok());
    }

    #[test]
    fn impossible_layout_gives_up() {
        let mut p = GenParams { seed: 1, area: 1.0e6, max_attempts: 5, ..Default::default() };
        p.radio.p2p_range = 10.0;
        p.radio.mp_range = 10.0;
        assert!(matches!(generate(&p), Err(Error::GenerationFailed(5))));
    }
}
