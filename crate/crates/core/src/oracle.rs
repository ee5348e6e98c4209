//! Exhaustive reference solvers for small instances.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::model::{cover, los_holds, CoverState, HeightFunction, PlanningInstance};

/// Default cap on enumerated height assignments.
pub const DEFAULT_MAX_SPACE: u128 = 46_656;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub heights: HeightFunction,
    pub tower_cost: f64,
    pub space: u128,
    pub elapsed: Duration,
}

/// Number of terminal height assignments on the grid.
pub fn search_space(inst: &PlanningInstance) -> u128 {
    (inst.height_levels() as u128).saturating_pow(inst.terminals().len() as u32)
}

/// Minimum terminal tower cost over every grid assignment whose covered
/// subgraph joins all terminals.
pub fn brute_force_steiner_tc(inst: &PlanningInstance, max_space: u128) -> Result<OracleResult> {
    let start = Instant::now();
    let space = search_space(inst);
    if space > max_space {
        return Err(Error::SearchSpaceTooLarge { size: space, limit: max_space });
    }
    let levels = inst.height_levels();
    let terminals = inst.terminals();
    let mut digits = vec![0usize; terminals.len()];
    let mut h = HeightFunction::initial(inst);
    let mut best: Option<(f64, HeightFunction)> = None;
    loop {
        for (i, &t) in terminals.iter().enumerate() {
            h.set(t, inst.level_height(digits[i]));
        }
        let cost: f64 = terminals.iter().map(|&t| inst.tower_cost(h.at(t))).sum();
        if best.as_ref().map_or(true, |(b, _)| cost < *b) && cover(inst, &h).phi() == 1 {
            best = Some((cost, h.clone()));
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == digits.len() {
                let (tower_cost, heights) = best.ok_or_else(|| {
                    Error::Infeasible("no height assignment on the grid connects every terminal".into())
                })?;
                return Ok(OracleResult { heights, tower_cost, space, elapsed: start.elapsed() });
            }
            digits[i] += 1;
            if digits[i] < levels {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// One reachable terminal with the raise it needs, found by path enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct StarCandidate {
    pub terminal: usize,
    pub raise: f64,
    pub cost: f64,
}

/// Every terminal outside `v`'s component reachable from `v` raised by
/// `delta`, each with its cheapest raise over all simple paths whose interior
/// is non-terminal and covered.
pub fn enumerate_logical_neighbors(
    inst: &PlanningInstance,
    h: &HeightFunction,
    state: &CoverState,
    v: usize,
    delta: f64,
) -> Vec<StarCandidate> {
    let top = inst.top_height();
    let hv = h.at(v) + delta;
    let mut best: Vec<Option<f64>> = vec![None; inst.len()];
    let consider = |u: usize, near: f64, ob: f64, best: &mut Vec<Option<f64>>| {
        // smallest grid height for u with near + height >= 2 ob, never below h(u)
        let mut height = h.at(u);
        let step = inst.height_step();
        while !los_holds(near, height, ob) {
            height = (((height - inst.radio().min_height) / step).round() + 1.0) * step + inst.radio().min_height;
            if height > top + 1e-9 {
                return;
            }
        }
        let raise = height - h.at(u);
        if best[u].map_or(true, |b| raise < b) {
            best[u] = Some(raise);
        }
    };

    // Depth-first over simple paths through non-terminals.
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(v, vec![v])];
    while let Some((x, path)) = stack.pop() {
        let hx = if x == v { hv } else { h.at(x) };
        for &(y, e) in inst.neighbors(x) {
            if path.contains(&y) {
                continue;
            }
            let ob = inst.edges()[e].ob;
            if inst.is_terminal(y) {
                consider(y, hx, ob, &mut best);
            } else if los_holds(hx, h.at(y), ob) {
                let mut next = path.clone();
                next.push(y);
                stack.push((y, next));
            }
        }
    }
    (0..inst.len())
        .filter(|&u| u != v && !state.same_component(u, v))
        .filter_map(|u| {
            let raise = best[u]?;
            Some(StarCandidate {
                terminal: u,
                raise,
                cost: inst.tower_cost(h.at(u) + raise) - inst.tower_cost(h.at(u)),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarOptimum {
    pub ratio: f64,
    /// Chosen `(terminal, raise)` pairs.
    pub chosen: Vec<(usize, f64)>,
}

/// Lowest `(center cost + Σ cost) / merged components` over every non-empty
/// subset of reachable terminals. `None` when nothing is reachable.
pub fn brute_force_star(
    inst: &PlanningInstance,
    h: &HeightFunction,
    state: &CoverState,
    v: usize,
    delta: f64,
) -> Result<Option<StarOptimum>> {
    let cands = enumerate_logical_neighbors(inst, h, state, v, delta);
    if cands.len() > 20 {
        return Err(Error::SearchSpaceTooLarge { size: 1u128 << cands.len(), limit: 1 << 20 });
    }
    let center = inst.tower_cost(h.at(v) + delta) - inst.tower_cost(h.at(v));
    let mut best: Option<StarOptimum> = None;
    for mask in 1u32..(1u32 << cands.len()) {
        let mut cost = center;
        let mut comps = Vec::new();
        let mut chosen = Vec::new();
        for (i, c) in cands.iter().enumerate() {
            if mask & (1 << i) != 0 {
                cost += c.cost;
                chosen.push((c.terminal, c.raise));
                let comp = state.component(c.terminal);
                if !comps.contains(&comp) {
                    comps.push(comp);
                }
            }
        }
        let ratio = cost / comps.len() as f64;
        if best.as_ref().map_or(true, |b| ratio < b.ratio) {
            best = Some(StarOptimum { ratio, chosen });
        }
    }
    Ok(best)
}
