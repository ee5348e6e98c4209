//! Closed-form performance bounds and the worst-case chain construction.

use serde::{Deserialize, Serialize};

use crate::builder::InstanceBuilder;
use crate::error::{Error, Result};
use crate::model::{PlanningInstance, VertexId, EPS};

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(into = "u8", try_from = "u8")]
pub enum BoundCase {
    /// Total demand fits in one link.
    SingleLink,
    /// Uniform terminal demand.
    Uniform,
    /// Mixed demands, `γ` taken from the largest.
    Mixed,
}

impl BoundCase {
    pub fn number(self) -> u8 {
        match self {
            BoundCase::SingleLink => 1,
            BoundCase::Uniform => 2,
            BoundCase::Mixed => 3,
        }
    }
}

impl From<BoundCase> for u8 {
    fn from(c: BoundCase) -> u8 {
        c.number()
    }
}

impl TryFrom<u8> for BoundCase {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            1 => Ok(BoundCase::SingleLink),
            2 => Ok(BoundCase::Uniform),
            3 => Ok(BoundCase::Mixed),
            _ => Err(Error::Precondition(format!("unknown bound case {n}"))),
        }
    }
}

/// Cost ratio bound of the full pipeline against the optimum.
///
/// Case 1: `1 + 2 ln|A| + |B|/|A|`. Cases 2 and 3:
/// `3 + ln|A| + |B|/|A| + (|A| + 2|B|)/γ`.
pub fn performance_ratio_bound(a: usize, b: usize, gamma: f64, case: BoundCase) -> Result<f64> {
    if a < 2 {
        return Err(Error::Precondition(format!("|A| = {a}, need at least 2")));
    }
    let (a, b) = (a as f64, b as f64);
    Ok(match case {
        BoundCase::SingleLink => 1.0 + 2.0 * a.ln() + b / a,
        BoundCase::Uniform | BoundCase::Mixed => {
            if !(gamma > 0.0) {
                return Err(Error::Precondition(format!("gamma must be positive, got {gamma}")));
            }
            3.0 + a.ln() + b / a + (a + 2.0 * b) / gamma
        }
    })
}

/// Total hub-to-landline hop count on the worst-case chain:
/// `(|A|/γ - 1)(|B| + |A|/2)`.
pub fn worst_chain_hub_distance(a: usize, b: usize, gamma: usize) -> Result<usize> {
    if a == 0 || gamma == 0 || a % gamma != 0 {
        return Err(Error::Precondition(format!("gamma {gamma} must divide |A| = {a}")));
    }
    // (|A|/γ - 1)(2|B| + |A|) is always even when γ | |A|.
    Ok((a / gamma - 1) * (2 * b + a) / 2)
}

/// Chain `0 - 1 - .. - |B| - .. - (|A|+|B|-1)`: the landline, then the
/// non-terminals, then terminals of uniform demand. Obstructions are zero and
/// `U = γ · demand`.
pub fn build_worst_chain(a: usize, b: usize, gamma: usize, demand: f64) -> Result<PlanningInstance> {
    if a < 2 || gamma == 0 || !(demand > 0.0) {
        return Err(Error::Precondition("chain needs |A| >= 2, gamma > 0 and positive demand".into()));
    }
    let spacing = 1000.0;
    let mut builder = InstanceBuilder::new().capacity(gamma as f64 * demand).radio(|r| {
        r.p2p_range = 2.0 * spacing;
        r.mp_range = 2.0 * spacing;
        r.omni_range = 2.0 * spacing;
    });
    let n = a + b;
    for i in 1..n {
        let x = spacing * i as f64;
        let id = i as VertexId;
        builder = if i <= b { builder.relay(id, x, 0.0, 10.0) } else { builder.terminal(id, x, 0.0, demand) };
        builder = builder.edge(id - 1, id, 0.0);
    }
    PlanningInstance::new(builder.file())
}

/// Which bound applies to an instance, with its parameters and value.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub terminals: usize,
    pub non_terminals: usize,
    /// Infinite, and written as `null`, when no terminal has demand.
    #[serde(with = "unbounded")]
    pub gamma: f64,
    pub case: BoundCase,
    pub ratio: f64,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// `γ` is `U` over the terminal demand, or over the largest one when demands
/// differ. The landline is skipped when its demand is zero.
pub fn bound_report(inst: &PlanningInstance) -> Result<BoundReport> {
    let u = inst.radio().link_capacity;
    let demands: Vec<f64> = inst
        .terminals()
        .iter()
        .filter(|&&t| t != inst.landline() || inst.demand(t) > 0.0)
        .map(|&t| inst.demand(t))
        .collect();
    let total: f64 = demands.iter().sum();
    let max = demands.iter().copied().fold(0.0, f64::max);
    let min = demands.iter().copied().fold(f64::INFINITY, f64::min);
    let case = if total <= u + EPS {
        BoundCase::SingleLink
    } else if max - min <= EPS {
        BoundCase::Uniform
    } else {
        BoundCase::Mixed
    };
    let gamma = if max > 0.0 { u / max } else { f64::INFINITY };
    let a = inst.terminals().len();
    let b = inst.non_terminal_count();
    let ratio = performance_ratio_bound(a, b, gamma, case)?;
    Ok(BoundReport { terminals: a, non_terminals: b, gamma, case, ratio })
}
