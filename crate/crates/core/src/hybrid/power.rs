//! Transmit power per antenna from the final radii.

use super::{MpConfig, OmniConfig};
use crate::cnd::CapacityPlan;
use crate::error::Result;
use crate::model::PlanningInstance;
use crate::steiner_tc::SteinerTree;

#[derive(Clone, Debug, PartialEq)]
pub enum Antenna {
    /// Both ends of the p2p link above `child`.
    Link {
        child: usize,
        parent: usize,
    },
    Sector {
        apex: usize,
        target: usize,
    },
    Disc {
        center: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerSetting {
    pub antenna: Antenna,
    /// Distance the antenna must reach, in meters.
    pub reach: f64,
    pub power_dbm: f64,
}

/// Lowest table level reaching each antenna's farthest covered vertex: link
/// length for p2p links, the tuned radius for sectors and discs.
pub fn assign_transmit_power(
    inst: &PlanningInstance,
    tree: &SteinerTree,
    cap: &CapacityPlan,
    replaced: &[bool],
    mp: &[MpConfig],
    omni: &[OmniConfig],
) -> Result<Vec<PowerSetting>> {
    let table = inst.power_table();
    let mut out = Vec::new();
    for l in &cap.loads {
        if replaced.get(l.child).copied().unwrap_or(false) || !tree.contains(l.child) {
            continue;
        }
        let reach = inst.dist(l.child, l.parent);
        let level = table.level_for(reach)?;
        out.push(PowerSetting {
            antenna: Antenna::Link { child: l.child, parent: l.parent },
            reach,
            power_dbm: level.power_dbm,
        });
    }
    for c in mp {
        out.push(PowerSetting {
            antenna: Antenna::Sector { apex: c.apex, target: c.target },
            reach: c.radius,
            power_dbm: table.level_for(c.radius)?.power_dbm,
        });
    }
    for c in omni {
        out.push(PowerSetting {
            antenna: Antenna::Disc { center: c.center },
            reach: c.radius,
            power_dbm: table.level_for(c.radius)?.power_dbm,
        });
    }
    Ok(out)
}
