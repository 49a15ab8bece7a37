//! Network topology, mobility, association state, rates and per-BS observations.

mod geometry;
mod observe;
mod rates;
mod sim;
mod state;

use serde::{Deserialize, Serialize};

pub use geometry::{
    cell_members, serving_cells, step_mobility, Geometry, MobilityParams, Point, Rect,
};
pub use observe::{observe, Observation, ObservationScale};
pub use rates::{reflected_row, Downlink};
pub use sim::{EnvParams, FadingMode, NetworkEnv};
pub use state::{AssociationState, BeamformingConfig, PhaseConfig};

/// Counts of BSs (M), IRSs (L), users (K), BS antennas (N_b) and IRS elements (N_l).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDims {
    pub num_bs: usize,
    pub num_irs: usize,
    pub num_users: usize,
    pub bs_antennas: usize,
    pub irs_elements: usize,
}

impl NetworkDims {
    /// `2·N_b·K + L·N_l + L`: beams for every user slot, phases for every IRS, one bid per IRS.
    pub fn action_dim(&self) -> usize {
        2 * self.bs_antennas * self.num_users + self.num_irs * self.irs_elements + self.num_irs
    }
}
