use std::f64::consts::PI;

use crate::channel::ChannelRealization;
use crate::complex::Complex;
use crate::env::{cell_members, AssociationState, NetworkDims};
use crate::error::{Error, Result};

/// Actor output in `[−1, 1]^{D_a}`: beam re/im for every user slot, then one phase per
/// IRS element, then one control bid per IRS.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAction(pub Vec<f64>);

impl RawAction {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// The trailing per-IRS bids.
    pub fn bids(&self, dims: &NetworkDims) -> &[f64] {
        &self.0[self.0.len() - dims.num_irs..]
    }
}

/// Beams and phases one BS applies after its raw action is decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAction {
    /// `(user, w)` for every user in the BS's cell.
    pub beams: Vec<(usize, Vec<Complex>)>,
    /// `(irs, θ)` for every IRS the BS controls in this slot.
    pub phases: Vec<(usize, Vec<f64>)>,
}

/// Maps a raw action of BS m onto feasible beams and phases.
///
/// Beam entries of users outside the cell and phase entries of IRSs the BS does not
/// control are ignored. Beams are scaled down uniformly when their total power exceeds
/// `p_max`; phases map affinely from `[−1, 1]` onto `[0, 2π]`.
pub fn decode_action(
    raw: &RawAction,
    m: usize,
    cells: &[usize],
    assoc: &AssociationState,
    p_max: f64,
    dims: &NetworkDims,
) -> Result<DecodedAction> {
    let values = raw.as_slice();
    if values.len() != dims.action_dim() {
        return Err(Error::Contract(format!(
            "raw action has {} entries, expected {}",
            values.len(),
            dims.action_dim()
        )));
    }
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(-1.0..=1.0).contains(*v))
    {
        return Err(Error::Contract(format!(
            "raw action entry {i} = {v} outside [-1, 1]"
        )));
    }
    let nb = dims.bs_antennas;
    let mut beams: Vec<(usize, Vec<Complex>)> = cell_members(cells, m)
        .into_iter()
        .map(|k| {
            let w = (0..nb)
                .map(|a| {
                    let i = 2 * (k * nb + a);
                    Complex::new(values[i], values[i + 1])
                })
                .collect();
            (k, w)
        })
        .collect();
    let power: f64 = beams
        .iter()
        .flat_map(|(_, w)| w.iter().map(|z| z.norm_sqr()))
        .sum();
    if power > p_max {
        let s = (p_max / power).sqrt();
        for (_, w) in &mut beams {
            w.iter_mut().for_each(|z| *z *= s);
        }
    }
    let base = 2 * nb * dims.num_users;
    let nl = dims.irs_elements;
    let phases = assoc
        .controlled_by(m)
        .into_iter()
        .map(|l| {
            let start = base + l * nl;
            let theta = values[start..start + nl]
                .iter()
                .map(|x| PI * (x + 1.0))
                .collect();
            (l, theta)
        })
        .collect();
    Ok(DecodedAction { beams, phases })
}

/// Each IRS goes to the highest bidder, ties to the lowest BS index.
pub fn assign_irs(bids: &[&[f64]]) -> Vec<usize> {
    let num_irs = bids.first().map_or(0, |b| b.len());
    (0..num_irs)
        .map(|l| {
            let mut best = 0;
            for (m, b) in bids.iter().enumerate().skip(1) {
                if b[l] > bids[best][l] {
                    best = m;
                }
            }
            best
        })
        .collect()
}

/// Resolves all agents' bids into a complete association, allocating each user to
/// the strongest IRS its BS won.
pub fn resolve_association(
    bids: &[&[f64]],
    cells: &[usize],
    channels: &ChannelRealization,
) -> AssociationState {
    AssociationState::with_strongest_irs(assign_irs(bids), cells, channels)
}
