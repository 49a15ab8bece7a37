use crate::channel::ChannelRealization;
use crate::complex::Complex;
use crate::env::{AssociationState, NetworkDims};

/// Flat real-valued local state of one BS.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-link-type multipliers applied to channel entries before they reach the networks.
///
/// Raw channel coefficients sit many orders of magnitude below one; scaling each link
/// type by the inverse root of its typical path loss keeps network inputs near unit range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationScale {
    pub direct: f64,
    pub bs_irs: f64,
    pub irs_user: f64,
}

impl ObservationScale {
    pub const UNIT: Self = Self {
        direct: 1.0,
        bs_irs: 1.0,
        irs_user: 1.0,
    };
}

fn push_complex(out: &mut Vec<f64>, z: &Complex, scale: f64, keep: bool) {
    if keep {
        out.push(z.re * scale);
        out.push(z.im * scale);
    } else {
        out.extend([0.0, 0.0]);
    }
}

/// Builds BS m's observation.
///
/// Layout: `H_{m,k}` for every k, then `G_{m,l}` for every l, then `h_{l,k}` for every
/// (l, k), each complex entry as (re, im); users outside cell m are zeroed. The tail
/// holds, for every other BS m′ in increasing order and every IRS l, a 1 when m′
/// controlled l in the previous slot.
pub fn observe(
    m: usize,
    channels: &ChannelRealization,
    prev_assoc: &AssociationState,
    cells: &[usize],
    scale: &ObservationScale,
) -> Observation {
    let dims = channels.dims();
    let mut out = Vec::with_capacity(dims.observation_dim());
    for k in 0..dims.num_users {
        let keep = cells[k] == m;
        for z in channels.direct(m, k).as_slice() {
            push_complex(&mut out, z, scale.direct, keep);
        }
    }
    for l in 0..dims.num_irs {
        for z in channels.bs_irs(m, l).as_slice() {
            push_complex(&mut out, z, scale.bs_irs, true);
        }
    }
    for l in 0..dims.num_irs {
        for k in 0..dims.num_users {
            let keep = cells[k] == m;
            for z in channels.irs_user(l, k).as_slice() {
                push_complex(&mut out, z, scale.irs_user, keep);
            }
        }
    }
    for other in (0..dims.num_bs).filter(|&o| o != m) {
        for l in 0..dims.num_irs {
            out.push(if prev_assoc.bs_of_irs[l] == other {
                1.0
            } else {
                0.0
            });
        }
    }
    debug_assert_eq!(out.len(), dims.observation_dim());
    Observation(out)
}

impl NetworkDims {
    /// `2·K·N_b + 2·L·N_b·N_l + 2·L·N_l·K + (M−1)·L`.
    pub fn observation_dim(&self) -> usize {
        let NetworkDims {
            num_bs: m,
            num_irs: l,
            num_users: k,
            bs_antennas: nb,
            irs_elements: nl,
        } = *self;
        2 * k * nb + 2 * l * nb * nl + 2 * l * nl * k + (m - 1) * l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::ComplexMatrix;

    fn tiny(value: f64) -> ChannelRealization {
        let dims = NetworkDims {
            num_bs: 2,
            num_irs: 1,
            num_users: 1,
            bs_antennas: 1,
            irs_elements: 1,
        };
        let z = Complex::new(value, -value);
        ChannelRealization::from_parts(
            dims,
            vec![
                ComplexMatrix::row(vec![z]),
                ComplexMatrix::row(vec![z * 2.0]),
            ],
            vec![
                ComplexMatrix::row(vec![z * 3.0]),
                ComplexMatrix::row(vec![z * 4.0]),
            ],
            vec![ComplexMatrix::column(vec![z * 5.0])],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn dimension_of_tiny_network() {
        let ch = tiny(1.0);
        assert_eq!(ch.dims().observation_dim(), 7);
        let prev = AssociationState {
            bs_of_irs: vec![0],
            irs_of_user: vec![None],
        };
        assert_eq!(
            observe(0, &ch, &prev, &[0], &ObservationScale::UNIT).len(),
            7
        );
    }

    #[test]
    fn zero_channels_leave_only_flags() {
        let ch = tiny(0.0);
        let prev = AssociationState {
            bs_of_irs: vec![1],
            irs_of_user: vec![None],
        };
        let o = observe(0, &ch, &prev, &[0], &ObservationScale::UNIT);
        assert_eq!(o.0, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let o1 = observe(1, &ch, &prev, &[0], &ObservationScale::UNIT);
        assert_eq!(o1.0[6], 0.0);
    }

    #[test]
    fn foreign_users_are_masked() {
        let ch = tiny(1.0);
        let prev = AssociationState {
            bs_of_irs: vec![0],
            irs_of_user: vec![None],
        };
        let own = observe(0, &ch, &prev, &[0], &ObservationScale::UNIT);
        assert_eq!(own.0, vec![1.0, -1.0, 3.0, -3.0, 5.0, -5.0, 0.0]);
        let other = observe(1, &ch, &prev, &[0], &ObservationScale::UNIT);
        assert_eq!(other.0, vec![0.0, 0.0, 4.0, -4.0, 0.0, 0.0, 1.0]);
    }
}
