use std::f64::consts::TAU;

use crate::channel::ChannelRealization;
use crate::complex::{unit_phasor, Complex};
use crate::env::cell_members;
use crate::error::{Error, Result};

/// Which BS controls each IRS and which IRS (if any) reflects toward each user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationState {
    pub bs_of_irs: Vec<usize>,
    pub irs_of_user: Vec<Option<usize>>,
}

impl AssociationState {
    /// Checks one BS per IRS and that a user's IRS is controlled by the user's own BS.
    pub fn validate(&self, cells: &[usize], num_bs: usize) -> Result<()> {
        if let Some((l, m)) = self
            .bs_of_irs
            .iter()
            .enumerate()
            .find(|(_, &m)| m >= num_bs)
        {
            return Err(Error::Domain(format!("IRS {l} assigned to unknown BS {m}")));
        }
        if self.irs_of_user.len() != cells.len() {
            return Err(Error::Domain(format!(
                "association covers {} users, network has {}",
                self.irs_of_user.len(),
                cells.len()
            )));
        }
        for (k, irs) in self.irs_of_user.iter().enumerate() {
            if let Some(l) = *irs {
                match self.bs_of_irs.get(l) {
                    None => {
                        return Err(Error::Domain(format!("user {k} served by unknown IRS {l}")))
                    }
                    Some(&m) if m != cells[k] => {
                        return Err(Error::Domain(format!(
                            "user {k} (BS {}) served by IRS {l} controlled by BS {m}",
                            cells[k]
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Completes a BS-IRS map with the default user allocation: each user takes the
    /// IRS controlled by its BS with the largest `‖h_{l,k}‖`, ties to the lowest index.
    pub fn with_strongest_irs(
        bs_of_irs: Vec<usize>,
        cells: &[usize],
        channels: &ChannelRealization,
    ) -> Self {
        let irs_of_user = cells
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let mut best: Option<(usize, f64)> = None;
                for (l, _) in bs_of_irs.iter().enumerate().filter(|(_, &b)| b == m) {
                    let gain = channels.irs_user(l, k).norm_sqr();
                    if best.map_or(true, |(_, g)| gain > g) {
                        best = Some((l, gain));
                    }
                }
                best.map(|(l, _)| l)
            })
            .collect();
        Self {
            bs_of_irs,
            irs_of_user,
        }
    }

    /// IRSs currently controlled by BS `m`.
    pub fn controlled_by(&self, m: usize) -> Vec<usize> {
        self.bs_of_irs
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == m)
            .map(|(l, _)| l)
            .collect()
    }

    /// Binary K×L user-IRS association matrix of BS `m`: row k has a single 1 in the
    /// column of the IRS serving user k when k is in cell m.
    pub fn matrix(&self, m: usize, cells: &[usize]) -> Vec<Vec<u8>> {
        let l_count = self.bs_of_irs.len();
        self.irs_of_user
            .iter()
            .zip(cells)
            .map(|(irs, &c)| {
                let mut row = vec![0u8; l_count];
                if let (Some(l), true) = (irs, c == m) {
                    row[*l] = 1;
                }
                row
            })
            .collect()
    }
}

/// Phase shifts of every IRS element, kept in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    theta: Vec<Vec<f64>>,
}

impl PhaseConfig {
    /// All phases zero, i.e. every `Φ_l` is the identity.
    pub fn identity(num_irs: usize, elements: usize) -> Self {
        Self {
            theta: vec![vec![0.0; elements]; num_irs],
        }
    }

    pub fn theta(&self, l: usize) -> &[f64] {
        &self.theta[l]
    }

    pub fn set(&mut self, l: usize, angles: &[f64]) {
        assert_eq!(angles.len(), self.theta[l].len(), "phase count mismatch");
        for (t, a) in self.theta[l].iter_mut().zip(angles) {
            *t = a.rem_euclid(TAU);
        }
    }

    /// Diagonal of `Φ_l`.
    pub fn phasors(&self, l: usize) -> Vec<Complex> {
        self.theta[l].iter().map(|&t| unit_phasor(t)).collect()
    }

    pub fn num_irs(&self) -> usize {
        self.theta.len()
    }
}

/// Transmit beamformers, one `N_b`-vector per user (sent by the user's serving BS).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingConfig {
    beams: Vec<Vec<Complex>>,
}

impl BeamformingConfig {
    pub fn zeros(num_users: usize, antennas: usize) -> Self {
        Self {
            beams: vec![vec![Complex::new(0.0, 0.0); antennas]; num_users],
        }
    }

    pub fn beam(&self, k: usize) -> &[Complex] {
        &self.beams[k]
    }

    pub fn set(&mut self, k: usize, w: Vec<Complex>) {
        assert_eq!(w.len(), self.beams[k].len(), "antenna count mismatch");
        self.beams[k] = w;
    }

    /// `Σ_{k∈C_m} ‖w_{m,k}‖²`.
    pub fn bs_power(&self, m: usize, cells: &[usize]) -> f64 {
        cell_members(cells, m)
            .into_iter()
            .map(|k| self.beams[k].iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }
}
