use crate::channel::ChannelRealization;
use crate::complex::{Complex, ComplexMatrix};
use crate::env::{cell_members, AssociationState, BeamformingConfig, PhaseConfig};
use crate::error::{Error, Result};

/// `h_{l,k}^H Φ_l G_{m,l}` as a 1×N_b row, given the diagonal of `Φ_l`.
pub fn reflected_row(h: &ComplexMatrix, phasors: &[Complex], g: &ComplexMatrix) -> Vec<Complex> {
    let mut out = vec![Complex::new(0.0, 0.0); g.cols()];
    for (e, phasor) in phasors.iter().enumerate() {
        let coeff = h.as_slice()[e].conj() * phasor;
        for (o, ge) in out.iter_mut().zip(g.row_slice(e)) {
            *o += coeff * ge;
        }
    }
    out
}

/// Snapshot of everything that determines the downlink rates in one slot.
#[derive(Debug, Clone, Copy)]
pub struct Downlink<'a> {
    pub channels: &'a ChannelRealization,
    pub assoc: &'a AssociationState,
    pub phases: &'a PhaseConfig,
    pub beams: &'a BeamformingConfig,
    pub cells: &'a [usize],
}

impl<'a> Downlink<'a> {
    /// Direct channel plus the cascade through the user's IRS, if it has one.
    pub fn effective_channel(&self, m: usize, k: usize) -> Result<ComplexMatrix> {
        if self.cells.get(k) != Some(&m) {
            return Err(Error::Domain(format!("user {k} is not served by BS {m}")));
        }
        let direct = self.channels.direct(m, k);
        match self.assoc.irs_of_user[k] {
            None => Ok(direct.clone()),
            Some(l) => {
                let mut row = reflected_row(
                    self.channels.irs_user(l, k),
                    &self.phases.phasors(l),
                    self.channels.bs_irs(m, l),
                );
                for (r, d) in row.iter_mut().zip(direct.as_slice()) {
                    *r += d;
                }
                Ok(ComplexMatrix::row(row))
            }
        }
    }

    /// Achievable rate of user k in bits/s/Hz with intra-cell interference only.
    pub fn user_rate(&self, m: usize, k: usize) -> Result<f64> {
        let noise = self.channels.noise_power(k);
        if !(noise > 0.0) {
            return Err(Error::Domain(format!(
                "noise power of user {k} must be > 0"
            )));
        }
        let h = self.effective_channel(m, k)?;
        let mut signal = 0.0;
        let mut interference = 0.0;
        for i in cell_members(self.cells, m) {
            let p = h.dot(self.beams.beam(i))?.norm_sqr();
            if i == k {
                signal = p;
            } else {
                interference += p;
            }
        }
        Ok((signal / (interference + noise)).ln_1p() / std::f64::consts::LN_2)
    }

    /// Sum rate of the users in cell m.
    pub fn reward(&self, m: usize) -> Result<f64> {
        cell_members(self.cells, m)
            .into_iter()
            .map(|k| self.user_rate(m, k))
            .sum()
    }

    pub fn rewards(&self) -> Result<Vec<f64>> {
        (0..self.channels.dims().num_bs)
            .map(|m| self.reward(m))
            .collect()
    }

    pub fn sum_rate(&self) -> Result<f64> {
        Ok(self.rewards()?.iter().sum())
    }
}
