use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{path_loss_gain, ChannelRealization, PathLossModel, SmallScaleFading};
use crate::env::{
    observe, serving_cells, step_mobility, AssociationState, BeamformingConfig, Downlink, Geometry,
    MobilityParams, NetworkDims, Observation, ObservationScale, PhaseConfig,
};
use crate::error::Result;

/// How often the small-scale fading is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    /// New Rayleigh draw every slot.
    PerSlot,
    /// New draw at each episode start, held for the episode.
    PerEpisode,
    /// One draw for the lifetime of the environment.
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvParams {
    pub dims: NetworkDims,
    pub path_loss: PathLossModel,
    pub mobility: MobilityParams,
    pub fading: FadingMode,
    pub p_max: f64,
    pub noise_power: f64,
}

/// The multi-cell downlink as seen by the learning loop.
///
/// Positions and fading evolve from the environment's own random stream, so the
/// trajectory never depends on the actions taken.
#[derive(Debug, Clone)]
pub struct NetworkEnv {
    params: EnvParams,
    initial: Geometry,
    geometry: Geometry,
    cells: Vec<usize>,
    fading: SmallScaleFading,
    channels: ChannelRealization,
    prev_assoc: AssociationState,
    scale: ObservationScale,
    rng: ChaCha8Rng,
}

impl NetworkEnv {
    pub fn new(params: EnvParams, initial: Geometry, mut rng: ChaCha8Rng) -> Result<Self> {
        let fading = SmallScaleFading::sample(&params.dims, &mut rng);
        let channels = fading.apply(&initial, &params.path_loss, params.noise_power)?;
        let cells = serving_cells(&initial);
        let scale = typical_scale(&initial, &params.path_loss)?;
        let prev_assoc =
            AssociationState::with_strongest_irs(vec![0; params.dims.num_irs], &cells, &channels);
        let mut env = Self {
            params,
            geometry: initial.clone(),
            initial,
            cells,
            fading,
            channels,
            prev_assoc,
            scale,
            rng,
        };
        env.reset()?;
        Ok(env)
    }

    /// Starts a new episode: users return to their initial positions, fading is
    /// redrawn (unless frozen) and the previous-slot association is randomized.
    pub fn reset(&mut self) -> Result<()> {
        self.geometry = self.initial.clone();
        if self.params.fading != FadingMode::Frozen {
            self.fading = SmallScaleFading::sample(&self.params.dims, &mut self.rng);
        }
        self.refresh_channels()?;
        let num_bs = self.params.dims.num_bs;
        let bs_of_irs = (0..self.params.dims.num_irs)
            .map(|_| self.rng.gen_range(0..num_bs))
            .collect();
        self.prev_assoc =
            AssociationState::with_strongest_irs(bs_of_irs, &self.cells, &self.channels);
        Ok(())
    }

    /// Moves to the next slot.
    pub fn advance(&mut self) -> Result<()> {
        if self.params.mobility.per_slot {
            self.geometry = step_mobility(&self.geometry, &self.params.mobility, &mut self.rng);
        }
        if self.params.fading == FadingMode::PerSlot {
            self.fading = SmallScaleFading::sample(&self.params.dims, &mut self.rng);
        }
        self.refresh_channels()
    }

    fn refresh_channels(&mut self) -> Result<()> {
        self.channels = self.fading.apply(
            &self.geometry,
            &self.params.path_loss,
            self.params.noise_power,
        )?;
        self.cells = serving_cells(&self.geometry);
        Ok(())
    }

    pub fn observe(&self, m: usize) -> Observation {
        observe(
            m,
            &self.channels,
            &self.prev_assoc,
            &self.cells,
            &self.scale,
        )
    }

    /// Per-BS rewards of a full slot configuration.
    pub fn rewards(
        &self,
        assoc: &AssociationState,
        phases: &PhaseConfig,
        beams: &BeamformingConfig,
    ) -> Result<Vec<f64>> {
        Downlink {
            channels: &self.channels,
            assoc,
            phases,
            beams,
            cells: &self.cells,
        }
        .rewards()
    }

    /// Records the association in force this slot; it becomes the next slot's
    /// "previous" association seen through the control-signal flags.
    pub fn commit_association(&mut self, assoc: AssociationState) {
        self.prev_assoc = assoc;
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn dims(&self) -> &NetworkDims {
        &self.params.dims
    }

    pub fn channels(&self) -> &ChannelRealization {
        &self.channels
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn prev_association(&self) -> &AssociationState {
        &self.prev_assoc
    }

    pub fn observation_scale(&self) -> ObservationScale {
        self.scale
    }
}

fn typical_scale(geometry: &Geometry, model: &PathLossModel) -> Result<ObservationScale> {
    let mean_gain =
        |a: &[crate::env::Point], b: &[crate::env::Point], exponent: f64| -> Result<f64> {
            let mut acc = 0.0;
            let mut n = 0usize;
            for &p in a {
                for &q in b {
                    acc += path_loss_gain(p.distance(q).max(f64::MIN_POSITIVE), exponent, model)?;
                    n += 1;
                }
            }
            Ok(if n == 0 { 1.0 } else { acc / n as f64 })
        };
    Ok(ObservationScale {
        direct: mean_gain(geometry.bs(), geometry.users(), model.exp_bs_user)?
            .sqrt()
            .recip(),
        bs_irs: mean_gain(geometry.bs(), geometry.irs(), model.exp_bs_irs)?
            .sqrt()
            .recip(),
        irs_user: mean_gain(geometry.irs(), geometry.users(), model.exp_irs_user)?
            .sqrt()
            .recip(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Point, Rect};
    use crate::seeded_rng;

    fn params(fading: FadingMode, per_slot: bool) -> EnvParams {
        EnvParams {
            dims: NetworkDims {
                num_bs: 2,
                num_irs: 2,
                num_users: 3,
                bs_antennas: 2,
                irs_elements: 2,
            },
            path_loss: PathLossModel::default(),
            mobility: MobilityParams {
                step_std: 1.0,
                per_slot,
            },
            fading,
            p_max: 1.0,
            noise_power: 1e-10,
        }
    }

    fn geometry(dims: &NetworkDims) -> Geometry {
        let area = Rect::new(Point::new(0.0, 0.0), Point::new(100.0, 50.0));
        Geometry::random(dims, area, &mut seeded_rng(3, 0)).unwrap()
    }

    #[test]
    fn frozen_static_env_never_changes() {
        let p = params(FadingMode::Frozen, false);
        let mut env = NetworkEnv::new(p.clone(), geometry(&p.dims), seeded_rng(1, 0)).unwrap();
        let first = env.channels().clone();
        for _ in 0..5 {
            env.advance().unwrap();
            assert_eq!(*env.channels(), first);
        }
        env.reset().unwrap();
        assert_eq!(*env.channels(), first);
    }

    #[test]
    fn per_slot_env_resamples() {
        let p = params(FadingMode::PerSlot, true);
        let mut env = NetworkEnv::new(p.clone(), geometry(&p.dims), seeded_rng(1, 0)).unwrap();
        let first = env.channels().clone();
        env.advance().unwrap();
        assert_ne!(*env.channels(), first);
        assert_eq!(env.observe(0).len(), p.dims.observation_dim());
        let s = env.observation_scale();
        assert!(s.direct > 1.0 && s.bs_irs > 1.0 && s.irs_user > 1.0);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let p = params(FadingMode::PerSlot, true);
        let run = || {
            let mut env = NetworkEnv::new(p.clone(), geometry(&p.dims), seeded_rng(8, 0)).unwrap();
            let mut out = vec![];
            for _ in 0..4 {
                env.advance().unwrap();
                out.push(env.observe(1).0);
            }
            out
        };
        assert_eq!(run(), run());
    }
}
