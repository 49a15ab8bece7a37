//! TOML experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::HyperParams;
use crate::baselines::OracleBudget;
use crate::channel::PathLossModel;
use crate::env::{
    EnvParams, FadingMode, Geometry, MobilityParams, NetworkDims, NetworkEnv, Point, Rect,
};
use crate::error::{Error, Result};
use crate::seeded_rng;

/// Topology, power and fading of the simulated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub num_bs: usize,
    pub num_irs: usize,
    pub num_users: usize,
    pub bs_antennas: usize,
    pub irs_elements: usize,
    /// Per-BS transmit power budget in watts.
    pub p_max: f64,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    pub area: Rect,
    /// Explicit positions; when absent BSs sit evenly on the horizontal midline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bs_positions: Option<Vec<Point>>,
    /// Explicit positions; when absent IRSs are placed uniformly from `placement_seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub irs_positions: Option<Vec<Point>>,
    /// Explicit positions; when absent users are placed uniformly from `placement_seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user_positions: Option<Vec<Point>>,
    pub placement_seed: u64,
    pub fading: FadingMode,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            num_bs: 2,
            num_irs: 2,
            num_users: 4,
            bs_antennas: 4,
            irs_elements: 8,
            p_max: 1.0,
            noise_power: 1e-12,
            area: Rect {
                min: Point { x: 0.0, y: 0.0 },
                max: Point { x: 200.0, y: 100.0 },
            },
            bs_positions: None,
            irs_positions: None,
            user_positions: None,
            placement_seed: 1,
            fading: FadingMode::PerSlot,
        }
    }
}

impl NetworkConfig {
    pub fn dims(&self) -> NetworkDims {
        NetworkDims {
            num_bs: self.num_bs,
            num_irs: self.num_irs,
            num_users: self.num_users,
            bs_antennas: self.bs_antennas,
            irs_elements: self.irs_elements,
        }
    }

    /// Initial node positions. Randomly placed nodes draw from `placement_seed` only,
    /// so the topology is independent of the experiment seed.
    pub fn geometry(&self) -> Result<Geometry> {
        let area = self.area;
        let mut rng = seeded_rng(self.placement_seed, 0);
        let bs = match &self.bs_positions {
            Some(p) => p.clone(),
            None => (0..self.num_bs)
                .map(|m| Point {
                    x: area.min.x + area.width() * (m as f64 + 0.5) / self.num_bs as f64,
                    y: area.min.y + area.height() / 2.0,
                })
                .collect(),
        };
        let irs = match &self.irs_positions {
            Some(p) => p.clone(),
            None => (0..self.num_irs).map(|_| area.sample(&mut rng)).collect(),
        };
        let users = match &self.user_positions {
            Some(p) => p.clone(),
            None => (0..self.num_users).map(|_| area.sample(&mut rng)).collect(),
        };
        Geometry::new(bs, irs, users, area)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("num_bs", self.num_bs),
            ("num_irs", self.num_irs),
            ("num_users", self.num_users),
            ("bs_antennas", self.bs_antennas),
            ("irs_elements", self.irs_elements),
        ] {
            if v == 0 {
                return Err(invalid(format!("network.{name}"), "must be at least 1"));
            }
        }
        for (name, v) in [("p_max", self.p_max), ("noise_power", self.noise_power)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(
                    format!("network.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if !(self.area.width() > 0.0 && self.area.height() > 0.0) {
            return Err(invalid(
                "network.area",
                "must have positive width and height",
            ));
        }
        for (name, pts, want) in [
            ("bs_positions", &self.bs_positions, self.num_bs),
            ("irs_positions", &self.irs_positions, self.num_irs),
            ("user_positions", &self.user_positions, self.num_users),
        ] {
            if let Some(p) = pts {
                if p.len() != want {
                    return Err(invalid(
                        format!("network.{name}"),
                        format!("expected {want} positions, got {}", p.len()),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Settings of the non-learning strategies.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    /// BS index per IRS for the fixed strategy; nearest BS when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_association: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Save checkpoints every this many episodes; 0 saves only the final networks.
    pub checkpoint_every: usize,
    pub network: NetworkConfig,
    pub channel: PathLossModel,
    pub mobility: MobilityParams,
    pub hyper: HyperParams,
    pub oracle: OracleBudget,
    pub baseline: BaselineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            checkpoint_every: 50,
            network: NetworkConfig::default(),
            channel: PathLossModel::default(),
            mobility: MobilityParams::default(),
            hyper: HyperParams::default(),
            oracle: OracleBudget::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(invalid("seed", "must fit in a signed 64-bit integer"));
        }
        self.network.validate()?;
        self.channel.validate()?;
        let m = &self.mobility;
        if !(m.step_std.is_finite() && m.step_std >= 0.0) {
            return Err(invalid(
                "mobility.step_std",
                "must be finite and non-negative",
            ));
        }
        let h = &self.hyper;
        if !(h.gamma >= 0.0 && h.gamma < 1.0) {
            return Err(invalid(
                "hyper.gamma",
                format!("must lie in [0, 1), got {}", h.gamma),
            ));
        }
        if !(h.tau > 0.0 && h.tau <= 1.0) {
            return Err(invalid(
                "hyper.tau",
                format!("must lie in (0, 1], got {}", h.tau),
            ));
        }
        for (name, v) in [("lr_actor", h.lr_actor), ("lr_critic", h.lr_critic)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(
                    format!("hyper.{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("buffer", h.buffer),
            ("episodes", h.episodes),
            ("steps", h.steps),
            ("batch", h.batch),
        ] {
            if v == 0 {
                return Err(invalid(format!("hyper.{name}"), "must be at least 1"));
            }
        }
        if h.hidden.iter().any(|&w| w == 0) {
            return Err(invalid("hyper.hidden", "layer widths must be at least 1"));
        }
        for (name, v) in [("noise_start", h.noise_start), ("noise_end", h.noise_end)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(
                    format!("hyper.{name}"),
                    "must be finite and non-negative",
                ));
            }
        }
        if let Some(c) = h.grad_clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid("hyper.grad_clip", "must be positive"));
            }
        }
        if self.oracle.phase_levels == 0 {
            return Err(invalid("oracle.phase_levels", "must be at least 1"));
        }
        if let Some(map) = &self.baseline.fixed_association {
            if map.len() != self.network.num_irs || map.iter().any(|&b| b >= self.network.num_bs) {
                return Err(invalid(
                    "baseline.fixed_association",
                    "needs one BS index below num_bs per IRS",
                ));
            }
        }
        Ok(())
    }

    pub fn env_params(&self) -> EnvParams {
        EnvParams {
            dims: self.network.dims(),
            path_loss: self.channel,
            mobility: self.mobility,
            fading: self.network.fading,
            p_max: self.network.p_max,
            noise_power: self.network.noise_power,
        }
    }

    /// Fresh environment whose channel and mobility trajectory depends only on
    /// the topology and `seed`.
    pub fn build_env(&self, seed: u64) -> Result<NetworkEnv> {
        NetworkEnv::new(
            self.env_params(),
            self.network.geometry()?,
            seeded_rng(seed, 1),
        )
    }

    /// Like [`Self::build_env`] but on a trajectory disjoint from the training one.
    pub fn build_eval_env(&self, seed: u64) -> Result<NetworkEnv> {
        NetworkEnv::new(
            self.env_params(),
            self.network.geometry()?,
            seeded_rng(seed, 2),
        )
    }

    /// The fixed strategy's map, defaulting to the BS nearest to each IRS.
    pub fn fixed_association(&self) -> Result<Vec<usize>> {
        if let Some(map) = &self.baseline.fixed_association {
            return Ok(map.clone());
        }
        let g = self.network.geometry()?;
        Ok(g.irs()
            .iter()
            .map(|p| {
                let mut best = 0;
                for (m, b) in g.bs().iter().enumerate() {
                    if p.distance(*b) < p.distance(g.bs()[best]) {
                        best = m;
                    }
                }
                best
            })
            .collect())
    }
}

/// Reads and validates a TOML configuration. Absent fields take their defaults.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.hyper.gamma, 0.99);
        assert_eq!(c.hyper.tau, 0.001);
        assert_eq!(c.hyper.buffer, 10_000);
        assert_eq!(c.hyper.batch, 64);
        assert_eq!((c.hyper.lr_actor, c.hyper.lr_critic), (1e-4, 1e-3));
        assert_eq!((c.hyper.episodes, c.hyper.steps), (200, 100));
    }

    #[test]
    fn tau_out_of_range_names_field() {
        let err = ExperimentConfig::from_toml_str("[hyper]\ntau = 1.5\n").unwrap_err();
        assert!(
            matches!(err, Error::Validation { ref field, .. } if field == "hyper.tau"),
            "{err}"
        );
    }

    #[test]
    fn other_range_errors_name_fields() {
        for (doc, field) in [
            ("[hyper]\ngamma = 1.0", "hyper.gamma"),
            ("[network]\nnum_users = 0", "network.num_users"),
            ("[network]\np_max = -1.0", "network.p_max"),
            ("[channel]\nexp_bs_user = 0.0", "channel.exp_bs_user"),
            (
                "[baseline]\nfixed_association = [0, 5]",
                "baseline.fixed_association",
            ),
            (
                "[network]\nirs_positions = [{ x = 1.0, y = 1.0 }]",
                "network.irs_positions",
            ),
        ] {
            match ExperimentConfig::from_toml_str(doc) {
                Err(Error::Validation { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{doc}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("sead = 3"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml_str("[hyper]\nlr = 3.0"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn default_topology_is_reproducible_and_in_bounds() {
        let c = ExperimentConfig::default();
        let a = c.network.geometry().unwrap();
        assert_eq!(a, c.network.geometry().unwrap());
        assert_eq!(a.bs()[0], Point { x: 50.0, y: 50.0 });
        assert_eq!(a.bs()[1], Point { x: 150.0, y: 50.0 });
        assert_eq!(c.fixed_association().unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn toml_round_trip(
            seed in 0u64..i64::MAX as u64,
            tau in 1e-6f64..1.0,
            gamma in 0.0f64..0.999,
            k in 1usize..8,
            fading in 0usize..3,
            hidden in proptest::collection::vec(1usize..300, 0..4),
            clip in proptest::option::of(0.1f64..100.0),
            p in 1e-3f64..10.0,
        ) {
            let mut c = ExperimentConfig { seed, ..Default::default() };
            c.hyper.tau = tau;
            c.hyper.gamma = gamma;
            c.hyper.hidden = hidden;
            c.hyper.grad_clip = clip;
            c.network.num_users = k;
            c.network.p_max = p;
            c.network.fading = [FadingMode::PerSlot, FadingMode::PerEpisode, FadingMode::Frozen][fading];
            c.network.irs_positions = Some(vec![Point { x: 3.25, y: 7.5 }, Point { x: 0.1, y: 99.9 }]);
            let text = c.to_toml_string().unwrap();
            prop_assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
        }
    }
}
