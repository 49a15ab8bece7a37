//! Path loss and Rayleigh block fading for the BS-user, BS-IRS and IRS-user links.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::complex::{Complex, ComplexMatrix};
use crate::env::{Geometry, NetworkDims, Point};
use crate::error::{Error, Result};

/// Distance-dependent path loss `g(d) = g₀ · max(d, 1 m)^(−α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossModel {
    /// Loss at the 1 m reference distance, in dB (negative).
    pub reference_loss_db: f64,
    pub exp_bs_irs: f64,
    pub exp_irs_user: f64,
    pub exp_bs_user: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            reference_loss_db: -30.0,
            exp_bs_irs: 2.5,
            exp_irs_user: 2.4,
            exp_bs_user: 3.5,
        }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<()> {
        let check = |field: &str, v: f64| {
            if !v.is_finite() || v < 2.0 {
                Err(Error::Validation {
                    field: format!("channel.{field}"),
                    reason: format!("path loss exponent must be >= 2.0, got {v}"),
                })
            } else {
                Ok(())
            }
        };
        check("exp_bs_irs", self.exp_bs_irs)?;
        check("exp_irs_user", self.exp_irs_user)?;
        check("exp_bs_user", self.exp_bs_user)?;
        if !self.reference_loss_db.is_finite() {
            return Err(Error::Validation {
                field: "channel.reference_loss_db".into(),
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    fn reference_gain(&self) -> f64 {
        10f64.powf(self.reference_loss_db / 10.0)
    }
}

/// Linear power gain at `distance_m` for the given exponent. Distances below 1 m are clamped.
pub fn path_loss_gain(distance_m: f64, exponent: f64, model: &PathLossModel) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be positive and finite, got {distance_m}"
        )));
    }
    Ok(model.reference_gain() * distance_m.max(1.0).powf(-exponent))
}

/// Matrix of i.i.d. CN(0, 1) entries.
pub fn sample_rayleigh<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(re * scale, im * scale)
        })
        .collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("length matches by construction")
}

/// One slot's complete CSI.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    dims: NetworkDims,
    /// `H_{m,k}` (1×N_b), index `m * K + k`.
    direct: Vec<ComplexMatrix>,
    /// `G_{m,l}` (N_l×N_b), index `m * L + l`.
    bs_irs: Vec<ComplexMatrix>,
    /// `h_{l,k}` (N_l×1, unconjugated), index `l * K + k`.
    irs_user: Vec<ComplexMatrix>,
    noise_power: Vec<f64>,
}

impl ChannelRealization {
    /// Assembles a realization from explicit channel grids, checking every shape.
    pub fn from_parts(
        dims: NetworkDims,
        direct: Vec<ComplexMatrix>,
        bs_irs: Vec<ComplexMatrix>,
        irs_user: Vec<ComplexMatrix>,
        noise_power: Vec<f64>,
    ) -> Result<Self> {
        let NetworkDims {
            num_bs: m,
            num_irs: l,
            num_users: k,
            bs_antennas: nb,
            irs_elements: nl,
        } = dims;
        let check = |what: &str, mats: &[ComplexMatrix], count: usize, shape: (usize, usize)| {
            if mats.len() != count {
                return Err(Error::Config(format!(
                    "{what}: expected {count} matrices, got {}",
                    mats.len()
                )));
            }
            if let Some(bad) = mats.iter().find(|x| x.shape() != shape) {
                return Err(Error::Config(format!(
                    "{what}: expected {shape:?} matrices, got {:?}",
                    bad.shape()
                )));
            }
            Ok(())
        };
        check("direct", &direct, m * k, (1, nb))?;
        check("bs_irs", &bs_irs, m * l, (nl, nb))?;
        check("irs_user", &irs_user, l * k, (nl, 1))?;
        if noise_power.len() != k {
            return Err(Error::Config(format!(
                "expected {k} noise powers, got {}",
                noise_power.len()
            )));
        }
        if let Some(bad) = noise_power.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::Domain(format!("noise power must be > 0, got {bad}")));
        }
        Ok(Self {
            dims,
            direct,
            bs_irs,
            irs_user,
            noise_power,
        })
    }

    pub fn dims(&self) -> &NetworkDims {
        &self.dims
    }

    pub fn direct(&self, m: usize, k: usize) -> &ComplexMatrix {
        &self.direct[m * self.dims.num_users + k]
    }

    pub fn bs_irs(&self, m: usize, l: usize) -> &ComplexMatrix {
        &self.bs_irs[m * self.dims.num_irs + l]
    }

    pub fn irs_user(&self, l: usize, k: usize) -> &ComplexMatrix {
        &self.irs_user[l * self.dims.num_users + k]
    }

    pub fn noise_power(&self, k: usize) -> f64 {
        self.noise_power[k]
    }

    /// Keeps only the listed IRSs (in the given order); all other links are unchanged.
    pub fn restrict_irs(&self, keep: &[usize]) -> Self {
        let NetworkDims {
            num_bs, num_users, ..
        } = self.dims;
        let mut dims = self.dims;
        dims.num_irs = keep.len();
        let bs_irs = (0..num_bs)
            .flat_map(|m| keep.iter().map(move |&l| (m, l)))
            .map(|(m, l)| self.bs_irs(m, l).clone())
            .collect();
        let irs_user = keep
            .iter()
            .flat_map(|&l| (0..num_users).map(move |k| (l, k)))
            .map(|(l, k)| self.irs_user(l, k).clone())
            .collect();
        Self {
            dims,
            direct: self.direct.clone(),
            bs_irs,
            irs_user,
            noise_power: self.noise_power.clone(),
        }
    }
}

/// Unit-power Rayleigh draws for every link, before path loss is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallScaleFading {
    direct: Vec<ComplexMatrix>,
    bs_irs: Vec<ComplexMatrix>,
    irs_user: Vec<ComplexMatrix>,
    dims: NetworkDims,
}

impl SmallScaleFading {
    /// Draw order is fixed (direct, then BS-IRS, then IRS-user, each in row-major
    /// index order), so a seed fully determines the fading.
    pub fn sample<R: Rng + ?Sized>(dims: &NetworkDims, rng: &mut R) -> Self {
        let (nb, nl) = (dims.bs_antennas, dims.irs_elements);
        let direct = (0..dims.num_bs * dims.num_users)
            .map(|_| sample_rayleigh(1, nb, rng))
            .collect();
        let bs_irs = (0..dims.num_bs * dims.num_irs)
            .map(|_| sample_rayleigh(nl, nb, rng))
            .collect();
        let irs_user = (0..dims.num_irs * dims.num_users)
            .map(|_| sample_rayleigh(nl, 1, rng))
            .collect();
        Self {
            direct,
            bs_irs,
            irs_user,
            dims: *dims,
        }
    }

    /// Scales every draw by the root path-loss gain of its link in `geometry`.
    pub fn apply(
        &self,
        geometry: &Geometry,
        model: &PathLossModel,
        noise_power: f64,
    ) -> Result<ChannelRealization> {
        let dims = &self.dims;
        if geometry.bs().len() != dims.num_bs
            || geometry.irs().len() != dims.num_irs
            || geometry.users().len() != dims.num_users
        {
            return Err(Error::Config(format!(
                "geometry has {}/{}/{} BS/IRS/users, configuration expects {}/{}/{}",
                geometry.bs().len(),
                geometry.irs().len(),
                geometry.users().len(),
                dims.num_bs,
                dims.num_irs,
                dims.num_users
            )));
        }
        let scaled =
            |fading: &ComplexMatrix, a: Point, b: Point, exponent: f64| -> Result<ComplexMatrix> {
                // Co-located nodes fall under the 1 m clamp.
                let d = a.distance(b).max(f64::MIN_POSITIVE);
                Ok(fading.scale(path_loss_gain(d, exponent, model)?.sqrt()))
            };
        let (bs, irs, users) = (geometry.bs(), geometry.irs(), geometry.users());
        let (nk, nlr) = (dims.num_users, dims.num_irs);
        let direct = self
            .direct
            .iter()
            .enumerate()
            .map(|(i, f)| scaled(f, bs[i / nk], users[i % nk], model.exp_bs_user))
            .collect::<Result<_>>()?;
        let bs_irs = self
            .bs_irs
            .iter()
            .enumerate()
            .map(|(i, f)| scaled(f, bs[i / nlr], irs[i % nlr], model.exp_bs_irs))
            .collect::<Result<_>>()?;
        let irs_user = self
            .irs_user
            .iter()
            .enumerate()
            .map(|(i, f)| scaled(f, irs[i / nk], users[i % nk], model.exp_irs_user))
            .collect::<Result<_>>()?;
        ChannelRealization::from_parts(*dims, direct, bs_irs, irs_user, vec![noise_power; nk])
    }
}

/// Draws every channel of the network for the current geometry:
/// each link is `sqrt(g(d, α)) · CN(0, I)` with the exponent of its link type.
pub fn sample_channels<R: Rng + ?Sized>(
    geometry: &Geometry,
    dims: &NetworkDims,
    model: &PathLossModel,
    noise_power: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if geometry.bs().len() != dims.num_bs
        || geometry.irs().len() != dims.num_irs
        || geometry.users().len() != dims.num_users
    {
        return Err(Error::Config(format!(
            "geometry has {}/{}/{} BS/IRS/users, configuration expects {}/{}/{}",
            geometry.bs().len(),
            geometry.irs().len(),
            geometry.users().len(),
            dims.num_bs,
            dims.num_irs,
            dims.num_users
        )));
    }
    SmallScaleFading::sample(dims, rng).apply(geometry, model, noise_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Rect;
    use crate::seeded_rng;

    #[test]
    fn path_loss_reference_and_clamp() {
        let m = PathLossModel::default();
        assert!((path_loss_gain(1.0, 2.5, &m).unwrap() - 1e-3).abs() < 1e-18);
        assert!((path_loss_gain(0.5, 2.5, &m).unwrap() - 1e-3).abs() < 1e-18);
        // 1e-3 * 10^-2.5
        let g = path_loss_gain(10.0, 2.5, &m).unwrap();
        assert!((g - 3.162_277_660_168_379_5e-6).abs() < 1e-18);
    }

    #[test]
    fn path_loss_rejects_non_positive_distance() {
        let m = PathLossModel::default();
        assert!(matches!(
            path_loss_gain(0.0, 2.5, &m),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            path_loss_gain(-3.0, 2.5, &m),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn path_loss_decreasing_beyond_reference() {
        let m = PathLossModel::default();
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let d = 1.0 + 0.5 * i as f64 + 0.01;
            let g = path_loss_gain(d, m.exp_irs_user, &m).unwrap();
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn exponent_validation() {
        let mut m = PathLossModel::default();
        assert!(m.validate().is_ok());
        m.exp_bs_user = 1.9;
        assert!(
            matches!(m.validate(), Err(Error::Validation { field, .. }) if field == "channel.exp_bs_user")
        );
    }

    #[test]
    fn rayleigh_unit_power() {
        let mut rng = seeded_rng(7, 0);
        let mut acc = 0.0;
        let n = 100_000 / 6 + 1;
        for _ in 0..n {
            acc += sample_rayleigh(2, 3, &mut rng).norm_sqr();
        }
        let mean = acc / (6 * n) as f64;
        assert!((0.99..=1.01).contains(&mean), "mean |h|^2 = {mean}");
    }

    #[test]
    fn rayleigh_components_look_normal() {
        // Var 1/2 per component, symmetric, and the fourth moment of a Gaussian (3σ⁴).
        let mut rng = seeded_rng(11, 0);
        let n = 100_000;
        let samples: Vec<Complex> = (0..n)
            .map(|_| sample_rayleigh(1, 1, &mut rng)[(0, 0)])
            .collect();
        for part in [|z: &Complex| z.re, |z: &Complex| z.im] {
            let xs: Vec<f64> = samples.iter().map(part).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
            let skew =
                xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n as f64 / var.powf(1.5);
            assert!(mean.abs() < 0.01, "mean {mean}");
            assert!((var - 0.5).abs() < 0.01, "var {var}");
            assert!(skew.abs() < 0.05, "skew {skew}");
            assert!(
                (m4 / (var * var) - 3.0).abs() < 0.1,
                "kurtosis {}",
                m4 / (var * var)
            );
        }
    }

    #[test]
    fn rayleigh_is_deterministic_under_seed() {
        let a = sample_rayleigh(2, 3, &mut seeded_rng(3, 1));
        let b = sample_rayleigh(2, 3, &mut seeded_rng(3, 1));
        assert_eq!(a, b);
    }

    fn single_link_geometry(user_at: Point) -> (Geometry, NetworkDims) {
        let bounds = Rect::new(Point::new(-50.0, -50.0), Point::new(50.0, 50.0));
        let g = Geometry::new(vec![Point::new(0.0, 0.0)], vec![], vec![user_at], bounds).unwrap();
        let dims = NetworkDims {
            num_bs: 1,
            num_irs: 0,
            num_users: 1,
            bs_antennas: 1,
            irs_elements: 1,
        };
        (g, dims)
    }

    #[test]
    fn direct_channel_variance_follows_path_loss() {
        let model = PathLossModel::default();
        for (pos, expected) in [
            (
                Point::new(10.0, 0.0),
                path_loss_gain(10.0, model.exp_bs_user, &model).unwrap(),
            ),
            (Point::new(0.0, 0.0), 1e-3),
        ] {
            let (g, dims) = single_link_geometry(pos);
            let mut rng = seeded_rng(5, 0);
            let n = 100_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let ch = sample_channels(&g, &dims, &model, 1e-9, &mut rng).unwrap();
                acc += ch.direct(0, 0).norm_sqr();
            }
            let rel = (acc / n as f64 - expected).abs() / expected;
            assert!(rel < 0.02, "relative error {rel}");
        }
    }

    #[test]
    fn sample_channels_shapes_and_determinism() {
        let bounds = Rect::new(Point::new(0.0, 0.0), Point::new(100.0, 100.0));
        let dims = NetworkDims {
            num_bs: 2,
            num_irs: 3,
            num_users: 4,
            bs_antennas: 4,
            irs_elements: 5,
        };
        let g = Geometry::random(&dims, bounds, &mut seeded_rng(1, 0)).unwrap();
        let model = PathLossModel::default();
        let a = sample_channels(&g, &dims, &model, 1e-10, &mut seeded_rng(9, 0)).unwrap();
        let b = sample_channels(&g, &dims, &model, 1e-10, &mut seeded_rng(9, 0)).unwrap();
        assert_eq!(a, b);
        for m in 0..2 {
            for k in 0..4 {
                assert_eq!(a.direct(m, k).shape(), (1, 4));
            }
            for l in 0..3 {
                assert_eq!(a.bs_irs(m, l).shape(), (5, 4));
            }
        }
        for l in 0..3 {
            for k in 0..4 {
                assert_eq!(a.irs_user(l, k).shape(), (5, 1));
            }
        }
    }

    #[test]
    fn sample_channels_rejects_count_mismatch() {
        let (g, mut dims) = single_link_geometry(Point::new(1.0, 1.0));
        dims.num_users = 2;
        let r = sample_channels(
            &g,
            &dims,
            &PathLossModel::default(),
            1e-9,
            &mut seeded_rng(0, 0),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
