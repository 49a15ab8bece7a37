use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::NetworkDims;
use crate::error::{Error, Result};

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned service area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub const fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// Folds a coordinate back into `[lo, hi]` by mirror reflection at the edges.
    fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
        let span = hi - lo;
        if span <= 0.0 {
            return lo;
        }
        let period = 2.0 * span;
        let t = (v - lo).rem_euclid(period);
        if t <= span {
            lo + t
        } else {
            hi - (t - span)
        }
    }

    pub fn reflect_into(&self, p: Point) -> Point {
        Point::new(
            Self::reflect(p.x, self.min.x, self.max.x),
            Self::reflect(p.y, self.min.y, self.max.y),
        )
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(
            self.min.x + self.width() * rng.gen::<f64>(),
            self.min.y + self.height() * rng.gen::<f64>(),
        )
    }
}

/// Node positions of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    bs: Vec<Point>,
    irs: Vec<Point>,
    users: Vec<Point>,
    bounds: Rect,
}

impl Geometry {
    /// Validates that every position is finite and inside `bounds`.
    ///
    /// An empty IRS list is accepted so that direct-link-only networks can be modelled.
    pub fn new(bs: Vec<Point>, irs: Vec<Point>, users: Vec<Point>, bounds: Rect) -> Result<Self> {
        if bs.is_empty() || users.is_empty() {
            return Err(Error::Config(
                "geometry needs at least one BS and one user".into(),
            ));
        }
        if !(bounds.min.is_finite() && bounds.max.is_finite())
            || bounds.width() < 0.0
            || bounds.height() < 0.0
        {
            return Err(Error::Config(format!("invalid area bounds {bounds:?}")));
        }
        for (what, pts) in [("bs", &bs), ("irs", &irs), ("user", &users)] {
            if let Some((i, p)) = pts
                .iter()
                .enumerate()
                .find(|(_, p)| !p.is_finite() || !bounds.contains(**p))
            {
                return Err(Error::Config(format!(
                    "{what} {i} at ({}, {}) lies outside the service area",
                    p.x, p.y
                )));
            }
        }
        Ok(Self {
            bs,
            irs,
            users,
            bounds,
        })
    }

    /// Uniformly random placement of every node.
    pub fn random<R: Rng + ?Sized>(dims: &NetworkDims, bounds: Rect, rng: &mut R) -> Result<Self> {
        let bs = (0..dims.num_bs).map(|_| bounds.sample(rng)).collect();
        let irs = (0..dims.num_irs).map(|_| bounds.sample(rng)).collect();
        let users = (0..dims.num_users).map(|_| bounds.sample(rng)).collect();
        Self::new(bs, irs, users, bounds)
    }

    pub fn bs(&self) -> &[Point] {
        &self.bs
    }

    pub fn irs(&self) -> &[Point] {
        &self.irs
    }

    pub fn users(&self) -> &[Point] {
        &self.users
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn with_users(&self, users: Vec<Point>) -> Result<Self> {
        Self::new(self.bs.clone(), self.irs.clone(), users, self.bounds)
    }

    /// Keeps only the listed IRSs, in the given order.
    pub fn restrict_irs(&self, keep: &[usize]) -> Self {
        Self {
            irs: keep.iter().map(|&l| self.irs[l]).collect(),
            ..self.clone()
        }
    }
}

/// Serving BS of every user: the nearest BS, ties to the lowest index.
pub fn serving_cells(geometry: &Geometry) -> Vec<usize> {
    geometry
        .users()
        .iter()
        .map(|&u| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (m, &b) in geometry.bs().iter().enumerate() {
                let d = u.distance(b);
                if d < best_d {
                    best = m;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Users served by BS `m`, in increasing index order.
pub fn cell_members(cells: &[usize], m: usize) -> Vec<usize> {
    cells
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == m)
        .map(|(k, _)| k)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityParams {
    /// Standard deviation of the per-axis Gaussian step, in meters per slot.
    pub step_std: f64,
    /// Move users every slot; when false users stay put within an episode.
    pub per_slot: bool,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            step_std: 1.0,
            per_slot: true,
        }
    }
}

/// One slot of reflected Gaussian random walk for every user. BS and IRS positions never move.
pub fn step_mobility<R: Rng + ?Sized>(
    geometry: &Geometry,
    params: &MobilityParams,
    rng: &mut R,
) -> Geometry {
    let bounds = geometry.bounds();
    let users = geometry
        .users()
        .iter()
        .map(|&u| {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            bounds.reflect_into(Point::new(
                u.x + params.step_std * dx,
                u.y + params.step_std * dy,
            ))
        })
        .collect();
    Geometry {
        users,
        ..geometry.clone()
    }
}
