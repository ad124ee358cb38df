//! Large-scale pathloss, block fading and UE mobility.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Linear channel power gains for every UE in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    pub gains: Vec<f64>,
}

impl ChannelSnapshot {
    pub fn new(gains: Vec<f64>) -> Self {
        debug_assert!(gains.iter().all(|g| g.is_finite() && *g > 0.0));
        Self { gains }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

const MIN_DISTANCE_KM: f64 = 0.001;

/// 128.1 + 37.6 log10(d) with `d` in kilometers, clamped to at least 1 m.
pub fn pathloss_db(distance_km: f64) -> f64 {
    128.1 + 37.6 * distance_km.max(MIN_DISTANCE_KM).log10()
}

pub fn channel_gain(ue: &Position, bs: &Position, fading_sample: f64) -> f64 {
    let d_km = ue.distance(bs) / 1000.0;
    10f64.powf(-pathloss_db(d_km) / 10.0) * fading_sample
}

/// Rayleigh block fading: exponential power gain with unit mean.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let s: f64 = Exp1.sample(rng);
    // Exp1 can return exactly 0 with negligible probability; gains must stay positive.
    s.max(f64::MIN_POSITIVE)
}

fn reflect(mut v: f64, size: f64) -> f64 {
    // Repeated specular reflection off [0, size].
    loop {
        if v < 0.0 {
            v = -v;
        } else if v > size {
            v = 2.0 * size - v;
        } else {
            return v;
        }
    }
}

/// Moves `speed * 1 slot` in a uniformly random direction, reflecting off the
/// square cell `[0, cell_size]^2`.
pub fn random_walk_step<R: Rng + ?Sized>(
    position: Position,
    speed: f64,
    cell_size: f64,
    rng: &mut R,
) -> Position {
    let angle = rng.random::<f64>() * std::f64::consts::TAU;
    if speed == 0.0 {
        return position;
    }
    let (s, c) = angle.sin_cos();
    Position {
        x: reflect(position.x + speed * c, cell_size),
        y: reflect(position.y + speed * s, cell_size),
    }
}
