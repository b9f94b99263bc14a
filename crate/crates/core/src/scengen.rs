//! Seeded random scenario generation.
//!
//! Users are dropped uniformly in a square sized to hold `user_count`
//! users at the configured density. Each receiver sits at a Gaussian
//! random distance (resampled until at least one meter) in a uniform
//! random direction from its transmitter. Gains follow geometric pathloss
//! `g = max(d, 1)^-alpha` for every transmitter/receiver pair, including
//! the desired links. SINR targets are drawn uniformly from a dB ladder;
//! revenues are either flat (count satisfied users) or grow with the
//! target (reward harder service).
//!
//! Generation is a pure function of the config including its seed: the
//! same config reproduces the same scenario byte for byte.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{db_to_linear, ChannelId, Point, Scenario, ScenarioError, User};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSetMode {
    /// Every user gets the full channel universe.
    Equal,
    /// Per-user set sizes drawn uniformly from `2..=channel_universe`,
    /// then a uniform random subset of that size.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevenueMode {
    /// Every satisfied user is worth 1.
    MaxSat,
    /// A user with the `i`-th target of the ladder is worth `i + 1`.
    MaxRevenue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub user_count: usize,
    /// Users per square meter.
    pub density: f64,
    /// Mean transmitter-receiver distance in meters.
    pub link_distance_mean: f64,
    /// Variance of the transmitter-receiver distance in square meters.
    pub link_distance_variance: f64,
    /// Transmit power in watts, identical for all users.
    pub tx_power: f64,
    /// Noise power in watts.
    pub noise: f64,
    pub pathloss_exponent: f64,
    /// Size of the global channel universe.
    pub channel_universe: usize,
    pub channel_set_mode: ChannelSetMode,
    /// SINR target ladder in dB; targets are drawn uniformly from it.
    pub sinr_targets_db: Vec<f64>,
    pub revenue_mode: RevenueMode,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            user_count: 10,
            density: 1.0 / 800.0,
            link_distance_mean: 10.0,
            link_distance_variance: 5.0,
            tx_power: 1.0,
            noise: 1e-8,
            pathloss_exponent: 4.0,
            channel_universe: 10,
            channel_set_mode: ChannelSetMode::Uniform,
            sinr_targets_db: vec![0.0, 3.0, 6.0, 9.0, 12.0],
            revenue_mode: RevenueMode::MaxSat,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("user_count must be at least 1")]
    NoUsers,
    #[error("density must be positive (got {0})")]
    BadDensity(f64),
    #[error("link_distance_variance must be nonnegative (got {0})")]
    BadVariance(f64),
    #[error("link_distance_mean must be at least 1 m when variance is zero (got {0})")]
    DegenerateMean(f64),
    #[error("tx_power must be positive (got {0})")]
    BadPower(f64),
    #[error("noise must be positive (got {0})")]
    BadNoise(f64),
    #[error("pathloss_exponent must be nonnegative (got {0})")]
    BadExponent(f64),
    #[error("channel_universe must be at least 1 (got {0})")]
    BadUniverse(usize),
    #[error("channel_universe must be at least 2 in uniform mode (got {0})")]
    UniverseTooSmallForUniform(usize),
    #[error("sinr_targets_db must be nonempty")]
    NoTargets,
    #[error("generated scenario failed validation: {0}")]
    Scenario(#[from] ScenarioError),
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.user_count == 0 {
            return Err(GenError::NoUsers);
        }
        if !(self.density > 0.0) {
            return Err(GenError::BadDensity(self.density));
        }
        if !(self.link_distance_variance >= 0.0) {
            return Err(GenError::BadVariance(self.link_distance_variance));
        }
        if self.link_distance_variance == 0.0 && self.link_distance_mean < 1.0 {
            return Err(GenError::DegenerateMean(self.link_distance_mean));
        }
        if !(self.tx_power > 0.0) {
            return Err(GenError::BadPower(self.tx_power));
        }
        if !(self.noise > 0.0) {
            return Err(GenError::BadNoise(self.noise));
        }
        if !(self.pathloss_exponent >= 0.0) {
            return Err(GenError::BadExponent(self.pathloss_exponent));
        }
        if self.channel_universe == 0 {
            return Err(GenError::BadUniverse(self.channel_universe));
        }
        if self.channel_set_mode == ChannelSetMode::Uniform && self.channel_universe < 2 {
            return Err(GenError::UniverseTooSmallForUniform(self.channel_universe));
        }
        if self.sinr_targets_db.is_empty() {
            return Err(GenError::NoTargets);
        }
        Ok(())
    }

    /// Side length of the deployment square: `sqrt(user_count / density)`.
    pub fn square_side(&self) -> f64 {
        (self.user_count as f64 / self.density).sqrt()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Draws per-user channel sets according to the configured mode.
pub fn draw_channel_sets(config: &GenConfig, rng: &mut impl Rng) -> Vec<Vec<ChannelId>> {
    let k = config.channel_universe;
    (0..config.user_count)
        .map(|_| match config.channel_set_mode {
            ChannelSetMode::Equal => (1..=k).collect(),
            ChannelSetMode::Uniform => {
                let size = rng.random_range(2..=k);
                let mut universe: Vec<ChannelId> = (1..=k).collect();
                universe.shuffle(rng);
                let mut set: Vec<ChannelId> = universe.into_iter().take(size).collect();
                set.sort_unstable();
                set
            }
        })
        .collect()
}

/// Generates the scenario described by `config`; deterministic in the
/// config including its seed.
pub fn generate(config: &GenConfig) -> Result<Scenario, GenError> {
    config.validate()?;
    let n = config.user_count;
    let side = config.square_side();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let link_distance = Normal::new(
        config.link_distance_mean,
        config.link_distance_variance.sqrt(),
    )
    .expect("validated parameters");

    let mut tx = Vec::with_capacity(n);
    let mut rx = Vec::with_capacity(n);
    let mut targets_db = Vec::with_capacity(n);
    for _ in 0..n {
        let t = Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
        // Resample rather than clamp: keeps the distance distribution
        // shape above the 1 m floor.
        let d = loop {
            let sample = link_distance.sample(&mut rng);
            if sample >= 1.0 {
                break sample;
            }
        };
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = Point::new(t.x + d * angle.cos(), t.y + d * angle.sin());
        let target_index = rng.random_range(0..config.sinr_targets_db.len());
        tx.push(t);
        rx.push(r);
        targets_db.push(target_index);
    }
    let channel_sets = draw_channel_sets(config, &mut rng);

    let alpha = config.pathloss_exponent;
    let gain_rows: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| tx[j].distance(&rx[i]).max(1.0).powf(-alpha))
                .collect()
        })
        .collect();

    let users = (0..n)
        .map(|i| {
            let target_db = config.sinr_targets_db[targets_db[i]];
            let revenue = match config.revenue_mode {
                RevenueMode::MaxSat => 1.0,
                RevenueMode::MaxRevenue => (targets_db[i] + 1) as f64,
            };
            User {
                id: i,
                tx_position: tx[i],
                rx_position: rx[i],
                power: config.tx_power,
                sinr_target: db_to_linear(target_db),
                revenue,
                channel_set: channel_sets[i].clone(),
            }
        })
        .collect();
    Ok(Scenario::new(users, gain_rows, config.noise, config.channel_universe)?)
}
