//! Physical system model: users, channel gains, SINR evaluation and
//! allocation success.
//!
//! A *user* is a transmitter/receiver pair. The receiver of user `i` sees
//! desired signal `S_i = g[i][i] * P_i` and, on its assigned channel `k`,
//! accumulated co-channel interference from every other transmitting user
//! `j` on `k`. The allocation is *successful* when every transmitting user
//! meets its SINR target.
//!
//! Gain convention: `gain(j, i)` is the dimensionless channel gain from
//! *transmitter* `j` to *receiver* `i`; the diagonal holds the desired-link
//! gains. All SINR arithmetic is linear-scale; decibels appear only in the
//! JSON boundary (`sinr_target_db`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based channel identifier; the global universe is `1..=channel_count`.
pub type ChannelId = usize;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One transmitter/receiver pair requesting a channel.
#[derive(Debug, Clone)]
pub struct User {
    pub id: usize,
    pub tx_position: Point,
    pub rx_position: Point,
    /// Transmit power in watts.
    pub power: f64,
    /// SINR requirement as a linear ratio.
    pub sinr_target: f64,
    /// Revenue obtained if this user is admitted and satisfied.
    pub revenue: f64,
    /// Channels this user may transmit on, ascending, drawn from the
    /// global universe.
    pub channel_set: Vec<ChannelId>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario has no users")]
    Empty,
    #[error("user {user}: {field} must be positive (got {value})")]
    NonPositive {
        user: usize,
        field: &'static str,
        value: f64,
    },
    #[error("user {user}: revenue must be nonnegative (got {value})")]
    NegativeRevenue { user: usize, value: f64 },
    #[error("user {user}: channel set is empty")]
    EmptyChannelSet { user: usize },
    #[error("user {user}: channel {channel} outside universe 1..={channel_count}")]
    ChannelOutOfRange {
        user: usize,
        channel: ChannelId,
        channel_count: usize,
    },
    #[error("gain matrix must be {expected}x{expected}, got row {row} of length {len}")]
    GainShape {
        expected: usize,
        row: usize,
        len: usize,
    },
    #[error("gain[{tx}][{rx}] must be positive (got {value})")]
    NonPositiveGain { tx: usize, rx: usize, value: f64 },
    #[error("noise must be positive (got {value})")]
    NonPositiveNoise { value: f64 },
    #[error("allocation: user {user} assigned channel {channel} outside its channel set")]
    ChannelNotInSet { user: usize, channel: ChannelId },
    #[error("allocation length {len} does not match user count {expected}")]
    AllocationLength { len: usize, expected: usize },
    #[error("invalid scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// The physical instance: users, dense gain matrix, noise power and the
/// size of the global channel universe.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub users: Vec<User>,
    /// Row-major, `gain[j * n + i]` = gain from transmitter `j` to
    /// receiver `i`.
    gain: Vec<f64>,
    /// Noise power in watts.
    pub noise: f64,
    pub channel_count: usize,
}

impl Scenario {
    pub fn new(
        users: Vec<User>,
        gain_rows: Vec<Vec<f64>>,
        noise: f64,
        channel_count: usize,
    ) -> Result<Self, ScenarioError> {
        let n = users.len();
        if n == 0 {
            return Err(ScenarioError::Empty);
        }
        if !(noise > 0.0) {
            return Err(ScenarioError::NonPositiveNoise { value: noise });
        }
        if gain_rows.len() != n {
            return Err(ScenarioError::GainShape {
                expected: n,
                row: gain_rows.len(),
                len: 0,
            });
        }
        let mut gain = Vec::with_capacity(n * n);
        for (j, row) in gain_rows.iter().enumerate() {
            if row.len() != n {
                return Err(ScenarioError::GainShape {
                    expected: n,
                    row: j,
                    len: row.len(),
                });
            }
            for (i, &g) in row.iter().enumerate() {
                if !(g > 0.0) {
                    return Err(ScenarioError::NonPositiveGain {
                        tx: j,
                        rx: i,
                        value: g,
                    });
                }
                gain.push(g);
            }
        }
        for (idx, user) in users.iter().enumerate() {
            if !(user.power > 0.0) {
                return Err(ScenarioError::NonPositive {
                    user: idx,
                    field: "power",
                    value: user.power,
                });
            }
            if !(user.sinr_target > 0.0) {
                return Err(ScenarioError::NonPositive {
                    user: idx,
                    field: "sinr_target",
                    value: user.sinr_target,
                });
            }
            if user.revenue < 0.0 {
                return Err(ScenarioError::NegativeRevenue {
                    user: idx,
                    value: user.revenue,
                });
            }
            if user.channel_set.is_empty() {
                return Err(ScenarioError::EmptyChannelSet { user: idx });
            }
            for &k in &user.channel_set {
                if k < 1 || k > channel_count {
                    return Err(ScenarioError::ChannelOutOfRange {
                        user: idx,
                        channel: k,
                        channel_count,
                    });
                }
            }
        }
        Ok(Scenario {
            users,
            gain,
            noise,
            channel_count,
        })
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Gain from transmitter `tx` to receiver `rx`.
    pub fn gain(&self, tx: usize, rx: usize) -> f64 {
        self.gain[tx * self.users.len() + rx]
    }

    /// Copy of this scenario with reciprocal cross gains: each off-diagonal
    /// pair is replaced by its arithmetic mean, desired links unchanged.
    pub fn symmetrized(&self) -> Scenario {
        let n = self.len();
        let mut out = self.clone();
        for j in 0..n {
            for i in (j + 1)..n {
                let m = 0.5 * (self.gain[j * n + i] + self.gain[i * n + j]);
                out.gain[j * n + i] = m;
                out.gain[i * n + j] = m;
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&io::ScenarioJson::from(self)).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let wire: io::ScenarioJson = serde_json::from_str(text)?;
        wire.into_scenario()
    }
}

/// Per-user channel assignment; at most one channel per user.
/// Serializes as a plain array of channel ids with `null` for silence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Allocation {
    channels: Vec<Option<ChannelId>>,
}

impl Allocation {
    pub fn silent(user_count: usize) -> Self {
        Allocation {
            channels: vec![None; user_count],
        }
    }

    /// Builds a validated allocation: every assigned channel must lie in
    /// the owning user's channel set.
    pub fn new(
        scenario: &Scenario,
        channels: Vec<Option<ChannelId>>,
    ) -> Result<Self, ScenarioError> {
        if channels.len() != scenario.len() {
            return Err(ScenarioError::AllocationLength {
                len: channels.len(),
                expected: scenario.len(),
            });
        }
        for (i, slot) in channels.iter().enumerate() {
            if let Some(k) = slot {
                if !scenario.users[i].channel_set.contains(k) {
                    return Err(ScenarioError::ChannelNotInSet {
                        user: i,
                        channel: *k,
                    });
                }
            }
        }
        Ok(Allocation { channels })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn channel_of(&self, user: usize) -> Option<ChannelId> {
        self.channels[user]
    }

    pub fn set(&mut self, user: usize, channel: Option<ChannelId>) {
        self.channels[user] = channel;
    }

    /// Indices of users currently assigned a channel.
    pub fn transmitting(&self) -> impl Iterator<Item = usize> + '_ {
        self.channels
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|_| i))
    }

    pub fn channels(&self) -> &[Option<ChannelId>] {
        &self.channels
    }
}

/// Link quantities derived from a scenario: desired signal powers, maximum
/// tolerable interference and the cross-interference matrix.
#[derive(Debug, Clone)]
pub struct DerivedLinks {
    /// Desired received power per user.
    pub signal: Vec<f64>,
    /// Interference a user can absorb while still meeting its target;
    /// nonpositive only for users whose target is unreachable even alone.
    pub max_interference: Vec<f64>,
    /// Row-major `cross[j * n + i]` = interference power at receiver `i`
    /// caused by transmitter `j`.
    cross: Vec<f64>,
    /// Users whose SINR target is unsatisfiable even interference-free.
    pub infeasible_alone: Vec<usize>,
    n: usize,
}

impl DerivedLinks {
    /// Raw cross-interference from transmitter `j` at receiver `i`.
    pub fn cross(&self, j: usize, i: usize) -> f64 {
        self.cross[j * self.n + i]
    }

    /// Cross-interference clamped at receiver `i`'s tolerance: a single
    /// interferer never counts for more than the whole budget.
    pub fn clamped_cross(&self, j: usize, i: usize) -> f64 {
        self.cross(j, i).min(self.max_interference[i])
    }

    pub fn is_infeasible_alone(&self, i: usize) -> bool {
        self.max_interference[i] <= 0.0
    }
}

/// Computes signal, interference-tolerance and cross-interference terms
/// for every user and pair.
pub fn derive_links(scenario: &Scenario) -> DerivedLinks {
    let n = scenario.len();
    let mut signal = Vec::with_capacity(n);
    let mut max_interference = Vec::with_capacity(n);
    let mut infeasible_alone = Vec::new();
    for i in 0..n {
        let s = scenario.gain(i, i) * scenario.users[i].power;
        let tol = s / scenario.users[i].sinr_target - scenario.noise;
        if tol <= 0.0 {
            infeasible_alone.push(i);
        }
        signal.push(s);
        max_interference.push(tol);
    }
    let mut cross = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            if i != j {
                cross[j * n + i] = scenario.gain(j, i) * scenario.users[j].power;
            }
        }
    }
    DerivedLinks {
        signal,
        max_interference,
        cross,
        infeasible_alone,
        n,
    }
}

/// Accumulated co-channel interference at receiver `i` on channel `k`:
/// the sum of cross-interference from every other user assigned `k`.
pub fn co_channel_interference(
    scenario: &Scenario,
    allocation: &Allocation,
    i: usize,
    k: ChannelId,
) -> f64 {
    let mut total = 0.0;
    for j in 0..scenario.len() {
        if j != i && allocation.channel_of(j) == Some(k) {
            total += scenario.gain(j, i) * scenario.users[j].power;
        }
    }
    total
}

/// SINR of user `i` under `allocation`, or `None` when `i` is silent.
pub fn compute_sinr(scenario: &Scenario, allocation: &Allocation, i: usize) -> Option<f64> {
    let k = allocation.channel_of(i)?;
    let interference = co_channel_interference(scenario, allocation, i, k);
    let signal = scenario.gain(i, i) * scenario.users[i].power;
    Some(signal / (scenario.noise + interference))
}

/// Outcome of evaluating an allocation against every user's SINR target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationReport {
    /// True iff every transmitting user meets its target.
    pub successful: bool,
    /// Per-user flag: transmitting and meeting its target.
    pub satisfied: Vec<bool>,
    /// Total revenue over satisfied transmitting users.
    pub revenue: f64,
}

/// Checks every transmitting user against its SINR target.
pub fn evaluate_allocation(scenario: &Scenario, allocation: &Allocation) -> AllocationReport {
    let n = scenario.len();
    let mut satisfied = vec![false; n];
    let mut successful = true;
    let mut revenue = 0.0;
    for i in 0..n {
        match compute_sinr(scenario, allocation, i) {
            Some(sinr) => {
                if sinr >= scenario.users[i].sinr_target {
                    satisfied[i] = true;
                    revenue += scenario.users[i].revenue;
                } else {
                    successful = false;
                }
            }
            None => {}
        }
    }
    AllocationReport {
        successful,
        satisfied,
        revenue,
    }
}

/// JSON wire format. Field names are part of the fixture contract:
/// `users` (each with `positions`, `power_watts`, `sinr_target_db`,
/// `revenue`, `channels`), `gain` (row-major, transmitter-major),
/// `noise_watts`, `channel_count`.
mod io {
    use super::*;

    #[derive(Serialize, Deserialize)]
    pub(super) struct PositionsJson {
        pub tx: [f64; 2],
        pub rx: [f64; 2],
    }

    #[derive(Serialize, Deserialize)]
    pub(super) struct UserJson {
        pub positions: PositionsJson,
        pub power_watts: f64,
        pub sinr_target_db: f64,
        pub revenue: f64,
        pub channels: Vec<ChannelId>,
    }

    #[derive(Serialize, Deserialize)]
    pub(super) struct ScenarioJson {
        pub users: Vec<UserJson>,
        pub gain: Vec<Vec<f64>>,
        pub noise_watts: f64,
        pub channel_count: usize,
    }

    impl From<&Scenario> for ScenarioJson {
        fn from(s: &Scenario) -> Self {
            let n = s.len();
            ScenarioJson {
                users: s
                    .users
                    .iter()
                    .map(|u| UserJson {
                        positions: PositionsJson {
                            tx: [u.tx_position.x, u.tx_position.y],
                            rx: [u.rx_position.x, u.rx_position.y],
                        },
                        power_watts: u.power,
                        sinr_target_db: linear_to_db(u.sinr_target),
                        revenue: u.revenue,
                        channels: u.channel_set.clone(),
                    })
                    .collect(),
                gain: (0..n)
                    .map(|j| (0..n).map(|i| s.gain(j, i)).collect())
                    .collect(),
                noise_watts: s.noise,
                channel_count: s.channel_count,
            }
        }
    }

    impl ScenarioJson {
        pub(super) fn into_scenario(self) -> Result<Scenario, ScenarioError> {
            let users = self
                .users
                .into_iter()
                .enumerate()
                .map(|(id, u)| User {
                    id,
                    tx_position: Point::new(u.positions.tx[0], u.positions.tx[1]),
                    rx_position: Point::new(u.positions.rx[0], u.positions.rx[1]),
                    power: u.power_watts,
                    sinr_target: db_to_linear(u.sinr_target_db),
                    revenue: u.revenue,
                    channel_set: u.channels,
                })
                .collect();
            Scenario::new(users, self.gain, self.noise_watts, self.channel_count)
        }
    }
}
