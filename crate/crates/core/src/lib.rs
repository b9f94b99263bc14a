//! Spectrum admission control and channel allocation under per-user SINR
//! requirements.
//!
//! A set of transmitter/receiver pairs ("users") each request one channel
//! out of an individual channel set, subject to an individual SINR target
//! under the physical (accumulative) interference model. The library
//! decides *which* users to admit and *which* channel each admitted user
//! gets:
//!
//! 1. [`model`] — the physical instance: users, gain matrix, SINR and
//!    allocation-success evaluation.
//! 2. [`transform`] — rewrites the per-channel SINR constraints into
//!    binary quadratic admission constraints (equal-set, unequal-set and
//!    neighbor-limited variants).
//! 3. [`admission`] — a multiplier-adjustment heuristic that solves the
//!    admission problem and produces a dual upper-bound certificate.
//! 4. [`channel_select`] — greedy best-response channel assignment for the
//!    admitted users, with a potential-function monitor.
//! 5. [`oracle`] — exact enumeration solvers used to certify the heuristic
//!    stages at small scale.
//! 6. [`bounds`] — necessary-condition checks and approximation-gap
//!    reports for geometric (pathloss) instances.
//! 7. [`scengen`] — seeded random scenario generation.
//!
//! All stages are deterministic: randomized pieces take explicit seeds.

pub mod admission;
pub mod bounds;
pub mod channel_select;
pub mod model;
pub mod oracle;
pub mod scengen;
pub mod transform;

pub use admission::{solve, AdmissionResult};
pub use channel_select::SelectionState;
pub use model::{Allocation, AllocationReport, DerivedLinks, Scenario, User};
pub use oracle::ExactResult;
pub use scengen::GenConfig;
pub use transform::BqcProblem;
