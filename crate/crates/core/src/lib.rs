//! Velocity-aided attitude estimation on SO(3).
//!
//! The crate provides a continuous observer driven by body-frame velocity and
//! inertial-vector measurements, its reduced form, and a hybrid observer that
//! uses the same measurements only when they arrive intermittently. Around the
//! observers sit a synthetic world ([`world`]), gain feasibility checks
//! ([`gains`]), trace analysis ([`analysis`]) and a batch runner ([`runner`])
//! behind the `hybrid-attitude` binary.
//!
//! ```
//! use hybrid_attitude::runner::{simulate, ObserverKind, ScenarioConfig};
//!
//! let config = ScenarioConfig { duration: 1.0, observers: vec![ObserverKind::Hybrid], ..Default::default() };
//! let sim = simulate(&config).unwrap();
//! let hybrid = sim.run(ObserverKind::Hybrid).unwrap();
//! assert!(hybrid.report.jumps > 0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod gains;
pub mod observer;
pub mod runner;
pub mod so3;
pub mod world;
