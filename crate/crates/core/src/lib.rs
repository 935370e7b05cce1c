//! Asymmetric Byzantine quorum systems.
//!
//! The crate has three layers:
//!
//! * [`algebra`]: fail-prone systems, quorum systems, kernels, core sets,
//!   the Q³/B³ conditions, wise/naive classification and guilds.
//! * [`config`]: JSON trust assumptions written with the `Θ` and `∗` operators.
//! * A deterministic simulator ([`sim`]) running the register emulations in
//!   [`register`] and the broadcast protocols in [`broadcast`] under seeded or
//!   scripted adversarial schedules, with trace invariants in [`check`],
//!   runnable scenarios in [`scenario`] and randomized campaigns in [`fuzz`].

pub mod algebra;
pub mod broadcast;
pub mod check;
pub mod config;
pub mod error;
pub mod fuzz;
pub mod register;
pub mod scenario;
pub mod signature;
pub mod sim;

pub use error::{Error, Result};
