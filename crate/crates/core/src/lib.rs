//! Cache-aided content delivery over quasi-static Rayleigh fading.
//!
//! The crate models a broadcast channel with `Λ` cache states shared by
//! groups of `B` users, and compares three delivery schemes:
//!
//! * TDM, serving one user at a time;
//! * MN, one XOR multicast per stage whose rate is set by the weakest user;
//! * ACC (aggregated coded caching), which serves one user per group at its
//!   own point-to-point rate and rotates through the group members.
//!
//! Modules, bottom-up:
//!
//! * [`numerics`]: exponential integrals, Gauss-Hermite rules, adaptive
//!   quadrature and the log-capacity characteristic function.
//! * [`system`]: configuration and reproducible SNR sampling.
//! * [`scheduling`]: placement, stage enumeration and the fluid-rate event
//!   simulation of one ACC transmission stage.
//! * [`rates`]: instantaneous rate metrics and Monte Carlo averages.
//! * [`analysis`]: exact and approximate closed forms for the average rates.

// Validation is written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod numerics;
pub mod parallel;
pub mod rates;
pub mod scheduling;
pub mod system;

pub use error::{Error, Result};
