//! Transfer-function analysis of input/output experiments.
//!
//! The crate works with finite experiments: every party chooses one of a few
//! settings and records one of a few outcomes. A deterministic run is a
//! [`TransferFunction`](tf::TransferFunction); noisy or quantum runs are
//! described by probability distributions over transfer functions and by the
//! observable conditional table [`Behavior`](behavior::Behavior).
//!
//! Modules, bottom-up:
//!
//! - [`rational`]: exact rationals, `num/den` text and continued fractions.
//! - [`tf`]: experiment shapes, enumeration, signalling classes, text form.
//! - [`behavior`]: conditional tables, mixtures, no-signalling checks.
//! - [`lp`]: exact phase-1 simplex with Farkas certificates.
//! - [`localpoly`]: membership in the local-deterministic polytope, the
//!   symmetric two- and three-setting constructions and Bell expressions.
//! - [`quantum`]: singlet-state oracle producing rational behaviors.
//! - [`spacetime`]: events, interval classes, boosts, the boosted family of
//!   experiments and the pigeonhole bound.
//! - [`scenario`]: chained experiments and backward-causality detection.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod behavior;
pub mod localpoly;
pub mod lp;
pub mod quantum;
pub mod rational;
pub mod scenario;
pub mod spacetime;
pub mod tf;

pub use behavior::{Behavior, TfDistribution};
pub use rational::Rational;
pub use tf::{ExperimentShape, PartySpec, SignallingClass, TransferFunction};
