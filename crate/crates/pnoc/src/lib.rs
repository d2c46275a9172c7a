//! Simulator for approximate floating-point transfer over wavelength-routed
//! photonic network-on-chip links.
//!
//! The model: a 64-bit float crosses an optical waveguide as one bit (or one
//! multi-level symbol) per wavelength per cycle. The laser is sized so the
//! worst-placed receiver on the waveguide can still detect a full-power bit.
//! For approximable traffic, a configurable number of mantissa LSBs is either
//! dropped outright (their wavelengths gated off) or sent at a reduced laser
//! level that only the nearer receivers can recover. Energy ledgers, a
//! deterministic threshold channel, and application-level output-quality
//! checks hang off that core decision.
//!
//! Modules, roughly bottom-up:
//!
//! * [`fpapprox`] - IEEE-754 double decomposition and LSB masking
//! * [`photonics`] - loss parameters, link paths, per-source loss tables
//! * [`laser`] - dBm arithmetic, power budgets, the truncate-vs-reduce rule
//! * [`signaling`] - OOK/PAM4 link economics and the threshold channel
//! * [`trace`] - JSONL packet traces, reading, writing, generation
//! * [`simcore`] - policies, trace replay, energy accounting, comparisons
//! * [`quality`] - application kernels, percent error, sensitivity sweeps
//! * [`config`] - experiment configuration files
//! * [`cli`] - subcommand implementations behind the `pnoc` binary

pub mod cli;
pub mod config;
pub mod error;
pub mod fpapprox;
pub mod laser;
pub mod pgm;
pub mod photonics;
pub mod quality;
pub mod signaling;
pub mod simcore;
pub mod trace;

pub use error::{Error, Result};
