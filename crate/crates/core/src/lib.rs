//! Desk-scale simulation and analysis of single-photon-source experiments.
//!
//! The crate covers the full pipeline of a time-correlated single-photon
//! counting experiment on a spectrally diffusing two-level emitter:
//!
//! * [`emitter`] — stochastic photon streams under pulsed or CW excitation,
//! * [`optics`] — Mach-Zehnder routing, polarization overlap, Fabry-Perot scans,
//! * [`detection`] — detector efficiency, Gaussian jitter, dark counts, dead time,
//! * [`correlator`] — exact streaming g²(τ) histograms (linear and log-multiscale),
//! * [`interference`] — the analytic two-photon interference model and its
//!   Monte Carlo sampling counterpart,
//! * [`analysis`] — damped least-squares fitting of the physical models plus
//!   efficiency-budget and cooperativity calculators,
//! * [`diffusion`] — 1-D finite-difference implant diffusion during annealing,
//! * [`tagfile`] / [`config`] / [`pipeline`] — binary tag I/O, experiment
//!   configuration, and end-to-end reproducible runs.
//!
//! All timestamps are 64-bit integers in picoseconds; stochastic times are
//! rounded half-to-even so runs are bit-exact given a seed. Scalar-valued
//! model math is generic over the float type; the crate-level aliases pin the
//! default precision.

pub mod analysis;
pub mod config;
pub mod correlator;
pub mod detection;
pub mod diffusion;
pub mod emitter;
pub mod error;
pub mod interference;
pub mod optics;
pub mod pipeline;
pub mod rng;
pub mod tagfile;

pub use error::Error;

/// Default scalar type for model math.
pub type Real = f64;
/// Integer timestamp in picoseconds.
pub type Ps = i64;

/// Picoseconds per nanosecond; physics parameters are expressed in ns.
pub const PS_PER_NS: f64 = 1e3;

/// Round a time in nanoseconds to an integer picosecond timestamp,
/// ties-to-even.
pub fn ns_to_ps(t_ns: f64) -> Ps {
    (t_ns * PS_PER_NS).round_ties_even() as Ps
}

/// Convert an integer picosecond timestamp back to nanoseconds.
pub fn ps_to_ns(t: Ps) -> f64 {
    t as f64 / PS_PER_NS
}
