//! Semantic-aware power allocation for multi-stream semantic transmission.
//!
//! The crate models a transmitter that sends several semantic data streams
//! (e.g. a textual prompt and an edge map) over orthogonal fading channels and
//! asks how much power each stream needs so that the regenerated signal meets
//! a perceptual-quality target at minimum total power.
//!
//! Modules:
//! - [`info_theory`] — entropy / mutual-information formulas and brute-force
//!   oracles used to validate them.
//! - [`perception`] — calibrated perception-error functions, semantic values,
//!   and their monotone inverses.
//! - [`link`] — SNR, BPSK bit error rate, finite-blocklength block error
//!   rate, their inverses, and the generalized Lambert W solver.
//! - [`alloc`] — the three power allocation methods (equal-SNR baseline,
//!   proportional closed form, constraint-curve bisection).
//! - [`simkit`] — deterministic Monte Carlo experiment engine over Rayleigh
//!   fading realizations.

pub mod alloc;
pub mod info_theory;
pub mod link;
pub mod perception;
pub mod simkit;

pub(crate) mod scalar;
