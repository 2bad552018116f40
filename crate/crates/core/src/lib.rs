//! Tempered stable and CGMY driven Ornstein-Uhlenbeck processes.
//!
//! The crate covers the full chain used to price energy derivatives on a
//! mean-reverting spot model `S(t) = F(0,t) exp(h(t) + X(t))`, where `X` solves
//! `dX = -b X dt + dL` and `L` is a bilateral classical tempered stable (BCTS)
//! Lévy process of finite variation:
//!
//! - [`model`]: parameter sets, analytic cumulants, error metric.
//! - [`special`]: gamma/digamma, the Gauss hypergeometric `2F1(1,1;1-α;x)` and
//!   the integrals appearing in the transition law.
//! - [`transition`]: log-characteristic function and cumulant generating function
//!   of the transition law, risk-neutral drift and spot map.
//! - [`simulation`]: exact skeleton generation in both activity regimes plus
//!   two approximate schemes.
//! - [`fft`], [`asian`], [`swing`]: Carr-Madan call strips, Monte Carlo Asians
//!   and least-squares Monte Carlo swing options.
//! - [`noa`]: a Samuelson-damped additive futures model built on the same
//!   integrated process.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asian;
mod error;
pub mod fft;
pub mod model;
pub mod noa;
pub mod pricing;
pub mod rng;
pub mod simulation;
pub mod special;
pub mod stats;
pub mod swing;
pub mod transition;

pub use error::{Error, Result};
pub use model::{BctsParams, CtsParams, CumulantSet, Regime, TimeGrid, DAYS_PER_YEAR};
pub use pricing::{McConfig, PricingResult};
pub use rng::RngStream;
pub use simulation::{PathSkeleton, Scheme};
pub use transition::{ForwardCurve, TransitionLaw};

pub use num_complex::Complex64;
