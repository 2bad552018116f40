//! Special functions used by the transition law.

mod gamma;
mod hyper;
pub mod quadrature;

pub use gamma::{digamma, gamma, EULER_GAMMA};
pub(crate) use hyper::check_alpha;
pub use hyper::{hyp2f1_11, integral_i, integral_i_real, power_log_integral, power_log_integral_real};
