//! Monte Carlo pricing of arithmetic-average Asian calls with European exercise,
//! optionally forward-starting.
//!
//! The payoff `(Σ_i S(t_i)/I - K)^+` is evaluated on skeletons of `X` started
//! at `X(0) = 0` on the grid `0, t_1, …, t_I`. For a forward-start contract the
//! first step `t_1` is long, which is where the approximate schemes break down.

use crate::error::{Error, Result};
use crate::model::{BctsParams, TimeGrid, DAYS_PER_YEAR};
use crate::pricing::{McConfig, PricingResult};
use crate::rng::par_map_streams;
use crate::simulation::{Scheme, SkeletonSimulator};
use crate::stats::mean_and_se;
use crate::transition::{ForwardCurve, TransitionLaw};

/// Settlement dates and strike of an Asian call.
#[derive(Debug, Clone, PartialEq)]
pub struct AsianSpec {
    pub dates: Vec<f64>,
    pub strike: f64,
    pub rate: f64,
    /// Number of equal sub-steps used to simulate `[0, t_1]`.
    pub first_step_substeps: usize,
}

impl AsianSpec {
    /// `count` daily settlements, the first on day `first_day`.
    pub fn daily(first_day: usize, count: usize, strike: f64) -> Result<Self> {
        if first_day == 0 {
            return Err(Error::param("first_day", "settlement days start at 1"));
        }
        let dates = (first_day..first_day + count).map(|d| d as f64 / DAYS_PER_YEAR).collect();
        let spec = AsianSpec { dates, strike, rate: 0.0, first_step_substeps: 1 };
        spec.validate()?;
        Ok(spec)
    }

    /// Days between the start of the contract and the first settlement,
    /// beyond the usual one-day lag.
    pub fn forward_start_days(&self) -> f64 {
        self.dates.first().map_or(0.0, |t| t * DAYS_PER_YEAR - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dates.is_empty() {
            return Err(Error::param("dates", "at least one settlement date is required"));
        }
        if !(self.dates[0] > 0.0) || self.dates.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("dates", "settlement dates must be positive and increasing"));
        }
        if !(self.strike >= 0.0) || !self.strike.is_finite() {
            return Err(Error::param("strike", format!("must be >= 0, got {}", self.strike)));
        }
        if !self.rate.is_finite() {
            return Err(Error::param("rate", "must be finite"));
        }
        if self.first_step_substeps == 0 {
            return Err(Error::param("first_step_substeps", "must be at least 1"));
        }
        Ok(())
    }

    /// Simulation grid and the grid index of every settlement date.
    fn grid(&self) -> Result<(TimeGrid, Vec<usize>)> {
        let n = self.first_step_substeps;
        let mut times: Vec<f64> = (0..n).map(|j| self.dates[0] * j as f64 / n as f64).collect();
        let first = times.len();
        times.extend_from_slice(&self.dates);
        Ok((TimeGrid::new(times)?, (first..first + self.dates.len()).collect()))
    }
}

/// Monte Carlo price of an Asian call; `scheme` selects exact or approximate
/// transition sampling, the risk-neutral drift is the exact one in all cases.
pub fn price_asian(
    spec: &AsianSpec,
    curve: &ForwardCurve,
    params: &BctsParams,
    scheme: Scheme,
    mc: &McConfig,
) -> Result<PricingResult> {
    spec.validate()?;
    mc.validate()?;
    let (grid, settle) = spec.grid()?;
    // S(t_i) = F(0,t_i) e^{h(t_i)} e^{X(t_i)}
    let scale = spec
        .dates
        .iter()
        .map(|&t| Ok(curve.value(t) * TransitionLaw::new(*params, t)?.risk_neutral_h()?.exp()))
        .collect::<Result<Vec<f64>>>()?;
    let sim = SkeletonSimulator::new(params, grid, scheme)?;
    let discount = (-spec.rate * spec.dates[spec.dates.len() - 1]).exp();
    let count = spec.dates.len() as f64;
    let payoffs = par_map_streams(mc.seed, mc.first_stream, mc.n_paths, |rng| {
        let mut path = vec![0.0; sim.grid().len()];
        sim.fill(0.0, rng, &mut path);
        let avg = settle.iter().zip(&scale).map(|(&i, s)| s * path[i].exp()).sum::<f64>() / count;
        discount * (avg - spec.strike).max(0.0)
    });
    let (value, std_error) = mean_and_se(&payoffs)?;
    Ok(PricingResult { value, std_error, n_paths: mc.n_paths, scheme: Some(scheme), per_date: Vec::new() })
}
