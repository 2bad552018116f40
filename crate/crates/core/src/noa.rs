//! Additive two-factor model for futures with a delivery period.
//!
//! A future delivering over `[T1, T2]` is modelled as
//!
//! ```text
//! F(t, T1, T2) = F(0, T1, T2) + X1(t, T1, T2) + Γ2(T1, T2) L2(t),
//! X1(t, T1, T2) = ∫_0^t Γ1(u, T1, T2) dL1(u),
//! ```
//!
//! where `L1` is the BCTS driver of the spot OU process, `L2` an independent
//! BCTS Lévy process, and the Samuelson loading
//! `Γ1(u) = γ1 (e^{-b(T1-u)} - e^{-b(T2-u)}) / (b (T2-T1))` averages the
//! instantaneous loading `γ1 e^{-b(T-u)}` over the delivery period. Since
//! `Γ1(u) = Γ1(t) e^{-b(t-u)}`, the first factor equals `Γ1(t) Z(t)` with `Z`
//! the OU integral started at zero, which is what the simulation uses step by
//! step. Both drivers enter centred, so `F` is a martingale.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::model::{levy_cumulant, ou_cumulants, BctsParams, CtsParams, Regime, TimeGrid};
use crate::rng::par_map_streams;
use crate::simulation::{CtsSampler, Scheme, SkeletonSimulator};
use crate::special::quadrature::adaptive_simpson;
use crate::transition::psi_z;
use crate::{Complex64, McConfig};

/// Delivery period `[T1, T2]` in years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveryPeriod {
    pub t1: f64,
    pub t2: f64,
}

impl DeliveryPeriod {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        let p = DeliveryPeriod { t1, t2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 >= 0.0) || !self.t1.is_finite() {
            return Err(Error::param("t1", format!("must be finite and >= 0, got {}", self.t1)));
        }
        if !(self.t2 > self.t1) || !self.t2.is_finite() {
            return Err(Error::param("t2", format!("must be finite and > t1 = {}, got {}", self.t1, self.t2)));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.t2 - self.t1
    }
}

/// Samuelson loading `Γ1(u, T1, T2)` for `u <= T1`.
///
/// Evaluated as `γ1 e^{-b(T1-u)} (1 - e^{-bL})/(bL)` with `L = T2 - T1`, which
/// tends to `γ1 e^{-b(T1-u)}` for a short period and to `γ1` as `b → 0`.
pub fn gamma1(u: f64, period: &DeliveryPeriod, gamma1_coeff: f64, b: f64) -> Result<f64> {
    period.validate()?;
    if !(u <= period.t1) {
        return Err(Error::param("u", format!("loading needs u <= t1 = {}, got {u}", period.t1)));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::param("b", format!("must be finite and >= 0, got {b}")));
    }
    let x = b * period.length();
    let average = if x == 0.0 { 1.0 } else { -(-x).exp_m1() / x };
    Ok(gamma1_coeff * (-b * (period.t1 - u)).exp() * average)
}

/// Average `Γ2(T1, T2) = (1/(T2-T1)) ∫_{T1}^{T2} γ(u) du` by adaptive quadrature.
pub fn gamma2(period: &DeliveryPeriod, gamma_fn: &dyn Fn(f64) -> f64) -> Result<f64> {
    period.validate()?;
    let scale =
        [period.t1, 0.5 * (period.t1 + period.t2), period.t2].iter().map(|&u| gamma_fn(u).abs()).fold(1.0, f64::max);
    let integral = adaptive_simpson(period.t1, period.t2, 1e-13 * scale * period.length(), gamma_fn);
    let avg = integral / period.length();
    if !avg.is_finite() {
        return Err(Error::numerical("gamma2", format!("non-finite average {avg}")));
    }
    Ok(avg)
}

/// Right-continuous step function: `values[i]` on `[breaks[i-1], breaks[i])`,
/// with `values[0]` before the first break and the last value after the last.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        StepFunction { breaks: Vec::new(), values: vec![value] }
    }

    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = StepFunction { breaks, values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.breaks.len() + 1 {
            return Err(Error::param(
                "gamma.values",
                format!(
                    "need {} values for {} breaks, got {}",
                    self.breaks.len() + 1,
                    self.breaks.len(),
                    self.values.len()
                ),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("gamma.values", "must be finite"));
        }
        if self.breaks.iter().any(|b| !b.is_finite()) || self.breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("gamma.breaks", "must be finite and strictly increasing"));
        }
        Ok(())
    }

    pub fn value(&self, u: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= u)]
    }

    /// Exact average over `[T1, T2]`.
    pub fn average(&self, period: &DeliveryPeriod) -> f64 {
        let mut lo = period.t1;
        let mut total = 0.0;
        for (i, &b) in self.breaks.iter().enumerate() {
            if b > lo {
                let hi = b.min(period.t2);
                total += self.values[i] * (hi - lo);
                lo = hi;
            }
            if lo >= period.t2 {
                break;
            }
        }
        if lo < period.t2 {
            total += self.values[self.values.len() - 1] * (period.t2 - lo);
        }
        total / period.length()
    }
}

/// Characteristic function of `loading · Z(t)`, i.e. `exp ψ_Z(loading·u, t)`.
pub fn noa_factor_chf(u: f64, t: f64, period: &DeliveryPeriod, loading: f64, params: &BctsParams) -> Result<Complex64> {
    period.validate()?;
    if !(t <= period.t1) {
        return Err(Error::param("t", format!("must not exceed t1 = {}, got {t}", period.t1)));
    }
    if !loading.is_finite() {
        return Err(Error::param("loading", format!("must be finite, got {loading}")));
    }
    Ok(psi_z(loading * u, t, params)?.exp())
}

/// Characteristic function of the first factor `X1(t, T1, T2) = Γ1(t) Z(t)`.
pub fn first_factor_chf(
    u: f64,
    t: f64,
    period: &DeliveryPeriod,
    gamma1_coeff: f64,
    params: &BctsParams,
) -> Result<Complex64> {
    let loading = gamma1(t, period, gamma1_coeff, params.b)?;
    noa_factor_chf(u, t, period, loading, params)
}

/// Inputs of a futures path simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoaSpec {
    pub period: DeliveryPeriod,
    /// Observation times, all at or before `T1`; `F` equals `f0` at the first one.
    pub grid: TimeGrid,
    pub f0: f64,
    pub gamma1_coeff: f64,
    pub gamma: StepFunction,
}

impl NoaSpec {
    pub fn validate(&self) -> Result<()> {
        self.period.validate()?;
        self.gamma.validate()?;
        let last = self.grid.times()[self.grid.len() - 1];
        if last > self.period.t1 {
            return Err(Error::param("grid", format!("last time {last} is past t1 = {}", self.period.t1)));
        }
        if !self.f0.is_finite() {
            return Err(Error::param("f0", format!("must be finite, got {}", self.f0)));
        }
        if !self.gamma1_coeff.is_finite() {
            return Err(Error::param("gamma1", format!("must be finite, got {}", self.gamma1_coeff)));
        }
        Ok(())
    }

    /// `Γ2(T1, T2)` of the step function `γ`.
    pub fn gamma2(&self) -> f64 {
        self.gamma.average(&self.period)
    }

    /// `Var F(t)` at offset `t` from the grid start: `Γ1(t)² Var Z(t) + Γ2² t c_{L2,2}`.
    pub fn variance(&self, t: f64, leg1: &BctsParams, leg2: &BctsParams) -> Result<f64> {
        let t0 = self.grid.times()[0];
        let g1 = gamma1(t0 + t, &self.period, self.gamma1_coeff, leg1.b)?;
        let z = ou_cumulants(leg1, 0.0, t)?.k2;
        Ok(g1 * g1 * z + self.gamma2().powi(2) * t * levy_cumulant(leg2, 2)?)
    }
}

/// One simulated futures path with its two centred factors.
#[derive(Debug, Clone, PartialEq)]
pub struct NoaPath {
    pub grid: TimeGrid,
    pub future: Vec<f64>,
    pub factor1: Vec<f64>,
    pub factor2: Vec<f64>,
}

/// Increment law of one leg of a BCTS Lévy process over a fixed step.
#[derive(Debug, Clone)]
enum LevyLeg {
    Infinite(CtsSampler),
    Finite { jumps: Option<Poisson<f64>>, sizes: Gamma<f64> },
}

impl LevyLeg {
    fn new(leg: &CtsParams, dt: f64) -> Result<Self> {
        match leg.regime() {
            Regime::InfiniteActivity => Ok(LevyLeg::Infinite(CtsSampler::new(leg.alpha, leg.beta, leg.c * dt)?)),
            Regime::FiniteActivity => {
                let rate = leg.jump_intensity()? * dt;
                let jumps = if rate > 0.0 {
                    Some(Poisson::new(rate).map_err(|e| Error::numerical("poisson", format!("rate {rate}: {e}")))?)
                } else {
                    None
                };
                let sizes = Gamma::new(-leg.alpha, 1.0 / leg.beta)
                    .map_err(|e| Error::numerical("gamma", format!("shape {}: {e}", -leg.alpha)))?;
                Ok(LevyLeg::Finite { jumps, sizes })
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LevyLeg::Infinite(s) => s.sample(rng),
            LevyLeg::Finite { jumps, sizes } => {
                let n = jumps.as_ref().map_or(0, |d| d.sample(rng) as u64);
                (0..n).map(|_| sizes.sample(rng)).sum()
            }
        }
    }
}

#[derive(Debug, Clone)]
struct LevyStep {
    dt: f64,
    legs: Vec<(LevyLeg, f64)>,
}

/// Path generator for [`NoaSpec`] with all step laws precomputed.
#[derive(Debug, Clone)]
pub struct NoaSimulator {
    spec: NoaSpec,
    ou: SkeletonSimulator,
    /// `Γ1(t_i)` and the mean of `Z(t_i)` per grid point.
    loading: Vec<f64>,
    z_mean: Vec<f64>,
    gamma2: f64,
    drift2: f64,
    steps: Vec<LevyStep>,
    step_of: Vec<usize>,
}

impl NoaSimulator {
    pub fn new(spec: &NoaSpec, leg1: &BctsParams, leg2: &BctsParams) -> Result<Self> {
        spec.validate()?;
        leg1.validate()?;
        leg2.validate()?;
        let times = spec.grid.times();
        let t0 = times[0];
        let ou = SkeletonSimulator::new(leg1, spec.grid.clone(), Scheme::Exact)?;
        let loading =
            times.iter().map(|&t| gamma1(t, &spec.period, spec.gamma1_coeff, leg1.b)).collect::<Result<Vec<f64>>>()?;
        let z_mean = times.iter().map(|&t| Ok(ou_cumulants(leg1, 0.0, t - t0)?.k1)).collect::<Result<Vec<f64>>>()?;
        let mut steps: Vec<LevyStep> = Vec::new();
        let mut step_of = Vec::with_capacity(times.len().saturating_sub(1));
        for dt in spec.grid.steps() {
            let idx = match steps.iter().position(|s| (s.dt - dt).abs() <= 1e-13 * dt) {
                Some(i) => i,
                None => {
                    let legs = leg2
                        .active_legs()
                        .map(|(leg, sign)| Ok((LevyLeg::new(&leg, dt)?, sign)))
                        .collect::<Result<Vec<_>>>()?;
                    steps.push(LevyStep { dt, legs });
                    steps.len() - 1
                }
            };
            step_of.push(idx);
        }
        Ok(NoaSimulator {
            spec: spec.clone(),
            ou,
            loading,
            z_mean,
            gamma2: spec.gamma2(),
            drift2: levy_cumulant(leg2, 1)?,
            steps,
            step_of,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NoaPath {
        let n = self.spec.grid.len();
        let mut z = vec![0.0; n];
        self.ou.fill(0.0, rng, &mut z);
        let factor1: Vec<f64> = (0..n).map(|i| self.loading[i] * (z[i] - self.z_mean[i])).collect();
        let mut factor2 = vec![0.0; n];
        let mut level = 0.0;
        for (i, &k) in self.step_of.iter().enumerate() {
            let step = &self.steps[k];
            let jump: f64 = step.legs.iter().map(|(leg, sign)| sign * leg.sample(rng)).sum();
            level += jump - self.drift2 * step.dt;
            factor2[i + 1] = self.gamma2 * level;
        }
        let future = factor1.iter().zip(&factor2).map(|(a, b)| self.spec.f0 + a + b).collect();
        NoaPath { grid: self.spec.grid.clone(), future, factor1, factor2 }
    }
}

/// Simulates one futures path.
pub fn simulate_noa_future<R: Rng + ?Sized>(
    spec: &NoaSpec,
    leg1: &BctsParams,
    leg2: &BctsParams,
    rng: &mut R,
) -> Result<NoaPath> {
    Ok(NoaSimulator::new(spec, leg1, leg2)?.sample(rng))
}

/// Simulates `mc.n_paths` futures paths on disjoint streams.
pub fn simulate_noa_paths(spec: &NoaSpec, leg1: &BctsParams, leg2: &BctsParams, mc: &McConfig) -> Result<Vec<NoaPath>> {
    mc.validate()?;
    let sim = NoaSimulator::new(spec, leg1, leg2)?;
    Ok(par_map_streams(mc.seed, mc.first_stream, mc.n_paths, |rng| sim.sample(rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loading_limits() {
        let p = DeliveryPeriod::new(0.0, 1.0).unwrap();
        assert!((gamma1(0.0, &p, 1.0, 0.5).unwrap() - 2.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert_eq!(gamma1(0.0, &p, 1.7, 0.0).unwrap(), 1.7);
        let short = DeliveryPeriod::new(1.0, 1.0 + 1e-12).unwrap();
        let lim = 2.0 * (-0.5 * 0.75f64).exp();
        assert!((gamma1(0.25, &short, 2.0, 0.5).unwrap() - lim).abs() < 1e-11);
        assert!(gamma1(1.5, &p, 1.0, 0.5).is_err());
    }

    #[test]
    fn step_function_lookup_and_average() {
        let s = StepFunction::new(vec![1.0, 2.0], vec![3.0, 5.0, 7.0]).unwrap();
        assert_eq!(s.value(0.5), 3.0);
        assert_eq!(s.value(1.0), 5.0);
        assert_eq!(s.value(9.0), 7.0);
        let p = DeliveryPeriod::new(0.5, 2.5).unwrap();
        assert!((s.average(&p) - (0.5 * 3.0 + 5.0 + 0.5 * 7.0) / 2.0).abs() < 1e-15);
        assert!(StepFunction::new(vec![1.0], vec![1.0]).is_err());
    }
}
