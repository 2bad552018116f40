//! Model parameters, time grids and analytic cumulants.
//!
//! A BCTS Lévy measure has density
//!
//! ```text
//! ν(x) = c_p e^{-β_p x} x^{-1-α_p} 1{x>0} + c_n e^{-β_n |x|} |x|^{-1-α_n} 1{x<0}
//! ```
//!
//! and is of finite variation for `α < 1`. Legs with `0 < α < 1` have infinite
//! activity, legs with `α < 0` are compound Poisson.

use crate::error::{Error, Result};
use crate::special::{check_alpha, gamma};

/// Day-count convention for daily grids.
pub const DAYS_PER_YEAR: f64 = 360.0;

/// Activity regime of a tempered stable leg, derived from its stability index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `0 < α < 1`: infinitely many small jumps on every interval.
    InfiniteActivity,
    /// `α < 0`: compound Poisson with gamma-distributed jump sizes.
    FiniteActivity,
}

impl Regime {
    pub fn of(alpha: f64) -> Regime {
        if alpha > 0.0 {
            Regime::InfiniteActivity
        } else {
            Regime::FiniteActivity
        }
    }
}

/// One leg of a tempered stable law: `c e^{-βx} x^{-1-α}` on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtsParams {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
}

impl CtsParams {
    /// Validated constructor; requires `c > 0`.
    pub fn new(alpha: f64, beta: f64, c: f64) -> Result<Self> {
        let leg = CtsParams { alpha, beta, c };
        leg.validate()?;
        if !(c > 0.0) {
            return Err(Error::param("c", format!("must be positive, got {c}")));
        }
        Ok(leg)
    }

    /// Checks the stability index and tempering rate. `c == 0` is accepted and
    /// marks an inactive leg of a one-sided process.
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::param("beta", format!("must be positive, got {}", self.beta)));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::param("c", format!("must be nonnegative, got {}", self.c)));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.alpha)
    }

    pub fn is_active(&self) -> bool {
        self.c > 0.0
    }

    /// Total mass of the Lévy measure, `c Γ(-α) β^α`, for a finite-activity leg.
    pub fn jump_intensity(&self) -> Result<f64> {
        if self.regime() != Regime::FiniteActivity {
            return Err(Error::param("alpha", format!("jump intensity is infinite for alpha = {}", self.alpha)));
        }
        Ok(self.c * gamma(-self.alpha) * self.beta.powf(self.alpha))
    }

    /// `k`-th cumulant of the one-sided law at unit time,
    /// `c β^{α-k} Γ(k - α)`.
    pub fn cumulant(&self, k: u32) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        let k = k as f64;
        self.c * self.beta.powf(self.alpha - k) * gamma(k - self.alpha)
    }
}

/// Bilateral tempered stable driver together with the OU mean-reversion rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BctsParams {
    pub pos: CtsParams,
    pub neg: CtsParams,
    pub b: f64,
}

impl BctsParams {
    pub fn new(pos: CtsParams, neg: CtsParams, b: f64) -> Result<Self> {
        let params = BctsParams { pos, neg, b };
        params.validate()?;
        Ok(params)
    }

    /// CGMY parametrisation: `C = c_p = c_n`, `G = β_n`, `M = β_p`, `Y = α_p = α_n`.
    pub fn cgmy(c: f64, g: f64, m: f64, y: f64, b: f64) -> Result<Self> {
        Self::new(CtsParams::new(y, m, c)?, CtsParams::new(y, g, c)?, b)
    }

    /// Process with positive jumps only; the negative leg is kept inactive
    /// with `c_n = 0`.
    pub fn one_sided(pos: CtsParams, b: f64) -> Result<Self> {
        Self::new(pos, CtsParams { c: 0.0, ..pos }, b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(Error::param("b", format!("must be positive, got {}", self.b)));
        }
        self.pos.validate().map_err(|e| rename(e, "pos"))?;
        self.neg.validate().map_err(|e| rename(e, "neg"))?;
        if !self.pos.is_active() && !self.neg.is_active() {
            return Err(Error::param("c", "at least one leg must have c > 0"));
        }
        if self.pos.regime() != self.neg.regime() {
            return Err(Error::param(
                "alpha",
                format!(
                    "legs must share the activity regime, got alpha_p = {} and alpha_n = {}",
                    self.pos.alpha, self.neg.alpha
                ),
            ));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        self.pos.regime()
    }

    pub fn is_cgmy(&self) -> bool {
        self.pos.c == self.neg.c && self.pos.alpha == self.neg.alpha
    }

    /// Legs as `(leg, sign)` pairs, skipping inactive ones.
    pub fn active_legs(&self) -> impl Iterator<Item = (CtsParams, f64)> + '_ {
        [(self.pos, 1.0), (self.neg, -1.0)].into_iter().filter(|(leg, _)| leg.is_active())
    }
}

fn rename(err: Error, leg: &str) -> Error {
    match err {
        Error::Parameter { name, reason } => Error::Parameter { name: format!("{leg}.{name}"), reason },
        other => other,
    }
}

/// Strictly increasing observation times `t_0 < t_1 < … < t_I`, in years.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::param("grid", "needs at least one time"));
        }
        if !(times[0] >= 0.0) {
            return Err(Error::param("grid", format!("t_0 must be >= 0, got {}", times[0])));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::param("grid", format!("times must be strictly increasing, got {} then {}", w[0], w[1])));
        }
        Ok(TimeGrid { times })
    }

    /// `t_i = t_0 + i·dt` for `i = 0..=steps`.
    pub fn uniform(t0: f64, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        Self::new((0..=steps).map(|i| t0 + i as f64 * dt).collect())
    }

    /// Daily grid `0, 1/360, …, days/360`.
    pub fn daily(days: usize) -> Self {
        TimeGrid { times: (0..=days).map(|d| d as f64 / DAYS_PER_YEAR).collect() }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Step lengths `t_i - t_{i-1}`.
    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }
}

/// First four cumulants of a real random variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantSet {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl CumulantSet {
    pub fn as_array(&self) -> [f64; 4] {
        [self.k1, self.k2, self.k3, self.k4]
    }

    pub fn from_array(k: [f64; 4]) -> Self {
        CumulantSet { k1: k[0], k2: k[1], k3: k[2], k4: k[3] }
    }
}

/// Cumulant `c_{L,k}` of the BCTS driver at unit time.
pub fn levy_cumulant(params: &BctsParams, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "cumulant order must be >= 1"));
    }
    params.validate()?;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(params.pos.cumulant(k) + sign * params.neg.cumulant(k))
}

/// Cumulants of `X(t)` given `X(0) = x0`:
/// `k1 = x0 e^{-bt} + c_{L,1}(1 - e^{-bt})/b`, `k_k = c_{L,k}(1 - e^{-kbt})/(kb)`.
pub fn ou_cumulants(params: &BctsParams, x0: f64, t: f64) -> Result<CumulantSet> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("must be >= 0, got {t}")));
    }
    let b = params.b;
    let mut k = [0.0; 4];
    for (i, slot) in k.iter_mut().enumerate() {
        let order = (i + 1) as f64;
        // -expm1 keeps full precision for small bt
        *slot = levy_cumulant(params, i as u32 + 1)? * -(-order * b * t).exp_m1() / (order * b);
    }
    k[0] += x0 * (-b * t).exp();
    Ok(CumulantSet::from_array(k))
}

/// Relative error `(true - estimate) / true`.
pub fn err_pct(true_value: f64, estimated: f64) -> Result<f64> {
    if true_value == 0.0 {
        return Err(Error::DivisionByZero("err_pct: true value is zero"));
    }
    Ok((true_value - estimated) / true_value)
}
