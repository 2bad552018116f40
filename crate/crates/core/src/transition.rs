//! Transition law of the OU process `dX = -bX dt + dL`.
//!
//! Over a step of length `t`, `X(t) = a X(0) + Z(t)` with `a = e^{-bt}` and
//! `Z(t) = ∫_0^t e^{-b(t-s)} dL(s)`. For a tempered stable leg the
//! log-characteristic function of `Z` is
//!
//! ```text
//! ψ_{Z}(u, t) = -(c β^α Γ(1-α) / (α b)) [I(u, α, β, β/a) + log a]
//! ```
//!
//! and the bilateral process adds the negative leg evaluated at `-u`.
//! Writing `I + log a = E(iu/β) - E(iua/β)` in terms of the kernel
//! `E(w) = ∫_0^w ((1-t)^α - 1)/t dt` gives one formula valid in both
//! activity regimes and for complex `u` inside the strip of analyticity.

use std::io::Read;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{BctsParams, CtsParams, DAYS_PER_YEAR};
use crate::special::quadrature::GaussLegendre;
use crate::special::{gamma, power_log_integral, power_log_integral_real};

/// Distance kept from the boundary of the CGF strip `-β_n < s < β_p`.
const CGF_MARGIN: f64 = 1e-12;

/// Prefactor `c β^α Γ(1-α) / (α b)` of a leg.
fn leg_scale(leg: &CtsParams, b: f64) -> f64 {
    leg.c * leg.beta.powf(leg.alpha) * gamma(1.0 - leg.alpha) / (leg.alpha * b)
}

fn kernel_integrand(alpha: f64, t: Complex64) -> Complex64 {
    let l = -t;
    let log1p = if l.norm() < 1e-4 { l - l * l * 0.5 + l * l * l / 3.0 } else { (l + 1.0).ln() };
    let z = log1p * alpha;
    let expm1 = if z.norm() < 1e-4 { z + z * z * 0.5 + z * z * z / 6.0 } else { z.exp() - 1.0 };
    expm1 / t
}

/// `E(w) - E(a w)` for `0 < a <= 1`.
///
/// When the two points are close relative to their distance from the
/// singularities at 0 and 1 the integral along the segment is computed
/// directly, avoiding the cancellation of two nearly equal kernel values.
fn kernel_difference(alpha: f64, w: Complex64, a: f64) -> Result<Complex64> {
    if a == 1.0 || w.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let w2 = w * a;
    let len = (w - w2).norm();
    let clearance = (Complex64::new(1.0, 0.0) - w).norm().min((Complex64::new(1.0, 0.0) - w2).norm());
    if len <= 0.2 * w2.norm() && len <= 0.2 * clearance {
        let rule = GaussLegendre::n32();
        let dir = w - w2;
        let v = rule.integrate_complex(0.0, 1.0, |s| kernel_integrand(alpha, w2 + dir * s));
        return Ok(v * dir);
    }
    Ok(power_log_integral(alpha, w)? - power_log_integral(alpha, w2)?)
}

fn kernel_difference_real(alpha: f64, w: f64, a: f64) -> Result<f64> {
    if a == 1.0 || w == 0.0 {
        return Ok(0.0);
    }
    let w2 = w * a;
    let len = (w - w2).abs();
    let clearance = (1.0 - w).min(1.0 - w2);
    if len <= 0.2 * w2.abs() && len <= 0.2 * clearance {
        let rule = GaussLegendre::n32();
        return Ok(rule.integrate(w2, w, |t| (alpha * (-t).ln_1p()).exp_m1() / t));
    }
    Ok(power_log_integral_real(alpha, w)? - power_log_integral_real(alpha, w2)?)
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Log-characteristic function of one leg at a complex argument `v`.
/// Requires `Im v > -β` so that `iv/β` stays off the branch cut.
pub fn psi_z_leg_complex(v: Complex64, t: f64, leg: &CtsParams, b: f64) -> Result<Complex64> {
    check_time(t)?;
    if t == 0.0 || !leg.is_active() || v.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let a = (-b * t).exp();
    let w = Complex64::new(0.0, 1.0) * v / leg.beta;
    if w.im == 0.0 && w.re >= 1.0 {
        return Err(Error::Domain(format!("argument {v} leaves the strip of analyticity Im(v) > -{}", leg.beta)));
    }
    Ok(-leg_scale(leg, b) * kernel_difference(leg.alpha, w, a)?)
}

/// `ψ_{Z_p}(u, t)` for a single leg with positive jumps.
pub fn psi_z_pos(u: f64, t: f64, leg: &CtsParams, b: f64) -> Result<Complex64> {
    leg.validate()?;
    psi_z_leg_complex(Complex64::new(u, 0.0), t, leg, b)
}

/// `ψ_Z(u, t) = ψ_{Z_p}(u, t) + ψ_{Z_n}(-u, t)`.
pub fn psi_z(u: f64, t: f64, params: &BctsParams) -> Result<Complex64> {
    TransitionLaw::new(*params, t)?.psi_z(u)
}

/// Characteristic function of `X(t)` given `X(0) = x0`.
pub fn phi_x(u: f64, t: f64, x0: f64, params: &BctsParams) -> Result<Complex64> {
    TransitionLaw::new(*params, t)?.phi_x(u, x0)
}

/// Cumulant generating function `m_Z(s, t) = log E[e^{sZ(t)}]` for `-β_n < s < β_p`.
pub fn cgf_z(s: f64, t: f64, params: &BctsParams) -> Result<f64> {
    TransitionLaw::new(*params, t)?.cgf_z(s)
}

/// Risk-neutral drift `h(t) = -m_Z(1, t)` under the convention `X(0) = 0`.
pub fn risk_neutral_h(t: f64, params: &BctsParams) -> Result<f64> {
    TransitionLaw::new(*params, t)?.risk_neutral_h()
}

/// Spot price `S(t) = F(0, t) exp(h(t) + x)`.
pub fn spot_price(x: f64, t: f64, curve: &ForwardCurve, params: &BctsParams) -> Result<f64> {
    Ok(curve.value(t) * (risk_neutral_h(t, params)? + x).exp())
}

/// Transition law of `X` over a horizon `t`, with `a = e^{-bt}` cached.
#[derive(Debug, Clone, Copy)]
pub struct TransitionLaw {
    params: BctsParams,
    t: f64,
    a: f64,
}

impl TransitionLaw {
    pub fn new(params: BctsParams, t: f64) -> Result<Self> {
        params.validate()?;
        check_time(t)?;
        Ok(TransitionLaw { params, t, a: (-params.b * t).exp() })
    }

    pub fn params(&self) -> &BctsParams {
        &self.params
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    /// Autoregressive coefficient `a = e^{-bt}`.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn psi_z(&self, u: f64) -> Result<Complex64> {
        self.psi_z_complex(Complex64::new(u, 0.0))
    }

    /// `ψ_Z` at complex `v`, defined for `-β_p < Im v < β_n`.
    pub fn psi_z_complex(&self, v: Complex64) -> Result<Complex64> {
        let p = &self.params;
        let mut acc = Complex64::new(0.0, 0.0);
        for (leg, sign) in p.active_legs() {
            acc += psi_z_leg_complex(v * sign, self.t, &leg, p.b)?;
        }
        Ok(acc)
    }

    pub fn phi_x(&self, u: f64, x0: f64) -> Result<Complex64> {
        let drift = Complex64::new(0.0, u * x0 * self.a);
        Ok((drift + self.psi_z(u)?).exp())
    }

    /// Real cumulant generating function of `Z(t)`, evaluated without complex
    /// arithmetic.
    pub fn cgf_z(&self, s: f64) -> Result<f64> {
        let p = &self.params;
        let upper = if p.pos.is_active() { p.pos.beta } else { f64::INFINITY };
        let lower = if p.neg.is_active() { -p.neg.beta } else { f64::NEG_INFINITY };
        if !(s < upper - CGF_MARGIN && s > lower + CGF_MARGIN) {
            return Err(Error::Domain(format!("cgf argument s = {s} outside the strip ({lower}, {upper})")));
        }
        if self.t == 0.0 || s == 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (leg, sign) in p.active_legs() {
            let w = sign * s / leg.beta;
            acc -= leg_scale(&leg, p.b) * kernel_difference_real(leg.alpha, w, self.a)?;
        }
        Ok(acc)
    }

    /// `h(t) = -m_Z(1, t)`; needs `β_p > 1` so that `E[e^{Z}]` is finite.
    pub fn risk_neutral_h(&self) -> Result<f64> {
        let p = &self.params;
        if p.pos.is_active() && !(p.pos.beta > 1.0) {
            return Err(Error::Inadmissible(format!("risk-neutral drift needs beta_p > 1, got {}", p.pos.beta)));
        }
        Ok(-self.cgf_z(1.0)?)
    }
}

/// Deterministic forward curve `t ↦ F(0, t)`.
///
/// Either flat or piecewise constant on delivery days: the value at `t` is the
/// price attached to the last day offset not after `t·360` (the first price
/// applies before the first offset).
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardCurve {
    Flat(f64),
    Daily { days: Vec<f64>, prices: Vec<f64> },
}

impl ForwardCurve {
    pub fn flat(price: f64) -> Result<Self> {
        if !(price > 0.0) || !price.is_finite() {
            return Err(Error::param("forward", format!("price must be positive, got {price}")));
        }
        Ok(ForwardCurve::Flat(price))
    }

    pub fn daily(days: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if days.is_empty() || days.len() != prices.len() {
            return Err(Error::Input(format!(
                "forward curve needs matching non-empty columns, got {} days and {} prices",
                days.len(),
                prices.len()
            )));
        }
        if days.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("forward curve day offsets must be strictly increasing".into()));
        }
        if let Some(p) = prices.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::Input(format!("forward prices must be positive, got {p}")));
        }
        Ok(ForwardCurve::Daily { days, prices })
    }

    /// Reads a two-column CSV `(day offset, price)` with an optional header row.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let mut days = Vec::new();
        let mut prices = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Input(format!("forward curve: {e}")))?;
            if record.len() != 2 {
                return Err(Error::Input(format!(
                    "forward curve row {}: expected 2 columns, got {}",
                    line + 1,
                    record.len()
                )));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(d), Ok(p)) => {
                    days.push(d);
                    prices.push(p);
                }
                _ if line == 0 => continue,
                _ => return Err(Error::Input(format!("forward curve row {}: cannot parse {:?}", line + 1, record))),
            }
        }
        Self::daily(days, prices)
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            ForwardCurve::Flat(f) => *f,
            ForwardCurve::Daily { days, prices } => {
                let d = t * DAYS_PER_YEAR;
                // tolerate t·360 landing a rounding error below an integer day
                let idx = days.partition_point(|&x| x <= d + 1e-9);
                prices[idx.saturating_sub(1)]
            }
        }
    }
}
