//! Carr-Madan FFT pricing of European calls on the spot model.
//!
//! For log-strike `k` the damped call price `e^{αk} C(k)` has Fourier transform
//!
//! ```text
//! ζ(v) = e^{-rt} φ(v - (α+1)i) / (α² + α - v² + i(2α+1)v)
//! ```
//!
//! where `φ` is the characteristic function of `log S(t)`. The inversion
//! integral is evaluated by one FFT whose log-strike grid is centred on the
//! requested strike, plus an adaptive evaluation of the integral beyond the FFT
//! frequency range. At short maturities `φ` decays so slowly that this tail is
//! not negligible.
//!
//! `Re(e^{-ivk} ζ(v))` is even in `v`, so the trapezoidal rule with half
//! weight at the origin converges geometrically in `η`, at a rate set by the
//! distance from the real axis to the nearest singularity. Two kinds matter:
//!
//! - the poles of `ζ` at `v = iα` and `v = i(α+1)`, whose contribution to the
//!   discretisation error is known in closed form and subtracted;
//! - the branch point of `φ(v - (α+1)i)` at `Im v = α + 1 - β_p`. The spacing
//!   actually used is capped at `2π d / 30` for this distance `d`, which keeps
//!   its contribution near `e^{-30}` even when `β_p` is close to one.
//!
//! Simpson weights lose the geometric convergence and are kept only as an
//! option.
//!
//! When both legs have finite activity the law of `Z(t)` has an atom at zero
//! with mass `p0 = exp(-(λ_p + λ_n)t)`. The atom is priced in closed form and
//! removed from `φ` so that the transform decays.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{BctsParams, Regime};
use crate::pricing::PricingResult;
use crate::special::quadrature::GaussLegendre;
use crate::transition::{ForwardCurve, TransitionLaw};

const TAIL_MAX_PANELS: usize = 100_000;
const TAIL_REL_TOL: f64 = 1e-12;

/// Settlement dates, strike and discount rate of a daily call strip.
#[derive(Debug, Clone, PartialEq)]
pub struct CallStripSpec {
    pub dates: Vec<f64>,
    pub strike: f64,
    pub rate: f64,
}

impl CallStripSpec {
    pub fn new(dates: Vec<f64>, strike: f64) -> Result<Self> {
        let spec = CallStripSpec { dates, strike, rate: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dates.is_empty() {
            return Err(Error::param("dates", "at least one settlement date is required"));
        }
        if self.dates.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::param("dates", "settlement dates must be positive"));
        }
        if self.dates.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("dates", "settlement dates must be increasing"));
        }
        if !(self.strike >= 0.0) || !self.strike.is_finite() {
            return Err(Error::param("strike", format!("must be >= 0, got {}", self.strike)));
        }
        if !self.rate.is_finite() {
            return Err(Error::param("rate", "must be finite"));
        }
        Ok(())
    }
}

/// Weights of the transform sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FftRule {
    #[default]
    Trapezoid,
    Simpson,
}

/// Numerical settings of the transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftConfig {
    /// Damping exponent; `None` selects `min(0.75(β_p - 1), 1.5)`.
    pub damping: Option<f64>,
    /// Number of FFT nodes, a power of two.
    pub n: usize,
    /// Largest frequency spacing; a finer one is used when the strip of
    /// analyticity of the transform is narrow.
    pub eta: f64,
    pub rule: FftRule,
}

impl Default for FftConfig {
    fn default() -> Self {
        FftConfig { damping: None, n: 4096, eta: 0.25, rule: FftRule::Trapezoid }
    }
}

impl FftConfig {
    /// Damping exponent after validation against `α + 1 < β_p`.
    pub fn damping_for(&self, params: &BctsParams) -> Result<f64> {
        let beta_p = if params.pos.is_active() { params.pos.beta } else { f64::INFINITY };
        let alpha = match self.damping {
            Some(a) => a,
            None => (0.75 * (beta_p - 1.0)).min(1.5),
        };
        if !(alpha > 0.0) || !(alpha + 1.0 < beta_p) {
            return Err(Error::param(
                "alpha_cm",
                format!("damping {alpha} must satisfy 0 < alpha_cm and alpha_cm + 1 < beta_p = {beta_p}"),
            ));
        }
        Ok(alpha)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 16 || !self.n.is_power_of_two() {
            return Err(Error::param("n", format!("grid size must be a power of two >= 16, got {}", self.n)));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::param("eta", format!("must be positive, got {}", self.eta)));
        }
        Ok(())
    }
}

/// Characteristic function of `log S(t)` with `X(0) = 0`:
/// `exp(iu(log F(0,t) + h(t)) + ψ_Z(u, t))`.
pub fn log_spot_chf(u: f64, t: f64, curve: &ForwardCurve, params: &BctsParams) -> Result<Complex64> {
    let law = TransitionLaw::new(*params, t)?;
    let m = curve.value(t).ln() + law.risk_neutral_h()?;
    log_spot_chf_complex(&law, m, Complex64::new(u, 0.0))
}

fn log_spot_chf_complex(law: &TransitionLaw, m: f64, v: Complex64) -> Result<Complex64> {
    Ok((Complex64::i() * v * m + law.psi_z_complex(v)?).exp())
}

/// Everything about one maturity that does not depend on the strike.
struct Maturity {
    law: TransitionLaw,
    /// Centre of the log-price law, `log F + h`.
    m: f64,
    discount: f64,
    alpha: f64,
    /// Mass of the atom at `Z = 0`, zero with infinite activity.
    atom: f64,
    /// Weighted transform values on the FFT frequency grid.
    weighted: Vec<Complex64>,
    eta: f64,
    rule: FftRule,
}

impl Maturity {
    fn new(t: f64, rate: f64, curve: &ForwardCurve, params: &BctsParams, cfg: &FftConfig) -> Result<Self> {
        let law = TransitionLaw::new(*params, t)?;
        let m = curve.value(t).ln() + law.risk_neutral_h()?;
        let alpha = cfg.damping_for(params)?;
        let eta = if params.pos.is_active() {
            cfg.eta.min(2.0 * PI * (params.pos.beta - alpha - 1.0) / 30.0)
        } else {
            cfg.eta
        };
        let atom = if params.regime() == Regime::FiniteActivity {
            let total: f64 = params.active_legs().map(|(leg, _)| leg.jump_intensity()).sum::<Result<f64>>()?;
            (-total * t).exp()
        } else {
            0.0
        };
        let mut mat =
            Maturity { law, m, discount: (-rate * t).exp(), alpha, atom, weighted: Vec::new(), eta, rule: cfg.rule };
        let n = cfg.n;
        let mut weighted = Vec::with_capacity(n);
        for j in 0..n {
            let w = match cfg.rule {
                FftRule::Trapezoid if j == 0 || j == n - 1 => 0.5,
                FftRule::Trapezoid => 1.0,
                // Simpson on [0, (n-2)η]; the last node carries no weight
                FftRule::Simpson => match j {
                    0 => 1.0 / 3.0,
                    _ if j == n - 2 => 1.0 / 3.0,
                    _ if j == n - 1 => 0.0,
                    _ if j % 2 == 1 => 4.0 / 3.0,
                    _ => 2.0 / 3.0,
                },
            } * eta;
            weighted.push(if w == 0.0 { Complex64::new(0.0, 0.0) } else { mat.zeta(j as f64 * eta)? * w });
        }
        mat.weighted = weighted;
        Ok(mat)
    }

    /// Transform of the damped call price with the atom removed.
    fn zeta(&self, v: f64) -> Result<Complex64> {
        let a = self.alpha;
        let shifted = Complex64::new(v, -(a + 1.0));
        let mut phi = log_spot_chf_complex(&self.law, self.m, shifted)?;
        if self.atom > 0.0 {
            phi -= self.atom * (Complex64::i() * shifted * self.m).exp();
        }
        let denom = Complex64::new(a * a + a - v * v, (2.0 * a + 1.0) * v);
        Ok(self.discount * phi / denom)
    }

    /// `E[S(t)]` discounted; equals `F(0,t) e^{-rt}` under the drift condition.
    fn forward(&self) -> Result<f64> {
        Ok(self.discount * (self.m + self.law.cgf_z(1.0)?).exp())
    }

    fn call(&self, strike: f64, planner: &mut FftPlanner<f64>) -> Result<f64> {
        if strike <= 0.0 {
            return Ok(self.forward()? - self.discount * strike);
        }
        let k = strike.ln();
        let n = self.weighted.len();
        let lambda = 2.0 * PI / (n as f64 * self.eta);
        let k_start = k - (n / 2) as f64 * lambda;
        let mut buf: Vec<Complex64> = self
            .weighted
            .iter()
            .enumerate()
            .map(|(j, z)| z * Complex64::from_polar(1.0, -(j as f64) * self.eta * k_start))
            .collect();
        planner.plan_fft_forward(n).process(&mut buf);
        let mut body = buf[n / 2];
        let upper = match self.rule {
            FftRule::Trapezoid => {
                // Euler-Maclaurin correction at the cut-off node
                let d = 1e-3 * self.eta;
                let v = (n - 1) as f64 * self.eta;
                let slope = (self.integrand(v + d, k)? - self.integrand(v - d, k)?) / (2.0 * d);
                body -= self.eta * self.eta / 12.0 * slope;
                body -= self.pole_aliasing(k)?;
                v
            }
            FftRule::Simpson => (n - 2) as f64 * self.eta,
        };
        let tol = TAIL_REL_TOL * PI * (self.alpha * k).exp() * self.forward()?.max(strike);
        let tail = self.tail(k, upper, tol)?;
        let damped = (-self.alpha * k).exp() / PI * (body + tail).re;
        let atom = self.atom * self.discount * (self.m.exp() - strike).max(0.0);
        Ok((damped + atom).max(0.0))
    }

    /// `∫_{start}^∞ e^{-ivk} ζ(v) dv` by Gauss-Legendre panels, closed with
    /// two integration-by-parts terms once the integrand oscillates fast enough.
    ///
    /// Locally `g(v) = e^{iθv} s(v)` with `s'/s = q/v` real, which gives
    /// `∫_v^∞ g ≈ g(v) (i/θ - q/(vθ²))` with remainder of order
    /// `|g| (q² + |q|) / (v²|θ|³)`.
    /// Trapezoidal error caused by the poles of `ζ`, halved for the half line.
    ///
    /// A simple pole at `iy` with residue `R` contributes
    /// `2πi R / (e^{2πy/η} - 1)` to `η Σ_n g(nη) - ∫ g`.
    fn pole_aliasing(&self, k: f64) -> Result<Complex64> {
        let a = self.alpha;
        let at = |w: Complex64| -> Result<Complex64> {
            let mut phi = log_spot_chf_complex(&self.law, self.m, w)?;
            if self.atom > 0.0 {
                phi -= self.atom * (Complex64::i() * w * self.m).exp();
            }
            Ok(phi)
        };
        let i = Complex64::i();
        let r_lower = -i * (a * k).exp() * self.discount * at(-i)?;
        let r_upper = i * ((a + 1.0) * k).exp() * self.discount * at(Complex64::new(0.0, 0.0))?;
        let alias = |r: Complex64, y: f64| 2.0 * PI * i * r / (2.0 * PI * y / self.eta).exp_m1();
        Ok(0.5 * (alias(r_lower, a) + alias(r_upper, a + 1.0)))
    }

    fn integrand(&self, v: f64, k: f64) -> Result<Complex64> {
        Ok(Complex64::from_polar(1.0, -v * k) * self.zeta(v)?)
    }

    fn tail(&self, k: f64, start: f64, tol: f64) -> Result<Complex64> {
        let g = |v: f64| self.integrand(v, k);
        let rule = GaussLegendre::n16();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut v = start;
        for _ in 0..TAIL_MAX_PANELS {
            let gv = g(v)?;
            let mag = gv.norm();
            // |g| decays at least like v^{-2}, so ∫_v^∞ |g| <= |g(v)| v
            if mag * v < tol {
                return Ok(acc);
            }
            // small enough that the phase change stays far below π
            let d = 1e-3;
            let ratio = g(v + d)? / g(v - d)?;
            let theta = ratio.arg() / (2.0 * d);
            let q = v * ratio.norm().ln() / (2.0 * d);
            let remainder = mag * (q * q + q.abs() + 1.0) / (v * v * theta.abs().powi(3));
            if theta.abs() * v > 10.0 && remainder < tol {
                return Ok(acc + gv * Complex64::new(-q / (v * theta * theta), 1.0 / theta));
            }
            // sixteen nodes resolve eight radians of phase to full precision
            let width = (0.5 * v).min(8.0 / (theta.abs() + 1e-300));
            let mut err = None;
            let panel = rule.integrate_complex(v, v + width, |x| match g(x) {
                Ok(val) => val,
                Err(e) => {
                    err.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            acc += panel;
            v += width;
        }
        log::warn!("Carr-Madan tail did not reach tolerance {tol:e} after {TAIL_MAX_PANELS} panels at v = {v}");
        Ok(acc)
    }
}

/// Price of one European call settled at `t`.
pub fn call_price(
    t: f64,
    strike: f64,
    rate: f64,
    curve: &ForwardCurve,
    params: &BctsParams,
    cfg: &FftConfig,
) -> Result<f64> {
    cfg.validate()?;
    let mut planner = FftPlanner::new();
    Maturity::new(t, rate, curve, params, cfg)?.call(strike, &mut planner)
}

/// Call prices at several strikes for one settlement date, sharing the
/// transform evaluation.
pub fn call_prices(
    t: f64,
    strikes: &[f64],
    rate: f64,
    curve: &ForwardCurve,
    params: &BctsParams,
    cfg: &FftConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut planner = FftPlanner::new();
    let mat = Maturity::new(t, rate, curve, params, cfg)?;
    strikes.iter().map(|&k| mat.call(k, &mut planner)).collect()
}

/// Prices a strip of calls; `per_date` holds `c_m(K, t_m)` and `value` their sum.
pub fn price_call_strip(
    spec: &CallStripSpec,
    curve: &ForwardCurve,
    params: &BctsParams,
    cfg: &FftConfig,
) -> Result<PricingResult> {
    spec.validate()?;
    cfg.validate()?;
    cfg.damping_for(params)?;
    let mut planner = FftPlanner::new();
    let per_date = spec
        .dates
        .iter()
        .map(|&t| Maturity::new(t, spec.rate, curve, params, cfg)?.call(spec.strike, &mut planner))
        .collect::<Result<Vec<f64>>>()?;
    let value = crate::stats::compensated_sum(per_date.iter().copied());
    Ok(PricingResult::deterministic(value, per_date))
}
