//! Exact skeleton simulation of OU-BCTS processes.
//!
//! Over a step of length `Δ` with `a = e^{-bΔ}` the recursion
//! `X(t_i) = a X(t_{i-1}) + Z` is exact once `Z` is drawn from its law:
//!
//! - infinite activity (`0 < α < 1`): `Z = X1 + X2` with
//!   `X1 ~ CTS(α, β/a, c(1 - a^α)/(αb))` and `X2` a compound Poisson sum with
//!   `N ~ Poisson(Λ_a)` jumps `J | V ~ Gamma(1 - α, βV)`, `V` drawn from the
//!   density proportional to `(v^α - 1)/v` on `[1, 1/a]`;
//! - finite activity (`α < 0`): `N ~ Poisson(λΔ)` jumps
//!   `J ~ Gamma(-α, β e^{bUΔ})` with `U` uniform.
//!
//! Two approximations are available for comparison: `Approx1` drops `X2`
//! and `Approx2` replaces `Z` by a CTS law with tempering `β/a` and
//! intensity `cΔ`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Exp1, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::model::{BctsParams, CtsParams, Regime, TimeGrid};
use crate::special::gamma;

/// Number of envelope segments for the remainder-mixture sampler.
const ENVELOPE_SEGMENTS: usize = 100;

/// Simulation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Exact,
    /// Keeps only the `X1` term of the exact decomposition.
    Approx1,
    /// Draws `Z` from `CTS(α, β/a, cΔ)` on each leg.
    Approx2,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Exact => "exact",
            Scheme::Approx1 => "approx1",
            Scheme::Approx2 => "approx2",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Scheme::Exact),
            "approx1" => Ok(Scheme::Approx1),
            "approx2" => Ok(Scheme::Approx2),
            other => Err(Error::param("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// Draw from the positive stable law with Laplace transform `exp(-λ^α)`
/// (Kanter's representation of the Chambers-Mallows-Stuck method).
fn unit_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = std::f64::consts::PI * rng.random::<f64>();
    let u = if u == 0.0 { f64::MIN_POSITIVE } else { u };
    let w: f64 = rng.sample(Exp1);
    let log_s = (alpha * u).sin().ln() - u.sin().ln() / alpha
        + (1.0 - alpha) / alpha * (((1.0 - alpha) * u).sin().ln() - w.ln());
    log_s.exp()
}

/// Exact sampler for the one-sided classical tempered stable law
/// `CTS(α, β, c)` with Lévy density `c e^{-βx} x^{-1-α}`, `0 < α < 1`.
///
/// Candidates come from the stable law with the same `α, c`, accepted with
/// probability `e^{-βS}`. The overall acceptance `exp(-cΓ(1-α)β^α/α)` can be
/// tiny, so the law is split into `n` independent pieces with intensity
/// `c/n`, which keeps each piece's acceptance above `e^{-1}`.
#[derive(Debug, Clone)]
pub struct CtsSampler {
    alpha: f64,
    beta: f64,
    scale: f64,
    pieces: u32,
    acceptance: f64,
}

impl CtsSampler {
    pub fn new(alpha: f64, beta: f64, c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", format!("CTS sampling needs 0 < alpha < 1, got {alpha}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::param("beta", format!("must be positive, got {beta}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::param("c", format!("must be positive, got {c}")));
        }
        let kappa = c * gamma(1.0 - alpha) / alpha;
        let load = kappa * beta.powf(alpha);
        let pieces = load.ceil().max(1.0);
        if pieces > u32::MAX as f64 {
            return Err(Error::numerical("cts sampler", format!("{pieces} pieces required")));
        }
        let acceptance = (-load / pieces).exp();
        if load > 1.0 {
            log::debug!("CTS(α={alpha}, β={beta}, c={c}): splitting into {pieces} pieces");
        }
        Ok(CtsSampler { alpha, beta, scale: (kappa / pieces).powf(1.0 / alpha), pieces: pieces as u32, acceptance })
    }

    /// Acceptance probability of a single rejection step.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance
    }

    pub fn pieces(&self) -> u32 {
        self.pieces
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut total = 0.0;
        for _ in 0..self.pieces {
            loop {
                let s = self.scale * unit_stable(self.alpha, rng);
                if rng.random::<f64>() <= (-self.beta * s).exp() {
                    total += s;
                    break;
                }
            }
        }
        total
    }
}

/// One draw from `CTS(α, β, c_eff)`.
pub fn sample_cts<R: Rng + ?Sized>(alpha: f64, beta: f64, c_eff: f64, rng: &mut R) -> Result<f64> {
    Ok(CtsSampler::new(alpha, beta, c_eff)?.sample(rng))
}

/// `(v^α - 1)/v`, accurate for `v` close to 1.
fn remainder_shape(alpha: f64, v: f64) -> f64 {
    (alpha * (v - 1.0).ln_1p()).exp_m1() / v
}

/// Sampler for the mixing variable `V` with density proportional to
/// `(v^α - 1)/v` on `[1, 1/a]`.
///
/// Rejection under a piecewise-constant envelope on equal segments; the
/// shape increases up to `(1-α)^{-1/α}` and decreases afterwards, so each
/// segment's maximum sits at the mode clamped into the segment.
#[derive(Debug, Clone)]
pub struct RemainderSampler {
    alpha: f64,
    lo: f64,
    width: f64,
    heights: Vec<f64>,
    pick: WeightedIndex<f64>,
}

impl RemainderSampler {
    pub fn new(alpha: f64, a: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", format!("needs 0 < alpha < 1, got {alpha}")));
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::param("a", format!("needs 0 < a < 1, got {a}")));
        }
        let hi = 1.0 / a;
        let width = (hi - 1.0) / ENVELOPE_SEGMENTS as f64;
        let mode = (1.0 - alpha).powf(-1.0 / alpha);
        let heights: Vec<f64> = (0..ENVELOPE_SEGMENTS)
            .map(|k| {
                let l = 1.0 + k as f64 * width;
                let r = if k + 1 == ENVELOPE_SEGMENTS { hi } else { l + width };
                remainder_shape(alpha, mode.clamp(l, r))
            })
            .collect();
        let pick = WeightedIndex::new(&heights).map_err(|e| Error::numerical("remainder sampler", e.to_string()))?;
        Ok(RemainderSampler { alpha, lo: 1.0, width, heights, pick })
    }

    /// Ratio of the target mass to the envelope mass.
    pub fn acceptance_rate(&self) -> f64 {
        let envelope: f64 = self.heights.iter().sum::<f64>() * self.width;
        let target = crate::special::quadrature::composite(
            crate::special::quadrature::GaussLegendre::n16(),
            self.lo,
            self.lo + self.width * ENVELOPE_SEGMENTS as f64,
            ENVELOPE_SEGMENTS,
            |v| remainder_shape(self.alpha, v),
        );
        target / envelope
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let k = self.pick.sample(rng);
            let v = self.lo + (k as f64 + rng.random::<f64>()) * self.width;
            if rng.random::<f64>() * self.heights[k] <= remainder_shape(self.alpha, v) {
                return v;
            }
        }
    }
}

/// One draw of the mixing variable `V` on `[1, 1/a]`.
pub fn sample_remainder_v<R: Rng + ?Sized>(alpha: f64, a: f64, rng: &mut R) -> Result<f64> {
    Ok(RemainderSampler::new(alpha, a)?.sample(rng))
}

/// Poisson intensity `Λ_a` of the remainder jumps over a step `dt`:
/// `c β^α Γ(1-α) / (b α² a^α) · (1 - a^α + a^α log a^α)`.
pub fn remainder_intensity(leg: &CtsParams, b: f64, dt: f64) -> f64 {
    let alpha = leg.alpha;
    let x = alpha * b * dt;
    // a^{-α}(1 - a^α + a^α log a^α) = e^x - 1 - x
    let bracket = if x < 1e-2 {
        let mut term = x;
        let mut sum = 0.0;
        for n in 2..20 {
            term *= x / n as f64;
            sum += term;
        }
        sum
    } else {
        x.exp_m1() - x
    };
    leg.c * leg.beta.powf(alpha) * gamma(1.0 - alpha) / (b * alpha * alpha) * bracket
}

fn poisson(lambda: f64) -> Result<Option<Poisson<f64>>> {
    if lambda == 0.0 {
        return Ok(None);
    }
    Poisson::new(lambda).map(Some).map_err(|e| Error::numerical("poisson", format!("rate {lambda}: {e}")))
}

fn unit_gamma(shape: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0).map_err(|e| Error::numerical("gamma", format!("shape {shape}: {e}")))
}

fn count<R: Rng + ?Sized>(dist: &Option<Poisson<f64>>, rng: &mut R) -> u64 {
    dist.as_ref().map_or(0, |d| d.sample(rng) as u64)
}

/// Precomputed law of one leg's contribution to `Z` over a fixed step.
#[derive(Debug, Clone)]
enum LegStep {
    Inactive,
    Infinite { x1: CtsSampler, remainder: Option<Remainder> },
    Finite { jumps: Option<Poisson<f64>>, sizes: Gamma<f64>, beta: f64, bdt: f64 },
}

#[derive(Debug, Clone)]
struct Remainder {
    jumps: Option<Poisson<f64>>,
    mixing: RemainderSampler,
    sizes: Gamma<f64>,
    beta: f64,
}

impl LegStep {
    fn new(leg: &CtsParams, b: f64, dt: f64, scheme: Scheme) -> Result<Self> {
        if !leg.is_active() {
            return Ok(LegStep::Inactive);
        }
        let a = (-b * dt).exp();
        match (leg.regime(), scheme) {
            (Regime::InfiniteActivity, Scheme::Approx2) => {
                Ok(LegStep::Infinite { x1: CtsSampler::new(leg.alpha, leg.beta / a, leg.c * dt)?, remainder: None })
            }
            (Regime::InfiniteActivity, _) => {
                let alpha = leg.alpha;
                // c(1 - a^α)/(αb) with 1 - a^α = -expm1(-αbΔ)
                let c1 = leg.c * -(-alpha * b * dt).exp_m1() / (alpha * b);
                let x1 = CtsSampler::new(alpha, leg.beta / a, c1)?;
                let remainder = if scheme == Scheme::Exact {
                    Some(Remainder {
                        jumps: poisson(remainder_intensity(leg, b, dt))?,
                        mixing: RemainderSampler::new(alpha, a)?,
                        sizes: unit_gamma(1.0 - alpha)?,
                        beta: leg.beta,
                    })
                } else {
                    None
                };
                Ok(LegStep::Infinite { x1, remainder })
            }
            (Regime::FiniteActivity, Scheme::Exact) => Ok(LegStep::Finite {
                jumps: poisson(leg.jump_intensity()? * dt)?,
                sizes: unit_gamma(-leg.alpha)?,
                beta: leg.beta,
                bdt: b * dt,
            }),
            (Regime::FiniteActivity, _) => {
                Err(Error::param("scheme", format!("{scheme} is only defined for infinite-activity legs")))
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LegStep::Inactive => 0.0,
            LegStep::Infinite { x1, remainder } => {
                let mut z = x1.sample(rng);
                if let Some(rem) = remainder {
                    for _ in 0..count(&rem.jumps, rng) {
                        let v = rem.mixing.sample(rng);
                        z += rem.sizes.sample(rng) / (rem.beta * v);
                    }
                }
                z
            }
            LegStep::Finite { jumps, sizes, beta, bdt } => {
                let mut z = 0.0;
                for _ in 0..count(jumps, rng) {
                    let u: f64 = rng.random();
                    z += sizes.sample(rng) / (beta * (bdt * u).exp());
                }
                z
            }
        }
    }
}

/// Law of `Z` over one step of fixed length for a bilateral model.
#[derive(Debug, Clone)]
pub struct StepKernel {
    dt: f64,
    a: f64,
    pos: LegStep,
    neg: LegStep,
}

impl StepKernel {
    pub fn new(params: &BctsParams, dt: f64, scheme: Scheme) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        Ok(StepKernel {
            dt,
            a: (-params.b * dt).exp(),
            pos: LegStep::new(&params.pos, params.b, dt, scheme)?,
            neg: LegStep::new(&params.neg, params.b, dt, scheme)?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.pos.sample(rng) - self.neg.sample(rng)
    }

    /// `a x + Z`.
    pub fn step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        self.a * x + self.sample_z(rng)
    }
}

fn single_leg(leg: &CtsParams, b: f64) -> Result<BctsParams> {
    BctsParams::one_sided(*leg, b)
}

/// One draw of `Z(Δ)` for an infinite-activity leg.
pub fn sample_z_infinite<R: Rng + ?Sized>(leg: &CtsParams, b: f64, dt: f64, rng: &mut R) -> Result<f64> {
    if leg.regime() != Regime::InfiniteActivity {
        return Err(Error::param("alpha", "expected 0 < alpha < 1"));
    }
    Ok(StepKernel::new(&single_leg(leg, b)?, dt, Scheme::Exact)?.sample_z(rng))
}

/// One draw of `Z(Δ)` for a finite-activity leg.
pub fn sample_z_finite<R: Rng + ?Sized>(leg: &CtsParams, b: f64, dt: f64, rng: &mut R) -> Result<f64> {
    if leg.regime() != Regime::FiniteActivity {
        return Err(Error::param("alpha", "expected alpha < 0"));
    }
    Ok(StepKernel::new(&single_leg(leg, b)?, dt, Scheme::Exact)?.sample_z(rng))
}

/// Simulated values of `X` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSkeleton {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub scheme: Scheme,
}

/// Path generator with step kernels precomputed for every distinct step
/// length of the grid.
#[derive(Debug, Clone)]
pub struct SkeletonSimulator {
    grid: TimeGrid,
    scheme: Scheme,
    kernels: Vec<StepKernel>,
    step_kernel: Vec<usize>,
}

impl SkeletonSimulator {
    pub fn new(params: &BctsParams, grid: TimeGrid, scheme: Scheme) -> Result<Self> {
        params.validate()?;
        let mut kernels: Vec<StepKernel> = Vec::new();
        let mut step_kernel = Vec::with_capacity(grid.len().saturating_sub(1));
        for dt in grid.steps() {
            let found = kernels.iter().position(|k| (k.dt - dt).abs() <= 1e-13 * dt);
            let idx = match found {
                Some(i) => i,
                None => {
                    kernels.push(StepKernel::new(params, dt, scheme)?);
                    kernels.len() - 1
                }
            };
            step_kernel.push(idx);
        }
        Ok(SkeletonSimulator { grid, scheme, kernels, step_kernel })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Writes `X(t_0) = x0, X(t_1), …` into `out`, which must have the grid's length.
    pub fn fill<R: Rng + ?Sized>(&self, x0: f64, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.grid.len(), "output buffer does not match the grid");
        out[0] = x0;
        for (i, &k) in self.step_kernel.iter().enumerate() {
            out[i + 1] = self.kernels[k].step(out[i], rng);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, x0: f64, rng: &mut R) -> PathSkeleton {
        let mut values = vec![0.0; self.grid.len()];
        self.fill(x0, rng, &mut values);
        PathSkeleton { grid: self.grid.clone(), values, scheme: self.scheme }
    }
}

/// Simulates one skeleton of `X` on `grid` started at `x0`.
pub fn simulate_skeleton<R: Rng + ?Sized>(
    params: &BctsParams,
    grid: &TimeGrid,
    x0: f64,
    scheme: Scheme,
    rng: &mut R,
) -> Result<PathSkeleton> {
    Ok(SkeletonSimulator::new(params, grid.clone(), scheme)?.sample(x0, rng))
}

/// Writes paths as CSV: a header `path,<t_0>,<t_1>,…` then one row per path.
pub fn write_paths_csv<W: Write>(out: W, grid: &TimeGrid, paths: &[Vec<f64>]) -> Result<()> {
    let io = |e: csv::Error| Error::Input(format!("writing paths: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["path".to_string()];
    header.extend(grid.times().iter().map(|t| t.to_string()));
    w.write_record(&header).map_err(io)?;
    for (i, p) in paths.iter().enumerate() {
        if p.len() != grid.len() {
            return Err(Error::Input(format!("path {i} has {} values for {} grid points", p.len(), grid.len())));
        }
        let mut row = vec![i.to_string()];
        row.extend(p.iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Input(format!("writing paths: {e}")))?;
    Ok(())
}
