//! Swing options by least-squares Monte Carlo on rights-layered value functions.
//!
//! The holder owns `N` rights, each allowing one unit at strike `K` on one
//! exercise date. With `V(n, s, t_m)` the value with `n` rights left,
//!
//! ```text
//! V(n, s, t_m) = max{ C_n(s, t_m), (s - K)^+ + C_{n-1}(s, t_m) }
//! C_n(s, t_m)  = E[V(n, S(t_{m+1}), t_{m+1}) | S(t_m) = s]
//! ```
//!
//! with `V(n, s, T) = (s - K)^+` for `n >= 1` and `V(0, ·, ·) = 0`. Every
//! continuation value `C_n` is regressed on a polynomial in the spot across
//! all paths (not only in-the-money ones, since decisions are needed in every
//! state). Pathwise realized values, not fitted ones, are propagated backward.
//! The exercise policy is learned on one path set and the price is reported on
//! an independent one, which removes the upward bias of in-sample estimates.

use crate::error::{Error, Result};
use crate::model::{BctsParams, TimeGrid, DAYS_PER_YEAR};
use crate::pricing::{McConfig, PricingResult};
use crate::rng::par_map_streams;
use crate::simulation::{Scheme, SkeletonSimulator};
use crate::stats::{mean_and_se, NeumaierSum};
use crate::transition::{ForwardCurve, TransitionLaw};

/// Exercise dates, strike and number of rights of a swing contract where
/// all rights must be used (`min = max = N`).
#[derive(Debug, Clone, PartialEq)]
pub struct SwingSpec {
    pub dates: Vec<f64>,
    pub strike: f64,
    pub rights: usize,
    /// Quantity delivered per exercise.
    pub volume: f64,
    pub rate: f64,
}

impl SwingSpec {
    /// Exercise on every day `1..=days`.
    pub fn daily(days: usize, strike: f64, rights: usize) -> Result<Self> {
        let dates = (1..=days).map(|d| d as f64 / DAYS_PER_YEAR).collect();
        let spec = SwingSpec { dates, strike, rights, volume: 1.0, rate: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dates.is_empty() {
            return Err(Error::param("dates", "at least one exercise date is required"));
        }
        if !(self.dates[0] > 0.0) || self.dates.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("dates", "exercise dates must be positive and increasing"));
        }
        if self.rights == 0 || self.rights > self.dates.len() {
            return Err(Error::param(
                "rights",
                format!("need 1 <= rights <= {} exercise dates, got {}", self.dates.len(), self.rights),
            ));
        }
        if !(self.strike >= 0.0) || !self.strike.is_finite() {
            return Err(Error::param("strike", format!("must be >= 0, got {}", self.strike)));
        }
        if !(self.volume > 0.0) || !self.volume.is_finite() {
            return Err(Error::param("volume", format!("must be positive, got {}", self.volume)));
        }
        if !self.rate.is_finite() {
            return Err(Error::param("rate", "must be finite"));
        }
        Ok(())
    }

    fn discounted_payoff(&self, m: usize, spot: f64) -> f64 {
        (-self.rate * self.dates[m]).exp() * self.volume * (spot - self.strike).max(0.0)
    }
}

/// Polynomial regression basis `1, z, …, z^B` in the standardized spot
/// `z = (S - mean)/sd`, which spans the same space as `1, S, …, S^B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegressionBasis {
    pub degree: usize,
}

impl Default for RegressionBasis {
    fn default() -> Self {
        RegressionBasis { degree: 3 }
    }
}

impl RegressionBasis {
    pub fn new(degree: usize) -> Result<Self> {
        let b = RegressionBasis { degree };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 || self.degree > 8 {
            return Err(Error::param("degree", format!("must be in 1..=8, got {}", self.degree)));
        }
        Ok(())
    }

    /// Fewest training paths accepted for this basis.
    pub fn min_paths(&self) -> usize {
        10 * (self.degree + 1)
    }
}

/// Spot prices on the exercise dates, stored date-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotPaths {
    n_paths: usize,
    n_dates: usize,
    values: Vec<f64>,
}

impl SpotPaths {
    /// Builds from one row of spot prices per path.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_dates = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n_dates == 0 {
            return Err(Error::Input("spot path matrix is empty".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n_dates) {
            return Err(Error::Input(format!("path {i} has {} dates, expected {n_dates}", rows[i].len())));
        }
        let mut values = vec![0.0; rows.len() * n_dates];
        for (p, row) in rows.iter().enumerate() {
            for (m, s) in row.iter().enumerate() {
                values[m * rows.len() + p] = *s;
            }
        }
        Ok(SpotPaths { n_paths: rows.len(), n_dates, values })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_dates(&self) -> usize {
        self.n_dates
    }

    /// Spot prices of all paths on date `m`.
    pub fn date(&self, m: usize) -> &[f64] {
        &self.values[m * self.n_paths..(m + 1) * self.n_paths]
    }

    pub fn path(&self, p: usize) -> Vec<f64> {
        (0..self.n_dates).map(|m| self.values[m * self.n_paths + p]).collect()
    }

    /// Same paths in the order given by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n_paths];
        if perm.len() != self.n_paths
            || perm.iter().any(|&i| i >= self.n_paths || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::Input("not a permutation of the path indices".into()));
        }
        let rows: Vec<Vec<f64>> = perm.iter().map(|&p| self.path(p)).collect();
        Self::from_rows(&rows)
    }
}

/// Risk-neutral spot paths `S(t_m) = F(0,t_m) e^{h(t_m) + X(t_m)}`, `X(0) = 0`,
/// simulated exactly on the exercise dates.
pub fn simulate_spot_paths(
    dates: &[f64],
    curve: &ForwardCurve,
    params: &BctsParams,
    mc: &McConfig,
) -> Result<SpotPaths> {
    let sampler = SpotSampler::new(dates, curve, params)?;
    let rows = par_map_streams(mc.seed, mc.first_stream, mc.n_paths, |rng| sampler.path(rng));
    SpotPaths::from_rows(&rows)
}

struct SpotSampler {
    sim: SkeletonSimulator,
    scale: Vec<f64>,
}

impl SpotSampler {
    fn new(dates: &[f64], curve: &ForwardCurve, params: &BctsParams) -> Result<Self> {
        let mut times = vec![0.0];
        times.extend_from_slice(dates);
        let sim = SkeletonSimulator::new(params, TimeGrid::new(times)?, Scheme::Exact)?;
        let scale = dates
            .iter()
            .map(|&t| Ok(curve.value(t) * TransitionLaw::new(*params, t)?.risk_neutral_h()?.exp()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(SpotSampler { sim, scale })
    }

    fn path(&self, rng: &mut crate::rng::RngStream) -> Vec<f64> {
        let mut x = vec![0.0; self.scale.len() + 1];
        self.sim.fill(0.0, rng, &mut x);
        self.scale.iter().zip(&x[1..]).map(|(s, x)| s * x.exp()).collect()
    }
}

/// Regression fit of all continuation values on one date.
#[derive(Debug, Clone, PartialEq)]
struct DateFit {
    mean: f64,
    sd: f64,
    /// Degree actually used after any rank fallback.
    degree: usize,
    /// `coef[(n - 1) * (degree + 1) + j]` for rights `n = 1..=N`.
    coef: Vec<f64>,
}

impl DateFit {
    fn continuation(&self, n: usize, spot: f64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let z = if self.sd > 0.0 { (spot - self.mean) / self.sd } else { 0.0 };
        let c = &self.coef[(n - 1) * (self.degree + 1)..n * (self.degree + 1)];
        c.iter().rev().fold(0.0, |acc, a| acc * z + a)
    }
}

/// Learned exercise rule: continuation-value regressions for every date but
/// the last and every number of remaining rights.
#[derive(Debug, Clone, PartialEq)]
pub struct SwingPolicy {
    rights: usize,
    fits: Vec<DateFit>,
    /// In-sample value on the training paths.
    pub in_sample: f64,
}

impl SwingPolicy {
    /// Regression degree used on each date except the last.
    pub fn degrees(&self) -> Vec<usize> {
        self.fits.iter().map(|f| f.degree).collect()
    }

    /// Whether to use a right on date `m` with `n` rights left and spot `s`.
    fn exercise(&self, spec: &SwingSpec, m: usize, n: usize, spot: f64) -> bool {
        let remaining_dates = spec.dates.len() - m;
        if n >= remaining_dates {
            return true;
        }
        let pay = spec.discounted_payoff(m, spot);
        let fit = &self.fits[m];
        pay > 0.0 && pay + fit.continuation(n - 1, spot) >= fit.continuation(n, spot)
    }

    /// Discounted cash flow of one spot path under this policy.
    pub fn cash_flow(&self, spec: &SwingSpec, spots: &[f64]) -> f64 {
        let mut n = self.rights;
        let mut total = 0.0;
        for (m, &s) in spots.iter().enumerate() {
            if n == 0 {
                break;
            }
            if self.exercise(spec, m, n, s) {
                total += spec.discounted_payoff(m, s);
                n -= 1;
            }
        }
        total
    }
}

/// Cholesky solve of the normal equations, retrying with a smaller basis when
/// the Gram matrix is numerically singular. Returns the degree used.
fn fit_degree(gram: &[f64], dim: usize, max_degree: usize) -> (usize, Vec<f64>) {
    for degree in (0..=max_degree).rev() {
        let d = degree + 1;
        let mut l = vec![0.0; d * d];
        let mut ok = true;
        'outer: for i in 0..d {
            for j in 0..=i {
                let mut s = gram[i * dim + j];
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if s <= 1e-10 * gram[i * dim + i].max(f64::MIN_POSITIVE) {
                        ok = false;
                        break 'outer;
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        if ok {
            return (degree, l);
        }
    }
    (0, vec![gram[0].sqrt()])
}

fn cholesky_solve(l: &[f64], d: usize, rhs: &mut [f64]) {
    for i in 0..d {
        let s = rhs[i] - (0..i).map(|k| l[i * d + k] * rhs[k]).sum::<f64>();
        rhs[i] = s / l[i * d + i];
    }
    for i in (0..d).rev() {
        let s = rhs[i] - (i + 1..d).map(|k| l[k * d + i] * rhs[k]).sum::<f64>();
        rhs[i] = s / l[i * d + i];
    }
}

/// Backward induction on the training paths.
pub fn fit_swing_policy(spec: &SwingSpec, paths: &SpotPaths, basis: RegressionBasis) -> Result<SwingPolicy> {
    spec.validate()?;
    basis.validate()?;
    if paths.n_dates() != spec.dates.len() {
        return Err(Error::Input(format!(
            "paths have {} dates, the contract has {}",
            paths.n_dates(),
            spec.dates.len()
        )));
    }
    let np = paths.n_paths();
    if np < basis.min_paths() {
        return Err(Error::param(
            "n_paths",
            format!("need at least {} paths for degree {}, got {np}", basis.min_paths(), basis.degree),
        ));
    }
    let last = spec.dates.len() - 1;
    let rights = spec.rights;
    // value-to-go per path for n = 0..=N rights, discounted to time zero
    let mut value = vec![0.0; (rights + 1) * np];
    for (p, &s) in paths.date(last).iter().enumerate() {
        let pay = spec.discounted_payoff(last, s);
        for n in 1..=rights {
            value[n * np + p] = pay;
        }
    }
    let dim = basis.degree + 1;
    let mut fits = Vec::with_capacity(last);
    let mut feats = vec![0.0; dim * np];
    for m in (0..last).rev() {
        let spots = paths.date(m);
        let mean = spots.iter().sum::<f64>() / np as f64;
        let sd = (spots.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / np as f64).sqrt();
        for (p, &s) in spots.iter().enumerate() {
            let z = if sd > 0.0 { (s - mean) / sd } else { 0.0 };
            let mut pow = 1.0;
            for j in 0..dim {
                feats[p * dim + j] = pow;
                pow *= z;
            }
        }
        let mut gram = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut acc = NeumaierSum::default();
                for p in 0..np {
                    acc.add(feats[p * dim + i] * feats[p * dim + j]);
                }
                gram[i * dim + j] = acc.value();
                gram[j * dim + i] = acc.value();
            }
        }
        let (degree, chol) = fit_degree(&gram, dim, basis.degree);
        if degree < basis.degree {
            log::warn!("swing regression on date {m}: design rank deficient, degree lowered to {degree}");
        }
        let d = degree + 1;
        // rights beyond the remaining dates are always exercised, and fewer
        // than N - m rights cannot be left on date m
        let remaining = spec.dates.len() - m;
        let reachable = rights.saturating_sub(m).max(1);
        // decisions at n need C_{n-1} as well
        let fitted = reachable.saturating_sub(1).max(1);
        let mut coef = vec![0.0; rights * d];
        for n in fitted..=rights.min(remaining - 1) {
            let mut rhs = vec![0.0; d];
            for (row, v) in feats.chunks_exact(dim).zip(&value[n * np..(n + 1) * np]) {
                for (r, f) in rhs.iter_mut().zip(row) {
                    *r += f * v;
                }
            }
            cholesky_solve(&chol, d, &mut rhs);
            coef[(n - 1) * d..n * d].copy_from_slice(&rhs);
        }
        let fit = DateFit { mean, sd, degree, coef };
        let pay: Vec<f64> = spots.iter().map(|&s| spec.discounted_payoff(m, s)).collect();
        let top = rights.min(remaining - 1);
        // cont[(n - 1) * np + p] = C_n(S_p) for the rights that are not forced
        let mut cont = vec![0.0; top * np];
        for n in fitted..=top {
            let c = &fit.coef[(n - 1) * d..n * d];
            for (p, out) in cont[(n - 1) * np..n * np].iter_mut().enumerate() {
                let z = feats[p * dim + 1];
                *out = c.iter().rev().fold(0.0, |acc, a| acc * z + a);
            }
        }
        // descending n so that value[n - 1] still holds next-date values
        for n in (reachable..=rights).rev() {
            let (done, rest) = value.split_at_mut(n * np);
            let below = &done[(n - 1) * np..];
            let here = &mut rest[..np];
            for p in 0..np {
                let exercise = n > top || {
                    let c_lower = if n == 1 { 0.0 } else { cont[(n - 2) * np + p] };
                    pay[p] > 0.0 && pay[p] + c_lower >= cont[(n - 1) * np + p]
                };
                if exercise {
                    here[p] = pay[p] + below[p];
                }
            }
        }
        fits.push(fit);
    }
    fits.reverse();
    let in_sample = value[rights * np..].iter().sum::<f64>() / np as f64;
    Ok(SwingPolicy { rights, fits, in_sample })
}

/// Values a fitted policy on a path set.
pub fn evaluate_swing_policy(spec: &SwingSpec, policy: &SwingPolicy, paths: &SpotPaths) -> Result<PricingResult> {
    if paths.n_dates() != spec.dates.len() || policy.rights != spec.rights {
        return Err(Error::Input("policy, paths and contract do not match".into()));
    }
    let flows: Vec<f64> = (0..paths.n_paths()).map(|p| policy.cash_flow(spec, &paths.path(p))).collect();
    let (value, std_error) = mean_and_se(&flows)?;
    Ok(PricingResult { value, std_error, n_paths: flows.len(), scheme: Some(Scheme::Exact), per_date: Vec::new() })
}

/// Two-pass LSMC price: the policy is fitted on streams
/// `first_stream..first_stream + n` and valued on the next `n` streams.
pub fn price_swing(
    spec: &SwingSpec,
    curve: &ForwardCurve,
    params: &BctsParams,
    basis: RegressionBasis,
    mc: &McConfig,
) -> Result<PricingResult> {
    spec.validate()?;
    mc.validate()?;
    let training = simulate_spot_paths(&spec.dates, curve, params, mc)?;
    let policy = fit_swing_policy(spec, &training, basis)?;
    drop(training);
    let sampler = SpotSampler::new(&spec.dates, curve, params)?;
    let eval_first = mc.first_stream + mc.n_paths as u64;
    let flows = par_map_streams(mc.seed, eval_first, mc.n_paths, |rng| policy.cash_flow(spec, &sampler.path(rng)));
    let (value, std_error) = mean_and_se(&flows)?;
    Ok(PricingResult { value, std_error, n_paths: mc.n_paths, scheme: Some(Scheme::Exact), per_date: Vec::new() })
}
