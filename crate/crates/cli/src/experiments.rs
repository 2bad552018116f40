//! Experiment plans: everything is built and validated from the configuration
//! first, then run.

use tsou::asian::{price_asian, AsianSpec};
use tsou::fft::{call_prices, price_call_strip, CallStripSpec, FftConfig};
use tsou::model::{err_pct, ou_cumulants};
use tsou::noa::{gamma1, DeliveryPeriod, NoaSimulator, NoaSpec, StepFunction};
use tsou::rng::par_map_streams;
use tsou::simulation::SkeletonSimulator;
use tsou::stats::{cumulants_with_se, mean_and_se, NeumaierSum};
use tsou::swing::{price_swing, simulate_spot_paths, RegressionBasis, SwingSpec};
use tsou::{BctsParams, ForwardCurve, McConfig, Scheme, TimeGrid, TransitionLaw, DAYS_PER_YEAR};

use crate::config::ExperimentConfig;
use crate::output::{Cell, Table};
use crate::plot::plot_data;
use crate::{CliError, Experiment};

/// Stream ids reserved for one table row; rows never share random numbers.
const STREAM_BLOCK: u64 = 1 << 32;

/// Paths simulated at once by the chunked futures experiment.
const NOA_CHUNK: usize = 20_000;

/// Tags a library error with the module it came from. Parameter errors are
/// configuration problems even when detected late.
pub(crate) fn tagged(module: &'static str) -> impl Fn(tsou::Error) -> CliError {
    move |e| match e {
        tsou::Error::Parameter { .. } => CliError::Config(format!("{module}: {e}")),
        other => CliError::Numerical { module, source: other },
    }
}

fn mc(n_paths: usize, seed: u64, row: usize) -> McConfig {
    McConfig { n_paths, seed, first_stream: row as u64 * STREAM_BLOCK }
}

fn daily_dates(first: usize, count: usize) -> Vec<f64> {
    (first..first + count).map(|d| d as f64 / DAYS_PER_YEAR).collect()
}

/// Fails early when the model has no risk-neutral drift up to `t`.
fn check_drift(params: &BctsParams, t: f64) -> Result<(), CliError> {
    TransitionLaw::new(*params, t)
        .and_then(|law| law.risk_neutral_h())
        .map(|_| ())
        .map_err(|e| CliError::Config(format!("[model]: {e}")))
}

fn cfg_err(section: &'static str) -> impl Fn(tsou::Error) -> CliError {
    move |e| CliError::Config(format!("[{section}]: {e}"))
}

/// Validated work for one experiment.
pub enum Plan {
    Cumulants(CumulantsPlan),
    CallStrip(CallStripPlan),
    Asian(AsianPlan),
    Swing(SwingPlan),
    Noa(NoaPlan),
    Trajectories(TrajectoriesPlan),
    PlotData { input: String, output: String },
}

pub struct CumulantsPlan {
    runs: Vec<(f64, BctsParams)>,
    dt: f64,
    x0: f64,
    batches: usize,
    n_paths: usize,
    seed: u64,
}

pub struct CallStripPlan {
    params: BctsParams,
    curve: ForwardCurve,
    spec: CallStripSpec,
    days: Vec<usize>,
    fft: FftConfig,
    mc_paths: usize,
    sweep: Option<(usize, Vec<f64>)>,
    seed: u64,
}

pub struct AsianPlan {
    rows: Vec<(f64, BctsParams, Scheme, usize)>,
    curve: ForwardCurve,
    spec: AsianSpec,
    seed: u64,
}

pub struct SwingPlan {
    rows: Vec<(f64, BctsParams, usize)>,
    curve: ForwardCurve,
    spec: SwingSpec,
    basis: RegressionBasis,
    seed: u64,
}

pub struct NoaPlan {
    spec: NoaSpec,
    leg1: BctsParams,
    leg2: BctsParams,
    n_paths: usize,
    dump: usize,
    seed: u64,
}

pub struct TrajectoriesPlan {
    runs: Vec<(f64, BctsParams)>,
    grid: TimeGrid,
    scheme: Scheme,
    x0: f64,
    seed: u64,
}

impl Plan {
    pub fn build(kind: Experiment, cfg: &ExperimentConfig) -> Result<Plan, CliError> {
        let seed = cfg.seed;
        match kind {
            Experiment::Cumulants => {
                let c = cfg.section(&cfg.cumulants, "cumulants")?;
                let model = cfg.model()?;
                cfg.check_paths(cfg.n_paths, "n_paths")?;
                if !(c.dt > 0.0) {
                    return Err(CliError::Config(format!("[cumulants]: `dt` must be positive, got {}", c.dt)));
                }
                if c.batches < 2 || cfg.n_paths < 4 * c.batches {
                    return Err(CliError::Config(format!(
                        "[cumulants]: `batches` = {} needs 2 <= batches <= n_paths/4",
                        c.batches
                    )));
                }
                let runs = match &c.alphas {
                    Some(alphas) => alphas.iter().map(|&a| Ok((a, model.params_with_y(Some(a))?))).collect::<Result<
                        Vec<_>,
                        CliError,
                    >>(
                    )?,
                    None => {
                        let p = model.params()?;
                        vec![(p.pos.alpha, p)]
                    }
                };
                Ok(Plan::Cumulants(CumulantsPlan {
                    runs,
                    dt: c.dt,
                    x0: c.x0,
                    batches: c.batches,
                    n_paths: cfg.n_paths,
                    seed,
                }))
            }
            Experiment::CallStrip => {
                let c = cfg.section(&cfg.call_strip, "call_strip")?;
                let params = cfg.model()?.params()?;
                let curve = cfg.curve()?;
                if c.days == 0 {
                    return Err(CliError::Config("[call_strip]: `days` must be at least 1".into()));
                }
                let mut spec = CallStripSpec::new(daily_dates(1, c.days), c.strike).map_err(cfg_err("call_strip"))?;
                spec.rate = c.rate;
                spec.validate().map_err(cfg_err("call_strip"))?;
                let fft = c.fft.config()?;
                fft.damping_for(&params).map_err(cfg_err("call_strip.fft"))?;
                check_drift(&params, c.days as f64 / DAYS_PER_YEAR)?;
                let mc_paths = c.mc_paths.unwrap_or(cfg.n_paths);
                if mc_paths != 0 {
                    cfg.check_paths(mc_paths, "call_strip.mc_paths")?;
                }
                let sweep = match &c.sweep {
                    Some(s) => {
                        if s.day == 0 || s.count == 0 || !(s.k_max >= s.k_min) || !(s.k_min >= 0.0) {
                            return Err(CliError::Config(
                                "[call_strip.sweep]: need day >= 1, count >= 1 and 0 <= k_min <= k_max".into(),
                            ));
                        }
                        check_drift(&params, s.day as f64 / DAYS_PER_YEAR)?;
                        Some((s.day, s.strikes()))
                    }
                    None => None,
                };
                Ok(Plan::CallStrip(CallStripPlan {
                    params,
                    curve,
                    spec,
                    days: (1..=c.days).collect(),
                    fft,
                    mc_paths,
                    sweep,
                    seed,
                }))
            }
            Experiment::Asian => {
                let c = cfg.section(&cfg.asian, "asian")?;
                let model = cfg.model()?;
                let curve = cfg.curve()?;
                let mut spec = AsianSpec::daily(c.first_day, c.count, c.strike).map_err(cfg_err("asian"))?;
                spec.rate = c.rate;
                spec.first_step_substeps = c.substeps;
                spec.validate().map_err(cfg_err("asian"))?;
                let schemes = c.schemes()?;
                let paths = c.paths.clone().unwrap_or_else(|| vec![cfg.n_paths]);
                for &n in &paths {
                    cfg.check_paths(n, "asian.paths")?;
                }
                let ys: Vec<Option<f64>> = match &c.ys {
                    Some(ys) => ys.iter().map(|&y| Some(y)).collect(),
                    None => vec![None],
                };
                let t_last = spec.dates[spec.dates.len() - 1];
                let mut rows = Vec::new();
                for y in ys {
                    let params = model.params_with_y(y)?;
                    check_drift(&params, t_last)?;
                    for &scheme in &schemes {
                        for &n in &paths {
                            rows.push((params.pos.alpha, params, scheme, n));
                        }
                    }
                }
                Ok(Plan::Asian(AsianPlan { rows, curve, spec, seed }))
            }
            Experiment::Swing => {
                let c = cfg.section(&cfg.swing, "swing")?;
                let model = cfg.model()?;
                let curve = cfg.curve()?;
                let mut spec = SwingSpec::daily(c.days, c.strike, c.rights).map_err(cfg_err("swing"))?;
                spec.rate = c.rate;
                spec.volume = c.volume;
                spec.validate().map_err(cfg_err("swing"))?;
                let basis = RegressionBasis::new(c.degree).map_err(cfg_err("swing"))?;
                let paths = c.paths.clone().unwrap_or_else(|| vec![cfg.n_paths]);
                for &n in &paths {
                    if n < basis.min_paths() {
                        return Err(CliError::Config(format!(
                            "[swing]: {n} paths are too few for degree {}, need at least {}",
                            c.degree,
                            basis.min_paths()
                        )));
                    }
                }
                let ys: Vec<Option<f64>> = match &c.ys {
                    Some(ys) => ys.iter().map(|&y| Some(y)).collect(),
                    None => vec![None],
                };
                let mut rows = Vec::new();
                for y in ys {
                    let params = model.params_with_y(y)?;
                    check_drift(&params, spec.dates[spec.dates.len() - 1])?;
                    for &n in &paths {
                        rows.push((params.pos.alpha, params, n));
                    }
                }
                Ok(Plan::Swing(SwingPlan { rows, curve, spec, basis, seed }))
            }
            Experiment::NoaSim => {
                let c = cfg.section(&cfg.noa, "noa")?;
                let leg1 = cfg.model()?.params()?;
                let leg2 = c.second.params(leg1.b)?;
                cfg.check_paths(cfg.n_paths, "n_paths")?;
                let period = DeliveryPeriod::new(c.t1, c.t2).map_err(cfg_err("noa"))?;
                let gamma =
                    StepFunction::new(c.gamma_breaks.clone(), c.gamma_values.clone()).map_err(cfg_err("noa"))?;
                let spec = NoaSpec { period, grid: TimeGrid::daily(c.days), f0: c.f0, gamma1_coeff: c.gamma1, gamma };
                spec.validate().map_err(cfg_err("noa"))?;
                Ok(Plan::Noa(NoaPlan { spec, leg1, leg2, n_paths: cfg.n_paths, dump: c.dump_paths, seed }))
            }
            Experiment::Trajectories => {
                let c = cfg.section(&cfg.trajectories, "trajectories")?;
                let model = cfg.model()?;
                if c.days == 0 {
                    return Err(CliError::Config("[trajectories]: `days` must be at least 1".into()));
                }
                let scheme: Scheme = c.scheme.parse().map_err(cfg_err("trajectories"))?;
                let runs = match &c.ys {
                    Some(ys) => ys
                        .iter()
                        .map(|&y| Ok((y, model.params_with_y(Some(y))?)))
                        .collect::<Result<Vec<_>, CliError>>()?,
                    None => {
                        let p = model.params()?;
                        vec![(p.pos.alpha, p)]
                    }
                };
                Ok(Plan::Trajectories(TrajectoriesPlan { runs, grid: TimeGrid::daily(c.days), scheme, x0: c.x0, seed }))
            }
            Experiment::PlotData => {
                let c = cfg.section(&cfg.plot_data, "plot_data")?;
                Ok(Plan::PlotData { input: c.input.clone(), output: c.output.clone() })
            }
        }
    }

    /// Runs the plan, returning `(file name, table)` pairs.
    pub fn run(&self) -> Result<Vec<(String, Table)>, CliError> {
        match self {
            Plan::Cumulants(p) => p.run(),
            Plan::CallStrip(p) => p.run(),
            Plan::Asian(p) => p.run(),
            Plan::Swing(p) => p.run(),
            Plan::Noa(p) => p.run(),
            Plan::Trajectories(p) => p.run(),
            Plan::PlotData { input, output } => Ok(vec![(output.clone(), plot_data(input)?)]),
        }
    }
}

impl CumulantsPlan {
    fn run(&self) -> Result<Vec<(String, Table)>, CliError> {
        let mut table = Table::new(["alpha", "k", "analytic", "mc", "mc_se", "err_pct"]);
        for (row, (alpha, params)) in self.runs.iter().enumerate() {
            let grid = TimeGrid::new(vec![0.0, self.dt]).map_err(tagged("model-core"))?;
            let sim = SkeletonSimulator::new(params, grid, Scheme::Exact).map_err(tagged("exact-simulation"))?;
            let x0 = self.x0;
            let xs = par_map_streams(self.seed, row as u64 * STREAM_BLOCK, self.n_paths, |rng| {
                let mut v = [0.0; 2];
                sim.fill(x0, rng, &mut v);
                v[1]
            });
            let (k, se) = cumulants_with_se(&xs, self.batches).map_err(tagged("model-core"))?;
            let exact = ou_cumulants(params, x0, self.dt).map_err(tagged("model-core"))?;
            for j in 0..4 {
                let (a, m) = (exact.as_array()[j], k.as_array()[j]);
                let err: Cell = match err_pct(a, m) {
                    Ok(e) => (100.0 * e).into(),
                    Err(_) => "".into(),
                };
                table.push(vec![(*alpha).into(), (j + 1).into(), a.into(), m.into(), se.as_array()[j].into(), err]);
            }
            log::info!("cumulants alpha={alpha}: done");
        }
        Ok(vec![("cumulants.csv".into(), table)])
    }
}

fn call_mc(spots: &[f64], strike: f64, discount: f64) -> Result<(f64, f64), CliError> {
    let pay: Vec<f64> = spots.iter().map(|s| discount * (s - strike).max(0.0)).collect();
    mean_and_se(&pay).map_err(tagged("pricing-mc"))
}

impl CallStripPlan {
    fn run(&self) -> Result<Vec<(String, Table)>, CliError> {
        let strip =
            price_call_strip(&self.spec, &self.curve, &self.params, &self.fft).map_err(tagged("pricing-fft"))?;
        log::info!("call strip sum {}", strip.value);
        let mc_paths = if self.mc_paths > 0 {
            Some(
                simulate_spot_paths(&self.spec.dates, &self.curve, &self.params, &mc(self.mc_paths, self.seed, 0))
                    .map_err(tagged("pricing-mc"))?,
            )
        } else {
            None
        };
        let mut table = Table::new(["day", "t", "fft", "mc", "mc_se"]);
        for (m, (&day, &t)) in self.days.iter().zip(&self.spec.dates).enumerate() {
            let (mc_v, mc_se): (Cell, Cell) = match &mc_paths {
                Some(paths) => {
                    let (v, se) = call_mc(paths.date(m), self.spec.strike, (-self.spec.rate * t).exp())?;
                    (v.into(), se.into())
                }
                None => ("".into(), "".into()),
            };
            table.push(vec![day.into(), t.into(), strip.per_date[m].into(), mc_v, mc_se]);
        }
        let mut out = vec![("call_strip.csv".to_string(), table)];
        if let Some((day, strikes)) = &self.sweep {
            let t = *day as f64 / DAYS_PER_YEAR;
            let fft = call_prices(t, strikes, self.spec.rate, &self.curve, &self.params, &self.fft)
                .map_err(tagged("pricing-fft"))?;
            let spots = if self.mc_paths > 0 {
                Some(
                    simulate_spot_paths(&[t], &self.curve, &self.params, &mc(self.mc_paths, self.seed, 1))
                        .map_err(tagged("pricing-mc"))?,
                )
            } else {
                None
            };
            let mut sweep = Table::new(["strike", "fft", "mc", "mc_se"]);
            for (k, f) in strikes.iter().zip(fft) {
                let (mc_v, mc_se): (Cell, Cell) = match &spots {
                    Some(p) => {
                        let (v, se) = call_mc(p.date(0), *k, (-self.spec.rate * t).exp())?;
                        (v.into(), se.into())
                    }
                    None => ("".into(), "".into()),
                };
                sweep.push(vec![(*k).into(), f.into(), mc_v, mc_se]);
            }
            out.push(("strike_sweep.csv".into(), sweep));
        }
        Ok(out)
    }
}

impl AsianPlan {
    fn run(&self) -> Result<Vec<(String, Table)>, CliError> {
        let mut table = Table::new(["y", "scheme", "n_paths", "value", "std_error"]);
        for (row, (y, params, scheme, n)) in self.rows.iter().enumerate() {
            let r = price_asian(&self.spec, &self.curve, params, *scheme, &mc(*n, self.seed, row))
                .map_err(tagged("pricing-mc"))?;
            log::info!("asian y={y} {scheme} n={n}: {} ± {}", r.value, r.std_error);
            table.push(vec![(*y).into(), scheme.to_string().into(), (*n).into(), r.value.into(), r.std_error.into()]);
        }
        Ok(vec![("asian.csv".into(), table)])
    }
}

impl SwingPlan {
    fn run(&self) -> Result<Vec<(String, Table)>, CliError> {
        let mut table = Table::new(["y", "n_paths", "value", "std_error"]);
        for (row, (y, params, n)) in self.rows.iter().enumerate() {
            let r = price_swing(&self.spec, &self.curve, params, self.basis, &mc(*n, self.seed, row))
                .map_err(tagged("pricing-lsmc"))?;
            log::info!("swing y={y} n={n}: {} ± {}", r.value, r.std_error);
            table.push(vec![(*y).into(), (*n).into(), r.value.into(), r.std_error.into()]);
        }
        Ok(vec![("swing.csv".into(), table)])
    }
}

impl NoaPlan {
    fn run(&self) -> Result<Vec<(String, Table)>, CliError> {
        let sim = NoaSimulator::new(&self.spec, &self.leg1, &self.leg2).map_err(tagged("forward-noa"))?;
        let times = self.spec.grid.times();
        let f0 = self.spec.f0;
        let mut s1 = vec![NeumaierSum::default(); times.len()];
        let mut s2 = vec![NeumaierSum::default(); times.len()];
        let mut s4 = vec![NeumaierSum::default(); times.len()];
        let mut dump = Vec::new();
        let mut done = 0;
        while done < self.n_paths {
            let chunk = NOA_CHUNK.min(self.n_paths - done);
            let paths = par_map_streams(self.seed, done as u64, chunk, |rng| sim.sample(rng).future);
            for path in &paths {
                for (i, f) in path.iter().enumerate() {
                    let d = f - f0;
                    s1[i].add(d);
                    s2[i].add(d * d);
                    s4[i].add(d * d * d * d);
                }
            }
            dump.extend(paths.into_iter().take(self.dump.saturating_sub(dump.len())));
            done += chunk;
        }
        let n = self.n_paths as f64;
        let mut moments = Table::new(["t", "loading", "mean", "mean_se", "var_mc", "var_se", "var_model"]);
        for (i, &t) in times.iter().enumerate() {
            let (m1, m2, m4) = (s1[i].value() / n, s2[i].value() / n, s4[i].value() / n);
            let mean_se = ((m2 - m1 * m1).max(0.0) / (n - 1.0)).sqrt();
            let var_se = ((m4 - m2 * m2).max(0.0) / (n - 1.0)).sqrt();
            let loading =
                gamma1(t, &self.spec.period, self.spec.gamma1_coeff, self.leg1.b).map_err(tagged("forward-noa"))?;
            let model = self.spec.variance(t - times[0], &self.leg1, &self.leg2).map_err(tagged("forward-noa"))?;
            moments.push(vec![
                t.into(),
                loading.into(),
                (f0 + m1).into(),
                mean_se.into(),
                m2.into(),
                var_se.into(),
                model.into(),
            ]);
        }
        Ok(vec![("noa_moments.csv".into(), moments), ("noa_paths.csv".into(), path_table(&self.spec.grid, &dump))])
    }
}

/// Path-major table: a `path` column followed by one column per grid time.
fn path_table(grid: &TimeGrid, paths: &[Vec<f64>]) -> Table {
    let mut header = vec!["path".to_string()];
    header.extend(grid.times().iter().map(|&t| crate::output::fmt_f64(t)));
    let mut table = Table::new(header);
    for (i, p) in paths.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(i + 1).into()];
        row.extend(p.iter().map(|&x| Cell::Num(x)));
        table.push(row);
    }
    table
}

impl TrajectoriesPlan {
    fn run(&self) -> Result<Vec<(String, Table)>, CliError> {
        let mut paths = Vec::new();
        for (i, (y, params)) in self.runs.iter().enumerate() {
            let sim =
                SkeletonSimulator::new(params, self.grid.clone(), self.scheme).map_err(tagged("exact-simulation"))?;
            let mut rng = tsou::RngStream::new(self.seed, i as u64);
            paths.push(sim.sample(self.x0, &mut rng).values);
            log::info!("trajectory {} for y={y}", i + 1);
        }
        Ok(vec![("trajectories.csv".into(), path_table(&self.grid, &paths))])
    }
}
