//! Experiment configuration files.
//!
//! A configuration is a TOML document with a few top-level keys, a `[model]`
//! table and one table per experiment. Only the table of the experiment being
//! run has to be present; the others are ignored. Example:
//!
//! ```toml
//! seed = 20240501
//! n_paths = 100000
//! threads = 4
//!
//! [model]
//! b = 10.0
//! cgmy = { c = 2.0, g = 15.0, m = 5.0, y = 0.5 }
//!
//! [curve]
//! flat = 20.0
//!
//! [asian]
//! first_day = 31
//! count = 90
//! strike = 20.0
//! schemes = ["exact", "approx1", "approx2"]
//! ys = [0.3, 0.5, 0.7, 0.9]
//! ```
//!
//! The driver is either `cgmy = { c, g, m, y }` or explicit legs
//! `pos = { alpha, beta, c }` and optionally `neg = { alpha, beta, c }`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tsou::fft::{FftConfig, FftRule};
use tsou::{BctsParams, CtsParams, ForwardCurve, Scheme};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    /// Worker threads; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulants: Option<CumulantsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_strip: Option<CallStripConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asian: Option<AsianConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swing: Option<SwingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noa: Option<NoaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectoriesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_data: Option<PlotDataConfig>,
}

fn default_paths() -> usize {
    100_000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegConfig {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgmyConfig {
    pub c: f64,
    pub g: f64,
    pub m: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cgmy: Option<CgmyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<LegConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg: Option<LegConfig>,
}

/// Driver of the second futures factor; `b` is not needed for a Lévy process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cgmy: Option<CgmyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<LegConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg: Option<LegConfig>,
}

fn build_params(
    section: &str,
    b: f64,
    cgmy: Option<CgmyConfig>,
    pos: Option<LegConfig>,
    neg: Option<LegConfig>,
    y_override: Option<f64>,
) -> Result<BctsParams, CliError> {
    let tag = |e: tsou::Error| CliError::Config(format!("[{section}]: {e}"));
    match (cgmy, pos) {
        (Some(_), Some(_)) => {
            Err(CliError::Config(format!("[{section}]: give either `cgmy` or `pos`/`neg`, not both")))
        }
        (None, None) => Err(CliError::Config(format!("[{section}]: missing driver, expected `cgmy` or `pos`"))),
        (Some(g), None) => {
            if neg.is_some() {
                return Err(CliError::Config(format!("[{section}]: `neg` cannot be combined with `cgmy`")));
            }
            BctsParams::cgmy(g.c, g.g, g.m, y_override.unwrap_or(g.y), b).map_err(tag)
        }
        (None, Some(p)) => {
            let leg = |l: LegConfig, alpha: f64| CtsParams::new(alpha, l.beta, l.c);
            let pos = leg(p, y_override.unwrap_or(p.alpha)).map_err(|e| tag(rename(e, "pos")))?;
            match neg {
                Some(n) => {
                    let neg = leg(n, y_override.unwrap_or(n.alpha)).map_err(|e| tag(rename(e, "neg")))?;
                    BctsParams::new(pos, neg, b).map_err(tag)
                }
                None => BctsParams::one_sided(pos, b).map_err(tag),
            }
        }
    }
}

fn rename(err: tsou::Error, leg: &str) -> tsou::Error {
    match err {
        tsou::Error::Parameter { name, reason } => tsou::Error::Parameter { name: format!("{leg}.{name}"), reason },
        other => other,
    }
}

impl ModelConfig {
    pub fn params(&self) -> Result<BctsParams, CliError> {
        self.params_with_y(None)
    }

    /// Parameters with the activity index of every leg replaced by `y`.
    pub fn params_with_y(&self, y: Option<f64>) -> Result<BctsParams, CliError> {
        build_params("model", self.b, self.cgmy, self.pos, self.neg, y)
    }
}

impl DriverConfig {
    pub fn params(&self, b: f64) -> Result<BctsParams, CliError> {
        build_params("noa.second", b, self.cgmy, self.pos, self.neg, None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat: Option<f64>,
    /// Two-column `day,price` file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

impl CurveConfig {
    pub fn curve(&self) -> Result<ForwardCurve, CliError> {
        let tag = |e: tsou::Error| CliError::Config(format!("[curve]: {e}"));
        match (self.flat, &self.csv) {
            (Some(f), None) => ForwardCurve::flat(f).map_err(tag),
            (None, Some(path)) => ForwardCurve::from_csv(path).map_err(tag),
            _ => Err(CliError::Config("[curve]: give exactly one of `flat` or `csv`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulantsConfig {
    pub dt: f64,
    #[serde(default)]
    pub x0: f64,
    /// Activity indices to sweep; the model's own when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_batches() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FftSection {
    #[serde(default = "default_fft_n")]
    pub n: usize,
    #[serde(default = "default_fft_eta")]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default = "default_rule")]
    pub rule: String,
}

fn default_fft_n() -> usize {
    FftConfig::default().n
}

fn default_fft_eta() -> f64 {
    FftConfig::default().eta
}

fn default_rule() -> String {
    "trapezoid".into()
}

impl Default for FftSection {
    fn default() -> Self {
        FftSection { n: default_fft_n(), eta: default_fft_eta(), damping: None, rule: default_rule() }
    }
}

impl FftSection {
    pub fn config(&self) -> Result<FftConfig, CliError> {
        let rule = match self.rule.as_str() {
            "trapezoid" => FftRule::Trapezoid,
            "simpson" => FftRule::Simpson,
            other => {
                return Err(CliError::Config(format!(
                    "[call_strip.fft]: unknown rule `{other}`, expected trapezoid or simpson"
                )))
            }
        };
        if !self.n.is_power_of_two() || self.n < 16 {
            return Err(CliError::Config(format!(
                "[call_strip.fft]: `n` must be a power of two >= 16, got {}",
                self.n
            )));
        }
        if !(self.eta > 0.0) {
            return Err(CliError::Config(format!("[call_strip.fft]: `eta` must be positive, got {}", self.eta)));
        }
        Ok(FftConfig { damping: self.damping, n: self.n, eta: self.eta, rule })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Settlement day of the swept calls.
    pub day: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub count: usize,
}

impl SweepConfig {
    pub fn strikes(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.k_min];
        }
        let h = (self.k_max - self.k_min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.k_min + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallStripConfig {
    #[serde(default = "default_strip_days")]
    pub days: usize,
    pub strike: f64,
    #[serde(default)]
    pub rate: f64,
    /// Monte Carlo paths for the check column; `n_paths` when absent, 0 disables it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_paths: Option<usize>,
    #[serde(default)]
    pub fft: FftSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_strip_days() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsianConfig {
    pub first_day: usize,
    pub count: usize,
    pub strike: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "one")]
    pub substeps: usize,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ys: Option<Vec<f64>>,
    /// Path counts per row; `[n_paths]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<usize>>,
}

fn one() -> usize {
    1
}

fn default_schemes() -> Vec<String> {
    vec!["exact".into(), "approx1".into(), "approx2".into()]
}

impl AsianConfig {
    pub fn schemes(&self) -> Result<Vec<Scheme>, CliError> {
        self.schemes
            .iter()
            .map(|s| s.parse::<Scheme>().map_err(|e| CliError::Config(format!("[asian] schemes: {e}"))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwingConfig {
    #[serde(default = "default_swing_days")]
    pub days: usize,
    pub rights: usize,
    pub strike: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "unit")]
    pub volume: f64,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ys: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<usize>>,
}

fn default_swing_days() -> usize {
    360
}

fn unit() -> f64 {
    1.0
}

fn default_degree() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoaConfig {
    pub t1: f64,
    pub t2: f64,
    pub f0: f64,
    pub gamma1: f64,
    /// Step function `γ`: `gamma_values[i]` on `[gamma_breaks[i-1], gamma_breaks[i])`.
    #[serde(default)]
    pub gamma_breaks: Vec<f64>,
    pub gamma_values: Vec<f64>,
    /// Daily observation grid `0..=days`.
    pub days: usize,
    /// Number of paths written to the path dump.
    #[serde(default = "default_dump")]
    pub dump_paths: usize,
    pub second: DriverConfig,
}

fn default_dump() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoriesConfig {
    pub days: usize,
    #[serde(default)]
    pub x0: f64,
    /// One path per activity index; the model's own when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ys: Option<Vec<f64>>,
    #[serde(default = "default_scheme")]
    pub scheme: String,
}

fn default_scheme() -> String {
    "exact".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotDataConfig {
    /// Result file produced by `call-strip` (strike sweep) or `trajectories`.
    pub input: String,
    /// Output file name inside the output directory.
    #[serde(default = "default_plot_output")]
    pub output: String,
}

fn default_plot_output() -> String {
    "plot_data.csv".into()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The configuration as TOML, used for the header echo of every output.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// Recovers a configuration from the `# ` comment header of an output file.
    pub fn from_echo(csv_text: &str) -> Result<Self, CliError> {
        let body: String = csv_text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| format!("{}\n", l.strip_prefix("# ").unwrap_or(l.trim_start_matches('#'))))
            .collect();
        Self::parse(&body)
    }

    pub fn model(&self) -> Result<&ModelConfig, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::Config("missing [model] table".into()))
    }

    pub fn curve(&self) -> Result<ForwardCurve, CliError> {
        self.curve.as_ref().ok_or_else(|| CliError::Config("missing [curve] table".into()))?.curve()
    }

    pub fn section<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| CliError::Config(format!("missing [{name}] table")))
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.output_dir.as_deref().unwrap_or("."))
    }

    pub fn check_paths(&self, n: usize, field: &str) -> Result<(), CliError> {
        if n < 2 {
            return Err(CliError::Config(format!("`{field}` must be at least 2, got {n}")));
        }
        Ok(())
    }
}
