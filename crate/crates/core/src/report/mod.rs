//! Run configuration, spectrum reports, table reproduction, verification
//! suites and report output.

mod output;
mod spectrum;
mod suites;
mod tables;

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TlError};
use crate::model::{ModelParams, Spin, C64};
use crate::solver::SearchConfig;
use crate::transfer::ChainKind;

pub use output::{emit_report, format_kappa, format_sig, merge_lines, render_report, MergedRow};
pub use spectrum::{compute_spectrum, GlobalChecks, Spectrum, SpectrumOptions};
pub use suites::{run_suite, ResidualEntry, SuiteSummary, VerifyOptions, SUITES};
pub use tables::{paper_table, roots_match, run_reproduce, run_reproduce_with, RepresentationRow, TableComparison};

pub const SCHEMA: &str = "tl-lab/1";
/// Environment variable overriding the RNG seed.
pub const SEED_ENV: &str = "TL_LAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Reproduce,
    Verify,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for OutputFormat {
    type Err = TlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" | "txt" => Ok(OutputFormat::Text),
            _ => Err(TlError::Usage(format!("unknown format {s:?}; expected json, csv or text"))),
        }
    }
}

impl FromStr for ChainKind {
    type Err = TlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(ChainKind::Open),
            "closed" | "periodic" => Ok(ChainKind::Closed),
            _ => Err(TlError::Usage(format!("unknown chain {s:?}; expected open or closed"))),
        }
    }
}

/// Parses `re`, `re+imi`, `re-imi` or `imi`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let bad = || TlError::Usage(format!("cannot parse complex number {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not an exponent sign or the leading one.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let im_of = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => {
            let re: f64 = body[..k].parse().map_err(|_| bad())?;
            Ok(C64::new(re, im_of(&body[k..])?))
        }
        None => Ok(C64::new(0.0, im_of(body)?)),
    }
}

/// Overrides of the default numerical thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative threshold of the nullity measurement.
    pub rank_tol: f64,
    /// Largest accepted relative Bethe residual of a reported solution.
    pub residual: f64,
    /// Relative agreement required between computed and printed roots.
    pub root_match: f64,
    /// Replaces every per-check tolerance of a verification suite.
    pub identity: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rank_tol: crate::symmetry::DEFAULT_RANK_TOL, residual: 1e-8, root_match: 1e-5, identity: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub chain: ChainKind,
    pub n_sites: usize,
    pub spin: Spin,
    #[serde(with = "crate::cser")]
    pub q: C64,
    /// Requested `M` sectors; empty means all.
    pub sectors_m: Vec<usize>,
    /// Requested closed-chain twist sectors `l`; empty means all.
    pub sectors_l: Vec<usize>,
    pub search: SearchConfig,
    pub tolerances: Tolerances,
    pub table: Option<u8>,
    pub suite: Option<String>,
    pub inhomogeneous: bool,
    /// Random configurations per check in the `offshell` and
    /// `scalar-products` suites.
    pub configs: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    fn base(mode: Mode) -> Self {
        RunConfig {
            mode,
            chain: ChainKind::Open,
            n_sites: 2,
            spin: Spin::HALF,
            q: C64::new(0.5, 0.0),
            sectors_m: Vec::new(),
            sectors_l: Vec::new(),
            search: SearchConfig::default(),
            tolerances: Tolerances::default(),
            table: None,
            suite: None,
            inhomogeneous: false,
            configs: 50,
            output: None,
            format: OutputFormat::Json,
        }
    }

    pub fn solve(chain: ChainKind, n_sites: usize, spin: Spin) -> Self {
        RunConfig { chain, n_sites, spin, ..Self::base(Mode::Solve) }
    }

    pub fn reproduce(table: u8) -> Self {
        RunConfig { table: Some(table), ..Self::base(Mode::Reproduce) }
    }

    pub fn verify(suite: &str, n_sites: usize, spin: Spin) -> Self {
        RunConfig { suite: Some(suite.to_string()), n_sites, spin, ..Self::base(Mode::Verify) }
    }

    /// Applies `TL_LAB_SEED` when set.
    pub fn with_env_seed(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.search.rng_seed = v
                .trim()
                .parse()
                .map_err(|_| TlError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        }
        Ok(self)
    }

    /// Checks the mode-specific required fields; failures are usage errors.
    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(TlError::Usage(m));
        if self.n_sites == 0 {
            return usage("N must be at least 1".into());
        }
        self.search.validate().map_err(|e| TlError::Usage(e.to_string()))?;
        match self.mode {
            Mode::Solve => {
                if let Some(&m) = self.sectors_m.iter().find(|&&m| m > self.n_sites / 2) {
                    return usage(format!("M = {m} exceeds N/2 = {}", self.n_sites / 2));
                }
                if self.chain == ChainKind::Open && !self.sectors_l.is_empty() {
                    return usage("--l applies to the closed chain only".into());
                }
                if let Some(&l) = self.sectors_l.iter().find(|&&l| l >= self.n_sites) {
                    return usage(format!("l = {l} outside 0..{}", self.n_sites));
                }
            }
            Mode::Reproduce => match self.table {
                Some(1..=8) => {}
                Some(t) => return usage(format!("table {t} outside 1..8")),
                None => return usage("reproduce needs --table".into()),
            },
            Mode::Verify => match self.suite.as_deref() {
                Some(s) if SUITES.contains(&s) => {}
                Some(s) => return usage(format!("unknown suite {s:?}; expected one of {}", SUITES.join(", "))),
                None => return usage("verify needs --suite".into()),
            },
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.n_sites, self.spin, self.q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub schema: String,
    pub config: RunConfig,
    pub spectra: Vec<Spectrum>,
    /// Dimension and multiplicity rows `(k, ν_k, p_k(2s+1) …)`.
    pub representations: Vec<RepresentationRow>,
    pub comparison: Option<TableComparison>,
    pub suite: Option<SuiteSummary>,
    pub timings: Vec<Timing>,
}

impl SpectrumReport {
    pub(crate) fn new(config: RunConfig) -> Self {
        SpectrumReport {
            schema: SCHEMA.to_string(),
            config,
            spectra: Vec::new(),
            representations: Vec::new(),
            comparison: None,
            suite: None,
            timings: Vec::new(),
        }
    }

    pub(crate) fn time<T>(&mut self, stage: impl Into<String>, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        self.timings.push(Timing { stage: stage.into(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    /// Every failed check, as a diff listing.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for sp in &self.spectra {
            out.extend(sp.checks.failures.iter().map(|f| format!("N={} s={} {:?}: {f}", sp.n_sites, sp.spin, sp.kind)));
        }
        if let Some(c) = &self.comparison {
            out.extend(c.mismatches.iter().cloned());
        }
        if let Some(s) = &self.suite {
            out.extend(s.entries.iter().filter(|e| !e.passed()).map(|e| {
                format!("{}: {} residual {:.3e} exceeds {:.1e}", s.suite, e.name, e.residual, e.tol)
            }));
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    /// `0` when every check passes, `1` on a numerical mismatch.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Dispatches on `config.mode`.
pub fn run(config: &RunConfig) -> Result<SpectrumReport> {
    config.validate()?;
    match config.mode {
        Mode::Solve => run_solve(config),
        Mode::Reproduce => run_reproduce_with(config.table.unwrap_or(0), config),
        Mode::Verify => run_verify(config.suite.as_deref().unwrap_or(""), config),
    }
}

/// Solves the requested sectors and measures degeneracies.
pub fn run_solve(config: &RunConfig) -> Result<SpectrumReport> {
    config.validate()?;
    let params = config.params()?;
    let mut report = SpectrumReport::new(config.clone());
    let opts = SpectrumOptions::from_tolerances(&config.tolerances);
    let ms = (!config.sectors_m.is_empty()).then_some(config.sectors_m.as_slice());
    let ls = (!config.sectors_l.is_empty()).then_some(config.sectors_l.as_slice());
    let spectrum = report.time("solve", || compute_spectrum(&params, config.chain, ms, ls, &config.search, &opts))?;
    report.spectra.push(spectrum);
    Ok(report)
}

/// Runs one verification suite at the configured `(N, s, q)`.
pub fn run_verify(suite: &str, config: &RunConfig) -> Result<SpectrumReport> {
    if !SUITES.contains(&suite) {
        return Err(TlError::Usage(format!("unknown suite {suite:?}; expected one of {}", SUITES.join(", "))));
    }
    let mut config = config.clone();
    config.mode = Mode::Verify;
    config.suite = Some(suite.to_string());
    config.validate()?;
    let opts = VerifyOptions::from_config(&config);
    let mut report = SpectrumReport::new(config);
    let summary = report.time(suite, || run_suite(suite, &opts))?;
    report.suite = Some(summary);
    Ok(report)
}
