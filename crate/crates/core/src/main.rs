use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tl_lab::report::{self, parse_complex, OutputFormat, RunConfig};
use tl_lab::transfer::ChainKind;
use tl_lab::{Spin, TlError, C64};

#[derive(Parser)]
#[command(name = "tl-lab", version, about = "Bethe-ansatz workbench for the spin-s Temperley-Lieb chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Bethe equations and measure degeneracies.
    Solve(SolveArgs),
    /// Reproduce one of the reference tables 1..8.
    Reproduce(ReproduceArgs),
    /// Run an invariant suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long = "N", short = 'N', default_value_t = 2)]
    n_sites: usize,
    /// Spin as `k/2` or decimal.
    #[arg(long, conflicts_with = "twice_spin")]
    spin: Option<Spin>,
    #[arg(long)]
    twice_spin: Option<u32>,
    /// Anisotropy `re[+imi]`.
    #[arg(long, value_parser = parse_complex, default_value = "0.5")]
    q: C64,
}

impl ModelArgs {
    fn spin(&self) -> Result<Spin, TlError> {
        match (self.spin, self.twice_spin) {
            (Some(s), _) => Ok(s),
            (None, Some(t)) => Spin::from_twice(t).map_err(|e| TlError::Usage(e.to_string())),
            (None, None) => Ok(Spin::HALF),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    format: OutputFormat,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "open")]
    chain: ChainKind,
    #[command(flatten)]
    model: ModelArgs,
    /// Numbers of roots, comma separated; all when omitted.
    #[arg(long = "M", value_delimiter = ',')]
    m: Vec<usize>,
    /// Closed-chain twist sectors, comma separated; all when omitted.
    #[arg(long = "l", value_delimiter = ',')]
    l: Vec<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long)]
    table: u8,
    #[arg(long)]
    seeds: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long)]
    inhomogeneous: bool,
    /// Random configurations per check.
    #[arg(long, default_value_t = 50)]
    configs: usize,
    /// Replaces every per-check tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn build_config(cmd: &Command) -> Result<RunConfig, TlError> {
    let (mut cfg, output) = match cmd {
        Command::Solve(a) => {
            let mut c = RunConfig::solve(a.chain, a.model.n_sites, a.model.spin()?);
            c.q = a.model.q;
            c.sectors_m = a.m.clone();
            c.sectors_l = a.l.clone();
            if let Some(s) = a.seeds {
                c.search.seeds = s;
            }
            if let Some(t) = a.tol {
                c.search.tol = t;
            }
            (c, &a.output)
        }
        Command::Reproduce(a) => {
            let mut c = RunConfig::reproduce(a.table);
            if let Some(s) = a.seeds {
                c.search.seeds = s;
            }
            (c, &a.output)
        }
        Command::Verify(a) => {
            let mut c = RunConfig::verify(&a.suite, a.model.n_sites, a.model.spin()?);
            c.q = a.model.q;
            c.sectors_m = a.m.into_iter().collect();
            c.inhomogeneous = a.inhomogeneous;
            c.configs = a.configs;
            c.tolerances.identity = a.tol;
            (c, &a.output)
        }
    };
    cfg.output = output.out.clone();
    cfg.format = output.format;
    cfg = cfg.with_env_seed()?;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(&cli.command).and_then(|cfg| {
        let rep = report::run(&cfg)?;
        report::emit_report(&rep, cfg.format, cfg.output.as_deref())?;
        Ok(rep)
    });
    match result {
        Ok(rep) => {
            let failures = rep.failures();
            for f in &failures {
                eprintln!("mismatch: {f}");
            }
            ExitCode::from(rep.exit_code() as u8)
        }
        Err(e @ TlError::Usage(_)) => {
            eprintln!("tl-lab: {e}");
            ExitCode::from(2)
        }
        Err(e @ TlError::InvalidParams(_)) => {
            eprintln!("tl-lab: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("tl-lab: {e}");
            ExitCode::from(1)
        }
    }
}
