use serde::{Deserialize, Serialize};

use crate::bethe::{energy, eval_lambda, shift_eigenvalue, BetheSolution, SpectralLine};
use crate::error::Result;
use crate::model::{ModelParams, Spin, C64};
use crate::solver::{census_open, chebyshev_dim, solve_sector_closed, solve_sector_open, SearchConfig, SectorCensus};
use crate::symmetry::{measure_degeneracy_detailed, DEFAULT_PROBE};
use crate::transfer::{build_transfer, ChainKind, TransferEval};

use super::Tolerances;

/// Probes and thresholds of the degeneracy measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumOptions {
    /// Degeneracies are measured at `probes[0]` and confirmed at `probes[1]`.
    pub probes: [C64; 2],
    /// Extra probe of the closed-chain trace identity.
    pub trace_probe: C64,
    pub rank_tol: f64,
    pub residual_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self::from_tolerances(&Tolerances::default())
    }
}

impl SpectrumOptions {
    pub fn from_tolerances(t: &Tolerances) -> Self {
        SpectrumOptions {
            probes: [DEFAULT_PROBE, C64::new(1.13, -0.27)],
            trace_probe: C64::new(0.62, 0.88),
            rank_tol: t.rank_tol,
            residual_tol: t.residual,
        }
    }
}

/// Consistency checks over a whole spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalChecks {
    /// `(2s+1)^N`.
    pub dimension: usize,
    pub total_degeneracy: usize,
    /// Whether every `M` (and for the closed chain every `l`) was solved.
    pub all_sectors: bool,
    pub sum_rule: Option<bool>,
    /// Max relative `|Σ D Λ(u) − tr t(u)| / |tr t(u)|` over the trace probes.
    pub trace_residual: Option<f64>,
    pub max_residual_norm: f64,
    pub ambiguous_lines: usize,
    /// Lines whose nullity differs between the two probes.
    pub probe_disagreements: usize,
    pub failures: Vec<String>,
}

/// All spectral lines of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub kind: ChainKind,
    pub n_sites: usize,
    pub spin: Spin,
    #[serde(with = "crate::cser")]
    pub q: C64,
    pub lines: Vec<SpectralLine>,
    pub census: Vec<SectorCensus>,
    pub checks: GlobalChecks,
}

fn lambda_rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

/// Solves the requested sectors (all when `None`), measures every line's
/// degeneracy and runs the global checks. Closed-chain lines of zero
/// degeneracy are dropped and lines repeated across twist sectors merged.
pub fn compute_spectrum(
    params: &ModelParams,
    kind: ChainKind,
    ms: Option<&[usize]>,
    ls: Option<&[usize]>,
    cfg: &SearchConfig,
    opts: &SpectrumOptions,
) -> Result<Spectrum> {
    let n = params.n_sites();
    let all_m: Vec<usize> = (0..=n / 2).collect();
    let all_l: Vec<usize> = (0..n).collect();
    let ms = ms.unwrap_or(&all_m);
    let ls = ls.unwrap_or(&all_l);
    let all_sectors = all_m.iter().all(|m| ms.contains(m)) && (kind == ChainKind::Open || all_l.iter().all(|l| ls.contains(l)));

    let t0 = build_transfer(kind, opts.probes[0], params)?;
    let t1 = build_transfer(kind, opts.probes[1], params)?;

    let mut lines = Vec::new();
    let mut census = Vec::new();
    let mut failures = Vec::new();
    let mut disagreements = 0;
    for &m in ms {
        let sectors: Vec<(Option<usize>, Vec<BetheSolution>)> = match kind {
            ChainKind::Open => vec![(None, solve_sector_open(params, m, cfg)?)],
            ChainKind::Closed => ls
                .iter()
                .map(|&l| Ok((Some(l), solve_sector_closed(params, m, l, cfg)?)))
                .collect::<Result<_>>()?,
        };
        for (l, sols) in sectors {
            census.push(match kind {
                ChainKind::Open => census_open(params, m, sols.len()),
                ChainKind::Closed => SectorCensus { m, l, found: sols.len(), expected: None, expected_degeneracy: None, complete: false },
            });
            for sol in sols {
                let line = measure_line(sol, params, &t0, &t1, opts, &mut disagreements)?;
                if kind == ChainKind::Closed {
                    let repeated = lines.iter().any(|old: &SpectralLine| {
                        old.lambda_samples.iter().zip(&line.lambda_samples).all(|(a, b)| lambda_rel(a.1, b.1) < 1e-9)
                    });
                    if line.degeneracy_measured == 0 || repeated {
                        continue;
                    }
                } else if line.degeneracy_measured == 0 {
                    failures.push(format!("M={m} line {:?} has zero measured degeneracy", line.solution.roots));
                }
                lines.push(line);
            }
        }
    }

    let dimension = params.dim();
    let total_degeneracy: usize = lines.iter().map(|l| l.degeneracy_measured).sum();
    let max_residual_norm = lines.iter().map(|l| l.solution.residual_norm).fold(0.0, f64::max);
    let ambiguous_lines = lines.iter().filter(|l| l.ambiguous).count();
    if max_residual_norm > opts.residual_tol || max_residual_norm.is_nan() {
        failures.push(format!("max Bethe residual {max_residual_norm:.3e} exceeds {:.1e}", opts.residual_tol));
    }
    if disagreements > 0 {
        failures.push(format!("{disagreements} lines change nullity between probes"));
    }
    for c in &census {
        if c.expected.is_some() && !c.complete {
            failures.push(format!("sector M={}: found {} solutions, expected {:?}", c.m, c.found, c.expected));
        }
    }

    let (sum_rule, trace_residual) = if all_sectors {
        let ok = total_degeneracy == dimension;
        if !ok {
            failures.push(format!("sum rule: Σ D = {total_degeneracy} but (2s+1)^N = {dimension}"));
        }
        let mut probes = vec![(opts.probes[0], t0.matrix.trace()), (opts.probes[1], t1.matrix.trace())];
        if kind == ChainKind::Closed {
            let t2 = build_transfer(kind, opts.trace_probe, params)?;
            probes.push((opts.trace_probe, t2.matrix.trace()));
        }
        let mut worst: f64 = 0.0;
        for (u, tr) in probes {
            let mut sum = C64::new(0.0, 0.0);
            for line in &lines {
                sum += eval_lambda(u, &line.solution, params)? * line.degeneracy_measured as f64;
            }
            worst = worst.max(lambda_rel(sum, tr));
        }
        if worst > 1e-6 || worst.is_nan() {
            failures.push(format!("trace identity residual {worst:.3e} exceeds 1e-6"));
        }
        (Some(ok), Some(worst))
    } else {
        (None, None)
    };

    Ok(Spectrum {
        kind,
        n_sites: n,
        spin: params.spin(),
        q: params.q(),
        lines,
        census,
        checks: GlobalChecks {
            dimension,
            total_degeneracy,
            all_sectors,
            sum_rule,
            trace_residual,
            max_residual_norm,
            ambiguous_lines,
            probe_disagreements: disagreements,
            failures,
        },
    })
}

fn measure_line(
    solution: BetheSolution,
    params: &ModelParams,
    t0: &TransferEval,
    t1: &TransferEval,
    opts: &SpectrumOptions,
    disagreements: &mut usize,
) -> Result<SpectralLine> {
    let l0 = eval_lambda(opts.probes[0], &solution, params)?;
    let l1 = eval_lambda(opts.probes[1], &solution, params)?;
    let d0 = measure_degeneracy_detailed(t0, l0, opts.rank_tol);
    let d1 = measure_degeneracy_detailed(t1, l1, opts.rank_tol);
    if d0.nullity != d1.nullity {
        *disagreements += 1;
    }
    let (energy, predicted, shift) = match solution.kind {
        ChainKind::Open => {
            let k = params.n_sites() - 2 * solution.m();
            (Some(energy(&solution, params)?), Some(chebyshev_dim(k, params.d()) as usize), None)
        }
        ChainKind::Closed => (None, None, Some(shift_eigenvalue(&solution.roots, solution.kappa, params)?)),
    };
    Ok(SpectralLine {
        solution,
        lambda_samples: vec![(opts.probes[0], l0), (opts.probes[1], l1)],
        energy,
        degeneracy_predicted: predicted,
        degeneracy_measured: d0.nullity,
        ambiguous: d0.ambiguous || d1.ambiguous,
        shift_eigenvalue: shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, spin: Spin) -> ModelParams {
        ModelParams::new(n, spin, C64::new(0.5, 0.0)).unwrap()
    }

    #[test]
    fn open_two_sites_all_spins() {
        for (spin, degs) in [(Spin::HALF, [3, 1]), (Spin::ONE, [8, 1]), (Spin::THREE_HALVES, [15, 1])] {
            let sp = compute_spectrum(&params(2, spin), ChainKind::Open, None, None, &SearchConfig::default(), &SpectrumOptions::default()).unwrap();
            let got: Vec<usize> = sp.lines.iter().map(|l| l.degeneracy_measured).collect();
            assert_eq!(got, degs);
            assert!(sp.checks.failures.is_empty(), "{:?}", sp.checks.failures);
            assert_eq!(sp.checks.sum_rule, Some(true));
            assert!(sp.checks.trace_residual.unwrap() < 1e-9);
        }
    }

    #[test]
    fn partial_sectors_skip_sum_rule() {
        let sp = compute_spectrum(&params(3, Spin::HALF), ChainKind::Open, Some(&[1]), None, &SearchConfig::default(), &SpectrumOptions::default()).unwrap();
        assert!(!sp.checks.all_sectors);
        assert_eq!(sp.checks.sum_rule, None);
        assert_eq!(sp.lines.len(), 2);
        assert!(sp.lines.iter().all(|l| l.degeneracy_measured == 2 && l.degeneracy_predicted == Some(2)));
    }

    #[test]
    fn closed_two_sites_spin_half() {
        let sp = compute_spectrum(&params(2, Spin::HALF), ChainKind::Closed, None, None, &SearchConfig::default(), &SpectrumOptions::default()).unwrap();
        assert!(sp.checks.failures.is_empty(), "{:?}", sp.checks.failures);
        let degs: Vec<usize> = sp.lines.iter().map(|l| l.degeneracy_measured).collect();
        assert_eq!(degs.iter().sum::<usize>(), 4);
        assert!(sp.lines.iter().all(|l| l.shift_eigenvalue.is_some() && l.energy.is_none()));
    }
}
