use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::model::{Spin, C64};
use crate::transfer::ChainKind;

use super::{OutputFormat, Spectrum, SpectrumReport};

/// `x` with `digits` significant digits, trailing zeros dropped.
fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Paper-style `a+bi` with `digits` significant digits per component;
/// components below `1e-12` relative to the modulus are dropped.
pub fn format_sig(z: C64, digits: usize) -> String {
    let scale = z.norm();
    let re = (z.re.abs() > 1e-12 * scale).then_some(z.re);
    let im = (z.im.abs() > 1e-12 * scale).then_some(z.im);
    match (re, im) {
        (None, None) => "0".into(),
        (Some(r), None) => sig(r, digits),
        (None, Some(i)) => format!("{}i", sig(i, digits)),
        (Some(r), Some(i)) => {
            let im = sig(i, digits);
            if im.starts_with('-') {
                format!("{}{im}i", sig(r, digits))
            } else {
                format!("{}+{im}i", sig(r, digits))
            }
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `x` as `p/q` with `q ≤ 12` when within `tol`.
fn small_rational(x: f64, tol: f64) -> Option<(i64, i64)> {
    (1..=12i64).find_map(|den| {
        let num = (x * den as f64).round();
        ((x - num / den as f64).abs() <= tol && num.abs() < 1e6).then(|| {
            let g = gcd(num as i64, den).max(1);
            (num as i64 / g, den / g)
        })
    })
}

fn fmt_rational((p, q): (i64, i64)) -> String {
    if q == 1 {
        p.to_string()
    } else {
        format!("{p}/{q}")
    }
}

/// `e^{2πik/n}` in lowest terms with the angle in `(−π, π]`.
fn fmt_phase(k: i64, n: i64) -> String {
    let (mut k, mut n) = (k, n);
    let g = gcd(k, n).max(1);
    k /= g;
    n /= g;
    // angle = 2πk/n = π(2k)/n
    let (mut a, mut b) = (2 * k, n);
    let g = gcd(a, b).max(1);
    a /= g;
    b /= g;
    if a > b {
        a -= 2 * b;
    }
    match (a, b) {
        (0, _) => "1".into(),
        (1, 1) => "-1".into(),
        (1, 2) => "i".into(),
        (-1, 2) => "-i".into(),
        (1, b) => format!("e^{{iπ/{b}}}"),
        (-1, b) => format!("e^{{-iπ/{b}}}"),
        (a, b) => format!("e^{{{a}iπ/{b}}}"),
    }
}

/// Exact rendering when `z` is within `1e-9` of a positive rational times a
/// root of unity of small order, or of a Gaussian rational; otherwise six
/// significant digits.
pub fn format_kappa(z: C64) -> String {
    const TOL: f64 = 1e-9;
    for n in [1i64, 2, 4, 3, 6, 8, 12] {
        for k in 0..n {
            let ratio = z * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / n as f64);
            if ratio.im.abs() > TOL || ratio.re <= TOL {
                continue;
            }
            let Some(r) = small_rational(ratio.re, TOL) else { continue };
            let phase = fmt_phase(k, n);
            return match (r, phase.as_str()) {
                ((1, 1), _) => phase,
                (_, "1") => fmt_rational(r),
                (_, "-1") => format!("-{}", fmt_rational(r)),
                ((p, 1), "i") => format!("{p}i"),
                ((p, 1), "-i") => format!("-{p}i"),
                _ => format!("({}){phase}", fmt_rational(r)),
            };
        }
    }
    if let (Some(a), Some(b)) = (small_rational(z.re, TOL), small_rational(z.im, TOL)) {
        let im = fmt_rational(b);
        return if im.starts_with('-') {
            format!("{}{im}i", fmt_rational(a))
        } else {
            format!("{}+{im}i", fmt_rational(a))
        };
    }
    format_sig(z, 6)
}

/// Spectral lines merged across spectra with equal root sets and twists.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedRow {
    pub m: usize,
    pub roots: Vec<C64>,
    pub kappa: Option<C64>,
    /// One entry per spectrum; `None` when the line is absent there.
    pub degeneracies: Vec<Option<usize>>,
    pub residual_norm: f64,
}

fn same_roots(a: &[C64], b: &[C64], kind: ChainKind, q: C64) -> bool {
    super::roots_match(a, b, kind, q, 1e-8)
}

pub fn merge_lines(spectra: &[Spectrum]) -> Vec<MergedRow> {
    let mut rows: Vec<MergedRow> = Vec::new();
    for (si, sp) in spectra.iter().enumerate() {
        for line in &sp.lines {
            let sol = &line.solution;
            let kappa = (sp.kind == ChainKind::Closed).then_some(sol.kappa);
            let existing = rows.iter_mut().find(|r| {
                r.m == sol.m()
                    && r.degeneracies[si].is_none()
                    && same_roots(&sol.roots, &r.roots, sp.kind, sp.q)
                    && match (r.kappa, kappa) {
                        (Some(a), Some(b)) => (a - b).norm() < 1e-8,
                        (None, None) => true,
                        _ => false,
                    }
            });
            match existing {
                Some(r) => {
                    r.degeneracies[si] = Some(line.degeneracy_measured);
                    r.residual_norm = r.residual_norm.max(sol.residual_norm);
                }
                None => {
                    let mut degeneracies = vec![None; spectra.len()];
                    degeneracies[si] = Some(line.degeneracy_measured);
                    rows.push(MergedRow { m: sol.m(), roots: sol.roots.clone(), kappa, degeneracies, residual_norm: sol.residual_norm });
                }
            }
        }
    }
    rows.sort_by_key(|r| r.m);
    rows
}

fn spin_label(spectra: &[Spectrum], si: usize) -> String {
    let spins: Vec<Spin> = spectra.iter().map(|s| s.spin).collect();
    let sp = &spectra[si];
    if spins.iter().filter(|&&s| s == sp.spin).count() > 1 {
        format!("s={} N={}", sp.spin, sp.n_sites)
    } else {
        format!("s={}", sp.spin)
    }
}

fn roots_cell(roots: &[C64]) -> String {
    roots.iter().map(|z| format_sig(*z, 6)).collect::<Vec<_>>().join("; ")
}

fn render_csv(report: &SpectrumReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(suite) = &report.suite {
        w.write_record(["suite", "check", "residual", "tolerance", "passed"])?;
        for e in &suite.entries {
            w.write_record([suite.suite.clone(), e.name.clone(), format!("{:e}", e.residual), format!("{:e}", e.tol), e.passed().to_string()])?;
        }
    } else if !report.representations.is_empty() {
        let mut header = vec!["k".to_string(), "multiplicity".into()];
        header.extend(report.spectra.iter().map(|s| format!("dim s={}", s.spin)));
        w.write_record(&header)?;
        for r in &report.representations {
            let mut rec = vec![r.k.to_string(), r.multiplicity.to_string()];
            rec.extend(r.dims.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
    } else {
        let spectra = &report.spectra;
        let mut header = vec!["M".to_string(), "roots".into(), "kappa".into()];
        header.extend((0..spectra.len()).map(|si| format!("D {}", spin_label(spectra, si))));
        header.push("residual_norm".into());
        w.write_record(&header)?;
        for row in merge_lines(spectra) {
            let mut rec = vec![row.m.to_string(), roots_cell(&row.roots), row.kappa.map(format_kappa).unwrap_or_default()];
            rec.extend(row.degeneracies.iter().map(|d| d.map(|d| d.to_string()).unwrap_or_default()));
            rec.push(format!("{:e}", row.residual_norm));
            w.write_record(&rec)?;
        }
        let mut totals = vec!["total".to_string(), String::new(), String::new()];
        totals.extend(spectra.iter().map(|s| s.checks.total_degeneracy.to_string()));
        totals.push(String::new());
        w.write_record(&totals)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn pad_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s}{}", " ".repeat(widths[c] - s.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

fn render_text(report: &SpectrumReport) -> String {
    let mut out = String::new();
    let c = &report.config;
    let title = match (c.table, &c.suite) {
        (Some(t), _) => format!("table {t}"),
        (_, Some(s)) => format!("suite {s} (N={}, s={})", c.n_sites, c.spin),
        _ => format!("{:?} chain, N={}, s={}, q={}", c.chain, c.n_sites, c.spin, format_sig(c.q, 6)).to_lowercase(),
    };
    let _ = writeln!(out, "{title}\n");
    if let Some(suite) = &report.suite {
        let mut rows = vec![vec!["check".to_string(), "residual".into(), "tolerance".into(), "".into()]];
        for e in &suite.entries {
            rows.push(vec![e.name.clone(), format!("{:.3e}", e.residual), format!("{:.0e}", e.tol), if e.passed() { "ok" } else { "FAIL" }.into()]);
        }
        out.push_str(&pad_table(&rows));
    } else if !report.representations.is_empty() {
        let mut header = vec!["k".to_string(), "ν_k".into()];
        header.extend(report.spectra.iter().map(|s| format!("dim s={}", s.spin)));
        let mut rows = vec![header];
        for r in &report.representations {
            let mut rec = vec![r.k.to_string(), r.multiplicity.to_string()];
            rec.extend(r.dims.iter().map(u64::to_string));
            rows.push(rec);
        }
        out.push_str(&pad_table(&rows));
    } else {
        let spectra = &report.spectra;
        let closed = spectra.iter().any(|s| s.kind == ChainKind::Closed);
        let mut header = vec!["M".to_string(), "roots".into()];
        if closed {
            header.push("κ".into());
        }
        header.extend((0..spectra.len()).map(|si| format!("D {}", spin_label(spectra, si))));
        let mut rows = vec![header];
        for row in merge_lines(spectra) {
            let mut rec = vec![row.m.to_string(), if row.roots.is_empty() { "-".into() } else { roots_cell(&row.roots) }];
            if closed {
                rec.push(row.kappa.map(format_kappa).unwrap_or_default());
            }
            rec.extend(row.degeneracies.iter().map(|d| d.map(|d| d.to_string()).unwrap_or_else(|| ".".into())));
            rows.push(rec);
        }
        let mut totals = vec!["total".to_string(), String::new()];
        if closed {
            totals.push(String::new());
        }
        totals.extend(spectra.iter().map(|s| s.checks.total_degeneracy.to_string()));
        rows.push(totals);
        out.push_str(&pad_table(&rows));
    }
    let failures = report.failures();
    if failures.is_empty() {
        let _ = writeln!(out, "\nall checks pass");
    } else {
        let _ = writeln!(out, "\n{} mismatches:", failures.len());
        for f in failures {
            let _ = writeln!(out, "  {f}");
        }
    }
    out
}

pub fn render_report(report: &SpectrumReport, format: OutputFormat) -> Result<String> {
    Ok(match format {
        OutputFormat::Json => serde_json::to_string_pretty(report)? + "\n",
        OutputFormat::Csv => render_csv(report)?,
        OutputFormat::Text => render_text(report),
    })
}

/// Writes the report to `path`, or to stdout when `None`.
pub fn emit_report(report: &SpectrumReport, format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let body = render_report(report, format)?;
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(())
}
