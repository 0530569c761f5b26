//! Solve every open-chain sector, measure degeneracies against the transfer
//! matrix and compare energies with the Hamiltonian spectrum.

use tl_lab::linalg::eigenvalues;
use tl_lab::operators::build_hamiltonian;
use tl_lab::report::{compute_spectrum, format_sig, SpectrumOptions};
use tl_lab::solver::SearchConfig;
use tl_lab::transfer::ChainKind;
use tl_lab::{ModelParams, Spin, C64};

fn main() -> tl_lab::Result<()> {
    let p = ModelParams::new(4, Spin::ONE, C64::new(0.5, 0.0))?;
    let sp = compute_spectrum(&p, ChainKind::Open, None, None, &SearchConfig::default(), &SpectrumOptions::default())?;
    let h_ev = eigenvalues(&build_hamiltonian(&p)?);

    println!("{:<3} {:<44} {:>4} {:>4} {:>12} {:>10}", "M", "roots", "D", "p_k", "energy", "|ΔE|");
    for line in &sp.lines {
        let roots: Vec<String> = line.solution.roots.iter().map(|z| format_sig(*z, 6)).collect();
        let e = line.energy.unwrap();
        let gap = h_ev.iter().map(|x| (x - e).norm()).fold(f64::MAX, f64::min);
        println!(
            "{:<3} {:<44} {:>4} {:>4} {:>12.6} {:>10.1e}",
            line.solution.m(),
            roots.join("; "),
            line.degeneracy_measured,
            line.degeneracy_predicted.unwrap(),
            e.re,
            gap
        );
    }
    for c in &sp.census {
        println!("M = {}: found {} of ν = {:?}", c.m, c.found, c.expected);
    }
    println!("Σ D = {} of {}; trace identity {:.1e}", sp.checks.total_degeneracy, sp.checks.dimension, sp.checks.trace_residual.unwrap());
    Ok(())
}
