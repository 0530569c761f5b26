//! Open-chain Bethe roots and eigenvalues do not depend on s at fixed q;
//! closed-chain roots do.

use tl_lab::bethe::eval_lambda;
use tl_lab::report::format_sig;
use tl_lab::solver::{solve_sector_closed, solve_sector_open, SearchConfig};
use tl_lab::{ModelParams, Spin, C64};

fn main() -> tl_lab::Result<()> {
    let q = C64::new(0.5, 0.0);
    let cfg = SearchConfig::default();
    let probe = C64::new(0.77, 0.21);
    println!("open N=4, M=1:");
    for spin in [Spin::HALF, Spin::ONE, Spin::THREE_HALVES] {
        let p = ModelParams::new(4, spin, q)?;
        let sols = solve_sector_open(&p, 1, &cfg)?;
        let cells: Vec<String> = sols
            .iter()
            .map(|s| format!("{} Λ={}", format_sig(s.roots[0], 8), format_sig(eval_lambda(probe, s, &p).unwrap(), 8)))
            .collect();
        println!("  s={spin}: {}", cells.join(" | "));
    }
    println!("closed N=3, M=1:");
    for spin in [Spin::HALF, Spin::ONE] {
        let p = ModelParams::new(3, spin, q)?;
        let roots: Vec<String> = (0..3)
            .flat_map(|l| solve_sector_closed(&p, 1, l, &cfg).unwrap())
            .map(|s| format_sig(s.roots[0], 6))
            .collect();
        println!("  s={spin}: {}", roots.join(", "));
    }
    Ok(())
}
