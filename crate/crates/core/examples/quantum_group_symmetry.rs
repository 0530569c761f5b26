//! Asymptotic generators T± commute with the open transfer matrix, and the
//! resulting multiplets show up as degeneracies p_k(2s+1).

use tl_lab::bethe::eval_lambda;
use tl_lab::solver::{chebyshev_dim, solve_sector_open, SearchConfig};
use tl_lab::symmetry::{check_symmetry, measure_degeneracy_detailed, DEFAULT_PROBE, DEFAULT_RANK_TOL};
use tl_lab::transfer::build_open_transfer;
use tl_lab::{ModelParams, Spin, C64};

fn main() -> tl_lab::Result<()> {
    let p = ModelParams::new(3, Spin::THREE_HALVES, C64::new(0.5, 0.0))?;
    let rep = check_symmetry(&p, &[C64::new(0.8, 0.3), C64::new(1.4, -0.6)])?;
    println!("[T±, t(u)] {:.1e}  lemma 1 {:.1e}  lemma 2 {:.1e}", rep.commutator, rep.lemma1, rep.lemma2);

    let t = build_open_transfer(DEFAULT_PROBE, &p)?;
    for m in 0..=1 {
        for sol in solve_sector_open(&p, m, &SearchConfig::default())? {
            let lam = eval_lambda(DEFAULT_PROBE, &sol, &p)?;
            let d = measure_degeneracy_detailed(&t, lam, DEFAULT_RANK_TOL);
            println!(
                "M={m}: nullity {} (p_{} = {}), ambiguous {}",
                d.nullity,
                3 - 2 * m,
                chebyshev_dim(3 - 2 * m, p.d()),
                d.ambiguous
            );
        }
    }
    Ok(())
}
