//! Temperley-Lieb generators on (C^{2s+1})^{⊗N} and the Hamiltonian built
//! from them.

use tl_lab::linalg::{cluster_values, eigenvalues, rel_diff};
use tl_lab::operators::{build_hamiltonian, build_x, embed_site_op};
use tl_lab::report::format_sig;
use tl_lab::{ModelParams, Spin, C64};

fn main() -> tl_lab::Result<()> {
    let p = ModelParams::new(3, Spin::ONE, C64::new(0.5, 0.0))?;
    println!("s = {}, Q = {}, c = {}", p.spin(), format_sig(p.big_q(), 6), format_sig(p.c(), 6));

    let x = build_x(&p);
    let x1 = embed_site_op(&x, 1, &p)?;
    let x2 = embed_site_op(&x, 2, &p)?;
    println!("|X1² − cX1|      {:.2e}", rel_diff(&(&x1 * &x1), &(&x1 * p.c())));
    println!("|X1X2X1 − X1|    {:.2e}", rel_diff(&(&x1 * &x2 * &x1), &x1));
    println!("|X2X1X2 − X2|    {:.2e}", rel_diff(&(&x2 * &x1 * &x2), &x2));

    let h = build_hamiltonian(&p)?;
    let ev = eigenvalues(&h);
    println!("H spectrum ({} states), value × multiplicity:", ev.len());
    let mut levels = cluster_values(&ev, 1e-8);
    levels.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
    for (e, mult) in levels {
        println!("  {:>10} × {mult}", format_sig(e, 6));
    }
    Ok(())
}
