//! Algebraic Bethe ansatz: off-shell action of t(u) on B(v₁)…B(v_M)|0⟩,
//! highest-weight property, scalar products and norms.

use tl_lab::aba::{
    check_highest_weight, direct_scalar_product, norm_squared, offshell_residual, scalar_product_det,
};
use tl_lab::report::format_sig;
use tl_lab::solver::{solve_sector_open, SearchConfig};
use tl_lab::{ModelParams, Spin, C64};

fn main() -> tl_lab::Result<()> {
    let p = ModelParams::new(4, Spin::ONE, C64::new(0.5, 0.0))?;
    let v = [C64::new(0.9, 0.4), C64::new(1.3, -0.7)];
    let u = C64::new(0.7, 1.1);
    println!("off-shell residual {:.1e}", offshell_residual(u, &v, &p)?);

    for sol in solve_sector_open(&p, 2, &SearchConfig::default())? {
        let hw = check_highest_weight(&sol, &p)?;
        let formula = scalar_product_det(&sol.roots, &v, &p)?;
        let direct = direct_scalar_product(&sol.roots, &v, &p)?;
        let norm = norm_squared(&sol, &p)?;
        let norm_direct = direct_scalar_product(&sol.roots, &sol.roots, &p)?;
        let roots: Vec<String> = sol.roots.iter().map(|z| format_sig(*z, 6)).collect();
        println!("roots {}", roots.join(", "));
        println!("  highest weight {:.1e}", hw.max_residual());
        println!("  ⟨u|v⟩ {} vs {} (cond {:.1e})", format_sig(formula.value, 8), format_sig(direct, 8), formula.condition);
        println!("  ⟨u|u⟩ {} vs {}", format_sig(norm, 8), format_sig(norm_direct, 8));
    }
    Ok(())
}
