//! Open and closed transfer matrices: commutativity, crossing, the
//! Hamiltonian as a logarithmic derivative and the fusion relation with
//! random inhomogeneities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tl_lab::linalg::rel_diff;
use tl_lab::transfer::{
    build_closed_transfer, build_open_transfer, functional_relation_residual, hamiltonian_consistency, ChainKind,
};
use tl_lab::{ModelParams, Spin, C64};

fn main() -> tl_lab::Result<()> {
    let p = ModelParams::new(3, Spin::ONE, C64::new(0.5, 0.0))?;
    let (u, v) = (C64::new(0.83, 0.37), C64::new(1.21, -0.64));

    let tu = build_open_transfer(u, &p)?.matrix;
    let tv = build_open_transfer(v, &p)?.matrix;
    println!("open   [t(u), t(v)]        {:.2e}", rel_diff(&(&tu * &tv), &(&tv * &tu)));
    let crossed = build_open_transfer(-(u * p.q()).inv(), &p)?.matrix;
    println!("open   t(u) − t(−1/(qu))   {:.2e}", rel_diff(&tu, &crossed));

    let cu = build_closed_transfer(u, &p)?.matrix;
    let cv = build_closed_transfer(v, &p)?.matrix;
    println!("closed [t(u), t(v)]        {:.2e}", rel_diff(&(&cu * &cv), &(&cv * &cu)));

    println!("max |H − (α t'(1) + β)|    {:.2e}", hamiltonian_consistency(&p)?);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let thetas = p.random_generic_thetas(&mut rng);
    let inhom = p.clone().with_thetas(thetas)?;
    for kind in [ChainKind::Open, ChainKind::Closed] {
        println!("{kind:?} t(θ/q) t(θ) = F       {:.2e}", functional_relation_residual(&inhom, kind)?);
    }
    Ok(())
}
