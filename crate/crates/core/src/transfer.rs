//! Monodromy and transfer matrices.
//!
//! The auxiliary space is factor 0 of an `aux ⊗ site_1 ⊗ … ⊗ site_N` layout.
//! Operators on that space are kept as [`LocalProduct`]s and only densified
//! after the auxiliary trace.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TlError};
use crate::linalg::{rel_diff, rel_diff_scalar_identity, CMat, CVec, LocalProduct, TensorLayout};
use crate::model::{fusion_big_f, fusion_big_f_closed, w, ModelParams, C64, ONE, ZERO};
use crate::operators::{build_crossing_matrices, build_hamiltonian, build_r, flip, m_diagonal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Open,
    Closed,
}

/// A transfer matrix evaluated at one spectral parameter.
#[derive(Clone, Debug)]
pub struct TransferEval {
    pub u: C64,
    pub matrix: CMat,
    pub kind: ChainKind,
    pub thetas: Vec<C64>,
}

/// `aux ⊗ site_1 ⊗ … ⊗ site_N`.
pub fn aux_layout(params: &ModelParams) -> TensorLayout {
    TensorLayout::uniform(params.d(), params.n_sites() + 1)
}

/// `T_a(u) = R_{aN}(u/θ_N) ⋯ R_{a1}(u/θ_1)`, with site `j` at factor
/// `first_site + j − 1`.
pub fn monodromy_ops(
    u: C64,
    params: &ModelParams,
    layout: &TensorLayout,
    aux: usize,
    first_site: usize,
) -> Result<LocalProduct> {
    let mut prod = LocalProduct::new(layout.clone());
    for (j, &th) in params.thetas().iter().enumerate() {
        prod.then(build_r(u / th, params)?, &[aux, first_site + j]);
    }
    Ok(prod)
}

/// `T̂_a(u) = R_{1a}(uθ_1) ⋯ R_{Na}(uθ_N)`.
pub fn hat_monodromy_ops(
    u: C64,
    params: &ModelParams,
    layout: &TensorLayout,
    aux: usize,
    first_site: usize,
) -> Result<LocalProduct> {
    let mut prod = LocalProduct::new(layout.clone());
    for (j, &th) in params.thetas().iter().enumerate().rev() {
        prod.then(build_r(u * th, params)?, &[first_site + j, aux]);
    }
    Ok(prod)
}

/// Dense `(T₀(u), T̂₀(u))` on `aux ⊗ quantum`.
pub fn build_monodromy(u: C64, params: &ModelParams) -> Result<(CMat, CMat)> {
    let layout = aux_layout(params);
    let t = monodromy_ops(u, params, &layout, 0, 1)?;
    let th = hat_monodromy_ops(u, params, &layout, 0, 1)?;
    Ok((t.to_dense(), th.to_dense()))
}

/// The double-row monodromy `T₀(u) T̂₀(u)` as a product of local operators.
pub fn double_row_ops(u: C64, params: &ModelParams) -> Result<LocalProduct> {
    let layout = aux_layout(params);
    let mut prod = hat_monodromy_ops(u, params, &layout, 0, 1)?;
    prod.then_product(&monodromy_ops(u, params, &layout, 0, 1)?);
    Ok(prod)
}

/// `Σ_j w_j ⟨j|₀ A |j⟩₀` for an operator `A` on `aux ⊗ quantum` given as a
/// product of local operators.
pub(crate) fn weighted_aux_trace(prod: &LocalProduct, weights: &[C64]) -> CMat {
    let layout = prod.layout();
    let s = layout.total() / layout.dims()[0];
    let total = layout.total();
    const CHUNK: usize = 32;
    let starts: Vec<usize> = (0..s).step_by(CHUNK).collect();
    let pieces: Vec<(usize, CMat)> = starts
        .into_par_iter()
        .map(|c0| {
            let c1 = (c0 + CHUNK).min(s);
            let mut out = CMat::zeros(s, c1 - c0);
            for (j, &wj) in weights.iter().enumerate() {
                if wj == ZERO {
                    continue;
                }
                let mut y = CMat::zeros(total, c1 - c0);
                for k in 0..c1 - c0 {
                    y[(j * s + c0 + k, k)] = ONE;
                }
                prod.apply_left(&mut y);
                out += y.rows(j * s, s) * wj;
            }
            (c0, out)
        })
        .collect();
    let mut t = CMat::zeros(s, s);
    for (c0, piece) in pieces {
        t.columns_mut(c0, piece.ncols()).copy_from(&piece);
    }
    t
}

/// Open-chain transfer matrix `t(u) = tr₀ M₀ T₀(u) T̂₀(u)`.
pub fn build_open_transfer(u: C64, params: &ModelParams) -> Result<TransferEval> {
    let prod = double_row_ops(u, params)?;
    Ok(TransferEval {
        u,
        matrix: weighted_aux_trace(&prod, &m_diagonal(params)),
        kind: ChainKind::Open,
        thetas: params.thetas().to_vec(),
    })
}

/// Closed-chain transfer matrix `t(u) = tr₀ T₀(u)`.
pub fn build_closed_transfer(u: C64, params: &ModelParams) -> Result<TransferEval> {
    let layout = aux_layout(params);
    let prod = monodromy_ops(u, params, &layout, 0, 1)?;
    Ok(TransferEval {
        u,
        matrix: weighted_aux_trace(&prod, &vec![ONE; params.d()]),
        kind: ChainKind::Closed,
        thetas: params.thetas().to_vec(),
    })
}

pub fn build_transfer(kind: ChainKind, u: C64, params: &ModelParams) -> Result<TransferEval> {
    match kind {
        ChainKind::Open => build_open_transfer(u, params),
        ChainKind::Closed => build_closed_transfer(u, params),
    }
}

/// `t(u)|ψ⟩` for the open chain without forming `t(u)`.
pub fn apply_open_transfer(u: C64, params: &ModelParams, psi: &CVec) -> Result<CVec> {
    let prod = double_row_ops(u, params)?;
    let weights = m_diagonal(params);
    let s = psi.len();
    let mut out = CVec::zeros(s);
    for (j, &wj) in weights.iter().enumerate() {
        let mut v = CVec::zeros(s * params.d());
        v.rows_mut(j * s, s).copy_from(psi);
        prod.apply_slice(v.as_mut_slice());
        out += v.rows(j * s, s) * wj;
    }
    Ok(out)
}

/// `(α, β)` with `H = α t'(1) + β`.
pub fn hamiltonian_coefficients(params: &ModelParams) -> (C64, C64) {
    let q = params.q();
    let n = params.n_sites() as i32;
    let alpha = -(w(q * q) * w(q).powi(2 * n - 2) * 4.0).inv();
    let beta = w(q) / w(q * q) - w(q * q) / w(q) * (n as f64 / 2.0);
    (alpha, beta)
}

/// `H` recovered as `α t'(1) + β I`, with `t'(1)` from Richardson-extrapolated
/// central differences (step `1e-6`).
pub fn hamiltonian_from_transfer(params: &ModelParams) -> Result<CMat> {
    if !params.is_homogeneous() {
        return Err(TlError::InvalidParams("hamiltonian_from_transfer needs θ_j = 1".into()));
    }
    let h = 1e-6;
    let central = |step: f64| -> Result<CMat> {
        let plus = build_open_transfer(C64::new(1.0 + step, 0.0), params)?.matrix;
        let minus = build_open_transfer(C64::new(1.0 - step, 0.0), params)?.matrix;
        Ok((plus - minus) / C64::new(2.0 * step, 0.0))
    };
    let d_h = central(h)?;
    let d_half = central(h / 2.0)?;
    let derivative = (d_half * C64::new(4.0, 0.0) - d_h) / C64::new(3.0, 0.0);
    let (alpha, beta) = hamiltonian_coefficients(params);
    let dim = params.dim();
    Ok(derivative * alpha + CMat::identity(dim, dim) * beta)
}

/// Max over `i` of the residual of `t(q⁻¹θ_i) t(θ_i) = F(q⁻¹θ_i) I`.
pub fn functional_relation_residual(params: &ModelParams, kind: ChainKind) -> Result<f64> {
    let q = params.q();
    let mut worst: f64 = 0.0;
    for &th in params.thetas() {
        let a = build_transfer(kind, th / q, params)?.matrix;
        let b = build_transfer(kind, th, params)?.matrix;
        let f = match kind {
            ChainKind::Open => fusion_big_f(th / q, params)?,
            ChainKind::Closed => fusion_big_f_closed(th / q, params)?,
        };
        let prod = a * b;
        let scale = f.norm().max(crate::linalg::max_abs(&prod)).max(1e-300);
        let id = CMat::identity(prod.nrows(), prod.ncols()) * f;
        let diff = crate::linalg::max_abs(&(prod - id));
        worst = worst.max(diff / scale);
    }
    Ok(worst)
}

/// Residuals of the two boundary Yang-Baxter equations with `K⁻ = I`,
/// `K⁺ = M`.
pub fn boundary_ybe_residuals(u: C64, v: C64, params: &ModelParams) -> Result<(f64, f64)> {
    let d = params.d();
    let layout = TensorLayout::uniform(d, 2);
    let r = |x: C64| build_r(x, params);
    let r21 = |x: C64| -> Result<CMat> { Ok(flip(&build_r(x, params)?, d)) };

    let lhs = r(u / v)? * r21(u * v)?;
    let rhs = r(u * v)? * r21(u / v)?;
    let right = rel_diff(&lhs, &rhs);

    let (_, m) = build_crossing_matrices(params);
    let m_inv = m.clone().try_inverse().ok_or_else(|| TlError::Singular("M not invertible".into()))?;
    let k1t = layout.embed(&m.transpose(), &[0]);
    let k2t = layout.embed(&m.transpose(), &[1]);
    let m1 = layout.embed(&m, &[0]);
    let m1_inv = layout.embed(&m_inv, &[0]);
    let x = (u * v * params.q() * params.q()).inv();
    let lhs = r(v / u)? * &k1t * &m1_inv * r21(x)? * &m1 * &k2t;
    let rhs = &k2t * &m1 * r(x)? * &m1_inv * &k1t * r21(v / u)?;
    let left = rel_diff(&lhs, &rhs);
    Ok((right, left))
}

/// Residual of `R₁₂(u₁/u₂) T₁(u₁) T₂(u₂) = T₂(u₂) T₁(u₁) R₁₂(u₁/u₂)`.
pub fn fundamental_relation_residual(u1: C64, u2: C64, params: &ModelParams) -> Result<f64> {
    let d = params.d();
    let layout = TensorLayout::uniform(d, params.n_sites() + 2);
    let t1 = monodromy_ops(u1, params, &layout, 0, 2)?.to_dense();
    let t2 = monodromy_ops(u2, params, &layout, 1, 2)?.to_dense();
    let r12 = layout.embed(&build_r(u1 / u2, params)?, &[0, 1]);
    let lhs = &r12 * &t1 * &t2;
    let rhs = &t2 * &t1 * &r12;
    Ok(rel_diff(&lhs, &rhs))
}

/// Residual of `T₀(u) T̂₀(u⁻¹) ∝ I`; returns the residual and the constant.
pub fn inverse_monodromy_residual(u: C64, params: &ModelParams) -> Result<(f64, C64)> {
    let (t, _) = build_monodromy(u, params)?;
    let (_, th) = build_monodromy(u.inv(), params)?;
    let prod = t * th;
    let lambda = prod[(0, 0)];
    Ok((rel_diff_scalar_identity(&prod, lambda), lambda))
}

/// One-site shift `U = P₁₂ P₂₃ ⋯ P_{N−1,N}`.
pub fn shift_operator(params: &ModelParams) -> CMat {
    let layout = TensorLayout::uniform(params.d(), params.n_sites());
    let mut prod = LocalProduct::new(layout);
    let p = crate::linalg::swap(params.d());
    for i in (0..params.n_sites().saturating_sub(1)).rev() {
        prod.then(p.clone(), &[i, i + 1]);
    }
    prod.to_dense()
}

/// Residual of `H = α t'(1) + β I` against the directly built Hamiltonian.
pub fn hamiltonian_consistency(params: &ModelParams) -> Result<f64> {
    let from_t = hamiltonian_from_transfer(params)?;
    let h = build_hamiltonian(params)?;
    Ok(from_t
        .iter()
        .zip(h.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, rel_diff};
    use crate::model::Spin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(n: usize, spin: Spin) -> ModelParams {
        ModelParams::new(n, spin, c(0.5, 0.0)).unwrap()
    }

    #[test]
    fn single_site_monodromy_is_r() {
        let p = params(1, Spin::ONE);
        let u = c(0.8, 0.45);
        let (t, _) = build_monodromy(u, &p).unwrap();
        assert!(rel_diff(&t, &build_r(u, &p).unwrap()) < 1e-15);
    }

    #[test]
    fn fundamental_relation() {
        let p = params(2, Spin::ONE);
        let r = fundamental_relation_residual(c(0.9, 0.3), c(1.2, -0.5), &p).unwrap();
        assert!(r < 1e-9, "{r}");
    }

    #[test]
    fn monodromy_inverse_from_unitarity() {
        for spin in [Spin::HALF, Spin::ONE] {
            let p = params(2, spin);
            let (r, _) = inverse_monodromy_residual(c(0.7, 0.6), &p).unwrap();
            assert!(r < 1e-9, "{r}");
        }
    }

    #[test]
    fn open_transfer_at_one_is_scalar() {
        for spin in [Spin::HALF, Spin::ONE, Spin::THREE_HALVES] {
            for n in 1..=3 {
                let p = params(n, spin);
                let t = build_open_transfer(ONE, &p).unwrap().matrix;
                let expected = p.c() * w(p.q()).powi(2 * n as i32);
                assert!(rel_diff_scalar_identity(&t, expected) < 1e-12);
            }
        }
    }

    #[test]
    fn open_transfer_commutes_and_is_crossing_symmetric() {
        let p = params(3, Spin::ONE);
        let u = c(0.83, 0.37);
        let v = c(1.21, -0.64);
        let tu = build_open_transfer(u, &p).unwrap().matrix;
        let tv = build_open_transfer(v, &p).unwrap().matrix;
        assert!(rel_diff(&(&tu * &tv), &(&tv * &tu)) < 1e-9);
        let crossed = build_open_transfer(-(u * p.q()).inv(), &p).unwrap().matrix;
        assert!(rel_diff(&tu, &crossed) < 1e-9);
    }

    #[test]
    fn apply_matches_dense_transfer() {
        let p = params(3, Spin::ONE);
        let u = c(0.93, 0.41);
        let t = build_open_transfer(u, &p).unwrap().matrix;
        let psi = CVec::from_fn(p.dim(), |i, _| c((i as f64).sin(), (i as f64 * 0.3).cos()));
        let a = apply_open_transfer(u, &p, &psi).unwrap();
        let b = &t * &psi;
        assert!(max_abs(&CMat::from_column_slice(a.len(), 1, (a - b).as_slice())) < 1e-10);
    }

    #[test]
    fn closed_transfer_at_one_is_shift() {
        for spin in [Spin::HALF, Spin::ONE] {
            for n in 2..=3 {
                let p = params(n, spin);
                let t = build_closed_transfer(ONE, &p).unwrap().matrix;
                let u = shift_operator(&p);
                let scale = w(p.q()).powi(n as i32);
                assert!(rel_diff(&t, &(&u * scale)) < 1e-12);
                let t_over = &t / scale;
                let mut pow = CMat::identity(p.dim(), p.dim());
                for _ in 0..n {
                    pow = &pow * &t_over;
                }
                assert!(rel_diff_scalar_identity(&pow, ONE) < 1e-9);
            }
        }
    }

    #[test]
    fn closed_transfer_commutes() {
        let p = params(3, Spin::HALF);
        let tu = build_closed_transfer(c(0.83, 0.37), &p).unwrap().matrix;
        let tv = build_closed_transfer(c(1.21, -0.64), &p).unwrap().matrix;
        assert!(rel_diff(&(&tu * &tv), &(&tv * &tu)) < 1e-9);
    }

    #[test]
    fn hamiltonian_from_derivative() {
        for (n, spin) in [(2, Spin::HALF), (3, Spin::ONE)] {
            let p = params(n, spin);
            let r = hamiltonian_consistency(&p).unwrap();
            assert!(r < 1e-6, "N={n} s={spin}: {r}");
        }
    }

    #[test]
    fn empty_sector_energy_offset() {
        // Λ(u) for M = 0 gives E = α Λ'(1) + β = 0.
        use crate::bethe::{eval_lambda, BetheSolution};
        let p = params(3, Spin::HALF);
        let sol = BetheSolution::open(vec![]);
        let h = 1e-5;
        let d = (eval_lambda(c(1.0 + h, 0.0), &sol, &p).unwrap() - eval_lambda(c(1.0 - h, 0.0), &sol, &p).unwrap())
            / (2.0 * h);
        let (alpha, beta) = hamiltonian_coefficients(&p);
        assert!((alpha * d + beta).norm() < 1e-7);
    }

    #[test]
    fn functional_relations_with_inhomogeneities() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (n, spin) in [(2, Spin::HALF), (3, Spin::HALF), (2, Spin::ONE), (3, Spin::ONE)] {
            let base = params(n, spin);
            let p = base.clone().with_thetas(base.random_generic_thetas(&mut rng)).unwrap();
            let open = functional_relation_residual(&p, ChainKind::Open).unwrap();
            assert!(open < 1e-8, "open N={n} s={spin}: {open}");
            let closed = functional_relation_residual(&p, ChainKind::Closed).unwrap();
            assert!(closed < 1e-8, "closed N={n} s={spin}: {closed}");
        }
    }

    #[test]
    fn boundary_yang_baxter() {
        for spin in [Spin::HALF, Spin::ONE, Spin::THREE_HALVES] {
            let p = params(2, spin);
            let (right, left) = boundary_ybe_residuals(c(0.9, 0.2), c(1.3, -0.7), &p).unwrap();
            assert!(right < 1e-10 && left < 1e-10, "{right} {left}");
        }
    }
}
