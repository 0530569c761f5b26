//! Algebraic Bethe ansatz: double-row operators, Bethe vectors, the off-shell
//! action of the transfer matrix, and determinant formulas for scalar
//! products.

use serde::{Deserialize, Serialize};

use crate::bethe::{eval_lambda, lambda_partial, BetheSolution, ChainKind};
use crate::error::{domain, Result, TlError};
use crate::linalg::{bilinear, condition_number, determinant, max_abs, vec_norm, CMat, CVec};
use crate::model::{w, ModelParams, C64, ONE, ZERO};
use crate::operators::{m_diagonal, Asymptote};
use crate::symmetry::{generators, SymmetryReport};
use crate::transfer::{aux_layout, double_row_ops};

/// The `(2s+1) × (2s+1)` grid of quantum-space blocks of `T₀(u)T̂₀(u)`.
#[derive(Clone, Debug)]
pub struct DoubleRowOperators {
    pub u: C64,
    pub blocks: Vec<Vec<CMat>>,
}

impl DoubleRowOperators {
    pub fn d(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize, j: usize) -> &CMat {
        &self.blocks[i][j]
    }

    /// Creation operator, top-right block.
    pub fn b(&self) -> &CMat {
        &self.blocks[0][self.d() - 1]
    }

    /// Annihilation operator, bottom-left block.
    pub fn c(&self) -> &CMat {
        &self.blocks[self.d() - 1][0]
    }

    /// Rebuilds the full operator on `aux ⊗ quantum`.
    pub fn reassemble(&self) -> CMat {
        let d = self.d();
        let s = self.blocks[0][0].nrows();
        let mut out = CMat::zeros(d * s, d * s);
        for i in 0..d {
            for j in 0..d {
                out.view_mut((i * s, j * s), (s, s)).copy_from(&self.blocks[i][j]);
            }
        }
        out
    }
}

pub fn extract_double_row(u: C64, params: &ModelParams) -> Result<DoubleRowOperators> {
    let layout = aux_layout(params);
    let full = double_row_ops(u, params)?.to_dense();
    let d = params.d();
    Ok(DoubleRowOperators {
        u,
        blocks: (0..d)
            .map(|i| (0..d).map(|j| layout.leading_block(&full, i, j)).collect())
            .collect(),
    })
}

/// A Bethe vector `Π B(v_k)|0⟩` or its dual `⟨0| Π C(v_k)` (stored as a
/// column).
#[derive(Clone, Debug)]
pub struct BetheVector {
    pub values: Vec<C64>,
    pub vector: CVec,
    pub dual: bool,
}

impl BetheVector {
    pub fn norm(&self) -> f64 {
        vec_norm(&self.vector)
    }

    /// True when every entry is exactly zero.
    pub fn vanishes(&self) -> bool {
        self.vector.iter().all(|z| *z == ZERO)
    }
}

/// `e₁^{⊗N}`; the dual is the same array read as a row.
pub fn reference_state(params: &ModelParams, _dual: bool) -> CVec {
    let mut v = CVec::zeros(params.dim());
    v[0] = ONE;
    v
}

/// `B(u)ψ`.
pub fn apply_b(u: C64, params: &ModelParams, psi: &CVec) -> Result<CVec> {
    let prod = double_row_ops(u, params)?;
    let s = psi.len();
    let d = params.d();
    let mut v = vec![ZERO; s * d];
    v[(d - 1) * s..].copy_from_slice(psi.as_slice());
    prod.apply_slice(&mut v);
    Ok(CVec::from_column_slice(&v[..s]))
}

/// `(φᵀ C(u))ᵀ`.
pub fn apply_c_dual(u: C64, params: &ModelParams, phi: &CVec) -> Result<CVec> {
    let prod = double_row_ops(u, params)?;
    let s = phi.len();
    let d = params.d();
    let mut v = vec![ZERO; s * d];
    v[(d - 1) * s..].copy_from_slice(phi.as_slice());
    prod.apply_transpose_slice(&mut v);
    Ok(CVec::from_column_slice(&v[..s]))
}

/// `(φᵀ t(u))ᵀ` for the open chain.
pub fn apply_open_transfer_dual(u: C64, params: &ModelParams, phi: &CVec) -> Result<CVec> {
    let prod = double_row_ops(u, params)?;
    let s = phi.len();
    let mut out = CVec::zeros(s);
    for (j, &wj) in m_diagonal(params).iter().enumerate() {
        let mut v = CVec::zeros(s * params.d());
        v.rows_mut(j * s, s).copy_from(phi);
        prod.apply_transpose_slice(v.as_mut_slice());
        out += v.rows(j * s, s) * wj;
    }
    Ok(out)
}

/// `B(v₁)⋯B(v_M)|0⟩`, or `⟨0|C(v₁)⋯C(v_M)` when `dual`.
pub fn build_bethe_vector(values: &[C64], params: &ModelParams, dual: bool) -> Result<BetheVector> {
    let mut v = reference_state(params, dual);
    if dual {
        for &u in values {
            v = apply_c_dual(u, params, &v)?;
        }
    } else {
        for &u in values.iter().rev() {
            v = apply_b(u, params, &v)?;
        }
    }
    Ok(BetheVector { values: values.to_vec(), vector: v, dual })
}

/// The unwanted-term coefficients `λ_k(u; v₁…v_M)` of the off-shell action.
pub fn offshell_lambdas(u: C64, values: &[C64], params: &ModelParams) -> Result<Vec<C64>> {
    let q = params.q();
    let n2 = 2 * params.n_sites() as i32;
    (0..values.len())
        .map(|k| {
            let uk = values[k];
            let den = w(u / uk) * w(u * uk * q) * w(uk * uk * q);
            if den.norm() < crate::bethe::POLE_TOL {
                return Err(domain("off-shell coefficient at a pole"));
            }
            let pref = -w(q) * w(u * u * q * q) * w(uk * uk) / den;
            let mut first = w(uk * q).powi(n2);
            let mut second = w(uk).powi(n2);
            for (j, &uj) in values.iter().enumerate() {
                if j == k {
                    continue;
                }
                let common = w(uk / uj) * w(uk * uj * q);
                first *= w(uk / (uj * q)) * w(uk * uj) / common;
                second *= w(uk * q / uj) * w(uk * uj * q * q) / common;
            }
            Ok(pref * (first - second))
        })
        .collect()
}

fn offshell_check(u: C64, values: &[C64], params: &ModelParams, dual: bool) -> Result<f64> {
    if values.iter().any(|v| (v - u).norm() < crate::bethe::POLE_TOL) {
        return Err(domain("spectral parameter coincides with a Bethe value"));
    }
    let state = build_bethe_vector(values, params, dual)?;
    let t_state = if dual {
        apply_open_transfer_dual(u, params, &state.vector)?
    } else {
        crate::transfer::apply_open_transfer(u, params, &state.vector)?
    };
    let lam = eval_lambda(u, &BetheSolution::open(values.to_vec()), params)?;
    let mut rest = &t_state - &state.vector * lam;
    for (k, lk) in offshell_lambdas(u, values, params)?.into_iter().enumerate() {
        let mut swapped = values.to_vec();
        swapped[k] = u;
        rest -= build_bethe_vector(&swapped, params, dual)?.vector * lk;
    }
    let scale = vec_norm(&t_state).max(vec_norm(&state.vector) * lam.norm());
    if scale == 0.0 {
        return Err(TlError::UndefinedState("Bethe vector vanishes".into()));
    }
    Ok(vec_norm(&rest) / scale)
}

/// `‖t(u)|v⟩ − Λ|v⟩ − Σ λ_k |…u…⟩‖ / ‖t(u)|v⟩‖`.
pub fn offshell_residual(u: C64, values: &[C64], params: &ModelParams) -> Result<f64> {
    offshell_check(u, values, params, false)
}

/// The same identity for the dual vector acted on from the right.
pub fn offshell_residual_dual(u: C64, values: &[C64], params: &ModelParams) -> Result<f64> {
    offshell_check(u, values, params, true)
}

/// Highest-weight residuals of an on-shell Bethe vector under `T⁺`:
/// `‖T⁺_{ij}Ψ‖` for `i > j` and `‖T⁺_{ii}Ψ − h_iΨ‖` with Rayleigh-quotient
/// `h_i`, each relative to `‖T⁺_{ij}‖ ‖Ψ‖`.
pub fn check_highest_weight(solution: &BetheSolution, params: &ModelParams) -> Result<SymmetryReport> {
    if solution.kind != ChainKind::Open {
        return Err(TlError::InvalidParams("highest-weight check is for the open chain".into()));
    }
    let psi = build_bethe_vector(&solution.roots, params, false)?;
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(TlError::UndefinedState("Bethe vector vanishes".into()));
    }
    let gens = generators(Asymptote::Plus, params);
    let mut report = SymmetryReport::default();
    for (i, row) in gens.iter().enumerate() {
        for (j, g) in row.iter().enumerate().take(i + 1) {
            let gpsi = g * &psi.vector;
            let scale = max_abs(g).max(1.0) * norm;
            let res = if i == j {
                let h = psi.vector.dotc(&gpsi) / psi.vector.dotc(&psi.vector);
                vec_norm(&(&gpsi - &psi.vector * h)) / scale
            } else {
                vec_norm(&gpsi) / scale
            };
            report.highest_weight.push((format!("T+[{i}][{j}]"), res));
        }
    }
    Ok(report)
}

/// Measured `h_i` of an on-shell vector.
pub fn highest_weights(solution: &BetheSolution, params: &ModelParams) -> Result<Vec<C64>> {
    let psi = build_bethe_vector(&solution.roots, params, false)?;
    let gens = generators(Asymptote::Plus, params);
    Ok((0..params.d())
        .map(|i| psi.vector.dotc(&(&gens[i][i] * &psi.vector)) / psi.vector.dotc(&psi.vector))
        .collect())
}

/// A determinant-formula value with the condition numbers of its matrices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarProduct {
    #[serde(with = "crate::cser")]
    pub value: C64,
    pub condition: f64,
}

fn big_q_2s(params: &ModelParams) -> C64 {
    params.big_q().powi(params.spin().twice() as i32)
}

/// `⟨u₁…u_M | v₁…v_M⟩` from the determinant formula, for on-shell `u`.
pub fn scalar_product_det(on_shell: &[C64], off_shell: &[C64], params: &ModelParams) -> Result<ScalarProduct> {
    let m = on_shell.len();
    if off_shell.len() != m {
        return Err(TlError::InvalidParams("on-shell and off-shell sets differ in size".into()));
    }
    if m == 0 {
        return Ok(ScalarProduct { value: ONE, condition: 1.0 });
    }
    let q = params.q();
    let n2 = 2 * params.n_sites() as i32;
    let mut pref = (big_q_2s(params) * 2.0).inv().powi(m as i32);
    for i in 0..m {
        let (ui, vi) = (on_shell[i], off_shell[i]);
        pref *= w(ui).powi(n2) * ui * w(ui * ui) / (w(ui * ui * q) * w(vi * vi * q * q));
        for &uj in &on_shell[..i] {
            pref *= w(ui * uj * q * q) / w(ui * uj);
        }
    }
    let mut num = CMat::zeros(m, m);
    let mut den = CMat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            num[(i, j)] = lambda_partial(off_shell[j], on_shell, i, params)?;
            let c = w(off_shell[i] / on_shell[j]) * w(off_shell[i] * on_shell[j] * q);
            if c.norm() < crate::bethe::POLE_TOL {
                return Err(domain("Cauchy denominator has a pole"));
            }
            den[(i, j)] = c.inv();
        }
    }
    let dd = determinant(&den);
    if dd.norm() == 0.0 || !dd.is_finite() {
        return Err(domain("singular denominator determinant"));
    }
    Ok(ScalarProduct {
        value: pref * determinant(&num) / dd,
        condition: condition_number(&num).max(condition_number(&den)),
    })
}

/// The Gaudin-type matrix `G`.
pub fn gaudin_matrix(roots: &[C64], params: &ModelParams) -> CMat {
    let q = params.q();
    let m = roots.len();
    let n = params.n_sites() as f64;
    CMat::from_fn(m, m, |i, j| {
        let (ui, uj) = (roots[i], roots[j]);
        let mut entry = ONE;
        for (k, &uk) in roots.iter().enumerate() {
            if k != i && k != j {
                entry *= w(uj * q / uk) * w(uj * uk * q * q);
            }
        }
        entry /= w(uj / (ui * q)) * w(ui * uj);
        if i != j {
            return entry;
        }
        let mut sum = ZERO;
        for (k, &uk) in roots.iter().enumerate() {
            if k != i {
                sum += (w(ui / (q * uk)) * w(ui * q / uk)).inv() + (w(ui * uk) * w(ui * uk * q * q)).inv();
            }
        }
        let bracket = -w(q) * 2.0 * n / (w(ui) * w(ui * q)) + w(q * q) * sum;
        entry * w(q) * w(ui * ui) / (w(q * q) * w(ui * ui * q).powi(2)) * bracket
    })
}

/// `⟨u|u⟩` from the Gaudin-type determinant.
pub fn norm_squared(solution: &BetheSolution, params: &ModelParams) -> Result<C64> {
    let u = &solution.roots;
    let m = u.len();
    if m == 0 {
        return Ok(ONE);
    }
    let q = params.q();
    let n4 = 4 * params.n_sites() as i32;
    let mut pref = (w(q) * w(-q * q) / big_q_2s(params)).powi(m as i32);
    for i in 0..m {
        pref *= w(u[i]).powi(n4) * w(u[i] * u[i]).powi(2);
        for j in 0..i {
            let (ui, uj) = (u[i], u[j]);
            pref *= w(ui * uj * q * q) / (w(uj / ui) * w(ui / uj) * w(ui * uj) * w(ui * uj * q).powi(2));
        }
    }
    let value = pref * determinant(&gaudin_matrix(u, params));
    if value.is_finite() {
        Ok(value)
    } else {
        Err(domain("norm formula hit a singular configuration"))
    }
}

/// `⟨0|C(u₁)⋯C(u_M) B(v₁)⋯B(v_M)|0⟩` by direct contraction.
pub fn direct_scalar_product(on_shell: &[C64], off_shell: &[C64], params: &ModelParams) -> Result<C64> {
    let left = build_bethe_vector(on_shell, params, true)?;
    let right = build_bethe_vector(off_shell, params, false)?;
    Ok(bilinear(&left.vector, &right.vector))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_diff;
    use crate::model::Spin;
    use crate::operators::build_hamiltonian;
    use crate::solver::{solve_sector_open, SearchConfig};
    use crate::transfer::{apply_open_transfer, build_open_transfer};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(n: usize, spin: Spin) -> ModelParams {
        ModelParams::new(n, spin, c(0.5, 0.0)).unwrap()
    }

    fn cfg() -> SearchConfig {
        SearchConfig { seeds: 300, ..SearchConfig::default() }
    }

    fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
        C64::from_polar(rng.random_range(0.7..1.5), rng.random_range(0.0..std::f64::consts::TAU))
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn double_row_blocks() {
        let p = params(2, Spin::ONE);
        let u = c(0.9, 0.35);
        let ops = extract_double_row(u, &p).unwrap();
        let full = double_row_ops(u, &p).unwrap().to_dense();
        assert!(rel_diff(&ops.reassemble(), &full) == 0.0);
        let mut t = CMat::zeros(p.dim(), p.dim());
        for (j, wj) in m_diagonal(&p).into_iter().enumerate() {
            t += ops.block(j, j) * wj;
        }
        assert!(rel_diff(&t, &build_open_transfer(u, &p).unwrap().matrix) < 1e-12);
    }

    #[test]
    fn b_operators_commute_on_reference() {
        let p = params(2, Spin::ONE);
        let (u, v) = (c(0.9, 0.35), c(1.2, -0.4));
        let a = build_bethe_vector(&[u, v], &p, false).unwrap().vector;
        let b = build_bethe_vector(&[v, u], &p, false).unwrap().vector;
        assert!(vec_norm(&(&a - &b)) < 1e-9 * vec_norm(&a));
    }

    #[test]
    fn b_and_c_match_dense_blocks() {
        let p = params(2, Spin::HALF);
        let u = c(0.9, 0.35);
        let ops = extract_double_row(u, &p).unwrap();
        let psi = CVec::from_fn(p.dim(), |i, _| c(i as f64 + 1.0, 0.5));
        assert!(vec_norm(&(apply_b(u, &p, &psi).unwrap() - ops.b() * &psi)) < 1e-12);
        assert!(vec_norm(&(apply_c_dual(u, &p, &psi).unwrap() - ops.c().transpose() * &psi)) < 1e-12);
    }

    #[test]
    fn reference_state_properties() {
        let p = params(2, Spin::HALF);
        let r = reference_state(&p, false);
        assert_eq!(r.as_slice(), &[ONE, ZERO, ZERO, ZERO]);
        let p = params(3, Spin::ONE);
        let r = reference_state(&p, false);
        let h = build_hamiltonian(&p).unwrap();
        assert!(vec_norm(&(&h * &r)) < 1e-14);
        assert!(offshell_residual(c(0.8, 0.3), &[], &p).unwrap() < 1e-9);
    }

    #[test]
    fn on_shell_vector_is_eigenvector() {
        let p = params(2, Spin::HALF);
        let sol = &solve_sector_open(&p, 1, &cfg()).unwrap()[0];
        let psi = build_bethe_vector(&sol.roots, &p, false).unwrap().vector;
        let u0 = c(0.93, 0.41);
        let lam = eval_lambda(u0, sol, &p).unwrap();
        let tpsi = apply_open_transfer(u0, &p, &psi).unwrap();
        assert!(vec_norm(&(&tpsi - &psi * lam)) < 1e-8 * vec_norm(&tpsi));
        let h = build_hamiltonian(&p).unwrap();
        let e = crate::bethe::energy(sol, &p).unwrap();
        assert!(vec_norm(&(&h * &psi - &psi * e)) < 1e-7 * vec_norm(&psi));
        for l in offshell_lambdas(u0, &sol.roots, &p).unwrap() {
            assert!(l.norm() < 1e-9 * lam.norm(), "{l}");
        }
    }

    #[test]
    fn overfull_vector_vanishes() {
        let p = params(2, Spin::HALF);
        let v = build_bethe_vector(&[c(0.9, 0.2), c(1.1, -0.3), c(0.7, 0.6)], &p, false).unwrap();
        assert!(v.vanishes());
    }

    #[test]
    fn offshell_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, spin, m) in [(2, Spin::HALF, 1), (3, Spin::HALF, 2), (2, Spin::ONE, 1), (3, Spin::ONE, 2), (2, Spin::THREE_HALVES, 1)] {
            let p = params(n, spin);
            for _ in 0..5 {
                let vals: Vec<C64> = (0..m).map(|_| rand_c(&mut rng)).collect();
                let u = rand_c(&mut rng);
                let r = offshell_residual(u, &vals, &p).unwrap();
                let rd = offshell_residual_dual(u, &vals, &p).unwrap();
                assert!(r < 1e-8 && rd < 1e-8, "N={n} s={spin} M={m}: {r} {rd}");
            }
        }
    }

    #[test]
    fn highest_weight_on_shell() {
        let p = params(2, Spin::HALF);
        let rep = check_highest_weight(&BetheSolution::open(vec![]), &p).unwrap();
        assert!(rep.passes(1e-10), "{rep:?}");
        let sol = &solve_sector_open(&p, 1, &cfg()).unwrap()[0];
        let rep = check_highest_weight(sol, &p).unwrap();
        assert!(rep.passes(1e-8), "{rep:?}");
        let p3 = params(3, Spin::ONE);
        for sol in solve_sector_open(&p3, 1, &cfg()).unwrap() {
            let rep = check_highest_weight(&sol, &p3).unwrap();
            assert!(rep.passes(1e-8), "{rep:?}");
        }
    }

    #[test]
    fn scalar_product_matches_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for spin in [Spin::HALF, Spin::ONE, Spin::THREE_HALVES] {
            let p = params(2, spin);
            let u = solve_sector_open(&p, 1, &cfg()).unwrap()[0].roots.clone();
            let v = vec![rand_c(&mut rng)];
            let formula = scalar_product_det(&u, &v, &p).unwrap().value;
            let direct = direct_scalar_product(&u, &v, &p).unwrap();
            assert!(rel(formula, direct) < 1e-7, "s={spin}: {formula} {direct}");
        }
        let p = params(2, Spin::HALF);
        assert_eq!(scalar_product_det(&[], &[], &p).unwrap().value, ONE);
    }

    #[test]
    fn norm_matches_contraction_and_limit() {
        let p = params(2, Spin::HALF);
        let sol = solve_sector_open(&p, 1, &cfg()).unwrap().remove(0);
        let formula = norm_squared(&sol, &p).unwrap();
        let direct = direct_scalar_product(&sol.roots, &sol.roots, &p).unwrap();
        assert!(rel(formula, direct) < 1e-7, "{formula} {direct}");
        let sp = |eps: f64| {
            let v: Vec<C64> = sol.roots.iter().map(|u| u * (1.0 + eps)).collect();
            scalar_product_det(&sol.roots, &v, &p).unwrap().value
        };
        let (a, b, cc) = (sp(1e-3), sp(1e-4), sp(1e-5));
        // Richardson on a linear-in-ε error.
        let extrap = cc + (cc - b) / 9.0;
        assert!(rel(extrap, formula) < 1e-4, "{a} {b} {cc} {formula}");
        assert_eq!(norm_squared(&BetheSolution::open(vec![]), &p).unwrap(), ONE);
    }
}
