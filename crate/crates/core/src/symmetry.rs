//! Quantum-group generators `T±_{ij}`, the symmetry of the open transfer
//! matrix, and degeneracy measurement by nullity.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TlError};
use crate::linalg::{max_abs, numerical_rank_abs, CMat, LocalProduct, TensorLayout};
use crate::model::{ModelParams, C64};
use crate::operators::{build_crossing_matrices, build_r_asymptotic, Asymptote, SiteBasisConvention};
use crate::transfer::{build_open_transfer, monodromy_ops, TransferEval};

/// Default probe for degeneracy measurement.
pub const DEFAULT_PROBE: C64 = C64::new(0.93, 0.41);
/// Default relative rank threshold.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub commutator: f64,
    pub lemma1: f64,
    pub lemma2: f64,
    /// `(label, residual)` pairs for highest-weight checks.
    pub highest_weight: Vec<(String, f64)>,
}

impl SymmetryReport {
    pub fn max_residual(&self) -> f64 {
        self.highest_weight
            .iter()
            .map(|(_, r)| *r)
            .fold(self.commutator.max(self.lemma1).max(self.lemma2), f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

fn asymptotic_ops(sign: Asymptote, params: &ModelParams, layout: &TensorLayout, aux: usize, first_site: usize) -> LocalProduct {
    let r = build_r_asymptotic(sign, params);
    let mut prod = LocalProduct::new(layout.clone());
    for j in 0..params.n_sites() {
        prod.then(r.clone(), &[aux, first_site + j]);
    }
    prod
}

/// `T₀^± = R^±₀N ⋯ R^±₀1` on `aux ⊗ quantum`.
pub fn build_t_asymptotic(sign: Asymptote, params: &ModelParams) -> CMat {
    let layout = TensorLayout::uniform(params.d(), params.n_sites() + 1);
    asymptotic_ops(sign, params, &layout, 0, 1).to_dense()
}

/// The generators `T^±_{ij}` as quantum-space operators, indexed `[i][j]`.
pub fn generators(sign: Asymptote, params: &ModelParams) -> Vec<Vec<CMat>> {
    let layout = TensorLayout::uniform(params.d(), params.n_sites() + 1);
    let t = build_t_asymptotic(sign, params);
    (0..params.d())
        .map(|i| (0..params.d()).map(|j| layout.leading_block(&t, i, j)).collect())
        .collect()
}

fn commutator_residual(a: &CMat, b: &CMat) -> f64 {
    let c = a * b - b * a;
    let scale = max_abs(a).max(1e-300) * max_abs(b).max(1e-300);
    max_abs(&c) / scale
}

/// Residual of `[R^±₁₂ T^±₁, T₂(u) T̂₂(u)] = 0`.
pub fn lemma1_residual(sign: Asymptote, u: C64, params: &ModelParams) -> Result<f64> {
    let n = params.n_sites();
    let layout = TensorLayout::uniform(params.d(), n + 2);
    let mut a = asymptotic_ops(sign, params, &layout, 0, 2);
    let mut r12 = LocalProduct::new(layout.clone());
    r12.then(build_r_asymptotic(sign, params), &[0, 1]);
    a.then_product(&r12);
    let mut b = crate::transfer::hat_monodromy_ops(u, params, &layout, 1, 2)?;
    b.then_product(&monodromy_ops(u, params, &layout, 1, 2)?);

    let a_dense = a.to_dense();
    let b_dense = b.to_dense();
    let mut ab = b_dense.clone();
    a.apply_left(&mut ab);
    let mut ba = a_dense.clone();
    b.apply_left(&mut ba);
    Ok(max_abs(&(ab - ba)) / (max_abs(&a_dense) * max_abs(&b_dense)))
}

/// Residual of `M₁⁻¹((R^±)⁻¹)^{t₂} M₁ (R^±)^{t₂} = I`.
pub fn lemma2_residual(sign: Asymptote, params: &ModelParams) -> Result<f64> {
    let d = params.d();
    let layout = TensorLayout::uniform(d, 2);
    let r = build_r_asymptotic(sign, params);
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| TlError::Singular("R± not invertible".into()))?;
    let (_, m) = build_crossing_matrices(params);
    let m_inv = m.clone().try_inverse().ok_or_else(|| TlError::Singular("M not invertible".into()))?;
    let m1 = layout.embed(&m, &[0]);
    let m1_inv = layout.embed(&m_inv, &[0]);
    let prod = m1_inv * layout.partial_transpose(&r_inv, 1) * m1 * layout.partial_transpose(&r, 1);
    Ok(crate::linalg::rel_diff_scalar_identity(&prod, C64::new(1.0, 0.0)))
}

/// Runs all symmetry identities for both asymptotic signs at the given probes.
pub fn check_symmetry(params: &ModelParams, probes: &[C64]) -> Result<SymmetryReport> {
    let mut report = SymmetryReport::default();
    let ts: Vec<CMat> = probes
        .iter()
        .map(|&u| build_open_transfer(u, params).map(|t| t.matrix))
        .collect::<Result<_>>()?;
    for sign in [Asymptote::Plus, Asymptote::Minus] {
        for row in generators(sign, params) {
            for g in row {
                for t in &ts {
                    report.commutator = report.commutator.max(commutator_residual(&g, t));
                }
            }
        }
        for &u in probes {
            report.lemma1 = report.lemma1.max(lemma1_residual(sign, u, params)?);
        }
        report.lemma2 = report.lemma2.max(lemma2_residual(sign, params)?);
    }
    Ok(report)
}

/// Nullity of `t(u₀) − λ` with its ambiguity flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degeneracy {
    pub nullity: usize,
    pub ambiguous: bool,
}

/// Basis indices grouped by total magnetization; `t(u)` is block diagonal
/// in this grouping.
pub fn magnetization_blocks(d: usize, n: usize) -> Vec<Vec<usize>> {
    let total = d.pow(n as u32);
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); n * (d - 1) + 1];
    for idx in 0..total {
        let mut rest = idx;
        let mut sum = 0;
        for _ in 0..n {
            sum += rest % d;
            rest /= d;
        }
        blocks[sum].push(idx);
    }
    blocks
}

fn site_dim(t_eval: &TransferEval) -> usize {
    let n = t_eval.thetas.len() as u32;
    let dim = t_eval.matrix.nrows();
    (2..=dim).find(|d| d.pow(n) == dim).unwrap_or(dim)
}

/// Nullity of `t(u₀) − λ I`, computed per magnetization block with a pivot
/// threshold of `rank_tol` times the largest entry of `t(u₀) − λ I` or `t(u₀)`.
pub fn measure_degeneracy_detailed(t_eval: &TransferEval, lambda: C64, rank_tol: f64) -> Degeneracy {
    let dim = t_eval.matrix.nrows();
    let mut shifted = t_eval.matrix.clone();
    for i in 0..dim {
        shifted[(i, i)] -= lambda;
    }
    // Scale by t itself as well so that t ≈ λI does not measure rounding noise.
    let threshold = rank_tol * max_abs(&shifted).max(max_abs(&t_eval.matrix));
    let d = site_dim(t_eval);
    let mut out = Degeneracy { nullity: 0, ambiguous: false };
    for block in magnetization_blocks(d, t_eval.thetas.len()) {
        let sub = CMat::from_fn(block.len(), block.len(), |r, c| shifted[(block[r], block[c])]);
        let info = numerical_rank_abs(&sub, threshold);
        out.nullity += info.nullity;
        out.ambiguous |= info.ambiguous;
    }
    out
}

pub fn measure_degeneracy(t_eval: &TransferEval, lambda: C64, rank_tol: f64) -> usize {
    measure_degeneracy_detailed(t_eval, lambda, rank_tol).nullity
}

/// Total `2m` of a basis index, for labelling.
pub fn index_magnetization(index: usize, params: &ModelParams) -> i32 {
    SiteBasisConvention::new(params).total_twice_m(index, params.n_sites())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_diff;
    use crate::model::Spin;
    use crate::operators::build_r;
    use crate::transfer::build_monodromy;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(n: usize, spin: Spin) -> ModelParams {
        ModelParams::new(n, spin, c(0.5, 0.0)).unwrap()
    }

    #[test]
    fn single_site_asymptotic_is_r_pm() {
        let p = params(1, Spin::ONE);
        for sign in [Asymptote::Plus, Asymptote::Minus] {
            assert!(rel_diff(&build_t_asymptotic(sign, &p), &build_r_asymptotic(sign, &p)) < 1e-15);
        }
    }

    #[test]
    fn asymptotic_matches_scaled_monodromy() {
        let p = params(2, Spin::ONE);
        let big = c(1e6, 0.0);
        let (t, _) = build_monodromy(big, &p).unwrap();
        let scaled = t / big.powi(2);
        assert!(rel_diff(&scaled, &build_t_asymptotic(Asymptote::Plus, &p)) < 1e-6);
        let small = c(1e-6, 0.0);
        let (t, _) = build_monodromy(small, &p).unwrap();
        let scaled = t * (-small).powi(2);
        assert!(rel_diff(&scaled, &build_t_asymptotic(Asymptote::Minus, &p)) < 1e-6);
        // the asymptotic R itself
        let r = build_r(big, &p).unwrap() / big;
        assert!(rel_diff(&r, &build_r_asymptotic(Asymptote::Plus, &p)) < 1e-6);
    }

    #[test]
    fn diagonal_generators_fix_reference_state() {
        let p = params(3, Spin::ONE);
        for sign in [Asymptote::Plus, Asymptote::Minus] {
            let g = generators(sign, &p);
            for (i, row) in g.iter().enumerate() {
                let col = row[i].column(0);
                let off: f64 = col.iter().skip(1).map(|z| z.norm()).fold(0.0, f64::max);
                assert!(off < 1e-12 * (1.0 + col[0].norm()), "i={i}");
            }
        }
    }

    #[test]
    fn symmetry_identities_hold() {
        let probes = [c(0.83, 0.37), c(1.21, -0.64), c(0.6, 0.9)];
        for (n, spin) in [(2, Spin::HALF), (3, Spin::ONE)] {
            let rep = check_symmetry(&params(n, spin), &probes).unwrap();
            assert!(rep.passes(1e-9), "N={n} s={spin}: {rep:?}");
        }
    }

    #[test]
    fn lemma2_spin_three_halves() {
        let p = params(2, Spin::THREE_HALVES);
        for sign in [Asymptote::Plus, Asymptote::Minus] {
            assert!(lemma2_residual(sign, &p).unwrap() < 1e-10);
        }
    }

    #[test]
    fn degeneracy_of_empty_sector() {
        // Λ(u; ∅) from the scalar formula, independently of the bethe module.
        use crate::model::w;
        let q = c(0.5, 0.0);
        let u = DEFAULT_PROBE;
        let lam = |n: i32| {
            -(w(u * u * q * q) * w(u * q).powi(2 * n) + w(u * u) * w(u).powi(2 * n)) / w(u * u * q)
        };
        let p = params(2, Spin::ONE);
        let t = build_open_transfer(u, &p).unwrap();
        assert_eq!(measure_degeneracy(&t, lam(2), DEFAULT_RANK_TOL), 8);
        assert_eq!(measure_degeneracy(&t, lam(2) + 0.1, DEFAULT_RANK_TOL), 0);
        let p = params(2, Spin::HALF);
        let t = build_open_transfer(u, &p).unwrap();
        assert_eq!(measure_degeneracy(&t, lam(2), DEFAULT_RANK_TOL), 3);
    }

    #[test]
    fn magnetization_blocks_partition() {
        let blocks = magnetization_blocks(3, 3);
        assert_eq!(blocks.len(), 7);
        assert_eq!(blocks.iter().map(Vec::len).sum::<usize>(), 27);
        assert_eq!(blocks[3].len(), 7);
    }

    #[test]
    fn transfer_is_block_diagonal() {
        let p = params(3, Spin::ONE);
        let t = build_open_transfer(DEFAULT_PROBE, &p).unwrap().matrix;
        let d = 3;
        let mag = |mut i: usize| {
            let mut s = 0;
            for _ in 0..3 {
                s += i % d;
                i /= d;
            }
            s
        };
        for r in 0..27 {
            for c2 in 0..27 {
                if mag(r) != mag(c2) {
                    assert_eq!(t[(r, c2)].norm(), 0.0);
                }
            }
        }
    }
}
