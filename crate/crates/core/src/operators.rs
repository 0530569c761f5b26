//! Local operators of the spin-s TL chain.
//!
//! Basis convention: local index `j ∈ {0, …, 2s}` carries magnetic label
//! `m = j − s`, so index 0 is `m = −s`. With this ordering `VᵗV` comes out as
//! `diag(Q^{−2s}, …, Q^{2s})`.

use crate::error::{domain, Result, TlError};
use crate::linalg::{swap, CMat, TensorLayout};
use crate::model::{minus_one_pow, w, ModelParams, C64, ONE};

/// Map between local basis indices and magnetic labels.
#[derive(Clone, Copy, Debug)]
pub struct SiteBasisConvention {
    twice_spin: u32,
}

impl SiteBasisConvention {
    pub fn new(params: &ModelParams) -> Self {
        SiteBasisConvention {
            twice_spin: params.spin().twice(),
        }
    }

    /// `2m` for local index `j`.
    pub fn twice_m(&self, j: usize) -> i32 {
        2 * j as i32 - self.twice_spin as i32
    }

    pub fn m(&self, j: usize) -> f64 {
        self.twice_m(j) as f64 / 2.0
    }

    /// Total `2·Σm` of a basis state of `n` sites.
    pub fn total_twice_m(&self, index: usize, n: usize) -> i32 {
        let d = self.twice_spin as usize + 1;
        let mut idx = index;
        let mut total = 0;
        for _ in 0..n {
            total += self.twice_m(idx % d);
            idx /= d;
        }
        total
    }
}

/// The TL generator `X` on `C^d ⊗ C^d`:
/// `⟨m₁m₂|X|m₁'m₂'⟩ = (−1)^{m₁−m₁'} Q^{m₁+m₁'} δ_{m₁+m₂,0} δ_{m₁'+m₂',0}`.
pub fn build_x(params: &ModelParams) -> CMat {
    let d = params.d();
    let t = d - 1;
    let big_q = params.big_q();
    let mut x = CMat::zeros(d * d, d * d);
    for j1 in 0..d {
        let j2 = t - j1;
        for k1 in 0..d {
            let k2 = t - k1;
            let sign = if (j1 + k1) % 2 == 0 { ONE } else { -ONE };
            x[(j1 * d + j2, k1 * d + k2)] = sign * big_q.powi(j1 as i32 + k1 as i32 - t as i32);
        }
    }
    x
}

/// `I^{⊗(i−1)} ⊗ local ⊗ I^{⊗(N−i−1)}` for a two-site operator on sites `i, i+1`
/// (1-based).
pub fn embed_site_op(local: &CMat, i: usize, params: &ModelParams) -> Result<CMat> {
    let n = params.n_sites();
    if i == 0 || i >= n {
        return Err(TlError::InvalidParams(format!("site index {i} outside 1..={}", n.saturating_sub(1))));
    }
    let layout = TensorLayout::uniform(params.d(), n);
    Ok(layout.embed(local, &[i - 1, i]))
}

/// `H = Σ_{i=1}^{N−1} X_{(i)}`.
pub fn build_hamiltonian(params: &ModelParams) -> Result<CMat> {
    let n = params.n_sites();
    if n < 2 {
        return Err(TlError::InvalidParams("Hamiltonian needs N ≥ 2".into()));
    }
    let x = build_x(params);
    let dim = params.dim();
    let mut h = CMat::zeros(dim, dim);
    for i in 1..n {
        h += embed_site_op(&x, i, params)?;
    }
    Ok(h)
}

/// `R(u) = (uq − 1/(uq)) P + (u − 1/u) P X`.
pub fn build_r(u: C64, params: &ModelParams) -> Result<CMat> {
    let q = params.q();
    if u.norm() == 0.0 || (u * q).norm() == 0.0 {
        return Err(domain(format!("R-matrix undefined at u = {u}")));
    }
    let p = swap(params.d());
    let px = &p * build_x(params);
    Ok(p * w(u * q) + px * w(u))
}

/// Crossing matrices `(V, M)` with `V_{jk} = (−1)^j Q^{s+1−j} δ_{j+k,2s+2}`
/// (1-based) and `M = VᵗV`.
pub fn build_crossing_matrices(params: &ModelParams) -> (CMat, CMat) {
    let d = params.d();
    let t = d - 1;
    let s = params.spin().value();
    let mut v = CMat::zeros(d, d);
    for a in 0..d {
        let b = t - a;
        v[(a, b)] = minus_one_pow(a as f64 + 1.0) * params.big_q_pow(s - a as f64);
    }
    let m = v.transpose() * &v;
    (v, m)
}

/// Diagonal of `M`, i.e. `Q^{2m}` for each local index.
pub fn m_diagonal(params: &ModelParams) -> Vec<C64> {
    let conv = SiteBasisConvention::new(params);
    (0..params.d()).map(|j| params.big_q().powi(conv.twice_m(j))).collect()
}

/// Rank-one projector `P⁻ = ((−1)^{2s}/(2s+1)) P X`.
pub fn build_projector(params: &ModelParams) -> CMat {
    let d = params.d();
    let sign = minus_one_pow(params.spin().twice() as f64);
    (swap(d) * build_x(params)) * (sign / d as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Asymptote {
    /// `u → ∞`
    Plus,
    /// `u → 0`
    Minus,
}

/// `R⁺ = P(q + X)`, `R⁻ = P(q⁻¹ + X)`.
pub fn build_r_asymptotic(sign: Asymptote, params: &ModelParams) -> CMat {
    let d = params.d();
    let q = match sign {
        Asymptote::Plus => params.q(),
        Asymptote::Minus => params.q().inv(),
    };
    let inner = CMat::identity(d * d, d * d) * q + build_x(params);
    swap(d) * inner
}

/// `R₂₁ = P R₁₂ P`.
pub fn flip(r: &CMat, d: usize) -> CMat {
    let p = swap(d);
    &p * r * &p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, max_abs, rel_diff, rel_diff_scalar_identity};
    use crate::model::{fusion_g, zeta, Spin, ZERO};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(n: usize, spin: Spin, q: C64) -> ModelParams {
        ModelParams::new(n, spin, q).unwrap()
    }

    const SPINS: [Spin; 3] = [Spin::HALF, Spin::ONE, Spin::THREE_HALVES];

    fn probes() -> Vec<C64> {
        (0..10)
            .map(|k| C64::from_polar(0.55 + 0.13 * k as f64, -2.0 + 0.71 * k as f64))
            .collect()
    }

    #[test]
    fn x_spin_half_block() {
        let p = params(2, Spin::HALF, c(0.5, 0.0));
        let x = build_x(&p);
        let big_q = p.big_q();
        // |+−⟩ = index 1·2+0 = 2, |−+⟩ = 0·2+1 = 1
        assert!((x[(2, 2)] - big_q).norm() < 1e-15);
        assert!((x[(1, 1)] - big_q.inv()).norm() < 1e-15);
        assert!((x[(2, 1)] + ONE).norm() < 1e-15);
        assert!((x[(1, 2)] + ONE).norm() < 1e-15);
        assert_eq!(x[(0, 0)], ZERO);
        assert_eq!(x[(3, 3)], ZERO);
    }

    #[test]
    fn x_trace_is_loop_parameter() {
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            assert!((build_x(&p).trace() - p.c()).norm() < 1e-12);
        }
    }

    #[test]
    fn x_squared_is_c_x() {
        let p = params(2, Spin::ONE, c(0.37, -0.61));
        let x = build_x(&p);
        assert!(max_abs(&(&x * &x - &x * p.c())) < 1e-12);
    }

    #[test]
    fn tl_relations() {
        for spin in SPINS {
            for n in 3..=4 {
                if spin == Spin::THREE_HALVES && n == 4 {
                    continue;
                }
                let p = params(n, spin, c(0.5, 0.0));
                let x = build_x(&p);
                let gens: Vec<CMat> = (1..n).map(|i| embed_site_op(&x, i, &p).unwrap()).collect();
                for i in 0..n - 1 {
                    assert!(rel_diff(&(&gens[i] * &gens[i]), &(&gens[i] * p.c())) < 1e-10);
                    for j in 0..n - 1 {
                        let dist = i.abs_diff(j);
                        if dist == 1 {
                            let xyx = &gens[i] * &gens[j] * &gens[i];
                            assert!(rel_diff(&xyx, &gens[i]) < 1e-10);
                        } else if dist > 1 {
                            let ab = &gens[i] * &gens[j];
                            let ba = &gens[j] * &gens[i];
                            assert!(rel_diff(&ab, &ba) < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn embedding_edge_cases() {
        let p = params(2, Spin::ONE, c(0.5, 0.0));
        let x = build_x(&p);
        assert!(rel_diff(&embed_site_op(&x, 1, &p).unwrap(), &x) < 1e-15);
        let p3 = params(3, Spin::ONE, c(0.5, 0.0));
        let id = CMat::identity(9, 9);
        assert!(rel_diff_scalar_identity(&embed_site_op(&id, 2, &p3).unwrap(), ONE) < 1e-15);
        assert!(embed_site_op(&x, 0, &p3).is_err());
        assert!(embed_site_op(&x, 3, &p3).is_err());
    }

    #[test]
    fn two_site_hamiltonian_spectrum() {
        // H = X is rank one with nonzero eigenvalue tr X = c.
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            let h = build_hamiltonian(&p).unwrap();
            let ev = eigenvalues(&h);
            let nonzero: Vec<_> = ev.iter().filter(|z| z.norm() > 1e-9).collect();
            assert_eq!(nonzero.len(), 1);
            assert!((nonzero[0] - p.c()).norm() < 1e-9);
        }
        let p = params(2, Spin::HALF, c(0.5, 0.0));
        assert!((p.c() - c(-2.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_reflection_symmetry() {
        // Site reversal alone sends Q to 1/Q; combined with m -> -m it is a symmetry.
        let p = params(3, Spin::ONE, c(0.5, 0.2));
        let h = build_hamiltonian(&p).unwrap();
        let d = p.d();
        let n = p.n_sites();
        let dim = p.dim();
        let reverse = |mut idx: usize, flip_m: bool| {
            let mut out = 0;
            for _ in 0..n {
                let j = idx % d;
                out = out * d + if flip_m { d - 1 - j } else { j };
                idx /= d;
            }
            out
        };
        let perm = |flip_m: bool| {
            let mut m = CMat::zeros(dim, dim);
            for i in 0..dim {
                m[(reverse(i, flip_m), i)] = ONE;
            }
            m
        };
        let rf = perm(true);
        assert!(rel_diff(&(&rf * &h * rf.transpose()), &h) < 1e-14);

        let r = perm(false);
        let inverse_q = ModelParams::with_branch(n, p.spin(), p.q(), crate::model::QBranch::Explicit(p.big_q().inv())).unwrap();
        let h_inv = build_hamiltonian(&inverse_q).unwrap();
        assert!(rel_diff(&(&r * &h * r.transpose()), &h_inv) < 1e-14);
    }

    #[test]
    fn r_special_values() {
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            let q = p.q();
            let r1 = build_r(ONE, &p).unwrap();
            assert!(rel_diff(&r1, &(swap(p.d()) * w(q))) < 1e-14);
            let rq = build_r(q.inv(), &p).unwrap();
            let factor = (q.inv() - q) * (p.d() as f64) * minus_one_pow(spin.twice() as f64);
            assert!(rel_diff(&rq, &(build_projector(&p) * factor)) < 1e-13);
        }
        let p = params(2, Spin::HALF, c(0.5, 0.0));
        assert!(build_r(ZERO, &p).is_err());
    }

    #[test]
    fn yang_baxter() {
        for spin in SPINS {
            let p = params(2, spin, c(0.43, 0.27));
            let d = p.d();
            let layout = TensorLayout::uniform(d, 3);
            let us = [c(0.8, 0.3), c(1.3, -0.4), c(-0.6, 0.9)];
            let r12 = layout.embed(&build_r(us[0] / us[1], &p).unwrap(), &[0, 1]);
            let r13 = layout.embed(&build_r(us[0] / us[2], &p).unwrap(), &[0, 2]);
            let r23 = layout.embed(&build_r(us[1] / us[2], &p).unwrap(), &[1, 2]);
            let lhs = &r12 * &r13 * &r23;
            let rhs = &r23 * &r13 * &r12;
            assert!(rel_diff(&lhs, &rhs) < 1e-10, "spin {spin}: {}", rel_diff(&lhs, &rhs));
        }
    }

    #[test]
    fn unitarity() {
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            for u in probes() {
                let lhs = build_r(u, &p).unwrap() * flip(&build_r(u.inv(), &p).unwrap(), p.d());
                let z = zeta(u, p.q()).unwrap();
                assert!(rel_diff_scalar_identity(&lhs, z) < 1e-10);
            }
        }
    }

    #[test]
    fn crossing_matrices() {
        let p = params(2, Spin::HALF, c(0.5, 0.0));
        let (_, m) = build_crossing_matrices(&p);
        assert!((m[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((m[(1, 1)] - c(-2.0, 0.0)).norm() < 1e-14);
        for spin in SPINS {
            let p = params(2, spin, c(0.31, 0.44));
            let (v, m) = build_crossing_matrices(&p);
            assert!((m.trace() - p.c()).norm() < 1e-12);
            let diag = m_diagonal(&p);
            for j in 0..p.d() {
                assert!((m[(j, j)] - diag[j]).norm() < 1e-12);
            }
            let sign = minus_one_pow(spin.twice() as f64);
            assert!(rel_diff_scalar_identity(&(&v * &v), sign) < 1e-13);
        }
    }

    #[test]
    fn r_crossing_symmetry() {
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            let d = p.d();
            let layout = TensorLayout::uniform(d, 2);
            let (v, _) = build_crossing_matrices(&p);
            let v1 = layout.embed(&v, &[0]);
            for u in probes() {
                let crossed = build_r(-(u * p.q()).inv(), &p).unwrap();
                let rhs = &v1 * layout.partial_transpose(&crossed, 1) * &v1;
                assert!(rel_diff(&build_r(u, &p).unwrap(), &rhs) < 1e-10);
            }
        }
    }

    #[test]
    fn projector_properties() {
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            let pm = build_projector(&p);
            assert!(max_abs(&(&pm * &pm - &pm)) < 1e-12);
            assert!((pm.trace() - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn g_from_projector_trace() {
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            let d = p.d();
            let layout = TensorLayout::uniform(d, 2);
            let (v, _) = build_crossing_matrices(&p);
            let vv = layout.embed(&v, &[0]) * layout.embed(&v, &[1]);
            for u in probes() {
                let g = (build_r(u, &p).unwrap() * &vv * build_projector(&p)).trace();
                let expected = fusion_g(u, &p).unwrap();
                assert!((g - expected).norm() < 1e-10 * (1.0 + expected.norm()));
            }
        }
    }

    #[test]
    fn asymptotic_limits() {
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            let big = c(1e6, 0.0);
            let small = c(1e-6, 0.0);
            let rp = build_r(big, &p).unwrap() / big;
            assert!(max_abs(&(rp - build_r_asymptotic(Asymptote::Plus, &p))) < 1e-8);
            let rm = build_r(small, &p).unwrap() * (-small);
            assert!(max_abs(&(rm - build_r_asymptotic(Asymptote::Minus, &p))) < 1e-8);
        }
    }

    #[test]
    fn asymptotic_r_commutes_with_m_m() {
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            let (_, m) = build_crossing_matrices(&p);
            let mm = m.kronecker(&m);
            for sign in [Asymptote::Plus, Asymptote::Minus] {
                let r = build_r_asymptotic(sign, &p);
                assert!(rel_diff(&(&mm * &r), &(&r * &mm)) < 1e-10);
            }
        }
    }

    #[test]
    fn asymptotic_inverse_relation() {
        // (R^∓)^{t₁t₂} = (R^±)^{-1}
        for spin in SPINS {
            let p = params(2, spin, c(0.5, 0.0));
            let rp = build_r_asymptotic(Asymptote::Plus, &p);
            let rm = build_r_asymptotic(Asymptote::Minus, &p);
            let inv = rp.clone().try_inverse().unwrap();
            assert!(rel_diff(&rm.transpose(), &inv) < 1e-10);
            let inv = rm.clone().try_inverse().unwrap();
            assert!(rel_diff(&rp.transpose(), &inv) < 1e-10);
        }
    }
}
