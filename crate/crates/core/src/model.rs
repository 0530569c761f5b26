//! Model parameters and the scalar functions shared by every other module.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Result, TlError};

pub type C64 = Complex64;

pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
#[cfg(test)]
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance used for the consistency of `Q` with `q`.
pub const Q_RESIDUAL_TOL: f64 = 1e-12;

/// Spin carried as the integer `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin(u32);

impl Spin {
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);
    pub const THREE_HALVES: Spin = Spin(3);

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(TlError::InvalidParams("spin must be positive".into()));
        }
        Ok(Spin(twice))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    /// Local dimension `2s + 1`.
    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for Spin {
    type Err = TlError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || TlError::Usage(format!("cannot parse spin {s:?}; expected k/2"));
        let twice = if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "1" => 2 * num,
                "2" => num,
                _ => return Err(bad()),
            }
        } else {
            let x: f64 = s.parse().map_err(|_| bad())?;
            let t = 2.0 * x;
            if !(t.is_finite() && t > 0.0 && (t - t.round()).abs() < 1e-12) {
                return Err(bad());
            }
            t.round() as u32
        };
        Spin::from_twice(twice)
    }
}

impl Serialize for Spin {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which root of `Σ_{k=-s}^{s} Q^{2k} = c(q)` to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum QBranch {
    /// Largest modulus, ties broken by smallest principal argument.
    #[default]
    Largest,
    /// The k-th root in the (modulus desc, argument asc) ordering.
    Rank(usize),
    /// A caller-supplied value; it is checked against the defining polynomial.
    Explicit(C64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n_sites: usize,
    spin: Spin,
    q: C64,
    big_q: C64,
    thetas: Vec<C64>,
}

impl ModelParams {
    /// Homogeneous chain with the default `Q` branch.
    pub fn new(n_sites: usize, spin: Spin, q: C64) -> Result<Self> {
        Self::with_branch(n_sites, spin, q, QBranch::Largest)
    }

    pub fn with_branch(n_sites: usize, spin: Spin, q: C64, branch: QBranch) -> Result<Self> {
        if n_sites == 0 {
            return Err(TlError::InvalidParams("chain length must be positive".into()));
        }
        let big_q = solve_big_q(q, spin, branch)?;
        Ok(ModelParams {
            n_sites,
            spin,
            q,
            big_q,
            thetas: vec![ONE; n_sites],
        })
    }

    pub fn with_thetas(mut self, thetas: Vec<C64>) -> Result<Self> {
        if thetas.len() != self.n_sites {
            return Err(TlError::InvalidParams(format!(
                "expected {} inhomogeneities, got {}",
                self.n_sites,
                thetas.len()
            )));
        }
        if thetas.iter().any(|t| t.norm() < 1e-300 || !t.is_finite()) {
            return Err(TlError::InvalidParams("inhomogeneities must be finite and nonzero".into()));
        }
        self.thetas = thetas;
        Ok(self)
    }

    /// Same model with `N` replaced (inhomogeneities reset to 1).
    pub fn with_sites(&self, n_sites: usize) -> Result<Self> {
        Self::with_branch(n_sites, self.spin, self.q, QBranch::Explicit(self.big_q))
    }

    pub fn homogeneous(&self) -> Self {
        let mut p = self.clone();
        p.thetas = vec![ONE; p.n_sites];
        p
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn spin(&self) -> Spin {
        self.spin
    }
    pub fn q(&self) -> C64 {
        self.q
    }
    pub fn big_q(&self) -> C64 {
        self.big_q
    }
    pub fn thetas(&self) -> &[C64] {
        &self.thetas
    }

    /// Local dimension `d = 2s + 1`.
    pub fn d(&self) -> usize {
        self.spin.dim()
    }

    /// Quantum-space dimension `d^N`.
    pub fn dim(&self) -> usize {
        self.d().pow(self.n_sites as u32)
    }

    /// Loop parameter `c = -(q + 1/q)`.
    pub fn c(&self) -> C64 {
        -(self.q + self.q.inv())
    }

    pub fn is_homogeneous(&self) -> bool {
        self.thetas.iter().all(|t| (t - ONE).norm() == 0.0)
    }

    /// `Q^x` on the principal branch (exact integer powers when `x` is integral).
    pub fn big_q_pow(&self, x: f64) -> C64 {
        complex_pow(self.big_q, x)
    }

    /// No ratio `θ_i/θ_j` (i ≠ j) lies within `tol` of `q^k`, `|k| ≤ 2`.
    pub fn thetas_generic(&self, tol: f64) -> bool {
        let n = self.n_sites;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let r = self.thetas[i] / self.thetas[j];
                for k in -2..=2 {
                    if (r - self.q.powi(k)).norm() < tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Draw generic inhomogeneities: modulus in `[0.8, 1.25]`, uniform phase,
    /// rejecting near-degenerate ratios.
    pub fn random_generic_thetas<R: Rng>(&self, rng: &mut R) -> Vec<C64> {
        loop {
            let thetas: Vec<C64> = (0..self.n_sites)
                .map(|_| {
                    let r = (rng.random_range(0.8f64.ln()..1.25f64.ln())).exp();
                    let phi = rng.random_range(-PI..PI);
                    C64::from_polar(r, phi)
                })
                .collect();
            let candidate = ModelParams {
                thetas: thetas.clone(),
                ..self.clone()
            };
            if candidate.thetas_generic(0.05) {
                return thetas;
            }
        }
    }
}

/// `z^x` on the principal branch.
pub fn complex_pow(z: C64, x: f64) -> C64 {
    if x.fract() == 0.0 {
        z.powi(x as i32)
    } else {
        (z.ln() * x).exp()
    }
}

/// `(-1)^x := e^{iπx}`.
pub fn minus_one_pow(x: f64) -> C64 {
    if x.fract() == 0.0 {
        if (x as i64).rem_euclid(2) == 0 {
            ONE
        } else {
            -ONE
        }
    } else {
        C64::from_polar(1.0, PI * x)
    }
}

/// `c = -(q + 1/q)`.
pub fn coupling_c(q: C64) -> Result<C64> {
    if q.norm() == 0.0 {
        return Err(domain("coupling_c: q = 0"));
    }
    Ok(-(q + q.inv()))
}

/// `Σ_{k=-s}^{s} Q^{2k}`, i.e. the Q-number `[2s+1]_Q`.
pub fn q_number(big_q: C64, spin: Spin) -> C64 {
    let t = spin.twice() as i32;
    (0..=t).map(|j| big_q.powi(2 * j - t)).sum()
}

/// A root `Q` of `Σ_{k=-s}^{s} Q^{2k} = -(q + 1/q)`.
pub fn solve_big_q(q: C64, spin: Spin, branch: QBranch) -> Result<C64> {
    let c = coupling_c(q)?;
    let check = |big_q: C64| -> Result<C64> {
        let lhs = q_number(big_q, spin);
        let scale = 1.0 + c.norm().max(lhs.norm());
        let res = (lhs - c).norm() / scale;
        if res > Q_RESIDUAL_TOL {
            return Err(TlError::Solver(format!(
                "Q = {big_q} violates the coupling relation (residual {res:.3e})"
            )));
        }
        Ok(big_q)
    };
    if let QBranch::Explicit(z) = branch {
        return check(z);
    }
    let roots = big_q_roots(q, spin)?;
    let k = match branch {
        QBranch::Largest => 0,
        QBranch::Rank(k) => k,
        QBranch::Explicit(_) => unreachable!(),
    };
    let z = *roots
        .get(k)
        .ok_or_else(|| TlError::Solver(format!("branch {k} out of range ({} roots)", roots.len())))?;
    check(z)
}

/// All roots of `Σ_{j=0}^{2s} Q^{2j} - c Q^{2s}`, ordered by modulus (descending)
/// and then principal argument (ascending).
pub fn big_q_roots(q: C64, spin: Spin) -> Result<Vec<C64>> {
    let c = coupling_c(q)?;
    let t = spin.twice() as usize;
    // coefficients in ascending powers, degree 2t
    let mut coeffs = vec![ZERO; 2 * t + 1];
    for j in 0..=t {
        coeffs[2 * j] += ONE;
    }
    coeffs[t] -= c;
    let mut roots = poly::roots(&coeffs)?;
    roots.sort_by(|a, b| {
        let (ma, mb) = (a.norm(), b.norm());
        if (ma - mb).abs() > 1e-9 * ma.max(mb) {
            mb.partial_cmp(&ma).unwrap()
        } else {
            a.arg().partial_cmp(&b.arg()).unwrap()
        }
    });
    Ok(roots)
}

#[inline]
pub(crate) fn w(u: C64) -> C64 {
    u - u.inv()
}

/// `ω(u) = u - 1/u`.
pub fn omega(u: C64) -> Result<C64> {
    if u.norm() == 0.0 {
        return Err(domain("omega: u = 0"));
    }
    Ok(w(u))
}

/// `ζ(u) = ω(u q^{-1}) ω(u^{-1} q^{-1})`.
pub fn zeta(u: C64, q: C64) -> Result<C64> {
    if u.norm() == 0.0 || q.norm() == 0.0 {
        return Err(domain("zeta: u and q must be nonzero"));
    }
    Ok(w(u / q) * w(ONE / (u * q)))
}

/// `g(u) = (-1)^{2s+1} ω(u q^{-1})`.
pub fn fusion_g(u: C64, params: &ModelParams) -> Result<C64> {
    let sign = minus_one_pow(params.spin.twice() as f64 + 1.0);
    Ok(sign * omega(u / params.q)?)
}

/// `f(u) = g(u^{-2}q^{-3}) g(u^2 q) Π_i ζ(uq/θ_i) ζ(uqθ_i)`, the product of
/// quantum determinants.
pub fn fusion_f(u: C64, params: &ModelParams) -> Result<C64> {
    let q = params.q;
    if u.norm() == 0.0 {
        return Err(domain("fusion_f: u = 0"));
    }
    let mut f = fusion_g(ONE / (u * u * q * q * q), params)? * fusion_g(u * u * q, params)?;
    for &th in &params.thetas {
        f *= zeta(u * q / th, q)? * zeta(u * q * th, q)?;
    }
    Ok(f)
}

/// Scalar function of the open-chain functional relations,
/// `t(q^{-1}θ_i) t(θ_i) = F(q^{-1}θ_i)`.
pub fn fusion_big_f(u: C64, params: &ModelParams) -> Result<C64> {
    let q = params.q;
    if u.norm() == 0.0 {
        return Err(domain("F: u = 0"));
    }
    let u2 = u * u;
    let den1 = w(u2 * q);
    let den2 = w(ONE / (u2 * q * q * q));
    let scale = 1.0 + u2.norm() + u2.norm().recip();
    if den1.norm() < 1e-12 * scale {
        return Err(domain(format!("F has a pole at u = {u}: ω(u²q) = 0")));
    }
    if den2.norm() < 1e-12 * scale {
        return Err(domain(format!("F has a pole at u = {u}: ω(u⁻²q⁻³) = 0")));
    }
    let mut f = -w(u2) * w(u2 * q.powi(4)) / (den1 * den2);
    for &th in &params.thetas {
        f *= w(u / th) * w(u * q * q / th) * w(u * th) * w(u * q * q * th);
    }
    Ok(f)
}

/// Closed-chain counterpart `F(u) = Π_i (-1)^{2s} ω(u/θ_i) ω(uq²/θ_i)`.
pub fn fusion_big_f_closed(u: C64, params: &ModelParams) -> Result<C64> {
    if u.norm() == 0.0 {
        return Err(domain("F: u = 0"));
    }
    let q = params.q;
    let sign = minus_one_pow(params.spin.twice() as f64);
    Ok(params
        .thetas
        .iter()
        .map(|&th| sign * w(u / th) * w(u * q * q / th))
        .product())
}

mod poly {
    //! Simultaneous polynomial root finding (Aberth-Ehrlich) with Newton polish.

    use super::{C64, ONE, ZERO};
    use crate::error::{Result, TlError};

    fn eval(coeffs: &[C64], z: C64) -> (C64, C64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &a in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    }

    /// Roots of `Σ coeffs[k] z^k`.
    pub(super) fn roots(coeffs: &[C64]) -> Result<Vec<C64>> {
        let mut coeffs = coeffs.to_vec();
        while coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        let n = coeffs.len().saturating_sub(1);
        if n == 0 {
            return Err(TlError::Solver("degenerate polynomial".into()));
        }
        let lead = coeffs[n];
        let monic: Vec<C64> = coeffs.iter().map(|c| c / lead).collect();
        let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut z: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(0.5 * radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        let mut converged = false;
        for _ in 0..500 {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let (p, dp) = eval(&monic, z[i]);
                if p.norm() == 0.0 {
                    continue;
                }
                let ratio = p / dp;
                let repulsion: C64 = (0..n).filter(|&j| j != i).map(|j| ONE / (z[i] - z[j])).sum();
                let step = ratio / (ONE - ratio * repulsion);
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
            if max_step < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged && z.iter().any(|r| !r.is_finite()) {
            return Err(TlError::Solver("polynomial root iteration diverged".into()));
        }
        for r in z.iter_mut() {
            for _ in 0..3 {
                let (p, dp) = eval(&monic, *r);
                if dp.norm() == 0.0 {
                    break;
                }
                *r -= p / dp;
            }
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coupling_values() {
        assert!((coupling_c(c(0.5, 0.0)).unwrap() - c(-2.5, 0.0)).norm() < 1e-15);
        assert!(coupling_c(I).unwrap().norm() < 1e-15);
        assert!((coupling_c(c(-2.0, 0.0)).unwrap() - c(2.5, 0.0)).norm() < 1e-15);
        assert!(coupling_c(ZERO).is_err());
    }

    #[test]
    fn big_q_spin_half() {
        let big_q = solve_big_q(c(0.5, 0.0), Spin::HALF, QBranch::Largest).unwrap();
        assert!((big_q - c(-2.0, 0.0)).norm() < 1e-12);
        let alt = solve_big_q(c(0.5, 0.0), Spin::HALF, QBranch::Rank(1)).unwrap();
        assert!((alt - c(-0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn big_q_residuals_all_branches() {
        for twice in 1..=4 {
            let spin = Spin::from_twice(twice).unwrap();
            for q in [c(0.5, 0.0), c(0.3, 0.7), c(-1.7, 0.2)] {
                let roots = big_q_roots(q, spin).unwrap();
                assert_eq!(roots.len(), 2 * twice as usize);
                for (k, _) in roots.iter().enumerate() {
                    let z = solve_big_q(q, spin, QBranch::Rank(k)).unwrap();
                    let r = q_number(z, spin) + q + q.inv();
                    assert!(r.norm() < 1e-12 * (1.0 + q.norm() + q.inv().norm()));
                }
            }
        }
    }

    #[test]
    fn explicit_branch_is_checked() {
        assert!(solve_big_q(c(0.5, 0.0), Spin::HALF, QBranch::Explicit(c(1.0, 0.0))).is_err());
        assert!(solve_big_q(c(0.5, 0.0), Spin::HALF, QBranch::Explicit(c(-0.5, 0.0))).is_ok());
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega(ONE).unwrap(), ZERO);
        assert!((omega(I).unwrap() - c(0.0, 2.0)).norm() < 1e-15);
        assert!((omega(c(2.0, 0.0)).unwrap() - c(1.5, 0.0)).norm() < 1e-15);
        assert!(omega(ZERO).is_err());
    }

    #[test]
    fn zeta_values() {
        let q = c(0.5, 0.0);
        assert!(zeta(q, q).unwrap().norm() < 1e-15);
        assert!((zeta(ONE, q).unwrap() - c(2.25, 0.0)).norm() < 1e-14);
        let u = c(0.7, -1.3);
        assert!((zeta(u, q).unwrap() - zeta(u.inv(), q).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn g_vanishes_at_q() {
        let p = ModelParams::new(2, Spin::ONE, c(0.5, 0.0)).unwrap();
        assert!(fusion_g(p.q(), &p).unwrap().norm() < 1e-15);
    }

    #[test]
    fn big_f_matches_quantum_determinant_ratio() {
        let p = ModelParams::new(3, Spin::ONE, c(0.45, 0.2))
            .unwrap()
            .with_thetas(vec![c(1.1, 0.1), c(0.9, -0.2), c(1.0, 0.3)])
            .unwrap();
        for k in 0..10 {
            let u = C64::from_polar(0.6 + 0.09 * k as f64, 0.3 + 0.55 * k as f64);
            let lhs = fusion_big_f(u, &p).unwrap();
            let rhs = fusion_f(u, &p).unwrap() / zeta(u * u * p.q() * p.q(), p.q()).unwrap();
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn spin_parsing_and_display() {
        for (s, t) in [("1/2", 1), ("0.5", 1), ("1", 2), ("3/2", 3), ("1.5", 3), ("2/1", 4)] {
            assert_eq!(s.parse::<Spin>().unwrap().twice(), t);
        }
        assert!("0".parse::<Spin>().is_err());
        assert!("0.3".parse::<Spin>().is_err());
        assert!("1/3".parse::<Spin>().is_err());
        assert_eq!(Spin::THREE_HALVES.to_string(), "3/2");
        assert_eq!(Spin::ONE.to_string(), "1");
    }

    #[test]
    fn minus_one_powers() {
        assert_eq!(minus_one_pow(2.0), ONE);
        assert_eq!(minus_one_pow(-3.0), -ONE);
        // (-1)^{3/2} = e^{3iπ/2} = -i
        assert!((minus_one_pow(1.5) + I).norm() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn coupling_is_inversion_symmetric(r in 0.1f64..5.0, phi in -3.1f64..3.1) {
                let q = C64::from_polar(r, phi);
                let a = coupling_c(q).unwrap();
                let b = coupling_c(q.inv()).unwrap();
                prop_assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
            }

            #[test]
            fn omega_is_odd(r in 0.05f64..20.0, phi in -3.1f64..3.1) {
                let u = C64::from_polar(r, phi);
                let o = omega(u).unwrap();
                prop_assert!((omega(u.inv()).unwrap() + o).norm() < 1e-12 * (1.0 + o.norm()));
                prop_assert!((omega(-u).unwrap() + o).norm() < 1e-12 * (1.0 + o.norm()));
            }
        }
    }
}
