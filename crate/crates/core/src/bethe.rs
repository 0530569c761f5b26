//! Scalar Bethe-ansatz formulas for the open and closed chains.

use serde::{Deserialize, Serialize};

use crate::dual::{omega_s, Dual, Scalar};
use crate::error::{domain, Result, TlError};
use crate::model::{minus_one_pow, w, ModelParams, C64, ONE};
pub use crate::transfer::ChainKind;

/// Distance below which an evaluation counts as sitting on a pole.
pub const POLE_TOL: f64 = 1e-8;

/// A set of Bethe roots; for the closed chain also the twist and its sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetheSolution {
    pub kind: ChainKind,
    #[serde(with = "crate::cser::vec")]
    pub roots: Vec<C64>,
    #[serde(with = "crate::cser")]
    pub kappa: C64,
    pub sector: Option<usize>,
    pub residual_norm: f64,
}

impl BetheSolution {
    pub fn open(roots: Vec<C64>) -> Self {
        BetheSolution {
            kind: ChainKind::Open,
            roots,
            kappa: ONE,
            sector: None,
            residual_norm: 0.0,
        }
    }

    /// Closed-chain solution with `κ` fixed by the shift-operator constraint.
    pub fn closed(roots: Vec<C64>, l: usize, params: &ModelParams) -> Result<Self> {
        let kappa = twist_from_roots(&roots, l, params)?;
        Ok(BetheSolution {
            kind: ChainKind::Closed,
            roots,
            kappa,
            sector: Some(l),
            residual_norm: 0.0,
        })
    }

    pub fn m(&self) -> usize {
        self.roots.len()
    }

    /// Recomputes `residual_norm` as the max relative residual.
    pub fn with_residual(mut self, params: &ModelParams) -> Result<Self> {
        self.residual_norm = relative_residual_norm(&self, params)?;
        Ok(self)
    }
}

/// One distinct transfer-matrix eigenvalue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub solution: BetheSolution,
    #[serde(with = "crate::cser::pairs")]
    pub lambda_samples: Vec<(C64, C64)>,
    #[serde(with = "crate::cser::option")]
    pub energy: Option<C64>,
    pub degeneracy_predicted: Option<usize>,
    pub degeneracy_measured: usize,
    pub ambiguous: bool,
    #[serde(with = "crate::cser::option")]
    pub shift_eigenvalue: Option<C64>,
}

fn sign_sn(params: &ModelParams) -> C64 {
    minus_one_pow(params.spin().value() * params.n_sites() as f64)
}

fn guard(x: C64, what: &str) -> Result<()> {
    if x.norm() < POLE_TOL {
        Err(domain(format!("evaluation at a pole: {what} vanishes")))
    } else {
        Ok(())
    }
}

/// `(a(u), d(u))`; `κ` is ignored for the open chain.
pub fn eval_a_d(u: C64, params: &ModelParams, kind: ChainKind, kappa: C64) -> Result<(C64, C64)> {
    let q = params.q();
    match kind {
        ChainKind::Open => {
            let den = w(u * u * q);
            guard(den, "ω(u²q)")?;
            let mut pa = ONE;
            let mut pd = ONE;
            for &th in params.thetas() {
                pa *= w(u * q / th) * w(u * q * th);
                pd *= w(u / th) * w(u * th);
            }
            Ok((-w(u * u * q * q) / den * pa, -w(u * u) / den * pd))
        }
        ChainKind::Closed => {
            let sign = sign_sn(params);
            let mut pa = ONE;
            let mut pd = ONE;
            for &th in params.thetas() {
                pa *= w(u * q / th);
                pd *= w(u / th);
            }
            Ok((kappa * sign * pa, sign / kappa * pd))
        }
    }
}

/// `Q(u)`: `Π ω(u/u_k)ω(uqu_k)` (open) or `Π ω(u/u_k)` (closed).
pub fn eval_q_function(u: C64, roots: &[C64], kind: ChainKind, params: &ModelParams) -> C64 {
    let q = params.q();
    roots
        .iter()
        .map(|&r| match kind {
            ChainKind::Open => w(u / r) * w(u * q * r),
            ChainKind::Closed => w(u / r),
        })
        .product()
}

/// `Λ(u)` for arbitrary (possibly off-shell) values, generic over the scalar
/// type so that derivatives in `u` or the roots come for free.
pub(crate) fn lambda_generic<S: Scalar>(
    u: S,
    roots: &[S],
    kind: ChainKind,
    kappa: C64,
    params: &ModelParams,
) -> S {
    let q = params.q();
    let ql = S::lift(q);
    let qinv = S::lift(q.inv());
    let mut r1 = S::one();
    let mut r2 = S::one();
    match kind {
        ChainKind::Open => {
            let mut pa = S::one();
            let mut pd = S::one();
            for &th in params.thetas() {
                let t = S::lift(th);
                let ti = S::lift(th.inv());
                pa = pa * omega_s(u * ql * ti) * omega_s(u * ql * t);
                pd = pd * omega_s(u * ti) * omega_s(u * t);
            }
            let uu = u * u;
            let den = omega_s(uu * ql);
            let a = -(omega_s(uu * ql * ql) / den) * pa;
            let d = -(omega_s(uu) / den) * pd;
            for &r in roots {
                let dn = omega_s(u / r) * omega_s(u * ql * r);
                r1 = r1 * omega_s(u * qinv / r) * omega_s(u * r) / dn;
                r2 = r2 * omega_s(u * ql / r) * omega_s(u * ql * ql * r) / dn;
            }
            a * r1 + d * r2
        }
        ChainKind::Closed => {
            let sign = sign_sn(params);
            let mut pa = S::lift(kappa * sign);
            let mut pd = S::lift(sign / kappa);
            for &th in params.thetas() {
                let ti = S::lift(th.inv());
                pa = pa * omega_s(u * ql * ti);
                pd = pd * omega_s(u * ti);
            }
            for &r in roots {
                let dn = omega_s(u / r);
                r1 = r1 * omega_s(u * qinv / r) / dn;
                r2 = r2 * omega_s(u * ql / r) / dn;
            }
            pa * r1 + pd * r2
        }
    }
}

fn check_lambda_domain(u: C64, roots: &[C64], kind: ChainKind, params: &ModelParams) -> Result<()> {
    let q = params.q();
    if kind == ChainKind::Open {
        guard(w(u * u * q), "ω(u²q)")?;
    }
    for &r in roots {
        guard(w(u / r), "ω(u/u_k)")?;
        if kind == ChainKind::Open {
            guard(w(u * q * r), "ω(uqu_k)")?;
        }
    }
    Ok(())
}

/// `Λ(u) = a(u)Q(uq⁻¹)/Q(u) + d(u)Q(uq)/Q(u)`.
pub fn eval_lambda(u: C64, solution: &BetheSolution, params: &ModelParams) -> Result<C64> {
    check_lambda_domain(u, &solution.roots, solution.kind, params)?;
    Ok(lambda_generic(u, &solution.roots, solution.kind, solution.kappa, params))
}

/// Both sides of the denominator-cleared open Bethe equations.
pub(crate) fn open_sides<S: Scalar>(roots: &[S], params: &ModelParams) -> Vec<(S, S)> {
    let q = S::lift(params.q());
    let qinv = S::lift(params.q().inv());
    (0..roots.len())
        .map(|k| {
            let uk = roots[k];
            let mut lhs = S::one();
            let mut rhs = S::one();
            for &th in params.thetas() {
                let t = S::lift(th);
                let ti = S::lift(th.inv());
                lhs = lhs * omega_s(uk * q * ti) * omega_s(uk * q * t);
                rhs = rhs * omega_s(uk * ti) * omega_s(uk * t);
            }
            for (j, &uj) in roots.iter().enumerate() {
                if j == k {
                    continue;
                }
                lhs = lhs * omega_s(uk * qinv / uj) * omega_s(uk * uj);
                rhs = rhs * omega_s(uk * q / uj) * omega_s(uk * uj * q * q);
            }
            (lhs, rhs)
        })
        .collect()
}

/// Both sides of the closed Bethe equations with `κ²` taken from the
/// constraint for sector `l`.
pub(crate) fn closed_sides_eliminated<S: Scalar>(roots: &[S], l: usize, params: &ModelParams) -> Vec<(S, S)> {
    let n = params.n_sites();
    let q = S::lift(params.q());
    let qinv = S::lift(params.q().inv());
    let phase = C64::from_polar(1.0, 4.0 * std::f64::consts::PI * l as f64 / n as f64)
        * minus_one_pow(-2.0 * params.spin().value() * n as f64);
    let mut pw = S::one();
    let mut pwq = S::one();
    for &r in roots {
        let a = omega_s(r);
        let b = omega_s(r * q);
        pw = pw * a * a;
        pwq = pwq * b * b;
    }
    (0..roots.len())
        .map(|k| {
            let uk = roots[k];
            let mut lhs = omega_s(uk * q).powu(n as u32) * pw.scale(phase);
            let mut rhs = omega_s(uk).powu(n as u32) * pwq;
            for (j, &uj) in roots.iter().enumerate() {
                if j != k {
                    lhs = lhs * omega_s(uk * qinv / uj);
                    rhs = rhs * omega_s(uk * q / uj);
                }
            }
            (lhs, rhs)
        })
        .collect()
}

/// Both sides of the closed Bethe equations at a given `κ`.
fn closed_sides(roots: &[C64], kappa: C64, params: &ModelParams) -> Vec<(C64, C64)> {
    let q = params.q();
    let k2 = (kappa * kappa).inv();
    (0..roots.len())
        .map(|k| {
            let uk = roots[k];
            let mut lhs = ONE;
            let mut rhs = k2;
            for &th in params.thetas() {
                lhs *= w(uk * q / th);
                rhs *= w(uk / th);
            }
            for (j, &uj) in roots.iter().enumerate() {
                if j != k {
                    lhs *= w(uk / (uj * q));
                    rhs *= w(uk * q / uj);
                }
            }
            (lhs, rhs)
        })
        .collect()
}

fn check_distinct(roots: &[C64]) -> Result<()> {
    for i in 0..roots.len() {
        if roots[i].norm() < POLE_TOL {
            return Err(TlError::Singular("root at zero".into()));
        }
        for j in 0..i {
            if (roots[i] - roots[j]).norm() < POLE_TOL * (1.0 + roots[i].norm()) {
                return Err(TlError::Singular(format!("roots {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

fn sides(solution: &BetheSolution, params: &ModelParams) -> Result<Vec<(C64, C64)>> {
    check_distinct(&solution.roots)?;
    Ok(match solution.kind {
        ChainKind::Open => open_sides(&solution.roots, params),
        ChainKind::Closed => closed_sides(&solution.roots, solution.kappa, params),
    })
}

/// `LHS_k − RHS_k` of the denominator-cleared Bethe equations.
pub fn bethe_residuals(solution: &BetheSolution, params: &ModelParams) -> Result<Vec<C64>> {
    Ok(sides(solution, params)?.into_iter().map(|(l, r)| l - r).collect())
}

/// `max_k |LHS_k − RHS_k| / (|LHS_k| + |RHS_k|)`, insensitive to the overall
/// scale of the cleared polynomials.
pub fn relative_residual_norm(solution: &BetheSolution, params: &ModelParams) -> Result<f64> {
    Ok(sides(solution, params)?
        .into_iter()
        .map(|(l, r)| relative(l, r))
        .fold(0.0, f64::max))
}

pub(crate) fn relative(l: C64, r: C64) -> f64 {
    let scale = l.norm() + r.norm();
    if scale == 0.0 {
        0.0
    } else {
        (l - r).norm() / scale
    }
}

/// Open-chain residuals written in the rescaled roots `ũ = u q^{1/2}`.
pub fn bethe_residuals_rescaled(solution: &BetheSolution, params: &ModelParams) -> Result<Vec<C64>> {
    if solution.kind != ChainKind::Open || !params.is_homogeneous() {
        return Err(TlError::InvalidParams("rescaled form needs a homogeneous open chain".into()));
    }
    check_distinct(&solution.roots)?;
    let q = params.q();
    let sq = q.sqrt();
    let n2 = 2 * params.n_sites() as i32;
    let t: Vec<C64> = solution.roots.iter().map(|&u| u * sq).collect();
    Ok((0..t.len())
        .map(|k| {
            let mut lhs = w(t[k] * sq).powi(n2);
            let mut rhs = w(t[k] / sq).powi(n2);
            for j in 0..t.len() {
                if j != k {
                    lhs *= w(t[k] / t[j] / q) * w(t[k] * t[j] / q);
                    rhs *= w(t[k] / t[j] * q) * w(t[k] * t[j] * q);
                }
            }
            lhs - rhs
        })
        .collect())
}

/// Energy of the open-chain Hamiltonian for an on-shell root set.
pub fn energy(solution: &BetheSolution, params: &ModelParams) -> Result<C64> {
    if solution.kind != ChainKind::Open {
        return Err(TlError::InvalidParams("energy is defined for the open chain".into()));
    }
    let q = params.q();
    let mut sum = C64::new(0.0, 0.0);
    for &u in &solution.roots {
        let (wu, wuq) = (w(u), w(u * q));
        guard(wu, "ω(u_j)")?;
        guard(wuq, "ω(u_j q)")?;
        sum += w(u * u) / (wu * wu) - w(u * u * q * q) / (wuq * wuq);
    }
    Ok(sum * w(q) * 0.5)
}

/// `∂Λ(v; u₁…u_M)/∂u_i` of the open-chain eigenvalue, by forward-mode
/// differentiation.
pub fn lambda_partial(v: C64, roots: &[C64], i: usize, params: &ModelParams) -> Result<C64> {
    if i >= roots.len() {
        return Err(TlError::InvalidParams(format!("root index {i} out of range")));
    }
    check_lambda_domain(v, roots, ChainKind::Open, params)?;
    let dual_roots: Vec<Dual> = roots
        .iter()
        .enumerate()
        .map(|(k, &r)| if k == i { Dual::variable(r) } else { Dual::lift(r) })
        .collect();
    Ok(lambda_generic(Dual::lift(v), &dual_roots, ChainKind::Open, ONE, params).eps)
}

/// `κ = e^{2πil/N}(−1)^{−sN} Π ω(u_j)/ω(qu_j)`.
pub fn twist_from_roots(roots: &[C64], l: usize, params: &ModelParams) -> Result<C64> {
    let n = params.n_sites();
    if l >= n {
        return Err(TlError::InvalidParams(format!("sector l = {l} outside 0..{n}")));
    }
    let q = params.q();
    let mut k = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / n as f64)
        * minus_one_pow(-params.spin().value() * n as f64);
    for &u in roots {
        let den = w(q * u);
        guard(den, "ω(qu_j)")?;
        k *= w(u) / den;
    }
    Ok(k)
}

/// `U = κ(−1)^{sN} Π ω(qu_j)/ω(u_j)`.
pub fn shift_eigenvalue(roots: &[C64], kappa: C64, params: &ModelParams) -> Result<C64> {
    let q = params.q();
    let mut val = kappa * sign_sn(params);
    for &u in roots {
        let den = w(u);
        guard(den, "ω(u_j)")?;
        val *= w(q * u) / den;
    }
    Ok(val)
}
