//! Multi-start Newton search for Bethe solutions, deduplication modulo the
//! root symmetries, and the solution-count census.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bethe::{
    closed_sides_eliminated, eval_lambda, open_sides, relative, BetheSolution, ChainKind,
};
use crate::dual::{Dual, Scalar};
use crate::error::{Result, TlError};
use crate::linalg::{cluster_values, eigenvalues, CMat, CVec};
use crate::model::{w, ModelParams, C64, ONE};
use crate::symmetry::{measure_degeneracy, DEFAULT_RANK_TOL};
use crate::transfer::build_closed_transfer;

/// Knobs of the multi-start search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub seeds: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub dedup_tol: f64,
    pub max_halvings: usize,
    pub rng_seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seeds: 2000,
            r_min: 0.3,
            r_max: 3.0,
            max_iter: 80,
            tol: 1e-12,
            dedup_tol: 1e-6,
            max_halvings: 30,
            rng_seed: 20_160_501,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.seeds > 0
            && self.r_min > 0.0
            && self.r_max > self.r_min
            && self.max_iter > 0
            && self.tol > 0.0
            && self.dedup_tol > self.tol;
        if ok {
            Ok(())
        } else {
            Err(TlError::InvalidParams(format!("invalid search config {self:?}")))
        }
    }
}

/// Found versus expected solution count for one sector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorCensus {
    pub m: usize,
    pub l: Option<usize>,
    pub found: usize,
    pub expected: Option<usize>,
    pub expected_degeneracy: Option<usize>,
    pub complete: bool,
}

impl SectorCensus {
    pub fn with_found(mut self, found: usize) -> Self {
        self.found = found;
        self.complete = self.expected == Some(found);
        self
    }
}

/// `p_k(x)` from `p_{k+1} + p_{k−1} = x p_k`, `p₀ = 1`, `p_{−1} = 0`.
pub fn chebyshev_dim(k: usize, d: usize) -> u64 {
    let x = d as i128;
    let (mut prev, mut cur) = (0i128, 1i128);
    for _ in 0..k {
        let next = x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur as u64
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Multiplicity `ν_k` of the `k`-th representation in `(C^{2s+1})^{⊗N}`.
pub fn multiplicity(n: usize, k: usize) -> Result<u64> {
    if k > n || (n - k) % 2 != 0 {
        return Err(crate::error::domain(format!("no representation k = {k} for N = {n}")));
    }
    let half = (n - k) / 2;
    Ok(if k == n {
        1
    } else if k == 0 {
        binomial(n, n / 2) / (n as u64 / 2 + 1)
    } else {
        binomial(n, half) - binomial(n, half - 1)
    })
}

/// Expected open-chain census: per `M`, count `ν_{N−2M}` and degeneracy
/// `p_{N−2M}(2s+1)`.
pub fn expected_census(params: &ModelParams) -> Vec<SectorCensus> {
    let n = params.n_sites();
    (0..=n / 2)
        .map(|m| {
            let k = n - 2 * m;
            SectorCensus {
                m,
                l: None,
                found: 0,
                expected: multiplicity(n, k).ok().map(|v| v as usize),
                expected_degeneracy: Some(chebyshev_dim(k, params.d()) as usize),
                complete: false,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
enum System {
    Open,
    Closed(usize),
}

impl System {
    fn sides<S: Scalar>(self, x: &[S], params: &ModelParams) -> Vec<(S, S)> {
        match self {
            System::Open => open_sides(x, params),
            System::Closed(l) => closed_sides_eliminated(x, l, params),
        }
    }

    fn merit(self, x: &[C64], params: &ModelParams) -> f64 {
        let m = self
            .sides(x, params)
            .into_iter()
            .map(|(l, r)| relative(l, r))
            .fold(0.0, f64::max);
        if m.is_finite() {
            m
        } else {
            f64::INFINITY
        }
    }

    fn kind(self) -> ChainKind {
        match self {
            System::Open => ChainKind::Open,
            System::Closed(_) => ChainKind::Closed,
        }
    }
}

fn in_annulus(x: &[C64]) -> bool {
    x.iter().all(|u| u.is_finite() && (1e-6..=1e6).contains(&u.norm()))
}

/// Damped Newton on the cleared residuals with a forward-mode Jacobian.
fn newton_step(x: &[C64], system: System, params: &ModelParams) -> Option<CVec> {
    let m = x.len();
    let mut f = CVec::zeros(m);
    let mut jac = CMat::zeros(m, m);
    for j in 0..m {
        let xd: Vec<Dual> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| if k == j { Dual::variable(v) } else { Dual::lift(v) })
            .collect();
        for (i, (l, r)) in system.sides(&xd, params).into_iter().enumerate() {
            let diff = l - r;
            f[i] = diff.re;
            jac[(i, j)] = diff.eps;
        }
    }
    let step = jac.lu().solve(&(-f))?;
    step.iter().all(|z| z.is_finite()).then_some(step)
}

/// Largest step below which a converged point counts as an isolated root.
/// Near the singular set the relative residual can fall below `tol` while
/// Newton still moves the roots by an amount comparable to their distance
/// from it; such points are rejected.
const FINAL_STEP_TOL: f64 = 1e-8;

fn newton(mut x: Vec<C64>, system: System, params: &ModelParams, cfg: &SearchConfig) -> Option<(Vec<C64>, f64)> {
    let mut merit = system.merit(&x, params);
    for _ in 0..cfg.max_iter {
        if merit < cfg.tol {
            break;
        }
        let step = newton_step(&x, system, params)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<C64> = x.iter().zip(step.iter()).map(|(a, s)| a + s * t).collect();
            if in_annulus(&trial) {
                let mt = system.merit(&trial, params);
                if mt < merit {
                    x = trial;
                    merit = mt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if merit >= cfg.tol {
        return None;
    }
    let step = newton_step(&x, system, params)?;
    let isolated = x.iter().zip(step.iter()).all(|(a, s)| s.norm() <= FINAL_STEP_TOL * a.norm().max(1.0));
    isolated.then_some((x, merit))
}

/// Pole and coincidence rejection for a converged root set.
fn admissible(x: &[C64], kind: ChainKind, q: C64) -> bool {
    const TOL: f64 = 1e-8;
    if !in_annulus(x) {
        return false;
    }
    for (i, &a) in x.iter().enumerate() {
        if w(a).norm() < TOL || w(a * q).norm() < TOL {
            return false;
        }
        if kind == ChainKind::Open && w(a * a * q).norm() < TOL {
            return false;
        }
        for &b in &x[..i] {
            if w(a / b).norm() < TOL {
                return false;
            }
            if kind == ChainKind::Open && w(a * b * q).norm() < TOL {
                return false;
            }
        }
    }
    true
}

fn upper_half(u: C64) -> bool {
    u.re > 1e-12 || (u.re.abs() <= 1e-12 && u.im > 0.0)
}

/// Canonical representative of one root. Open: orbit `{±u, ±1/(qu)}`, choose
/// `|u|²|q| ≥ 1`, then `Re u > 0`, then the larger imaginary part. Closed:
/// orbit `{±u}`, choose `Re u > 0`.
pub fn canonical_root(u: C64, kind: ChainKind, q: C64) -> C64 {
    let flip = |z: C64| if upper_half(z) { z } else { -z };
    match kind {
        ChainKind::Closed => flip(u),
        ChainKind::Open => {
            let a = flip(u);
            let b = flip((q * u).inv());
            let ra = a.norm_sqr() * q.norm();
            let rb = b.norm_sqr() * q.norm();
            if (ra - rb).abs() <= 1e-9 * (ra + rb) {
                if a.im >= b.im {
                    a
                } else {
                    b
                }
            } else if ra > rb {
                a
            } else {
                b
            }
        }
    }
}

fn root_order(a: &C64, b: &C64) -> std::cmp::Ordering {
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() > 1e-9 * (ma + mb) {
        ma.total_cmp(&mb)
    } else {
        a.arg().total_cmp(&b.arg())
    }
}

/// Canonical roots sorted by modulus, then argument.
pub fn canonical_roots(roots: &[C64], kind: ChainKind, q: C64) -> Vec<C64> {
    let mut v: Vec<C64> = roots.iter().map(|&u| canonical_root(u, kind, q)).collect();
    v.sort_by(root_order);
    v
}

fn same_roots(a: &[C64], b: &[C64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol * (1.0 + x.norm()))
}

const DEDUP_PROBES: [C64; 2] = [C64::new(0.71, 0.53), C64::new(1.13, -0.27)];

fn lambda_signature(sol: &BetheSolution, params: &ModelParams) -> Option<[C64; 2]> {
    let a = eval_lambda(DEDUP_PROBES[0], sol, params).ok()?;
    let b = eval_lambda(DEDUP_PROBES[1], sol, params).ok()?;
    Some([a, b])
}

fn same_lambda(a: &[C64; 2], b: &[C64; 2]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= 1e-9 * x.norm().max(y.norm()).max(1e-300))
}

/// Collapses solutions with equal canonical root sets or equal `Λ` at two
/// probe points. Keeps the first of each class in input order, except that
/// a closed-chain representative with smaller `|κ|` replaces a kept one.
pub fn dedup_solutions(raw: Vec<BetheSolution>, params: &ModelParams, cfg: &SearchConfig) -> Vec<BetheSolution> {
    let q = params.q();
    let mut kept: Vec<(BetheSolution, Option<[C64; 2]>)> = Vec::new();
    for mut sol in raw {
        sol.roots = canonical_roots(&sol.roots, sol.kind, q);
        let sig = lambda_signature(&sol, params);
        let dup = kept.iter_mut().find(|(k, ks)| {
            (k.kind == sol.kind && k.sector == sol.sector && same_roots(&k.roots, &sol.roots, cfg.dedup_tol))
                || matches!((&*ks, &sig), (Some(a), Some(b)) if same_lambda(a, b))
        });
        match dup {
            Some(slot) => {
                if sol.kind == ChainKind::Closed && sol.kappa.norm() < slot.0.kappa.norm() - 1e-9 {
                    *slot = (sol, sig);
                }
            }
            None => kept.push((sol, sig)),
        }
    }
    kept.into_iter().map(|(s, _)| s).collect()
}

fn sector_rng(cfg: &SearchConfig, n: usize, m: usize, l: Option<usize>) -> ChaCha8Rng {
    let tag = (n as u64) << 32 | (m as u64) << 16 | l.map_or(0xffff, |v| v as u64);
    ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn random_point<R: Rng>(rng: &mut R, cfg: &SearchConfig) -> C64 {
    let (lo, hi) = (cfg.r_min.ln(), cfg.r_max.ln());
    C64::from_polar(rng.random_range(lo..hi).exp(), rng.random_range(0.0..std::f64::consts::TAU))
}

fn multistart(system: System, m: usize, params: &ModelParams, cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<C64>> {
    let seeds: Vec<Vec<C64>> = (0..cfg.seeds)
        .map(|_| (0..m).map(|_| random_point(rng, cfg)).collect())
        .collect();
    let q = params.q();
    let mut found: Vec<Vec<C64>> = seeds
        .into_par_iter()
        .filter_map(|x0| newton(x0, system, params, cfg))
        .filter(|(x, _)| admissible(x, system.kind(), q))
        .map(|(x, _)| x)
        .collect();
    if q.im == 0.0 {
        let extra: Vec<Vec<C64>> = found
            .par_iter()
            .filter_map(|x| newton(x.iter().map(|z| z.conj()).collect(), system, params, cfg))
            .filter(|(x, _)| admissible(x, system.kind(), q))
            .map(|(x, _)| x)
            .collect();
        found.extend(extra);
    }
    found
}

fn sort_solutions(v: &mut [BetheSolution]) {
    v.sort_by(|a, b| {
        a.m().cmp(&b.m()).then(a.sector.cmp(&b.sector)).then_with(|| {
            for (x, y) in a.roots.iter().zip(&b.roots) {
                let o = root_order(x, y);
                if o != std::cmp::Ordering::Equal {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
}

fn require_homogeneous(params: &ModelParams) -> Result<()> {
    if params.is_homogeneous() {
        Ok(())
    } else {
        Err(TlError::InvalidParams("the solver needs a homogeneous chain".into()))
    }
}

/// All open-chain solutions with `M` roots.
pub fn solve_sector_open(params: &ModelParams, m: usize, cfg: &SearchConfig) -> Result<Vec<BetheSolution>> {
    require_homogeneous(params)?;
    cfg.validate()?;
    if m > params.n_sites() / 2 {
        return Err(TlError::InvalidParams(format!("M = {m} exceeds N/2")));
    }
    if m == 0 {
        return Ok(vec![BetheSolution::open(vec![])]);
    }
    let mut rng = sector_rng(cfg, params.n_sites(), m, None);
    let raw = multistart(System::Open, m, params, cfg, &mut rng)
        .into_iter()
        .map(|x| BetheSolution::open(x).with_residual(params))
        .collect::<Result<Vec<_>>>()?;
    let mut out = dedup_solutions(raw, params, cfg);
    for s in &mut out {
        s.residual_norm = crate::bethe::relative_residual_norm(s, params)?;
    }
    sort_solutions(&mut out);
    Ok(out)
}

/// Census for one open sector given the number of solutions found.
pub fn census_open(params: &ModelParams, m: usize, found: usize) -> SectorCensus {
    expected_census(params)
        .into_iter()
        .find(|c| c.m == m)
        .unwrap_or(SectorCensus { m, l: None, found: 0, expected: None, expected_degeneracy: None, complete: false })
        .with_found(found)
}

/// Whether the κ-eliminated closed equations vanish identically in this
/// sector (as for `N = 2`, `M = 1`).
pub fn closed_sector_degenerate(params: &ModelParams, m: usize, l: usize) -> bool {
    if m == 0 {
        return false;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xdead_beef ^ l as u64);
    let cfg = SearchConfig::default();
    (0..4).all(|_| {
        let x: Vec<C64> = (0..m).map(|_| random_point(&mut rng, &cfg)).collect();
        System::Closed(l).merit(&x, params) < 1e-10
    })
}

/// All closed-chain solutions with `M` roots in twist sector `l`.
pub fn solve_sector_closed(params: &ModelParams, m: usize, l: usize, cfg: &SearchConfig) -> Result<Vec<BetheSolution>> {
    require_homogeneous(params)?;
    cfg.validate()?;
    let n = params.n_sites();
    if l >= n {
        return Err(TlError::InvalidParams(format!("sector l = {l} outside 0..{n}")));
    }
    if m == 0 {
        return Ok(vec![BetheSolution::closed(vec![], l, params)?]);
    }
    let raw: Vec<Vec<C64>> = if closed_sector_degenerate(params, m, l) {
        anchored_closed(params, m, l, cfg)?
    } else {
        let mut rng = sector_rng(cfg, n, m, Some(l));
        multistart(System::Closed(l), m, params, cfg, &mut rng)
    };
    let raw = raw
        .into_iter()
        .map(|x| BetheSolution::closed(x, l, params).and_then(|s| s.with_residual(params)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = dedup_solutions(raw, params, cfg);
    sort_solutions(&mut out);
    Ok(out)
}

/// A double root of `g − target` is only located to `√ε` by Newton on `g`;
/// it is a simple root of `g'`, which is polished instead when `g'` is small.
fn refine_double_root(r0: C64, target: C64, g: &dyn Fn(Dual) -> Dual) -> C64 {
    let scale = target.norm().max(1.0);
    let v = g(Dual::variable(r0));
    if v.eps.norm() * r0.norm() > 1e-5 * scale {
        return r0;
    }
    let mut r = r0;
    for _ in 0..20 {
        let h = 1e-4 * r.norm();
        let d = g(Dual::variable(r)).eps;
        let dd = (g(Dual::variable(r + h)).eps - g(Dual::variable(r - h)).eps) / (2.0 * h);
        if dd.norm() == 0.0 {
            break;
        }
        let step = d / dd;
        r -= step;
        if step.norm() < 1e-15 * r.norm() {
            break;
        }
    }
    if (g(Dual::lift(r)).re - target).norm() <= (g(Dual::lift(r0)).re - target).norm().max(1e-13 * scale) {
        r
    } else {
        r0
    }
}

const ANCHOR: C64 = C64::new(0.71, 0.53);
const CONFIRM: [C64; 2] = [C64::new(1.13, -0.27), C64::new(0.62, 0.88)];

/// In a sector where the Bethe equations are empty, the single root is fixed
/// by matching `Λ(u_a)` to an eigenvalue of `t(u_a)`; candidates are kept
/// when `Λ` is also an eigenvalue at two further probes.
fn anchored_closed(params: &ModelParams, m: usize, l: usize, cfg: &SearchConfig) -> Result<Vec<Vec<C64>>> {
    if m != 1 {
        return Err(TlError::Solver(format!(
            "closed sector M = {m}, l = {l} has identically vanishing Bethe equations; only M = 1 is handled"
        )));
    }
    let q = params.q();
    let t_a = build_closed_transfer(ANCHOR, params)?;
    let confirm = CONFIRM
        .iter()
        .map(|&u| build_closed_transfer(u, params))
        .collect::<Result<Vec<_>>>()?;
    let targets = cluster_values(&eigenvalues(&t_a.matrix), 1e-8);
    let kappa_of = |r: Dual| -> Dual {
        let base = crate::bethe::twist_from_roots(&[], l, params).unwrap_or(ONE);
        (crate::dual::omega_s(r) / crate::dual::omega_s(r * Dual::lift(q))).scale(base)
    };
    let lambda_at = |u: C64, r: Dual| -> Dual {
        // κ depends on the root, so Λ is differentiated through it as well.
        let kappa = kappa_of(r);
        let sign = crate::model::minus_one_pow(params.spin().value() * params.n_sites() as f64);
        let qd = Dual::lift(q);
        let ud = Dual::lift(u);
        let n = params.n_sites() as u32;
        let a = kappa.scale(sign) * crate::dual::omega_s(ud * qd).powu(n);
        let d = kappa.recip().scale(sign) * crate::dual::omega_s(ud).powu(n);
        let den = crate::dual::omega_s(ud / r);
        a * crate::dual::omega_s(ud / (qd * r)) / den + d * crate::dual::omega_s(ud * qd / r) / den
    };
    let mut rng = sector_rng(cfg, params.n_sites(), m, Some(l + 1000));
    let starts: Vec<C64> = (0..cfg.seeds.min(400)).map(|_| random_point(&mut rng, cfg)).collect();
    let mut out: Vec<Vec<C64>> = Vec::new();
    for (target, _) in targets {
        let found: Vec<C64> = starts
            .par_iter()
            .filter_map(|&r0| {
                let mut r = r0;
                for _ in 0..cfg.max_iter {
                    let v = lambda_at(ANCHOR, Dual::variable(r));
                    let g = v.re - target;
                    if g.norm() <= 1e-14 * target.norm().max(1.0) {
                        return Some(r);
                    }
                    if v.eps.norm() == 0.0 {
                        return None;
                    }
                    r -= g / v.eps;
                    if !in_annulus(&[r]) {
                        return None;
                    }
                }
                None
            })
            .filter(|r| admissible(&[*r], ChainKind::Closed, q))
            .collect();
        for r in found {
            let r = refine_double_root(r, target, &|x| lambda_at(ANCHOR, x));
            let r = canonical_root(r, ChainKind::Closed, q);
            if out.iter().any(|x| (x[0] - r).norm() <= cfg.dedup_tol * (1.0 + r.norm())) {
                continue;
            }
            let sol = BetheSolution::closed(vec![r], l, params)?;
            let ok = confirm.iter().all(|t| {
                eval_lambda(t.u, &sol, params)
                    .map(|lam| measure_degeneracy(t, lam, DEFAULT_RANK_TOL) > 0)
                    .unwrap_or(false)
            });
            if ok {
                out.push(vec![r]);
            }
        }
    }
    Ok(out)
}
