use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aba::{check_highest_weight, direct_scalar_product, norm_squared, offshell_residual, offshell_residual_dual, scalar_product_det};
use crate::error::{Result, TlError};
use crate::linalg::{rel_diff, rel_diff_scalar_identity, CMat, TensorLayout};
use crate::model::{w, zeta, ModelParams, Spin, C64, ONE};
use crate::operators::{build_crossing_matrices, build_r, build_x, embed_site_op, flip};
use crate::solver::{solve_sector_open, SearchConfig};
use crate::symmetry::check_symmetry;
use crate::transfer::{
    boundary_ybe_residuals, build_closed_transfer, build_open_transfer, functional_relation_residual,
    fundamental_relation_residual, hamiltonian_consistency, inverse_monodromy_residual, shift_operator, ChainKind,
};

use super::RunConfig;

pub const SUITES: [&str; 8] = [
    "tl-algebra",
    "ybe",
    "transfer-identities",
    "functional-relations",
    "symmetry",
    "offshell",
    "highest-weight",
    "scalar-products",
];

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub n_sites: usize,
    pub spin: Spin,
    pub q: C64,
    /// Number of Bethe roots; `None` runs every admissible value.
    pub m: Option<usize>,
    pub inhomogeneous: bool,
    pub configs: usize,
    pub search: SearchConfig,
    /// Replaces every per-check tolerance.
    pub tol: Option<f64>,
}

impl VerifyOptions {
    pub fn new(n_sites: usize, spin: Spin) -> Self {
        VerifyOptions {
            n_sites,
            spin,
            q: C64::new(0.5, 0.0),
            m: None,
            inhomogeneous: false,
            configs: 50,
            search: SearchConfig::default(),
            tol: None,
        }
    }

    pub fn from_config(c: &RunConfig) -> Self {
        VerifyOptions {
            n_sites: c.n_sites,
            spin: c.spin,
            q: c.q,
            m: c.sectors_m.iter().copied().max(),
            inhomogeneous: c.inhomogeneous,
            configs: c.configs,
            search: c.search.clone(),
            tol: c.tolerances.identity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
}

impl ResidualEntry {
    pub fn passed(&self) -> bool {
        self.residual <= self.tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub n_sites: usize,
    pub spin: Spin,
    pub entries: Vec<ResidualEntry>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(ResidualEntry::passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

struct Collector {
    entries: Vec<ResidualEntry>,
    over: Option<f64>,
}

impl Collector {
    fn push(&mut self, name: impl Into<String>, residual: f64, tol: f64) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        self.entries.push(ResidualEntry { name: name.into(), residual, tol: self.over.unwrap_or(tol) });
    }
}

fn random_point(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(rng.random_range(0.5..2.0), rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn homogeneous_only(opts: &VerifyOptions, suite: &str) -> Result<()> {
    if opts.inhomogeneous {
        Err(TlError::Usage(format!("suite {suite} runs on the homogeneous chain only")))
    } else {
        Ok(())
    }
}

/// Runs a named suite. Unknown names are usage errors.
pub fn run_suite(suite: &str, opts: &VerifyOptions) -> Result<SuiteSummary> {
    let base = ModelParams::new(opts.n_sites, opts.spin, opts.q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.search.rng_seed ^ 0x5eed);
    let params = if opts.inhomogeneous {
        let thetas = base.random_generic_thetas(&mut rng);
        base.with_thetas(thetas)?
    } else {
        base
    };
    let mut out = Collector { entries: Vec::new(), over: opts.tol };
    match suite {
        "tl-algebra" => {
            homogeneous_only(opts, suite)?;
            tl_algebra(&params, &mut out)?
        }
        "ybe" => {
            homogeneous_only(opts, suite)?;
            ybe(&params, &mut rng, &mut out)?
        }
        "transfer-identities" => transfer_identities(&params, &mut rng, &mut out)?,
        "functional-relations" => {
            out.push("open", functional_relation_residual(&params, ChainKind::Open)?, 1e-9);
            out.push("closed", functional_relation_residual(&params, ChainKind::Closed)?, 1e-9);
        }
        "symmetry" => {
            homogeneous_only(opts, suite)?;
            let probes: Vec<C64> = (0..3).map(|_| random_point(&mut rng)).collect();
            let rep = check_symmetry(&params, &probes)?;
            out.push("[T±, t(u)]", rep.commutator, 1e-9);
            out.push("lemma 1", rep.lemma1, 1e-9);
            out.push("lemma 2", rep.lemma2, 1e-9);
        }
        "offshell" => {
            homogeneous_only(opts, suite)?;
            offshell(&params, opts, &mut rng, &mut out)?
        }
        "highest-weight" => {
            homogeneous_only(opts, suite)?;
            for m in sectors(opts) {
                for (k, sol) in solve_sector_open(&params, m, &opts.search)?.iter().enumerate() {
                    let rep = check_highest_weight(sol, &params)?;
                    out.push(format!("M={m} #{k}"), rep.max_residual(), 1e-8);
                }
            }
        }
        "scalar-products" => {
            homogeneous_only(opts, suite)?;
            scalar_products(&params, opts, &mut rng, &mut out)?
        }
        _ => {
            return Err(TlError::Usage(format!("unknown suite {suite:?}; expected one of {}", SUITES.join(", "))));
        }
    }
    Ok(SuiteSummary { suite: suite.to_string(), n_sites: opts.n_sites, spin: opts.spin, entries: out.entries })
}

fn sectors(opts: &VerifyOptions) -> Vec<usize> {
    match opts.m {
        Some(m) => vec![m],
        None => (0..=opts.n_sites / 2).collect(),
    }
}

fn tl_algebra(p: &ModelParams, out: &mut Collector) -> Result<()> {
    let n = p.n_sites();
    let x = build_x(p);
    out.push("X² = cX (local)", rel_diff(&(&x * &x), &(&x * p.c())), 1e-10);
    out.push("tr X = c", rel(x.trace(), p.c()), 1e-10);
    let gens: Vec<CMat> = (1..n).map(|i| embed_site_op(&x, i, p)).collect::<Result<_>>()?;
    let (mut sq, mut braid, mut far) = (0f64, 0f64, 0f64);
    for i in 0..gens.len() {
        sq = sq.max(rel_diff(&(&gens[i] * &gens[i]), &(&gens[i] * p.c())));
        for j in 0..gens.len() {
            match i.abs_diff(j) {
                0 => {}
                1 => braid = braid.max(rel_diff(&(&gens[i] * &gens[j] * &gens[i]), &gens[i])),
                _ => far = far.max(rel_diff(&(&gens[i] * &gens[j]), &(&gens[j] * &gens[i]))),
            }
        }
    }
    out.push("X_i² = cX_i", sq, 1e-10);
    if n >= 3 {
        out.push("X_i X_{i±1} X_i = X_i", braid, 1e-10);
    }
    if n >= 4 {
        out.push("[X_i, X_j] = 0, |i−j| > 1", far, 1e-10);
    }
    Ok(())
}

fn ybe(p: &ModelParams, rng: &mut ChaCha8Rng, out: &mut Collector) -> Result<()> {
    let d = p.d();
    let three = TensorLayout::uniform(d, 3);
    let two = TensorLayout::uniform(d, 2);
    let (v, _) = build_crossing_matrices(p);
    let v1 = two.embed(&v, &[0]);
    let (mut ybe, mut unit, mut cross, mut right, mut left) = (0f64, 0f64, 0f64, 0f64, 0f64);
    for _ in 0..4 {
        let (u1, u2, u3) = (random_point(rng), random_point(rng), random_point(rng));
        let r12 = three.embed(&build_r(u1 / u2, p)?, &[0, 1]);
        let r13 = three.embed(&build_r(u1 / u3, p)?, &[0, 2]);
        let r23 = three.embed(&build_r(u2 / u3, p)?, &[1, 2]);
        ybe = ybe.max(rel_diff(&(&r12 * &r13 * &r23), &(&r23 * &r13 * &r12)));

        let prod = build_r(u1, p)? * flip(&build_r(u1.inv(), p)?, d);
        unit = unit.max(rel_diff_scalar_identity(&prod, zeta(u1, p.q())?));

        let crossed = build_r(-(u1 * p.q()).inv(), p)?;
        cross = cross.max(rel_diff(&build_r(u1, p)?, &(&v1 * two.partial_transpose(&crossed, 1) * &v1)));

        let (r, l) = boundary_ybe_residuals(u1, u2, p)?;
        right = right.max(r);
        left = left.max(l);
    }
    out.push("Yang-Baxter", ybe, 1e-10);
    out.push("unitarity", unit, 1e-10);
    out.push("crossing", cross, 1e-10);
    out.push("boundary YBE (K⁻ = I)", right, 1e-10);
    out.push("boundary YBE (K⁺ = M)", left, 1e-10);
    Ok(())
}

fn transfer_identities(p: &ModelParams, rng: &mut ChaCha8Rng, out: &mut Collector) -> Result<()> {
    let (u, v) = (random_point(rng), random_point(rng));
    let n = p.n_sites() as i32;
    out.push("RTT", fundamental_relation_residual(u, v, p)?, 1e-9);
    out.push("T(u) T̂(1/u) ∝ I", inverse_monodromy_residual(u, p)?.0, 1e-9);

    let tu = build_open_transfer(u, p)?.matrix;
    let tv = build_open_transfer(v, p)?.matrix;
    out.push("open [t(u), t(v)]", rel_diff(&(&tu * &tv), &(&tv * &tu)), 1e-9);
    let crossed = build_open_transfer(-(u * p.q()).inv(), p)?.matrix;
    out.push("open crossing t(u) = t(−1/(qu))", rel_diff(&tu, &crossed), 1e-9);

    let cu = build_closed_transfer(u, p)?.matrix;
    let cv = build_closed_transfer(v, p)?.matrix;
    out.push("closed [t(u), t(v)]", rel_diff(&(&cu * &cv), &(&cv * &cu)), 1e-9);

    if p.is_homogeneous() {
        let t1 = build_open_transfer(ONE, p)?.matrix;
        out.push("open t(1) = c ω(q)^{2N}", rel_diff_scalar_identity(&t1, p.c() * w(p.q()).powi(2 * n)), 1e-9);
        let c1 = build_closed_transfer(ONE, p)?.matrix;
        out.push("closed t(1) = ω(q)^N U", rel_diff(&c1, &(shift_operator(p) * w(p.q()).powi(n))), 1e-9);
        if p.n_sites() >= 2 {
            out.push("H = α t'(1) + β", hamiltonian_consistency(p)?, 1e-6);
        }
    }
    Ok(())
}

fn offshell(p: &ModelParams, opts: &VerifyOptions, rng: &mut ChaCha8Rng, out: &mut Collector) -> Result<()> {
    let ms: Vec<usize> = match opts.m {
        Some(m) => vec![m],
        None => (1..=opts.n_sites.min(3)).collect(),
    };
    for m in ms {
        let (mut right, mut dual) = (0f64, 0f64);
        let mut done = 0;
        let mut attempts = 0;
        while done < opts.configs {
            attempts += 1;
            if attempts > 20 * opts.configs + 20 {
                return Err(TlError::Solver("could not draw admissible off-shell configurations".into()));
            }
            let values: Vec<C64> = (0..m).map(|_| random_point(rng)).collect();
            let u = random_point(rng);
            match (offshell_residual(u, &values, p), offshell_residual_dual(u, &values, p)) {
                (Ok(r), Ok(rd)) => {
                    right = right.max(r);
                    dual = dual.max(rd);
                    done += 1;
                }
                (Err(TlError::Domain(_)), _) | (_, Err(TlError::Domain(_))) => continue,
                (Err(TlError::UndefinedState(_)), _) | (_, Err(TlError::UndefinedState(_))) => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        out.push(format!("M={m} t(u)|v⟩"), right, 1e-8);
        out.push(format!("M={m} ⟨v|t(u)"), dual, 1e-8);
    }
    Ok(())
}

fn scalar_products(p: &ModelParams, opts: &VerifyOptions, rng: &mut ChaCha8Rng, out: &mut Collector) -> Result<()> {
    let ms: Vec<usize> = match opts.m {
        Some(m) => vec![m],
        None => (1..=(opts.n_sites / 2).min(2)).collect(),
    };
    let configs = opts.configs.clamp(1, 5);
    for m in ms {
        let (mut sp, mut nrm, mut ext) = (0f64, 0f64, 0f64);
        for sol in solve_sector_open(p, m, &opts.search)? {
            for _ in 0..configs {
                let v: Vec<C64> = (0..m).map(|_| random_point(rng)).collect();
                let formula = scalar_product_det(&sol.roots, &v, p)?.value;
                let direct = direct_scalar_product(&sol.roots, &v, p)?;
                sp = sp.max(rel(formula, direct));
            }
            let norm = norm_squared(&sol, p)?;
            nrm = nrm.max(rel(norm, direct_scalar_product(&sol.roots, &sol.roots, p)?));
            let near = |eps: f64| -> Result<C64> {
                let v: Vec<C64> = sol.roots.iter().map(|u| u * (1.0 + eps)).collect();
                Ok(scalar_product_det(&sol.roots, &v, p)?.value)
            };
            let (b, c) = (near(1e-4)?, near(1e-5)?);
            ext = ext.max(rel(c + (c - b) / 9.0, norm));
        }
        out.push(format!("M={m} ⟨u|v⟩ determinant vs contraction"), sp, 1e-6);
        out.push(format!("M={m} ⟨u|u⟩ norm vs contraction"), nrm, 1e-6);
        out.push(format!("M={m} ⟨u|v⟩ → ⟨u|u⟩ as v → u"), ext, 1e-4);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(suite: &str, n: usize, spin: Spin) -> SuiteSummary {
        let s = run_suite(suite, &VerifyOptions { configs: 5, ..VerifyOptions::new(n, spin) }).unwrap();
        assert!(s.passed(), "{s:#?}");
        s
    }

    #[test]
    fn ybe_two_sites_spin_one() {
        assert!(run("ybe", 2, Spin::ONE).max_residual() <= 1e-10);
    }

    #[test]
    fn cheap_suites_pass() {
        run("tl-algebra", 4, Spin::HALF);
        run("transfer-identities", 2, Spin::ONE);
        run("symmetry", 2, Spin::HALF);
        run("offshell", 3, Spin::HALF);
        run("highest-weight", 3, Spin::HALF);
        run("scalar-products", 2, Spin::ONE);
    }

    #[test]
    fn inhomogeneous_functional_relations() {
        let opts = VerifyOptions { inhomogeneous: true, ..VerifyOptions::new(3, Spin::HALF) };
        assert!(run_suite("functional-relations", &opts).unwrap().passed());
        assert!(matches!(run_suite("ybe", &opts), Err(TlError::Usage(_))));
    }

    #[test]
    fn tolerance_override_can_fail() {
        let opts = VerifyOptions { tol: Some(0.0), ..VerifyOptions::new(2, Spin::ONE) };
        let s = run_suite("ybe", &opts).unwrap();
        assert!(s.entries.iter().any(|e| e.residual > 0.0));
        assert!(!s.passed());
    }
}
