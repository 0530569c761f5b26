//! Dense complex matrices on tensor-product spaces.
//!
//! Factor 0 is the most significant digit of a basis index, so an operator on
//! `aux ⊗ site_1 ⊗ … ⊗ site_N` has the auxiliary space leftmost.

use nalgebra::{DMatrix, DVector};

use crate::model::{C64, ONE, ZERO};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Index arithmetic for a tensor product of spaces with the given dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorLayout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl TensorLayout {
    pub fn new(dims: Vec<usize>) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let total = dims.iter().product();
        TensorLayout { dims, strides, total }
    }

    pub fn uniform(d: usize, factors: usize) -> Self {
        Self::new(vec![d; factors])
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn digit(&self, index: usize, factor: usize) -> usize {
        (index / self.strides[factor]) % self.dims[factor]
    }

    /// Offsets of the local basis states of `factors` (first factor most
    /// significant, matching the local operator's ordering).
    fn local_offsets(&self, factors: &[usize]) -> Vec<usize> {
        let mut offs = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offs.len() * self.dims[f]);
            for &o in &offs {
                for k in 0..self.dims[f] {
                    next.push(o + k * self.strides[f]);
                }
            }
            offs = next;
        }
        offs
    }

    /// Indices whose digits on `factors` are all zero.
    fn base_offsets(&self, factors: &[usize]) -> Vec<usize> {
        (0..self.total)
            .filter(|&i| factors.iter().all(|&f| self.digit(i, f) == 0))
            .collect()
    }

    fn check_factors(&self, op: &CMat, factors: &[usize]) {
        let local: usize = factors.iter().map(|&f| self.dims[f]).product();
        assert_eq!(op.nrows(), local, "local operator does not match factor dimensions");
        assert_eq!(op.ncols(), local, "local operator must be square");
        for (a, &f) in factors.iter().enumerate() {
            assert!(f < self.dims.len(), "factor {f} out of range");
            assert!(!factors[..a].contains(&f), "repeated factor {f}");
        }
    }

    /// `v ← (op on factors) v` for a single vector.
    pub fn apply_to_slice(&self, op: &CMat, factors: &[usize], v: &mut [C64]) {
        let plan = LocalPlan::new(self, op, factors);
        plan.apply(v);
    }

    /// Left-multiply every column of `mat` by the embedded local operator.
    pub fn apply_left(&self, op: &CMat, factors: &[usize], mat: &mut CMat) {
        assert_eq!(mat.nrows(), self.total);
        let plan = LocalPlan::new(self, op, factors);
        let rows = mat.nrows();
        for col in mat.as_mut_slice().chunks_mut(rows) {
            plan.apply(col);
        }
    }

    /// Right-multiply `mat` by the embedded local operator.
    pub fn apply_right(&self, mat: &mut CMat, op: &CMat, factors: &[usize]) {
        assert_eq!(mat.ncols(), self.total);
        let mut t = mat.transpose();
        self.apply_left(&op.transpose(), factors, &mut t);
        *mat = t.transpose();
    }

    /// The local operator embedded as a full matrix.
    pub fn embed(&self, op: &CMat, factors: &[usize]) -> CMat {
        let mut m = CMat::identity(self.total, self.total);
        self.apply_left(op, factors, &mut m);
        m
    }

    /// Transpose with respect to a single factor.
    pub fn partial_transpose(&self, mat: &CMat, factor: usize) -> CMat {
        let n = self.total;
        let s = self.strides[factor];
        CMat::from_fn(n, n, |r, c| {
            let (dr, dc) = (self.digit(r, factor), self.digit(c, factor));
            let r2 = r - dr * s + dc * s;
            let c2 = c - dc * s + dr * s;
            mat[(r2, c2)]
        })
    }

    /// Block `(i, j)` of factor 0, as an operator on the remaining factors.
    pub fn leading_block(&self, mat: &CMat, i: usize, j: usize) -> CMat {
        let s = self.strides[0];
        mat.view((i * s, j * s), (s, s)).into_owned()
    }

    /// `Σ_j w_j · block(j, j)` over factor 0 (a weighted partial trace).
    pub fn trace_leading(&self, mat: &CMat, weights: &[C64]) -> CMat {
        let s = self.strides[0];
        let mut out = CMat::zeros(s, s);
        for (j, &wj) in weights.iter().enumerate() {
            out += mat.view((j * s, j * s), (s, s)) * wj;
        }
        out
    }

    /// Embed an operator on factors `1..` as `I ⊗ op`.
    pub fn lift_trailing(&self, op: &CMat) -> CMat {
        let d0 = self.dims[0];
        let s = self.strides[0];
        assert_eq!(op.nrows(), s);
        let mut m = CMat::zeros(self.total, self.total);
        for j in 0..d0 {
            m.view_mut((j * s, j * s), (s, s)).copy_from(op);
        }
        m
    }
}

struct LocalPlan<'a> {
    op: &'a CMat,
    local: Vec<usize>,
    base: Vec<usize>,
}

impl<'a> LocalPlan<'a> {
    fn new(layout: &TensorLayout, op: &'a CMat, factors: &[usize]) -> Self {
        layout.check_factors(op, factors);
        LocalPlan {
            op,
            local: layout.local_offsets(factors),
            base: layout.base_offsets(factors),
        }
    }

    fn apply(&self, v: &mut [C64]) {
        let k = self.local.len();
        let mut x = vec![ZERO; k];
        for &b in &self.base {
            let mut any = false;
            for (l, &o) in self.local.iter().enumerate() {
                x[l] = v[b + o];
                any |= x[l] != ZERO;
            }
            if !any {
                continue;
            }
            for (r, &o) in self.local.iter().enumerate() {
                let mut acc = ZERO;
                for (l, &xl) in x.iter().enumerate() {
                    acc += self.op[(r, l)] * xl;
                }
                v[b + o] = acc;
            }
        }
    }
}

/// An ordered product of local operators, stored in application order
/// (the first entry acts first, i.e. is rightmost in the matrix product).
#[derive(Clone, Debug)]
pub struct LocalProduct {
    layout: TensorLayout,
    ops: Vec<(CMat, Vec<usize>)>,
}

impl LocalProduct {
    pub fn new(layout: TensorLayout) -> Self {
        LocalProduct { layout, ops: Vec::new() }
    }

    pub fn layout(&self) -> &TensorLayout {
        &self.layout
    }

    /// Multiply on the left by `op` acting on `factors`.
    pub fn then(&mut self, op: CMat, factors: &[usize]) -> &mut Self {
        self.layout.check_factors(&op, factors);
        self.ops.push((op, factors.to_vec()));
        self
    }

    /// `self ← other · self`.
    pub fn then_product(&mut self, other: &LocalProduct) -> &mut Self {
        assert_eq!(self.layout, other.layout);
        self.ops.extend(other.ops.iter().cloned());
        self
    }

    pub fn apply_slice(&self, v: &mut [C64]) {
        for (op, f) in &self.ops {
            self.layout.apply_to_slice(op, f, v);
        }
    }

    pub fn apply_vec(&self, v: &CVec) -> CVec {
        let mut out = v.clone();
        self.apply_slice(out.as_mut_slice());
        out
    }

    /// `v ← Aᵀ v`, i.e. the row vector `vᵀ A` written as a column.
    pub fn apply_transpose_slice(&self, v: &mut [C64]) {
        for (op, f) in self.ops.iter().rev() {
            self.layout.apply_to_slice(&op.transpose(), f, v);
        }
    }

    pub fn apply_left(&self, mat: &mut CMat) {
        for (op, f) in &self.ops {
            self.layout.apply_left(op, f, mat);
        }
    }

    pub fn apply_right(&self, mat: &mut CMat) {
        for (op, f) in self.ops.iter().rev() {
            self.layout.apply_right(mat, op, f);
        }
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.layout.total();
        let mut m = CMat::identity(n, n);
        self.apply_left(&mut m);
        m
    }
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max|a - b| / (1 + max(max|a|, max|b|))`.
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let num = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    num / (1.0 + max_abs(a).max(max_abs(b)))
}

/// Residual of `a ≈ λ·I`, scaled like [`rel_diff`].
pub fn rel_diff_scalar_identity(a: &CMat, lambda: C64) -> f64 {
    let id = CMat::identity(a.nrows(), a.ncols()) * lambda;
    rel_diff(a, &id)
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Bilinear contraction `Σ a_i b_i` (no conjugation).
pub fn bilinear(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Permutation `P|a,b⟩ = |b,a⟩` on `C^d ⊗ C^d`.
pub fn swap(d: usize) -> CMat {
    let mut p = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            p[(b * d + a, a * d + b)] = ONE;
        }
    }
    p
}

/// Outcome of a rank-revealing full-pivot LU.
#[derive(Clone, Debug)]
pub struct RankInfo {
    pub rank: usize,
    pub nullity: usize,
    /// Moduli of the accepted pivots, in elimination order.
    pub pivots: Vec<f64>,
    /// Largest remaining entry when elimination stopped.
    pub rejected: f64,
    pub threshold: f64,
    /// Set when the last accepted pivot or the first rejected one lies within
    /// a factor 10 of the threshold.
    pub ambiguous: bool,
}

struct FullPivLu {
    lu: CMat,
    col_perm: Vec<usize>,
    info: RankInfo,
}

fn full_piv_lu(a: CMat, rel_tol: f64) -> FullPivLu {
    full_piv_lu_with(a, Threshold::Relative(rel_tol))
}

#[derive(Clone, Copy)]
enum Threshold {
    Relative(f64),
    Absolute(f64),
}

fn full_piv_lu_with(mut a: CMat, rule: Threshold) -> FullPivLu {
    let (n, m) = a.shape();
    let mut col_perm: Vec<usize> = (0..m).collect();
    let kmax = n.min(m);
    let mut pivots = Vec::with_capacity(kmax);
    let mut threshold = 0.0;
    let mut rejected = 0.0;
    let mut rank = 0;
    for k in 0..kmax {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for c in k..m {
            for r in k..n {
                let v = a[(r, c)].norm();
                if v > best {
                    best = v;
                    pr = r;
                    pc = c;
                }
            }
        }
        if k == 0 {
            threshold = match rule {
                Threshold::Relative(t) => t * best,
                Threshold::Absolute(t) => t,
            };
        }
        if best <= threshold || best == 0.0 {
            rejected = best.max(0.0);
            break;
        }
        a.swap_rows(k, pr);
        a.swap_columns(k, pc);
        col_perm.swap(k, pc);
        let piv = a[(k, k)];
        pivots.push(piv.norm());
        for r in k + 1..n {
            let f = a[(r, k)] / piv;
            a[(r, k)] = f;
            if f == ZERO {
                continue;
            }
            for c in k + 1..m {
                let t = a[(k, c)];
                a[(r, c)] -= f * t;
            }
        }
        rank += 1;
    }
    let last = pivots.last().copied().unwrap_or(f64::INFINITY);
    let ambiguous = threshold > 0.0
        && ((rank < kmax && rejected > threshold / 10.0) || (rank > 0 && last < 10.0 * threshold));
    FullPivLu {
        lu: a,
        col_perm,
        info: RankInfo {
            rank,
            nullity: m - rank,
            pivots,
            rejected,
            threshold,
            ambiguous,
        },
    }
}

/// Numerical rank with threshold `rel_tol × largest pivot`.
pub fn numerical_rank(mat: &CMat, rel_tol: f64) -> RankInfo {
    if mat.is_empty() {
        return RankInfo {
            rank: 0,
            nullity: mat.ncols(),
            pivots: vec![],
            rejected: 0.0,
            threshold: 0.0,
            ambiguous: false,
        };
    }
    full_piv_lu(mat.clone(), rel_tol).info
}

/// Numerical rank with a fixed absolute pivot threshold.
pub fn numerical_rank_abs(mat: &CMat, threshold: f64) -> RankInfo {
    if mat.is_empty() {
        return RankInfo {
            rank: 0,
            nullity: mat.ncols(),
            pivots: vec![],
            rejected: 0.0,
            threshold,
            ambiguous: false,
        };
    }
    full_piv_lu_with(mat.clone(), Threshold::Absolute(threshold)).info
}

/// Basis of the numerical right null space (columns).
pub fn null_space(mat: &CMat, rel_tol: f64) -> CMat {
    let m = mat.ncols();
    let f = full_piv_lu(mat.clone(), rel_tol);
    let r = f.info.rank;
    let mut basis = CMat::zeros(m, m - r);
    for (k, free) in (r..m).enumerate() {
        // solve U[:r,:r] x = -U[:r, free]
        let mut x = vec![ZERO; r];
        for i in (0..r).rev() {
            let mut acc = -f.lu[(i, free)];
            for j in i + 1..r {
                acc -= f.lu[(i, j)] * x[j];
            }
            x[i] = acc / f.lu[(i, i)];
        }
        for i in 0..r {
            basis[(f.col_perm[i], k)] = x[i];
        }
        basis[(f.col_perm[free], k)] = ONE;
    }
    basis
}

/// Determinant via partial-pivot LU.
pub fn determinant(mat: &CMat) -> C64 {
    assert!(mat.is_square());
    if mat.is_empty() {
        return ONE;
    }
    mat.clone().lu().determinant()
}

/// 1-norm condition estimate `‖A‖₁ ‖A⁻¹‖₁`; infinite when singular.
pub fn condition_number(mat: &CMat) -> f64 {
    if mat.is_empty() {
        return 1.0;
    }
    let norm1 = |m: &CMat| {
        (0..m.ncols())
            .map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match mat.clone().try_inverse() {
        Some(inv) => norm1(mat) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// Eigenvalues of a general complex matrix (complex Schur form).
pub fn eigenvalues(mat: &CMat) -> Vec<C64> {
    if mat.is_empty() {
        return vec![];
    }
    let schur = mat.clone().schur();
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Group values that agree within `tol × (1 + |z|)`; returns `(value, count)`.
pub fn cluster_values(values: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for &z in values {
        match out
            .iter_mut()
            .find(|(c, _)| (c - z).norm() <= tol * (1.0 + z.norm()))
        {
            Some(entry) => entry.1 += 1,
            None => out.push((z, 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            c(a, b)
        })
    }

    #[test]
    fn embed_matches_kronecker() {
        let d = 2;
        let layout = TensorLayout::uniform(d, 3);
        let op = sample(4, 7);
        let id = CMat::identity(d, d);
        let expected = id.kronecker(&op);
        assert!(rel_diff(&layout.embed(&op, &[1, 2]), &expected) < 1e-14);
        let expected = op.kronecker(&id);
        assert!(rel_diff(&layout.embed(&op, &[0, 1]), &expected) < 1e-14);
    }

    #[test]
    fn reversed_factor_order_is_conjugation_by_swap() {
        let d = 3;
        let layout = TensorLayout::uniform(d, 2);
        let op = sample(9, 3);
        let p = swap(d);
        let lhs = layout.embed(&op, &[1, 0]);
        let rhs = &p * &op * &p;
        assert!(rel_diff(&lhs, &rhs) < 1e-14);
    }

    #[test]
    fn right_application_matches_product() {
        let layout = TensorLayout::new(vec![2, 3, 2]);
        let op = sample(6, 11);
        let m = sample(12, 5);
        let mut got = m.clone();
        layout.apply_right(&mut got, &op, &[2, 1]);
        let expected = &m * layout.embed(&op, &[2, 1]);
        assert!(rel_diff(&got, &expected) < 1e-13);
    }

    #[test]
    fn partial_transpose_of_product_state() {
        let a = sample(2, 1);
        let b = sample(3, 2);
        let layout = TensorLayout::new(vec![2, 3]);
        let m = a.kronecker(&b);
        let t1 = layout.partial_transpose(&m, 0);
        assert!(rel_diff(&t1, &a.transpose().kronecker(&b)) < 1e-15);
        let t2 = layout.partial_transpose(&m, 1);
        assert!(rel_diff(&t2, &a.kronecker(&b.transpose())) < 1e-15);
    }

    #[test]
    fn rank_and_null_space() {
        let u = sample(6, 9).columns(0, 2).into_owned();
        let v = sample(6, 4).columns(0, 2).into_owned();
        let a = &u * v.transpose();
        let info = numerical_rank(&a, 1e-10);
        assert_eq!(info.rank, 2);
        assert_eq!(info.nullity, 4);
        assert!(!info.ambiguous);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.ncols(), 4);
        assert!(max_abs(&(&a * &ns)) < 1e-12);
        assert_eq!(numerical_rank(&CMat::identity(5, 5), 1e-8).nullity, 0);
    }

    #[test]
    fn determinant_and_eigenvalues_of_triangular() {
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = c(1.0, 1.0);
        m[(1, 1)] = c(2.0, 0.0);
        m[(2, 2)] = c(0.0, -3.0);
        m[(0, 2)] = c(5.0, 0.0);
        let det = determinant(&m);
        assert!((det - c(1.0, 1.0) * c(2.0, 0.0) * c(0.0, -3.0)).norm() < 1e-13);
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        assert!((ev[0] - c(1.0, 1.0)).norm() < 1e-12);
        assert!((ev[2] - c(0.0, -3.0)).norm() < 1e-12);
    }
}
