//! Nonnegative least squares `min_{x >= 0} ||A^T x - b||` by the
//! Lawson-Hanson active-set method.
//!
//! The transposed layout (`A` is m x n, variables indexed by rows of `A`)
//! matches the orientation in which the Tobit M-step assembles its
//! system, so callers there never transpose.
//!
//! Two inner-solve backends share the same outer loop: a Householder-QR
//! solve on the passive columns (the default, used by [`solve_nnls`]) and
//! a Cholesky solve on a precomputed Gram matrix ([`solve_nnls_gram`]),
//! which the EM loop uses so the Gram blocks can be cached across
//! iterations.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::float;
use crate::linalg::{self, Mat};

/// `min ||A^T x - b||` over `x >= 0`, with `A` of shape m x n and `b` of
/// length n.
#[derive(Debug, Clone)]
pub struct NnlsProblem {
    a: Mat,
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NnlsError {
    /// `A` or `b` contains NaN or infinity.
    NonFinite,
    /// Zero-sized matrix or mismatched vector length.
    DimensionMismatch,
    /// `x` handed to [`kkt_violation`] has a negative component.
    InfeasiblePoint,
    /// The passive-set least squares became numerically rank deficient.
    Degenerate,
    /// Outer iteration cap reached; carries the best iterate found.
    IterationLimit(Box<NnlsSolution>),
}

impl fmt::Display for NnlsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnlsError::NonFinite => write!(f, "input contains non-finite values"),
            NnlsError::DimensionMismatch => write!(f, "dimension mismatch"),
            NnlsError::InfeasiblePoint => write!(f, "point has negative components"),
            NnlsError::Degenerate => write!(f, "passive-set system is rank deficient"),
            NnlsError::IterationLimit(s) => write!(
                f,
                "iteration cap exceeded (best KKT violation {:.3e})",
                s.kkt_violation
            ),
        }
    }
}

impl core::error::Error for NnlsError {}

impl NnlsProblem {
    pub fn new(a: Mat, b: Vec<f64>) -> Result<Self, NnlsError> {
        if a.rows() == 0 || a.cols() == 0 || b.is_empty() {
            return Err(NnlsError::DimensionMismatch);
        }
        if b.len() != a.cols() {
            return Err(NnlsError::DimensionMismatch);
        }
        if !a.is_finite() || !b.iter().all(|v| v.is_finite()) {
            return Err(NnlsError::NonFinite);
        }
        Ok(NnlsProblem { a, b })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Number of variables (rows of `A`).
    pub fn dim(&self) -> usize {
        self.a.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub kkt_violation: f64,
    /// `||A^T x - b||^2` after each outer iteration, recorded when
    /// [`NnlsOptions::record_objectives`] is set. Nonincreasing.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct NnlsOptions {
    /// KKT tolerance; defaults to `1e-10 * (1 + ||b||_inf)`.
    pub tol: Option<f64>,
    /// Outer iteration cap; defaults to `3 m`.
    pub max_iters: Option<usize>,
    /// Passive-set guess, typically the support of the previous solve.
    pub warm_start: Vec<usize>,
    /// Start from the iterate the scratch still holds from the previous
    /// solve (support and values), skipping re-initialization. Falls back
    /// to a cold or `warm_start` start when the scratch does not hold a
    /// same-dimension iterate. Intended for long sequences of slowly
    /// changing problems.
    pub resume: bool,
    pub record_objectives: bool,
}

/// Reusable buffers for the active-set loop. A caller that solves many
/// related problems (the EM loop) keeps one of these across solves so
/// the per-solve allocation cost disappears.
#[derive(Debug, Default)]
pub struct NnlsScratch {
    x: Vec<f64>,
    g: Vec<f64>,
    z: Vec<f64>,
    sub: Vec<f64>,
    in_passive: Vec<bool>,
    blocked: Vec<bool>,
    passive: Vec<usize>,
}

impl NnlsScratch {
    pub fn new() -> Self {
        Self::default()
    }

    /// The iterate left behind by the latest in-scratch solve.
    pub fn solution(&self) -> &[f64] {
        &self.x
    }
}

/// Result summary of an in-scratch solve; the iterate itself stays in
/// [`NnlsScratch::solution`].
#[derive(Debug, Clone, Copy)]
pub struct NnlsOutcome {
    pub iterations: usize,
    pub residual_norm: f64,
    pub kkt_violation: f64,
}

/// Quadratic `||A^T x - b||^2` seen through whichever factorization the
/// backend keeps.
trait QuadModel {
    fn dim(&self) -> usize;
    /// `g = A (A^T x - b)` written into the provided buffer.
    fn gradient_into(&self, x: &[f64], g: &mut Vec<f64>);
    /// `||A^T x - b||^2`.
    fn objective2(&self, x: &[f64]) -> f64;
    /// Same value, reusing an already-computed gradient at `x`:
    /// `x . g - x . (A b) + ||b||^2`.
    fn objective2_from_gradient(&self, x: &[f64], g: &[f64]) -> f64 {
        let _ = g;
        self.objective2(x)
    }
    /// Entry `(i, j)` of the normal-equation matrix `A A^T` (plus any
    /// model diagonal) and entry `i` of its right-hand side `A b`.
    fn sys_entry(&self, i: usize, j: usize) -> f64;
    fn rhs_entry(&self, i: usize) -> f64;
    /// Whether the active-set loop should maintain a Cholesky factor of
    /// the passive system incrementally via [`QuadModel::sys_entry`]
    /// instead of re-solving from scratch after every pivot.
    fn factored(&self) -> bool {
        false
    }
    /// Unconstrained least squares restricted to the passive indices,
    /// written into `z` (using `sub` as factorization space). Returns
    /// false when the restricted system is rank deficient.
    fn solve_passive_into(&self, passive: &[usize], sub: &mut Vec<f64>, z: &mut Vec<f64>) -> bool {
        let k = passive.len();
        sub.resize(k * k, 0.0);
        z.resize(k, 0.0);
        for (r, &i) in passive.iter().enumerate() {
            z[r] = self.rhs_entry(i);
            for (c, &j) in passive.iter().enumerate() {
                sub[r * k + c] = self.sys_entry(i, j);
            }
        }
        linalg::solve_spd_in_place(sub, z, k)
    }
    fn b_inf_norm(&self) -> f64;
}

struct DenseModel<'a> {
    p: &'a NnlsProblem,
}

impl QuadModel for DenseModel<'_> {
    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn gradient_into(&self, x: &[f64], g: &mut Vec<f64>) {
        let mut r = self.p.a.tr_matvec(x);
        for (ri, bi) in r.iter_mut().zip(&self.p.b) {
            *ri -= bi;
        }
        *g = self.p.a.matvec(&r);
    }

    fn objective2(&self, x: &[f64]) -> f64 {
        let r = self.p.a.tr_matvec(x);
        r.iter()
            .zip(&self.p.b)
            .map(|(ri, bi)| (ri - bi) * (ri - bi))
            .sum()
    }

    fn sys_entry(&self, i: usize, j: usize) -> f64 {
        linalg::dot(self.p.a.row(i), self.p.a.row(j))
    }

    fn rhs_entry(&self, i: usize) -> f64 {
        linalg::dot(self.p.a.row(i), &self.p.b)
    }

    /// Householder QR on the passive columns, which keeps full accuracy
    /// on ill-conditioned designs where the normal equations would not.
    fn solve_passive_into(&self, passive: &[usize], _sub: &mut Vec<f64>, z: &mut Vec<f64>) -> bool {
        let cols: Vec<&[f64]> = passive.iter().map(|&i| self.p.a.row(i)).collect();
        match linalg::lstsq_qr(&cols, &self.p.b) {
            Some(sol) => {
                *z = sol;
                true
            }
            None => false,
        }
    }

    fn b_inf_norm(&self) -> f64 {
        self.p.b.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

struct GramModel<'a> {
    gram: &'a Mat,
    atb: &'a [f64],
    b_norm2: f64,
    b_inf: f64,
}

impl QuadModel for GramModel<'_> {
    fn dim(&self) -> usize {
        self.gram.rows()
    }

    fn gradient_into(&self, x: &[f64], g: &mut Vec<f64>) {
        let n = self.gram.rows();
        g.resize(n, 0.0);
        for (i, (gi, ci)) in g.iter_mut().zip(self.atb).enumerate() {
            *gi = linalg::dot(self.gram.row(i), x) - ci;
        }
    }

    fn objective2(&self, x: &[f64]) -> f64 {
        let gx = self.gram.matvec(x);
        let v = linalg::dot(x, &gx) - 2.0 * linalg::dot(x, self.atb) + self.b_norm2;
        v.max(0.0)
    }

    fn objective2_from_gradient(&self, x: &[f64], g: &[f64]) -> f64 {
        let v = linalg::dot(x, g) - linalg::dot(x, self.atb) + self.b_norm2;
        v.max(0.0)
    }

    fn sys_entry(&self, i: usize, j: usize) -> f64 {
        self.gram.get(i, j)
    }

    fn rhs_entry(&self, i: usize) -> f64 {
        self.atb[i]
    }

    fn factored(&self) -> bool {
        true
    }

    fn b_inf_norm(&self) -> f64 {
        self.b_inf
    }
}

/// Positive/negative split system over a shared `d x d` Gram block `S`:
/// the `2d x 2d` matrix `[[S, -S], [-S, S]] + diag(pen)` with right-hand
/// side `[c0; -c0]`. Storing only `S` keeps the gradient a `d x d`
/// matvec instead of `2d x 2d`.
struct SignSplitModel<'a> {
    s: &'a Mat,
    pen: &'a [f64],
    c0: &'a [f64],
    b_norm2: f64,
    b_inf: f64,
}

impl SignSplitModel<'_> {
    fn d(&self) -> usize {
        self.s.rows()
    }
}

impl QuadModel for SignSplitModel<'_> {
    fn dim(&self) -> usize {
        2 * self.d()
    }

    fn gradient_into(&self, x: &[f64], g: &mut Vec<f64>) {
        let d = self.d();
        g.resize(2 * d, 0.0);
        // u = x_pos - x_neg in the low half, t = S u in the high half,
        // then both halves rewritten in place
        let (xp, xn) = x.split_at(d);
        let (gu, gt) = g.split_at_mut(d);
        for ((u, a), b) in gu.iter_mut().zip(xp).zip(xn) {
            *u = a - b;
        }
        for (i, t) in gt.iter_mut().enumerate() {
            *t = linalg::dot(self.s.row(i), gu);
        }
        let (pp, pn) = self.pen.split_at(d);
        for i in 0..d {
            let t = gt[i];
            gu[i] = t + pp[i] * xp[i] - self.c0[i];
            gt[i] = -t + pn[i] * xn[i] + self.c0[i];
        }
    }

    fn objective2(&self, x: &[f64]) -> f64 {
        let d = self.d();
        let u: Vec<f64> = (0..d).map(|i| x[i] - x[d + i]).collect();
        let su = self.s.matvec(&u);
        let mut v = linalg::dot(&u, &su) - 2.0 * linalg::dot(&u, self.c0) + self.b_norm2;
        for i in 0..2 * d {
            v += self.pen[i] * x[i] * x[i];
        }
        v.max(0.0)
    }

    fn objective2_from_gradient(&self, x: &[f64], g: &[f64]) -> f64 {
        let d = self.d();
        let mut cx = 0.0;
        for i in 0..d {
            cx += self.c0[i] * (x[i] - x[d + i]);
        }
        (linalg::dot(x, g) - cx + self.b_norm2).max(0.0)
    }

    fn sys_entry(&self, i: usize, j: usize) -> f64 {
        let d = self.d();
        let (ip, si) = if i < d { (i, 1.0) } else { (i - d, -1.0) };
        let (jp, sj) = if j < d { (j, 1.0) } else { (j - d, -1.0) };
        let v = si * sj * self.s.get(ip, jp);
        if i == j {
            v + self.pen[i]
        } else {
            v
        }
    }

    fn rhs_entry(&self, i: usize) -> f64 {
        let d = self.d();
        if i < d {
            self.c0[i]
        } else {
            -self.c0[i - d]
        }
    }

    fn factored(&self) -> bool {
        true
    }

    fn b_inf_norm(&self) -> f64 {
        self.b_inf
    }
}

/// Solves the NNLS problem with the default options and an explicit KKT
/// tolerance.
pub fn solve_nnls(problem: &NnlsProblem, tol: f64) -> Result<NnlsSolution, NnlsError> {
    let opts = NnlsOptions {
        tol: Some(tol),
        ..NnlsOptions::default()
    };
    solve_nnls_with(problem, &opts)
}

pub fn solve_nnls_with(
    problem: &NnlsProblem,
    opts: &NnlsOptions,
) -> Result<NnlsSolution, NnlsError> {
    active_set(&DenseModel { p: problem }, opts, &mut NnlsScratch::new())
}

/// Gram-matrix entry point: solves the same problem given `G = A A^T`,
/// `c = A b`, and `||b||^2`. The caller is responsible for the
/// consistency of the three.
pub fn solve_nnls_gram(
    gram: &Mat,
    atb: &[f64],
    b_norm2: f64,
    opts: &NnlsOptions,
) -> Result<NnlsSolution, NnlsError> {
    solve_nnls_gram_with_scratch(gram, atb, b_norm2, opts, &mut NnlsScratch::new())
}

/// Like [`solve_nnls_gram`] but reuses caller-owned buffers across
/// solves.
pub fn solve_nnls_gram_with_scratch(
    gram: &Mat,
    atb: &[f64],
    b_norm2: f64,
    opts: &NnlsOptions,
    scratch: &mut NnlsScratch,
) -> Result<NnlsSolution, NnlsError> {
    if gram.rows() == 0 || gram.rows() != gram.cols() || atb.len() != gram.rows() {
        return Err(NnlsError::DimensionMismatch);
    }
    if !gram.is_finite() || !atb.iter().all(|v| v.is_finite()) || !b_norm2.is_finite() {
        return Err(NnlsError::NonFinite);
    }
    let b_inf = atb.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let model = GramModel {
        gram,
        atb,
        b_norm2,
        b_inf,
    };
    active_set(&model, opts, scratch)
}

/// Structured entry point for the positive/negative split system: with
/// `S` a `d x d` SPD block, `pen` a `2d` diagonal penalty, and `c0` a
/// `d`-vector, solves NNLS for the `2d x 2d` Gram matrix
/// `[[S, -S], [-S, S]] + diag(pen)` and right-hand side `[c0; -c0]`
/// without materializing it.
pub fn solve_nnls_sign_split_with_scratch(
    s: &Mat,
    pen: &[f64],
    c0: &[f64],
    b_norm2: f64,
    opts: &NnlsOptions,
    scratch: &mut NnlsScratch,
) -> Result<NnlsSolution, NnlsError> {
    let model = sign_split_model(s, pen, c0, b_norm2)?;
    active_set(&model, opts, scratch)
}

/// Like [`solve_nnls_sign_split_with_scratch`] but leaves the iterate in
/// [`NnlsScratch::solution`] instead of allocating a copy, for callers
/// solving a long sequence of related problems. The objective trace is
/// not recorded on this path.
pub fn solve_nnls_sign_split_in_scratch(
    s: &Mat,
    pen: &[f64],
    c0: &[f64],
    b_norm2: f64,
    opts: &NnlsOptions,
    scratch: &mut NnlsScratch,
) -> Result<NnlsOutcome, NnlsError> {
    let model = sign_split_model(s, pen, c0, b_norm2)?;
    active_set_raw(&model, opts, scratch).map(|(outcome, _)| outcome)
}

/// Crate-internal variant that skips the input finiteness scans, for the
/// EM loop where `s` is fixed across a long solve sequence and the other
/// inputs are produced by already-validated steps. Dimensions are still
/// checked.
pub(crate) fn solve_nnls_sign_split_in_scratch_trusted(
    s: &Mat,
    pen: &[f64],
    c0: &[f64],
    b_norm2: f64,
    opts: &NnlsOptions,
    scratch: &mut NnlsScratch,
) -> Result<NnlsOutcome, NnlsError> {
    let d = s.rows();
    if d == 0 || s.cols() != d || pen.len() != 2 * d || c0.len() != d {
        return Err(NnlsError::DimensionMismatch);
    }
    let b_inf = c0.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let model = SignSplitModel {
        s,
        pen,
        c0,
        b_norm2,
        b_inf,
    };
    active_set_raw(&model, opts, scratch).map(|(outcome, _)| outcome)
}

fn sign_split_model<'a>(
    s: &'a Mat,
    pen: &'a [f64],
    c0: &'a [f64],
    b_norm2: f64,
) -> Result<SignSplitModel<'a>, NnlsError> {
    let d = s.rows();
    if d == 0 || s.cols() != d || pen.len() != 2 * d || c0.len() != d {
        return Err(NnlsError::DimensionMismatch);
    }
    if !s.is_finite()
        || !pen.iter().all(|v| v.is_finite())
        || !c0.iter().all(|v| v.is_finite())
        || !b_norm2.is_finite()
    {
        return Err(NnlsError::NonFinite);
    }
    let b_inf = c0.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(SignSplitModel {
        s,
        pen,
        c0,
        b_norm2,
        b_inf,
    })
}

/// `max( max_{x_i = 0} (-g_i)_+, max_{x_i > 0} |g_i| )` with
/// `g = A (A^T x - b)`; zero iff `x` is optimal.
pub fn kkt_violation(problem: &NnlsProblem, x: &[f64]) -> Result<f64, NnlsError> {
    if x.len() != problem.dim() {
        return Err(NnlsError::DimensionMismatch);
    }
    if x.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(NnlsError::InfeasiblePoint);
    }
    let model = DenseModel { p: problem };
    let mut g = Vec::new();
    model.gradient_into(x, &mut g);
    Ok(kkt_of(&g, x))
}

fn kkt_of(g: &[f64], x: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (gi, xi) in g.iter().zip(x) {
        if *xi > 0.0 {
            worst = worst.max(gi.abs());
        } else {
            worst = worst.max(-gi);
        }
    }
    worst.max(0.0)
}

fn active_set<M: QuadModel>(
    model: &M,
    opts: &NnlsOptions,
    scratch: &mut NnlsScratch,
) -> Result<NnlsSolution, NnlsError> {
    let (outcome, trace) = active_set_raw(model, opts, scratch)?;
    Ok(NnlsSolution {
        x: scratch.x.clone(),
        residual_norm: outcome.residual_norm,
        iterations: outcome.iterations,
        kkt_violation: outcome.kkt_violation,
        objective_trace: trace,
    })
}

/// Extends a maintained Cholesky factor of the passive system: rows
/// `0..from` of `fact` (leading dimension `ld`) are assumed consistent
/// with `passive[..from]`, and rows `from..` are (re)built from
/// [`QuadModel::sys_entry`]. Appending one variable therefore costs
/// `O(k^2)` instead of a fresh `O(k^3)` factorization. Returns false on
/// numerical rank deficiency.
fn factor_rows<M: QuadModel>(
    model: &M,
    passive: &[usize],
    fact: &mut [f64],
    ld: usize,
    from: usize,
) -> bool {
    for r in from..passive.len() {
        let i = passive[r];
        let (done, rest) = fact.split_at_mut(r * ld);
        let row_r = &mut rest[..=r];
        for (c, &j) in passive[..=r].iter().enumerate() {
            row_r[c] = model.sys_entry(i, j);
        }
        for c in 0..r {
            let row_c = &done[c * ld..c * ld + c];
            let s = row_r[c] - linalg::dot(&row_r[..c], row_c);
            row_r[c] = s / done[c * ld + c];
        }
        let s = row_r[r] - linalg::dot(&row_r[..r], &row_r[..r]);
        if !(s > 0.0) || !s.is_finite() {
            return false;
        }
        row_r[r] = float::sqrt(s);
    }
    true
}

/// Solves the passive system through the maintained factor.
fn factor_solve<M: QuadModel>(
    model: &M,
    passive: &[usize],
    fact: &[f64],
    ld: usize,
    z: &mut Vec<f64>,
) {
    let k = passive.len();
    z.clear();
    z.extend(passive.iter().map(|&i| model.rhs_entry(i)));
    for r in 0..k {
        let row = &fact[r * ld..r * ld + r];
        z[r] = (z[r] - linalg::dot(row, &z[..r])) / fact[r * ld + r];
    }
    for r in (0..k).rev() {
        let mut s = z[r];
        for t in r + 1..k {
            s -= fact[t * ld + r] * z[t];
        }
        z[r] = s / fact[r * ld + r];
    }
}

/// One passive-system solve, through whichever backend the model asks
/// for. `valid` counts the leading factor rows still consistent with
/// `passive`; callers lower it when they remove passive variables.
fn passive_solve<M: QuadModel>(
    model: &M,
    passive: &[usize],
    sub: &mut Vec<f64>,
    z: &mut Vec<f64>,
    ld: usize,
    valid: &mut usize,
) -> bool {
    if model.factored() {
        let k = passive.len();
        let from = (*valid).min(k);
        if !factor_rows(model, passive, sub, ld, from) {
            *valid = 0;
            return false;
        }
        *valid = k;
        factor_solve(model, passive, sub, ld, z);
        true
    } else {
        model.solve_passive_into(passive, sub, z)
    }
}

/// Active-set core; leaves the iterate in `scratch.x` and returns the
/// summary plus the recorded objective trace.
fn active_set_raw<M: QuadModel>(
    model: &M,
    opts: &NnlsOptions,
    scratch: &mut NnlsScratch,
) -> Result<(NnlsOutcome, Vec<f64>), NnlsError> {
    let m = model.dim();
    let tol = opts.tol.unwrap_or(1e-10 * (1.0 + model.b_inf_norm()));
    let cap = opts.max_iters.unwrap_or(3 * m).max(1);

    let NnlsScratch {
        x,
        g,
        z,
        sub,
        in_passive,
        blocked,
        passive,
    } = scratch;
    // Maintained Cholesky factor of the passive system, stored in `sub`
    // with a fixed leading dimension so rows survive appends. Row count
    // in `fact_valid`; rows are rebuilt lazily after removals.
    let ld = m;
    if model.factored() && sub.len() < m * m {
        sub.resize(m * m, 0.0);
    }
    let mut fact_valid = 0usize;

    // A resumed start keeps the previous solve's iterate in place; the
    // shed loop below re-solves on its support against the new data.
    let resumed = opts.resume && x.len() == m && in_passive.len() == m && blocked.len() == m;
    if resumed {
        blocked.iter_mut().for_each(|b| *b = false);
    } else {
        x.clear();
        x.resize(m, 0.0);
        in_passive.clear();
        in_passive.resize(m, false);
        blocked.clear();
        blocked.resize(m, false);
        passive.clear();
        if !opts.warm_start.is_empty() {
            passive.extend_from_slice(&opts.warm_start);
            // callers reusing a previous support hand it over sorted already
            if !passive.windows(2).all(|p| p[0] < p[1]) {
                passive.sort_unstable();
                passive.dedup();
            }
            passive.retain(|&i| i < m);
        }
    }

    // Warm start: solve on the suggested support and shed nonpositive
    // entries until the restricted solution is feasible.
    while !passive.is_empty() {
        if !passive_solve(model, passive, sub, z, ld, &mut fact_valid) {
            for &i in passive.iter() {
                x[i] = 0.0;
                in_passive[i] = false;
            }
            passive.clear();
            fact_valid = 0;
            break;
        }
        if z.iter().all(|&v| v > 0.0) {
            for (&i, &zi) in passive.iter().zip(z.iter()) {
                x[i] = zi;
                in_passive[i] = true;
            }
            break;
        }
        let mut keep = 0usize;
        for r in 0..passive.len() {
            let i = passive[r];
            if z[r] > 0.0 {
                passive[keep] = i;
                keep += 1;
            } else {
                x[i] = 0.0;
                in_passive[i] = false;
                fact_valid = fact_valid.min(keep);
            }
        }
        passive.truncate(keep);
    }

    let mut iterations = 0usize;
    let mut trace = Vec::new();

    model.gradient_into(x, g);
    loop {
        // Entering variable: most negative gradient among active indices,
        // smallest index on ties.
        let mut best: Option<usize> = None;
        let mut best_w = tol;
        for i in 0..m {
            if in_passive[i] || blocked[i] {
                continue;
            }
            let w = -g[i];
            if w > best_w {
                best_w = w;
                best = Some(i);
            }
        }
        let enter = match best {
            Some(i) => i,
            None => break,
        };

        if iterations >= cap {
            let kkt = kkt_of(g, x);
            let obj = model.objective2(x);
            return Err(NnlsError::IterationLimit(Box::new(NnlsSolution {
                x: x.clone(),
                residual_norm: float::sqrt(obj),
                iterations,
                kkt_violation: kkt,
                objective_trace: trace,
            })));
        }
        iterations += 1;

        // appended at the end so the maintained factor grows by one row
        passive.push(enter);
        in_passive[enter] = true;

        let mut ejected_newcomer = false;
        loop {
            if !passive_solve(model, passive, sub, z, ld, &mut fact_valid) {
                return Err(NnlsError::Degenerate);
            }
            if z.iter().all(|&v| v > 0.0) {
                for (&i, &zi) in passive.iter().zip(z.iter()) {
                    x[i] = zi;
                }
                break;
            }
            // Step from x toward z until the first passive variable hits
            // zero, then drop the blockers.
            let mut alpha = 1.0f64;
            for (&i, &zi) in passive.iter().zip(z.iter()) {
                if zi <= 0.0 {
                    let denom = x[i] - zi;
                    let a = if denom > 0.0 { x[i] / denom } else { 0.0 };
                    alpha = alpha.min(a);
                }
            }
            let mut any_removed = false;
            for (&i, &zi) in passive.iter().zip(z.iter()) {
                x[i] += alpha * (zi - x[i]);
                if zi <= 0.0 && x[i] <= alpha * 1e-12 + 1e-300 {
                    x[i] = 0.0;
                    in_passive[i] = false;
                    if i == enter {
                        ejected_newcomer = true;
                    }
                    any_removed = true;
                }
            }
            if !any_removed {
                // roundoff left every blocker marginally positive; drop
                // the most negative z to guarantee progress
                let (&worst, _) = passive
                    .iter()
                    .zip(z.iter())
                    .filter(|(_, &zi)| zi <= 0.0)
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap();
                x[worst] = 0.0;
                in_passive[worst] = false;
                if worst == enter {
                    ejected_newcomer = true;
                }
            }
            let mut keep = 0usize;
            for r in 0..passive.len() {
                let i = passive[r];
                if in_passive[i] {
                    passive[keep] = i;
                    keep += 1;
                } else {
                    fact_valid = fact_valid.min(keep);
                }
            }
            passive.truncate(keep);
            if passive.is_empty() {
                break;
            }
        }

        if ejected_newcomer && x[enter] == 0.0 {
            blocked[enter] = true;
        } else {
            blocked.iter_mut().for_each(|b| *b = false);
        }

        if opts.record_objectives {
            trace.push(model.objective2(x));
        }
        model.gradient_into(x, g);
    }

    let kkt = kkt_of(g, x);
    let obj = model.objective2_from_gradient(x, g);
    Ok((
        NnlsOutcome {
            iterations,
            residual_norm: float::sqrt(obj),
            kkt_violation: kkt,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[test]
    fn orthonormal_design_clips_at_zero() {
        let p = NnlsProblem::new(identity(2), vec![3.0, -1.0]).unwrap();
        let s = solve_nnls(&p, 1e-10).unwrap();
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert_eq!(s.x[1], 0.0);
        assert!(s.kkt_violation <= 1e-10);
        assert!((s.residual_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn feasible_unconstrained_optimum_is_returned() {
        let b = vec![0.2, 0.5, 0.9];
        let p = NnlsProblem::new(identity(3), b.clone()).unwrap();
        let s = solve_nnls(&p, 1e-10).unwrap();
        for (xi, bi) in s.x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn kkt_examples() {
        let p = NnlsProblem::new(identity(2), vec![3.0, -1.0]).unwrap();
        assert!((kkt_violation(&p, &[0.0, 0.0]).unwrap() - 3.0).abs() < 1e-12);
        let zero = NnlsProblem::new(identity(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(kkt_violation(&zero, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(
            kkt_violation(&p, &[0.0]).unwrap_err(),
            NnlsError::DimensionMismatch
        );
        assert_eq!(
            kkt_violation(&p, &[-1.0, 0.0]).unwrap_err(),
            NnlsError::InfeasiblePoint
        );
    }

    #[test]
    fn rejects_non_finite_input() {
        let mut a = identity(2);
        a.set(0, 1, f64::NAN);
        assert_eq!(
            NnlsProblem::new(a, vec![0.0, 0.0]).unwrap_err(),
            NnlsError::NonFinite
        );
    }

    #[test]
    fn gram_path_matches_dense_path() {
        // fixed 3x4 instance
        let a = Mat::from_vec(
            3,
            4,
            vec![0.5, -0.2, 0.8, 0.1, -0.7, 0.4, 0.3, 0.9, 0.2, 0.6, -0.5, -0.3],
        );
        let b = vec![1.0, -0.4, 0.7, 0.2];
        let p = NnlsProblem::new(a.clone(), b.clone()).unwrap();
        let dense = solve_nnls(&p, 1e-11).unwrap();

        let mut gram = Mat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                gram.set(i, j, crate::linalg::dot(a.row(i), a.row(j)));
            }
        }
        let atb = a.matvec(&b);
        let bn2 = crate::linalg::dot(&b, &b);
        let opts = NnlsOptions {
            tol: Some(1e-11),
            ..Default::default()
        };
        let g = solve_nnls_gram(&gram, &atb, bn2, &opts).unwrap();
        for (x1, x2) in dense.x.iter().zip(&g.x) {
            assert!((x1 - x2).abs() < 1e-8);
        }
        assert!((dense.residual_norm - g.residual_norm).abs() < 1e-8);
    }

    #[test]
    fn warm_start_reaches_same_solution() {
        let a = Mat::from_vec(
            3,
            4,
            vec![0.5, -0.2, 0.8, 0.1, -0.7, 0.4, 0.3, 0.9, 0.2, 0.6, -0.5, -0.3],
        );
        let b = vec![1.0, -0.4, 0.7, 0.2];
        let p = NnlsProblem::new(a, b).unwrap();
        let cold = solve_nnls(&p, 1e-11).unwrap();
        let support: Vec<usize> = (0..3).filter(|&i| cold.x[i] > 0.0).collect();
        let opts = NnlsOptions {
            tol: Some(1e-11),
            warm_start: support,
            ..Default::default()
        };
        let warm = solve_nnls_with(&p, &opts).unwrap();
        for (x1, x2) in cold.x.iter().zip(&warm.x) {
            assert!((x1 - x2).abs() < 1e-10);
        }
        assert!(warm.iterations <= cold.iterations);
    }
}
