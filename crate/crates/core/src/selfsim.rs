//! Self-similar step functions of zero spectral order and their jump measures.
//!
//! The function `P` on `[0, 1]` is the fixed point of
//!
//! ```text
//! P(α_{k-1} + a_k t) = β_k + d_k P(t),   t ∈ [0, 1],  k = 1..n,
//! ```
//!
//! where only `d_m` may be nonzero. Off the recursive piece `m`, `P` is the
//! constant `β_k`; on piece `m` it is an affine copy of itself. Its
//! distributional derivative `ρ` is a purely atomic measure whose atoms
//! accumulate geometrically at the fixed point `x* = α_{m-1} / (1 - a_m)` of
//! `S_m(x) = α_{m-1} + a_m x`.

use thiserror::Error;

use crate::scalar::{max_abs, Scalar};

/// Unchecked similarity data, as read from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawParams<T> {
    pub n: usize,
    pub a: Vec<T>,
    /// 1-based index of the recursive piece.
    pub m: usize,
    pub d: T,
    pub beta: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamViolation {
    #[error("at least two pieces are required, got n = {0}")]
    TooFewPieces(usize),
    #[error("expected {expected} values for `{field}`, got {got}")]
    LengthMismatch { field: &'static str, expected: usize, got: usize },
    #[error("a_{index} = {value} is not positive")]
    NonPositiveLength { index: usize, value: f64 },
    #[error("interval lengths sum to {sum}, not 1")]
    LengthsDoNotSumToOne { sum: f64 },
    #[error("m = {m} is outside [1, {n}]")]
    IndexOutOfRange { m: usize, n: usize },
    #[error("contraction violated: a_m|d_m| = {a_abs_d}, a_m d_m^2 = {a_d_sq} (both must be < 1)")]
    ContractionViolated { a_abs_d: f64, a_d_sq: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid self-similarity parameters: {}", list_violations(.0))]
pub struct InvalidParams(pub Vec<ParamViolation>);

fn list_violations(v: &[ParamViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("evaluation at x = {x} did not terminate within {depth} descents (|d_m| >= 1 near x*)")]
    NonConvergentEvaluation { x: f64, depth: usize },
    #[error("x = {0} lies outside [0, 1]")]
    OutOfDomain(f64),
}

/// Sum-to-one tolerance for the interval lengths.
pub const LENGTH_SUM_TOLERANCE: f64 = 1e-12;

/// Validated similarity data. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarParams<T> {
    n: usize,
    a: Vec<T>,
    m: usize,
    d: T,
    beta: Vec<T>,
}

/// Check every invariant and collect all violations.
pub fn validate<T: Scalar>(raw: RawParams<T>) -> Result<SelfSimilarParams<T>, InvalidParams> {
    let mut violations = Vec::new();
    let RawParams { n, a, m, d, beta } = raw;

    if n < 2 {
        violations.push(ParamViolation::TooFewPieces(n));
    }
    if a.len() != n {
        violations.push(ParamViolation::LengthMismatch { field: "a", expected: n, got: a.len() });
    }
    if beta.len() != n {
        violations.push(ParamViolation::LengthMismatch { field: "beta", expected: n, got: beta.len() });
    }
    for (i, ak) in a.iter().enumerate() {
        if *ak <= T::zero() {
            violations.push(ParamViolation::NonPositiveLength { index: i + 1, value: ak.to_f64() });
        }
    }
    let sum = a.iter().fold(T::zero(), |s, ak| s + ak.clone());
    let sum_err = (sum.clone() - T::one()).abs();
    if sum_err.to_f64() > LENGTH_SUM_TOLERANCE {
        violations.push(ParamViolation::LengthsDoNotSumToOne { sum: sum.to_f64() });
    }
    if m < 1 || m > n {
        violations.push(ParamViolation::IndexOutOfRange { m, n });
    } else if m <= a.len() {
        let am = a[m - 1].clone();
        let a_abs_d = am.clone() * d.abs();
        let a_d_sq = am * d.clone() * d.clone();
        if a_abs_d >= T::one() || a_d_sq >= T::one() {
            violations.push(ParamViolation::ContractionViolated { a_abs_d: a_abs_d.to_f64(), a_d_sq: a_d_sq.to_f64() });
        }
    }

    if violations.is_empty() {
        Ok(SelfSimilarParams { n, a, m, d, beta })
    } else {
        Err(InvalidParams(violations))
    }
}

impl<T: Scalar> SelfSimilarParams<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[T] {
        &self.a
    }

    /// 1-based index of the recursive piece.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> &T {
        &self.d
    }

    pub fn beta(&self) -> &[T] {
        &self.beta
    }

    /// `a_m`.
    pub fn a_m(&self) -> &T {
        &self.a[self.m - 1]
    }

    /// The eigenvalue scale factor `a_m d_m`.
    pub fn scale_factor(&self) -> T {
        self.a_m().clone() * self.d.clone()
    }

    /// Same parameters in another scalar type.
    pub fn convert<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SelfSimilarParams<U> {
        SelfSimilarParams {
            n: self.n,
            a: self.a.iter().map(&f).collect(),
            m: self.m,
            d: f(&self.d),
            beta: self.beta.iter().map(&f).collect(),
        }
    }

    /// Parameters with every `β_k` negated; this negates `P`, hence `ρ`.
    pub fn negated(&self) -> Self {
        SelfSimilarParams { beta: self.beta.iter().map(|b| -b.clone()).collect(), ..self.clone() }
    }

    pub fn to_raw(&self) -> RawParams<T> {
        RawParams { n: self.n, a: self.a.clone(), m: self.m, d: self.d.clone(), beta: self.beta.clone() }
    }
}

/// Partial sums `α_0..α_n` and the accumulation point of the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints<T> {
    pub alpha: Vec<T>,
    pub x_star: T,
}

pub fn breakpoints<T: Scalar>(params: &SelfSimilarParams<T>) -> Breakpoints<T> {
    let mut alpha = Vec::with_capacity(params.n + 1);
    alpha.push(T::zero());
    for ak in &params.a {
        let next = alpha.last().cloned().unwrap_or_else(T::zero) + ak.clone();
        alpha.push(next);
    }
    // Σa = 1 holds only to LENGTH_SUM_TOLERANCE; pin the right end.
    alpha[params.n] = T::one();
    let x_star = alpha[params.m - 1].clone() / (T::one() - params.a_m().clone());
    Breakpoints { alpha, x_star }
}

/// Level-0 jump sizes `ζ_1..ζ_{n-1}` of `P` at `α_1..α_{n-1}`.
pub fn zeta<T: Scalar>(params: &SelfSimilarParams<T>) -> Vec<T> {
    let (n, m) = (params.n, params.m);
    let b = |k: usize| params.beta[k - 1].clone();
    let d = params.d.clone();
    (1..n)
        .map(|k| {
            if k + 1 == m {
                b(m) - b(m - 1) + d.clone() * b(1)
            } else if k == m {
                b(m + 1) - b(m) - d.clone() * b(n)
            } else {
                b(k + 1) - b(k)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZCounts {
    pub plus: usize,
    pub minus: usize,
}

impl ZCounts {
    /// `Z₊ + Z₋ = n − 1`, i.e. no `ζ_k` vanishes.
    pub fn is_nondegenerate(&self, n: usize) -> bool {
        self.plus + self.minus + 1 == n
    }
}

pub fn z_counts<T: Scalar>(params: &SelfSimilarParams<T>) -> ZCounts {
    // `Signed::is_positive` is a sign-bit test for floats and counts 0.0
    let z = zeta(params);
    ZCounts { plus: z.iter().filter(|v| **v > T::zero()).count(), minus: z.iter().filter(|v| **v < T::zero()).count() }
}

/// One point mass of `ρ`: atom `(level, index)` sits at `S_m^level(α_index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom<T> {
    pub position: T,
    pub mass: T,
    pub level: usize,
    /// `k` in `1..n`.
    pub index: usize,
}

/// Atoms of `ρ` of level `< truncation_level`, sorted by position.
///
/// `gaps[i]` is the distance from the previous node to atom `i` (the first
/// previous node is `0`), and `gaps[atoms.len()]` is the distance from the
/// last atom to `1`. Gaps are accumulated from factored products
/// `a_m^r · a_k`, never by subtracting positions.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpMeasure<T> {
    pub atoms: Vec<Atom<T>>,
    pub gaps: Vec<T>,
    pub truncation_level: usize,
}

impl<T: Scalar> JumpMeasure<T> {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn masses(&self) -> impl Iterator<Item = &T> {
        self.atoms.iter().map(|a| &a.mass)
    }
}

/// Which nodes with zero mass survive in the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroAtoms {
    /// Drop every atom with `ζ_k = 0` (the measure proper).
    Drop,
    /// Keep the level-0 nodes `α_1..α_{n-1}` even when `ζ_k = 0`, so that the
    /// ends of the recursive piece are always mesh nodes.
    KeepLevelZero,
}

/// Atoms of levels `0..levels` (levels ≥ 1 only when `d_m ≠ 0`).
pub fn jump_measure<T: Scalar>(params: &SelfSimilarParams<T>, levels: usize) -> JumpMeasure<T> {
    jump_measure_with(params, levels, ZeroAtoms::Drop)
}

pub fn jump_measure_with<T: Scalar>(params: &SelfSimilarParams<T>, levels: usize, zeros: ZeroAtoms) -> JumpMeasure<T> {
    let levels = if params.d.is_zero() { levels.min(1) } else { levels };
    let bp = breakpoints(params);
    let z = zeta(params);
    let am = params.a_m().clone();

    let mut am_pow = vec![T::one()];
    let mut d_pow = vec![T::one()];
    for r in 1..levels.max(1) {
        am_pow.push(am_pow[r - 1].clone() * am.clone());
        d_pow.push(d_pow[r - 1].clone() * params.d.clone());
    }

    // Depth-first walk over the nested pieces, emitting (level, k, gap) in
    // increasing position order.
    let mut walk = Vec::new();
    if levels > 0 {
        walk_level(params, &am_pow, 0, levels, &mut walk);
    } else {
        walk.push(NodeKey { level: 0, index: params.n, gap: T::one() });
    }

    let one_minus_am = T::one() - am.clone();
    let mut atoms = Vec::new();
    let mut gaps = Vec::new();
    let mut pending = T::zero();
    for node in walk {
        pending = pending + node.gap;
        let NodeKey { level, index, .. } = node;
        let interior = index >= 1 && index < params.n;
        if !interior {
            // only the right boundary 1 ends a top-level walk
            continue;
        }
        let zk = &z[index - 1];
        let keep = !zk.is_zero() || (zeros == ZeroAtoms::KeepLevelZero && level == 0);
        if !keep {
            continue;
        }
        let offset = bp.alpha[params.m - 1].clone() * (T::one() - am_pow[level].clone()) / one_minus_am.clone();
        atoms.push(Atom {
            position: offset + am_pow[level].clone() * bp.alpha[index].clone(),
            mass: d_pow[level].clone() * zk.clone(),
            level,
            index,
        });
        gaps.push(std::mem::replace(&mut pending, T::zero()));
    }
    gaps.push(pending);

    JumpMeasure { atoms, gaps, truncation_level: levels }
}

struct NodeKey<T> {
    level: usize,
    index: usize,
    gap: T,
}

fn walk_level<T: Scalar>(
    params: &SelfSimilarParams<T>,
    am_pow: &[T],
    level: usize,
    levels: usize,
    out: &mut Vec<NodeKey<T>>,
) {
    for k in 1..=params.n {
        if k == params.m && level + 1 < levels {
            walk_level(params, am_pow, level + 1, levels, out);
            // S^{level+1}(α_n) coincides with S^level(α_m)
            if let Some(last) = out.last_mut() {
                last.level = level;
                last.index = k;
            }
        } else {
            out.push(NodeKey { level, index: k, gap: am_pow[level].clone() * params.a[k - 1].clone() });
        }
    }
}

/// Maximum number of descents into the recursive piece before giving up.
pub const MAX_DESCENT_DEPTH: usize = 4096;

/// Evaluate `P(x)` (right-continuous) to absolute accuracy `tol`.
///
/// With `|d_m| < 1` the descent stops once the remaining tail is bounded by
/// `tol`. With `|d_m| ≥ 1` evaluation is only possible where the descent
/// leaves the recursive piece after finitely many steps.
pub fn eval_p<T: Scalar>(params: &SelfSimilarParams<T>, x: &T, tol: &T) -> Result<T, EvalError> {
    if *x < T::zero() || *x > T::one() {
        return Err(EvalError::OutOfDomain(x.to_f64()));
    }
    let bp = breakpoints(params);
    let contracting = params.d.abs() < T::one();
    let tail_bound = if contracting { max_abs(params.beta.iter()) / (T::one() - params.d.abs()) } else { T::zero() };

    let mut acc = T::zero();
    let mut coeff = T::one();
    let mut t = x.clone();
    for depth in 0..=MAX_DESCENT_DEPTH {
        let k = piece_of(&bp.alpha, &t);
        if k != params.m || params.d.is_zero() {
            return Ok(acc + coeff * params.beta[k - 1].clone());
        }
        acc = acc + coeff.clone() * params.beta[k - 1].clone();
        coeff = coeff * params.d.clone();
        if contracting && coeff.abs() * tail_bound.clone() <= *tol {
            return Ok(acc);
        }
        if depth == MAX_DESCENT_DEPTH {
            break;
        }
        t = (t - bp.alpha[params.m - 1].clone()) / params.a_m().clone();
        if t < T::zero() {
            t = T::zero();
        } else if t > T::one() {
            t = T::one();
        }
    }
    Err(EvalError::NonConvergentEvaluation { x: x.to_f64(), depth: MAX_DESCENT_DEPTH })
}

/// 1-based piece `k` with `α_{k-1} ≤ t < α_k` (`t = 1` belongs to piece `n`).
fn piece_of<T: Scalar>(alpha: &[T], t: &T) -> usize {
    let n = alpha.len() - 1;
    (1..n).find(|&k| *t < alpha[k]).unwrap_or(n)
}
