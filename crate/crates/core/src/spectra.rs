//! The finite pencil `K − λM` of a truncated atomic weight.
//!
//! Between atoms a solution of `−y'' = λρy` is affine and at an atom of mass
//! `J` its slope jumps by `−λ J y`. Taking the hat functions on the atom mesh
//! as a basis therefore reduces the problem exactly to the generalized
//! eigenproblem `K y = λ M y`, with `K` the tridiagonal stiffness of the mesh
//! and `M = diag(J)`. `K` is positive definite, so by Sylvester's law the
//! negative index of `K − ΛM` counts eigenvalues between `0` and `Λ`.

use serde::Serialize;
use thiserror::Error;
use twofloat::TwoFloat;

use crate::linalg::{self, Matrix};
use crate::scalar::{cst, fabs, quot, Real, Scalar};
use crate::selfsim::{jump_measure, z_counts, JumpMeasure, SelfSimilarParams};

pub use crate::linalg::Inertia;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("the measure has no atoms")]
    EmptyMeasure,
    #[error("gap {index} is not a positive representable number (truncation too deep for the arithmetic)")]
    DegenerateGap { index: usize },
    #[error("the {0} branch of the spectrum is empty")]
    BranchEmpty(Branch),
    #[error("{requested} {branch} eigenvalues requested but the pencil has only {available}")]
    InsufficientEigenvalues { branch: Branch, requested: usize, available: usize },
    #[error("no convergence in truncation level up to R = {max_level}")]
    NoConvergence { max_level: usize, history: Vec<LevelStep> },
    #[error("bracketing the {branch} branch overflowed the scalar range")]
    BracketOverflow { branch: Branch },
    #[error("dense oracle limited to {max} nodes, got {got}")]
    TooLarge { max: usize, got: usize },
}

/// Sign branch of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Positive => "positive",
            Branch::Negative => "negative",
        }
    }

    pub fn sign<T: Scalar>(&self) -> T {
        match self {
            Branch::Positive => T::one(),
            Branch::Negative => -T::one(),
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mesh, stiffness and signed diagonal mass of a truncated weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem<T> {
    positions: Vec<T>,
    /// `gaps[i] = x_i − x_{i−1}` with `x_{−1} = 0`; the last entry ends at `1`.
    gaps: Vec<T>,
    masses: Vec<T>,
    levels: Vec<usize>,
    diag: Vec<T>,
    off: Vec<T>,
    truncation_level: usize,
}

pub fn assemble<T: Scalar>(measure: &JumpMeasure<T>) -> Result<DiscreteSystem<T>, SpectraError> {
    if measure.is_empty() {
        return Err(SpectraError::EmptyMeasure);
    }
    DiscreteSystem::build(
        measure.atoms.iter().map(|a| a.position.clone()).collect(),
        measure.gaps.clone(),
        measure.masses().cloned().collect(),
        measure.atoms.iter().map(|a| a.level).collect(),
        measure.truncation_level,
    )
}

impl<T: Scalar> DiscreteSystem<T> {
    /// System for arbitrary point masses given by gaps (`masses.len() + 1`
    /// positive numbers summing to one) and masses. Used for fixtures.
    pub fn from_gaps(gaps: Vec<T>, masses: Vec<T>) -> Result<Self, SpectraError> {
        assert_eq!(gaps.len(), masses.len() + 1, "need one more gap than masses");
        let mut positions = Vec::with_capacity(masses.len());
        let mut x = T::zero();
        for g in &gaps[..masses.len()] {
            x = x + g.clone();
            positions.push(x.clone());
        }
        let levels = vec![0; masses.len()];
        Self::build(positions, gaps, masses, levels, 0)
    }

    fn build(
        positions: Vec<T>,
        gaps: Vec<T>,
        masses: Vec<T>,
        levels: Vec<usize>,
        truncation_level: usize,
    ) -> Result<Self, SpectraError> {
        let mut inv = Vec::with_capacity(gaps.len());
        for (index, g) in gaps.iter().enumerate() {
            if !g.is_representable() || *g <= T::zero() {
                return Err(SpectraError::DegenerateGap { index });
            }
            let r = T::one() / g.clone();
            if !r.is_representable() {
                return Err(SpectraError::DegenerateGap { index });
            }
            inv.push(r);
        }
        let n = masses.len();
        let diag = (0..n).map(|i| inv[i].clone() + inv[i + 1].clone()).collect();
        let off = (1..n).map(|i| -inv[i].clone()).collect();
        Ok(DiscreteSystem { positions, gaps, masses, levels, diag, off, truncation_level })
    }

    /// The same mesh and masses in another scalar type.
    pub fn convert<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Result<DiscreteSystem<U>, SpectraError> {
        DiscreteSystem::build(
            self.positions.iter().map(&f).collect(),
            self.gaps.iter().map(&f).collect(),
            self.masses.iter().map(&f).collect(),
            self.levels.clone(),
            self.truncation_level,
        )
    }

    pub fn dim(&self) -> usize {
        self.masses.len()
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn gaps(&self) -> &[T] {
        &self.gaps
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// Self-similarity level of each node.
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn truncation_level(&self) -> usize {
        self.truncation_level
    }

    /// Diagonal of `K`.
    pub fn stiffness_diag(&self) -> &[T] {
        &self.diag
    }

    /// Off-diagonal of `K` (`K_{i,i+1}`).
    pub fn stiffness_off(&self) -> &[T] {
        &self.off
    }

    /// Dense `K − λM`.
    pub fn pencil_matrix(&self, lambda: &T) -> Matrix<T> {
        let n = self.dim();
        Matrix::from_fn(n, |i, j| {
            if i == j {
                self.diag[i].clone() - lambda.clone() * self.masses[i].clone()
            } else if i + 1 == j {
                self.off[i].clone()
            } else if j + 1 == i {
                self.off[j].clone()
            } else {
                T::zero()
            }
        })
    }

    /// Same mesh with every mass multiplied by `c`.
    pub fn with_scaled_masses(&self, c: &T) -> Self {
        DiscreteSystem { masses: self.masses.iter().map(|m| m.clone() * c.clone()).collect(), ..self.clone() }
    }

    /// Number of masses with the sign of `branch`: the size of that branch
    /// of the spectrum.
    pub fn branch_size(&self, branch: Branch) -> usize {
        self.masses
            .iter()
            .filter(|m| match branch {
                Branch::Positive => **m > T::zero(),
                Branch::Negative => **m < T::zero(),
            })
            .count()
    }
}

/// Inertia of `K − λM` by the tridiagonal `LDLᵀ` recurrence.
///
/// Pivots are propagated in series-conductance form
/// `g_i = g_{i−1} / (1 + h_i g_{i−1}) − λ m_i`, pivot `i` having the sign of
/// `1 + h_{i+1} g_i`; this avoids the cancellation of `1/h_i − (1/h_i)²/d`
/// on strongly graded meshes. An exactly vanishing intermediate pivot is
/// resolved by its limit: it and the following (infinite) pivot carry
/// opposite signs and the recurrence restarts. Only a vanishing last pivot
/// contributes to `n_zero`.
pub fn inertia<T: Scalar>(system: &DiscreteSystem<T>, lambda: &T) -> Inertia {
    let n = system.dim();
    let h = &system.gaps;
    let m = &system.masses;
    let mut res = Inertia::default();
    let restart = |i: usize| T::one() / h[i].clone() - lambda.clone() * m[i].clone();

    let mut i = 0;
    let mut g = if n > 0 { restart(0) } else { T::zero() };
    while i < n {
        let t = T::one() + h[i + 1].clone() * g.clone();
        if t.is_zero() {
            if i + 1 == n {
                res.n_zero += 1;
                break;
            }
            res.n_minus += 1;
            res.n_plus += 1;
            i += 2;
            if i < n {
                g = restart(i);
            }
            continue;
        }
        if t < T::zero() {
            res.n_minus += 1;
        } else {
            res.n_plus += 1;
        }
        i += 1;
        if i < n {
            g = g / t - lambda.clone() * m[i].clone();
            if !g.is_representable() {
                // pivot i is dominated by g and the one after restarts
                if g < T::zero() {
                    res.n_minus += 1;
                } else {
                    res.n_plus += 1;
                }
                i += 1;
                if i < n {
                    g = restart(i);
                }
            }
        }
    }
    res
}

/// Eigenvalue counting function: for `Λ > 0` the number of positive
/// eigenvalues below `Λ`, for `Λ < 0` the number of negative eigenvalues
/// above `Λ`, and `0` at `Λ = 0`.
pub fn counting<T: Scalar>(system: &DiscreteSystem<T>, lambda: &T) -> usize {
    if lambda.is_zero() {
        0
    } else {
        inertia(system, lambda).n_minus
    }
}

/// Counting function of one branch at modulus `mu > 0`.
pub fn branch_count<T: Scalar>(system: &DiscreteSystem<T>, branch: Branch, mu: &T) -> usize {
    counting(system, &(branch.sign::<T>() * mu.clone()))
}

/// An eigenvalue with a relative error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue<T> {
    pub value: T,
    pub rel_err: T,
}

/// Requested number of eigenvalues per branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Want {
    pub positive: usize,
    pub negative: usize,
}

impl Want {
    pub fn get(&self, branch: Branch) -> usize {
        match branch {
            Branch::Positive => self.positive,
            Branch::Negative => self.negative,
        }
    }
}

/// Eigenvalues of one truncation, by increasing modulus in each branch:
/// `positive = [λ₁, λ₂, …]`, `negative = [λ₋₁, λ₋₂, …]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSequence<T> {
    pub positive: Vec<Eigenvalue<T>>,
    pub negative: Vec<Eigenvalue<T>>,
    pub truncation_level: usize,
    pub tol: T,
    /// Level-by-level values when produced by [`converge_in_level`].
    pub history: Vec<LevelStep>,
}

/// Eigenvalues computed at one truncation level (f64 for reporting).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStep {
    pub level: usize,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl<T: Real> EigenSequence<T> {
    pub fn branch(&self, branch: Branch) -> &[Eigenvalue<T>] {
        match branch {
            Branch::Positive => &self.positive,
            Branch::Negative => &self.negative,
        }
    }

    pub fn values(&self, branch: Branch) -> Vec<T> {
        self.branch(branch).iter().map(|e| e.value).collect()
    }

    /// Strict monotonicity with consecutive gaps above `1e-9 max(1, |λ|)`.
    pub fn is_simple(&self) -> bool {
        [Branch::Positive, Branch::Negative].iter().all(|&b| {
            self.branch(b).windows(2).all(|w| {
                let (x, y) = (w[0].value, w[1].value);
                let scale = T::one().max(fabs(y));
                fabs(y - x) > cst::<T>(1e-9) * scale && fabs(y) > fabs(x)
            })
        })
    }
}

/// Maximum number of bisection steps per eigenvalue.
const MAX_BISECTIONS: usize = 4000;

/// Eigenvalues by bisection on [`counting`].
///
/// Brackets start at modulus 1 and expand geometrically by 4 until the
/// requested count is enclosed; each eigenvalue is then bisected (in the
/// geometric mean while the bracket spans more than a factor 4) until its
/// relative width is below `tol`.
pub fn eigenvalues<T: Real>(system: &DiscreteSystem<T>, want: Want, tol: T) -> Result<EigenSequence<T>, SpectraError> {
    let mut seq = EigenSequence {
        positive: Vec::new(),
        negative: Vec::new(),
        truncation_level: system.truncation_level,
        tol,
        history: Vec::new(),
    };
    for branch in [Branch::Positive, Branch::Negative] {
        let requested = want.get(branch);
        if requested == 0 {
            continue;
        }
        let available = system.branch_size(branch);
        if available == 0 {
            return Err(SpectraError::BranchEmpty(branch));
        }
        if requested > available {
            return Err(SpectraError::InsufficientEigenvalues { branch, requested, available });
        }
        let found = bisect_branch(system, branch, requested, tol)?;
        match branch {
            Branch::Positive => seq.positive = found,
            Branch::Negative => seq.negative = found,
        }
    }
    Ok(seq)
}

fn bisect_branch<T: Real>(
    system: &DiscreteSystem<T>,
    branch: Branch,
    requested: usize,
    tol: T,
) -> Result<Vec<Eigenvalue<T>>, SpectraError> {
    let four = cst::<T>(4.0);
    let count = |mu: T| branch_count(system, branch, &mu);

    let mut hi = T::one();
    while count(hi) < requested {
        hi = hi * four;
        if !hi.is_finite() {
            return Err(SpectraError::BracketOverflow { branch });
        }
    }
    let mut lo = T::one();
    while count(lo) > 0 {
        lo = lo / four;
        if lo <= T::zero() {
            return Err(SpectraError::BracketOverflow { branch });
        }
    }

    let sign = branch.sign::<T>();
    let half = cst::<T>(0.5);
    let mut out = Vec::with_capacity(requested);
    let mut start = lo;
    for j in 1..=requested {
        // count(a) < j <= count(b)
        let (mut a, mut b) = (start, hi);
        for _ in 0..MAX_BISECTIONS {
            if b - a <= tol * a {
                break;
            }
            let mid = if b > four * a { (a * b).sqrt() } else { half * (a + b) };
            if mid <= a || mid >= b {
                break;
            }
            if count(mid) >= j {
                b = mid;
            } else {
                a = mid;
            }
        }
        let value = half * (a + b);
        out.push(Eigenvalue { value: sign * value, rel_err: (b - a) / (a + b) });
        start = a;
    }
    Ok(out)
}

/// Largest system accepted by [`eigs_dense`].
pub const DENSE_LIMIT: usize = 2000;

/// All eigenvalues by a dense route independent of the inertia count.
///
/// Zero-mass nodes are condensed out first (on a path this merges the two
/// adjacent gaps). With `|M| = D²` and `J = sign(M)` the pencil becomes the
/// definite pair `(D⁻¹ K D⁻¹, J)`, which is diagonalized by `J`-orthogonal
/// Jacobi steps ([`linalg::definite_pair_eigenvalues`]). The unit-diagonal
/// scaling of `D⁻¹ K D⁻¹` depends on the mesh only, so eigenvalues spread
/// over many decades keep their relative accuracy. `rel_err` is the
/// heuristic `n² ε`.
pub fn eigs_dense<T: Real>(system: &DiscreteSystem<T>) -> Result<EigenSequence<T>, SpectraError> {
    let n = system.dim();
    if n > DENSE_LIMIT {
        return Err(SpectraError::TooLarge { max: DENSE_LIMIT, got: n });
    }
    let mut gaps = vec![system.gaps[0]];
    let mut masses = Vec::with_capacity(n);
    for i in 0..n {
        if system.masses[i].is_zero() {
            *gaps.last_mut().expect("nonempty") = *gaps.last().expect("nonempty") + system.gaps[i + 1];
        } else {
            masses.push(system.masses[i]);
            gaps.push(system.gaps[i + 1]);
        }
    }
    let r = masses.len();
    let scale: Vec<T> = masses.iter().map(|m| quot(T::one(), fabs(*m).sqrt())).collect();
    let t = Matrix::from_fn(r, |i, j| {
        if i == j {
            (quot(T::one(), gaps[i]) + quot(T::one(), gaps[i + 1])) * scale[i] * scale[i]
        } else if i + 1 == j || j + 1 == i {
            -quot(T::one(), gaps[i.max(j)]) * scale[i] * scale[j]
        } else {
            T::zero()
        }
    });
    let signs: Vec<i8> = masses.iter().map(|m| if *m < T::zero() { -1 } else { 1 }).collect();
    let lambdas = linalg::definite_pair_eigenvalues(&t, &signs).ok_or(SpectraError::DegenerateGap { index: 0 })?;

    let eps = cst::<T>(T::roundoff()) * cst::<T>((r * r).max(1) as f64);
    let to_eig = |v: &T| Eigenvalue { value: *v, rel_err: eps };
    let mut positive: Vec<_> = lambdas.iter().filter(|v| **v > T::zero()).map(to_eig).collect();
    let mut negative: Vec<_> = lambdas.iter().filter(|v| **v < T::zero()).map(to_eig).collect();
    positive.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal));
    negative.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap_or(std::cmp::Ordering::Equal));
    Ok(EigenSequence { positive, negative, truncation_level: system.truncation_level, tol: eps, history: Vec::new() })
}

/// [`eigs_dense`] carried out in double-double arithmetic on the given
/// (exactly representable) `f64` mesh and rounded back.
///
/// The dense route loses about `log₁₀ cond` digits, where `cond` grows like
/// the inverse of the smallest gap; in `f64` that is too much for deep
/// truncations, in double-double it is not.
pub fn eigs_dense_extended(system: &DiscreteSystem<f64>) -> Result<EigenSequence<f64>, SpectraError> {
    let wide = system.convert(|v| TwoFloat::from_f64(*v))?;
    let seq = eigs_dense(&wide)?;
    let back = |list: &[Eigenvalue<TwoFloat>]| -> Vec<Eigenvalue<f64>> {
        list.iter().map(|e| Eigenvalue { value: e.value.hi(), rel_err: f64::EPSILON.max(e.rel_err.hi()) }).collect()
    };
    Ok(EigenSequence {
        positive: back(&seq.positive),
        negative: back(&seq.negative),
        truncation_level: seq.truncation_level,
        tol: f64::EPSILON.max(seq.tol.hi()),
        history: Vec::new(),
    })
}

/// `y(1; λ)` for `y(0) = 0`, `y'(0) = 1`: affine between atoms, slope jump
/// `−λ J y` at each atom. Vanishes exactly at eigenvalues. The pair `(y, y')`
/// is rescaled by a power of two when it grows large, which preserves sign.
pub fn shooting_det<T: Real>(measure: &JumpMeasure<T>, lambda: T) -> T {
    let masses: Vec<T> = measure.masses().copied().collect();
    shoot(&measure.gaps, &masses, lambda)
}

/// [`shooting_det`] on the mesh of an assembled system.
pub fn shooting_det_system<T: Real>(system: &DiscreteSystem<T>, lambda: T) -> T {
    shoot(&system.gaps, &system.masses, lambda)
}

fn shoot<T: Real>(gaps: &[T], masses: &[T], lambda: T) -> T {
    let big = cst::<T>(2f64.powi(400));
    let small = cst::<T>(2f64.powi(-400));
    let (mut y, mut s) = (T::zero(), T::one());
    for (g, m) in gaps.iter().zip(masses) {
        y = y + *g * s;
        s = s - lambda * *m * y;
        if fabs(y) > big || fabs(s) > big {
            y = y * small;
            s = s * small;
        }
    }
    y + *gaps.last().expect("at least one gap") * s
}

/// Roots of `λ ↦ shooting_det` on one branch with modulus at most `max_mu`,
/// located by a geometric scan with ratio `1 + step` from a Green's-function
/// lower bound and refined by bisection to full precision.
pub fn shooting_roots<T: Real>(system: &DiscreteSystem<T>, branch: Branch, max_mu: T, step: T) -> Vec<T> {
    let sign = branch.sign::<T>();
    // Σ_{sign m > 0} |m| x(1 − x) bounds Σ 1/|λ| over the branch
    let trace = system
        .positions
        .iter()
        .zip(&system.masses)
        .filter(|(_, m)| (sign * **m) > T::zero())
        .fold(T::zero(), |acc, (x, m)| acc + fabs(*m) * *x * (T::one() - *x));
    if trace <= T::zero() {
        return Vec::new();
    }
    let f = |mu: T| shooting_det_system(system, sign * mu);
    let ratio = T::one() + step;
    let mut a = cst::<T>(0.5) / trace;
    let mut fa = f(a);
    let mut roots = Vec::new();
    while a < max_mu {
        let b = a * ratio;
        let fb = f(b);
        if fb.is_zero() {
            roots.push(sign * b);
            a = b * ratio;
            fa = f(a);
            continue;
        }
        if fa.is_sign_negative() != fb.is_sign_negative() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..MAX_BISECTIONS {
                let mid = cst::<T>(0.5) * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm.is_sign_negative() == flo.is_sign_negative() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(sign * cst::<T>(0.5) * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// Upper limit on the truncation level for [`converge_in_level`].
pub const MAX_LEVEL: usize = 64;

/// Relative bisection tolerance used inside [`converge_in_level`].
pub const INNER_TOL: f64 = 1e-13;

/// Deepen the truncation `R, R+2, R+4, …` until every requested eigenvalue
/// moves by less than `tol` (relative) between consecutive levels.
///
/// With `d_m = 0` the measure is finite and the first level is exact. The
/// reported `rel_err` of each eigenvalue is the larger of the bisection width
/// and the last level-to-level change.
pub fn converge_in_level<T: Real>(
    params: &SelfSimilarParams<T>,
    want: Want,
    tol: T,
    start_level: usize,
) -> Result<EigenSequence<T>, SpectraError> {
    for branch in [Branch::Positive, Branch::Negative] {
        if want.get(branch) > 0 && !branch_possible(params, branch) {
            return Err(SpectraError::BranchEmpty(branch));
        }
    }
    let inner = cst::<T>(INNER_TOL).max(cst::<T>(T::roundoff()) * cst(8.0));
    let start_level = start_level.max(1);

    if params.d().is_zero() {
        let system = assemble(&jump_measure(params, 1))?;
        let mut seq = eigenvalues(&system, want, inner)?;
        seq.history.push(level_step(&seq));
        return Ok(seq);
    }

    let mut history = Vec::new();
    let mut prev: Option<EigenSequence<T>> = None;
    let mut level = start_level;
    while level <= MAX_LEVEL {
        let measure = jump_measure(params, level);
        let system = match assemble(&measure) {
            Ok(s) => s,
            Err(SpectraError::EmptyMeasure) => {
                level += 2;
                continue;
            }
            Err(e) => return Err(e),
        };
        let seq = match eigenvalues(&system, want, inner) {
            Ok(seq) => seq,
            Err(SpectraError::InsufficientEigenvalues { .. }) | Err(SpectraError::BranchEmpty(_)) => {
                level += 2;
                continue;
            }
            Err(e) => return Err(e),
        };
        history.push(level_step(&seq));
        if let Some(p) = &prev {
            if let Some(change) = max_change(p, &seq) {
                if change.iter().all(|&(_, c)| c < tol) {
                    let mut out = seq;
                    for (branch, list) in [(Branch::Positive, &mut out.positive), (Branch::Negative, &mut out.negative)]
                    {
                        for (j, e) in list.iter_mut().enumerate() {
                            let c = change
                                .iter()
                                .find(|((b, idx), _)| *b == branch && *idx == j)
                                .map(|&(_, c)| c)
                                .unwrap_or_else(T::zero);
                            e.rel_err = e.rel_err.max(c);
                        }
                    }
                    out.tol = tol;
                    out.history = history;
                    return Ok(out);
                }
            }
        }
        prev = Some(seq);
        level += 2;
    }
    Err(SpectraError::NoConvergence { max_level: MAX_LEVEL, history })
}

/// Whether some truncation has a mass of the branch's sign.
pub fn branch_possible<T: Scalar>(params: &SelfSimilarParams<T>, branch: Branch) -> bool {
    let z = z_counts(params);
    let (same, opposite) = match branch {
        Branch::Positive => (z.plus, z.minus),
        Branch::Negative => (z.minus, z.plus),
    };
    same > 0 || (*params.d() < T::zero() && opposite > 0)
}

#[allow(clippy::type_complexity)]
fn max_change<T: Real>(a: &EigenSequence<T>, b: &EigenSequence<T>) -> Option<Vec<((Branch, usize), T)>> {
    let mut out = Vec::new();
    for branch in [Branch::Positive, Branch::Negative] {
        let (x, y) = (a.branch(branch), b.branch(branch));
        if x.len() != y.len() {
            return None;
        }
        for (j, (p, q)) in x.iter().zip(y).enumerate() {
            out.push(((branch, j), fabs(q.value - p.value) / fabs(q.value)));
        }
    }
    Some(out)
}

fn level_step<T: Real>(seq: &EigenSequence<T>) -> LevelStep {
    LevelStep {
        level: seq.truncation_level,
        positive: seq.positive.iter().map(|e| Scalar::to_f64(&e.value)).collect(),
        negative: seq.negative.iter().map(|e| Scalar::to_f64(&e.value)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfsim::{validate, RawParams};
    use num_rational::BigRational;

    fn single_atom() -> DiscreteSystem<f64> {
        DiscreteSystem::from_gaps(vec![0.5, 0.5], vec![1.0]).unwrap()
    }

    fn table_params(d: f64, beta: [f64; 3]) -> SelfSimilarParams<f64> {
        validate(RawParams { n: 3, a: vec![1.0 / 3.0; 3], m: 3, d, beta: beta.to_vec() }).unwrap()
    }

    #[test]
    fn single_atom_assembly() {
        let s = single_atom();
        assert_eq!(s.stiffness_diag(), &[4.0]);
        assert_eq!(s.masses(), &[1.0]);
    }

    #[test]
    fn table1_level_one_assembly() {
        let p = table_params(0.5, [0.0, 2.0 / 3.0, 1.0]);
        let s = assemble(&jump_measure(&p, 1)).unwrap();
        let k = s.pencil_matrix(&0.0);
        for (got, want) in [(k[(0, 0)], 6.0), (k[(0, 1)], -3.0), (k[(1, 1)], 6.0)] {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((s.masses()[0] - 2.0 / 3.0).abs() < 1e-15);
        let p2 = table_params(0.5, [0.0, -1.0, 0.0]);
        let s2 = assemble(&jump_measure(&p2, 1)).unwrap();
        assert_eq!(s2.masses(), &[-1.0, 1.0]);
    }

    #[test]
    fn empty_measure_rejected() {
        let p = table_params(0.0, [1.0, 1.0, 1.0]);
        assert_eq!(assemble(&jump_measure(&p, 3)), Err(SpectraError::EmptyMeasure));
    }

    #[test]
    fn inertia_single_atom() {
        let s = single_atom();
        assert_eq!(inertia(&s, &0.0), Inertia { n_minus: 0, n_zero: 0, n_plus: 1 });
        assert_eq!(inertia(&s, &5.0).n_minus, 1);
        assert_eq!(inertia(&s, &4.0), Inertia { n_minus: 0, n_zero: 1, n_plus: 0 });
    }

    #[test]
    fn exact_zero_pivot_in_the_middle() {
        // nodes 1/4, 1/2, 3/4 with unit masses at λ = 4: the first pivot
        // 1/h0 + 1/h1 − λ = 8 − 4 = 4 ≠ 0, pick λ = 8 instead
        let q = |n, d| BigRational::from_ratio(n, d);
        let s = DiscreteSystem::from_gaps(vec![q(1, 4); 4], vec![q(1, 1); 3]).unwrap();
        let lam = q(8, 1);
        let dense = linalg::inertia(&s.pencil_matrix(&lam));
        assert_eq!(inertia(&s, &lam), dense);
        for l in [q(4, 1), q(27, 2), q(16, 1), q(-3, 1), q(100, 7)] {
            assert_eq!(inertia(&s, &l), linalg::inertia(&s.pencil_matrix(&l)), "λ = {l}");
        }
    }

    #[test]
    fn counting_examples() {
        let s = single_atom();
        assert_eq!(counting(&s, &0.0), 0);
        assert_eq!(counting(&s, &3.9), 0);
        assert_eq!(counting(&s, &4.1), 1);
        assert_eq!(counting(&s, &-100.0), 0);
    }

    #[test]
    fn single_atom_eigenvalues() {
        let s = single_atom();
        let seq = eigenvalues(&s, Want { positive: 1, negative: 0 }, 1e-14).unwrap();
        assert!((seq.positive[0].value - 4.0).abs() < 1e-12);
        assert_eq!(
            eigenvalues(&s, Want { positive: 0, negative: 1 }, 1e-10),
            Err(SpectraError::BranchEmpty(Branch::Negative))
        );
        let dense = eigs_dense(&s).unwrap();
        assert_eq!(dense.positive.len(), 1);
        assert!((dense.positive[0].value - 4.0).abs() < 1e-12);
        assert!(dense.negative.is_empty());
    }

    #[test]
    fn insufficient_eigenvalues_reported() {
        let s = single_atom();
        assert!(matches!(
            eigenvalues(&s, Want { positive: 2, negative: 0 }, 1e-10),
            Err(SpectraError::InsufficientEigenvalues { requested: 2, available: 1, .. })
        ));
    }

    #[test]
    fn shooting_closed_form() {
        let (a, c) = (0.3_f64, 2.0_f64);
        let s = DiscreteSystem::from_gaps(vec![a, 1.0 - a], vec![c]).unwrap();
        for lam in [0.0, 1.0, 7.5] {
            let exact = a + (1.0 - lam * c * a) * (1.0 - a);
            assert!((shooting_det_system(&s, lam) - exact).abs() < 1e-14);
        }
        let roots = shooting_roots(&s, Branch::Positive, 100.0, 0.01);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 1.0 / (c * a * (1.0 - a))).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_closed_form() {
        // masses c at 1/3 and 2/3: K = 3[[2,-1],[-1,2]], eigenvalues 3/c and 9/c
        let c = 0.7_f64;
        let s = DiscreteSystem::from_gaps(vec![1.0 / 3.0; 3], vec![c, c]).unwrap();
        let seq = eigenvalues(&s, Want { positive: 2, negative: 0 }, 1e-14).unwrap();
        let dense = eigs_dense(&s).unwrap();
        for (j, exact) in [3.0 / c, 9.0 / c].into_iter().enumerate() {
            assert!((seq.positive[j].value - exact).abs() < 1e-11 * exact);
            assert!((dense.positive[j].value - exact).abs() < 1e-11 * exact);
        }
    }

    #[test]
    fn table1_first_eigenvalue() {
        let p = table_params(0.5, [0.0, 2.0 / 3.0, 1.0]);
        let s = assemble(&jump_measure(&p, 12)).unwrap();
        let seq = eigenvalues(&s, Want { positive: 1, negative: 0 }, 1e-12).unwrap();
        assert!((seq.positive[0].value - 4.9341).abs() < 1e-3);
        assert_eq!(counting(&s, &20.0), 2);
        assert_eq!(counting(&s, &100.0), 4);
        let p2 = table_params(0.5, [0.0, -1.0, 0.0]);
        let s2 = assemble(&jump_measure(&p2, 12)).unwrap();
        assert_eq!(counting(&s2, &-30.0), 2);
    }

    #[test]
    fn converge_zero_recursion_returns_first_level() {
        let p = table_params(0.0, [0.0, 1.0, 3.0]);
        let seq = converge_in_level(&p, Want { positive: 2, negative: 0 }, 1e-8, 4).unwrap();
        assert_eq!(seq.truncation_level, 1);
        assert_eq!(seq.positive.len(), 2);
    }

    #[test]
    fn converge_rejects_impossible_branch() {
        let p = table_params(0.5, [0.0, 2.0 / 3.0, 1.0]);
        assert_eq!(
            converge_in_level(&p, Want { positive: 0, negative: 1 }, 1e-8, 2),
            Err(SpectraError::BranchEmpty(Branch::Negative))
        );
    }

    #[test]
    fn deep_truncation_stays_representable() {
        let p = table_params(0.5, [0.0, 2.0 / 3.0, 1.0]);
        let s = assemble(&jump_measure(&p, 64)).unwrap();
        let seq = eigenvalues(&s, Want { positive: 2, negative: 0 }, 1e-12).unwrap();
        assert!((seq.positive[0].value - 4.93409636).abs() < 1e-6);
        assert!((seq.positive[1].value - 13.65983033).abs() < 1e-6);
    }
}
