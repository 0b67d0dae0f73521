//! Geometric asymptotics `|λ| ~ μ_l q^{-k}` and reproduction of the reference
//! tables.
//!
//! With `q = a_m |d_m|` the four cases are
//!
//! | `d_m` | branch   | indices                 | ratio                         |
//! |-------|----------|-------------------------|-------------------------------|
//! | `> 0` | positive | `l + k Z₊`              | `λ · q^k`                     |
//! | `> 0` | negative | `−(l + k Z₋)`           | `−λ · q^k`                    |
//! | `< 0` | positive | `l + k (n−1)`           | `λ · q^{2k}`                  |
//! | `< 0` | negative | `−(l + Z₋ + k (n−1))`   | `−λ · q^{2k+1}`               |
//!
//! `μ_l` is the last ratio and its error the last increment; no
//! extrapolation is attempted.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{cst, fabs, Real, Scalar};
use crate::selfsim::{validate, z_counts, RawParams, SelfSimilarParams};
use crate::spectra::{self, Branch, EigenSequence, SpectraError, Want};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptError {
    #[error("some ζ_k vanishes (Z₊ + Z₋ < n − 1); the geometric asymptotics do not apply")]
    PeriodDegenerate,
    #[error("{needed} {branch} eigenvalues needed for {periods} periods, got {available}")]
    TooFewEigenvalues { branch: Branch, needed: usize, available: usize, periods: usize },
    #[error("the {0} branch is absent for these parameters")]
    BranchAbsent(Branch),
    #[error("d_m = 0: the spectrum is finite")]
    FiniteSpectrum,
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Minimum number of periods for a verdict.
pub const MIN_PERIODS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoticCase {
    /// `d_m > 0`, positive eigenvalues, period `Z₊`.
    PositiveBranch,
    /// `d_m > 0`, negative eigenvalues, period `Z₋`.
    NegativeBranch,
    /// `d_m < 0`, positive eigenvalues, period `n − 1` per `q²`.
    MixedPositive,
    /// `d_m < 0`, negative eigenvalues, shifted by `Z₋`, odd powers of `q`.
    MixedNegative,
}

impl AsymptoticCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            AsymptoticCase::PositiveBranch => "positive-branch",
            AsymptoticCase::NegativeBranch => "negative-branch",
            AsymptoticCase::MixedPositive => "mixed-positive",
            AsymptoticCase::MixedNegative => "mixed-negative",
        }
    }
}

/// Index bookkeeping of one case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseLayout<T> {
    pub case: AsymptoticCase,
    pub branch: Branch,
    pub period: usize,
    /// Eigenvalues skipped before `l = 1, k = 0`.
    pub index_offset: usize,
    /// `a_m |d_m|`.
    pub base: T,
    /// The ratio at `(l, k)` is `|λ| · base^(exponent_offset + k · exponent_step)`.
    pub exponent_offset: i32,
    pub exponent_step: i32,
}

impl<T: Real> CaseLayout<T> {
    /// 1-based position in the branch of `(l, k)`.
    pub fn position(&self, l: usize, k: usize) -> usize {
        self.index_offset + l + k * self.period
    }

    pub fn scale(&self, k: usize) -> T {
        self.base.powi(self.exponent_offset + k as i32 * self.exponent_step)
    }

    /// Eigenvalues needed for `periods` full periods.
    pub fn needed(&self, periods: usize) -> usize {
        self.index_offset + periods * self.period
    }
}

pub fn case_layout<T: Real>(params: &SelfSimilarParams<T>, branch: Branch) -> Result<CaseLayout<T>, AsymptError> {
    let d = *params.d();
    if d.is_zero() {
        return Err(AsymptError::FiniteSpectrum);
    }
    let zc = z_counts(params);
    if !zc.is_nondegenerate(params.n()) {
        return Err(AsymptError::PeriodDegenerate);
    }
    let base = *params.a_m() * fabs(d);
    let layout = if d > T::zero() {
        let (case, period) = match branch {
            Branch::Positive => (AsymptoticCase::PositiveBranch, zc.plus),
            Branch::Negative => (AsymptoticCase::NegativeBranch, zc.minus),
        };
        if period == 0 {
            return Err(AsymptError::BranchAbsent(branch));
        }
        CaseLayout { case, branch, period, index_offset: 0, base, exponent_offset: 0, exponent_step: 1 }
    } else {
        let (case, index_offset, exponent_offset) = match branch {
            Branch::Positive => (AsymptoticCase::MixedPositive, 0, 0),
            Branch::Negative => (AsymptoticCase::MixedNegative, zc.minus, 1),
        };
        CaseLayout { case, branch, period: params.n() - 1, index_offset, base, exponent_offset, exponent_step: 2 }
    };
    Ok(layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow<T> {
    pub l: usize,
    pub k: usize,
    /// Signed index: `j` for `λ_j`, `−j` for `λ_{−j}`.
    pub index: i64,
    pub lambda: T,
    pub rel_err: T,
    pub ratio: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuEstimate<T> {
    pub l: usize,
    pub mu: T,
    /// Last increment `|r_l(K) − r_l(K−1)|`.
    pub error: T,
    /// The last increments shrink (or sit below the noise floor).
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport<T> {
    pub layout: CaseLayout<T>,
    /// Ratio sequences `r_l(k)` for `l = 1..period`, ordered by `k`.
    pub ratios: Vec<Vec<RatioRow<T>>>,
    pub mu: Vec<MuEstimate<T>>,
    pub truncation_level: usize,
}

impl<T: Real> AsymptoticReport<T> {
    pub fn converged(&self) -> bool {
        self.mu.iter().all(|m| m.converged)
    }

    pub fn mu_values(&self) -> Vec<T> {
        self.mu.iter().map(|m| m.mu).collect()
    }

    /// All rows ordered by position in the branch.
    pub fn rows(&self) -> Vec<RatioRow<T>> {
        let mut rows: Vec<RatioRow<T>> = self.ratios.iter().flatten().copied().collect();
        rows.sort_by_key(|r| r.index.abs());
        rows
    }
}

/// Ratio sequences and `μ_l` for one branch of a computed spectrum. Uses
/// every complete period present in `seq`; at least [`MIN_PERIODS`] are
/// required.
pub fn extract_mu<T: Real>(
    params: &SelfSimilarParams<T>,
    seq: &EigenSequence<T>,
    branch: Branch,
) -> Result<AsymptoticReport<T>, AsymptError> {
    let layout = case_layout(params, branch)?;
    let values = seq.branch(branch);
    let available = values.len();
    if available < layout.needed(MIN_PERIODS) {
        return Err(AsymptError::TooFewEigenvalues {
            branch,
            needed: layout.needed(MIN_PERIODS),
            available,
            periods: MIN_PERIODS,
        });
    }
    let periods = (available - layout.index_offset) / layout.period;
    let sign: i64 = match branch {
        Branch::Positive => 1,
        Branch::Negative => -1,
    };

    let mut ratios = Vec::with_capacity(layout.period);
    let mut mu = Vec::with_capacity(layout.period);
    for l in 1..=layout.period {
        let rows: Vec<RatioRow<T>> = (0..periods)
            .map(|k| {
                let pos = layout.position(l, k);
                let e = values[pos - 1];
                RatioRow {
                    l,
                    k,
                    index: sign * pos as i64,
                    lambda: e.value,
                    rel_err: e.rel_err,
                    ratio: fabs(e.value) * layout.scale(k),
                }
            })
            .collect();
        mu.push(estimate(l, &rows));
        ratios.push(rows);
    }
    Ok(AsymptoticReport { layout, ratios, mu, truncation_level: seq.truncation_level })
}

fn estimate<T: Real>(l: usize, rows: &[RatioRow<T>]) -> MuEstimate<T> {
    let r: Vec<T> = rows.iter().map(|x| x.ratio).collect();
    let n = r.len();
    let last = r[n - 1];
    let inc = |i: usize| fabs(r[i] - r[i - 1]);
    let error = inc(n - 1);
    // increments below the accumulated eigenvalue error are noise
    let floor = rows.iter().fold(T::zero(), |m, x| m.max(x.rel_err * x.ratio)).max(fabs(last) * cst(1e-12)) * cst(4.0);
    let converged = (2..n).all(|i| i + 2 < n || inc(i) <= inc(i - 1) || inc(i) <= floor);
    MuEstimate { l, mu: last, error, converged }
}

/// Converge enough eigenvalues for `periods` periods of `branch` and extract
/// the asymptotic constants.
pub fn mu_report<T: Real>(
    params: &SelfSimilarParams<T>,
    branch: Branch,
    periods: usize,
    tol: T,
) -> Result<AsymptoticReport<T>, AsymptError> {
    let layout = case_layout(params, branch)?;
    let periods = periods.max(MIN_PERIODS);
    let mut want = Want::default();
    match branch {
        Branch::Positive => want.positive = layout.needed(periods),
        Branch::Negative => want.negative = layout.needed(periods),
    }
    let seq = spectra::converge_in_level(params, want, tol, 2)?;
    extract_mu(params, &seq, branch)
}

/// Number of eigenvalues of the branch with modulus in
/// `(T₀ q^{-s k}, T₀ q^{-s (k+1)}]` for `k = 0..windows`, where `q^s` is the
/// per-period scale of the case.
pub fn window_counts<T: Real>(
    layout: &CaseLayout<T>,
    system: &spectra::DiscreteSystem<T>,
    t0: T,
    windows: usize,
) -> Vec<usize> {
    let step = layout.base.powi(layout.exponent_step);
    let mut lo = t0;
    (0..windows)
        .map(|_| {
            let hi = lo / step;
            // counts below the upper end include it unless it is an eigenvalue
            let c =
                spectra::branch_count(system, layout.branch, &hi) - spectra::branch_count(system, layout.branch, &lo);
            lo = hi;
            c
        })
        .collect()
}

/// Relative tolerance on tabulated eigenvalues.
pub const TABLE_LAMBDA_TOL: f64 = 0.01;
/// Absolute tolerance on tabulated ratios.
pub const TABLE_RATIO_TOL: f64 = 1e-3;
/// Absolute tolerance on the agreement of the positive and negative `μ`
/// of the mixed-sign table.
pub const TABLE_MU_AGREEMENT_TOL: f64 = 2e-3;
/// Convergence tolerance in the truncation level for table runs.
pub const TABLE_LEVEL_TOL: f64 = 1e-8;

/// One tabulated cell `(l, k, |λ|, ratio)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub l: usize,
    pub k: usize,
    pub modulus: f64,
    pub ratio: f64,
}

const fn cell(l: usize, k: usize, modulus: f64, ratio: f64) -> Reference {
    Reference { l, k, modulus, ratio }
}

const TABLE_1: [Reference; 8] = [
    cell(1, 0, 4.93, 4.9341),
    cell(2, 0, 13.6, 13.6598),
    cell(1, 1, 49.4, 8.2322),
    cell(2, 1, 88.5, 14.7576),
    cell(1, 2, 296.0, 8.2330),
    cell(2, 2, 531.0, 14.7577),
    cell(1, 3, 1780.0, 8.2330),
    cell(2, 3, 3190.0, 14.7577),
];

const TABLE_2: [Reference; 4] =
    [cell(1, 0, 5.10, 5.1005), cell(1, 1, 26.0, 4.3459), cell(1, 2, 156.0, 4.3458), cell(1, 3, 939.0, 4.3458)];

const TABLE_3_POSITIVE: [Reference; 6] = [
    cell(1, 0, 4.31, 4.3146),
    cell(2, 0, 38.1, 38.0536),
    cell(1, 1, 153.0, 4.2572),
    cell(2, 1, 1370.0, 38.0535),
    cell(1, 2, 5520.0, 4.2572),
    cell(2, 2, 49300.0, 38.0535),
];

const TABLE_3_NEGATIVE: [Reference; 6] = [
    cell(1, 0, 25.5, 4.2572),
    cell(2, 0, 228.0, 38.0535),
    cell(1, 1, 919.0, 4.2572),
    cell(2, 1, 8220.0, 38.0535),
    cell(1, 2, 33100.0, 4.2572),
    cell(2, 2, 296000.0, 38.0535),
];

/// Parameters of a reference table (1, 2 or 3), exact.
pub fn table_params<T: Scalar>(id: u8) -> Option<SelfSimilarParams<T>> {
    let r = |p: i64, q: i64| T::from_ratio(p, q);
    let (d, beta) = match id {
        1 => (r(1, 2), vec![r(0, 1), r(2, 3), r(1, 1)]),
        2 => (r(1, 2), vec![r(0, 1), r(-1, 1), r(0, 1)]),
        3 => (r(-1, 2), vec![r(0, 1), r(-1, 1), r(0, 1)]),
        _ => return None,
    };
    validate(RawParams { n: 3, a: vec![r(1, 3); 3], m: 3, d, beta }).ok()
}

fn references(id: u8) -> Vec<(Branch, &'static [Reference])> {
    match id {
        1 => vec![(Branch::Positive, &TABLE_1[..])],
        2 => vec![(Branch::Negative, &TABLE_2[..])],
        3 => vec![(Branch::Positive, &TABLE_3_POSITIVE[..]), (Branch::Negative, &TABLE_3_NEGATIVE[..])],
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub branch: Branch,
    pub l: usize,
    pub k: usize,
    pub index: i64,
    pub lambda: f64,
    pub rel_err: f64,
    pub ratio: f64,
    /// Absolute error bound of the ratio.
    pub ratio_err: f64,
    pub reference_modulus: f64,
    pub reference_ratio: f64,
    pub lambda_ok: bool,
    pub ratio_ok: bool,
    pub truncation_level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub table: u8,
    pub rows: Vec<TableRow>,
    /// `max_l |μ⁺_l − μ⁻_l|` when both branches are tabulated.
    pub mu_disagreement: Option<f64>,
    pub truncation_level: usize,
    /// Largest level-to-level relative change of any reported eigenvalue.
    pub max_rel_err: f64,
}

impl TableReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.lambda_ok && r.ratio_ok)
            && self.mu_disagreement.is_none_or(|d| d <= TABLE_MU_AGREEMENT_TOL)
    }
}

/// Recompute a reference table and compare every cell.
pub fn reproduce_table(id: u8) -> Result<TableReport, AsymptError> {
    let params: SelfSimilarParams<f64> = table_params(id).ok_or(AsymptError::FiniteSpectrum)?;
    let refs = references(id);
    let mut want = Want::default();
    let mut layouts = Vec::new();
    for (branch, cells) in &refs {
        let layout = case_layout(&params, *branch)?;
        let periods = cells.iter().map(|c| c.k + 1).max().unwrap_or(1).max(MIN_PERIODS);
        match branch {
            Branch::Positive => want.positive = layout.needed(periods),
            Branch::Negative => want.negative = layout.needed(periods),
        }
        layouts.push(layout);
    }
    let seq = spectra::converge_in_level(&params, want, TABLE_LEVEL_TOL, 2)?;

    let mut rows = Vec::new();
    let mut mus = Vec::new();
    for ((branch, cells), layout) in refs.iter().zip(&layouts) {
        let report = extract_mu(&params, &seq, *branch)?;
        mus.push(report.mu_values());
        for c in cells.iter() {
            let row = report.ratios[c.l - 1][c.k];
            debug_assert_eq!(row.index.unsigned_abs() as usize, layout.position(c.l, c.k));
            let modulus = row.lambda.abs();
            rows.push(TableRow {
                branch: *branch,
                l: c.l,
                k: c.k,
                index: row.index,
                lambda: row.lambda,
                rel_err: row.rel_err,
                ratio: row.ratio,
                ratio_err: row.rel_err * row.ratio,
                reference_modulus: c.modulus,
                reference_ratio: c.ratio,
                lambda_ok: (modulus - c.modulus).abs() <= TABLE_LAMBDA_TOL * c.modulus,
                ratio_ok: (row.ratio - c.ratio).abs() <= TABLE_RATIO_TOL,
                truncation_level: seq.truncation_level,
            });
        }
    }
    let mu_disagreement = if mus.len() == 2 && mus[0].len() == mus[1].len() {
        Some(mus[0].iter().zip(&mus[1]).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    } else {
        None
    };
    let max_rel_err = rows.iter().fold(0.0_f64, |m, r| m.max(r.rel_err));
    Ok(TableReport { table: id, rows, mu_disagreement, truncation_level: seq.truncation_level, max_rel_err })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(id: u8) -> SelfSimilarParams<f64> {
        table_params(id).unwrap()
    }

    #[test]
    fn layouts_of_the_three_tables() {
        let l = case_layout(&params(1), Branch::Positive).unwrap();
        assert_eq!((l.case, l.period, l.index_offset), (AsymptoticCase::PositiveBranch, 2, 0));
        assert!(matches!(case_layout(&params(1), Branch::Negative), Err(AsymptError::BranchAbsent(_))));

        let l = case_layout(&params(2), Branch::Negative).unwrap();
        assert_eq!((l.case, l.period), (AsymptoticCase::NegativeBranch, 1));

        let l = case_layout(&params(3), Branch::Negative).unwrap();
        assert_eq!((l.period, l.index_offset, l.exponent_offset), (2, 1, 1));
        assert_eq!(l.position(1, 0), 2);
        assert!((l.scale(1) - 1.0 / 216.0).abs() < 1e-15);
    }

    #[test]
    fn mu_table1() {
        let r = mu_report(&params(1), Branch::Positive, 4, 1e-8).unwrap();
        assert!(r.converged());
        assert!((r.mu[0].mu - 8.2330).abs() < 1e-3);
        assert!((r.mu[1].mu - 14.7577).abs() < 1e-3);
    }

    #[test]
    fn mu_table2_negative() {
        let r = mu_report(&params(2), Branch::Negative, 4, 1e-8).unwrap();
        assert!((r.mu[0].mu - 4.3458).abs() < 1e-3);
        assert!(r.rows().iter().all(|row| row.lambda < 0.0));
    }

    #[test]
    fn mu_table3_shared_between_branches() {
        let p = mu_report(&params(3), Branch::Positive, 3, 1e-8).unwrap();
        let n = mu_report(&params(3), Branch::Negative, 3, 1e-8).unwrap();
        for (a, b) in p.mu_values().iter().zip(n.mu_values()) {
            assert!((a - b).abs() < 2e-3, "{a} vs {b}");
        }
        assert!((p.mu[0].mu - 4.2572).abs() < 1e-3);
        assert!((n.mu[1].mu - 38.0535).abs() < 1e-3);
    }

    #[test]
    fn too_few_eigenvalues() {
        let seq = spectra::converge_in_level(&params(1), Want { positive: 4, negative: 0 }, 1e-8, 2).unwrap();
        assert!(matches!(
            extract_mu(&params(1), &seq, Branch::Positive),
            Err(AsymptError::TooFewEigenvalues { needed: 6, available: 4, .. })
        ));
    }

    #[test]
    fn degenerate_and_finite() {
        let flat = table_params::<f64>(1).unwrap().to_raw();
        let mut raw = flat.clone();
        raw.beta = vec![1.0, 1.0, 2.0];
        let p = validate(raw).unwrap();
        assert_eq!(case_layout(&p, Branch::Positive), Err(AsymptError::PeriodDegenerate));
        let mut raw = flat;
        raw.d = 0.0;
        let p = validate(raw).unwrap();
        assert_eq!(case_layout(&p, Branch::Positive), Err(AsymptError::FiniteSpectrum));
    }

    #[test]
    fn window_counts_equal_period() {
        let p = params(1);
        let layout = case_layout(&p, Branch::Positive).unwrap();
        let sys = spectra::assemble(&crate::selfsim::jump_measure(&p, 16)).unwrap();
        assert_eq!(window_counts(&layout, &sys, 30.0, 4), vec![2, 2, 2, 2]);

        let p = params(3);
        let layout = case_layout(&p, Branch::Negative).unwrap();
        let sys = spectra::assemble(&crate::selfsim::jump_measure(&p, 16)).unwrap();
        assert_eq!(window_counts(&layout, &sys, 100.0, 3), vec![2, 2, 2]);
    }

    #[test]
    fn tables_reproduce() {
        for id in 1..=3 {
            let t = reproduce_table(id).unwrap();
            assert!(
                t.all_ok(),
                "table {id}: {:#?}",
                t.rows.iter().filter(|r| !(r.lambda_ok && r.ratio_ok)).collect::<Vec<_>>()
            );
            assert!(t.max_rel_err < 1e-6);
        }
    }
}
