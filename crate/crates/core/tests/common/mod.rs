#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;
use selfsim_spectra::selfsim::{validate, RawParams};
use selfsim_spectra::{BigRational, ExactParams, Params, Scalar};

pub fn q(n: i64, d: i64) -> BigRational {
    <BigRational as Scalar>::from_ratio(n, d)
}

pub fn table(id: u8) -> ExactParams {
    selfsim_spectra::asympt::table_params(id).unwrap()
}

pub fn to_f64(p: &ExactParams) -> Params {
    p.convert(Scalar::to_f64)
}

/// Valid parameters from integer weights, `d = d_num/10` and `β_k = b_k/2`.
pub fn build(weights: &[i64], m: usize, d_num: i64, beta: &[i64]) -> ExactParams {
    let total: i64 = weights.iter().sum();
    validate(RawParams {
        n: weights.len(),
        a: weights.iter().map(|w| q(*w, total)).collect(),
        m,
        d: q(d_num, 10),
        beta: beta.iter().map(|b| q(*b, 2)).collect(),
    })
    .expect("generated parameters are valid")
}

/// `n ∈ 2..=4`, `|d| ≤ 0.8`, `β_k ∈ {−2, −1.5, …, 2}`.
pub fn arb_params() -> impl Strategy<Value = ExactParams> {
    (2usize..=4)
        .prop_flat_map(|n| (prop::collection::vec(1i64..=9, n), 1..=n, -8i64..=8, prop::collection::vec(-4i64..=4, n)))
        .prop_map(|(w, m, d, b)| build(&w, m, d, &b))
}

/// Like [`arb_params`] with `d ≠ 0`.
pub fn arb_recursive_params() -> impl Strategy<Value = ExactParams> {
    arb_params().prop_filter("d = 0", |p| !num_traits::Zero::is_zero(p.d()))
}

pub fn random_params(rng: &mut impl Rng) -> ExactParams {
    let n = rng.gen_range(2..=4);
    let w: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
    let b: Vec<i64> = (0..n).map(|_| rng.gen_range(-4..=4)).collect();
    let d = loop {
        let d = rng.gen_range(-8..=8);
        if d != 0 {
            break d;
        }
    };
    build(&w, rng.gen_range(1..=n), d, &b)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// The three table sets followed by 21 seeded random sets.
pub fn oracle_sets() -> Vec<(String, selfsim_spectra::Params)> {
    use rand::SeedableRng;
    let mut sets: Vec<_> = (1..=3).map(|id| (format!("table {id}"), to_f64(&table(id)))).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..21 {
        sets.push((format!("random {i}"), to_f64(&random_params(&mut rng))));
    }
    sets
}

/// Pairwise relative disagreement of bisection, dense and shooting
/// eigenvalues on one truncation.
#[derive(Debug, Clone, Default)]
pub struct OracleComparison {
    pub compared: usize,
    pub worst: f64,
    pub worst_at: String,
}

pub fn compare_oracles(params: &selfsim_spectra::Params, level: usize, per_branch: usize) -> OracleComparison {
    use selfsim_spectra::selfsim::jump_measure;
    use selfsim_spectra::spectra::{self, Branch, Want};

    let mut out = OracleComparison::default();
    let measure = jump_measure(params, level);
    if measure.is_empty() {
        return out;
    }
    let sys = spectra::assemble(&measure).unwrap();
    let dense = spectra::eigs_dense_extended(&sys).unwrap();
    let want = Want { positive: dense.positive.len().min(per_branch), negative: dense.negative.len().min(per_branch) };
    let bisect = spectra::eigenvalues(&sys, want, 1e-14).unwrap();
    for branch in [Branch::Positive, Branch::Negative] {
        let b = bisect.values(branch);
        let Some(top) = b.last() else { continue };
        let d = dense.values(branch);
        let s = spectra::shooting_roots(&sys, branch, top.abs() * 1.001, 1e-3);
        for j in 0..b.len() {
            let (y, z) = (d[j], s.get(j).copied().unwrap_or(f64::NAN));
            for (pair, diff) in [
                ("bisection/dense", rel_diff(b[j], y)),
                ("bisection/shooting", rel_diff(b[j], z)),
                ("dense/shooting", rel_diff(y, z)),
            ] {
                if diff.is_nan() || diff > out.worst {
                    out.worst = diff;
                    out.worst_at = format!("R={level} {branch} #{j} {pair}");
                }
            }
        }
        out.compared += b.len();
    }
    out
}
