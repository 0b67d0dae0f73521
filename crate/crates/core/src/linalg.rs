//! Small dense kernels: symmetric inertia by Bunch–Parlett pivoting (valid
//! over any ordered field), Gaussian elimination, Cholesky and cyclic Jacobi.

use crate::scalar::{cst, fabs, quot, Real, Scalar};

/// Numbers of negative, zero and positive eigenvalues of a symmetric form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Inertia {
    pub n_minus: usize,
    pub n_zero: usize,
    pub n_plus: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.n_minus + self.n_zero + self.n_plus
    }
}

impl std::ops::Add for Inertia {
    type Output = Inertia;

    fn add(self, rhs: Inertia) -> Inertia {
        Inertia {
            n_minus: self.n_minus + rhs.n_minus,
            n_zero: self.n_zero + rhs.n_zero,
            n_plus: self.n_plus + rhs.n_plus,
        }
    }
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Principal submatrix on `rows × cols`.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Rect<T> {
        Rect {
            rows: rows.len(),
            cols: cols.len(),
            data: rows.iter().flat_map(|&i| cols.iter().map(move |&j| self[(i, j)].clone())).collect(),
        }
    }

    pub fn principal(&self, idx: &[usize]) -> Matrix<T> {
        Matrix { n: idx.len(), data: self.select(idx, idx).data }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |acc, (a, b)| {
            let d = (a.clone() - b.clone()).abs();
            if d > acc {
                d
            } else {
                acc
            }
        })
    }

    pub fn max_abs(&self) -> T {
        crate::scalar::max_abs(self.data.iter())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { n: self.n, data: self.data.iter().map(f).collect() }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Row-major rectangular block.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T> Rect<T> {
    fn at(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }
}

/// Inertia of a symmetric matrix by symmetric elimination with Bunch–Parlett
/// complete pivoting. Over an exact field the result is exact; in floating
/// point only exactly vanishing trailing blocks are reported as zeros.
pub fn inertia<T: Scalar>(mat: &Matrix<T>) -> Inertia {
    // (1 + sqrt 17) / 8
    let alpha = T::from_ratio(6404, 10000);
    let mut a = mat.clone();
    let n = a.n;
    let mut res = Inertia::default();
    let mut k = 0;
    while k < n {
        let (mut diag_max, mut r) = (T::zero(), k);
        let (mut off_max, mut p, mut qq) = (T::zero(), k, k);
        for i in k..n {
            let v = a[(i, i)].abs();
            if v > diag_max {
                diag_max = v;
                r = i;
            }
            for j in k..i {
                let v = a[(i, j)].abs();
                if v > off_max {
                    off_max = v;
                    p = j;
                    qq = i;
                }
            }
        }
        if diag_max.is_zero() && off_max.is_zero() {
            res.n_zero += n - k;
            break;
        }
        if diag_max >= alpha.clone() * off_max {
            swap_sym(&mut a, k, r);
            let piv = a[(k, k)].clone();
            if piv < T::zero() {
                res.n_minus += 1;
            } else {
                res.n_plus += 1;
            }
            for i in k + 1..n {
                let f = a[(i, k)].clone() / piv.clone();
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..=i {
                    let v = a[(i, j)].clone() - f.clone() * a[(j, k)].clone();
                    a[(i, j)] = v.clone();
                    a[(j, i)] = v;
                }
            }
            k += 1;
        } else {
            swap_sym(&mut a, k, p);
            // qq > p >= k, so qq was not moved unless it equalled k
            let qq = if qq == k { p } else { qq };
            swap_sym(&mut a, k + 1, qq);
            let (e11, e12, e22) = (a[(k, k)].clone(), a[(k + 1, k)].clone(), a[(k + 1, k + 1)].clone());
            // |e11|, |e22| < alpha |e12| forces det < 0: one sign of each
            let det = e11.clone() * e22.clone() - e12.clone() * e12.clone();
            res.n_minus += 1;
            res.n_plus += 1;
            for i in k + 2..n {
                let (ui, vi) = (a[(i, k)].clone(), a[(i, k + 1)].clone());
                // rows of E^{-1} applied to (ui, vi)
                let fi = (e22.clone() * ui.clone() - e12.clone() * vi.clone()) / det.clone();
                let gi = (e11.clone() * vi - e12.clone() * ui) / det.clone();
                for j in k + 2..=i {
                    let (uj, vj) = (a[(j, k)].clone(), a[(j, k + 1)].clone());
                    let v = a[(i, j)].clone() - fi.clone() * uj - gi.clone() * vj;
                    a[(i, j)] = v.clone();
                    a[(j, i)] = v;
                }
            }
            k += 2;
        }
    }
    res
}

fn swap_sym<T: Scalar>(a: &mut Matrix<T>, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.n;
    for c in 0..n {
        a.data.swap(i * n + c, j * n + c);
    }
    for r in 0..n {
        a.data.swap(r * n + i, r * n + j);
    }
}

/// Solve `A X = B` by Gaussian elimination with partial pivoting.
/// Returns `None` when `A` is (exactly) singular.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &Rect<T>) -> Option<Rect<T>> {
    let n = a.n;
    assert_eq!(b.rows, n, "right-hand side has wrong row count");
    let w = n + b.cols;
    let mut aug: Vec<T> = Vec::with_capacity(n * w);
    for i in 0..n {
        aug.extend((0..n).map(|j| a[(i, j)].clone()));
        aug.extend((0..b.cols).map(|j| b.at(i, j).clone()));
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| {
            aug[x * w + col].abs().partial_cmp(&aug[y * w + col].abs()).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if aug[piv * w + col].is_zero() {
            return None;
        }
        if piv != col {
            for c in 0..w {
                aug.swap(piv * w + c, col * w + c);
            }
        }
        let p = aug[col * w + col].clone();
        for r in col + 1..n {
            let f = aug[r * w + col].clone() / p.clone();
            if f.is_zero() {
                continue;
            }
            for c in col..w {
                let v = aug[r * w + c].clone() - f.clone() * aug[col * w + c].clone();
                aug[r * w + c] = v;
            }
        }
    }
    let mut x = vec![T::zero(); n * b.cols];
    for r in (0..n).rev() {
        for c in 0..b.cols {
            let mut s = aug[r * w + n + c].clone();
            for k in r + 1..n {
                s = s - aug[r * w + k].clone() * x[k * b.cols + c].clone();
            }
            x[r * b.cols + c] = s / aug[r * w + r].clone();
        }
    }
    Some(Rect { rows: n, cols: b.cols, data: x })
}

/// `A - Bᵀ X` where `X = C⁻¹ B` has been computed; `B` is `|C| × |A|`.
pub fn schur_update<T: Scalar>(a: &Matrix<T>, b: &Rect<T>, x: &Rect<T>) -> Matrix<T> {
    Matrix::from_fn(a.n, |i, j| {
        let s = (0..b.rows).fold(T::zero(), |s, r| s + b.at(r, i).clone() * x.at(r, j).clone());
        a[(i, j)].clone() - s
    })
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.n;
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s = s - l[(j, k)] * l[(j, k)];
        }
        if s <= T::zero() {
            return None;
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// `L⁻¹ A L⁻ᵀ` for lower triangular `L`.
pub fn congruence_inverse<T: Real>(l: &Matrix<T>, a: &Matrix<T>) -> Matrix<T> {
    let n = l.n;
    // Y = L⁻¹ A, column by column
    let fwd = |rhs: &[T]| -> Vec<T> {
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s = s - l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    };
    let mut y = Matrix::zeros(n);
    for j in 0..n {
        let col: Vec<T> = (0..n).map(|i| a[(i, j)]).collect();
        for (i, v) in fwd(&col).into_iter().enumerate() {
            y[(i, j)] = v;
        }
    }
    // W = (L⁻¹ Yᵀ)ᵀ = Y L⁻ᵀ
    let mut w = Matrix::zeros(n);
    for i in 0..n {
        let row: Vec<T> = (0..n).map(|j| y[(i, j)]).collect();
        for (j, v) in fwd(&row).into_iter().enumerate() {
            w[(i, j)] = v;
        }
    }
    // symmetrize rounding
    for i in 0..n {
        for j in 0..i {
            let v = (w[(i, j)] + w[(j, i)]) / (T::one() + T::one());
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    w
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// A rotation is skipped once `|a_pq| ≤ ε √|a_pp a_qq|`. Together with the
/// diagonal update `a_pp − t a_pq` this keeps small eigenvalues of graded
/// matrices to high relative accuracy instead of accuracy relative to the
/// norm.
pub fn symmetric_eigenvalues<T: Real>(mat: &Matrix<T>) -> Vec<T> {
    let n = mat.n;
    let mut a = mat.clone();
    let two = T::one() + T::one();
    let eps = cst::<T>(T::roundoff());
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if fabs(apq) <= eps * (fabs(app) * fabs(aqq)).sqrt() || fabs(apq) <= T::min_positive_value() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (two * apq);
                let t = if fabs(theta) > T::one() / eps {
                    T::one() / (two * theta)
                } else {
                    let s = if theta < T::zero() { -T::one() } else { T::one() };
                    s / (fabs(theta) + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    a[(k, p)] = np;
                    a[(p, k)] = np;
                    a[(k, q)] = nq;
                    a[(q, k)] = nq;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
            }
        }
        if !rotated {
            break;
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Eigenvalues `λ` of the definite pencil `T y = λ J y`, where `T` is
/// symmetric positive definite and `J = diag(signs)` with entries `±1`.
///
/// `T` is diagonalized by `J`-orthogonal Jacobi steps: ordinary rotations for
/// index pairs of equal sign and hyperbolic ones for pairs of opposite sign,
/// with the relative skip rule of [`symmetric_eigenvalues`]. The result is
/// `λ_i = J_ii t_ii`, in the order of the indices (unsorted). Returns `None`
/// when a hyperbolic step is impossible, i.e. `T` was not positive definite.
pub fn definite_pair_eigenvalues<T: Real>(t: &Matrix<T>, signs: &[i8]) -> Option<Vec<T>> {
    let n = t.n;
    let mut a = t.clone();
    let two = T::one() + T::one();
    let eps = cst::<T>(T::roundoff());
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (app, aqq, apq) = (a[(p, p)], a[(q, q)], a[(p, q)]);
                if fabs(apq) <= eps * (fabs(app) * fabs(aqq)).sqrt() || fabs(apq) <= T::min_positive_value() {
                    continue;
                }
                rotated = true;
                let (c, s, tn) = if signs[p] == signs[q] {
                    let theta = quot(aqq - app, two * apq);
                    let tn = if fabs(theta) > T::one() / eps {
                        quot(T::one(), two * theta)
                    } else {
                        let sg = if theta < T::zero() { -T::one() } else { T::one() };
                        quot(sg, fabs(theta) + (theta * theta + T::one()).sqrt())
                    };
                    let c = quot(T::one(), (tn * tn + T::one()).sqrt());
                    (c, tn * c, -tn)
                } else {
                    // tanh 2φ = −2 a_pq / (a_pp + a_qq), |·| < 1 for T ≻ 0
                    let tau = quot(-two * apq, app + aqq);
                    if tau.is_nan() || fabs(tau) >= T::one() {
                        return None;
                    }
                    let tn = quot(tau, T::one() + (T::one() - tau * tau).sqrt());
                    let ch = quot(T::one(), (T::one() - tn * tn).sqrt());
                    (ch, tn * ch, tn)
                };
                // columns p, q ← X = [[c, ∓s], [s, c]] (trig) or [[c, s], [s, c]] (hyperbolic)
                let hyperbolic = signs[p] != signs[q];
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    let (np, nq) = if hyperbolic {
                        (c * akp + s * akq, s * akp + c * akq)
                    } else {
                        (c * akp - s * akq, s * akp + c * akq)
                    };
                    a[(k, p)] = np;
                    a[(p, k)] = np;
                    a[(k, q)] = nq;
                    a[(q, k)] = nq;
                }
                a[(p, p)] = app + tn * apq;
                a[(q, q)] = aqq + if hyperbolic { tn * apq } else { -tn * apq };
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
            }
        }
        if !rotated {
            break;
        }
    }
    Some((0..n).map(|i| if signs[i] < 0 { -a[(i, i)] } else { a[(i, i)] }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn inertia_of_diagonal() {
        let m = Matrix::from_fn(4, |i, j| if i == j { [3.0, -1.0, 0.0, 2.0][i] } else { 0.0 });
        assert_eq!(inertia(&m), Inertia { n_minus: 1, n_zero: 1, n_plus: 2 });
    }

    #[test]
    fn inertia_zero_diagonal_uses_two_by_two_pivot() {
        let m = Matrix::from_fn(2, |i, j| if i == j { q(0, 1) } else { q(5, 1) });
        assert_eq!(inertia(&m), Inertia { n_minus: 1, n_zero: 0, n_plus: 1 });
    }

    #[test]
    fn inertia_detects_exact_singularity() {
        // rank one: v vᵀ with v = (1, 2, 3)
        let v = [1, 2, 3];
        let m = Matrix::from_fn(3, |i, j| q(v[i] * v[j], 1));
        assert_eq!(inertia(&m), Inertia { n_minus: 0, n_zero: 2, n_plus: 1 });
        let neg = m.map(|x| -x.clone());
        assert_eq!(inertia(&neg), Inertia { n_minus: 1, n_zero: 2, n_plus: 0 });
    }

    #[test]
    fn inertia_matches_jacobi_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(1..9);
            let mut m = Matrix::<f64>::zeros(n);
            for i in 0..n {
                for j in 0..=i {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            let ev = symmetric_eigenvalues(&m);
            let neg = ev.iter().filter(|&&x| x < 0.0).count();
            let got = inertia(&m);
            assert_eq!(got.n_minus, neg, "{ev:?}");
            assert_eq!(got.n_plus, n - neg);
        }
    }

    #[test]
    fn jacobi_known_spectrum() {
        // path Laplacian: 2 - 2cos(kπ/(n+1))
        let n = 6;
        let m = Matrix::from_fn(n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let ev = symmetric_eigenvalues(&m);
        for (k, v) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
        }
    }

    #[test]
    fn solve_and_schur_exact() {
        let c = Matrix::from_fn(2, |i, j| [[q(2, 1), q(1, 1)], [q(1, 1), q(3, 1)]][i][j].clone());
        let b = Rect { rows: 2, cols: 1, data: vec![q(1, 1), q(2, 1)] };
        let x = solve(&c, &b).unwrap();
        assert_eq!(x.data, vec![q(1, 5), q(3, 5)]);
        let a = Matrix::from_fn(1, |_, _| q(1, 1));
        let s = schur_update(&a, &b, &x);
        assert_eq!(s[(0, 0)], q(1, 1) - q(7, 5));
        assert!(solve(&Matrix::<BigRational>::zeros(2), &b).is_none());
    }

    #[test]
    fn cholesky_congruence_identity() {
        let a = Matrix::from_fn(3, |i, j| if i == j { 4.0 } else { 1.0 });
        let l = cholesky(&a).unwrap();
        let w = congruence_inverse(&l, &a);
        let id = Matrix::<f64>::identity(3);
        assert!(w.max_abs_diff(&id) < 1e-14);
        assert!(cholesky(&Matrix::from_fn(2, |i, j| if i == j { 0.0 } else { 1.0 })).is_none());
    }
}
