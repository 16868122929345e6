//! Rank, kernels and complements over exact rationals and floats.
//!
//! Exact rank uses fraction-free (Bareiss) elimination on integer rows.
//! Exact kernels come from the reduced row echelon form with earliest-index
//! pivoting, so their output is deterministic. Float rank and kernels come
//! from the singular value decomposition with a threshold relative to the
//! largest singular value.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Rank of a rational matrix by Bareiss elimination over the integers.
pub fn rank_exact(m: &DenseMatrix<BigRational>) -> usize {
    let mut rows: Vec<Vec<BigInt>> = (0..m.rows()).map(|i| integer_row(m.row(i))).collect();
    let ncols = m.cols();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank][col].clone();
        for r in rank + 1..rows.len() {
            let factor = rows[r][col].clone();
            for c in col..ncols {
                let v = &pivot * &rows[r][c] - &factor * &rows[rank][c];
                // Bareiss: the division by the previous pivot is exact.
                rows[r][c] = v / &prev;
            }
        }
        prev = pivot;
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

fn integer_row(row: &[BigRational]) -> Vec<BigInt> {
    let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect()
}

/// Reduced row echelon form and pivot columns, pivoting on the earliest
/// nonzero row of each column.
pub fn rref(m: &DenseMatrix<BigRational>) -> (DenseMatrix<BigRational>, Vec<usize>) {
    let mut a = m.to_rows();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..m.cols() {
        let Some(p) = (r..a.len()).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = BigRational::one() / a[r][col].clone();
        for v in a[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        for i in 0..a.len() {
            if i != r && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for c in col..m.cols() {
                    let delta = f.clone() * a[r][c].clone();
                    a[i][c] = a[i][c].clone() - delta;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    let reduced = if a.is_empty() { DenseMatrix::zeros(0, m.cols()) } else { DenseMatrix::from_rows(a) };
    (reduced, pivots)
}

/// Basis of the right kernel, one vector per free column in increasing order.
pub fn nullspace_exact(m: &DenseMatrix<BigRational>) -> Vec<Vec<BigRational>> {
    let n = m.cols();
    let (r, pivots) = rref(m);
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![BigRational::zero(); n];
        v[free] = BigRational::one();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -r.get(row, free).clone();
        }
        basis.push(v);
    }
    basis
}

/// Singular-value summary of a float matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    pub sigma_max: f64,
    /// Smallest singular value counted in the rank, if any.
    pub sigma_min_kept: Option<f64>,
    /// Largest singular value dropped from the rank, if any.
    pub sigma_max_dropped: Option<f64>,
    /// Some singular value lies within a factor 10 of the threshold.
    pub unstable: bool,
}

pub fn singular_values(m: &DenseMatrix<f64>) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn rank_float(m: &DenseMatrix<f64>, tol: f64) -> RankInfo {
    let s = singular_values(m);
    classify(&s, tol)
}

fn classify(s: &[f64], tol: f64) -> RankInfo {
    let sigma_max = s.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return RankInfo { rank: 0, sigma_max, sigma_min_kept: None, sigma_max_dropped: None, unstable: false };
    }
    let thr = tol * sigma_max;
    let rank = s.iter().filter(|&&x| x > thr).count();
    let unstable = s.iter().any(|&x| x > thr / 10.0 && x < thr * 10.0);
    RankInfo {
        rank,
        sigma_max,
        sigma_min_kept: s[..rank].last().copied(),
        sigma_max_dropped: s.get(rank).copied(),
        unstable,
    }
}

/// Orthonormal basis of the numerical right kernel.
pub fn nullspace_float(m: &DenseMatrix<f64>, tol: f64) -> Vec<Vec<f64>> {
    let n = m.cols();
    if n == 0 {
        return Vec::new();
    }
    if m.rows() == 0 {
        return (0..n).map(|i| unit(n, i)).collect();
    }
    // Pad to at least n rows so the thin SVD carries a full V.
    let rows = m.rows().max(n);
    let mut a = DMatrix::<f64>::zeros(rows, n);
    for i in 0..m.rows() {
        for j in 0..n {
            a[(i, j)] = *m.get(i, j);
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let thr = tol * sigma_max;
    let mut out: Vec<(f64, Vec<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| sigma_max == 0.0 || s <= thr)
        .map(|(i, &s)| (s, canonical_sign(v_t.row(i).iter().copied().collect())))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.into_iter().map(|(_, v)| v).collect()
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Flip sign so the first entry of largest magnitude is positive.
fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0.0;
    let mut sign = 1.0;
    for &x in &v {
        if libm::fabs(x) > best + 1e-12 {
            best = libm::fabs(x);
            sign = if x < 0.0 { -1.0 } else { 1.0 };
        }
    }
    if sign < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    v
}

/// Minimum-norm least squares solution of `m x = b` and the residual norm.
pub fn least_squares(m: &DenseMatrix<f64>, b: &[f64], tol: f64) -> (Vec<f64>, f64) {
    let a = m.to_nalgebra();
    let rhs = DVector::from_column_slice(b);
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let x = svd
        .solve(&rhs, tol * sigma_max.max(f64::MIN_POSITIVE))
        .map(|x| x.iter().copied().collect::<Vec<_>>())
        .unwrap_or_else(|_| vec![0.0; m.cols()]);
    let r = &a * DVector::from_column_slice(&x) - rhs;
    (x, r.norm())
}

/// Incrementally row-reduced span used to pick complements with
/// earliest-index preference. Works over any scalar; floats use a relative
/// pivot threshold.
pub struct EchelonSpan<S> {
    rows: Vec<(usize, Vec<S>)>,
    tol: f64,
}

impl<S: Scalar> EchelonSpan<S> {
    pub fn new(tol: f64) -> Self {
        EchelonSpan { rows: Vec::new(), tol }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[S]) -> Vec<S> {
        let mut w = v.to_vec();
        for (p, row) in &self.rows {
            if !w[*p].is_zero() {
                let f = w[*p].clone();
                for (a, b) in w.iter_mut().zip(row) {
                    *a = a.clone() - f.clone() * b.clone();
                }
            }
        }
        w
    }

    fn negligible(&self, x: &S, scale: f64) -> bool {
        match S::MODE {
            crate::ScalarMode::Rational => x.is_zero(),
            crate::ScalarMode::Float => libm::fabs(x.to_f64()) <= self.tol * scale.max(f64::MIN_POSITIVE),
        }
    }

    /// Add `v` if it is independent of the current span; returns whether it was added.
    pub fn insert(&mut self, v: &[S]) -> bool {
        let scale = v.iter().map(|x| libm::fabs(x.to_f64())).fold(0.0, f64::max);
        let mut w = self.reduce(v);
        let Some(p) = (0..w.len())
            .filter(|&i| !self.negligible(&w[i], scale))
            .max_by(|&i, &j| {
                // Floats pivot on the largest entry; rationals on the earliest.
                match S::MODE {
                    crate::ScalarMode::Rational => j.cmp(&i),
                    crate::ScalarMode::Float => libm::fabs(w[i].to_f64()).total_cmp(&libm::fabs(w[j].to_f64())),
                }
            })
        else {
            return false;
        };
        let inv = S::one() / w[p].clone();
        for x in w.iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for (_, row) in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let f = row[p].clone();
                for (a, b) in row.iter_mut().zip(&w) {
                    *a = a.clone() - f.clone() * b.clone();
                }
            }
        }
        self.rows.push((p, w));
        true
    }

    pub fn contains(&self, v: &[S]) -> bool {
        let scale = v.iter().map(|x| libm::fabs(x.to_f64())).fold(0.0, f64::max);
        self.reduce(v).iter().all(|x| self.negligible(x, scale.max(1.0)))
    }
}
