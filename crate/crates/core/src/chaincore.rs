//! Finite-dimensional graded cochain complexes and their cohomology.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::forms::FormLayout;
use crate::linalg::{self, EchelonSpan, RankInfo};
use crate::matrix::DenseMatrix;
use crate::scalar::{Scalar, ScalarMode, DEFAULT_TOLERANCE};

/// Field-specific linear algebra used by cohomology.
pub trait LinAlg: Scalar {
    fn rank_info(m: &DenseMatrix<Self>, tol: f64) -> RankInfo;

    fn kernel(m: &DenseMatrix<Self>, tol: f64) -> Vec<Vec<Self>>;

    /// Cocycles in degree k spanning a complement of `im d_{k-1}` inside
    /// `ker d_k`. `d_k` is `None` in the top degree.
    fn representatives(
        dim: usize,
        d_k: Option<&DenseMatrix<Self>>,
        d_prev: Option<&DenseMatrix<Self>>,
        tol: f64,
    ) -> Vec<Vec<Self>>;
}

impl LinAlg for BigRational {
    fn rank_info(m: &DenseMatrix<Self>, _tol: f64) -> RankInfo {
        RankInfo {
            rank: linalg::rank_exact(m),
            sigma_max: m.max_abs(),
            sigma_min_kept: None,
            sigma_max_dropped: None,
            unstable: false,
        }
    }

    fn kernel(m: &DenseMatrix<Self>, _tol: f64) -> Vec<Vec<Self>> {
        linalg::nullspace_exact(m)
    }

    fn representatives(
        dim: usize,
        d_k: Option<&DenseMatrix<Self>>,
        d_prev: Option<&DenseMatrix<Self>>,
        _tol: f64,
    ) -> Vec<Vec<Self>> {
        let mut span = EchelonSpan::new(0.0);
        if let Some(dp) = d_prev {
            for j in 0..dp.cols() {
                span.insert(&dp.column(j));
            }
        }
        let kernel = match d_k {
            Some(d) => linalg::nullspace_exact(d),
            None => identity_vectors(dim),
        };
        kernel.into_iter().filter(|v| span.insert(v)).collect()
    }
}

impl LinAlg for f64 {
    fn rank_info(m: &DenseMatrix<Self>, tol: f64) -> RankInfo {
        linalg::rank_float(m, tol)
    }

    fn kernel(m: &DenseMatrix<Self>, tol: f64) -> Vec<Vec<Self>> {
        linalg::nullspace_float(m, tol)
    }

    /// Harmonic representatives: the kernel of `d_k` stacked on `d_{k-1}^T`.
    fn representatives(
        dim: usize,
        d_k: Option<&DenseMatrix<Self>>,
        d_prev: Option<&DenseMatrix<Self>>,
        tol: f64,
    ) -> Vec<Vec<Self>> {
        let stacked = match (d_k, d_prev) {
            (Some(d), Some(p)) => {
                // Balance the two blocks so one threshold serves both.
                let (sd, sp) = (d.max_abs().max(1e-300), p.max_abs().max(1e-300));
                d.scale(&(1.0 / sd)).vstack(&p.transpose().scale(&(1.0 / sp)))
            }
            (Some(d), None) => d.clone(),
            (None, Some(p)) => p.transpose(),
            (None, None) => return identity_vectors(dim),
        };
        linalg::nullspace_float(&stacked, tol)
    }
}

fn identity_vectors<S: Scalar>(n: usize) -> Vec<Vec<S>> {
    (0..n)
        .map(|i| {
            let mut v = vec![S::zero(); n];
            v[i] = S::one();
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ComplexMeta {
    pub model: String,
    pub truncation: Option<u32>,
}

/// A bounded cochain complex `C^0 -> C^1 -> ... -> C^top` over one field.
#[derive(Debug, Clone)]
pub struct Complex<S> {
    labels: Vec<Vec<String>>,
    differentials: Vec<DenseMatrix<S>>,
    pub meta: ComplexMeta,
    layout: Option<FormLayout<S>>,
}

impl<S: LinAlg> Complex<S> {
    /// `differentials[k]` maps degree k to degree k+1 (rows index degree
    /// k+1). There is one fewer differential than degrees.
    pub fn new(labels: Vec<Vec<String>>, differentials: Vec<DenseMatrix<S>>, meta: ComplexMeta) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::ShapeMismatch("complex has no degrees".into()));
        }
        if differentials.len() + 1 != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} degrees need {} differentials, got {}",
                labels.len(),
                labels.len() - 1,
                differentials.len()
            )));
        }
        for (k, d) in differentials.iter().enumerate() {
            if d.cols() != labels[k].len() || d.rows() != labels[k + 1].len() {
                return Err(Error::ShapeMismatch(format!(
                    "d_{k} is {}x{}, expected {}x{}",
                    d.rows(),
                    d.cols(),
                    labels[k + 1].len(),
                    labels[k].len()
                )));
            }
        }
        Ok(Complex { labels, differentials, meta, layout: None })
    }

    pub(crate) fn with_layout(mut self, layout: FormLayout<S>) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn layout(&self) -> Option<&FormLayout<S>> {
        self.layout.as_ref()
    }

    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn dims(&self) -> Vec<usize> {
        self.labels.iter().map(Vec::len).collect()
    }

    pub fn top_degree(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn differential(&self, k: usize) -> Option<&DenseMatrix<S>> {
        self.differentials.get(k)
    }

    pub fn differentials(&self) -> &[DenseMatrix<S>] {
        &self.differentials
    }

    /// Same complex with `differentials` replaced; shapes must match.
    pub fn replace_differentials(&self, differentials: Vec<DenseMatrix<S>>) -> Result<Self> {
        let mut c = Complex::new(self.labels.clone(), differentials, self.meta.clone())?;
        c.layout = self.layout.clone();
        Ok(c)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut residuals = Vec::new();
        let mut passed = true;
        for k in 0..self.differentials.len().saturating_sub(1) {
            let (d0, d1) = (&self.differentials[k], &self.differentials[k + 1]);
            let prod = d1.mul(d0);
            let residual = prod.frobenius();
            let ok = match S::MODE {
                ScalarMode::Rational => prod.is_zero(),
                ScalarMode::Float => residual < 1e-12 * (d0.frobenius() * d1.frobenius()).max(1.0),
            };
            passed &= ok;
            residuals.push(residual);
        }
        ValidationReport { residuals, passed, mode: S::MODE }
    }

    pub fn cohomology(&self, opts: &CohomologyOptions) -> Result<CohomologyReport> {
        let v = self.validate();
        if !v.passed {
            let (degree, residual) = v
                .residuals
                .iter()
                .copied()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((0, 0.0));
            return Err(Error::NotValidated { degree, residual });
        }
        let tol = opts.tolerance;
        let ranks: Vec<RankInfo> = self.differentials.iter().map(|d| S::rank_info(d, tol)).collect();
        let top = self.top_degree();
        let mut betti = Vec::with_capacity(top + 1);
        let mut representatives = Vec::with_capacity(top + 1);
        let mut exact = Vec::new();
        let mut unstable = Vec::with_capacity(top + 1);
        for k in 0..=top {
            let dim = self.labels[k].len();
            let rank_out = if k < top { ranks[k].rank } else { 0 };
            let rank_in = if k > 0 { ranks[k - 1].rank } else { 0 };
            let b = (dim - rank_out).checked_sub(rank_in).ok_or_else(|| {
                Error::NotValidated { degree: k, residual: f64::NAN }
            })?;
            betti.push(b);
            let reps = S::representatives(
                dim,
                self.differentials.get(k).filter(|_| k < top),
                if k > 0 { self.differentials.get(k - 1) } else { None },
                tol,
            );
            let flag = (k < top && ranks[k].unstable) || (k > 0 && ranks[k - 1].unstable) || reps.len() != b;
            unstable.push(flag);
            representatives.push(reps.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect());
            if S::MODE == ScalarMode::Rational {
                exact.push(reps.iter().map(|v| v.iter().map(Scalar::to_rational).collect()).collect());
            }
        }
        Ok(CohomologyReport {
            betti,
            representatives,
            exact_representatives: (S::MODE == ScalarMode::Rational).then_some(exact),
            tolerance_used: tol,
            mode: S::MODE,
            tol_unstable: unstable,
            stabilized: None,
        })
    }

    /// Conjugate every differential by the given basis permutations, one per degree.
    pub fn permuted(&self, perms: &[Vec<usize>]) -> Result<Self> {
        assert_eq!(perms.len(), self.labels.len());
        let labels = self
            .labels
            .iter()
            .zip(perms)
            .map(|(ls, p)| {
                let mut out = vec![String::new(); ls.len()];
                for (i, l) in ls.iter().enumerate() {
                    out[p[i]] = l.clone();
                }
                out
            })
            .collect();
        let diffs = self
            .differentials
            .iter()
            .enumerate()
            .map(|(k, d)| d.permuted(&perms[k + 1], &perms[k]))
            .collect();
        Complex::new(labels, diffs, self.meta.clone())
    }
}

/// A complex in either scalar mode.
#[derive(Debug, Clone)]
pub enum GradedComplex {
    Exact(Complex<BigRational>),
    Float(Complex<f64>),
}

macro_rules! dispatch {
    ($self:expr, $c:ident => $body:expr) => {
        match $self {
            GradedComplex::Exact($c) => $body,
            GradedComplex::Float($c) => $body,
        }
    };
}

impl GradedComplex {
    pub fn mode(&self) -> ScalarMode {
        match self {
            GradedComplex::Exact(_) => ScalarMode::Rational,
            GradedComplex::Float(_) => ScalarMode::Float,
        }
    }

    pub fn labels(&self) -> &[Vec<String>] {
        dispatch!(self, c => c.labels())
    }

    pub fn dims(&self) -> Vec<usize> {
        dispatch!(self, c => c.dims())
    }

    pub fn top_degree(&self) -> usize {
        dispatch!(self, c => c.top_degree())
    }

    pub fn meta(&self) -> &ComplexMeta {
        dispatch!(self, c => &c.meta)
    }

    pub fn validate(&self) -> ValidationReport {
        dispatch!(self, c => c.validate())
    }

    pub fn cohomology(&self, opts: &CohomologyOptions) -> Result<CohomologyReport> {
        dispatch!(self, c => c.cohomology(opts))
    }

    /// Float image of differential `k`.
    pub fn differential_f64(&self, k: usize) -> Option<DenseMatrix<f64>> {
        dispatch!(self, c => c.differential(k).map(DenseMatrix::to_f64))
    }

    /// The form layout, converted to floats.
    pub fn float_layout(&self) -> Option<FormLayout<f64>> {
        match self {
            GradedComplex::Exact(c) => c.layout().map(FormLayout::to_f64),
            GradedComplex::Float(c) => c.layout().cloned(),
        }
    }

    /// Same complex in float mode.
    pub fn to_float(&self) -> GradedComplex {
        match self {
            GradedComplex::Float(_) => self.clone(),
            GradedComplex::Exact(c) => {
                let diffs = c.differentials().iter().map(DenseMatrix::to_f64).collect();
                let mut f = Complex::new(c.labels().to_vec(), diffs, c.meta.clone()).expect("shapes preserved");
                f.layout = c.layout().map(FormLayout::to_f64);
                GradedComplex::Float(f)
            }
        }
    }

    /// Same complex in rational mode; float entries map to their exact
    /// dyadic values.
    pub fn to_rational(&self) -> GradedComplex {
        match self {
            GradedComplex::Exact(_) => self.clone(),
            GradedComplex::Float(c) => {
                let diffs = c.differentials().iter().map(DenseMatrix::to_rational).collect();
                let mut e = Complex::new(c.labels().to_vec(), diffs, c.meta.clone()).expect("shapes preserved");
                e.layout = c.layout().map(FormLayout::to_rational);
                GradedComplex::Exact(e)
            }
        }
    }
}

/// Per-degree `d_{k+1} d_k` residuals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValidationReport {
    /// `residuals[k]` is the Frobenius norm of `d_{k+1} d_k`.
    pub residuals: Vec<f64>,
    pub passed: bool,
    pub mode: ScalarMode,
}

/// Validate a complex given as raw differential matrices.
pub fn validate_complex(c: &GradedComplex) -> ValidationReport {
    c.validate()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohomologyOptions {
    pub tolerance: f64,
}

impl Default for CohomologyOptions {
    fn default() -> Self {
        CohomologyOptions { tolerance: DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyReport {
    pub betti: Vec<usize>,
    /// Float images of the representative cocycles, per degree.
    pub representatives: Vec<Vec<Vec<f64>>>,
    /// Exact representatives in rational mode.
    pub exact_representatives: Option<Vec<Vec<Vec<BigRational>>>>,
    pub tolerance_used: f64,
    pub mode: ScalarMode,
    /// Some singular value sat within a factor 10 of the threshold.
    pub tol_unstable: Vec<bool>,
    pub stabilized: Option<Vec<bool>>,
}

impl CohomologyReport {
    pub fn any_unstable(&self) -> bool {
        self.tol_unstable.iter().any(|&u| u)
    }
}

pub fn cohomology(c: &GradedComplex, opts: &CohomologyOptions) -> Result<CohomologyReport> {
    c.cohomology(opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Growth {
    Stable,
    Growing,
    Irregular,
}

impl Growth {
    pub fn as_str(self) -> &'static str {
        match self {
            Growth::Stable => "STABLE",
            Growth::Growing => "GROWING",
            Growth::Irregular => "IRREGULAR",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DegreeStability {
    pub degree: usize,
    pub betti: Vec<usize>,
    pub class: Growth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub truncations: Vec<u32>,
    pub degrees: Vec<DegreeStability>,
    pub reports: Vec<CohomologyReport>,
}

impl StabilityReport {
    pub fn class(&self, degree: usize) -> Option<Growth> {
        self.degrees.iter().find(|d| d.degree == degree).map(|d| d.class)
    }

    pub fn stable_degrees(&self) -> Vec<bool> {
        self.degrees.iter().map(|d| d.class == Growth::Stable).collect()
    }
}

/// Cohomology over an ascending list of truncations, classifying each
/// degree as stable or growing.
pub fn truncation_sweep<F>(builder: F, truncations: &[u32], opts: &CohomologyOptions) -> Result<StabilityReport>
where
    F: Fn(u32) -> Result<GradedComplex>,
{
    if truncations.len() < 3 {
        return Err(Error::InvalidSweep(format!("need at least 3 truncations, got {}", truncations.len())));
    }
    if truncations.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSweep("truncations must be strictly ascending".into()));
    }
    let reports = truncations
        .iter()
        .map(|&n| builder(n).and_then(|c| c.cohomology(opts)))
        .collect::<Result<Vec<_>>>()?;
    let top = reports.iter().map(|r| r.betti.len()).max().unwrap_or(0);
    let degrees: Vec<DegreeStability> = (0..top)
        .map(|k| {
            let seq: Vec<usize> = reports.iter().map(|r| r.betti.get(k).copied().unwrap_or(0)).collect();
            let n = seq.len();
            let class = if seq.windows(2).all(|w| w[0] < w[1]) {
                Growth::Growing
            } else if seq[n - 1] == seq[n - 2] {
                Growth::Stable
            } else {
                Growth::Irregular
            };
            DegreeStability { degree: k, betti: seq, class }
        })
        .collect();
    let stable: Vec<bool> = degrees.iter().map(|d| d.class == Growth::Stable).collect();
    let reports = reports
        .into_iter()
        .map(|mut r| {
            r.stabilized = Some(stable.clone());
            r
        })
        .collect();
    Ok(StabilityReport { truncations: truncations.to_vec(), degrees, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_int(n)
    }

    fn labels(dims: &[usize]) -> Vec<Vec<String>> {
        dims.iter().enumerate().map(|(k, &n)| (0..n).map(|i| format!("e{k}_{i}")).collect()).collect()
    }

    #[test]
    fn point_complex() {
        let c = Complex::<BigRational>::new(labels(&[1]), vec![], ComplexMeta::default()).unwrap();
        let r = c.cohomology(&CohomologyOptions::default()).unwrap();
        assert_eq!(r.betti, vec![1]);
    }

    #[test]
    fn zero_complex_passes() {
        let c = Complex::<BigRational>::new(
            labels(&[2, 3, 1]),
            vec![DenseMatrix::zeros(3, 2), DenseMatrix::zeros(1, 3)],
            ComplexMeta::default(),
        )
        .unwrap();
        let v = c.validate();
        assert!(v.passed);
        assert_eq!(v.residuals, vec![0.0]);
        assert_eq!(c.cohomology(&CohomologyOptions::default()).unwrap().betti, vec![2, 3, 1]);
    }

    #[test]
    fn shape_mismatch() {
        let err = Complex::<f64>::new(labels(&[2, 3]), vec![DenseMatrix::zeros(2, 2)], ComplexMeta::default());
        assert!(matches!(err, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn circle_complex_and_representatives() {
        // Cellular circle: one vertex, one edge, zero boundary.
        let d = DenseMatrix::from_rows(vec![vec![q(1), q(-1)], vec![q(-1), q(1)]]);
        let c = Complex::new(labels(&[2, 2]), vec![d.clone()], ComplexMeta::default()).unwrap();
        let r = c.cohomology(&CohomologyOptions::default()).unwrap();
        assert_eq!(r.betti, vec![1, 1]);
        let exact = r.exact_representatives.unwrap();
        assert!(d.mul_vec(&exact[0][0]).iter().all(num_traits::Zero::is_zero));
        // Degree-1 representative is the earliest basis vector outside the image.
        assert_eq!(exact[1][0], vec![q(1), q(0)]);
    }

    #[test]
    fn non_complex_is_rejected() {
        let d0 = DenseMatrix::from_rows(vec![vec![q(1)]]);
        let d1 = DenseMatrix::from_rows(vec![vec![q(1)]]);
        let c = Complex::new(labels(&[1, 1, 1]), vec![d0, d1], ComplexMeta::default()).unwrap();
        assert!(!c.validate().passed);
        assert!(matches!(c.cohomology(&CohomologyOptions::default()), Err(Error::NotValidated { .. })));
    }

    #[test]
    fn sweep_requires_three_ascending() {
        let b = |_n: u32| -> Result<GradedComplex> { unreachable!() };
        assert!(truncation_sweep(b, &[1, 2], &CohomologyOptions::default()).is_err());
        assert!(truncation_sweep(b, &[1, 3, 2], &CohomologyOptions::default()).is_err());
    }

    #[test]
    fn float_harmonic_representatives_are_cocycles() {
        let d = DenseMatrix::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let c = Complex::new(labels(&[2, 2]), vec![d.clone()], ComplexMeta::default()).unwrap();
        let r = c.cohomology(&CohomologyOptions::default()).unwrap();
        assert_eq!(r.betti, vec![1, 1]);
        let v = &r.representatives[0][0];
        assert!(d.mul_vec(v).iter().all(|x| x.abs() < 1e-12));
        // Harmonic degree-1 class is orthogonal to the image (1,-1).
        let w = &r.representatives[1][0];
        assert!((w[0] - w[1]).abs() < 1e-12);
    }
}
