//! Twisted differentials `d_κ = d - κ∧`, gauge changes and the tautness
//! decision.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::chaincore::{Complex, ComplexMeta, CohomologyOptions, GradedComplex, LinAlg};
use crate::error::{Error, Result};
use crate::forms::{Factor, FormExpr, FormLayout, FormTerm, FunctionSpace, Overflow};
use crate::linalg;
use crate::matrix::DenseMatrix;
use crate::models::{self, FoliationModel, ModelKind, SphereVariant};
use crate::scalar::{Scalar, DEFAULT_TOLERANCE};

const CLOSED_TOLERANCE: f64 = 1e-10;

/// A basic 1-form given symbolically in model coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicOneForm {
    pub expr: FormExpr<f64>,
    pub label: String,
    /// `max |dκ|` in the host layout, once certified.
    pub closedness_residual: Option<f64>,
}

impl BasicOneForm {
    pub fn new(expr: FormExpr<f64>, label: &str) -> Self {
        BasicOneForm { expr, label: label.into(), closedness_residual: None }
    }

    pub fn zero() -> Self {
        Self::new(FormExpr::zero(), "0")
    }

    pub fn is_zero(&self) -> bool {
        self.expr.is_zero()
    }

    /// Coordinates in the degree-1 basis of `layout`.
    pub fn coefficients<S: LinAlg>(&self, layout: &FormLayout<S>) -> Result<Vec<S>> {
        layout.coefficients(&convert_expr(&self.expr)?, 1, Overflow::Fail)
    }

    /// Check `dκ = 0` in `layout` and record the residual.
    pub fn certify<S: LinAlg>(mut self, layout: &FormLayout<S>) -> Result<Self> {
        let residual = closedness::<S>(&self.expr, layout)?;
        self.closedness_residual = Some(residual);
        if residual > CLOSED_TOLERANCE {
            return Err(Error::NotClosed(residual));
        }
        Ok(self)
    }

    /// Same form on `base × ℝ_t`.
    pub fn pulled_back(&self) -> Self {
        BasicOneForm::new(self.expr.with_extra_variable(), &self.label)
    }
}

fn convert_expr<S: Scalar>(e: &FormExpr<f64>) -> Result<FormExpr<S>> {
    if e.terms.iter().flat_map(|t| &t.factors).any(|f| f.map(&|x: &f64| *x).evaluate(0.0).is_nan()) {
        return Err(Error::BadModel("non-finite coefficient in form".into()));
    }
    Ok(e.map(&|x: &f64| S::from_f64(*x).unwrap_or_else(S::zero)))
}

fn closedness<S: LinAlg>(expr: &FormExpr<f64>, layout: &FormLayout<S>) -> Result<f64> {
    let k = layout.coefficients(&convert_expr::<S>(expr)?, 1, Overflow::Fail)?;
    if layout.top_degree() < 2 {
        return Ok(0.0);
    }
    let d1 = layout.differential_matrix(1)?;
    Ok(d1.mul_vec(&k).iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max))
}

fn twist_generic<S: LinAlg>(c: &Complex<S>, kappa: &FormExpr<S>, policy: Overflow) -> Result<Complex<S>> {
    let layout = c
        .layout()
        .ok_or_else(|| Error::Unsupported("twisting needs a complex assembled from a form layout".into()))?;
    let diffs = c
        .differentials()
        .iter()
        .enumerate()
        .map(|(k, d)| Ok(d.sub(&layout.wedge_matrix(kappa, 1, k, policy)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut t = c.replace_differentials(diffs)?;
    t.meta = ComplexMeta { model: format!("{}/twisted", c.meta.model), truncation: c.meta.truncation };
    Ok(t)
}

pub(crate) fn twist_checked<S: LinAlg>(c: &Complex<S>, kappa: &BasicOneForm, policy: Overflow) -> Result<Complex<S>> {
    let layout = c.layout().ok_or_else(|| Error::Unsupported("twisting needs a form layout".into()))?;
    let residual = closedness::<S>(&kappa.expr, layout)?;
    if residual > CLOSED_TOLERANCE {
        return Err(Error::NotClosed(residual));
    }
    twist_generic(c, &convert_expr(&kappa.expr)?, policy)
}

pub(crate) fn twist_float(c: &Complex<f64>, kappa: &BasicOneForm) -> Result<Complex<f64>> {
    twist_checked(c, kappa, Overflow::Fail)
}

/// `D_k = d_k - κ∧` in the complex's own scalar field. Wedge products that
/// leave the truncated span are an error.
pub fn twist_complex(c: &GradedComplex, kappa: &BasicOneForm) -> Result<GradedComplex> {
    Ok(match c {
        GradedComplex::Exact(x) => GradedComplex::Exact(twist_checked(x, kappa, Overflow::Fail)?),
        GradedComplex::Float(x) => GradedComplex::Float(twist_checked(x, kappa, Overflow::Fail)?),
    })
}

/// A basic function given as one factor per transverse variable.
pub type BasicFunction = Vec<Factor<f64>>;

/// Result of comparing `H_κ` and `H_{κ+df}` through `ω ↦ e^f ω`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GaugeRecord {
    pub betti_before: Vec<usize>,
    pub betti_after: Vec<usize>,
    /// Largest `|D_{κ+df}(e^f z)|` over the representative cocycles `z`.
    pub cocycle_residual: f64,
    /// Sup-norm error of the truncated Fourier expansion of `e^f`.
    pub exp_residual: f64,
    pub passed: bool,
}

pub const GAUGE_COCYCLE_TOLERANCE: f64 = 1e-8;
const EXP_TOLERANCE: f64 = 1e-9;
const EXP_GRID: usize = 512;

/// Truncated Fourier expansion of `e^f` for `f` a function of the single
/// circle variable of `layout`.
fn exp_series(layout: &FormLayout<f64>, f: &BasicFunction) -> Result<(Vec<Factor<f64>>, f64)> {
    let mut out = Vec::new();
    let mut residual: f64 = 0.0;
    for (v, factor) in f.iter().enumerate() {
        let order = layout
            .degrees[0]
            .first()
            .and_then(|b| match b.spaces.get(v) {
                Some(FunctionSpace::Trig { order }) => Some(*order as usize),
                _ => None,
            });
        match (factor, order) {
            (Factor::Const(a), _) => out.push(Factor::Const(libm::exp(*a))),
            (Factor::Trig(_), Some(order)) => {
                let g = EXP_GRID as f64;
                let mut c = vec![0.0; 2 * order + 1];
                for i in 0..EXP_GRID {
                    let x = core::f64::consts::TAU * i as f64 / g;
                    let e = libm::exp(factor.evaluate(x));
                    c[0] += e / g;
                    for m in 1..=order {
                        c[2 * m - 1] += 2.0 * e * libm::cos(m as f64 * x) / g;
                        c[2 * m] += 2.0 * e * libm::sin(m as f64 * x) / g;
                    }
                }
                let series = Factor::Trig(c);
                for i in 0..EXP_GRID {
                    let x = core::f64::consts::TAU * (i as f64 + 0.5) / g;
                    residual = residual.max((libm::exp(factor.evaluate(x)) - series.evaluate(x)).abs());
                }
                out.push(series);
            }
            _ => return Err(Error::Unsupported("gauge functions must be trigonometric in circle variables".into())),
        }
    }
    Ok((out, residual))
}

/// Check that `ω ↦ e^f ω` identifies `H_κ` with `H_{κ+df}`. Runs in float
/// mode; wedge products with `κ + df` and `e^f` are Galerkin-projected onto
/// the truncation, so the identification holds up to truncation error.
pub fn gauge_transform(c: &GradedComplex, kappa: &BasicOneForm, f: &BasicFunction) -> Result<GaugeRecord> {
    let GradedComplex::Float(fc) = c.to_float() else { unreachable!() };
    let layout = fc.layout().ok_or_else(|| Error::Unsupported("gauge needs a form layout".into()))?.clone();
    if f.len() != layout.variables.len() {
        return Err(Error::ShapeMismatch(format!(
            "gauge function has {} factors, layout has {} variables",
            f.len(),
            layout.variables.len()
        )));
    }
    let (exp_f, exp_residual) = exp_series(&layout, f)?;
    if exp_residual > EXP_TOLERANCE {
        return Err(Error::ExpOverflow(exp_residual));
    }
    let f_expr = FormExpr { terms: vec![FormTerm { factors: f.clone(), monomial: layout.algebra.one() }] };
    let kappa2 = kappa.expr.clone().plus(layout.d_expr(&f_expr)?);
    let opts = CohomologyOptions::default();
    let before = twist_checked(&fc, kappa, Overflow::Project)?;
    let after = twist_generic(&fc, &kappa2, Overflow::Project)?;
    let rb = before.cohomology(&opts)?;
    let ra = after.cohomology(&opts)?;
    let exp_expr = FormExpr { terms: vec![FormTerm { factors: exp_f, monomial: layout.algebra.one() }] };
    let mut cocycle_residual: f64 = 0.0;
    for (k, reps) in rb.representatives.iter().enumerate() {
        let Some(d) = after.differential(k) else { continue };
        let mult = layout.wedge_matrix(&exp_expr, 0, k, Overflow::Project)?;
        for z in reps {
            let image = d.mul_vec(&mult.mul_vec(z));
            let norm = image.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            cocycle_residual = cocycle_residual.max(norm);
        }
    }
    let passed = rb.betti == ra.betti && cocycle_residual < GAUGE_COCYCLE_TOLERANCE;
    Ok(GaugeRecord { betti_before: rb.betti, betti_after: ra.betti, cocycle_residual, exp_residual, passed })
}

/// Outcome of the exactness test for the tautness class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum ClassTest {
    Vanishes,
    NonZero,
    Inconclusive,
}

impl ClassTest {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassTest::Vanishes => "VANISHES",
            ClassTest::NonZero => "NONZERO",
            ClassTest::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TautnessVerdict {
    pub taut: bool,
    /// Whether `κ_b = df` is solvable in the truncation.
    pub t1: ClassTest,
    pub t1_residual: f64,
    /// `dim H⁰_κ`.
    pub t2: usize,
    /// `dim H^n_c`, when a compact-support model exists.
    pub t3: Option<usize>,
    pub codim: usize,
    pub kappa: String,
    /// All evaluated criteria agree.
    pub consistency: bool,
}

/// Least-squares solve of `d⁰f = κ`.
fn exactness_test(c: &Complex<f64>, kappa: &[f64]) -> (ClassTest, f64) {
    let Some(d0) = c.differential(0) else { return (ClassTest::NonZero, f64::INFINITY) };
    let (_, residual) = linalg::least_squares(d0, kappa, DEFAULT_TOLERANCE);
    let scale = kappa.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let r = residual / scale;
    let t = if r < DEFAULT_TOLERANCE {
        ClassTest::Vanishes
    } else if r < 10.0 * DEFAULT_TOLERANCE {
        ClassTest::Inconclusive
    } else {
        ClassTest::NonZero
    };
    (t, r)
}

fn float_complex(c: GradedComplex) -> Complex<f64> {
    match c.to_float() {
        GradedComplex::Float(f) => f,
        GradedComplex::Exact(_) => unreachable!(),
    }
}

/// Evaluate the three tautness criteria on a catalogue model.
pub fn decide_taut(m: &FoliationModel) -> Result<TautnessVerdict> {
    m.validate()?;
    let opts = CohomologyOptions::default();
    let basic = models::build_basic_complex(m)?;
    let (kappa, compact) = match &m.kind {
        ModelKind::ProductCerf { base, .. } => {
            (models::tautness_one_form(base)?.pulled_back(), models::build_compact_complex(m)?)
        }
        ModelKind::SphereIsometricFlow { .. } => {
            (models::tautness_one_form(m)?, models::build_sphere_complex(m, SphereVariant::CompactRegular)?)
        }
        _ => (models::tautness_one_form(m)?, basic.clone()),
    };
    let n = m.codim();
    let twisted = twist_complex(&basic, &kappa)?;
    let t2 = twisted.cohomology(&opts)?.betti[0];
    let fc = float_complex(basic);
    let k = kappa.coefficients(fc.layout().expect("model layout"))?;
    let (t1, t1_residual) = exactness_test(&fc, &k);
    let t3 = compact.cohomology(&opts)?.betti.get(n).copied();
    let taut = t2 == 1;
    let mut consistency = match t1 {
        ClassTest::Vanishes => taut,
        ClassTest::NonZero => !taut,
        ClassTest::Inconclusive => true,
    };
    if let Some(t3) = t3 {
        consistency &= (t3 != 0) == taut;
    }
    Ok(TautnessVerdict { taut, t1, t1_residual, t2, t3, codim: n, kappa: kappa.label.clone(), consistency })
}

/// Multiplication by a basic function as a matrix on degree `k`.
pub fn multiplication_matrix(layout: &FormLayout<f64>, f: &BasicFunction, k: usize) -> Result<DenseMatrix<f64>> {
    let e = FormExpr { terms: vec![FormTerm { factors: f.clone(), monomial: layout.algebra.one() }] };
    layout.wedge_matrix(&e, 0, k, Overflow::Project)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_basic_complex;

    const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

    fn betti(c: &GradedComplex) -> Vec<usize> {
        c.cohomology(&CohomologyOptions::default()).unwrap().betti
    }

    #[test]
    fn zero_twist_is_identity() {
        let c = build_basic_complex(&FoliationModel::sphere(1, vec![1, 2], 5)).unwrap();
        let t = twist_complex(&c, &BasicOneForm::zero()).unwrap();
        let (GradedComplex::Exact(a), GradedComplex::Exact(b)) = (&c, &t) else { panic!() };
        assert_eq!(a.differentials(), b.differentials());
    }

    #[test]
    fn carriere_twisted_betti() {
        let m = FoliationModel::carriere(CAT, 8);
        let c = build_basic_complex(&m).unwrap();
        let k = models::tautness_one_form(&m).unwrap();
        let t = twist_complex(&c, &k).unwrap();
        assert!(t.validate().passed);
        let b = betti(&t);
        assert_eq!(b[0], 0);
        assert_eq!(b[2], 1);
    }

    #[test]
    fn non_closed_twist_rejected() {
        // κ = cos θ·β on the Carrière complex has dκ = (-sin θ - c cos θ) dθ∧β.
        let m = FoliationModel::carriere(CAT, 3);
        let c = build_basic_complex(&m).unwrap();
        let GradedComplex::Float(fc) = &c else { panic!() };
        let alg = &fc.layout().unwrap().algebra;
        let k = BasicOneForm::new(FormExpr::term(vec![Factor::Trig(vec![0.0, 1.0])], alg.gen(1)), "cosθ β");
        assert!(matches!(twist_complex(&c, &k), Err(Error::NotClosed(_))));
    }

    #[test]
    fn overflowing_twist_fails_loudly() {
        let m = FoliationModel::ghys(2);
        let c = build_basic_complex(&m).unwrap();
        let GradedComplex::Exact(ec) = &c else { panic!() };
        let alg = &ec.layout().unwrap().algebra;
        let k = BasicOneForm::new(FormExpr::term(vec![Factor::Trig(vec![0.0, 1.0])], alg.gen(0)), "cos x dx");
        assert!(matches!(twist_complex(&c, &k), Err(Error::TruncationOverflow(_))));
    }

    #[test]
    fn gauge_preserves_betti() {
        let m = FoliationModel::carriere(CAT, 16);
        let c = build_basic_complex(&m).unwrap();
        let k = models::tautness_one_form(&m).unwrap();
        let r = gauge_transform(&c, &k, &vec![Factor::Trig(vec![0.0, 0.3])]).unwrap();
        assert!(r.passed, "{r:?}");
        let g = build_basic_complex(&FoliationModel::ghys(16)).unwrap();
        let r = gauge_transform(&g, &BasicOneForm::zero(), &vec![Factor::Trig(vec![0.0, 0.0, 1.0])]).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.betti_after[2], 33);
    }

    #[test]
    fn verdicts() {
        let k = decide_taut(&FoliationModel::kronecker(libm::sqrt(2.0), 8)).unwrap();
        assert!(k.taut && k.consistency);
        assert_eq!((k.t2, k.t3), (1, Some(1)));
        let c = decide_taut(&FoliationModel::carriere(CAT, 8)).unwrap();
        assert!(!c.taut && c.consistency);
        assert_eq!((c.t2, c.t3, c.t1), (0, Some(0), ClassTest::NonZero));
        let s = decide_taut(&FoliationModel::sphere(1, vec![1, 1], 6)).unwrap();
        assert!(s.taut && s.consistency);
        assert_eq!(s.t3, Some(1));
    }
}
