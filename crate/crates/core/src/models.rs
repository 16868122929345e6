//! The model foliations and their truncated basic complexes.
//!
//! Transverse circle coordinates use `θ = 2πt` so Fourier derivatives have
//! integer entries. Every complex is assembled from a [`FormLayout`].

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;

use crate::chaincore::{Complex, ComplexMeta, CohomologyOptions, GradedComplex, LinAlg};
use crate::error::{Error, Result};
use crate::forms::{
    Block, Domain, Factor, FormExpr, FormLayout, FrameAlgebra, FunctionSpace, Generator, SplineGrid, SplineSpace,
    Variable,
};
use crate::quadrature;
use crate::twisted::{self, BasicOneForm};

const TAU: f64 = core::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    CarriereFlow { a: [[i64; 2]; 2] },
    GhysFlow,
    KroneckerFlow { slope: f64 },
    SphereIsometricFlow { d: u32, weights: Vec<i64> },
    ProductCerf { base: Box<FoliationModel>, bump_count: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoliationModel {
    pub kind: ModelKind,
    /// Fourier order (or polynomial degree for the sphere model).
    pub truncation: u32,
}

/// Expanding eigenvalue of a hyperbolic matrix of SL₂(ℤ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda {
    pub value: f64,
    pub log: f64,
    pub trace: i64,
}

impl Lambda {
    pub fn from_matrix(a: [[i64; 2]; 2]) -> Result<Self> {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det != 1 {
            return Err(Error::BadModel(format!("matrix must have determinant 1, got {det}")));
        }
        let trace = a[0][0] + a[1][1];
        if trace.abs() <= 2 {
            return Err(Error::BadModel(format!("matrix must have |trace| > 2, got {trace}")));
        }
        let t = trace.abs() as f64;
        let value = (t + libm::sqrt(t * t - 4.0)) / 2.0;
        Ok(Lambda { value, log: libm::log(value), trace })
    }

    /// Residual of `x² - |tr| x + 1` at λ.
    pub fn polynomial_residual(&self) -> f64 {
        let t = self.trace.abs() as f64;
        (self.value * self.value - t * self.value + 1.0).abs()
    }

    /// Rate `logλ / 2π` in the θ coordinate.
    pub fn rate(&self) -> f64 {
        self.log / TAU
    }
}

impl FoliationModel {
    pub fn carriere(a: [[i64; 2]; 2], truncation: u32) -> Self {
        FoliationModel { kind: ModelKind::CarriereFlow { a }, truncation }
    }

    pub fn ghys(truncation: u32) -> Self {
        FoliationModel { kind: ModelKind::GhysFlow, truncation }
    }

    pub fn kronecker(slope: f64, truncation: u32) -> Self {
        FoliationModel { kind: ModelKind::KroneckerFlow { slope }, truncation }
    }

    pub fn sphere(d: u32, weights: Vec<i64>, truncation: u32) -> Self {
        FoliationModel { kind: ModelKind::SphereIsometricFlow { d, weights }, truncation }
    }

    pub fn product_cerf(base: FoliationModel, bump_count: u32) -> Self {
        let truncation = base.truncation;
        FoliationModel { kind: ModelKind::ProductCerf { base: Box::new(base), bump_count }, truncation }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::CarriereFlow { .. } => "CarriereFlow",
            ModelKind::GhysFlow => "GhysFlow",
            ModelKind::KroneckerFlow { .. } => "KroneckerFlow",
            ModelKind::SphereIsometricFlow { .. } => "SphereIsometricFlow",
            ModelKind::ProductCerf { .. } => "ProductCerf",
        }
    }

    /// Same model at another truncation (the base follows for products).
    pub fn with_truncation(&self, n: u32) -> Self {
        match &self.kind {
            ModelKind::ProductCerf { base, bump_count } => Self::product_cerf(base.with_truncation(n), *bump_count),
            kind => FoliationModel { kind: kind.clone(), truncation: n },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation < 1 {
            return Err(Error::UnsupportedTruncation(self.truncation));
        }
        match &self.kind {
            ModelKind::CarriereFlow { a } => Lambda::from_matrix(*a).map(|_| ()),
            ModelKind::GhysFlow => Ok(()),
            ModelKind::KroneckerFlow { slope } => {
                if !slope.is_finite() || *slope == 0.0 {
                    return Err(Error::BadModel(format!("Kronecker slope must be finite and nonzero, got {slope}")));
                }
                Ok(())
            }
            ModelKind::SphereIsometricFlow { d, weights } => {
                if *d < 1 {
                    return Err(Error::BadModel("sphere model needs d ≥ 1".into()));
                }
                if weights.len() != *d as usize + 1 {
                    return Err(Error::BadModel(format!("expected {} weights, got {}", d + 1, weights.len())));
                }
                if weights.iter().any(|&w| w == 0) {
                    return Err(Error::BadModel("sphere weights must all be nonzero".into()));
                }
                Ok(())
            }
            ModelKind::ProductCerf { base, bump_count } => {
                if *bump_count < 3 {
                    return Err(Error::BadModel(format!("bump_count must be at least 3, got {bump_count}")));
                }
                if !base.is_closed_type() {
                    return Err(Error::BadModel("ProductCerf base must be a closed flow model".into()));
                }
                base.validate()
            }
        }
    }

    fn is_closed_type(&self) -> bool {
        matches!(
            self.kind,
            ModelKind::CarriereFlow { .. } | ModelKind::GhysFlow | ModelKind::KroneckerFlow { .. }
        )
    }

    /// Codimension of the foliation.
    pub fn codim(&self) -> usize {
        match &self.kind {
            ModelKind::CarriereFlow { .. } | ModelKind::GhysFlow => 2,
            ModelKind::KroneckerFlow { .. } => 1,
            ModelKind::SphereIsometricFlow { d, .. } => 2 * *d as usize + 1,
            ModelKind::ProductCerf { base, .. } => base.codim() + 1,
        }
    }

    pub fn lambda(&self) -> Option<Lambda> {
        match &self.kind {
            ModelKind::CarriereFlow { a } => Lambda::from_matrix(*a).ok(),
            _ => None,
        }
    }

    fn meta(&self, suffix: &str) -> ComplexMeta {
        ComplexMeta { model: format!("{}{suffix}", self.name()), truncation: Some(self.truncation) }
    }
}

/// A layout in the scalar field its model requires.
#[derive(Debug, Clone)]
pub enum ModelLayout {
    Exact(FormLayout<BigRational>),
    Float(FormLayout<f64>),
}

impl ModelLayout {
    pub fn assemble(&self, meta: ComplexMeta) -> Result<GradedComplex> {
        Ok(match self {
            ModelLayout::Exact(l) => GradedComplex::Exact(l.assemble(meta)?),
            ModelLayout::Float(l) => GradedComplex::Float(l.assemble(meta)?),
        })
    }

    pub fn to_float(&self) -> FormLayout<f64> {
        match self {
            ModelLayout::Exact(l) => l.to_f64(),
            ModelLayout::Float(l) => l.clone(),
        }
    }
}

fn odd(name: &str) -> Generator {
    Generator { name: name.into(), degree: 1, cap: 1 }
}

fn circle(name: &str, differential: usize) -> Variable {
    Variable { name: name.into(), domain: Domain::Circle, differential }
}

/// Carrière layout with `dβ = -orientation · (logλ/2π) dθ∧β`.
pub fn carriere_layout(lambda: &Lambda, n: u32, orientation: f64) -> FormLayout<f64> {
    let mut algebra = FrameAlgebra::new(vec![odd("dθ"), odd("β")]);
    let vol = algebra.monomial(&[(0, 1), (1, 1)]);
    algebra.generator_d[1] = vec![(-orientation * lambda.rate(), vol.clone())];
    let trig = || vec![FunctionSpace::Trig { order: n }];
    let one = algebra.one();
    FormLayout {
        variables: vec![circle("θ", 0)],
        degrees: vec![
            vec![Block { spaces: trig(), monomial: one }],
            vec![
                Block { spaces: trig(), monomial: algebra.gen(0) },
                Block { spaces: trig(), monomial: algebra.gen(1) },
            ],
            vec![Block { spaces: trig(), monomial: vol.clone() }],
        ],
        volume: vol,
        algebra,
    }
}

pub fn ghys_layout<S: LinAlg>(n: u32) -> FormLayout<S> {
    let algebra = FrameAlgebra::new(vec![odd("dx"), odd("dy")]);
    let vol = algebra.monomial(&[(0, 1), (1, 1)]);
    let trig = || vec![FunctionSpace::Trig { order: n }];
    FormLayout {
        variables: vec![circle("x", 0)],
        degrees: vec![
            vec![Block { spaces: trig(), monomial: algebra.one() }],
            vec![Block { spaces: trig(), monomial: algebra.gen(0) }],
            vec![Block { spaces: trig(), monomial: vol.clone() }],
        ],
        volume: vol,
        algebra,
    }
}

/// Smallest surviving nonzero mode `(p, q)` of `e^{i(pθ₁ + qθ₂)}` with
/// `|p|, |q| ≤ n` and `p + q·slope = 0`.
pub fn kronecker_mode(slope: f64, n: u32) -> Option<(i64, i64)> {
    let n = n as i64;
    let mut best: Option<(i64, i64)> = None;
    for q in 1..=n {
        for p in -n..=n {
            if (p as f64 + q as f64 * slope).abs() < 1e-12 * (1.0 + q as f64) {
                if best.map_or(true, |(bp, bq)| p.abs().max(q) < bp.abs().max(bq)) {
                    best = Some((p, q));
                }
            }
        }
    }
    best
}

pub fn kronecker_layout<S: LinAlg>(slope: f64, n: u32) -> FormLayout<S> {
    match kronecker_mode(slope, n) {
        Some((p, q)) => {
            let n_eff = n / p.unsigned_abs().max(q.unsigned_abs()) as u32;
            let algebra = FrameAlgebra::new(vec![odd("dφ")]);
            let trig = || vec![FunctionSpace::Trig { order: n_eff }];
            FormLayout {
                variables: vec![circle("φ", 0)],
                degrees: vec![
                    vec![Block { spaces: trig(), monomial: algebra.one() }],
                    vec![Block { spaces: trig(), monomial: algebra.gen(0) }],
                ],
                volume: algebra.gen(0),
                algebra,
            }
        }
        None => {
            let algebra = FrameAlgebra::new(vec![odd("ν")]);
            FormLayout {
                variables: Vec::new(),
                degrees: vec![
                    vec![Block { spaces: Vec::new(), monomial: algebra.one() }],
                    vec![Block { spaces: Vec::new(), monomial: algebra.gen(0) }],
                ],
                volume: algebra.gen(0),
                algebra,
            }
        }
    }
}

/// Which part of the sphere model to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereVariant {
    /// The whole singular foliation: coefficients of `e^k`, `k ≥ 1`, vanish
    /// at the poles `r = ±1`.
    Whole,
    /// The regular stratum with no boundary condition.
    Regular,
    /// Compactly supported forms on the regular stratum.
    CompactRegular,
}

pub fn sphere_layout<S: LinAlg>(d: u32, n: u32, variant: SphereVariant) -> FormLayout<S> {
    let algebra = FrameAlgebra::new(vec![odd("dr"), Generator { name: "e".into(), degree: 2, cap: d as u8 }]);
    let mut degrees = Vec::new();
    for k in 0..=d as u8 {
        let even = match (variant, k) {
            (SphereVariant::Whole, 0) | (SphereVariant::Regular, _) => FunctionSpace::Poly { degree: n },
            _ => FunctionSpace::PolyVanishing { degree: n },
        };
        degrees.push(vec![Block { spaces: vec![even], monomial: algebra.monomial(&[(1, k)]) }]);
        degrees.push(vec![Block {
            spaces: vec![FunctionSpace::Poly { degree: n.saturating_sub(1) }],
            monomial: algebra.monomial(&[(0, 1), (1, k)]),
        }]);
    }
    FormLayout {
        variables: vec![Variable { name: "r".into(), domain: Domain::Interval, differential: 0 }],
        volume: algebra.monomial(&[(0, 1), (1, d as u8)]),
        degrees,
        algebra,
    }
}

/// Spline grid used by product models: `bump_count` compact cubic bumps on
/// the window `[-1, 1]`.
pub fn product_grid(bump_count: u32) -> SplineGrid {
    SplineGrid { intervals: bump_count + 3 }
}

/// `base × ℝ_t` on the open interval `(a, b)` of the window. Endpoints at
/// or beyond ±1 stand for the unbounded ends.
pub fn product_layout<S: LinAlg>(base: &FormLayout<S>, grid: SplineGrid, a: f64, b: f64, compact: bool) -> FormLayout<S> {
    let space = |deg: u8| {
        FunctionSpace::Spline(if compact {
            SplineSpace::compact(grid, deg, a, b)
        } else {
            SplineSpace::restricted(grid, deg, a, b)
        })
    };
    let mut gens = base.algebra.generators.clone();
    gens.push(odd("dt"));
    let extend = |m: &Vec<u8>, dt: u8| {
        let mut m = m.clone();
        m.push(dt);
        m
    };
    let algebra = FrameAlgebra {
        generators: gens,
        generator_d: base
            .algebra
            .generator_d
            .iter()
            .map(|terms| terms.iter().map(|(c, m)| (c.clone(), extend(m, 0))).collect())
            .chain(core::iter::once(Vec::new()))
            .collect(),
    };
    let mut variables = base.variables.clone();
    variables.push(Variable { name: "t".into(), domain: Domain::SplineWindow(grid), differential: algebra.generators.len() - 1 });
    let top = base.top_degree() + 1;
    let degrees = (0..=top)
        .map(|k| {
            let mut blocks = Vec::new();
            if k < top {
                for bl in &base.degrees[k] {
                    let mut spaces = bl.spaces.clone();
                    spaces.push(space(3));
                    blocks.push(Block { spaces, monomial: extend(&bl.monomial, 0) });
                }
            }
            if k > 0 {
                for bl in &base.degrees[k - 1] {
                    let mut spaces = bl.spaces.clone();
                    spaces.push(space(2));
                    blocks.push(Block { spaces, monomial: extend(&bl.monomial, 1) });
                }
            }
            blocks
        })
        .collect();
    FormLayout { volume: extend(&base.volume, 1), variables, degrees, algebra }
}

/// Layout of the untwisted basic complex.
pub fn model_layout(m: &FoliationModel) -> Result<ModelLayout> {
    m.validate()?;
    let n = m.truncation;
    Ok(match &m.kind {
        ModelKind::CarriereFlow { a } => ModelLayout::Float(carriere_layout(&Lambda::from_matrix(*a)?, n, 1.0)),
        ModelKind::GhysFlow => ModelLayout::Exact(ghys_layout(n)),
        ModelKind::KroneckerFlow { slope } => ModelLayout::Exact(kronecker_layout(*slope, n)),
        ModelKind::SphereIsometricFlow { d, .. } => ModelLayout::Exact(sphere_layout(*d, n, SphereVariant::Whole)),
        ModelKind::ProductCerf { base, bump_count } => {
            product_model_layout(base, *bump_count, -1.0, 1.0, false)?
        }
    })
}

/// Product layout over an interval of the window in the base's scalar field.
pub fn product_model_layout(base: &FoliationModel, bump_count: u32, a: f64, b: f64, compact: bool) -> Result<ModelLayout> {
    let grid = product_grid(bump_count);
    Ok(match model_layout(base)? {
        ModelLayout::Exact(l) => ModelLayout::Exact(product_layout(&l, grid, a, b, compact)),
        ModelLayout::Float(l) => ModelLayout::Float(product_layout(&l, grid, a, b, compact)),
    })
}

/// Truncated complex of basic forms.
pub fn build_basic_complex(m: &FoliationModel) -> Result<GradedComplex> {
    model_layout(m)?.assemble(m.meta(""))
}

/// Compactly supported basic forms of a product model.
pub fn build_compact_complex(m: &FoliationModel) -> Result<GradedComplex> {
    m.validate()?;
    let ModelKind::ProductCerf { base, bump_count } = &m.kind else {
        return Err(Error::BadModel(format!("{} has no compact-support model; use ProductCerf", m.name())));
    };
    product_model_layout(base, *bump_count, -1.0, 1.0, true)?.assemble(m.meta("/compact"))
}

/// One of the three sphere complexes.
pub fn build_sphere_complex(m: &FoliationModel, variant: SphereVariant) -> Result<GradedComplex> {
    m.validate()?;
    let ModelKind::SphereIsometricFlow { d, .. } = &m.kind else {
        return Err(Error::BadModel(format!("{} is not a sphere model", m.name())));
    };
    let suffix = match variant {
        SphereVariant::Whole => "",
        SphereVariant::Regular => "/regular",
        SphereVariant::CompactRegular => "/regular-compact",
    };
    let layout: FormLayout<BigRational> = sphere_layout(*d, m.truncation, variant);
    Ok(GradedComplex::Exact(layout.assemble(m.meta(suffix))?))
}

/// Carrière complex with an explicit orientation of β (`+1` is the
/// coordinate computation `d(λ^{-t} ds) = -logλ dt∧λ^{-t} ds`).
pub fn build_carriere_variant(m: &FoliationModel, orientation: f64) -> Result<Complex<f64>> {
    let lambda = m.lambda().ok_or_else(|| Error::BadModel("not a Carrière model".into()))?;
    m.validate()?;
    carriere_layout(&lambda, m.truncation, orientation).assemble(m.meta(""))
}

/// Outcome of the Carrière sign oracle.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SignOracle {
    /// Chosen `s` in `κ = s·logλ·dt`.
    pub sign: f64,
    /// Twisted betti numbers for `s = +1` and `s = -1`.
    pub betti_plus: Vec<usize>,
    pub betti_minus: Vec<usize>,
    pub untwisted_betti: Vec<usize>,
}

/// Sweep `κ = ±logλ dt` on the Carrière complex of the given orientation and
/// keep the sign whose twisted top cohomology is one-dimensional.
pub fn carriere_sign_oracle(m: &FoliationModel, orientation: f64) -> Result<SignOracle> {
    let lambda = m.lambda().ok_or_else(|| Error::BadModel("not a Carrière model".into()))?;
    let c = build_carriere_variant(m, orientation)?;
    let opts = CohomologyOptions::default();
    let untwisted = c.cohomology(&opts)?.betti;
    let layout = c.layout().expect("assembled from a layout");
    let mut betti = Vec::new();
    for s in [1.0, -1.0] {
        let kappa = FormExpr::term(vec![Factor::Const(s * lambda.rate())], layout.algebra.gen(0));
        let form = BasicOneForm::new(kappa, "κ");
        let t = twisted::twist_float(&c, &form)?;
        betti.push(t.cohomology(&opts)?.betti);
    }
    let top = |b: &Vec<usize>| b.last().copied().unwrap_or(0);
    let sign = match (top(&betti[0]), top(&betti[1])) {
        (1, b) if b != 1 => 1.0,
        (a, 1) if a != 1 => -1.0,
        _ => return Err(Error::BadModel("sign oracle found no unique tautness sign".into())),
    };
    Ok(SignOracle { sign, betti_plus: betti[0].clone(), betti_minus: betti[1].clone(), untwisted_betti: untwisted })
}

/// Closed basic 1-form representing the tautness class.
pub fn tautness_one_form(m: &FoliationModel) -> Result<BasicOneForm> {
    m.validate()?;
    let layout = model_layout(m)?.to_float();
    let zero = || BasicOneForm::new(FormExpr::zero(), "0");
    let form = match &m.kind {
        ModelKind::CarriereFlow { .. } => {
            let lambda = m.lambda().expect("validated");
            // The oracle is run once at a small truncation; the sign does not
            // depend on N.
            let oracle = carriere_sign_oracle(&m.with_truncation(2), 1.0)?;
            let kappa = FormExpr::term(vec![Factor::Const(oracle.sign * lambda.rate())], layout.algebra.gen(0));
            let label = if oracle.sign > 0.0 { "logλ·dt" } else { "-logλ·dt" };
            BasicOneForm::new(kappa, label)
        }
        ModelKind::GhysFlow | ModelKind::KroneckerFlow { .. } | ModelKind::SphereIsometricFlow { .. } => zero(),
        ModelKind::ProductCerf { .. } => {
            return Err(Error::Unsupported("ProductCerf inherits κ from its base".into()));
        }
    };
    form.certify(&layout)
}

/// A period-1 trigonometric polynomial in `t`, coefficients ordered
/// `1, cos 2πt, sin 2πt, cos 4πt, sin 4πt, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub coeffs: Vec<f64>,
}

impl TrigSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        TrigSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() / 2
    }

    fn factor(&self) -> Factor<f64> {
        Factor::Trig(self.coeffs.clone())
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.factor().evaluate(TAU * t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        TAU * self.factor().derivative().map(|f| f.evaluate(TAU * t)).unwrap_or(0.0)
    }
}

/// Periodic solution of `g' + g·logλ = h`.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierePrimitive {
    pub lambda: f64,
    /// Integration constant `c = g(0)`.
    pub c: f64,
    /// Values of `g` at `t = i/grid`, `i = 0..=grid`, from the integral formula.
    pub samples: Vec<f64>,
    /// Fourier coefficients of `g` recovered from the samples.
    pub series: TrigSeries,
}

pub const PRIMITIVE_GRID: usize = 256;

/// `g(t) = λ^{-t}(c + ∫₀ᵗ λˣ h(x) dx)` with `c = (∫₀¹ λˣ h)/(λ - 1)`.
pub fn carriere_primitive(h: &TrigSeries, lambda: f64) -> Result<CarrierePrimitive> {
    if !lambda.is_finite() || lambda < 1.0 {
        return Err(Error::BadLambda(lambda));
    }
    if lambda == 1.0 {
        return Err(Error::LambdaOne);
    }
    let ln = libm::log(lambda);
    let integrand = |x: f64| libm::exp(x * ln) * h.eval(x);
    let grid = PRIMITIVE_GRID;
    let mut partial = vec![0.0; grid + 1];
    for i in 0..grid {
        let (a, b) = (i as f64 / grid as f64, (i + 1) as f64 / grid as f64);
        partial[i + 1] = partial[i] + quadrature::adaptive(&integrand, a, b, 1e-15);
    }
    let c = partial[grid] / (lambda - 1.0);
    let samples: Vec<f64> = (0..=grid)
        .map(|i| libm::exp(-(i as f64 / grid as f64) * ln) * (c + partial[i]))
        .collect();
    let order = h.order().max(1);
    let mut coeffs = vec![0.0; 2 * order + 1];
    let g = grid as f64;
    for (i, &v) in samples[..grid].iter().enumerate() {
        let t = TAU * i as f64 / g;
        coeffs[0] += v / g;
        for m in 1..=order {
            coeffs[2 * m - 1] += 2.0 * v * libm::cos(m as f64 * t) / g;
            coeffs[2 * m] += 2.0 * v * libm::sin(m as f64 * t) / g;
        }
    }
    Ok(CarrierePrimitive { lambda, c, samples, series: TrigSeries::new(coeffs) })
}

impl CarrierePrimitive {
    /// `max |g' + g·logλ - h|` on the sample grid.
    pub fn ode_residual(&self, h: &TrigSeries) -> f64 {
        let ln = libm::log(self.lambda);
        (0..PRIMITIVE_GRID)
            .map(|i| {
                let t = i as f64 / PRIMITIVE_GRID as f64;
                (self.series.derivative(t) + self.series.eval(t) * ln - h.eval(t)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `|g(0) - g(1)|` from the integral formula.
    pub fn periodicity_defect(&self) -> f64 {
        (self.samples[0] - self.samples[PRIMITIVE_GRID]).abs()
    }

    /// Largest gap between the formula samples and the recovered series.
    pub fn sample_fit(&self) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, v)| (v - self.series.eval(i as f64 / PRIMITIVE_GRID as f64)).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaincore::cohomology;

    const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

    fn betti(c: &GradedComplex) -> Vec<usize> {
        cohomology(c, &CohomologyOptions::default()).unwrap().betti
    }

    #[test]
    fn lambda_of_cat_map() {
        let l = Lambda::from_matrix(CAT).unwrap();
        assert!((l.value - (3.0 + libm::sqrt(5.0)) / 2.0).abs() < 1e-15);
        assert!(l.polynomial_residual() < 1e-14);
        assert!(Lambda::from_matrix([[1, 1], [0, 1]]).is_err());
        assert!(Lambda::from_matrix([[2, 1], [1, 2]]).is_err());
    }

    #[test]
    fn dims_and_betti() {
        let c = build_basic_complex(&FoliationModel::carriere(CAT, 4)).unwrap();
        assert_eq!(c.dims(), [9, 18, 9]);
        assert_eq!(betti(&c), [1, 1, 0]);
        let g = build_basic_complex(&FoliationModel::ghys(4)).unwrap();
        assert_eq!(g.dims(), [9, 9, 9]);
        assert_eq!(betti(&g), [1, 1, 9]);
        let k = build_basic_complex(&FoliationModel::kronecker(libm::sqrt(2.0), 8)).unwrap();
        assert_eq!(betti(&k), [1, 1]);
        let s = build_basic_complex(&FoliationModel::sphere(1, vec![1, 1], 6)).unwrap();
        assert_eq!(betti(&s), [1, 0, 0, 1]);
    }

    #[test]
    fn carriere_differential_on_beta() {
        let m = FoliationModel::carriere(CAT, 2);
        let c = build_carriere_variant(&m, 1.0).unwrap();
        let d1 = c.differential(1).unwrap();
        let rate = Lambda::from_matrix(CAT).unwrap().rate();
        // d(β) = -(logλ/2π) dθ∧β, and d(cos θ β) = (-sin θ - rate cos θ) dθ∧β
        assert!((d1.get(0, 5) + rate).abs() < 1e-15);
        assert!((d1.get(1, 6) + rate).abs() < 1e-15);
        assert!((d1.get(2, 6) + 1.0).abs() < 1e-15);
        assert_eq!(c.labels()[1][6], "cos(θ)·β");
    }

    #[test]
    fn rational_kronecker_uses_invariant_circle() {
        let k = FoliationModel::kronecker(0.5, 4);
        assert_eq!(kronecker_mode(0.5, 4), Some((-1, 2)));
        let c = build_basic_complex(&k).unwrap();
        assert_eq!(c.dims(), [5, 5]);
        assert_eq!(betti(&c), [1, 1]);
        assert!(build_basic_complex(&FoliationModel::kronecker(0.0, 4)).is_err());
    }

    #[test]
    fn sphere_variants() {
        let m = FoliationModel::sphere(2, vec![1, 2, 3], 6);
        let b = |v| betti(&build_sphere_complex(&m, v).unwrap());
        assert_eq!(b(SphereVariant::Whole), [1, 0, 0, 1, 0, 1]);
        assert_eq!(b(SphereVariant::Regular), [1, 0, 1, 0, 1, 0]);
        assert_eq!(b(SphereVariant::CompactRegular), [0, 1, 0, 1, 0, 1]);
        assert!(build_basic_complex(&FoliationModel::sphere(1, vec![0, 1], 6)).is_err());
    }

    #[test]
    fn products_shift_compact_cohomology() {
        let base = FoliationModel::kronecker(libm::sqrt(2.0), 8);
        let p = FoliationModel::product_cerf(base, 5);
        assert_eq!(betti(&build_compact_complex(&p).unwrap()), [0, 1, 1]);
        assert_eq!(betti(&build_basic_complex(&p).unwrap()), [1, 1, 0]);
        let g = FoliationModel::product_cerf(FoliationModel::ghys(4), 5);
        assert_eq!(betti(&build_compact_complex(&g).unwrap())[3], 9);
        let bad = FoliationModel::product_cerf(FoliationModel::kronecker(0.0, 4), 5);
        assert!(matches!(build_compact_complex(&bad), Err(Error::BadModel(_))));
    }

    #[test]
    fn carriere_product_validates() {
        let p = FoliationModel::product_cerf(FoliationModel::carriere(CAT, 3), 4);
        let c = build_compact_complex(&p).unwrap();
        assert!(c.validate().passed);
        assert_eq!(betti(&c), [0, 1, 1, 0]);
    }

    #[test]
    fn primitive_constant_and_zero() {
        let g = carriere_primitive(&TrigSeries::new(vec![1.0]), 2.0).unwrap();
        assert!((g.c - 1.0 / libm::log(2.0)).abs() < 1e-12);
        let z = carriere_primitive(&TrigSeries::new(vec![0.0, 0.0, 0.0]), 3.0).unwrap();
        assert!(z.samples.iter().all(|v| *v == 0.0));
        assert_eq!(carriere_primitive(&TrigSeries::new(vec![1.0]), 1.0), Err(Error::LambdaOne));
    }

    #[test]
    fn primitive_matches_closed_form_mode() {
        let lambda = Lambda::from_matrix(CAT).unwrap();
        let h = TrigSeries::new(vec![0.0, 1.0, 0.0]);
        let g = carriere_primitive(&h, lambda.value).unwrap();
        assert!(g.ode_residual(&h) < 1e-8);
        assert!(g.periodicity_defect() < 1e-10);
        // Independent: for h = cos ωt, g = (L cos ωt + ω sin ωt)/(L² + ω²).
        let (l, w) = (lambda.log, TAU);
        let den = l * l + w * w;
        assert!((g.series.coeffs[1] - l / den).abs() < 1e-12);
        assert!((g.series.coeffs[2] - w / den).abs() < 1e-12);
    }

    #[test]
    fn sign_oracle_follows_orientation() {
        let m = FoliationModel::carriere(CAT, 3);
        let honest = carriere_sign_oracle(&m, 1.0).unwrap();
        let flipped = carriere_sign_oracle(&m, -1.0).unwrap();
        assert_eq!(honest.sign, -1.0);
        assert_eq!(flipped.sign, 1.0);
        assert_eq!(honest.untwisted_betti[2], 0);
    }
}
