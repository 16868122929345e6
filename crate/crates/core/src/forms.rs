//! Symbolic basic forms on the model transversals.
//!
//! A form is a sum of terms `φ_1(v_1)···φ_r(v_r) · m` where each `φ_i` is a
//! function of one transverse variable and `m` is a monomial in a small
//! graded-commutative algebra of frame forms (`dθ`, `β`, `dr`, the Euler form
//! `e`, ...). A [`FormLayout`] fixes a finite function space per variable
//! and monomial in each degree; [`FormLayout::assemble`] turns that into a
//! [`Complex`] by applying `d = Σ dv ∧ ∂_v + d_frame` symbolically.
//!
//! Every product or derivative is expanded back into the truncated spaces.
//! Terms that leave them raise [`Error::TruncationOverflow`] unless the
//! caller asks for [`Overflow::Project`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;

use crate::chaincore::{Complex, ComplexMeta, LinAlg};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// What to do with terms that fall outside a truncated space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overflow {
    Fail,
    /// Drop the offending modes (Galerkin projection for Fourier and
    /// polynomial spaces).
    Project,
}

/// Uniform spline knots `t_i = -1 + 2i/intervals`, `i ∈ ℤ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplineGrid {
    pub intervals: u32,
}

impl SplineGrid {
    pub fn knot(&self, i: i64) -> f64 {
        -1.0 + 2.0 * i as f64 / self.intervals as f64
    }

    pub fn spacing(&self) -> f64 {
        2.0 / self.intervals as f64
    }

    /// Knot spacing as an exact scalar.
    pub fn spacing_exact<S: Scalar>(&self) -> S {
        S::from_ratio(2, self.intervals as i64)
    }

    fn support(&self, degree: u8, j: i64) -> (f64, f64) {
        (self.knot(j), self.knot(j + degree as i64 + 1))
    }
}

/// A span of consecutive uniform B-splines of one degree, seen on an open
/// interval `domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace {
    pub grid: SplineGrid,
    pub degree: u8,
    pub first: i64,
    pub count: usize,
    pub domain: (f64, f64),
}

impl SplineSpace {
    /// Every B-spline of `degree` not identically zero on `(a, b) ∩ (-1, 1)`.
    pub fn restricted(grid: SplineGrid, degree: u8, a: f64, b: f64) -> Self {
        let (a, b) = (a.max(-1.0), b.min(1.0));
        let idx: Vec<i64> = (-(degree as i64) - 1..=grid.intervals as i64)
            .filter(|&j| {
                let (lo, hi) = grid.support(degree, j);
                lo < b && hi > a
            })
            .collect();
        SplineSpace { grid, degree, first: idx[0], count: idx.len(), domain: (a, b) }
    }

    /// B-splines of `degree` whose support lies inside `(a, b)`, where an
    /// endpoint at or beyond ±1 means the closed window edge.
    pub fn compact(grid: SplineGrid, degree: u8, a: f64, b: f64) -> Self {
        let idx: Vec<i64> = (0..=grid.intervals as i64)
            .filter(|&j| {
                let (lo, hi) = grid.support(degree, j);
                let left = if a <= -1.0 { lo >= -1.0 - 1e-12 } else { lo > a + 1e-12 };
                let right = if b >= 1.0 { hi <= 1.0 + 1e-12 } else { hi < b - 1e-12 };
                left && right
            })
            .collect();
        let first = idx.first().copied().unwrap_or(0);
        SplineSpace { grid, degree, first, count: idx.len(), domain: (a.max(-1.0), b.min(1.0)) }
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.first..self.first + self.count as i64
    }

    fn contains(&self, j: i64) -> bool {
        j >= self.first && j < self.first + self.count as i64
    }

    fn vanishes_on_domain(&self, j: i64) -> bool {
        let (lo, hi) = self.grid.support(self.degree, j);
        !(lo < self.domain.1 && hi > self.domain.0)
    }
}

/// Finite function space in one transverse variable.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpace {
    Constant,
    /// `1, cos θ, sin θ, …, cos Nθ, sin Nθ` on the circle `[0, 2π)`.
    Trig { order: u32 },
    /// `1, r, …, r^degree` on `[-1, 1]`.
    Poly { degree: u32 },
    /// Polynomials of degree ≤ `degree` vanishing at `r = ±1`, basis `(1-r²) r^j`.
    PolyVanishing { degree: u32 },
    Spline(SplineSpace),
}

impl FunctionSpace {
    pub fn dim(&self) -> usize {
        match self {
            FunctionSpace::Constant => 1,
            FunctionSpace::Trig { order } => 2 * *order as usize + 1,
            FunctionSpace::Poly { degree } => *degree as usize + 1,
            FunctionSpace::PolyVanishing { degree } => (*degree as usize).saturating_sub(1),
            FunctionSpace::Spline(s) => s.count,
        }
    }

    pub fn label(&self, i: usize, var: &str) -> String {
        match self {
            FunctionSpace::Constant => "1".into(),
            FunctionSpace::Trig { .. } => {
                if i == 0 {
                    "1".into()
                } else {
                    let m = (i + 1) / 2;
                    let f = if i % 2 == 1 { "cos" } else { "sin" };
                    if m == 1 {
                        format!("{f}({var})")
                    } else {
                        format!("{f}({m}{var})")
                    }
                }
            }
            FunctionSpace::Poly { .. } => power_label(var, i),
            FunctionSpace::PolyVanishing { .. } => {
                let p = power_label(var, i);
                if i == 0 {
                    format!("(1-{var}^2)")
                } else {
                    format!("(1-{var}^2){p}")
                }
            }
            FunctionSpace::Spline(s) => format!("B{}[{}]({var})", s.degree, s.first + i as i64),
        }
    }

    pub fn basis_function<S: Scalar>(&self, i: usize) -> Factor<S> {
        match self {
            FunctionSpace::Constant => Factor::Const(S::one()),
            FunctionSpace::Trig { .. } => {
                let mut c = vec![S::zero(); i + 1];
                c[i] = S::one();
                Factor::Trig(c)
            }
            FunctionSpace::Poly { .. } => {
                let mut c = vec![S::zero(); i + 1];
                c[i] = S::one();
                Factor::Poly(c)
            }
            FunctionSpace::PolyVanishing { .. } => {
                // (1 - r^2) r^i
                let mut c = vec![S::zero(); i + 3];
                c[i] = S::one();
                c[i + 2] = -S::one();
                Factor::Poly(c)
            }
            FunctionSpace::Spline(s) => {
                let mut coeffs = BTreeMap::new();
                coeffs.insert(s.first + i as i64, S::one());
                Factor::Spline { grid: s.grid, degree: s.degree, coeffs }
            }
        }
    }

    /// Coordinates of `f` in this space.
    pub fn expand<S: Scalar>(&self, f: &Factor<S>, policy: Overflow, var: &str) -> Result<Vec<S>> {
        let n = self.dim();
        let mut out = vec![S::zero(); n];
        let mut overflow: Vec<String> = Vec::new();
        match (self, f) {
            (_, Factor::Const(a)) if a.is_zero() => {}
            (FunctionSpace::Constant, Factor::Const(a))
            | (FunctionSpace::Trig { .. }, Factor::Const(a))
            | (FunctionSpace::Poly { .. }, Factor::Const(a)) => out[0] = a.clone(),
            (FunctionSpace::Constant, Factor::Trig(c)) | (FunctionSpace::Constant, Factor::Poly(c)) => {
                for (i, x) in c.iter().enumerate() {
                    if i == 0 {
                        out[0] = x.clone();
                    } else if !x.is_zero() {
                        overflow.push(format!("{var}-mode {i}"));
                    }
                }
            }
            (FunctionSpace::Trig { order }, Factor::Trig(c)) => {
                for (i, x) in c.iter().enumerate() {
                    if i < n {
                        out[i] = x.clone();
                    } else if !x.is_zero() {
                        let m = (i + 1) / 2;
                        if m > *order as usize {
                            overflow.push(self_label_trig(i, var));
                        }
                    }
                }
            }
            (FunctionSpace::Poly { .. }, Factor::Poly(c)) => {
                for (i, x) in c.iter().enumerate() {
                    if i < n {
                        out[i] = x.clone();
                    } else if !x.is_zero() {
                        overflow.push(power_label(var, i));
                    }
                }
            }
            (FunctionSpace::PolyVanishing { degree }, Factor::Poly(c)) => {
                let c: Vec<S> = if policy == Overflow::Project {
                    c.iter().take(*degree as usize + 1).cloned().collect()
                } else {
                    c.clone()
                };
                let (q, rem) = divide_one_minus_r2(&c);
                if rem.iter().any(|x| !x.is_zero()) {
                    overflow.push(format!("{var}-polynomial not vanishing at ±1"));
                }
                for (i, x) in q.into_iter().enumerate() {
                    if i < n {
                        out[i] = x;
                    } else if !x.is_zero() {
                        overflow.push(format!("(1-{var}^2){}", power_label(var, i)));
                    }
                }
            }
            (FunctionSpace::PolyVanishing { .. }, Factor::Const(_)) => {
                overflow.push(format!("constant in {var}-space vanishing at ±1"));
            }
            (FunctionSpace::Spline(s), Factor::Spline { degree, coeffs, .. }) if *degree == s.degree => {
                for (j, x) in coeffs {
                    if x.is_zero() {
                        continue;
                    }
                    if s.contains(*j) {
                        out[(*j - s.first) as usize] = x.clone();
                    } else if !s.vanishes_on_domain(*j) {
                        overflow.push(format!("B{}[{j}]({var})", s.degree));
                    }
                }
            }
            (FunctionSpace::Spline(s), Factor::Const(a)) => {
                // Constants are the partition of unity Σ_j B_j on the domain.
                let (a0, b0) = s.domain;
                let all = SplineSpace::restricted(s.grid, s.degree, a0, b0);
                for j in all.indices() {
                    if s.contains(j) {
                        out[(j - s.first) as usize] = a.clone();
                    } else {
                        overflow.push(format!("B{}[{j}]({var}) (constant needs full support)", s.degree));
                    }
                }
            }
            (space, f) => {
                return Err(Error::Layout(format!("cannot expand {} into {:?}", f.kind(), space)));
            }
        }
        if !overflow.is_empty() && policy == Overflow::Fail {
            return Err(Error::TruncationOverflow(overflow));
        }
        Ok(out)
    }
}

fn self_label_trig(i: usize, var: &str) -> String {
    FunctionSpace::Trig { order: 0 }.label(i, var)
}

fn power_label(var: &str, i: usize) -> String {
    match i {
        0 => "1".into(),
        1 => var.to_string(),
        _ => format!("{var}^{i}"),
    }
}

/// Divide by `1 - r^2`, returning quotient and remainder (degree ≤ 1).
fn divide_one_minus_r2<S: Scalar>(p: &[S]) -> (Vec<S>, Vec<S>) {
    let mut r: Vec<S> = p.to_vec();
    while r.len() > 1 && r.last().is_some_and(|x| x.is_zero()) {
        r.pop();
    }
    if r.len() < 3 {
        return (Vec::new(), r);
    }
    let mut q = vec![S::zero(); r.len() - 2];
    // Work from the top: r^k = -(1-r^2) r^{k-2} + r^{k-2}.
    for k in (2..r.len()).rev() {
        let c = r[k].clone();
        if c.is_zero() {
            continue;
        }
        q[k - 2] = q[k - 2].clone() - c.clone();
        r[k] = S::zero();
        r[k - 2] = r[k - 2].clone() + c;
    }
    r.truncate(2);
    (q, r)
}

/// A function of one transverse variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor<S> {
    Const(S),
    /// Coefficients in the order `1, cos θ, sin θ, cos 2θ, sin 2θ, …`.
    Trig(Vec<S>),
    /// Monomial coefficients `c_0 + c_1 r + …`.
    Poly(Vec<S>),
    Spline { grid: SplineGrid, degree: u8, coeffs: BTreeMap<i64, S> },
}

fn trig_index(m: usize, sine: bool) -> usize {
    if m == 0 {
        0
    } else if sine {
        2 * m
    } else {
        2 * m - 1
    }
}

fn trig_get<S: Scalar>(c: &[S], i: usize) -> S {
    c.get(i).cloned().unwrap_or_else(S::zero)
}

fn trig_add<S: Scalar>(c: &mut Vec<S>, i: usize, v: S) {
    if c.len() <= i {
        c.resize(i + 1, S::zero());
    }
    c[i] = c[i].clone() + v;
}

impl<S: Scalar> Factor<S> {
    fn kind(&self) -> &'static str {
        match self {
            Factor::Const(_) => "constant",
            Factor::Trig(_) => "trigonometric polynomial",
            Factor::Poly(_) => "polynomial",
            Factor::Spline { .. } => "spline",
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Factor::Const(a) => a.is_zero(),
            Factor::Trig(c) | Factor::Poly(c) => c.iter().all(|x| x.is_zero()),
            Factor::Spline { coeffs, .. } => coeffs.values().all(|x| x.is_zero()),
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        match self {
            Factor::Const(a) => Factor::Const(a.clone() * s.clone()),
            Factor::Trig(c) => Factor::Trig(c.iter().map(|x| x.clone() * s.clone()).collect()),
            Factor::Poly(c) => Factor::Poly(c.iter().map(|x| x.clone() * s.clone()).collect()),
            Factor::Spline { grid, degree, coeffs } => Factor::Spline {
                grid: *grid,
                degree: *degree,
                coeffs: coeffs.iter().map(|(j, x)| (*j, x.clone() * s.clone())).collect(),
            },
        }
    }

    pub fn derivative(&self) -> Result<Self> {
        Ok(match self {
            Factor::Const(_) => Factor::Const(S::zero()),
            Factor::Trig(c) => {
                let mut out = vec![S::zero(); c.len().max(1)];
                let modes = c.len() / 2;
                for m in 1..=modes {
                    let a = trig_get(c, trig_index(m, false));
                    let b = trig_get(c, trig_index(m, true));
                    let mm = S::from_int(m as i64);
                    // (a cos mθ + b sin mθ)' = m b cos mθ - m a sin mθ
                    trig_add(&mut out, trig_index(m, false), mm.clone() * b);
                    trig_add(&mut out, trig_index(m, true), -(mm * a));
                }
                Factor::Trig(out)
            }
            Factor::Poly(c) => Factor::Poly(
                c.iter().enumerate().skip(1).map(|(i, x)| S::from_int(i as i64) * x.clone()).collect(),
            ),
            Factor::Spline { grid, degree, coeffs } => {
                if *degree == 0 {
                    return Err(Error::Unsupported("derivative of a piecewise constant spline".into()));
                }
                // B^k_j' = (B^{k-1}_j - B^{k-1}_{j+1}) / h on uniform knots.
                let inv_h = S::one() / grid.spacing_exact::<S>();
                let mut out = BTreeMap::new();
                for (j, x) in coeffs {
                    let v = x.clone() * inv_h.clone();
                    let e = out.entry(*j).or_insert_with(S::zero);
                    *e = e.clone() + v.clone();
                    let e = out.entry(*j + 1).or_insert_with(S::zero);
                    *e = e.clone() - v;
                }
                Factor::Spline { grid: *grid, degree: degree - 1, coeffs: out }
            }
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Ok(match (self, other) {
            (Factor::Const(a), f) | (f, Factor::Const(a)) => f.scale(a),
            (Factor::Trig(a), Factor::Trig(b)) => {
                let half = S::from_ratio(1, 2);
                let mut out: Vec<S> = Vec::new();
                let ma = a.len() / 2;
                let mb = b.len() / 2;
                for m in 0..=ma {
                    for n in 0..=mb {
                        let (ac, as_) = (trig_get(a, trig_index(m, false)), if m > 0 { trig_get(a, trig_index(m, true)) } else { S::zero() });
                        let (bc, bs) = (trig_get(b, trig_index(n, false)), if n > 0 { trig_get(b, trig_index(n, true)) } else { S::zero() });
                        if (ac.is_zero() && as_.is_zero()) || (bc.is_zero() && bs.is_zero()) {
                            continue;
                        }
                        let sum = m + n;
                        let (diff, flip) = if m >= n { (m - n, false) } else { (n - m, true) };
                        let sgn = |x: S| if flip { -x } else { x };
                        // cos m cos n = ½[cos(m-n) + cos(m+n)]
                        let cc = half.clone() * ac.clone() * bc.clone();
                        trig_add(&mut out, trig_index(diff, false), cc.clone());
                        trig_add(&mut out, trig_index(sum, false), cc);
                        // sin m sin n = ½[cos(m-n) - cos(m+n)]
                        let ss = half.clone() * as_.clone() * bs.clone();
                        trig_add(&mut out, trig_index(diff, false), ss.clone());
                        trig_add(&mut out, trig_index(sum, false), -ss);
                        // sin m cos n = ½[sin(m+n) + sin(m-n)]
                        let sc = half.clone() * as_ * bc;
                        trig_add(&mut out, trig_index(sum, true), sc.clone());
                        if diff > 0 {
                            trig_add(&mut out, trig_index(diff, true), sgn(sc));
                        }
                        // cos m sin n = ½[sin(m+n) - sin(m-n)]
                        let cs = half.clone() * ac * bs;
                        trig_add(&mut out, trig_index(sum, true), cs.clone());
                        if diff > 0 {
                            trig_add(&mut out, trig_index(diff, true), -sgn(cs));
                        }
                    }
                }
                // sin 0 slot does not exist; index 0 is the constant.
                Factor::Trig(out)
            }
            (Factor::Poly(a), Factor::Poly(b)) => {
                let mut out = vec![S::zero(); a.len() + b.len().max(1) - 1];
                for (i, x) in a.iter().enumerate() {
                    for (j, y) in b.iter().enumerate() {
                        out[i + j] = out[i + j].clone() + x.clone() * y.clone();
                    }
                }
                Factor::Poly(out)
            }
            (a, b) => return Err(Error::Unsupported(format!("product of {} and {}", a.kind(), b.kind()))),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(match (self, other) {
            (Factor::Const(a), Factor::Const(b)) => Factor::Const(a.clone() + b.clone()),
            (Factor::Const(a), Factor::Trig(c)) | (Factor::Trig(c), Factor::Const(a)) => {
                let mut c = c.clone();
                trig_add(&mut c, 0, a.clone());
                Factor::Trig(c)
            }
            (Factor::Const(a), Factor::Poly(c)) | (Factor::Poly(c), Factor::Const(a)) => {
                let mut c = c.clone();
                trig_add(&mut c, 0, a.clone());
                Factor::Poly(c)
            }
            (Factor::Trig(a), Factor::Trig(b)) => {
                let mut c = a.clone();
                for (i, x) in b.iter().enumerate() {
                    trig_add(&mut c, i, x.clone());
                }
                Factor::Trig(c)
            }
            (Factor::Poly(a), Factor::Poly(b)) => {
                let mut c = a.clone();
                for (i, x) in b.iter().enumerate() {
                    trig_add(&mut c, i, x.clone());
                }
                Factor::Poly(c)
            }
            (a, b) => return Err(Error::Unsupported(format!("sum of {} and {}", a.kind(), b.kind()))),
        })
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            Factor::Const(a) => a.to_f64(),
            Factor::Trig(c) => {
                let mut acc = trig_get(c, 0).to_f64();
                for m in 1..=c.len() / 2 {
                    let t = m as f64 * x;
                    acc += trig_get(c, trig_index(m, false)).to_f64() * libm::cos(t)
                        + trig_get(c, trig_index(m, true)).to_f64() * libm::sin(t);
                }
                acc
            }
            Factor::Poly(c) => c.iter().rev().fold(0.0, |acc, a| acc * x + a.to_f64()),
            Factor::Spline { grid, degree, coeffs } => coeffs
                .iter()
                .map(|(j, a)| a.to_f64() * bspline(*grid, *degree, *j, x))
                .sum(),
        }
    }

    pub fn map<T: Scalar>(&self, f: &impl Fn(&S) -> T) -> Factor<T> {
        match self {
            Factor::Const(a) => Factor::Const(f(a)),
            Factor::Trig(c) => Factor::Trig(c.iter().map(f).collect()),
            Factor::Poly(c) => Factor::Poly(c.iter().map(f).collect()),
            Factor::Spline { grid, degree, coeffs } => Factor::Spline {
                grid: *grid,
                degree: *degree,
                coeffs: coeffs.iter().map(|(j, a)| (*j, f(a))).collect(),
            },
        }
    }
}

/// Uniform B-spline `B^degree_j` evaluated at `x`.
pub fn bspline(grid: SplineGrid, degree: u8, j: i64, x: f64) -> f64 {
    let u = (x - grid.knot(j)) / grid.spacing();
    cardinal_bspline(degree, u)
}

fn cardinal_bspline(k: u8, u: f64) -> f64 {
    if u < 0.0 || u >= k as f64 + 1.0 {
        return 0.0;
    }
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    (u * cardinal_bspline(k - 1, u) + (kf + 1.0 - u) * cardinal_bspline(k - 1, u - 1.0)) / kf
}

/// A generator of the frame algebra: odd (degree 1) or even (degree 2).
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    pub degree: usize,
    /// Largest nonzero power (1 for odd generators).
    pub cap: u8,
}

/// Exponent vector over the generators.
pub type Monomial = Vec<u8>;

/// Graded-commutative algebra of frame forms with constant-coefficient
/// differentials on the generators.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlgebra<S> {
    pub generators: Vec<Generator>,
    /// `d(generator_i) = Σ c · monomial`.
    pub generator_d: Vec<Vec<(S, Monomial)>>,
}

impl<S: Scalar> FrameAlgebra<S> {
    pub fn new(generators: Vec<Generator>) -> Self {
        let n = generators.len();
        FrameAlgebra { generators, generator_d: vec![Vec::new(); n] }
    }

    pub fn one(&self) -> Monomial {
        vec![0; self.generators.len()]
    }

    pub fn gen(&self, i: usize) -> Monomial {
        let mut m = self.one();
        m[i] = 1;
        m
    }

    /// Monomial from (generator, exponent) pairs.
    pub fn monomial(&self, parts: &[(usize, u8)]) -> Monomial {
        let mut m = self.one();
        for &(i, e) in parts {
            m[i] += e;
        }
        m
    }

    pub fn degree(&self, m: &Monomial) -> usize {
        m.iter().zip(&self.generators).map(|(&e, g)| e as usize * g.degree).sum()
    }

    pub fn label(&self, m: &Monomial) -> String {
        let parts: Vec<String> = m
            .iter()
            .zip(&self.generators)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, g)| if e == 1 { g.name.clone() } else { format!("{}^{e}", g.name) })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("∧")
        }
    }

    /// `a ∧ b` as `(sign, monomial)`, or `None` when it vanishes.
    pub fn wedge(&self, a: &Monomial, b: &Monomial) -> Option<(i64, Monomial)> {
        let mut out = self.one();
        for (i, g) in self.generators.iter().enumerate() {
            let e = a[i] + b[i];
            if e > g.cap {
                return None;
            }
            out[i] = e;
        }
        // Moving each odd generator of b left past the larger odd generators of a.
        let mut swaps = 0;
        for (i, gi) in self.generators.iter().enumerate() {
            if gi.degree % 2 == 0 || b[i] == 0 {
                continue;
            }
            for (j, gj) in self.generators.iter().enumerate().skip(i + 1) {
                if gj.degree % 2 == 1 && a[j] > 0 {
                    swaps += 1;
                }
            }
        }
        Some((if swaps % 2 == 0 { 1 } else { -1 }, out))
    }

    /// Exterior derivative of a monomial by the Leibniz rule.
    pub fn d(&self, m: &Monomial) -> Vec<(S, Monomial)> {
        let mut factors: Vec<usize> = Vec::new();
        for (i, &e) in m.iter().enumerate() {
            for _ in 0..e {
                factors.push(i);
            }
        }
        let mut acc: BTreeMap<Monomial, S> = BTreeMap::new();
        let mut prefix = self.one();
        let mut prefix_deg = 0;
        for (pos, &gi) in factors.iter().enumerate() {
            let mut suffix = self.one();
            for &gj in &factors[pos + 1..] {
                suffix[gj] += 1;
            }
            for (c, dm) in &self.generator_d[gi] {
                let Some((s1, left)) = self.wedge(&prefix, dm) else { continue };
                let Some((s2, full)) = self.wedge(&left, &suffix) else { continue };
                // suffix is already in canonical order, so only the two wedge signs matter.
                let sign = if prefix_deg % 2 == 0 { 1 } else { -1 } * s1 * s2;
                let v = c.clone() * S::from_int(sign);
                let e = acc.entry(full).or_insert_with(S::zero);
                *e = e.clone() + v;
            }
            prefix[gi] += 1;
            prefix_deg += self.generators[gi].degree;
        }
        acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (c, m)).collect()
    }

    fn map<T: Scalar>(&self, f: &impl Fn(&S) -> T) -> FrameAlgebra<T> {
        FrameAlgebra {
            generators: self.generators.clone(),
            generator_d: self
                .generator_d
                .iter()
                .map(|terms| terms.iter().map(|(c, m)| (f(c), m.clone())).collect())
                .collect(),
        }
    }
}

/// Integration domain of a transverse variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `[0, 2π)` periodic.
    Circle,
    /// `[-1, 1]`.
    Interval,
    /// `[-1, 1]` with panel breaks at the spline knots.
    SplineWindow(SplineGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
    /// Generator playing the role of `d(variable)`.
    pub differential: usize,
}

/// A function space per variable times one frame monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub spaces: Vec<FunctionSpace>,
    pub monomial: Monomial,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.spaces.iter().map(FunctionSpace::dim).product()
    }

    /// Multi-indices in basis order, first variable slowest.
    fn multi_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for s in &self.spaces {
            let mut next = Vec::with_capacity(out.len() * s.dim());
            for prefix in &out {
                for i in 0..s.dim() {
                    let mut p = prefix.clone();
                    p.push(i);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.spaces).fold(0, |acc, (&i, s)| acc * s.dim() + i)
    }
}

/// One product term `Π factors · monomial`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormTerm<S> {
    pub factors: Vec<Factor<S>>,
    pub monomial: Monomial,
}

/// A form written symbolically as a sum of product terms.
#[derive(Debug, Clone, PartialEq)]
pub struct FormExpr<S> {
    pub terms: Vec<FormTerm<S>>,
}

impl<S: Scalar> FormExpr<S> {
    pub fn zero() -> Self {
        FormExpr { terms: Vec::new() }
    }

    pub fn term(factors: Vec<Factor<S>>, monomial: Monomial) -> Self {
        FormExpr { terms: vec![FormTerm { factors, monomial }] }
    }

    pub fn plus(mut self, other: FormExpr<S>) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn scale(&self, s: &S) -> Self {
        FormExpr {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut f = t.factors.clone();
                    if let Some(first) = f.first_mut() {
                        *first = first.scale(s);
                    }
                    FormTerm { factors: f, monomial: t.monomial.clone() }
                })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.factors.iter().any(Factor::is_zero))
    }

    pub fn map<T: Scalar>(&self, f: &impl Fn(&S) -> T) -> FormExpr<T> {
        FormExpr {
            terms: self
                .terms
                .iter()
                .map(|t| FormTerm { factors: t.factors.iter().map(|x| x.map(f)).collect(), monomial: t.monomial.clone() })
                .collect(),
        }
    }

    /// Append a constant factor for a new trailing variable.
    pub fn with_extra_variable(&self) -> Self {
        FormExpr {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut f = t.factors.clone();
                    f.push(Factor::Const(S::one()));
                    let mut m = t.monomial.clone();
                    m.push(0);
                    FormTerm { factors: f, monomial: m }
                })
                .collect(),
        }
    }
}

/// Function spaces and frame monomials for each degree of a model complex.
#[derive(Debug, Clone, PartialEq)]
pub struct FormLayout<S> {
    pub algebra: FrameAlgebra<S>,
    pub variables: Vec<Variable>,
    pub degrees: Vec<Vec<Block>>,
    /// Top-degree monomial against which forms are integrated.
    pub volume: Monomial,
}

impl<S: LinAlg> FormLayout<S> {
    pub fn top_degree(&self) -> usize {
        self.degrees.len() - 1
    }

    pub fn dim(&self, k: usize) -> usize {
        self.degrees.get(k).map_or(0, |bs| bs.iter().map(Block::dim).sum())
    }

    fn block_offset(&self, k: usize, b: usize) -> usize {
        self.degrees[k][..b].iter().map(Block::dim).sum()
    }

    fn find_block(&self, k: usize, m: &Monomial) -> Option<usize> {
        self.degrees.get(k)?.iter().position(|b| &b.monomial == m)
    }

    pub fn labels(&self, k: usize) -> Vec<String> {
        let mut out = Vec::new();
        for block in &self.degrees[k] {
            let mono = self.algebra.label(&block.monomial);
            for idx in block.multi_indices() {
                let fs: Vec<String> = idx
                    .iter()
                    .zip(&block.spaces)
                    .zip(&self.variables)
                    .map(|((&i, s), v)| s.label(i, &v.name))
                    .filter(|l| l != "1")
                    .collect();
                let label = match (fs.is_empty(), mono == "1") {
                    (true, _) => mono.clone(),
                    (false, true) => fs.join("·"),
                    (false, false) => format!("{}·{mono}", fs.join("·")),
                };
                out.push(label);
            }
        }
        out
    }

    /// Basis element `i` of degree `k` as a symbolic term.
    pub fn basis_term(&self, k: usize, i: usize) -> FormTerm<S> {
        let mut rem = i;
        for block in &self.degrees[k] {
            if rem < block.dim() {
                let idx = &block.multi_indices()[rem];
                let factors = idx.iter().zip(&block.spaces).map(|(&j, s)| s.basis_function(j)).collect();
                return FormTerm { factors, monomial: block.monomial.clone() };
            }
            rem -= block.dim();
        }
        panic!("basis index {i} out of range in degree {k}");
    }

    /// Coordinates of a symbolic form in the degree-`k` basis.
    pub fn coefficients(&self, expr: &FormExpr<S>, k: usize, policy: Overflow) -> Result<Vec<S>> {
        let mut out = vec![S::zero(); self.dim(k)];
        for t in &expr.terms {
            self.accumulate(&mut out, k, t, &S::one(), policy)?;
        }
        Ok(out)
    }

    fn accumulate(&self, out: &mut [S], k: usize, t: &FormTerm<S>, coeff: &S, policy: Overflow) -> Result<()> {
        if t.factors.iter().any(Factor::is_zero) || coeff.is_zero() {
            return Ok(());
        }
        let Some(b) = self.find_block(k, &t.monomial) else {
            if policy == Overflow::Project {
                return Ok(());
            }
            return Err(Error::TruncationOverflow(vec![format!(
                "no degree-{k} block for {}",
                self.algebra.label(&t.monomial)
            )]));
        };
        let block = &self.degrees[k][b];
        let per_var: Vec<Vec<S>> = t
            .factors
            .iter()
            .zip(&block.spaces)
            .zip(&self.variables)
            .map(|((f, s), v)| s.expand(f, policy, &v.name))
            .collect::<Result<_>>()?;
        let offset = self.block_offset(k, b);
        for idx in block.multi_indices() {
            let mut c = coeff.clone();
            for (v, &i) in per_var.iter().zip(&idx) {
                if v[i].is_zero() {
                    c = S::zero();
                    break;
                }
                c = c * v[i].clone();
            }
            if !c.is_zero() {
                let slot = &mut out[offset + block.flat_index(&idx)];
                *slot = slot.clone() + c;
            }
        }
        Ok(())
    }

    /// Symbolic exterior derivative of one term.
    pub fn d_term(&self, t: &FormTerm<S>) -> Result<Vec<(S, FormTerm<S>)>> {
        let mut out = Vec::new();
        for (v, var) in self.variables.iter().enumerate() {
            let dv = self.algebra.gen(var.differential);
            let Some((sign, m)) = self.algebra.wedge(&dv, &t.monomial) else { continue };
            let mut factors = t.factors.clone();
            factors[v] = factors[v].derivative()?;
            out.push((S::from_int(sign), FormTerm { factors, monomial: m }));
        }
        for (c, m) in self.algebra.d(&t.monomial) {
            out.push((c, FormTerm { factors: t.factors.clone(), monomial: m }));
        }
        Ok(out)
    }

    pub fn d_expr(&self, e: &FormExpr<S>) -> Result<FormExpr<S>> {
        let mut terms = Vec::new();
        for t in &e.terms {
            for (c, mut nt) in self.d_term(t)? {
                if let Some(f) = nt.factors.first_mut() {
                    *f = f.scale(&c);
                }
                terms.push(nt);
            }
        }
        Ok(FormExpr { terms })
    }

    /// Matrix of a linear operator given on basis terms, degree `k` to `k + shift`.
    fn operator<F>(&self, k: usize, target: usize, policy: Overflow, op: F) -> Result<DenseMatrix<S>>
    where
        F: Fn(&FormTerm<S>) -> Result<Vec<(S, FormTerm<S>)>>,
    {
        let (rows, cols) = (self.dim(target), self.dim(k));
        let mut m = DenseMatrix::zeros(rows, cols);
        let mut col = vec![S::zero(); rows];
        for j in 0..cols {
            col.iter_mut().for_each(|x| *x = S::zero());
            let t = self.basis_term(k, j);
            for (c, nt) in op(&t)? {
                self.accumulate(&mut col, target, &nt, &c, policy)?;
            }
            for (i, x) in col.iter().enumerate() {
                if !x.is_zero() {
                    m.set(i, j, x.clone());
                }
            }
        }
        Ok(m)
    }

    pub fn differential_matrix(&self, k: usize) -> Result<DenseMatrix<S>> {
        self.operator(k, k + 1, Overflow::Fail, |t| self.d_term(t)).map_err(|e| match e {
            Error::TruncationOverflow(v) => Error::Layout(v.join(", ")),
            other => other,
        })
    }

    /// Matrix of `ω ↦ κ ∧ ω` from degree `k` to `k + deg κ`.
    pub fn wedge_matrix(&self, form: &FormExpr<S>, form_degree: usize, k: usize, policy: Overflow) -> Result<DenseMatrix<S>> {
        self.operator(k, k + form_degree, policy, |t| {
            let mut out = Vec::new();
            for kt in &form.terms {
                let Some((sign, m)) = self.algebra.wedge(&kt.monomial, &t.monomial) else { continue };
                let factors = kt
                    .factors
                    .iter()
                    .zip(&t.factors)
                    .map(|(a, b)| a.mul(b))
                    .collect::<Result<Vec<_>>>()?;
                out.push((S::from_int(sign), FormTerm { factors, monomial: m }));
            }
            Ok(out)
        })
    }

    pub fn assemble(&self, meta: ComplexMeta) -> Result<Complex<S>> {
        let top = self.top_degree();
        let labels = (0..=top).map(|k| self.labels(k)).collect();
        let diffs = (0..top).map(|k| self.differential_matrix(k)).collect::<Result<Vec<_>>>()?;
        Ok(Complex::new(labels, diffs, meta)?.with_layout(self.clone()))
    }

    /// Values of a degree-`k` form at a point, grouped by frame monomial.
    pub fn evaluate(&self, k: usize, coeffs: &[f64], point: &[f64]) -> Vec<(Monomial, f64)> {
        let mut out: Vec<(Monomial, f64)> = Vec::new();
        let mut offset = 0;
        for block in &self.degrees[k] {
            let vals: Vec<Vec<f64>> = block
                .spaces
                .iter()
                .zip(point)
                .map(|(s, &x)| (0..s.dim()).map(|i| s.basis_function::<S>(i).evaluate(x)).collect())
                .collect();
            let mut total = 0.0;
            for (n, idx) in block.multi_indices().into_iter().enumerate() {
                let c = coeffs[offset + n];
                if c == 0.0 {
                    continue;
                }
                total += c * idx.iter().zip(&vals).map(|(&i, v)| v[i]).product::<f64>();
            }
            out.push((block.monomial.clone(), total));
            offset += block.dim();
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: &impl Fn(&S) -> T) -> FormLayout<T> {
        FormLayout {
            algebra: self.algebra.map(f),
            variables: self.variables.clone(),
            degrees: self.degrees.clone(),
            volume: self.volume.clone(),
        }
    }

    pub fn to_f64(&self) -> FormLayout<f64> {
        self.map(&|x: &S| x.to_f64())
    }

    pub fn to_rational(&self) -> FormLayout<BigRational> {
        self.map(&|x: &S| x.to_rational())
    }

    /// Top-degree coefficient of `α ∧ β` at a point.
    pub fn wedge_top(&self, alpha: &[(Monomial, f64)], beta: &[(Monomial, f64)]) -> f64 {
        let mut acc = 0.0;
        for (ma, va) in alpha {
            for (mb, vb) in beta {
                if let Some((s, m)) = self.algebra.wedge(ma, mb) {
                    if m == self.volume {
                        acc += s as f64 * va * vb;
                    }
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn trig_product_matches_pointwise() {
        let a: Factor<f64> = Factor::Trig(vec![0.5, 1.0, -2.0, 0.0, 0.75]);
        let b: Factor<f64> = Factor::Trig(vec![-1.0, 0.0, 0.3, 1.5, 0.0, 0.0, 2.0]);
        let p = a.mul(&b).unwrap();
        for i in 0..17 {
            let x = 0.37 * i as f64;
            assert!((p.evaluate(x) - a.evaluate(x) * b.evaluate(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn trig_derivative_matches_difference() {
        let a: Factor<f64> = Factor::Trig(vec![0.5, 1.0, -2.0, 0.25, 0.75]);
        let d = a.derivative().unwrap();
        let h = 1e-5;
        for i in 0..9 {
            let x = 0.7 * i as f64;
            let fd = (a.evaluate(x + h) - a.evaluate(x - h)) / (2.0 * h);
            assert!((d.evaluate(x) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn vanishing_polynomial_division() {
        // (1 - r^2)(2 + r) = 2 + r - 2r^2 - r^3
        let p = vec![q(2, 1), q(1, 1), q(-2, 1), q(-1, 1)];
        let (quot, rem) = divide_one_minus_r2(&p);
        assert_eq!(quot, vec![q(2, 1), q(1, 1)]);
        assert!(rem.iter().all(num_traits::Zero::is_zero));
        let (_, rem) = divide_one_minus_r2(&[q(1, 1), q(0, 1), q(1, 1)]);
        assert!(rem.iter().any(|x| !num_traits::Zero::is_zero(x)));
    }

    #[test]
    fn bsplines_partition_unity_and_derivative() {
        let grid = SplineGrid { intervals: 8 };
        for i in 0..20 {
            let x = -0.95 + 0.1 * i as f64;
            let s: f64 = (-4..=8).map(|j| bspline(grid, 3, j, x)).sum();
            assert!((s - 1.0).abs() < 1e-12, "x={x} s={s}");
        }
        let mut c = BTreeMap::new();
        c.insert(2i64, 1.0);
        let f: Factor<f64> = Factor::Spline { grid, degree: 3, coeffs: c };
        let d = f.derivative().unwrap();
        let h = 1e-6;
        for i in 0..10 {
            let x = -0.5 + 0.1 * i as f64 + 0.013;
            let fd = (f.evaluate(x + h) - f.evaluate(x - h)) / (2.0 * h);
            assert!((d.evaluate(x) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn compact_spline_counts() {
        let grid = SplineGrid { intervals: 8 };
        assert_eq!(SplineSpace::compact(grid, 3, -1.0, 1.0).count, 5);
        assert_eq!(SplineSpace::compact(grid, 2, -1.0, 1.0).count, 6);
        assert_eq!(SplineSpace::restricted(grid, 3, -1.0, 1.0).count, 11);
    }

    #[test]
    fn frame_signs() {
        let alg = FrameAlgebra::<f64>::new(vec![
            Generator { name: "a".into(), degree: 1, cap: 1 },
            Generator { name: "b".into(), degree: 1, cap: 1 },
            Generator { name: "e".into(), degree: 2, cap: 2 },
        ]);
        let (a, b, e) = (alg.gen(0), alg.gen(1), alg.gen(2));
        assert_eq!(alg.wedge(&a, &b).unwrap().0, 1);
        assert_eq!(alg.wedge(&b, &a).unwrap().0, -1);
        assert!(alg.wedge(&a, &a).is_none());
        let ee = alg.wedge(&e, &e).unwrap();
        assert_eq!(ee.0, 1);
        assert!(alg.wedge(&ee.1, &e).is_none());
        assert_eq!(alg.wedge(&e, &b).unwrap().0, 1);
    }

    #[test]
    fn leibniz_on_frames() {
        // d b = a∧b  ⇒  d(a∧b) = -a∧d b = 0 and d(b) read back.
        let mut alg = FrameAlgebra::<f64>::new(vec![
            Generator { name: "a".into(), degree: 1, cap: 1 },
            Generator { name: "b".into(), degree: 1, cap: 1 },
        ]);
        let ab = alg.monomial(&[(0, 1), (1, 1)]);
        alg.generator_d[1] = vec![(2.0, ab.clone())];
        assert_eq!(alg.d(&alg.gen(1)), vec![(2.0, ab.clone())]);
        assert!(alg.d(&ab).is_empty());
    }
}
