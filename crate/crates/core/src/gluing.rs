//! Mayer–Vietoris sequences for a two-set saturated cover `U ∪ V` of a
//! product model `base × ℝ_t`, with `U`, `V` given by `t`-intervals.
//!
//! Restriction is a coordinate projection on the spline basis and extension
//! by zero is an inclusion, so every map is an exact sparse matrix.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;

use crate::chaincore::{Complex, ComplexMeta, CohomologyOptions, LinAlg};
use crate::error::{Error, Result};
use crate::forms::{FormLayout, Overflow, SplineSpace};
use crate::matrix::DenseMatrix;
use crate::models::{self, product_grid, product_layout, FoliationModel, ModelKind, ModelLayout};
use crate::scalar::Scalar;
use crate::twisted::{self, BasicOneForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MvVariant {
    Basic,
    Compact,
    Twisted,
}

impl MvVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            MvVariant::Basic => "basic",
            MvVariant::Compact => "compact",
            MvVariant::Twisted => "twisted",
        }
    }
}

/// Two open `t`-intervals of the product window. Endpoints at or beyond ±1
/// reach the unbounded ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSpec {
    pub model: FoliationModel,
    pub u: (f64, f64),
    pub v: (f64, f64),
}

/// Partition of unity `(f, 1 - f)` in the cubic spline basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    /// Spline indices carrying coefficient 1 in `f`; the others carry 1 in `1 - f`.
    pub f_indices: Vec<i64>,
    pub g_indices: Vec<i64>,
}

impl CoverSpec {
    pub fn new(model: FoliationModel, u: (f64, f64), v: (f64, f64)) -> Self {
        CoverSpec { model, u, v }
    }

    fn bump_count(&self) -> Result<u32> {
        match &self.model.kind {
            ModelKind::ProductCerf { bump_count, .. } => Ok(*bump_count),
            _ => Err(Error::BadCover("interval covers need a ProductCerf model".into())),
        }
    }

    pub fn overlap(&self) -> (f64, f64) {
        (self.u.0.max(self.v.0), self.u.1.min(self.v.1))
    }

    pub fn union(&self) -> (f64, f64) {
        (self.u.0.min(self.v.0), self.u.1.max(self.v.1))
    }

    /// Check the cover and build `f` with `supp f ⊂ U`, `supp(1 - f) ⊂ V`.
    pub fn validate(&self) -> Result<PartitionOfUnity> {
        self.model.validate()?;
        let grid = product_grid(self.bump_count()?);
        for (name, (a, b)) in [("U", self.u), ("V", self.v)] {
            if !(a < b) || a.is_nan() || b.is_nan() {
                return Err(Error::BadCover(format!("{name} = ({a}, {b}) is empty")));
            }
        }
        let (lo, hi) = self.union();
        if lo > -1.0 || hi < 1.0 {
            return Err(Error::BadCover(format!("U ∪ V = ({lo}, {hi}) does not cover the window")));
        }
        let (oa, ob) = self.overlap();
        if !(oa < ob) {
            return Err(Error::BadCover("U ∩ V is empty".into()));
        }
        // Orient so that U is the left piece.
        let (left, right) = if self.u.0 <= self.v.0 { (self.u, self.v) } else { (self.v, self.u) };
        let all = SplineSpace::restricted(grid, 3, -1.0, 1.0);
        // Support within the window, tested against an interval whose ends
        // at or beyond ±1 are unbounded.
        let inside = |j: i64, (a, b): (f64, f64)| {
            let (lo, hi) = (grid.knot(j).max(-1.0), grid.knot(j + 4).min(1.0));
            (a <= -1.0 || lo > a) && (b >= 1.0 || hi < b)
        };
        let mut f_indices = Vec::new();
        let mut g_indices = Vec::new();
        for j in all.indices() {
            if inside(j, left) {
                f_indices.push(j);
            } else if inside(j, right) {
                g_indices.push(j);
            } else {
                return Err(Error::BadCover(format!(
                    "spline B3[{j}] lies in neither U nor V; widen the overlap or refine the grid"
                )));
            }
        }
        if self.u.0 > self.v.0 {
            core::mem::swap(&mut f_indices, &mut g_indices);
        }
        Ok(PartitionOfUnity { f_indices, g_indices })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MvDegree {
    pub degree: usize,
    /// Dimensions of the three terms `A → B → C`.
    pub dims: [usize; 3],
    pub rank_first: usize,
    pub rank_second: usize,
    /// `dim ker(first)`.
    pub left_defect: usize,
    /// `dim ker(second) - rank(first)`.
    pub middle_defect: usize,
    /// `dim C - rank(second)`.
    pub right_defect: usize,
    /// `max |second ∘ first|`.
    pub composite: f64,
    /// `max |d ∘ map - map ∘ d|` over both maps.
    pub chain_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MvReport {
    pub variant: MvVariant,
    /// Betti numbers of the whole space, the two pieces and the overlap.
    pub betti_union: Vec<usize>,
    pub betti_u: Vec<usize>,
    pub betti_v: Vec<usize>,
    pub betti_overlap: Vec<usize>,
    /// Betti numbers of the whole space recovered from the long exact
    /// sequence (ranks of the induced maps plus connecting dimensions).
    pub reconstructed_union: Vec<usize>,
    pub euler_additive: bool,
    pub degrees: Vec<MvDegree>,
    pub exact: bool,
}

/// Matrix of the map sending each degree-`k` basis form of `src` to its
/// coordinates in `dst` (restriction or extension by zero).
fn transfer<S: LinAlg>(src: &FormLayout<S>, dst: &FormLayout<S>, k: usize) -> Result<DenseMatrix<S>> {
    let cols: Vec<Vec<S>> = (0..src.dim(k))
        .map(|j| {
            let t = src.basis_term(k, j);
            dst.coefficients(&crate::forms::FormExpr { terms: vec![t] }, k, Overflow::Fail)
        })
        .collect::<Result<_>>()?;
    Ok(DenseMatrix::from_columns(dst.dim(k), &cols))
}

fn block_diag<S: Scalar>(a: &DenseMatrix<S>, b: &DenseMatrix<S>) -> DenseMatrix<S> {
    let top = a.hstack(&DenseMatrix::zeros(a.rows(), b.cols()));
    let bottom = DenseMatrix::zeros(b.rows(), a.cols()).hstack(b);
    top.vstack(&bottom)
}

/// Rank of the map induced on cohomology by a chain map `f: A → B`.
fn induced_rank<S: LinAlg>(f: &DenseMatrix<S>, reps_a: &[Vec<S>], d_prev_b: Option<&DenseMatrix<S>>, tol: f64) -> usize {
    let boundaries = d_prev_b.map_or(0, |d| S::rank_info(d, tol).rank);
    if reps_a.is_empty() {
        return 0;
    }
    let images: Vec<Vec<S>> = reps_a.iter().map(|z| f.mul_vec(z)).collect();
    let img = DenseMatrix::from_columns(f.rows(), &images);
    let joint = match d_prev_b {
        Some(d) => img.hstack(d),
        None => img,
    };
    S::rank_info(&joint, tol).rank - boundaries
}

struct Pieces<S> {
    union: Complex<S>,
    u: Complex<S>,
    v: Complex<S>,
    overlap: Complex<S>,
}

fn check<S: LinAlg>(p: Pieces<S>, variant: MvVariant, opts: &CohomologyOptions) -> Result<MvReport> {
    let tol = opts.tolerance;
    let lay = |c: &Complex<S>| c.layout().cloned().expect("assembled from layout");
    let (lw, lu, lv, lo) = (lay(&p.union), lay(&p.u), lay(&p.v), lay(&p.overlap));
    let top = lw.top_degree();
    // Direct sum B = U ⊕ V.
    let bdiffs: Vec<DenseMatrix<S>> =
        (0..top).map(|k| block_diag(p.u.differential(k).unwrap(), p.v.differential(k).unwrap())).collect();
    let neg = |m: DenseMatrix<S>| m.scale(&(-S::one()));
    // first: A → B, second: B → C.
    let (a, c) = match variant {
        MvVariant::Compact => (&p.overlap, &p.union),
        _ => (&p.union, &p.overlap),
    };
    let mut firsts = Vec::new();
    let mut seconds = Vec::new();
    for k in 0..=top {
        let (f, g) = match variant {
            MvVariant::Compact => (
                transfer(&lo, &lu, k)?.vstack(&neg(transfer(&lo, &lv, k)?)),
                transfer(&lu, &lw, k)?.hstack(&transfer(&lv, &lw, k)?),
            ),
            _ => (
                transfer(&lw, &lu, k)?.vstack(&transfer(&lw, &lv, k)?),
                transfer(&lu, &lo, k)?.hstack(&neg(transfer(&lv, &lo, k)?)),
            ),
        };
        firsts.push(f);
        seconds.push(g);
    }
    let reports = |x: &Complex<S>| x.cohomology(opts);
    let ra = reports(a)?;
    let rc = reports(c)?;
    let b_complex = Complex::new(
        (0..=top).map(|k| vec![String::new(); p.u.dims()[k] + p.v.dims()[k]]).collect(),
        bdiffs.clone(),
        ComplexMeta::default(),
    )?;
    let rb = b_complex.cohomology(opts)?;
    let mut degrees = Vec::new();
    let mut exact = true;
    for k in 0..=top {
        let (f, g) = (&firsts[k], &seconds[k]);
        let rf = S::rank_info(f, tol).rank;
        let rg = S::rank_info(g, tol).rank;
        let dims = [f.cols(), f.rows(), g.rows()];
        let composite = g.mul(f).max_abs();
        let mut chain: f64 = 0.0;
        if k < top {
            let da = a.differential(k).unwrap();
            let db = &bdiffs[k];
            let dc = c.differential(k).unwrap();
            chain = chain.max(db.mul(f).sub(&firsts[k + 1].mul(da)).max_abs());
            chain = chain.max(dc.mul(g).sub(&seconds[k + 1].mul(db)).max_abs());
        }
        let d = MvDegree {
            degree: k,
            dims,
            rank_first: rf,
            rank_second: rg,
            left_defect: dims[0] - rf,
            middle_defect: (dims[1] - rg) - rf,
            right_defect: dims[2] - rg,
            composite,
            chain_residual: chain,
        };
        let zero = |x: f64| if S::MODE == crate::ScalarMode::Rational { x == 0.0 } else { x < 1e-12 };
        exact &= d.left_defect == 0 && d.middle_defect == 0 && d.right_defect == 0 && zero(composite) && zero(chain);
        degrees.push(d);
    }
    // Long exact sequence: recover the whole space from the pieces.
    let reps = |x: &Complex<S>, k: usize| {
        S::representatives(x.dims()[k], x.differential(k), if k > 0 { x.differential(k - 1) } else { None }, tol)
    };
    let b_prev = |k: usize| if k > 0 { Some(&bdiffs[k - 1]) } else { None };
    let c_prev = |k: usize| if k > 0 { c.differential(k - 1) } else { None };
    let hf: Vec<usize> = (0..=top).map(|k| induced_rank(&firsts[k], &reps(a, k), b_prev(k), tol)).collect();
    let hg: Vec<usize> = (0..=top).map(|k| induced_rank(&seconds[k], &reps(&b_complex, k), c_prev(k), tol)).collect();
    let reconstructed_union: Vec<usize> = (0..=top)
        .map(|k| match variant {
            MvVariant::Compact => hg[k] + ra.betti.get(k + 1).map_or(0, |b| b - hf[k + 1]),
            _ => hf[k] + if k > 0 { rc.betti[k - 1] - hg[k - 1] } else { 0 },
        })
        .collect();
    let euler = |b: &[usize]| b.iter().enumerate().map(|(k, &x)| if k % 2 == 0 { x as i64 } else { -(x as i64) }).sum::<i64>();
    let bu = p.u.cohomology(opts)?.betti;
    let bv = p.v.cohomology(opts)?.betti;
    let (betti_union, betti_overlap) = match variant {
        MvVariant::Compact => (rc.betti.clone(), ra.betti.clone()),
        _ => (ra.betti.clone(), rc.betti.clone()),
    };
    let euler_additive = euler(&betti_union) + euler(&betti_overlap) == euler(&bu) + euler(&bv);
    debug_assert_eq!(rb.betti.len(), top + 1);
    exact &= reconstructed_union == betti_union;
    Ok(MvReport {
        variant,
        betti_union,
        betti_u: bu,
        betti_v: bv,
        betti_overlap,
        reconstructed_union,
        euler_additive,
        degrees,
        exact,
    })
}

fn pieces<S: LinAlg>(
    base: &FormLayout<S>,
    cover: &CoverSpec,
    compact: bool,
    kappa: Option<&BasicOneForm>,
) -> Result<Pieces<S>> {
    let grid = product_grid(cover.bump_count()?);
    let build = |(a, b): (f64, f64), name: &str| -> Result<Complex<S>> {
        let l = product_layout(base, grid, a, b, compact);
        let meta = ComplexMeta { model: format!("{}/{name}", cover.model.name()), truncation: Some(cover.model.truncation) };
        let c = l.assemble(meta)?;
        match kappa {
            Some(k) => twisted::twist_checked(&c, k, Overflow::Fail),
            None => Ok(c),
        }
    };
    Ok(Pieces {
        union: build(cover.union(), "union")?,
        u: build(cover.u, "U")?,
        v: build(cover.v, "V")?,
        overlap: build(cover.overlap(), "overlap")?,
    })
}

/// Assemble the Mayer–Vietoris sequence of the cover in every degree and
/// measure its failure to be short exact.
pub fn mv_check(cover: &CoverSpec, variant: MvVariant) -> Result<MvReport> {
    cover.validate()?;
    let ModelKind::ProductCerf { base, .. } = &cover.model.kind else { unreachable!("validated") };
    let compact = variant == MvVariant::Compact;
    let kappa = match variant {
        MvVariant::Twisted => Some(models::tautness_one_form(base)?.pulled_back()),
        _ => None,
    };
    let opts = CohomologyOptions::default();
    match models::model_layout(base)? {
        ModelLayout::Exact(l) => check::<BigRational>(pieces(&l, cover, compact, kappa.as_ref())?, variant, &opts),
        ModelLayout::Float(l) => check::<f64>(pieces(&l, cover, compact, kappa.as_ref())?, variant, &opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kronecker_cover(bumps: u32) -> CoverSpec {
        let base = FoliationModel::kronecker(libm::sqrt(2.0), 8);
        CoverSpec::new(FoliationModel::product_cerf(base, bumps), (-1.0, 0.2), (-0.2, 1.0))
    }

    #[test]
    fn basic_and_compact_sequences_are_exact() {
        let cover = kronecker_cover(21);
        for v in [MvVariant::Basic, MvVariant::Compact, MvVariant::Twisted] {
            let r = mv_check(&cover, v).unwrap();
            assert!(r.exact, "{v:?}: {r:#?}");
            assert!(r.euler_additive);
            assert!(r.degrees.iter().all(|d| d.composite == 0.0));
        }
        let c = mv_check(&cover, MvVariant::Compact).unwrap();
        assert_eq!(c.betti_union, [0, 1, 1]);
        assert_eq!(c.reconstructed_union, [0, 1, 1]);
    }

    #[test]
    fn carriere_twisted_sequence() {
        let base = FoliationModel::carriere([[2, 1], [1, 1]], 1);
        let cover = CoverSpec::new(FoliationModel::product_cerf(base, 21), (-1.0, 0.2), (-0.2, 1.0));
        let r = mv_check(&cover, MvVariant::Twisted).unwrap();
        assert!(r.exact, "{r:#?}");
    }

    #[test]
    fn diagonal_cover() {
        let mut cover = kronecker_cover(5);
        cover.u = (-1.0, 1.0);
        cover.v = (-1.0, 1.0);
        let r = mv_check(&cover, MvVariant::Basic).unwrap();
        assert!(r.exact);
        assert!(r.degrees.iter().all(|d| d.left_defect == 0));
    }

    #[test]
    fn bad_covers() {
        assert!(matches!(kronecker_cover(5).validate(), Err(Error::BadCover(_))));
        let mut c = kronecker_cover(21);
        c.v = (0.5, 1.0);
        assert!(matches!(c.validate(), Err(Error::BadCover(_))));
        c.v = (-0.2, 0.9);
        assert!(matches!(c.validate(), Err(Error::BadCover(_))));
        let p = kronecker_cover(21).validate().unwrap();
        assert_eq!(p.f_indices.len() + p.g_indices.len(), 24 + 3);
    }
}
