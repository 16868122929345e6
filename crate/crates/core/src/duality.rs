//! The integration pairing `∫ α∧β∧χ` between compactly supported and
//! twisted basic classes.
//!
//! The leafwise factor `χ` contributes total volume 1 per fundamental
//! domain, so an entry is the integral over the transverse model of the
//! top-degree coefficient of `α∧β`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::chaincore::{truncation_sweep, CohomologyOptions, GradedComplex, Growth};
use crate::error::{Error, Result};
use crate::forms::{Domain, FormLayout, FunctionSpace};
use crate::linalg::singular_values;
use crate::matrix::DenseMatrix;
use crate::models::{self, FoliationModel, ModelKind, SphereVariant};
use crate::quadrature::{refine, PanelRule};
use crate::twisted;

pub const QUADRATURE_ORDER: usize = 8;
pub const MAX_REFINEMENTS: usize = 3;
pub const STABILITY_TOLERANCE: f64 = 1e-6;
pub const NONDEGENERACY_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuadratureSpec {
    pub order: usize,
    /// Panels per transverse variable in the accepted grid.
    pub panels: Vec<usize>,
    pub refinements: usize,
    /// Relative change of the entries under the last doubling.
    pub relative_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PairingMatrix {
    pub degree: usize,
    /// Degree of the twisted side, `n - degree`.
    pub dual_degree: usize,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub quadrature: QuadratureSpec,
}

impl PairingMatrix {
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// `σ_min / σ_max`, 0 for an empty or non-square matrix with a kernel.
    pub fn sigma_ratio(&self) -> f64 {
        if self.rows == 0 && self.cols == 0 {
            return 1.0;
        }
        if !self.is_square() {
            return 0.0;
        }
        let max = self.singular_values.first().copied().unwrap_or(0.0);
        let min = self.singular_values.last().copied().unwrap_or(0.0);
        if max > 0.0 {
            min / max
        } else {
            0.0
        }
    }

    pub fn nondegenerate(&self) -> bool {
        self.is_square() && (self.rows == 0 || self.sigma_ratio() > NONDEGENERACY_RATIO)
    }

    pub fn condition_number(&self) -> f64 {
        let r = self.sigma_ratio();
        if r > 0.0 {
            1.0 / r
        } else {
            f64::INFINITY
        }
    }
}

fn initial_breaks(la: &FormLayout<f64>, lb: &FormLayout<f64>) -> Result<Vec<Vec<f64>>> {
    if la.variables != lb.variables {
        return Err(Error::ShapeMismatch("paired layouts live on different transversals".into()));
    }
    la.variables
        .iter()
        .enumerate()
        .map(|(v, var)| {
            Ok(match var.domain {
                Domain::Circle => {
                    let order = [la, lb]
                        .iter()
                        .flat_map(|l| l.degrees.iter().flatten())
                        .filter_map(|b| match b.spaces.get(v) {
                            Some(FunctionSpace::Trig { order }) => Some(*order as usize),
                            _ => None,
                        })
                        .max()
                        .unwrap_or(0);
                    let p = 2 * order + 2;
                    (0..=p).map(|i| core::f64::consts::TAU * i as f64 / p as f64).collect()
                }
                Domain::Interval => vec![-1.0, 0.0, 1.0],
                Domain::SplineWindow(grid) => (0..=grid.intervals as i64).map(|i| grid.knot(i)).collect(),
            })
        })
        .collect()
}

/// `∫ top(α_i ∧ β_j)` on a tensor grid.
fn integrate(
    la: &FormLayout<f64>,
    ka: usize,
    alphas: &[Vec<f64>],
    lb: &FormLayout<f64>,
    kb: usize,
    betas: &[Vec<f64>],
    breaks: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let rules: Vec<PanelRule> = breaks.iter().map(|b| PanelRule::new(b, QUADRATURE_ORDER)).collect();
    let mut out = vec![vec![0.0; betas.len()]; alphas.len()];
    let mut idx = vec![0usize; rules.len()];
    if rules.iter().any(|r| r.points.is_empty()) {
        return out;
    }
    loop {
        let point: Vec<f64> = idx.iter().zip(&rules).map(|(&i, r)| r.points[i]).collect();
        let w: f64 = idx.iter().zip(&rules).map(|(&i, r)| r.weights[i]).product();
        let ea: Vec<_> = alphas.iter().map(|a| la.evaluate(ka, a, &point)).collect();
        let eb: Vec<_> = betas.iter().map(|b| lb.evaluate(kb, b, &point)).collect();
        for (i, a) in ea.iter().enumerate() {
            for (j, b) in eb.iter().enumerate() {
                out[i][j] += w * la.wedge_top(a, b);
            }
        }
        let mut v = 0;
        loop {
            if v == idx.len() {
                return out;
            }
            idx[v] += 1;
            if idx[v] < rules[v].points.len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}

/// Pairing matrix of explicit cocycles, refining the grid until stable.
pub fn pair_forms(
    la: &FormLayout<f64>,
    ka: usize,
    alphas: &[Vec<f64>],
    lb: &FormLayout<f64>,
    kb: usize,
    betas: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, QuadratureSpec)> {
    let mut breaks = initial_breaks(la, lb)?;
    let mut current = integrate(la, ka, alphas, lb, kb, betas, &breaks);
    let mut change = f64::INFINITY;
    for refinement in 1..=MAX_REFINEMENTS {
        let finer: Vec<Vec<f64>> = breaks.iter().map(|b| refine(b)).collect();
        let next = integrate(la, ka, alphas, lb, kb, betas, &finer);
        let scale = next.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = next.iter().flatten().zip(current.iter().flatten()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        change = if scale > 0.0 { diff / scale } else { diff };
        breaks = finer;
        current = next;
        if change < STABILITY_TOLERANCE {
            let spec = QuadratureSpec {
                order: QUADRATURE_ORDER,
                panels: breaks.iter().map(|b| b.len().saturating_sub(1)).collect(),
                refinements: refinement,
                relative_change: change,
            };
            return Ok((current, spec));
        }
    }
    Err(Error::QuadratureUnstable(change))
}

/// The two sides of the duality for a model: compactly supported basic
/// forms and `κ`-twisted basic forms.
pub struct DualityData {
    pub compact: GradedComplex,
    pub twisted: GradedComplex,
    pub codim: usize,
}

/// Compact side and twisted side of the pairing for a catalogue model. With
/// `swapped`, ProductCerf models put the compact support on the twisted side.
pub fn duality_data(m: &FoliationModel, swapped: bool) -> Result<DualityData> {
    m.validate()?;
    let codim = m.codim();
    let (compact, open, kappa) = match &m.kind {
        ModelKind::ProductCerf { base, .. } => {
            let kappa = models::tautness_one_form(base)?.pulled_back();
            let compact = models::build_compact_complex(m)?;
            let open = models::build_basic_complex(m)?;
            if swapped {
                let tw = twisted::twist_complex(&compact, &kappa)?;
                return Ok(DualityData { compact: open, twisted: tw, codim });
            }
            (compact, open, kappa)
        }
        ModelKind::SphereIsometricFlow { .. } => (
            models::build_sphere_complex(m, SphereVariant::CompactRegular)?,
            models::build_sphere_complex(m, SphereVariant::Regular)?,
            models::tautness_one_form(m)?,
        ),
        _ => {
            let c = models::build_basic_complex(m)?;
            (c.clone(), c, models::tautness_one_form(m)?)
        }
    };
    let twisted = twisted::twist_complex(&open, &kappa)?;
    Ok(DualityData { compact, twisted, codim })
}

fn pairing_from(data: &DualityData, k: usize) -> Result<PairingMatrix> {
    let n = data.codim;
    if k > n {
        return Err(Error::DegreeOutOfRange(k));
    }
    let opts = CohomologyOptions::default();
    let rc = data.compact.cohomology(&opts)?;
    let rt = data.twisted.cohomology(&opts)?;
    let la = data.compact.float_layout().ok_or_else(|| Error::Unsupported("complex without layout".into()))?;
    let lb = data.twisted.float_layout().ok_or_else(|| Error::Unsupported("complex without layout".into()))?;
    let alphas = &rc.representatives[k];
    let betas = &rt.representatives[n - k];
    let (entries, quadrature) = pair_forms(&la, k, alphas, &lb, n - k, betas)?;
    let sv = if entries.is_empty() || entries[0].is_empty() {
        Vec::new()
    } else {
        singular_values(&DenseMatrix::from_rows(entries.clone()))
    };
    Ok(PairingMatrix {
        degree: k,
        dual_degree: n - k,
        rows: alphas.len(),
        cols: betas.len(),
        entries,
        singular_values: sv,
        quadrature,
    })
}

/// Pairing of `H^k_c` against `H^{n-k}_κ`.
pub fn pairing_matrix(m: &FoliationModel, k: usize) -> Result<PairingMatrix> {
    if k > m.codim() {
        return Err(Error::DegreeOutOfRange(k));
    }
    pairing_from(&duality_data(m, false)?, k)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PdDegree {
    pub degree: usize,
    pub betti_c: usize,
    pub betti_kappa: usize,
    pub dims_match: bool,
    pub nondegenerate: bool,
    pub sigma_ratio: f64,
    /// Degree `k` or `n - k` grows with the truncation and is not judged.
    pub excluded: bool,
    pub matrix: Option<PairingMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PdReport {
    pub model: String,
    pub codim: usize,
    pub degrees: Vec<PdDegree>,
    /// Compact support on the twisted side (ProductCerf only).
    pub swapped: Option<Vec<PdDegree>>,
    pub passed: bool,
}

/// Degrees of the untwisted basic complex whose dimension grows with the
/// truncation.
fn growing_degrees(m: &FoliationModel) -> Result<Vec<bool>> {
    let n = m.truncation;
    let sweep = truncation_sweep(
        |t| models::build_basic_complex(&m.with_truncation(t)),
        &[n, n + 1, n + 2],
        &CohomologyOptions::default(),
    )?;
    Ok(sweep.degrees.iter().map(|d| d.class == Growth::Growing).collect())
}

/// `growing_c` is indexed by compact-side degree, `growing_t` by
/// twisted-side degree.
fn degree_rows(data: &DualityData, growing_c: &[bool], growing_t: &[bool]) -> Result<Vec<PdDegree>> {
    let n = data.codim;
    let opts = CohomologyOptions::default();
    let bc = data.compact.cohomology(&opts)?.betti;
    let bt = data.twisted.cohomology(&opts)?.betti;
    (0..=n)
        .map(|k| {
            let excluded = growing_c.get(k).copied().unwrap_or(false) || growing_t.get(n - k).copied().unwrap_or(false);
            let (betti_c, betti_kappa) = (bc.get(k).copied().unwrap_or(0), bt.get(n - k).copied().unwrap_or(0));
            let dims_match = betti_c == betti_kappa;
            let matrix = if excluded { None } else { Some(pairing_from(data, k)?) };
            let (nondegenerate, sigma_ratio) = match &matrix {
                Some(p) => (p.nondegenerate(), p.sigma_ratio()),
                None => (false, 0.0),
            };
            Ok(PdDegree { degree: k, betti_c, betti_kappa, dims_match, nondegenerate, sigma_ratio, excluded, matrix })
        })
        .collect()
}

/// Dimension match and nondegeneracy in every stabilized degree.
pub fn pd_report(m: &FoliationModel) -> Result<PdReport> {
    let growing = growing_degrees(m)?;
    let data = duality_data(m, false)?;
    let (degrees, swapped) = match m.kind {
        ModelKind::ProductCerf { .. } => {
            // Compactly supported product degrees are the open ones shifted by one.
            let mut shifted = growing.clone();
            shifted.insert(0, false);
            let open = &growing[..];
            let direct = degree_rows(&data, &shifted, open)?;
            let swapped = degree_rows(&duality_data(m, true)?, open, &shifted)?;
            (direct, Some(swapped))
        }
        _ => (degree_rows(&data, &growing, &growing)?, None),
    };
    let ok = |rows: &[PdDegree]| rows.iter().all(|d| d.excluded || (d.dims_match && d.nondegenerate));
    let passed = ok(&degrees) && swapped.as_deref().map_or(true, ok);
    Ok(PdReport { model: format!("{}", m.name()), codim: data.codim, degrees, swapped, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{Factor, FormExpr, Overflow};

    const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

    #[test]
    fn carriere_pairing() {
        let m = FoliationModel::carriere(CAT, 8);
        let r = pd_report(&m).unwrap();
        assert!(r.passed, "{r:#?}");
        let p = pairing_matrix(&m, 0).unwrap();
        assert_eq!((p.rows, p.cols), (1, 1));
        assert!(p.entries[0][0].abs() > 1e-3);
    }

    #[test]
    fn catalogue_pairings() {
        for m in [
            FoliationModel::kronecker(libm::sqrt(2.0), 8),
            FoliationModel::kronecker(0.5, 6),
            FoliationModel::sphere(1, vec![1, 1], 6),
            FoliationModel::sphere(2, vec![1, 2, 1], 6),
            FoliationModel::product_cerf(FoliationModel::kronecker(libm::sqrt(2.0), 8), 5),
        ] {
            let r = pd_report(&m).unwrap();
            assert!(r.passed, "{r:#?}");
        }
    }

    #[test]
    fn ghys_excludes_growing_degree() {
        let r = pd_report(&FoliationModel::ghys(4)).unwrap();
        assert!(r.degrees[0].excluded && r.degrees[2].excluded);
        assert!(!r.degrees[1].excluded);
        let p = pd_report(&FoliationModel::product_cerf(FoliationModel::ghys(3), 4)).unwrap();
        assert!(p.degrees[1].excluded && p.degrees[3].excluded);
        assert!(!p.degrees[0].excluded && !p.degrees[2].excluded);
    }

    #[test]
    fn antisymmetry_on_frames() {
        // ∫ dθ∧β = -∫ β∧dθ on the Carrière transversal.
        let m = FoliationModel::carriere(CAT, 2);
        let l = match models::model_layout(&m).unwrap() {
            models::ModelLayout::Float(l) => l,
            _ => unreachable!(),
        };
        let a = l.coefficients(&FormExpr::term(vec![Factor::Const(1.0)], l.algebra.gen(0)), 1, Overflow::Fail).unwrap();
        let b = l
            .coefficients(&FormExpr::term(vec![Factor::Trig(vec![0.5, 1.0])], l.algebra.gen(1)), 1, Overflow::Fail)
            .unwrap();
        let (ab, _) = pair_forms(&l, 1, &[a.clone()], &l, 1, &[b.clone()]).unwrap();
        let (ba, _) = pair_forms(&l, 1, &[b], &l, 1, &[a]).unwrap();
        assert!((ab[0][0] + ba[0][0]).abs() < 1e-12);
        assert!((ab[0][0] - core::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn degree_out_of_range() {
        let m = FoliationModel::kronecker(libm::sqrt(2.0), 4);
        assert_eq!(pairing_matrix(&m, 2), Err(Error::DegreeOutOfRange(2)));
    }
}
