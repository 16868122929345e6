//! Chart-level computations for a bundle-like metric: mean curvature form,
//! characteristic form, Rummler's formula, flow geodesibility and conformal
//! rescaling along the leaves.
//!
//! A chart has coordinates `z = (x_1..x_p, y_1..y_n)` with leaves
//! `{y = const}` and a block-diagonal metric `μ_F(x, y) ⊕ μ_T(y)`.
//! Derivatives are centered differences with step `h`; samples are taken on
//! a lattice kept `2h` away from the box boundary.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// A scalar function of the chart coordinates.
pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A vector or covector field on the chart.
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

pub fn field(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Field {
    Arc::new(f)
}

pub fn vector_field(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> VectorField {
    Arc::new(f)
}

#[derive(Clone)]
pub struct ChartMetric {
    pub leaf_dim: usize,
    pub transverse_dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// `p × p` entries, row-major, functions of all coordinates.
    leaf: Vec<Field>,
    /// `n × n` entries, row-major, functions of `y` only.
    transverse: Vec<Field>,
    /// Accumulated conformal exponent `φ`: the leaf block is `e^{2φ/p} μ_F`.
    conformal: Option<Field>,
}

impl core::fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ChartMetric")
            .field("leaf_dim", &self.leaf_dim)
            .field("transverse_dim", &self.transverse_dim)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

/// Sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Finite-difference step.
    pub h: f64,
    /// Sample points per axis.
    pub samples: usize,
}

impl Grid {
    pub fn new(h: f64) -> Self {
        Grid { h, samples: 5 }
    }
}

impl ChartMetric {
    /// `transverse` entries receive only the `y` coordinates.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, leaf_dim: usize, leaf: Vec<Field>, transverse: Vec<Field>) -> Result<Self> {
        let m = lo.len();
        if hi.len() != m || leaf_dim > m {
            return Err(Error::ShapeMismatch(format!("box has {m} lower and {} upper bounds", hi.len())));
        }
        let n = m - leaf_dim;
        if leaf.len() != leaf_dim * leaf_dim || transverse.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} leaf and {} transverse entries, got {} and {}",
                leaf_dim * leaf_dim,
                n * n,
                leaf.len(),
                transverse.len()
            )));
        }
        Ok(ChartMetric { leaf_dim, transverse_dim: n, lo, hi, leaf, transverse, conformal: None })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Full `m × m` metric at `z`.
    pub fn at(&self, z: &[f64]) -> DMatrix<f64> {
        let (p, m) = (self.leaf_dim, self.dim());
        let y = &z[p..];
        let scale = self.conformal.as_ref().map_or(1.0, |f| libm::exp(2.0 * f(z) / p as f64));
        let mut g = DMatrix::zeros(m, m);
        for i in 0..p {
            for j in 0..p {
                g[(i, j)] = scale * (self.leaf[i * p + j])(z);
            }
        }
        let n = self.transverse_dim;
        for i in 0..n {
            for j in 0..n {
                g[(p + i, p + j)] = (self.transverse[i * n + j])(y);
            }
        }
        g
    }

    /// Lattice of sample points with a `2h` margin.
    pub fn sample_points(&self, grid: &Grid) -> Vec<Vec<f64>> {
        let m = self.dim();
        let s = grid.samples.max(1);
        let axis: Vec<Vec<f64>> = (0..m)
            .map(|a| {
                let (lo, hi) = (self.lo[a] + 2.0 * grid.h, self.hi[a] - 2.0 * grid.h);
                if s == 1 {
                    vec![(lo + hi) / 2.0]
                } else {
                    (0..s).map(|i| lo + (hi - lo) * i as f64 / (s - 1) as f64).collect()
                }
            })
            .collect();
        let mut pts = vec![Vec::new()];
        for ax in &axis {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    ax.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        pts
    }

    /// Minimum eigenvalue over the sample lattice.
    pub fn check_positive(&self, grid: &Grid) -> Result<f64> {
        let mut min = f64::INFINITY;
        for z in self.sample_points(grid) {
            let g = self.at(&z);
            let e = SymmetricEigen::new(g).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if !(e > 1e-8) {
                return Err(Error::SingularMetric(e));
            }
            min = min.min(e);
        }
        Ok(min)
    }

    /// `∂_a g` by centered differences.
    fn metric_derivative(&self, z: &[f64], a: usize, h: f64) -> DMatrix<f64> {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[a] += h;
        zm[a] -= h;
        (self.at(&zp) - self.at(&zm)) / (2.0 * h)
    }

    /// `Γ^a_{bc}` indexed `[a][b][c]`.
    pub fn christoffel(&self, z: &[f64], h: f64) -> Result<Vec<Vec<Vec<f64>>>> {
        let m = self.dim();
        let g = self.at(z);
        let inv = g.clone().try_inverse().ok_or(Error::SingularMetric(0.0))?;
        let dg: Vec<DMatrix<f64>> = (0..m).map(|a| self.metric_derivative(z, a, h)).collect();
        let mut gamma = vec![vec![vec![0.0; m]; m]; m];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let mut s = 0.0;
                    for d in 0..m {
                        s += inv[(a, d)] * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]);
                    }
                    gamma[a][b][c] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }

    /// Oriented orthonormal frame of the leaf: modified Gram–Schmidt on
    /// `∂_{x_1}, …, ∂_{x_p}`, two passes.
    pub fn leaf_frame(&self, z: &[f64]) -> Result<Vec<Vec<f64>>> {
        let (p, m) = (self.leaf_dim, self.dim());
        let g = self.at(z);
        let ip = |u: &[f64], v: &[f64]| {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += u[i] * g[(i, j)] * v[j];
                }
            }
            s
        };
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(p);
        for i in 0..p {
            let mut v = vec![0.0; m];
            v[i] = 1.0;
            for _ in 0..2 {
                for e in &frame {
                    let c = ip(&v, e);
                    v.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
                }
            }
            let n = libm::sqrt(ip(&v, &v));
            if !(n > 1e-14) {
                return Err(Error::SingularMetric(n));
            }
            v.iter_mut().for_each(|a| *a /= n);
            frame.push(v);
        }
        Ok(frame)
    }

    /// Conformal change of the leaf block by `e^{2f/p}`. `f` must be basic.
    pub fn conformal_rescale(&self, f: Field, grid: &Grid) -> Result<ChartMetric> {
        let p = self.leaf_dim;
        let mut variation: f64 = 0.0;
        for z in self.sample_points(grid) {
            let mut z0 = z.clone();
            z0[..p].copy_from_slice(&self.lo[..p]);
            variation = variation.max((f(&z) - f(&z0)).abs());
        }
        if variation > 1e-12 {
            return Err(Error::NotBasic(variation));
        }
        let conformal = match &self.conformal {
            None => f,
            Some(old) => {
                let old = old.clone();
                field(move |z| old(z) + f(z))
            }
        };
        Ok(ChartMetric { conformal: Some(conformal), ..self.clone() })
    }
}

fn lower(g: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..v.len()).map(|a| (0..v.len()).map(|b| g[(a, b)] * v[b]).sum()).collect()
}

/// Mean curvature covector sampled on the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurvatureForm {
    pub points: Vec<Vec<f64>>,
    /// `κ_μ` at each point, all `m` components.
    pub covectors: Vec<Vec<f64>>,
    /// Largest leafwise component (should vanish).
    pub leafwise_max: f64,
}

impl MeanCurvatureForm {
    /// `max |κ - other|` over samples and components.
    pub fn distance(&self, other: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
        self.points
            .iter()
            .zip(&self.covectors)
            .map(|(z, k)| k.iter().zip(other(z)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// `κ_μ` at one point: `κ(Y) = μ(Y, H)`, `H = Σ π^⊥ ∇_{E_i} E_i`.
pub fn mean_curvature_at(metric: &ChartMetric, z: &[f64], h: f64) -> Result<Vec<f64>> {
    let (p, m) = (metric.leaf_dim, metric.dim());
    let frame = metric.leaf_frame(z)?;
    let gamma = metric.christoffel(z, h)?;
    let mut hv = vec![0.0; m];
    for (i, e) in frame.iter().enumerate() {
        // Derivative of the frame field along itself.
        let step = |s: f64| -> Result<Vec<f64>> {
            let zz: Vec<f64> = z.iter().zip(e).map(|(a, b)| a + s * h * b).collect();
            Ok(metric.leaf_frame(&zz)?.swap_remove(i))
        };
        let (ep, em) = (step(1.0)?, step(-1.0)?);
        for b in 0..m {
            let mut v = (ep[b] - em[b]) / (2.0 * h);
            for a in 0..m {
                for c in 0..m {
                    v += gamma[b][a][c] * e[a] * e[c];
                }
            }
            hv[b] += v;
        }
    }
    // Block-diagonal metric: the normal bundle is spanned by ∂_y.
    hv[..p].iter_mut().for_each(|v| *v = 0.0);
    Ok(lower(&metric.at(z), &hv))
}

pub fn mean_curvature(metric: &ChartMetric, grid: &Grid) -> Result<MeanCurvatureForm> {
    metric.check_positive(grid)?;
    let p = metric.leaf_dim;
    let points = metric.sample_points(grid);
    let covectors = points.iter().map(|z| mean_curvature_at(metric, z, grid.h)).collect::<Result<Vec<_>>>()?;
    let leafwise_max = covectors.iter().flat_map(|k| k[..p].iter().map(|v| v.abs())).fold(0.0, f64::max);
    Ok(MeanCurvatureForm { points, covectors, leafwise_max })
}

fn determinant(rows: Vec<Vec<f64>>) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

/// `χ_μ(Y_1, …, Y_p) = det μ(Y_i, E_j)` at `z`.
pub fn characteristic_form(metric: &ChartMetric, z: &[f64], vectors: &[Vec<f64>]) -> Result<f64> {
    if vectors.len() != metric.leaf_dim {
        return Err(Error::ShapeMismatch(format!("need {} vectors, got {}", metric.leaf_dim, vectors.len())));
    }
    let g = metric.at(z);
    let frame = metric.leaf_frame(z)?;
    let rows = vectors
        .iter()
        .map(|y| {
            let yl = lower(&g, y);
            frame.iter().map(|e| yl.iter().zip(e).map(|(a, b)| a * b).sum()).collect()
        })
        .collect();
    Ok(determinant(rows))
}

/// Components `χ_{a_1…a_p}` for a list of index tuples.
fn chi_component(metric: &ChartMetric, z: &[f64], idx: &[usize]) -> Result<f64> {
    let m = metric.dim();
    let vs: Vec<Vec<f64>> = idx
        .iter()
        .map(|&a| {
            let mut v = vec![0.0; m];
            v[a] = 1.0;
            v
        })
        .collect();
    characteristic_form(metric, z, &vs)
}

/// `dχ(V_0, …, V_p)` at `z` from centered differences of the components.
fn d_chi(metric: &ChartMetric, z: &[f64], vectors: &[Vec<f64>], h: f64) -> Result<f64> {
    let (m, p) = (metric.dim(), metric.leaf_dim);
    let mut total = 0.0;
    let mut idx = vec![0usize; p + 1];
    loop {
        let coeff: f64 = idx.iter().zip(vectors).map(|(&a, v)| v[a]).product();
        if coeff != 0.0 {
            // (dχ)_{a_0…a_p} = Σ_j (-1)^j ∂_{a_j} χ_{a_0…â_j…a_p}
            let mut comp = 0.0;
            for j in 0..=p {
                let rest: Vec<usize> = idx.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, &a)| a).collect();
                let mut zp = z.to_vec();
                let mut zm = z.to_vec();
                zp[idx[j]] += h;
                zm[idx[j]] -= h;
                let d = (chi_component(metric, &zp, &rest)? - chi_component(metric, &zm, &rest)?) / (2.0 * h);
                comp += if j % 2 == 0 { d } else { -d };
            }
            total += coeff * comp;
        }
        // Next multi-index.
        let mut k = 0;
        loop {
            if k > p {
                return Ok(total);
            }
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RummlerReport {
    pub h: f64,
    /// `max |dχ(Z, Y_1, …, Y_p) + χ(Y)κ(Z)|` over samples, coordinate `Z`
    /// and the tuples `E` and `∂_x`.
    pub max_residual: f64,
}

/// Rummler's identity with the tangent vectors in the trailing slots.
pub fn rummler_residual(metric: &ChartMetric, grid: &Grid) -> Result<RummlerReport> {
    metric.check_positive(grid)?;
    let (m, p) = (metric.dim(), metric.leaf_dim);
    let mut worst: f64 = 0.0;
    for z in metric.sample_points(grid) {
        let kappa = mean_curvature_at(metric, &z, grid.h)?;
        let coords: Vec<Vec<f64>> = (0..p)
            .map(|i| {
                let mut v = vec![0.0; m];
                v[i] = 1.0;
                v
            })
            .collect();
        for tuple in [metric.leaf_frame(&z)?, coords] {
            let chi = characteristic_form(metric, &z, &tuple)?;
            for c in 0..m {
                let mut zv = vec![0.0; m];
                zv[c] = 1.0;
                let mut vs = vec![zv];
                vs.extend(tuple.iter().cloned());
                let r = d_chi(metric, &z, &vs, grid.h)? + chi * kappa[c];
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(RummlerReport { h: grid.h, max_residual: worst })
}

/// Residuals of the equivalent minimality conditions for a flow.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FlowCheck {
    /// `max |∇_W W|`.
    pub geodesic_defect: f64,
    /// `max |π^⊥ ∇_V V| / |V|²`.
    pub orbit_curvature: f64,
    /// `max |θ(W)χ|` with `χ = μ(·, W)`.
    pub theta_chi: f64,
    /// `max |χ(V) - 1|` and `max |i_V dχ|` for a supplied candidate.
    pub candidate_normalization: Option<f64>,
    pub candidate_residual: Option<f64>,
    /// `max |L_V μ|`.
    pub killing: f64,
    pub threshold: f64,
    /// Conditions (ii), (iii), (iv) pass or fail together.
    pub agree: bool,
}

fn norm_mu(g: &DMatrix<f64>, v: &[f64]) -> f64 {
    libm::sqrt(lower(g, v).iter().zip(v).map(|(a, b)| a * b).sum::<f64>().max(0.0))
}

fn norm_co(g: &DMatrix<f64>, w: &[f64]) -> f64 {
    let inv = g.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(w.len(), w.len()));
    norm_mu(&inv, w)
}

/// `∂_a F` of a vector field by centered differences.
fn jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, z: &[f64], h: f64) -> Vec<Vec<f64>> {
    (0..z.len())
        .map(|a| {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[a] += h;
            zm[a] -= h;
            f(&zp).iter().zip(f(&zm)).map(|(x, y)| (x - y) / (2.0 * h)).collect()
        })
        .collect()
}

/// `∇_U U` for a vector field `U`.
fn self_covariant(metric: &ChartMetric, u: &dyn Fn(&[f64]) -> Vec<f64>, z: &[f64], h: f64) -> Result<Vec<f64>> {
    let m = metric.dim();
    let gamma = metric.christoffel(z, h)?;
    let du = jacobian(u, z, h);
    let uz = u(z);
    Ok((0..m)
        .map(|b| {
            let mut s = 0.0;
            for a in 0..m {
                s += uz[a] * du[a][b];
                for c in 0..m {
                    s += gamma[b][a][c] * uz[a] * uz[c];
                }
            }
            s
        })
        .collect())
}

/// Minimality and Killing checks for the flow of `v` in the full metric.
pub fn flow_geodesibility(metric: &ChartMetric, v: VectorField, candidate: Option<VectorField>, grid: &Grid) -> Result<FlowCheck> {
    metric.check_positive(grid)?;
    let m = metric.dim();
    let h = grid.h;
    let pts = metric.sample_points(grid);
    let mut scale: f64 = 1.0;
    for z in &pts {
        let n = norm_mu(&metric.at(z), &v(z));
        if !(n >= 1e-12) {
            return Err(Error::ZeroVector(n));
        }
        scale = scale.max(n);
    }
    let mc = metric.clone();
    let vv = v.clone();
    let w = move |z: &[f64]| {
        let x = vv(z);
        let n = norm_mu(&mc.at(z), &x);
        x.into_iter().map(|c| c / n).collect::<Vec<f64>>()
    };
    let mc = metric.clone();
    let w2 = w.clone();
    let chi = move |z: &[f64]| lower(&mc.at(z), &w2(z));
    let (mut geo, mut orbit, mut theta, mut killing) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut cand_norm, mut cand_res) = (0.0f64, 0.0f64);
    for z in &pts {
        let g = metric.at(z);
        let wz = w(z);
        geo = geo.max(norm_mu(&g, &self_covariant(metric, &w, z, h)?));
        let vz = v(z);
        let vn = norm_mu(&g, &vz);
        let vn2 = vn * vn;
        let nvv = self_covariant(metric, &*v, z, h)?;
        let along: f64 = lower(&g, &nvv).iter().zip(&vz).map(|(a, b)| a * b).sum::<f64>() / vn2;
        let perp: Vec<f64> = nvv.iter().zip(&vz).map(|(a, b)| a - along * b).collect();
        orbit = orbit.max(norm_mu(&g, &perp) / vn2);
        // θ(W)χ = i_W dχ + d(χ(W)).
        let dchi = jacobian(&chi, z, h);
        let cw = |zz: &[f64]| vec![chi(zz).iter().zip(w(zz)).map(|(a, b)| a * b).sum::<f64>()];
        let dcw = jacobian(&cw, z, h);
        let th: Vec<f64> = (0..m)
            .map(|c| (0..m).map(|a| wz[a] * (dchi[a][c] - dchi[c][a])).sum::<f64>() + dcw[c][0])
            .collect();
        theta = theta.max(norm_co(&g, &th));
        if let Some(cand) = &candidate {
            let cz = cand(z);
            cand_norm = cand_norm.max((cz.iter().zip(&vz).map(|(a, b)| a * b).sum::<f64>() - 1.0).abs());
            let dc = jacobian(&**cand, z, h);
            let iv: Vec<f64> = (0..m).map(|c| (0..m).map(|a| vz[a] * (dc[a][c] - dc[c][a])).sum()).collect();
            cand_res = cand_res.max(iv.iter().fold(0.0, |acc: f64, x| acc.max(x.abs())));
        }
        // (L_V μ)_{ab} = V^c ∂_c g_ab + g_cb ∂_a V^c + g_ac ∂_b V^c
        let dv = jacobian(&*v, z, h);
        let dg: Vec<DMatrix<f64>> = (0..m).map(|c| metric.metric_derivative(z, c, h)).collect();
        for a in 0..m {
            for b in 0..m {
                let mut s = 0.0;
                for c in 0..m {
                    s += vz[c] * dg[c][(a, b)] + g[(c, b)] * dv[a][c] + g[(a, c)] * dv[b][c];
                }
                killing = killing.max(s.abs());
            }
        }
    }
    let threshold = 1e-6 * scale;
    let verdicts = [geo < threshold, orbit < threshold, theta < threshold];
    Ok(FlowCheck {
        geodesic_defect: geo,
        orbit_curvature: orbit,
        theta_chi: theta,
        candidate_normalization: candidate.as_ref().map(|_| cand_norm),
        candidate_residual: candidate.as_ref().map(|_| cand_res),
        killing,
        threshold,
        agree: verdicts.iter().all(|&x| x == verdicts[0]),
    })
}

/// `max |κ_{μ'} - (κ_μ - df)|` for `μ' = conformal_rescale(μ, f)`, with
/// `df` supplied analytically.
pub fn rescaling_defect(metric: &ChartMetric, f: Field, df: VectorField, grid: &Grid) -> Result<f64> {
    let before = mean_curvature(metric, grid)?;
    let after = mean_curvature(&metric.conformal_rescale(f, grid)?, grid)?;
    Ok(after
        .points
        .iter()
        .zip(after.covectors.iter().zip(&before.covectors))
        .map(|(z, (k1, k0))| {
            let d = df(z);
            (0..k1.len()).map(|c| (k1[c] - (k0[c] - d[c])).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

/// `e^{2y} dx² + dy²` on `[-1, 1]²`.
pub fn warped_chart() -> ChartMetric {
    ChartMetric::new(
        vec![-1.0, -1.0],
        vec![1.0, 1.0],
        1,
        vec![field(|z| libm::exp(2.0 * z[1]))],
        vec![field(|_| 1.0)],
    )
    .expect("shapes are fixed")
}

/// Local chart `(w; t, s)` of the Carrière flow with metric
/// `λ^{2t} dw² + dt² + λ^{-2t} ds²`, flow along `w`.
pub fn carriere_chart(log_lambda: f64) -> ChartMetric {
    ChartMetric::new(
        vec![-1.0, -1.0, -1.0],
        vec![1.0, 1.0, 1.0],
        1,
        vec![field(move |z| libm::exp(2.0 * log_lambda * z[1]))],
        vec![
            field(|_| 1.0),
            field(|_| 0.0),
            field(|_| 0.0),
            field(move |y| libm::exp(-2.0 * log_lambda * y[0])),
        ],
    )
    .expect("shapes are fixed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(m: usize, p: usize) -> ChartMetric {
        let n = m - p;
        let id = |k: usize| (0..k * k).map(|i| if i % (k + 1) == 0 { field(|_| 1.0) } else { field(|_| 0.0) }).collect();
        ChartMetric::new(vec![0.0; m], vec![1.0; m], p, id(p), id(n)).unwrap()
    }

    #[test]
    fn warped_kappa_is_minus_dy() {
        for h in [1e-2, 5e-3] {
            let k = mean_curvature(&warped_chart(), &Grid::new(h)).unwrap();
            let err = k.distance(|_| vec![0.0, -1.0]);
            assert!(err < 5.0 * h * h, "h={h} err={err}");
            assert!(k.leafwise_max < 1e-12);
        }
    }

    #[test]
    fn product_metric_is_minimal() {
        let m = ChartMetric::new(
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
            2,
            vec![field(|z| 2.0 + z[0]), field(|z| 0.1 * z[1]), field(|z| 0.1 * z[1]), field(|_| 1.5)],
            vec![field(|y| 1.0 + y[0] * y[0])],
        )
        .unwrap();
        let g = Grid::new(1e-2);
        assert!(mean_curvature(&m, &g).unwrap().distance(|_| vec![0.0; 3]) < 1e-12);
        assert!(rummler_residual(&m, &g).unwrap().max_residual < 1e-10);
    }

    #[test]
    fn characteristic_form_is_alternating() {
        let m = ChartMetric::new(
            vec![0.0; 3],
            vec![1.0; 3],
            2,
            vec![field(|z| 2.0 + z[2]), field(|_| 0.3), field(|_| 0.3), field(|z| 1.0 + z[0])],
            vec![field(|_| 1.0)],
        )
        .unwrap();
        let z = [0.4, 0.5, 0.6];
        let e = m.leaf_frame(&z).unwrap();
        assert!((characteristic_form(&m, &z, &e).unwrap() - 1.0).abs() < 1e-12);
        let twice = vec![e[0].iter().map(|x| 2.0 * x).collect(), e[1].clone()];
        assert!((characteristic_form(&m, &z, &twice).unwrap() - 2.0).abs() < 1e-12);
        assert!(characteristic_form(&m, &z, &[e[0].clone(), e[0].clone()]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rummler_on_warped_chart() {
        let r1 = rummler_residual(&warped_chart(), &Grid::new(1e-2)).unwrap().max_residual;
        let r2 = rummler_residual(&warped_chart(), &Grid::new(5e-3)).unwrap().max_residual;
        assert!(r1 < 1e-3);
        assert!(libm::log2(r1 / r2) >= 1.8, "r1={r1} r2={r2}");
    }

    #[test]
    fn conformal_law() {
        let g = Grid::new(1e-2);
        let base = warped_chart();
        let cases: [(Field, VectorField); 3] = [
            (field(|z| z[1]), vector_field(|_| vec![0.0, 1.0])),
            (field(|z| -z[1]), vector_field(|_| vec![0.0, -1.0])),
            (field(|z| libm::sin(z[1])), vector_field(|z| vec![0.0, libm::cos(z[1])])),
        ];
        for (f, df) in cases {
            let e = rescaling_defect(&base, f, df, &g).unwrap();
            assert!(e < 5.0 * g.h * g.h, "err={e}");
        }
        let flat = base.conformal_rescale(field(|z| -z[1]), &g).unwrap();
        assert!(mean_curvature(&flat, &g).unwrap().distance(|_| vec![0.0, 0.0]) < 5e-4);
        assert!(matches!(base.conformal_rescale(field(|z| z[0]), &g), Err(Error::NotBasic(_))));
    }

    #[test]
    fn rescalings_compose() {
        let g = Grid::new(1e-2);
        let base = warped_chart();
        let f = field(|z| 0.5 * z[1]);
        let h = field(|z| libm::sin(z[1]));
        let (f2, h2) = (f.clone(), h.clone());
        let twice = base.conformal_rescale(f, &g).unwrap().conformal_rescale(h, &g).unwrap();
        let once = base.conformal_rescale(field(move |z| f2(z) + h2(z)), &g).unwrap();
        for z in base.sample_points(&g) {
            assert_eq!(twice.at(&z), once.at(&z));
        }
    }

    #[test]
    fn flows() {
        let g = Grid::new(1e-2);
        let r = flow_geodesibility(&flat(2, 1), vector_field(|_| vec![1.0, 0.0]), None, &g).unwrap();
        assert!(r.geodesic_defect < 1e-12 && r.killing < 1e-12 && r.theta_chi < 1e-12);
        let slope = libm::sqrt(2.0);
        let r = flow_geodesibility(&flat(2, 1), vector_field(move |_| vec![1.0, slope]), None, &g).unwrap();
        assert!(r.killing < 1e-12 && r.geodesic_defect < 1e-12 && r.agree);
        let ln = libm::log((3.0 + libm::sqrt(5.0)) / 2.0);
        let c = carriere_chart(ln);
        let r = flow_geodesibility(&c, vector_field(|_| vec![1.0, 0.0, 0.0]), None, &g).unwrap();
        assert!((r.geodesic_defect - ln).abs() < 1e-3, "{r:?}");
        assert!(r.agree);
        assert!((r.theta_chi - ln).abs() < 1e-3);
        let k = mean_curvature(&c, &g).unwrap();
        assert!(k.distance(|_| vec![0.0, -ln, 0.0]) < 1e-3);
        assert!(matches!(
            flow_geodesibility(&flat(2, 1), vector_field(|_| vec![0.0, 0.0]), None, &g),
            Err(Error::ZeroVector(_))
        ));
    }

    #[test]
    fn gluck_sullivan_candidate() {
        let g = Grid::new(1e-2);
        let r = flow_geodesibility(&flat(2, 1), vector_field(|_| vec![1.0, 0.0]), Some(vector_field(|_| vec![1.0, 0.0])), &g)
            .unwrap();
        assert_eq!(r.candidate_normalization, Some(0.0));
        assert!(r.candidate_residual.unwrap() < 1e-12);
    }
}
