//! Gauss–Legendre quadrature on panels.

use alloc::vec::Vec;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-order rule mapped onto a list of panels.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelRule {
    /// `order`-point rule on each `[breaks[i], breaks[i+1]]`.
    pub fn new(breaks: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for p in breaks.windows(2) {
            let (mid, half) = ((p[0] + p[1]) / 2.0, (p[1] - p[0]) / 2.0);
            for (xi, wi) in x.iter().zip(&w) {
                points.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        PanelRule { points, weights }
    }

    /// Uniform panels on `[a, b]`.
    pub fn uniform(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let breaks: Vec<f64> = (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect();
        Self::new(&breaks, order)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Split every panel in two.
pub fn refine(breaks: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * breaks.len());
    for p in breaks.windows(2) {
        out.push(p[0]);
        out.push((p[0] + p[1]) / 2.0);
    }
    if let Some(&last) = breaks.last() {
        out.push(last);
    }
    out
}

/// Adaptive Gauss–Legendre on `[a, b]`: bisect until the 8- and 16-point
/// rules agree to `tol` relative to the running scale.
pub fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (x8, w8) = gauss_legendre(8);
    let (x16, w16) = gauss_legendre(16);
    let rule = |x: &[f64], w: &[f64], a: f64, b: f64| {
        let (m, h) = ((a + b) / 2.0, (b - a) / 2.0);
        x.iter().zip(w).map(|(xi, wi)| h * wi * f(m + h * xi)).sum::<f64>()
    };
    let mut stack = Vec::from([(a, b, 0u32)]);
    let mut total = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let coarse = rule(&x8, &w8, lo, hi);
        let fine = rule(&x16, &w16, lo, hi);
        if (fine - coarse).abs() <= tol * fine.abs().max(1.0) || depth >= 30 {
            total += fine;
        } else {
            let mid = (lo + hi) / 2.0;
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_degree_fifteen() {
        let r = PanelRule::uniform(-1.0, 1.0, 1, 8);
        let got = r.integrate(|x| libm::pow(x, 14.0) + x * x * x);
        assert!((got - 2.0 / 15.0).abs() < 1e-14);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_exponential() {
        let got = adaptive(&libm::exp, 0.0, 1.0, 1e-14);
        assert!((got - (core::f64::consts::E - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn refine_doubles_panels() {
        assert_eq!(refine(&[0.0, 1.0, 2.0]), [0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}
