//! Gauss-Legendre rules and trapezoidal helpers.

use nalgebra::DVector;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(npts: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(npts >= 1);
    let mut nodes = vec![0.0; npts];
    let mut weights = vec![0.0; npts];
    let m = npts.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (npts as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(npts, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(npts, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[npts - 1 - i] = x;
        weights[i] = w;
        weights[npts - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A fixed-order rule mapped onto arbitrary panels.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(npts: usize) -> Self {
        let (nodes, weights) = gauss_legendre(npts);
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    pub fn integrate_vec<F: FnMut(f64) -> DVector<f64>>(
        &self,
        a: f64,
        b: f64,
        len: usize,
        mut f: F,
    ) -> DVector<f64> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = DVector::zeros(len);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.axpy(w * half, &f(mid + half * x), 1.0);
        }
        acc
    }
}

/// Adaptive vector quadrature: each panel is integrated with a 10- and a
/// 20-point rule and bisected while the two disagree by more than `tol`
/// (absolute, Euclidean norm) scaled by the panel's share of the interval.
pub fn adaptive_vec<F: FnMut(f64) -> DVector<f64>>(
    a: f64,
    b: f64,
    len: usize,
    tol: f64,
    max_depth: usize,
    f: &mut F,
) -> (DVector<f64>, usize) {
    let coarse = GaussRule::new(10);
    let fine = GaussRule::new(20);
    let mut total = DVector::zeros(len);
    let mut panels = 0;
    let mut stack = vec![(a, b, 0usize)];
    let width = b - a;
    while let Some((lo, hi, depth)) = stack.pop() {
        let c = coarse.integrate_vec(lo, hi, len, &mut *f);
        let d = fine.integrate_vec(lo, hi, len, &mut *f);
        let err = (&c - &d).norm();
        let allowed = tol * (hi - lo) / width;
        if err <= allowed || depth >= max_depth {
            total += d;
            panels += 1;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    (total, panels)
}

/// Dot product evaluated as if in twice the working precision
/// (error-free products via `mul_add`, compensated accumulation).
pub fn dot2<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (&x, &y) in a.into_iter().zip(b) {
        let p = x * y;
        let pe = x.mul_add(y, -p);
        let t = s + p;
        let z = t - s;
        c += (s - (t - z)) + (p - z) + pe;
        s = t;
    }
    s + c
}

/// Cumulative trapezoidal integral; `out[0] = 0`.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..t.len() {
        acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// Linear interpolation of a cumulative table at `x` (clamped to the table).
pub fn interp(t: &[f64], v: &[f64], x: f64) -> f64 {
    if x <= t[0] {
        return v[0];
    }
    let last = t.len() - 1;
    if x >= t[last] {
        return v[last];
    }
    let idx = t.partition_point(|&s| s <= x);
    let (i0, i1) = (idx - 1, idx);
    let w = (x - t[i0]) / (t[i1] - t[i0]);
    v[i0] + w * (v[i1] - v[i0])
}
