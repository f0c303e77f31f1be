//! Spectral calculus for `Lambda = -A_alpha`: heat semigroup, fractional
//! powers (spectrally and through the Gamma-function integral) and the
//! semigroup smoothing bounds.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::nonlocal::{Grid1D, NonlocalOperator};
use crate::quadrature::{adaptive_vec, GaussRule};

/// Ascending spectrum and orthonormal eigenvectors (columns) of `-A`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    grid: Grid1D,
    alpha: f64,
}

const MAX_QR_ITERS: usize = 10_000;

pub fn eigendecompose(op: &NonlocalOperator) -> Result<EigenDecomposition> {
    let lambda = -op.matrix().clone();
    let n = op.n();
    let eig = lambda
        .clone()
        .try_symmetric_eigen(f64::EPSILON, MAX_QR_ITERS)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "symmetric eigensolver did not converge within {MAX_QR_ITERS} iterations (n = {n})"
            ))
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        // fix the sign so that the mean of each vector is non-negative
        if col.sum() < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }
    let dec = EigenDecomposition {
        eigenvalues,
        eigenvectors,
        grid: op.grid(),
        alpha: op.kernel().alpha,
    };
    dec.verify(&lambda)?;
    Ok(dec)
}

impl EigenDecomposition {
    /// Build from precomputed parts (used by tests and small examples).
    pub fn from_parts(
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
        grid: Grid1D,
        alpha: f64,
    ) -> Self {
        Self {
            eigenvalues,
            eigenvectors,
            grid,
            alpha,
        }
    }

    /// Check orthonormality, the residual and positivity of the spectrum.
    pub fn verify(&self, lambda: &DMatrix<f64>) -> Result<()> {
        let n = self.n();
        let q = &self.eigenvectors;
        let ortho = (q.transpose() * q - DMatrix::<f64>::identity(n, n)).amax();
        let top = self.eigenvalues[n - 1].abs();
        let resid = (lambda * q - q * DMatrix::from_diagonal(&self.eigenvalues)).amax();
        if ortho > 1e-10 || resid > 1e-8 * top {
            return Err(Error::Numerical(format!(
                "eigendecomposition check failed: orthogonality {ortho:e}, residual {resid:e}"
            )));
        }
        if !(self.eigenvalues[0] > 0.0) {
            return Err(Error::Assembly(format!(
                "smallest eigenvalue {} is not positive",
                self.eigenvalues[0]
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Spectral gap `lambda_1`.
    pub fn gap(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues[self.n() - 1]
    }

    /// Eigenvector `k` (0-based) scaled to unit `L^2(D)` norm.
    pub fn mode(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k) / self.grid.h().sqrt()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }

    /// Coefficients in the eigenbasis, `Q^T u`.
    pub fn to_spectral(&self, u: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(u)
    }

    pub fn from_spectral(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.eigenvectors * c
    }

    /// `Q f(Lambda) Q^T u`.
    pub fn apply_fn<F: Fn(f64) -> f64>(&self, u: &DVector<f64>, f: F) -> Result<DVector<f64>> {
        self.check_len(u.len())?;
        let mut c = self.to_spectral(u);
        for (ck, &lam) in c.iter_mut().zip(self.eigenvalues.iter()) {
            *ck *= f(lam);
        }
        Ok(self.from_spectral(&c))
    }

    /// `e^{-t Lambda} u`, i.e. the semigroup generated by `A_alpha`.
    pub fn heat_apply(&self, t: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
        if !(t >= 0.0) {
            return Err(Error::param(format!("time must be non-negative, got {t}")));
        }
        self.apply_fn(u, |lam| (-t * lam).exp())
    }

    /// `Lambda^beta u`. Non-negative powers are spectral; negative powers go
    /// through the Gamma-function integral of the semigroup.
    pub fn fractional_power_apply(&self, beta: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
        if !beta.is_finite() {
            return Err(Error::param("beta must be finite"));
        }
        if beta == 0.0 {
            self.check_len(u.len())?;
            return Ok(u.clone());
        }
        if beta > 0.0 {
            return self.apply_fn(u, |lam| lam.powf(beta));
        }
        Ok(self.negative_power_by_integral(-beta, u, 1e-13)?.value)
    }

    /// `Lambda^{-beta} u = Gamma(beta)^{-1} int_0^inf t^{beta-1} e^{-t Lambda} u dt`.
    ///
    /// Evaluated with `s = t^beta` (which removes the endpoint singularity)
    /// on dyadic panels up to `T*` with `exp(-lambda_1 T*) < 1e-14`; panels are
    /// refined adaptively. The neglected tail is bounded analytically.
    pub fn negative_power_by_integral(
        &self,
        beta: f64,
        u: &DVector<f64>,
        tol: f64,
    ) -> Result<PowerIntegral> {
        if !(beta > 0.0) {
            return Err(Error::param(format!("beta must be positive, got {beta}")));
        }
        self.check_len(u.len())?;
        let n = self.n();
        let lam1 = self.gap();
        let t_star = (1e14f64).ln() / lam1 + 1.0 / lam1;
        let t_first = 0.01 / self.largest();
        let scale = u.norm().max(f64::MIN_POSITIVE);
        let heat = |t: f64| self.heat_apply(t, u).expect("t is non-negative");

        let mut total = DVector::zeros(n);
        let mut panels = 0;
        // [0, t_first] in s = t^beta: t^{beta-1} dt = ds / beta
        let s_max = t_first.powf(beta);
        let rule = GaussRule::new(20);
        total += rule.integrate_vec(0.0, s_max, n, |s| heat(s.powf(1.0 / beta)) / beta);
        panels += 1;
        let mut lo = t_first;
        while lo < t_star {
            let hi = (2.0 * lo).min(t_star);
            let mut f = |t: f64| heat(t) * t.powf(beta - 1.0);
            let (part, used) = adaptive_vec(lo, hi, n, tol * scale, 30, &mut f);
            total += part;
            panels += used;
            lo = hi;
        }
        let norm = gamma(beta);
        total /= norm;
        // int_{T*}^inf t^{beta-1} e^{-lambda_1 t} dt bound
        let tail_bound = if beta <= 1.0 {
            t_star.powf(beta - 1.0) * (-lam1 * t_star).exp() / lam1
        } else {
            let g = statrs::function::gamma::gamma_ur(beta, lam1 * t_star) * gamma(beta);
            g / lam1.powf(beta)
        } / norm
            * scale;
        Ok(PowerIntegral {
            value: total,
            tail_bound,
            panels,
        })
    }

    /// Check the smoothing bounds at every `t` of `t_grid`:
    /// (i)  `||e^{-t Lambda}|| = e^{-lambda_1 t}`,
    /// (ii) `||Lambda e^{-t Lambda}|| <= 2/(e t) e^{-lambda_1 t/2}`,
    /// (iii) `||Lambda^beta e^{-t Lambda}|| <= (2 beta/(e t))^beta e^{-lambda_1 t/2}`.
    pub fn verify_semigroup_bounds(&self, t_grid: &[f64], betas: &[f64]) -> Result<SemigroupReport> {
        if t_grid.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::param("t_grid must be strictly positive"));
        }
        let lam1 = self.gap();
        let e = std::f64::consts::E;
        let mut rows = Vec::new();
        for &t in t_grid {
            let norm_of = |f: &dyn Fn(f64) -> f64| {
                self.eigenvalues.iter().map(|&l| f(l)).fold(0.0f64, f64::max)
            };
            let exact = (-lam1 * t).exp();
            let value = norm_of(&|l: f64| (-l * t).exp());
            rows.push(BoundCheck {
                t,
                family: BoundFamily::Contraction,
                value,
                bound: exact,
                pass: (value - exact).abs() <= 1e-12 * exact,
            });
            let value = norm_of(&|l: f64| l * (-l * t).exp());
            let bound = 2.0 / (e * t) * (-0.5 * lam1 * t).exp();
            rows.push(BoundCheck {
                t,
                family: BoundFamily::Analytic,
                value,
                bound,
                pass: value <= bound * (1.0 + 1e-12),
            });
            for &beta in betas {
                let value = norm_of(&|l: f64| l.powf(beta) * (-l * t).exp());
                let bound = if beta == 0.0 {
                    (-0.5 * lam1 * t).exp()
                } else {
                    (2.0 * beta / (e * t)).powf(beta) * (-0.5 * lam1 * t).exp()
                };
                rows.push(BoundCheck {
                    t,
                    family: BoundFamily::FractionalPower(beta),
                    value,
                    bound,
                    pass: value <= bound * (1.0 + 1e-12),
                });
            }
        }
        Ok(SemigroupReport { rows })
    }
}

#[derive(Debug, Clone)]
pub struct PowerIntegral {
    pub value: DVector<f64>,
    /// Upper bound on the neglected `[T*, inf)` contribution (L2, Euclidean).
    pub tail_bound: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundFamily {
    Contraction,
    Analytic,
    FractionalPower(f64),
}

impl std::fmt::Display for BoundFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundFamily::Contraction => write!(f, "contraction"),
            BoundFamily::Analytic => write!(f, "analytic"),
            BoundFamily::FractionalPower(b) => write!(f, "power_{b}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub t: f64,
    pub family: BoundFamily,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SemigroupReport {
    pub rows: Vec<BoundCheck>,
}

impl SemigroupReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn violations(&self) -> impl Iterator<Item = &BoundCheck> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::param(format!("alpha must lie in (0,2), got {alpha}")));
    }
    Ok(())
}

/// The interval asymptotic `(k/2 - (2-alpha)/8)^alpha` without the `pi` scaling.
pub fn asymptotic_eigenvalue(alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(Error::param("mode index starts at 1"));
    }
    Ok((k as f64 / 2.0 - (2.0 - alpha) / 8.0).powf(alpha))
}

/// Asymptotic on (-1,1) with the factor pi, rescaled to (0,1):
/// `2^alpha (k pi/2 - (2-alpha) pi/8)^alpha`.
pub fn corrected_asymptotic_eigenvalue(alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(Error::param("mode index starts at 1"));
    }
    let pi = std::f64::consts::PI;
    Ok(2f64.powf(alpha) * (k as f64 * pi / 2.0 - (2.0 - alpha) * pi / 8.0).powf(alpha))
}

/// `n` logarithmically spaced points between `lo` and `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(matrix: DMatrix<f64>) -> EigenDecomposition {
        let n = matrix.nrows();
        let lambda = -matrix;
        let eig = lambda.clone().symmetric_eigen();
        let mut pairs: Vec<(f64, DVector<f64>)> = (0..n)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let vals = DVector::from_iterator(n, pairs.iter().map(|p| p.0));
        let vecs = DMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
        let dec = EigenDecomposition::from_parts(vals, vecs, Grid1D::new(n.max(2)).unwrap(), 1.0);
        dec.verify(&lambda).unwrap();
        dec
    }

    #[test]
    fn one_by_one_and_two_by_two() {
        let lambda = DMatrix::from_element(1, 1, 3.0f64);
        let eig = lambda.clone().symmetric_eigen();
        assert_eq!(eig.eigenvalues[0], 3.0);
        assert_eq!(eig.eigenvectors[(0, 0)].abs(), 1.0);

        let dec = tiny(DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]));
        assert!((dec.eigenvalues()[0] - 1.0).abs() < 1e-14);
        assert!((dec.eigenvalues()[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn uncorrected_asymptotic_values() {
        assert!((asymptotic_eigenvalue(1.0, 1).unwrap() - 0.375).abs() < 1e-15);
        assert!((asymptotic_eigenvalue(1.0, 2).unwrap() - 0.875).abs() < 1e-15);
        let near_two = asymptotic_eigenvalue(2.0 - 1e-12, 1).unwrap();
        assert!((near_two - 0.25).abs() < 1e-11);
        assert!(asymptotic_eigenvalue(2.5, 1).is_err());
        assert!(asymptotic_eigenvalue(1.0, 0).is_err());
    }

    #[test]
    fn decomposition_reconstructs_operator() {
        let op = NonlocalOperator::new(1.3, 48).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let q = dec.eigenvectors();
        let rebuilt = q * DMatrix::from_diagonal(dec.eigenvalues()) * q.transpose();
        let err = (rebuilt + op.matrix()).amax();
        assert!(err <= 1e-8 * dec.largest());
        assert!(dec.eigenvalues().as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn heat_identity_eigenvector_and_taylor() {
        let op = NonlocalOperator::new(1.0, 32).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let u = op.grid().sample(|x| x * x * (1.0 - x));
        assert!((dec.heat_apply(0.0, &u).unwrap() - &u).amax() < 1e-13);
        let phi = dec.eigenvectors().column(0).into_owned();
        let t = 0.37;
        let out = dec.heat_apply(t, &phi).unwrap();
        assert!((out - &phi * (-dec.gap() * t).exp()).amax() < 1e-13);
        assert!(dec.heat_apply(-1.0, &u).is_err());

        // second-order Taylor oracle with the raw matrix
        let t = 1e-3;
        let lam = -op.matrix().clone();
        let lu = &lam * &u;
        let taylor = &u - &lu * t + (&lam * &lu) * (0.5 * t * t);
        let err = (dec.heat_apply(t, &u).unwrap() - taylor).amax();
        assert!(err < 1e-6 * u.amax().max(1.0), "err = {err}");
    }

    #[test]
    fn fractional_powers() {
        let op = NonlocalOperator::new(0.8, 40).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let u = op.grid().sample(|x| (3.0 * x).sin() * x * (1.0 - x));
        assert_eq!(dec.fractional_power_apply(0.0, &u).unwrap(), u);
        let one = dec.fractional_power_apply(1.0, &u).unwrap();
        let direct = -(op.matrix() * &u);
        assert!((one - &direct).amax() < 1e-10 * direct.amax());
        let a = dec.fractional_power_apply(0.3, &u).unwrap();
        let ab = dec.fractional_power_apply(0.45, &a).unwrap();
        let c = dec.fractional_power_apply(0.75, &u).unwrap();
        assert!((ab - &c).amax() < 1e-9 * c.amax());
    }

    #[test]
    fn bounds_hold_at_unit_time() {
        let op = NonlocalOperator::new(1.0, 30).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let rep = dec.verify_semigroup_bounds(&[1.0], &[0.0, 0.5]).unwrap();
        assert!(rep.pass());
        assert!(dec.verify_semigroup_bounds(&[0.0], &[]).is_err());
    }

    #[test]
    fn logspace_endpoints() {
        let t = logspace(1e-3, 10.0, 50);
        assert_eq!(t.len(), 50);
        assert!((t[0] - 1e-3).abs() < 1e-18);
        assert!((t[49] - 10.0).abs() < 1e-12);
    }
}
