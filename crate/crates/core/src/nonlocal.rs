//! Discrete fractional Laplacian on (0,1) with the exterior (volume)
//! constraint `u = 0` on the complement, and the matching two-point calculus.
//!
//! The operator acts as
//!
//! ```text
//! (A u)(x) = c_alpha * integral over R of (u(x+y) - u(x)) / |y|^(1+alpha) dy
//! ```
//!
//! with `u` extended by zero. On the uniform grid `x_i = i h` the integral is
//! written in symmetrised form `u(x+y) + u(x-y) - 2u(x)`; the near field
//! `|y| <= m h` uses the second difference (Taylor correction of the
//! singular part) and the far field integrates the kernel exactly against the
//! piecewise-linear interpolant of `u`. Exterior interactions are summed in
//! closed form, so the constraint is not truncated.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::dot2;

/// Uniform interior mesh of (0,1): `x_i = i h`, `h = 1/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    h: f64,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Grid(format!("need at least 2 interior nodes, got {n}")));
        }
        Ok(Self {
            n,
            h: 1.0 / (n as f64 + 1.0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Position of interior node `i` (0-based), i.e. `(i+1) h`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> DVector<f64> {
        DVector::from_iterator(self.n, (0..self.n).map(|i| f(self.x(i))))
    }

    /// `L^2(D)` inner product, rectangle rule with the implicit zero exterior.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.h * dot2(u.iter(), v.iter())
    }

    pub fn norm_sq(&self, u: &DVector<f64>) -> f64 {
        self.h * u.norm_squared()
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.norm_sq(u).sqrt()
    }

    /// `h * sum(u)`, the trapezoidal mass (endpoint values are zero).
    pub fn mass(&self, u: &DVector<f64>) -> f64 {
        self.h * u.sum()
    }

    /// `L^2` norm of the forward difference, boundary values included.
    pub fn h1_seminorm(&self, u: &DVector<f64>) -> f64 {
        let n = self.n;
        let mut acc = u[0] * u[0] + u[n - 1] * u[n - 1];
        for i in 0..n - 1 {
            let d = u[i + 1] - u[i];
            acc += d * d;
        }
        (acc / self.h).sqrt()
    }
}

/// State vector on the interior nodes; the exterior value is implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: DVector<f64>,
    pub time: Option<f64>,
}

impl Field {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("field contains non-finite entries".into()));
        }
        Ok(Self { values, time: None })
    }

    pub fn at(values: DVector<f64>, t: f64) -> Result<Self> {
        let mut f = Self::new(values)?;
        f.time = Some(t);
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Normalisation making the symbol of the whole-line operator `|xi|^alpha`
/// in one dimension: `c = alpha 2^(alpha-1) Gamma((1+alpha)/2) / (sqrt(pi) Gamma(1-alpha/2))`.
pub fn fractional_constant(alpha: f64) -> f64 {
    alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (1.0 + alpha))
        / (std::f64::consts::PI.sqrt() * gamma(1.0 - 0.5 * alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub alpha: f64,
    pub c_alpha: f64,
    /// Radius of the second-difference near field, in units of `h`.
    pub singularity_split: usize,
}

impl KernelSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_split(alpha, 1)
    }

    pub fn with_split(alpha: f64, singularity_split: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::param(format!("alpha must lie in (0,2), got {alpha}")));
        }
        if singularity_split == 0 {
            return Err(Error::param("singularity_split must be at least 1"));
        }
        Ok(Self {
            alpha,
            c_alpha: fractional_constant(alpha),
            singularity_split,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::param(format!(
                "alpha must lie in (0,2), got {}",
                self.alpha
            )));
        }
        if !(self.c_alpha > 0.0) || self.singularity_split == 0 {
            return Err(Error::param("c_alpha must be positive and split at least 1"));
        }
        Ok(())
    }
}

/// `exp_m1(x) / x`, continuous through 0.
fn expm1_over(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// Dimensionless kernel sums in units of `c_alpha h^-alpha`.
///
/// With `G'' = s^(-1-alpha)`, `G' = -s^-alpha / alpha`, hat weights are second
/// differences of `G` and tail sums telescope to first differences.
struct KernelSums {
    alpha: f64,
    split: usize,
}

impl KernelSums {
    /// `G(j-1) - G(j)` for `j >= 2`, evaluated without cancellation.
    fn first_diff(&self, j: usize) -> f64 {
        let a = self.alpha;
        let jf = j as f64;
        let l = (-1.0 / jf).ln_1p();
        -jf.powf(1.0 - a) * l * expm1_over((1.0 - a) * l) / a
    }

    fn near_field(&self) -> f64 {
        (self.split as f64).powf(2.0 - self.alpha) / (2.0 - self.alpha)
    }

    /// Weight `w_k`, `k >= 1`.
    fn weight(&self, k: usize) -> f64 {
        let m = self.split;
        let mut w = if k == 1 { self.near_field() } else { 0.0 };
        if k == m {
            w += (m as f64).powf(-self.alpha) / self.alpha - self.first_diff(m + 1);
        } else if k > m {
            w += self.first_diff(k) - self.first_diff(k + 1);
        }
        w
    }

    /// `sum_{k >= 1} w_k`.
    fn total(&self) -> f64 {
        self.near_field() + (self.split as f64).powf(-self.alpha) / self.alpha
    }

    /// `sum_{k >= j} w_k`, `j >= 1`.
    fn tail(&self, j: usize) -> f64 {
        if j > self.split {
            self.first_diff(j)
        } else {
            self.total() - (1..j).map(|k| self.weight(k)).sum::<f64>()
        }
    }
}

/// Dense symmetric discretisation of `A_alpha = -(-Delta)^(alpha/2)`.
#[derive(Debug, Clone)]
pub struct NonlocalOperator {
    matrix: DMatrix<f64>,
    grid: Grid1D,
    kernel: KernelSpec,
    /// Pair weights `w_{|i-j|}` (index 0 unused).
    weights: Vec<f64>,
    /// Aggregate interaction of each node with the exterior.
    exterior: DVector<f64>,
}

/// Assemble the operator for `grid` and `kernel`.
pub fn assemble_operator(grid: Grid1D, kernel: KernelSpec) -> Result<NonlocalOperator> {
    kernel.validate()?;
    if grid.n < 2 {
        return Err(Error::Grid(format!("need n >= 2, got {}", grid.n)));
    }
    let n = grid.n;
    let scale = kernel.c_alpha * grid.h.powf(-kernel.alpha);
    let sums = KernelSums {
        alpha: kernel.alpha,
        split: kernel.singularity_split,
    };
    let mut weights = vec![0.0; n];
    for (k, w) in weights.iter_mut().enumerate().skip(1) {
        *w = scale * sums.weight(k);
    }
    // node i (0-based) sits at distance i+1 from the left exterior and n-i
    // from the right one
    let exterior = DVector::from_iterator(
        n,
        (0..n).map(|i| scale * (sums.tail(i + 1) + sums.tail(n - i))),
    );
    let mut matrix = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i != j {
                matrix[(i, j)] = weights[i.abs_diff(j)];
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| weights[i.abs_diff(j)]).sum();
        matrix[(i, i)] = -(off + exterior[i]);
    }
    Ok(NonlocalOperator {
        matrix,
        grid,
        kernel,
        weights,
        exterior,
    })
}

impl NonlocalOperator {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        assemble_operator(Grid1D::new(n)?, KernelSpec::new(alpha)?)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Kernel weight between nodes at index distance `k >= 1`.
    pub fn pair_weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn exterior_mass(&self) -> &DVector<f64> {
        &self.exterior
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.grid.n {
            return Err(Error::Dimension {
                expected: self.grid.n,
                got: len,
            });
        }
        Ok(())
    }

    pub fn apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(u.len())?;
        Ok(DVector::from_iterator(
            self.grid.n,
            self.matrix.row_iter().map(|r| dot2(r.iter(), u.iter())),
        ))
    }

    /// Two-point gradient of `u`.
    pub fn gradient(&self, u: &DVector<f64>) -> Result<NonlocalGradient> {
        nonlocal_gradient(u, self)
    }

    /// `sum w G(u)^2`, the nonlocal Dirichlet form `-<A u, u>`.
    pub fn dirichlet_form(&self, u: &DVector<f64>) -> Result<f64> {
        Ok(self.gradient(u)?.pairing(&self.gradient(u)?))
    }
}

/// Pairwise differences `G_ij = (u_j - u_i) k_ij` with `k_ij = sqrt(w_ij)`,
/// plus the node-to-exterior pairs whose exterior value is zero.
#[derive(Debug, Clone)]
pub struct NonlocalGradient {
    /// Antisymmetric `n x n` array over interior pairs.
    pub interior: DMatrix<f64>,
    /// `(0 - u_i) sqrt(exterior_i)`.
    pub exterior: DVector<f64>,
    /// Quadrature weight of each ordered interior pair (`h/2`).
    pub interior_weight: f64,
    /// Quadrature weight of each exterior pair (`h`).
    pub exterior_weight: f64,
}

pub fn nonlocal_gradient(u: &DVector<f64>, op: &NonlocalOperator) -> Result<NonlocalGradient> {
    op.check_len(u.len())?;
    let n = op.n();
    let mut interior = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i != j {
                interior[(i, j)] = (u[j] - u[i]) * op.weights[i.abs_diff(j)].sqrt();
            }
        }
    }
    let exterior =
        DVector::from_iterator(n, (0..n).map(|i| -u[i] * op.exterior[i].sqrt()));
    let h = op.grid.h;
    Ok(NonlocalGradient {
        interior,
        exterior,
        interior_weight: 0.5 * h,
        exterior_weight: h,
    })
}

impl NonlocalGradient {
    /// Weighted pairing `sum w G(u) G(v)`.
    pub fn pairing(&self, other: &NonlocalGradient) -> f64 {
        self.interior_weight * dot2(self.interior.iter(), other.interior.iter())
            + self.exterior_weight * dot2(self.exterior.iter(), other.exterior.iter())
    }
}

/// Smallest eigenvalue of `-A` by shifted-inverse iteration on its Cholesky
/// factor. Fails if `-A` is not positive definite.
pub fn smallest_eigenvalue(op: &NonlocalOperator) -> Result<f64> {
    let lambda = -op.matrix.clone();
    let chol = lambda
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Assembly("-A is not positive definite".into()))?;
    let n = op.n();
    // positive start vector overlaps the (positive) ground state
    let grid = op.grid;
    let mut v = grid.sample(|x| (std::f64::consts::PI * x).sin());
    v /= v.norm();
    let mut rq = v.dot(&(&lambda * &v));
    for _ in 0..500 {
        let mut w = chol.solve(&v);
        w /= w.norm();
        let next = w.dot(&(&lambda * &w));
        v = w;
        if (next - rq).abs() <= 1e-15 * next.abs() {
            rq = next;
            break;
        }
        rq = next;
    }
    if !(rq > 0.0) || !rq.is_finite() {
        return Err(Error::Assembly(format!(
            "non-positive ground state energy {rq} for n = {n}"
        )));
    }
    Ok(rq)
}

/// Discrete nonlocal Poincare constant `1 / lambda_1(-A)`.
pub fn poincare_constant(op: &NonlocalOperator) -> Result<f64> {
    Ok(1.0 / smallest_eigenvalue(op)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_matches_known_values() {
        assert!((fractional_constant(1.0) - 1.0 / std::f64::consts::PI).abs() < 1e-14);
        // alpha -> 0 gives c -> 0; alpha = 1.5 closed form
        let c = fractional_constant(1.5);
        let expect = 1.5 * 2f64.sqrt() * gamma(1.25) / (std::f64::consts::PI.sqrt() * gamma(0.25));
        assert!((c - expect).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(KernelSpec::new(2.0), Err(Error::Parameter(_))));
        assert!(matches!(KernelSpec::new(0.0), Err(Error::Parameter(_))));
        assert!(matches!(Grid1D::new(1), Err(Error::Grid(_))));
        let op = NonlocalOperator::new(1.0, 8).unwrap();
        assert!(matches!(
            op.apply(&DVector::zeros(7)),
            Err(Error::Dimension { expected: 8, got: 7 })
        ));
    }

    #[test]
    fn sign_structure_and_symmetry() {
        for &alpha in &[0.3, 1.0, 1.7] {
            let op = NonlocalOperator::new(alpha, 40).unwrap();
            let a = op.matrix();
            assert_eq!(a, &a.transpose());
            for i in 0..40 {
                assert!(a[(i, i)] < 0.0);
                let off: f64 = (0..40).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
                assert!(off >= 0.0);
                assert!(a[(i, i)].abs() > off);
            }
            assert!(smallest_eigenvalue(&op).unwrap() > 0.0);
        }
    }

    #[test]
    fn weights_sum_to_closed_form_total() {
        let sums = KernelSums { alpha: 0.7, split: 2 };
        let partial: f64 = (1..200_000).map(|k| sums.weight(k)).sum();
        let tail = sums.tail(200_000);
        assert!((partial + tail - sums.total()).abs() < 1e-12 * sums.total());
        for j in 1..6 {
            let direct = sums.total() - (1..j).map(|k| sums.weight(k)).sum::<f64>();
            assert!((sums.tail(j) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_field_and_unit_vector_gradient() {
        let op = NonlocalOperator::new(1.2, 12).unwrap();
        let zero = DVector::zeros(12);
        assert_eq!(op.apply(&zero).unwrap(), zero);
        let g = op.gradient(&zero).unwrap();
        assert!(g.interior.iter().all(|&v| v == 0.0));
        let mut e1 = DVector::zeros(12);
        e1[0] = 1.0;
        let g = op.gradient(&e1).unwrap();
        for j in 1..12 {
            let k = op.pair_weight(j).sqrt();
            assert_eq!(g.interior[(0, j)], -k);
            assert_eq!(g.interior[(j, 0)], k);
        }
        assert_eq!(g.exterior[0], -op.exterior_mass()[0].sqrt());
    }

    #[test]
    fn green_identity_on_random_pairs() {
        let op = NonlocalOperator::new(0.9, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u = DVector::from_fn(30, |_, _| rng.random_range(-1.0..1.0));
            let v = DVector::from_fn(30, |_, _| rng.random_range(-1.0..1.0));
            let lhs = op.grid().inner(&op.apply(&u).unwrap(), &v);
            let rhs = op.gradient(&u).unwrap().pairing(&op.gradient(&v).unwrap());
            assert!((lhs + rhs).abs() <= 1e-12 * rhs.abs().max(lhs.abs()));
        }
    }

    #[test]
    fn exterior_loss_for_nonnegative_fields() {
        let op = NonlocalOperator::new(1.4, 25).unwrap();
        let u = op.grid().sample(|x| x * (1.0 - x) + 0.1);
        let total: f64 = op.grid().mass(&op.apply(&u).unwrap());
        assert!(total < 0.0);
    }
}
