use fracpde::fp::{mollify_initial, solve_viscous, Drift, DriftProfile, FpProblem};
use fracpde::gronwall::{uniform_gronwall_check, TrajectoryTriple};
use fracpde::nonlocal::{fractional_constant, Grid1D, NonlocalOperator};
use fracpde::spectral::eigendecompose;
use nalgebra::DVector;
use proptest::prelude::*;

fn vector(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0..1.0f64, n).prop_map(DVector::from_vec)
}

fn sized_pair() -> impl Strategy<Value = (usize, DVector<f64>, DVector<f64>)> {
    (2usize..64).prop_flat_map(|n| (Just(n), vector(n), vector(n)))
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_is_uniform_and_interior(n in 2usize..2000) {
        let g = Grid1D::new(n).unwrap();
        let x = g.nodes();
        prop_assert!(x[0] > 0.0 && x[n - 1] < 1.0);
        for w in x.windows(2) {
            prop_assert!(((w[1] - w[0]) - g.h()).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn operator_sign_structure(alpha in 0.05..1.95f64, n in 2usize..80) {
        let op = NonlocalOperator::new(alpha, n).unwrap();
        let a = op.matrix();
        prop_assert!(fractional_constant(alpha) > 0.0);
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
            prop_assert!(a[(i, i)] < 0.0);
            prop_assert!(a[(i, i)].abs() > off);
            for j in 0..n {
                prop_assert_eq!(a[(i, j)], a[(j, i)]);
                if i != j {
                    prop_assert!(a[(i, j)] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn green_identity_holds((n, u, v) in sized_pair(), alpha in 0.05..1.95f64) {
        let op = NonlocalOperator::new(alpha, n).unwrap();
        let g = op.grid();
        let au = op.apply(&u).unwrap();
        let lhs = g.inner(&au, &v);
        let rhs = op.gradient(&u).unwrap().pairing(&op.gradient(&v).unwrap());
        let scale = g.norm(&au) * g.norm(&v);
        prop_assert!((lhs + rhs).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn nonnegative_fields_lose_mass(alpha in 0.05..1.95f64, u in prop::collection::vec(0.0..1.0f64, 2..60)) {
        prop_assume!(u.iter().any(|&x| x > 1e-3));
        let n = u.len();
        let op = NonlocalOperator::new(alpha, n).unwrap();
        let u = DVector::from_vec(u);
        prop_assert!(op.grid().mass(&op.apply(&u).unwrap()) < 0.0);
    }

    #[test]
    fn cubic_pairing_is_nonnegative((n, u, _) in sized_pair(), alpha in 0.05..1.95f64) {
        let op = NonlocalOperator::new(alpha, n).unwrap();
        let u = &u * 3.0;
        let u3 = u.map(|x| x * x * x);
        prop_assert!(op.gradient(&u).unwrap().pairing(&op.gradient(&u3).unwrap()) >= 0.0);
    }

    #[test]
    fn completed_square_never_exceeds_one(a in -100.0..100.0f64, b in -100.0..100.0f64) {
        let v = 1.0 - 0.5 * (a - 1.0).powi(2) - 0.5 * (b - 1.0).powi(2) - 0.5 * (a + b).powi(2);
        prop_assert!(v <= 1.0);
    }

    #[test]
    fn mollifier_does_not_increase_l2(u in vector(127), eps in 0.01..0.3f64) {
        let g = Grid1D::new(127).unwrap();
        let m = mollify_initial(g, &u, eps).unwrap();
        prop_assert!(g.norm(&m) <= g.norm(&u) * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn semigroup_and_power_laws(alpha in 0.2..1.8f64, t in 0.001..2.0f64, s in 0.001..2.0f64,
                                b1 in -0.9..0.9f64, b2 in -0.9..0.9f64, u in vector(40)) {
        let op = NonlocalOperator::new(alpha, 40).unwrap();
        let eig = eigendecompose(&op).unwrap();
        let joint = eig.heat_apply(t + s, &u).unwrap();
        let split = eig.heat_apply(t, &eig.heat_apply(s, &u).unwrap()).unwrap();
        prop_assert!(max_abs(&(joint - split)) <= 1e-10 * max_abs(&u).max(1e-300));
        let joint = eig.fractional_power_apply(b1 + b2, &u).unwrap();
        let split = eig
            .fractional_power_apply(b1, &eig.fractional_power_apply(b2, &u).unwrap())
            .unwrap();
        prop_assert!(max_abs(&(&joint - split)) <= 1e-9 * max_abs(&joint).max(1e-300));
    }

    #[test]
    fn viscous_flow_is_linear_positive_and_mass_dissipating(
        alpha in 0.3..1.7f64,
        amp in -1.0..1.0f64,
        eps in 0.0..0.2f64,
        scale in -2.0..2.0f64,
        v in prop::collection::vec(0.0..1.0f64, 31),
        w in vector(31),
    ) {
        let grid = Grid1D::new(31).unwrap();
        let drift = Drift::from_profile(grid, &DriftProfile::Sine { amplitude: amp, frequency: 1.0 }).unwrap();
        let op = NonlocalOperator::new(alpha, 31).unwrap();
        let p = FpProblem::new(drift, Some(op), grid, 0.05, 1e-3).unwrap();
        let v = DVector::from_vec(v);
        let combo = &v * scale + &w;
        let uc = solve_viscous(&p, eps, &combo).unwrap();
        let uv = solve_viscous(&p, eps, &v).unwrap();
        let uw = solve_viscous(&p, eps, &w).unwrap();
        for k in 0..uc.states.len() {
            let r = &uc.states[k] - (&uv.states[k] * scale + &uw.states[k]);
            prop_assert!(max_abs(&r) <= 1e-10);
        }
        let tol = 1e-12 * max_abs(&v);
        let mut last = f64::INFINITY;
        for s in &uv.states {
            prop_assert!(s.min() >= -tol);
            let m = grid.mass(s);
            prop_assert!(m <= last + 1e-10);
            last = m;
        }
    }

    #[test]
    fn uniform_bound_is_monotone_in_forcing(
        y in prop::collection::vec(0.0..5.0f64, 41),
        g in prop::collection::vec(0.0..2.0f64, 41),
        h in prop::collection::vec(0.0..2.0f64, 41),
        extra in prop::collection::vec(0.0..2.0f64, 41),
    ) {
        let t: Vec<f64> = (0..41).map(|i| i as f64 * 0.05).collect();
        let bigger: Vec<f64> = h.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let base = TrajectoryTriple::new(t.clone(), y.clone(), g.clone(), h, 0.5).unwrap();
        let more = TrajectoryTriple::new(t, y, g, bigger, 0.5).unwrap();
        let b0 = uniform_gronwall_check(&base).unwrap().bound;
        let b1 = uniform_gronwall_check(&more).unwrap().bound;
        prop_assert!(b1 >= b0);
    }
}

#[test]
fn uniform_bound_converges_under_refinement() {
    let bound = |m: usize| {
        let t: Vec<f64> = (0..=m).map(|i| 2.0 * i as f64 / m as f64).collect();
        let y = t.iter().map(|s| 1.0 + s.sin().powi(2)).collect();
        let g = t.iter().map(|s| 0.5 + 0.25 * s.cos()).collect();
        let h = t.iter().map(|s| s * s).collect();
        uniform_gronwall_check(&TrajectoryTriple::new(t, y, g, h, 1.0).unwrap())
            .unwrap()
            .bound
    };
    let coarse = bound(4000);
    let fine = bound(8000);
    assert!((coarse - fine).abs() <= 1e-4 * fine);
}
