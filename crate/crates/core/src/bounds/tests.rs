use super::*;
use crate::condition::{renegar_single, MethodChoice, RestrictedOptions};
use crate::cones::ConeRep;
use crate::numerics::{gaussian_matrix, Matrix, SeededStream, Vector};
use crate::regularizers::parse_operator;
use crate::statdim::{estimate_moment, estimate_statdim};
use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> RestrictedOptions {
    RestrictedOptions {
        method: MethodChoice::GridOracle,
        ..RestrictedOptions::default()
    }
}

#[test]
fn theorem_a_examples() {
    let b = theorem_a_bounds(3.0, None, Some(1.0), 10).unwrap();
    assert_eq!((b.lower, b.upper), (Some(3.0), Some(3.0)));
    let b = theorem_a_bounds(20.0, Some(1.5), None, 400).unwrap();
    assert_abs_diff_eq!(b.upper.unwrap(), 45.0, epsilon = 1e-12);
    assert!(b.lower.is_none());
    let b = theorem_a_bounds(2.0, Some(3.0), Some(2.0), 10).unwrap();
    assert_eq!(b.upper, Some(8.0));
    assert!(theorem_a_bounds(2.0, None, None, 10).is_err());
    assert!(theorem_a_bounds(2.0, Some(0.5), None, 10).is_err());
    assert!(theorem_a_bounds(11.0, Some(1.0), None, 10).is_err());

    // Quarter-plane wedge under diag(2, 1).
    let c = ConeRep::orthant(2);
    let a = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]));
    let stream = SeededStream::new(1);
    let dc = estimate_statdim(&c, 4000, &stream.fork(1)).unwrap();
    let dac = estimate_statdim(&ConeRep::image(a, c), 4000, &stream.fork(2)).unwrap();
    let b = theorem_a_bounds(dc.mean, None, Some(2.0), 2).unwrap();
    let se = (dac.stderr.powi(2) + dc.stderr.powi(2)).sqrt();
    assert!(dac.mean >= b.lower.unwrap() - 3.0 * se && dac.mean <= b.upper.unwrap() + 3.0 * 4.0 * se);
}

#[test]
fn theorem_a_and_moments_on_random_wedges() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let stream = SeededStream::new(2);
    for i in 0..5 {
        let c = ConeRep::planar_wedge(rng.random_range(0.3..2.8), rng.random_range(0.0..6.0));
        let a = gaussian_matrix(2, 2, &mut rng);
        let r = renegar_single(&a, &c, &grid()).unwrap().renegar_r;
        let ac = ConeRep::image(a.clone(), c.clone());
        for order in [1.0, 2.0, 4.0] {
            let lhs = estimate_moment(&ac, order, 4000, &stream.fork(10 * i)).unwrap();
            let rhs = estimate_moment(&c, order, 4000, &stream.fork(10 * i + 1)).unwrap();
            let bound = r.powf(order) * rhs.mean;
            let se = (lhs.stderr.powi(2) + (r.powf(order) * rhs.stderr).powi(2)).sqrt();
            assert!(
                lhs.mean <= bound + 3.0 * se,
                "r={r} order={order}: {} > {bound}",
                lhs.mean
            );
        }
        let k = crate::numerics::kappa(&a).unwrap();
        let dc = c.exact_intrinsic_volumes().unwrap()[2] * 2.0 + 0.5;
        let dac = estimate_statdim(&ac, 4000, &stream.fork(10 * i + 2)).unwrap();
        let b = theorem_a_bounds(dc, Some(r), Some(k), 2).unwrap();
        assert!(dac.mean >= b.lower.unwrap() - 3.0 * dac.stderr);
        assert!(dac.mean <= b.upper.unwrap() + 3.0 * dac.stderr);
    }
}

#[test]
fn improved_bound_examples() {
    assert_eq!(improved_bound(20.0, 2.0, 400).unwrap(), 305.0);
    assert_eq!(improved_bound(7.0, 1.0, 10).unwrap(), 7.0);
    assert_eq!(improved_bound(7.0, f64::INFINITY, 10).unwrap(), 10.0);
    assert!(improved_bound(7.0, 1e8, 10).unwrap() <= 10.0);
    for k in [1.0, 1.5, 3.0, 10.0] {
        for d in [0.5, 3.0, 9.0] {
            let v = improved_bound(d, k, 10).unwrap();
            assert!(v <= 10.0);
            assert!(v >= d - 1e-12);
        }
    }
    assert!(improved_bound(7.0, 0.5, 10).is_err());
}

#[test]
fn theorem_b_examples() {
    let r = theorem_b_bound(20.0, 1.5, 400, 100, 0.05).unwrap();
    assert_abs_diff_eq!(r.upper.unwrap(), 45.0, epsilon = 1e-12);
    assert_abs_diff_eq!(theorem_b_min_m(20.0, 100, 0.05).unwrap(), 58.41, epsilon = 5e-3);
    let r = theorem_b_bound(5.0, 2.0, 100, 100, 0.05).unwrap();
    assert_eq!(r.upper, Some(10.0));
    assert!(theorem_b_bound(20.0, 1.5, 400, 46, 0.05).is_err());
    assert!(theorem_b_bound(20.0, 1.5, 400, 100, 1.0).is_err());
    assert!(theorem_b_bound(20.0, 0.5, 400, 100, 0.05).is_err());
    let rep = r.with_estimate(Estimate::from_values(&[9.0, 9.5, 10.2, 9.9], 0));
    assert!(rep.consistent());
}

#[test]
fn optimal_m_examples() {
    let flat = optimal_m_search(20.0, 400, 0.05, &[], |_| Ok(Estimate::exact(1.0))).unwrap();
    // With a constant first term the bound falls with m, so the full dimension wins.
    assert_eq!(flat.m_star, 400);
    assert_eq!(flat.curve.first().unwrap().m, 47);
    assert!(theorem_b_bound(20.0, 1.0, 400, 47, 0.05).is_ok());
    assert!(flat.to_csv().starts_with("m,bound,kbar2,stderr\n"));

    // Projected condition numbers grow with m; a larger eta weights the slack term more.
    let model = |m: usize| Ok(Estimate::exact(1.0 + 4.0 * m as f64 / 400.0));
    let low = optimal_m_search(20.0, 400, 0.05, &[], model).unwrap();
    let high = optimal_m_search(20.0, 400, 0.5, &[], model).unwrap();
    assert!(high.m_star > low.m_star, "{} vs {}", high.m_star, low.m_star);
    assert_eq!(low.m_star, 47);
    assert!(high.curve.first().unwrap().m < low.curve.first().unwrap().m);
    assert!(optimal_m_search(20.0, 30, 0.05, &[], model).is_err());
}

#[test]
fn l1_analysis_threshold_examples() {
    let n = 400;
    let mut x0 = Vector::zeros(n);
    x0[0] = 1.0;
    let inst = AnalysisInstance::new(Matrix::identity(n, n), x0).unwrap();
    let t = l1_analysis_threshold(&inst, 20.0, 0.1).unwrap();
    assert_abs_diff_eq!(t.kappa_c, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(
        t.m_required.value,
        20.0 + a_eta(0.1, EtaFlavor::Edge).unwrap() * 20.0,
        epsilon = 1e-9
    );
    assert_abs_diff_eq!(t.m_required.value, 173.65, epsilon = 0.01);

    let d = parse_operator("tv_square(50)").unwrap();
    let x0 = Vector::from_fn(50, |i, _| ((i / 10) % 2) as f64);
    let inst = AnalysisInstance::new(d, x0).unwrap();
    let t = l1_analysis_threshold(&inst, 12.0, 0.1).unwrap();
    assert!(t.kappa_c > 1.0 && t.kappa_c.is_finite());
    assert!(t.m_required.clipped && t.m_required.value == 50.0);
}

#[test]
fn edge_threshold_examples() {
    let e = edge_thresholds(20.0, 400, 0.1).unwrap();
    assert_abs_diff_eq!(e.m_succeed.value, 173.65, epsilon = 0.01);
    assert!(e.m_fail.clipped && e.m_fail.value == 0.0);
    assert_abs_diff_eq!(e.m_fail.raw, -133.65, epsilon = 0.01);
    let a = edge_thresholds(200.0, 400, 0.9).unwrap();
    let b = edge_thresholds(200.0, 400, 0.99).unwrap();
    assert!(b.m_succeed.value - b.m_fail.value < a.m_succeed.value - a.m_fail.value);
    let s = edge_thresholds(200.0, 400, 0.5).unwrap();
    assert_abs_diff_eq!(s.m_succeed.value - 200.0, 200.0 - s.m_fail.value, epsilon = 1e-9);
    assert!(edge_thresholds(20.0, 400, 0.0).is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn sandwich_is_ordered(n in 1usize..500, frac in 0.0f64..=1.0, k in 1.0f64..50.0, r in 1.0f64..50.0) {
            let delta = frac * n as f64;
            let b = theorem_a_bounds(delta, Some(r), Some(k), n).unwrap();
            prop_assert!(b.lower.unwrap() <= delta + 1e-12);
            prop_assert!(delta <= b.upper.unwrap() + 1e-12);
            prop_assert!(b.upper.unwrap() <= b.upper_kappa.unwrap() + 1e-12);
        }

        #[test]
        fn improved_bound_lies_between_delta_and_n(n in 1usize..500, frac in 0.0f64..=1.0, k in 1.0f64..1e6) {
            let delta = frac * n as f64;
            let b = improved_bound(delta, k, n).unwrap();
            prop_assert!(b >= delta - 1e-9 && b <= n as f64);
        }

        #[test]
        fn edge_window_contains_delta_and_shrinks_with_eta(n in 1usize..2000, frac in 0.0f64..=1.0, e1 in 0.01f64..0.98) {
            let delta = frac * n as f64;
            let e2 = (e1 + 0.01).min(0.99);
            let a = edge_thresholds(delta, n, e1).unwrap();
            let b = edge_thresholds(delta, n, e2).unwrap();
            prop_assert!(a.m_fail.value <= delta && delta <= a.m_succeed.value);
            prop_assert!(b.m_succeed.raw - b.m_fail.raw <= a.m_succeed.raw - a.m_fail.raw);
            prop_assert_eq!(a.m_succeed.clipped, a.m_succeed.raw > n as f64);
        }

        #[test]
        fn theorem_b_admissibility_matches_min_m(n in 2usize..400, frac in 0.0f64..0.5, m_frac in 0.0f64..=1.0, eta in 0.01f64..0.99) {
            let delta = frac * n as f64;
            let m = ((m_frac * n as f64) as usize).max(1);
            let need = theorem_b_min_m(delta, m, eta).unwrap();
            let res = theorem_b_bound(delta, 1.0, n, m, eta);
            prop_assert_eq!(res.is_ok(), m as f64 >= need);
            if let Ok(rep) = res {
                prop_assert!(rep.upper.unwrap() >= delta - 1e-9);
            }
        }
    }
}
