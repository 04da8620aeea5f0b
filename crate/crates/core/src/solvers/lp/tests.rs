use super::*;
use crate::numerics::{gaussian_matrix, gaussian_vector};
use crate::regularizers::parse_operator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best basic feasible solution by enumerating all bases.
fn vertex_oracle(lp: &LpStandardForm) -> Option<f64> {
    let (q, nv) = lp.e.shape();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << nv) {
        if mask.count_ones() as usize != q {
            continue;
        }
        let cols: Vec<usize> = (0..nv).filter(|j| mask & (1 << j) != 0).collect();
        let b = Matrix::from_fn(q, q, |i, k| lp.e[(i, cols[k])]);
        let Some(xb) = b.clone().lu().solve(&lp.d) else {
            continue;
        };
        if (&b * &xb - &lp.d).amax() > 1e-9 || xb.iter().any(|&v| v < -1e-9) {
            continue;
        }
        let obj: f64 = cols.iter().zip(xb.iter()).map(|(&j, v)| lp.c[j] * v).sum();
        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
    }
    best
}

#[test]
fn interior_point_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let nv = rng.random_range(2..=8);
        let q = rng.random_range(1..nv);
        let e = gaussian_matrix(q, nv, &mut rng);
        let feasible = Vector::from_fn(nv, |_, _| rng.random_range(0.1..2.0));
        let c = Vector::from_fn(nv, |_, _| rng.random_range(0.0..3.0));
        let lp = LpStandardForm::new(c, e.clone(), &e * feasible).unwrap();
        let sol = lp.solve(DEFAULT_TOL).unwrap();
        let want = vertex_oracle(&lp).unwrap();
        assert!(
            (sol.objective - want).abs() <= 1e-6 * (1.0 + want.abs()),
            "{} vs {want}",
            sol.objective
        );
        assert!(sol.complementarity <= 1e-6);
        assert!(sol.x.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn lp_errors() {
    let e = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
    let lp = LpStandardForm::new(Vector::from_element(2, 1.0), e, Vector::from_element(2, 1.0)).unwrap();
    assert!(matches!(lp.solve(DEFAULT_TOL), Err(Error::Numerical(_))));
    assert!(LpStandardForm::new(Vector::zeros(3), Matrix::zeros(1, 2), Vector::zeros(1)).is_err());
    assert!(LpStandardForm::new(Vector::from_element(1, f64::NAN), Matrix::zeros(1, 1), Vector::zeros(1)).is_err());
}

#[test]
fn square_invertible_measurements_give_the_unique_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 6;
    let a = gaussian_matrix(n, n, &mut rng);
    let x = gaussian_vector(n, &mut rng);
    let b = &a * &x;
    for d in [
        Matrix::identity(n, n),
        parse_operator("tv_rect(6)").unwrap(),
        gaussian_matrix(9, n, &mut rng),
    ] {
        let out = solve_bp_analysis(&d, &a, &b, DEFAULT_TOL).unwrap();
        let xh = Vector::from_vec(out.x_hat.clone());
        assert!((xh - &x).amax() <= 1e-6);
        assert!(out.residual <= 1e-8);
    }
}

#[test]
fn zero_measurements_give_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = gaussian_matrix(3, 6, &mut rng);
    let out = solve_bp_analysis(
        &parse_operator("tv_square(6)").unwrap(),
        &a,
        &Vector::zeros(3),
        DEFAULT_TOL,
    )
    .unwrap();
    assert!(out.x_hat.iter().all(|v| v.abs() <= 1e-8));
}

#[test]
fn one_sparse_recovery_with_six_measurements() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 8;
    let mut x0 = Vector::zeros(n);
    x0[0] = 1.0;
    let mut ok = 0;
    for _ in 0..100 {
        let a = gaussian_matrix(6, n, &mut rng);
        let out = solve_bp_analysis(&Matrix::identity(n, n), &a, &(&a * &x0), DEFAULT_TOL).unwrap();
        if out.recovers(&x0) {
            ok += 1;
        }
    }
    assert!(ok >= 95, "{ok}/100");
}

#[test]
fn analysis_solution_is_optimal_against_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 10;
    let d = parse_operator("tv_rect(10)").unwrap();
    let a = gaussian_matrix(5, n, &mut rng);
    let b = gaussian_vector(5, &mut rng);
    let out = solve_bp_analysis(&d, &a, &b, DEFAULT_TOL).unwrap();
    let xh = Vector::from_vec(out.x_hat.clone());
    let own = (&d * &xh).iter().map(|v| v.abs()).sum::<f64>();
    assert!((own - out.objective).abs() <= 1e-7, "{own} vs {}", out.objective);
    let null =
        crate::numerics::orthonormal_complement(&crate::numerics::orthonormal_basis(&a.transpose(), 1e-12).unwrap());
    for _ in 0..200 {
        let z = &null * gaussian_vector(null.ncols(), &mut rng) * 0.1;
        let other = &xh + z;
        let o = (&d * other).iter().map(|v| v.abs()).sum::<f64>();
        assert!(
            o >= out.objective - 1e-7,
            "{o} < {} residual {}",
            out.objective,
            out.residual
        );
    }
}

#[test]
fn kernel_not_determined_is_rejected() {
    // Constants are in the kernel of the rectangular difference operator.
    let d = parse_operator("tv_rect(4)").unwrap();
    let a = Matrix::from_row_slice(1, 4, &[1.0, -1.0, 0.0, 0.0]);
    assert!(solve_bp_analysis(&d, &a, &Vector::from_element(1, 1.0), DEFAULT_TOL).is_err());
}
