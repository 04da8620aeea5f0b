use super::*;
use approx::assert_abs_diff_eq;

fn s(seed: u64) -> SeededStream {
    SeededStream::new(seed)
}

fn line(n: usize, dir: &[f64]) -> ConeRep {
    ConeRep::span(&Matrix::from_column_slice(n, 1, dir)).unwrap()
}

#[test]
fn kinematic_orthants() {
    let c = ConeRep::orthant(2);
    let r = verify_kinematic(&c, &c, 20_000, &s(1)).unwrap();
    assert!(r.pass, "{:?}", r.z);
    assert_abs_diff_eq!(r.rhs[2].mean, 1.0 / 16.0, epsilon = 1e-15);
    assert_abs_diff_eq!(r.rhs.iter().map(|e| e.mean).sum::<f64>(), 1.0, epsilon = 1e-12);
}

#[test]
fn kinematic_with_a_plane_is_crofton() {
    let c = ConeRep::orthant(3);
    let plane = ConeRep::span(&Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0])).unwrap();
    let r = verify_kinematic(&c, &plane, 20_000, &s(2)).unwrap();
    assert!(r.pass, "{:?}", r.z);
    // v_{k+1}(R^3_+) = C(3, k+1) / 8.
    assert_abs_diff_eq!(r.rhs[1].mean, 3.0 / 8.0, epsilon = 1e-15);
    assert_abs_diff_eq!(r.rhs[2].mean, 1.0 / 8.0, epsilon = 1e-15);
}

#[test]
fn transversal_subspaces_meet_at_zero() {
    let a = line(3, &[1.0, 0.0, 0.0]);
    let r = verify_kinematic(&a, &a, 500, &s(3)).unwrap();
    assert_eq!(r.lhs[0].mean, 1.0);
    assert_eq!(r.lhs[0].stderr, 0.0);
    assert!(r.pass);
}

#[test]
fn polar_kinematic_consistency() {
    let c = ConeRep::orthant(2);
    let d = ConeRep::planar_wedge(1.0, 0.3);
    let r = verify_polar_kinematic(&c, &d, 20_000, &s(4)).unwrap();
    assert!(r.pass, "{:?}", r.z);
}

#[test]
fn crofton_examples() {
    let r = crofton_probability(&ConeRep::orthant(2), 1, 20_000, &s(5)).unwrap();
    assert_abs_diff_eq!(r.target.mean, 0.5, epsilon = 1e-15);
    assert!(r.pass && (r.estimate.mean - 0.5).abs() < 0.02);
    let r = crofton_probability(&ConeRep::orthant(3), 2, 20_000, &s(6)).unwrap();
    assert_abs_diff_eq!(r.target.mean, 0.25, epsilon = 1e-15);
    assert!(r.pass && (r.estimate.mean - 0.25).abs() < 0.02);
    let half = ConeRep::InequalityCone {
        normals: Matrix::from_column_slice(2, 1, &[0.0, -1.0]),
    };
    assert!(crofton_probability(&line(2, &[1.0, 1.0]), 1, 1000, &s(7)).is_err());
    // A half-plane always meets a line.
    let r = crofton_probability(&half, 1, 2000, &s(7)).unwrap();
    assert_eq!(r.estimate.mean, 1.0);
    assert!(crofton_probability(&ConeRep::orthant(3), 3, 1000, &s(7)).is_err());
}

#[test]
fn projection_formula_orthant() {
    let r = verify_projection_formula(&ConeRep::orthant(4), 2, 20_000, &s(8)).unwrap();
    assert_abs_diff_eq!(r.rhs[1].mean, 4.0 / 16.0, epsilon = 1e-15);
    assert_abs_diff_eq!(r.rhs[2].mean, 11.0 / 16.0, epsilon = 1e-15);
    assert!(r.pass, "{:?}", r.z);
    let r = verify_projection_formula(&line(3, &[1.0, 2.0, 0.0]), 2, 200, &s(9)).unwrap();
    assert_eq!(r.lhs[1].mean, 1.0);
}

#[test]
fn tqc_examples() {
    let c = ConeRep::orthant(3);
    let t = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
    let r = verify_tqc(&t, &c, 20_000, &s(10)).unwrap();
    assert_abs_diff_eq!(r.rhs[1].mean, 3.0 / 8.0, epsilon = 1e-15);
    assert!(r.pass, "{:?}", r.z);
    let p = verify_projection_formula(&c, 2, 20_000, &s(10)).unwrap();
    for (a, b) in r.lhs.iter().zip(&p.lhs) {
        assert!(z_score(a, b).abs() <= 3.0 * 2f64.sqrt());
    }
    let tiny = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1e-6, 0.0]);
    let r = verify_tqc(&tiny, &c, 20_000, &s(11)).unwrap();
    assert!(r.pass, "{:?} {:?}", r.z, r.lhs);
    assert!(verify_tqc(&Matrix::zeros(2, 3), &c, 200, &s(11)).is_err());
}

#[test]
fn projected_statdim_examples() {
    let basis = Matrix::from_fn(40, 5, |i, j| if i == j { 1.0 } else { 0.0 });
    let sub = ConeRep::Subspace { basis };
    let r = projected_statdim(&sub, 20, 200, &s(12)).unwrap();
    assert_abs_diff_eq!(r.estimate.mean, 5.0, epsilon = 1e-12);
    assert_eq!(r.estimate.stderr, 0.0);

    let r = projected_statdim(&ConeRep::orthant(6), 6, 200, &s(13)).unwrap();
    assert_eq!(r.estimate.mean, 3.0);

    let gens = Matrix::from_fn(40, 20, |i, j| if i == j { 1.0 } else { 0.0 });
    let c = ConeRep::GeneratorCone { generators: gens };
    let r = projected_statdim(&c, 25, 2000, &s(14)).unwrap();
    let eta = r.eta.unwrap();
    assert!(eta < 1.0);
    let lower = r.lower.unwrap();
    assert!(r.estimate.mean + 3.0 * r.estimate.stderr >= lower);
    assert!(r.estimate.mean - 3.0 * r.estimate.stderr <= r.upper + 3.0 * r.delta.stderr);
}
