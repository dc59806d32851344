use freejacobi::chi_saddle::{coeffs_lagrange, critical_points};
use freejacobi::dynamic::{self, Branch};
use freejacobi::flow::mgf_theorem1;
use freejacobi::jacobi_moments::{cauchy_from_moments, corner_initial, integrate, stationary_moments, Family};
use freejacobi::matrix_mc::jacobi_matrix_moments;
use freejacobi::positivity::hausdorff_check;
use freejacobi::vmap::{phase_report, transition_times, Verdict};
use freejacobi::wachter::{make_measure, MeasureKind};
use freejacobi::{Series32, Trajectory, Trajectory32};
use num_complex::{Complex, Complex64};

#[test]
fn long_time_hierarchy_reaches_the_wachter_law() {
    for alpha in [0.55, 0.7] {
        let eq: Trajectory = integrate(Family::EqualRanks, alpha, &corner_initial(Family::EqualRanks, alpha, 10), 40.0, 1e-2).unwrap();
        let target = make_measure(MeasureKind::MuInf, alpha, alpha).unwrap().moments(10).unwrap();
        for (a, b) in eq.last().iter().zip(&target) {
            assert!((a - b).abs() < 1e-8);
        }
        let half = integrate(Family::HalfRank, alpha, &corner_initial(Family::HalfRank, alpha, 10), 60.0, 1e-2).unwrap();
        let target = make_measure(MeasureKind::MuInf, 0.5, alpha).unwrap().moments(10).unwrap();
        for (a, b) in half.last().iter().zip(&target) {
            assert!((a - b).abs() < 1e-7);
        }
    }
}

#[test]
fn generating_function_agrees_with_cauchy_transform() {
    let (alpha, t) = (0.6, 1.0);
    let traj = integrate(Family::EqualRanks, alpha, &corner_initial(Family::EqualRanks, alpha, 60), t, 1e-3).unwrap();
    for z in [Complex64::new(0.2, 0.0), Complex64::new(0.1, 0.2)] {
        // M(z) = Σ m_n z^n = G(1/z)/z
        let from_moments = cauchy_from_moments(traj.last(), 1.0 / z) / z;
        let closed = mgf_theorem1(alpha, t, z).unwrap().m();
        assert!((from_moments - closed).norm() < 1e-9);
    }
}

#[test]
fn single_precision_pipeline() {
    let traj: Trajectory32 = integrate(Family::EqualRanks, 0.7f32, &corner_initial(Family::EqualRanks, 0.7f32, 6), 1.0, 1e-2).unwrap();
    let m1 = traj.last()[1];
    assert!((m1 - (0.7 + 0.3 * (-1.0f32).exp())).abs() < 1e-5);
    let p = mgf_theorem1(0.6f32, 1.0, Complex::new(0.02f32, 0.01)).unwrap();
    assert!(p.forms_gap() < 1e-4);
    let rep = phase_report(0.7f32, 1.0).unwrap();
    assert_eq!(rep.verdict, Verdict::BijectionOntoUnitInterval);
    let (t0, t1) = transition_times(0.7f32).unwrap();
    assert!((t0 - 0.321_640_3).abs() < 1e-5 && (t1 - 6.345_026).abs() < 1e-4);
    let a64 = coeffs_lagrange(0.7f64, 1.0, 8).unwrap();
    let a32 = coeffs_lagrange(0.7f32, 1.0, 8).unwrap();
    for (x, y) in a64.iter().zip(&a32) {
        assert!((x - *y as f64).abs() < 1e-4 * x.abs().max(1.0));
    }
    assert_eq!(critical_points(0.7f32, 7.0).unwrap().regime, critical_points(0.7f64, 7.0).unwrap().regime);
    let s = Series32::geometric(5, Complex::new(0.5, 0.0));
    assert!((s.coeff(3).re - 0.125).abs() < 1e-7);
}

#[test]
fn matrix_corner_moments_track_the_hierarchy() {
    let est = jacobi_matrix_moments(60, 0.5, 0.7, 0.5, 0.01, 6, 4, 3).unwrap();
    let traj = integrate(Family::HalfRank, 0.7, &corner_initial(Family::HalfRank, 0.7, 3), 0.5, 1e-3).unwrap();
    for j in 0..3 {
        let m = traj.last()[j + 1];
        assert!((est.mean[j] - m).abs() < 4.0 * est.stderr[j] + 0.03, "j = {}: {} vs {m}", j + 1, est.mean[j]);
    }
}

#[test]
fn stationary_data_solves_both_transport_branches() {
    let alpha = 0.8;
    let eq = Trajectory::constant(Family::EqualRanks, alpha, stationary_moments(alpha, 80).unwrap(), 1.0, 5e-4);
    let half_m = make_measure(MeasureKind::MuInf, 0.5, alpha).unwrap().moments(80).unwrap();
    assert!(hausdorff_check(&half_m, 6) > -1e-10);
    let half = Trajectory::constant(Family::HalfRank, alpha, half_m, 1.0, 5e-4);
    let z = Complex64::new(3.5, 1.0);
    assert!(dynamic::same_pde_residual(&eq, Branch::Alpha, 0.5, z, 1e-3).unwrap() < 1e-8);
    assert!(dynamic::same_pde_residual(&half, Branch::V, 0.5, z, 1e-3).unwrap() < 1e-8);
    let gap = (dynamic::v_at(&half, 0.5, z).unwrap() - dynamic::tilde_equal(&eq, 0.5, z).unwrap()).norm();
    assert!(gap < 1e-7);
}
