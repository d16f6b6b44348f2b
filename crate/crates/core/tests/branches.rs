use dpnls::branch_asymptotics::{
    default_omega_list, detect_fold, mass_slope, sweep, verify_all, BranchCurve, Law, PointRatios, Verdict,
};
use dpnls::shooting::{find_solutions, Branch, SolveOptions};
use dpnls::Error;

#[test]
fn warm_start_matches_cold_scan() {
    let omegas = default_omega_list(1e-2, 1e-4);
    let s = sweep(2.5, &omegas, &SolveOptions::default()).unwrap();
    assert!(s.failures.is_empty(), "{:?}", s.failures);
    // spot-check three continued points against a fresh scan
    for &i in &[1usize, 2, 4] {
        let cold = find_solutions(2.5, omegas[i], &SolveOptions::default()).unwrap();
        for curve in [&s.small, &s.large] {
            let warm = &curve.points[i];
            let c = cold.records.iter().find(|r| r.branch == curve.branch).unwrap();
            assert!(((warm.m - c.m) / c.m).abs() < 1e-10, "{:?} at {}: {} vs {}", curve.branch, omegas[i], warm.m, c.m);
        }
    }
}

#[test]
fn large_branch_amplitude_grows_and_mass_shrinks() {
    let s = sweep(2.5, &default_omega_list(1e-2, 1e-5), &SolveOptions::default()).unwrap();
    let m: Vec<f64> = s.large.ratios.iter().map(|r| r.m).collect();
    let mass: Vec<f64> = s.large.ratios.iter().map(|r| r.mass).collect();
    assert!(m.windows(2).all(|w| w[1] > w[0]), "{m:?}");
    assert!(mass.windows(2).all(|w| w[1] < w[0]), "{mass:?}");
    // small branch approaches ω^{1/(p−1)}·U†(0)
    let u0 = dpnls::reference_profiles::solve_ustar_cached(2.5, 1e-10).unwrap().central_value;
    let err: Vec<f64> = s.small.ratios.iter().map(|r| (r.m / (r.omega.powf(1.0 / 1.5) * u0) - 1.0).abs()).collect();
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
}

#[test]
fn ratios_come_from_the_record_alone() {
    let s = sweep(2.5, &default_omega_list(1e-2, 1e-3), &SolveOptions::default()).unwrap();
    for (rec, r) in s.large.points.iter().zip(&s.large.ratios) {
        let mut again = PointRatios::of(rec);
        again.slope_mass = r.slope_mass;
        assert_eq!(&again, r);
        assert_eq!(r.beta_over_sqrt_alpha, rec.beta / rec.alpha.sqrt());
    }
    let om = s.large.omegas();
    assert!(om.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn mass_slope_sign_survives_refinement() {
    let coarse = sweep(2.5, &default_omega_list(1e-2, 1e-4), &SolveOptions::default()).unwrap();
    let fine_list: Vec<f64> = (0..=8).map(|k| 1e-2 * 10f64.powf(-0.25 * k as f64)).collect();
    let fine = sweep(2.5, &fine_list, &SolveOptions::default()).unwrap();
    let a = mass_slope(&coarse.large).unwrap();
    let b = mass_slope(&fine.large).unwrap();
    assert!(a.iter().all(|m| m.positive) && b.iter().all(|m| m.positive));
    // common interior points: slopes agree to the stencil's accuracy
    for m in &a {
        let f = b.iter().find(|x| (x.omega / m.omega - 1.0).abs() < 1e-12).unwrap();
        assert!((f.slope / m.slope - 1.0).abs() < 0.05, "{} vs {}", f.slope, m.slope);
    }
}

#[test]
fn law_reports_carry_provenance_and_verdicts() {
    let s = sweep(2.5, &default_omega_list(1e-2, 1e-4), &SolveOptions::default()).unwrap();
    let reps = verify_all(&s.large).unwrap();
    let ids: Vec<Law> = reps.iter().map(|r| r.law).collect();
    assert_eq!(ids, vec![Law::A, Law::D1, Law::D2, Law::D3]);
    for r in &reps {
        assert!(!r.target.provenance.is_empty());
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }
    // laws need the large branch and at least four points
    assert!(dpnls::branch_asymptotics::verify_law(&s.small, Law::A).is_err());
    let short = BranchCurve::new(2.5, Branch::Large, s.large.points[..3].to_vec());
    assert!(dpnls::branch_asymptotics::verify_law(&short, Law::A).is_err());
}

#[test]
fn no_fold_when_solutions_exist_everywhere() {
    match detect_fold(4.0, (0.1, 10.0), &SolveOptions::default()) {
        Err(Error::NoFold(_)) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn sweep_rejects_unordered_lists() {
    assert!(sweep(2.5, &[1e-3, 1e-2], &SolveOptions::default()).is_err());
    assert!(sweep(2.5, &[], &SolveOptions::default()).is_err());
}
