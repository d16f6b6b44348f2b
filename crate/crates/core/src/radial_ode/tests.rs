use super::*;

fn w(r: f64) -> f64 {
    (1.0 + r * r / 3.0).powf(-0.5)
}

#[test]
fn critical_limit_reproduces_talenti() {
    let spec = OdeSpec::NormalizedDoublePower { a: 0.0, b: 0.0, p: 2.5 };
    let out = integrate_traced(&spec, 1.0, &IntegrateOptions::default()).unwrap().0;
    let prof = match out {
        ShootingOutcome::Decays(p) => p,
        o => panic!("expected decay, got {}", o.label()),
    };
    let mut worst = 0.0f64;
    for k in 0..=500 {
        let r = 50.0 * k as f64 / 500.0;
        worst = worst.max((prof.value(r) - w(r)).abs());
    }
    assert!(worst < 1e-8, "sup error {worst}");
}

#[test]
fn large_frequency_rebounds() {
    // a far above any admissible value: the trajectory turns around.
    let spec = OdeSpec::NormalizedDoublePower { a: 50.0, b: 1.0, p: 2.5 };
    let out = integrate(&spec, 1.0, 100.0, &IntegrateOptions::default()).unwrap();
    assert_eq!(out.sign(), 1, "{}", out.label());
}

#[test]
fn decay_match_examples() {
    let o = IntegrateOptions::default();
    let r = 20.0f64;
    let y = (-r).exp() / r;
    let dy = -y * (1.0 + 1.0 / r);
    assert!(decay_match(r, y, dy, 1.0, &o));
    assert!(!decay_match(r, y, 1e-3, 1.0, &o));
    let r = 40.0f64;
    let wv = w(r);
    let dw = -(r / 3.0) * wv.powi(3);
    assert!(decay_match(r, wv, dw, 0.0, &IntegrateOptions { alg_r_min: 30.0, alg_slack: 1e-2, ..o }));
}

#[test]
fn energy_is_nonincreasing() {
    let (a, b, p) = (0.3, 0.8, 2.5);
    let spec = OdeSpec::NormalizedDoublePower { a, b, p };
    let (_, tr) = integrate_traced(&spec, 1.0, &IntegrateOptions::default()).unwrap();
    let e = |u: f64, du: f64| 0.5 * du * du + b * u.powf(p + 1.0) / (p + 1.0) + u.powi(6) / 6.0 - 0.5 * a * u * u;
    for i in 1..tr.r.len() {
        let (e0, e1) = (e(tr.u[i - 1], tr.du[i - 1]), e(tr.u[i], tr.du[i]));
        assert!(e1 <= e0 + 1e-10, "energy rose at r = {}", tr.r[i]);
    }
}

#[test]
fn start_series_is_consistent() {
    let spec = OdeSpec::NormalizedDoublePower { a: 1e-3, b: 2e-2, p: 2.0 };
    let (_, tr) = integrate_traced(&spec, 1.0, &IntegrateOptions::default()).unwrap();
    assert!(tr.start_check < 1e-10, "{}", tr.start_check);
}

#[test]
fn perturbative_and_direct_agree() {
    let spec = OdeSpec::NormalizedDoublePower { a: 1e-4, b: 1e-2, p: 2.5 };
    let mut o = IntegrateOptions::default();
    let (_, t1) = integrate_traced(&spec, 1.0, &o).unwrap();
    o.perturbative = false;
    let (_, t2) = integrate_traced(&spec, 1.0, &o).unwrap();
    assert!(t1.switch_r.is_some());
    // compare on a few radii via linear lookup of the nearest node
    for &r in &[0.5, 2.0, 10.0, 40.0] {
        let i = t1.r.partition_point(|&x| x < r);
        let j = t2.r.partition_point(|&x| x < r);
        let (x1, x2) = (t1.r[i], t2.r[j]);
        let v1 = t1.u[i] + t1.du[i] * (r - x1);
        let v2 = t2.u[j] + t2.du[j] * (r - x2);
        assert!((v1 - v2).abs() < 1e-4 * v1, "r={r}: {v1} vs {v2}");
    }
}

#[test]
fn rejects_bad_input() {
    let spec = OdeSpec::UStarEq { p: 2.0 };
    assert!(integrate_traced(&spec, -1.0, &IntegrateOptions::default()).is_err());
    assert!(integrate_traced(&spec, 1.0, &IntegrateOptions::default().with_rtol(0.1)).is_err());
    assert!(OdeSpec::NormalizedDoublePower { a: -1.0, b: 0.0, p: 2.0 }.validate().is_err());
}

#[test]
fn profile_csv_round_trip() {
    let spec = OdeSpec::NormalizedDoublePower { a: 0.0, b: 0.0, p: 2.5 };
    let prof = match integrate_traced(&spec, 1.0, &IntegrateOptions::default()).unwrap().0 {
        ShootingOutcome::Decays(p) => p,
        _ => unreachable!(),
    };
    let mut buf = Vec::new();
    prof.write_csv(&mut buf).unwrap();
    let back = Profile::read_csv(std::io::BufReader::new(&buf[..])).unwrap();
    assert_eq!(back.r, prof.r);
    assert_eq!(back.u, prof.u);
    assert_eq!(back.tail, prof.tail);
}
