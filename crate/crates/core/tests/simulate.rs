use hybrid_inclusions::arc::validate_domain;
use hybrid_inclusions::fixtures::{bouncing_ball, thermostat_default, waypoint};
use hybrid_inclusions::simulate::{solve, validate_solution, Priority, SolvePolicy};

fn max_state_error(fx: &hybrid_inclusions::fixtures::ExampleFixture, x0: &[f64], tau: f64) -> (f64, f64, usize) {
    let arc = solve(&fx.system, x0, &SolvePolicy::default().with_tau(tau)).unwrap();
    let oracle = fx.oracle.as_ref().unwrap();
    assert!(validate_domain(&arc.domain()));
    let mut err: f64 = 0.0;
    for (t, j, x) in arc.samples() {
        let y = oracle.state_near(x0, t, j, 1e-9).unwrap_or_else(|| panic!("({t}, {j}) not in oracle domain"));
        err = err.max(x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let jt = arc.jump_times();
    let ot = oracle.jump_times(x0, tau);
    let mut terr: f64 = 0.0;
    for (a, b) in jt.iter().zip(&ot) {
        assert_eq!(a.1, b.1);
        terr = terr.max((a.0 - b.0).abs());
    }
    (err, terr, jt.len().min(ot.len()))
}

#[test]
fn bouncing_ball_matches_closed_form() {
    let fx = bouncing_ball(1.0, 0.5).unwrap();
    let (err, terr, n) = max_state_error(&fx, &[1.0, 0.0], 9.0);
    eprintln!("ball err {err:e} jump-time err {terr:e} jumps {n}");
    assert!(n >= 3);
    assert!(err < 1e-6);
    assert!(terr < 1e-8);
}

#[test]
fn thermostat_matches_closed_form() {
    let fx = thermostat_default();
    for x0 in [[1.5, 0.0], [1.0, 0.0], [2.0, 1.0], [1.2, 1.0]] {
        let (err, terr, n) = max_state_error(&fx, &x0, 12.0);
        eprintln!("thermostat {x0:?} err {err:e} jump-time err {terr:e} jumps {n}");
        assert!(n >= 3);
        assert!(err < 1e-6 && terr < 1e-8);
    }
}

#[test]
fn waypoint_reaches_final_point_at_path_length() {
    let fx = waypoint(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
    let arc = solve(&fx.system, &[0.0, 0.0, 0.0], &SolvePolicy::default().with_priority(Priority::JumpFirst).with_tau(10.0)).unwrap();
    let jt = arc.jump_times();
    eprintln!("{jt:?} {:?}", arc.end_state());
    assert_eq!(jt.len(), 2);
    assert!((jt[1].0 - 2.0).abs() < 1e-8);
    validate_solution(&fx.system, &arc, 1e-6).unwrap();
}
