use hybrid_inclusions::closeness::ProbeSchedule;
use hybrid_inclusions::expr::Expr;
use hybrid_inclusions::fixtures;
use hybrid_inclusions::geom::dist;
use hybrid_inclusions::hybrid::PerturbationFamily;
use hybrid_inclusions::reach::*;

const S2: f64 = std::f64::consts::SQRT_2;

fn ball() -> hybrid_inclusions::fixtures::ExampleFixture {
    fixtures::bouncing_ball(1.0, 0.5).unwrap()
}

fn at(x: &[f64]) -> Initial {
    Initial::from(x.to_vec())
}

#[test]
fn ball_reaches_impact_state() {
    let fx = ball();
    let cfg = ReachConfig::default();
    let c = reach(&fx.system, &at(&[1.0, 0.0]), S2, 0, &cfg, 0).unwrap();
    assert_eq!(c.len(), 1);
    assert!(dist(&c.points[0].x, &[0.0, -S2]) < 1e-6, "{:?}", c.points[0].x);
    assert!(!c.partial);
    // The impact speed is sqrt(2 γ h) with h = 1.
    assert!((c.points[0].x[1].abs() - (2.0f64).sqrt()).abs() < 1e-6);
}

#[test]
fn reach_at_time_zero_is_the_initial_condition() {
    let fx = ball();
    for x in [[1.0, 0.0], [0.0, -1.0], [3.0, 2.0]] {
        let c = reach(&fx.system, &at(&x), 0.0, 0, &ReachConfig::default(), 0).unwrap();
        assert!(!c.is_empty());
        assert!(c.points.iter().all(|p| p.x == x.to_vec()));
    }
}

#[test]
fn earlier_impact_empties_the_cloud() {
    let fx = ball();
    for e in [0.1, 0.5, 1.0] {
        let c = reach(&fx.system, &at(&[1.0 - e, 0.0]), S2, 0, &ReachConfig::default(), 0).unwrap();
        assert!(c.is_empty(), "eps {e}: {:?}", c.states());
    }
}

#[test]
fn interval_reach_is_the_pre_jump_segment() {
    let fx = ball();
    let oracle = fx.oracle.clone().unwrap();
    let c = reach_interval(&fx.system, &at(&[1.0, 0.0]), S2 - 0.1, S2 + 0.1, 0, &ReachConfig::default(), 0).unwrap();
    assert!(c.len() > 5);
    for p in &c.points {
        assert!(p.t <= S2 + 1e-9, "point after the jump at t={}", p.t);
        let want = oracle.state_near(&[1.0, 0.0], p.t, 0, 1e-9).unwrap();
        assert!(dist(&want, &p.x) < 1e-6);
    }
    let single = reach_interval(&fx.system, &at(&[1.0, 0.0]), 1.0, 1.0, 0, &ReachConfig::default(), 0).unwrap();
    let point = reach(&fx.system, &at(&[1.0, 0.0]), 1.0, 0, &ReachConfig::default(), 0).unwrap();
    assert_eq!(single.states(), point.states());
}

#[test]
fn interval_query_is_validated() {
    let fx = ball();
    assert!(matches!(
        reach_interval(&fx.system, &at(&[1.0, 0.0]), 2.0, 1.0, 0, &ReachConfig::default(), 0),
        Err(ReachError::Query(_))
    ));
    assert!(reach(&fx.system, &at(&[1.0, 0.0]), -1.0, 0, &ReachConfig::default(), 0).is_err());
}

#[test]
fn hausdorff_examples() {
    let fx = ball();
    let cfg = ReachConfig::default();
    let a = reach(&fx.system, &at(&[1.0, 0.0]), 0.0, 0, &cfg, 0).unwrap();
    assert_eq!(hausdorff(&a, &a), 0.0);
    let mut one = a.clone();
    one.points[0].x = vec![0.0, 0.0];
    let mut two = a.clone();
    two.points[0].x = vec![1.0, 0.0];
    one.points.push(two.points[0].clone());
    let mut b = a.clone();
    b.points[0].x = vec![0.0, 1.0];
    assert!((hausdorff(&one, &b) - S2).abs() < 1e-15);
    let empty = ReachCloud { points: vec![], ..a.clone() };
    assert!(hausdorff(&a, &empty).is_infinite());
}

#[test]
fn clouds_replay() {
    let fx = ball();
    let cfg = ReachConfig::default();
    let x0s = Initial::Points(vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![0.5, -0.5]]);
    let c = reach_interval(&fx.system, &x0s, 0.5, 2.5, 1, &cfg, 7).unwrap();
    assert!(!c.is_empty());
    assert!(replay(&fx.system, &c, &cfg) <= 1e-9);
}

#[test]
fn set_queries_sample_the_set() {
    let th = fixtures::thermostat_default();
    let x0 = Initial::Set { set: th.system.c.clone(), lo: vec![0.0, 0.0], hi: vec![3.0, 1.0] };
    let cfg = ReachConfig { set_samples: 10, ..ReachConfig::default() };
    let c = reach(&th.system, &x0, 0.5, 0, &cfg, 3).unwrap();
    assert_eq!(c.sources.len(), 10);
    assert!(replay(&th.system, &c, &cfg) <= 1e-9);
}

#[test]
fn csv_has_provenance_columns() {
    let fx = ball();
    let c = reach(&fx.system, &at(&[1.0, 0.0]), 1.0, 0, &ReachConfig::default(), 0).unwrap();
    let csv = c.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x1,x2,T,J,source,branch"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn sequential_and_parallel_clouds_agree() {
    use hybrid_inclusions::exec::Exec;
    let fx = ball();
    let x0s = Initial::Points((0..6).map(|k| vec![0.5 + 0.3 * k as f64, 0.1 * k as f64]).collect());
    let seq = ReachConfig { exec: Exec::Sequential, ..ReachConfig::default() };
    let par = ReachConfig { exec: Exec::default(), ..ReachConfig::default() };
    let a = reach_interval(&fx.system, &x0s, 0.0, 3.0, 1, &seq, 1).unwrap();
    let b = reach_interval(&fx.system, &x0s, 0.0, 3.0, 1, &par, 1).unwrap();
    assert_eq!(a, b);
}

fn sched(r: &[f64], d: &[f64], tol: f64) -> ProbeSchedule {
    ProbeSchedule::new(r.to_vec(), d.to_vec(), vec![8; r.len()], tol).unwrap()
}

#[test]
fn osc_probe_shrinks_with_perturbation() {
    let fx = ball();
    let s = sched(&[0.2, 0.1, 0.05, 0.025], &[0.2, 0.1, 0.05, 0.025], 0.1);
    let r = osc_probe(&fx.system, &Expr::constant(1.0, 2), &[1.0, 0.0], 1.0, 0, &s, 0, &ProbeConfig::default()).unwrap();
    assert!(r.nonincreasing(0.1), "{}", r.to_text());
    let d = r.distances();
    // Lipschitz dependence: distances roughly proportional to the perturbation size.
    assert!(d[3] < 0.5 * d[0], "{}", r.to_text());
    assert!(r.levels.iter().all(|l| l.bounded));
}

#[test]
fn zero_schedules_give_zero_distance() {
    let fx = ball();
    let z = ProbeSchedule::zero(2, 4);
    let cfg = ProbeConfig::default();
    let fam = PerturbationFamily::degenerate(&fx.system);
    let osc = osc_probe(&fx.system, &Expr::constant(1.0, 2), &[1.0, 0.0], 1.0, 0, &z, 0, &cfg).unwrap();
    assert_eq!(osc.distances(), vec![0.0, 0.0]);
    let isc = isc_probe(&fam, &fx.system, &[1.0, 0.0], 1.0, 0, &z, 0, &cfg).unwrap();
    assert_eq!(isc.distances(), vec![0.0, 0.0]);
    let inf = inflation_approx(&fam, &fx.system, &[1.0, 0.0], 1.0, 0, &z, 0, &cfg).unwrap();
    assert_eq!(inf.distances(), vec![0.0, 0.0]);
    let dbl = doubling_approx(&fam, &fx.system, &[1.0, 0.0], 1.0, 0, &z, 0, &cfg).unwrap();
    assert_eq!(dbl.distances(), vec![0.0, 0.0]);
}

#[test]
fn isc_probe_flags_the_jump_time() {
    let fx = ball();
    let fam = PerturbationFamily::degenerate(&fx.system);
    let s = sched(&[0.2, 0.1, 0.05], &[0.04, 0.01, 0.0025], 1e-2);
    let r = isc_probe(&fam, &fx.system, &[1.0, 0.0], S2, 0, &s, 0, &ProbeConfig::default()).unwrap();
    assert!(!r.hypotheses[0].holds, "{}", r.to_text());
    assert!(r.levels.iter().all(|l| l.empty_clouds > 0 && l.distance.is_infinite()));
    assert!(!r.consistent);
    let loose = isc_probe(&fam, &fx.system, &[1.0, 0.0], 1.41421, 0, &s, 0, &ProbeConfig::default()).unwrap();
    assert!(!loose.hypotheses[0].holds);
}

#[test]
fn isc_probe_thermostat_between_jumps() {
    let th = fixtures::thermostat_default();
    let fam = PerturbationFamily::degenerate(&th.system);
    let s = ProbeSchedule::default();
    let r = isc_probe(&fam, &th.system, &[1.0, 0.0], 1.0, 1, &s, 0, &ProbeConfig::default()).unwrap();
    assert!(r.hypotheses[0].holds);
    assert!(r.consistent, "{}", r.to_text());
}

#[test]
fn inflation_recovers_the_impact_state() {
    let fx = ball();
    let fam = PerturbationFamily::degenerate(&fx.system);
    let s = sched(&[0.2, 0.1, 0.05, 0.025], &[0.04, 0.01, 0.0025, 0.000625], 0.05);
    let cfg = ProbeConfig { gauge_power: 2.0, ..ProbeConfig::default() };
    let r = inflation_approx(&fam, &fx.system, &[1.0, 0.0], S2, 0, &s, 0, &cfg).unwrap();
    assert!(r.hypotheses[0].holds);
    assert!(r.levels.iter().all(|l| l.points > 0));
    assert!(r.consistent, "{}", r.to_text());
}

#[test]
fn inflation_thermostat_across_first_jump() {
    let th = fixtures::thermostat_default();
    let fam = PerturbationFamily::degenerate(&th.system);
    // From (1.5, 0) the first jump happens at ln 1.5.
    let s = sched(&[0.2, 0.1, 0.05, 0.025, 0.0125], &[0.04, 0.01, 0.0025, 0.000625, 0.00015625], 3e-2);
    let r = inflation_approx(&fam, &th.system, &[1.5, 0.0], 1.5f64.ln(), 1, &s, 0, &ProbeConfig::default()).unwrap();
    assert!(r.consistent, "{}", r.to_text());
}

#[test]
fn doubling_uses_two_times_per_level() {
    let th = fixtures::thermostat_default();
    let fam = PerturbationFamily::degenerate(&th.system);
    let s = sched(&[0.2, 0.1, 0.05, 0.025], &[0.04, 0.01, 0.0025, 0.000625], 1e-2);
    let cfg = ProbeConfig { gauge_power: 2.0, ..ProbeConfig::default() };
    let r = doubling_approx(&fam, &th.system, &[1.0, 0.0], 1.5, 1, &s, 0, &cfg).unwrap();
    assert!(r.hypotheses.iter().all(|h| h.holds), "{}", r.to_text());
    assert!(r.levels.iter().all(|l| l.times.len() == 2));
    assert!(r.consistent, "{}", r.to_text());
}

#[test]
fn doubling_not_applicable_at_time_zero_outside_ctilde() {
    let fx = ball();
    let fam = PerturbationFamily::degenerate(&fx.system);
    let s = ProbeSchedule::default();
    let r = doubling_approx(&fam, &fx.system, &[0.0, -1.0], 0.0, 0, &s, 0, &ProbeConfig::default()).unwrap();
    assert!(!r.applicable);
    assert!(!r.hypotheses[0].holds);
}
