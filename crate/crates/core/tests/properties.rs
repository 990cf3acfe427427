use hybrid_inclusions::arc::HybridArc;
use hybrid_inclusions::closeness::{closeness_margin, directed_hausdorff, hausdorff_points, tau_eps_close};
use hybrid_inclusions::exec::Exec;
use hybrid_inclusions::expr::Expr;
use hybrid_inclusions::fixtures;
use hybrid_inclusions::hybrid::rho_inflate;
use hybrid_inclusions::reach::{reach, Initial, ReachConfig};
use hybrid_inclusions::sets::SetSpec;
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -3.0..3.0f64
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(coord(), n)
}

fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(point(2), 1..10)
}

/// Random polynomial text in x1, x2 with small integer powers.
fn poly() -> impl Strategy<Value = (Vec<(f64, u32, u32)>, String)> {
    prop::collection::vec((-2.0..2.0f64, 0u32..3, 0u32..3), 1..5).prop_map(|terms| {
        let text = terms
            .iter()
            .map(|(c, a, b)| format!("({c:.6}) * x1^{a} * x2^{b}"))
            .collect::<Vec<_>>()
            .join(" + ");
        let rounded = terms.iter().map(|(c, a, b)| (format!("{c:.6}").parse().unwrap(), *a, *b)).collect();
        (rounded, text)
    })
}

fn poly_eval(terms: &[(f64, u32, u32)], x: &[f64]) -> f64 {
    terms.iter().map(|(c, a, b)| c * x[0].powi(*a as i32) * x[1].powi(*b as i32)).sum()
}

/// Arc with up to three jumps and piecewise-linear flows.
fn arc() -> impl Strategy<Value = HybridArc> {
    let piece = (prop::collection::vec((0.05..0.5f64, point(2)), 1..4), point(2));
    (point(2), prop::collection::vec(piece, 0..3)).prop_map(|(x0, pieces)| {
        let mut a = HybridArc::start(x0);
        let mut t = 0.0;
        for (flows, jump) in pieces {
            for (dt, x) in flows {
                t += dt;
                a.push_flow(t, x);
            }
            a.push_jump(jump);
        }
        a
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn polynomial_eval_matches_direct((terms, text) in poly(), x in point(2)) {
        let e = Expr::parse(&text, 2, &[]).unwrap();
        let want = poly_eval(&terms, &x);
        prop_assert!((e.eval(&x).unwrap() - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn display_reparses_to_same_values((_, text) in poly(), x in point(2)) {
        let e = Expr::parse(&text, 2, &[]).unwrap();
        let back = Expr::parse(&e.to_string(), 2, &[]).unwrap();
        prop_assert!((e.eval(&x).unwrap() - back.eval(&x).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn gradient_matches_central_difference((_, text) in poly(), x in point(2)) {
        let e = Expr::parse(&text, 2, &[]).unwrap();
        let g = e.grad(&x, None).unwrap();
        for i in 0..2 {
            let h = 1e-5;
            let (mut p, mut m) = (x.clone(), x.clone());
            p[i] += h;
            m[i] -= h;
            let fd = (e.eval(&p).unwrap() - e.eval(&m).unwrap()) / (2.0 * h);
            prop_assert!((g[i] - fd).abs() <= 1e-4 * (1.0 + fd.abs()), "d/dx{} {} vs {}", i + 1, g[i], fd);
        }
    }

    #[test]
    fn ball_membership_matches_distance(c in point(2), r in 0.1..2.0f64, x in point(2)) {
        let s = SetSpec::ball(c.clone(), r);
        let d = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        prop_assert_eq!(s.contains(&x, 0.0).unwrap(), d <= r);
        let dist = s.distance(&x).unwrap().value;
        prop_assert!((dist - (d - r).max(0.0)).abs() <= 1e-9);
    }

    #[test]
    fn intersection_and_union_follow_members(x in point(2), a in point(2), b in point(2)) {
        let (s1, s2) = (SetSpec::ball(a, 1.5), SetSpec::boxed(b.iter().map(|v| v - 1.0).collect(), b.iter().map(|v| v + 1.0).collect()));
        let (in1, in2) = (s1.contains(&x, 0.0).unwrap(), s2.contains(&x, 0.0).unwrap());
        let i = SetSpec::Intersection(vec![s1.clone(), s2.clone()]);
        let u = SetSpec::Union(vec![s1, s2]);
        prop_assert_eq!(i.contains(&x, 0.0).unwrap(), in1 && in2);
        prop_assert_eq!(u.contains(&x, 0.0).unwrap(), in1 || in2);
    }

    #[test]
    fn box_projection_is_nearest_member(lo in point(2), w in point(2), x in point(2), y in point(2)) {
        let hi: Vec<f64> = lo.iter().zip(&w).map(|(l, w)| l + w.abs() + 0.1).collect();
        let s = SetSpec::boxed(lo.clone(), hi.clone());
        let p = s.project(&x).unwrap().unwrap();
        prop_assert!(s.contains(&p, 1e-12).unwrap());
        let q: Vec<f64> = y.iter().zip(lo.iter().zip(&hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect();
        let dp = ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt();
        let dq = ((q[0] - x[0]).powi(2) + (q[1] - x[1]).powi(2)).sqrt();
        prop_assert!(dp <= dq + 1e-12);
    }

    #[test]
    fn closeness_symmetric_and_monotone(x in arc(), y in arc(), tau in 0.0..3.0f64, e1 in 0.0..2.0f64, e2 in 0.0..2.0f64) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert_eq!(closeness_margin(&x, &y, tau).value, closeness_margin(&y, &x, tau).value);
        prop_assert_eq!(tau_eps_close(&x, &y, tau, lo), tau_eps_close(&y, &x, tau, lo));
        prop_assert!(!tau_eps_close(&x, &y, tau, lo) || tau_eps_close(&x, &y, tau, hi));
    }

    #[test]
    fn arc_is_close_to_itself(x in arc(), tau in 0.0..3.0f64, eps in 1e-9..1.0f64) {
        let m = closeness_margin(&x, &x, tau);
        prop_assert!(m.value <= m.resolution);
        prop_assert!(tau_eps_close(&x, &x, tau, eps));
    }

    #[test]
    fn csv_round_trip(x in arc()) {
        let back = HybridArc::from_csv(&x.to_csv()).unwrap();
        prop_assert_eq!(back.intervals, x.intervals);
    }

    #[test]
    fn hausdorff_is_a_metric(a in cloud(), b in cloud(), c in cloud()) {
        let ab = hausdorff_points(&a, &b);
        prop_assert_eq!(hausdorff_points(&a, &a), 0.0);
        prop_assert_eq!(ab, hausdorff_points(&b, &a));
        prop_assert!(hausdorff_points(&a, &c) <= ab + hausdorff_points(&b, &c) + 1e-12);
        prop_assert!(directed_hausdorff(&a, &b) <= ab);
    }

    #[test]
    fn hausdorff_of_subset_is_directed(a in cloud(), extra in cloud()) {
        let mut sup = a.clone();
        sup.extend(extra);
        prop_assert_eq!(directed_hausdorff(&a, &sup), 0.0);
        prop_assert_eq!(hausdorff_points(&a, &sup), directed_hausdorff(&sup, &a));
    }

    #[test]
    fn inflation_is_monotone_in_delta(x in point(2), d1 in 0.0..0.5f64, dd in 0.0..0.5f64) {
        let h = fixtures::bouncing_ball(1.0, 0.5).unwrap().system;
        let rho = Expr::parse("1 + 0.5 * x2^2", 2, &[]).unwrap();
        let (a, b) = (rho_inflate(&h, &rho, d1), rho_inflate(&h, &rho, d1 + dd));
        prop_assert!(!a.c.contains(&x, 0.0).unwrap() || b.c.contains(&x, 0.0).unwrap());
        prop_assert!(!a.d.contains(&x, 0.0).unwrap() || b.d.contains(&x, 0.0).unwrap());
        prop_assert!(!h.c.contains(&x, 0.0).unwrap() || a.c.contains(&x, 0.0).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reach_is_seed_deterministic_and_exec_independent(h0 in 0.2..2.0f64, v0 in -1.0..1.0f64, t in 0.0..2.5f64, seed in 0u64..1000) {
        let h = fixtures::bouncing_ball(1.0, 0.5).unwrap().system;
        let x0 = Initial::from(vec![h0, v0]);
        let seq = ReachConfig { exec: Exec::Sequential, ..ReachConfig::default() };
        let par = ReachConfig { exec: Exec::Parallel, ..ReachConfig::default() };
        let a = reach(&h, &x0, t, 0, &seq, seed).unwrap();
        let b = reach(&h, &x0, t, 0, &seq, seed).unwrap();
        let c = reach(&h, &x0, t, 0, &par, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
        for p in &a.points {
            prop_assert!(p.x[0] >= -1e-9);
        }
    }

    #[test]
    fn thermostat_reach_stays_in_band(z in 1.0..2.0f64, q in 0u8..2, t in 0.0..3.0f64, j in 0usize..3) {
        let h = fixtures::thermostat_default().system;
        let cloud = reach(&h, &Initial::from(vec![z, q as f64]), t, j, &ReachConfig::default(), 0).unwrap();
        for p in &cloud.points {
            prop_assert!(p.x[0] >= 1.0 - 1e-9 && p.x[0] <= 2.0 + 1e-9, "{:?}", p.x);
            prop_assert!(p.x[1] == 0.0 || p.x[1] == 1.0);
        }
    }
}
