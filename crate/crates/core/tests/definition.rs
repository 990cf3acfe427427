use hybrid_inclusions::definition::{parse_system, shipped, DefinitionError, SystemDoc, SHIPPED};
use hybrid_inclusions::fixtures;
use hybrid_inclusions::hybrid::HybridSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn points(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.gen_range(-2.5..2.5)).collect()).collect();
    // Exercise the discrete coordinates and boundaries too.
    out.push(vec![0.0; dim]);
    if dim == 3 {
        out.extend([vec![1.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], vec![1.0, 0.5, 1.0], vec![1.0, 1.0, 1.0]]);
    }
    if dim == 2 {
        out.extend([vec![0.0, -1.0], vec![1.0, 0.0], vec![2.0, 1.0], vec![0.0, 0.05], vec![-0.05, -0.2]]);
    }
    out
}

fn same(a: &HybridSystem, b: &HybridSystem, label: &str) {
    assert_eq!(a.dim, b.dim, "{label}");
    for x in points(a.dim, 300, 7) {
        assert_eq!(a.c.contains(&x, 1e-9).unwrap(), b.c.contains(&x, 1e-9).unwrap(), "{label} C at {x:?}");
        assert_eq!(a.d.contains(&x, 1e-9).unwrap(), b.d.contains(&x, 1e-9).unwrap(), "{label} D at {x:?}");
        for (m, n, what) in [(&a.f, &b.f, "F"), (&a.g, &b.g, "G")] {
            let (u, v) = (m.value(&x).unwrap(), n.value(&x).unwrap());
            assert_eq!(u.is_empty(), v.is_empty(), "{label} {what} at {x:?}");
            for p in &u.pieces {
                assert!(v.distance(&p.barycenter()) < 1e-9, "{label} {what} at {x:?}");
            }
            for p in &v.pieces {
                assert!(u.distance(&p.barycenter()) < 1e-9, "{label} {what} at {x:?}");
            }
        }
    }
}

#[test]
fn shipped_files_match_fixtures() {
    assert_eq!(SHIPPED.len(), fixtures::all().len());
    for fx in fixtures::all() {
        let def = parse_system(shipped(fx.name).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", fx.name));
        assert_eq!(def.doc.name.as_deref(), Some(fx.name));
        same(&def.system, &fx.system, fx.name);
        assert_eq!(def.family.is_some(), fx.family.is_some(), "{}", fx.name);
        if let (Some(a), Some(b)) = (&def.family, &fx.family) {
            for delta in [0.0, 0.1, 0.3] {
                same(&a.at(delta), &b.at(delta), &format!("{} at delta {delta}", fx.name));
            }
            assert_eq!(a.rho.is_some(), b.rho.is_some());
        }
    }
}

#[test]
fn unknown_state_variable_is_located() {
    let text = r#"{"dim": 2, "C": "all", "F": {"vertices": [["x2", "x3 + 1"]]}, "D": "empty", "G": {"vertices": [["x1", "x2"]]}}"#;
    match parse_system(text) {
        Err(DefinitionError::Expr { pointer, source }) => {
            assert_eq!(pointer, "/F/vertices/0/1");
            assert!(source.to_string().contains("x3"), "{source}");
        }
        other => panic!("expected located expression error, got {other:?}"),
    }
}

#[test]
fn json_errors_carry_a_pointer() {
    let text = r#"{"dim": 2, "C": {"ball": {"center": [0, 0], "radius": "big"}}, "F": {"vertices": [["0","0"]]}, "D": "empty", "G": {"vertices": [["x1","x2"]]}}"#;
    match parse_system(text) {
        Err(DefinitionError::Json { pointer, .. }) => assert_eq!(pointer, "/C/ball/radius"),
        other => panic!("{other:?}"),
    }
    let text = r#"{"dim": 2, "C": {"cube": 1}, "F": {"vertices": [["0","0"]]}, "D": "empty", "G": {"vertices": [["x1","x2"]]}}"#;
    assert!(matches!(parse_system(text), Err(DefinitionError::Json { .. })));
}

#[test]
fn delta_is_only_known_inside_the_family() {
    let text = r#"{"dim": 1, "C": {"sublevel": "x1 - delta"}, "F": {"vertices": [["1"]]}, "D": "empty", "G": {"vertices": [["x1"]]}}"#;
    assert!(matches!(parse_system(text), Err(DefinitionError::Expr { ref pointer, .. }) if pointer == "/C/sublevel"));
}

#[test]
fn dimension_mismatches_are_rejected() {
    let text = r#"{"dim": 2, "C": {"box": {"lo": [0], "hi": [1]}}, "F": {"vertices": [["0","0"]]}, "D": "empty", "G": {"vertices": [["x1","x2"]]}}"#;
    assert!(matches!(parse_system(text), Err(DefinitionError::Invalid { ref pointer, .. }) if pointer == "/C/box/lo"));
    let text = r#"{"dim": 2, "C": "all", "F": {"vertices": [["0"]]}, "D": "empty", "G": {"vertices": [["x1","x2"]]}}"#;
    assert!(parse_system(text).is_err());
}

#[test]
fn params_cannot_shadow_state_or_delta() {
    for p in ["x1", "delta"] {
        let text = format!(r#"{{"dim": 1, "params": {{"{p}": 1}}, "C": "all", "F": {{"vertices": [["1"]]}}, "D": "empty", "G": {{"vertices": [["x1"]]}}}}"#);
        assert!(matches!(parse_system(&text), Err(DefinitionError::Invalid { .. })), "{p}");
    }
}

#[test]
fn fixtures_round_trip_through_json() {
    for fx in fixtures::all() {
        let doc = SystemDoc::from_system(fx.name, &fx.system, fx.family.as_ref()).unwrap();
        let def = parse_system(&doc.to_json()).unwrap_or_else(|e| panic!("{}: {e}\n{}", fx.name, doc.to_json()));
        same(&def.system, &fx.system, fx.name);
        if let (Some(a), Some(b)) = (&def.family, &fx.family) {
            same(&a.at(0.2), &b.at(0.2), fx.name);
        }
        let again = SystemDoc::from_system(fx.name, &def.system, def.family.as_ref()).unwrap();
        assert_eq!(again, doc, "{}", fx.name);
    }
}
