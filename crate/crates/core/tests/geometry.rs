use approx::assert_relative_eq;
use finsler::classify::{
    classify_frames, classify_point, compute_frames, Tolerances, Verdict, PREDICATES,
};
use finsler::fixtures::{fixture, EXTRA_FIXTURE_NAMES, FIXTURE_NAMES};
use finsler::frame::compute_frame;
use finsler::identities::run_identity_suite;
use finsler::parser::parse_metric;
use finsler::sampling::{sample_points, ChartPoint};

fn names() -> impl Iterator<Item = &'static str> {
    FIXTURE_NAMES.iter().chain(&EXTRA_FIXTURE_NAMES).copied()
}

#[test]
fn hyperbolic_plane_christoffels_and_curvature() {
    // g = (dx^2 + dy^2) / y^2: Γ^1_12 = -1/y, Γ^2_11 = 1/y, Γ^2_22 = -1/y
    let f = fixture("hyperbolic-n2").unwrap();
    let (x2, y) = (1.3, vec![0.4, -0.9]);
    let fr = compute_frame(&f.spec, &ChartPoint::new(vec![0.2, x2], y)).unwrap();
    assert_relative_eq!(fr.gamma.get(&[0, 0, 1]), -1.0 / x2, epsilon = 1e-13);
    assert_relative_eq!(fr.gamma.get(&[1, 0, 0]), 1.0 / x2, epsilon = 1e-13);
    assert_relative_eq!(fr.gamma.get(&[1, 1, 1]), -1.0 / x2, epsilon = 1e-13);
    // R_1212 = K (g11 g22 - g12^2) with K = -1
    assert_relative_eq!(
        fr.r_low.get(&[0, 1, 0, 1]),
        -1.0 / x2.powi(4),
        epsilon = 1e-12
    );
    assert_relative_eq!(fr.sc_h, -2.0, epsilon = 1e-12);
}

#[test]
fn flat_randers_has_vanishing_spray_and_constant_cartan_invariants() {
    let f = fixture("randers-n3").unwrap();
    for p in sample_points(&f.spec, &f.domain, 5).unwrap() {
        let fr = compute_frame(&f.spec, &p).unwrap();
        assert!(fr.spray.max_abs() < 1e-14);
        assert!(fr.berwald.max_abs() < 1e-14);
        assert!(fr.r.max_abs() < 1e-14);
        assert!(fr.c.max_abs() > 1e-2);
        assert_relative_eq!(fr.sc_v / fr.c_sq, -0.25, epsilon = 1e-12);
    }
}

#[test]
fn cartan_vector_is_trace_of_cartan_tensor() {
    let spec = parse_metric("dim 3; randers; a = identity; b1 = 0.3; b2 = -0.2; b3 = 0.1").unwrap();
    let fr = compute_frame(&spec, &ChartPoint::new(vec![0.0; 3], vec![0.7, 0.2, -0.5])).unwrap();
    for i in 0..3 {
        let trace: f64 = (0..3)
            .flat_map(|j| (0..3).map(move |k| (j, k)))
            .map(|(j, k)| fr.g_inv.get(&[j, k]) * fr.c.get(&[i, j, k]))
            .sum();
        assert_relative_eq!(fr.c_vec.get(&[i]), trace, epsilon = 1e-13);
    }
}

#[test]
fn verdicts_are_invariant_under_direction_scaling() {
    let tol = Tolerances::default();
    for name in names() {
        let f = fixture(name).unwrap();
        for p in sample_points(&f.spec, &f.domain, 3).unwrap() {
            let base = classify_point(&compute_frame(&f.spec, &p).unwrap(), &tol);
            for lambda in [0.5, 2.0] {
                let scaled =
                    classify_point(&compute_frame(&f.spec, &p.scaled(lambda)).unwrap(), &tol);
                for (a, b) in base.iter().zip(&scaled) {
                    assert_eq!(a.verdict, b.verdict, "{name} {} at lambda {lambda}", a.name);
                }
            }
        }
    }
}

#[test]
fn every_predicate_is_reported_once_per_point() {
    let f = fixture("randers-curved-n3").unwrap();
    let points = sample_points(&f.spec, &f.domain, 4).unwrap();
    let rep = classify_frames(
        f.spec.name(),
        &compute_frames(&f.spec, &points).unwrap(),
        &Tolerances::default(),
    );
    for p in &rep.points {
        let names: Vec<&str> = p.results.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, PREDICATES);
    }
    assert_eq!(rep.aggregate.len(), PREDICATES.len());
}

#[test]
fn conditional_identities_never_fail_when_condition_fails() {
    let gates = [
        ("c-reducible-curvature", "c-reducible"),
        ("r3-like-reconstruction", "r3-like"),
        ("r3-curvature-implications", "r3-like"),
    ];
    for name in names() {
        let f = fixture(name).unwrap();
        let points = sample_points(&f.spec, &f.domain, 5).unwrap();
        let rep = run_identity_suite(&f.spec, &points, &Tolerances::default()).unwrap();
        for (pi, pc) in rep.points.iter().zip(&rep.classification.points) {
            for (id, cond) in gates {
                let c = pc.results.iter().find(|r| r.name == cond).unwrap().verdict;
                let r = pi.identities.iter().find(|r| r.name == id).unwrap();
                if c == Verdict::Fails {
                    assert_eq!(r.verdict, Verdict::NotApplicable, "{name}: {id}");
                }
            }
        }
        assert!(
            rep.all_pass(),
            "{name}: {:?}",
            rep.summary
                .iter()
                .filter(|s| s.verdict == Verdict::Fails)
                .collect::<Vec<_>>()
        );
    }
}

#[test]
fn identity_report_is_reproducible() {
    let f = fixture("quartic-perturbed-n3").unwrap();
    let points = sample_points(&f.spec, &f.domain, 3).unwrap();
    let a = run_identity_suite(&f.spec, &points, &Tolerances::default()).unwrap();
    let b = run_identity_suite(&f.spec, &points, &Tolerances::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn tightening_a_tolerance_can_only_remove_holds() {
    let f = fixture("randers-curved-n3").unwrap();
    let points = sample_points(&f.spec, &f.domain, 3).unwrap();
    let frames = compute_frames(&f.spec, &points).unwrap();
    let loose = classify_frames("r", &frames, &Tolerances::default());
    let mut strict = Tolerances::default();
    strict.set("default", 1e-14).unwrap();
    let tight = classify_frames("r", &frames, &strict);
    for (a, b) in loose.aggregate.iter().zip(&tight.aggregate) {
        if b.verdict == Verdict::Holds {
            assert_eq!(a.verdict, Verdict::Holds, "{}", a.name);
        }
    }
}
