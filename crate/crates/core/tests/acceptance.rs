//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::process::Command;
use std::time::Instant;

use finsler::classify::{classify_manifold, Tolerances, Verdict};
use finsler::derivatives::{fd_derivative, jet_eval};
use finsler::fixtures::{fixture, EXTRA_FIXTURE_NAMES, FIXTURE_NAMES};
use finsler::frame::compute_frame;
use finsler::identities::{run_identity_suite, synthetic_algebra_tests, IdentityReport};
use finsler::sampling::sample_points;

const POINTS: usize = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn all_fixtures() -> Vec<&'static str> {
    FIXTURE_NAMES
        .iter()
        .chain(&EXTRA_FIXTURE_NAMES)
        .copied()
        .collect()
}

fn suite(name: &str) -> IdentityReport {
    let f = fixture(name).unwrap();
    let points = sample_points(&f.spec, &f.domain, POINTS).unwrap();
    run_identity_suite(&f.spec, &points, &Tolerances::default()).unwrap()
}

fn jet_vs_finite_difference() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for name in FIXTURE_NAMES {
        let f = fixture(name).unwrap();
        let e = f.spec.energy();
        for p in sample_points(&f.spec, &f.domain, 3).unwrap() {
            let table = jet_eval(&e, &p, (2, 3)).unwrap();
            for (idx, exact) in table.iter() {
                let approx = fd_derivative(&e, &p, idx).unwrap();
                let rel = (exact - approx).abs() / exact.abs().max(1e-3);
                worst = worst.max(rel);
                count += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-4 && secs < 10.0,
        format!("{count} partials, worst relative error {worst:.2e}, {secs:.2}s"),
    )
}

fn flatness() -> Outcome {
    let f = fixture("euclidean-n2").unwrap();
    let mut worst: f64 = 0.0;
    for p in sample_points(&f.spec, &f.domain, POINTS).unwrap() {
        let fr = compute_frame(&f.spec, &p).unwrap();
        for t in [&fr.c, &fr.r, &fr.p, &fr.s, &fr.gamma] {
            worst = worst.max(t.max_abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max |C|, |R|, |P|, |S|, |Gamma| = {worst:.2e}"),
    )
}

fn curvature_constant(name: &str) -> (f64, f64) {
    let f = fixture(name).unwrap();
    let rep = classify_manifold(&f.spec, &f.domain, POINTS, &Tolerances::default()).unwrap();
    let ks: Vec<f64> = rep
        .points
        .iter()
        .map(|p| {
            p.results
                .iter()
                .find(|r| r.name == "h-isotropic")
                .unwrap()
                .params["k0"][0]
        })
        .collect();
    (
        ks.iter().cloned().fold(f64::INFINITY, f64::min),
        ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    )
}

fn sphere_curvature() -> Outcome {
    let (s_lo, s_hi) = curvature_constant("sphere-n2");
    let (h_lo, h_hi) = curvature_constant("hyperbolic-n2");
    let pass = (s_lo - 1.0).abs() <= 1e-6
        && (s_hi - 1.0).abs() <= 1e-6
        && (h_lo + 1.0).abs() <= 1e-6
        && (h_hi + 1.0).abs() <= 1e-6;
    outcome(
        pass,
        format!("sphere k0 in [{s_lo:.9}, {s_hi:.9}], hyperbolic k0 in [{h_lo:.9}, {h_hi:.9}]"),
    )
}

const STRUCTURAL: [&str; 13] = [
    "metricity-h",
    "metricity-v",
    "covariant-basics",
    "torsion-symmetry",
    "v-curvature-algebra",
    "hv-torsion",
    "connection-bridge",
    "spray-formula",
    "v-derivative-symmetry",
    "p-antisymmetry-bridge",
    "projection",
    "euler-homogeneity",
    "radial-decomposition",
];

fn cartan_identities(reports: &[(&str, IdentityReport)]) -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, rep) in reports {
        for id in STRUCTURAL {
            for r in rep.results(id) {
                checked += 1;
                if r.verdict == Verdict::Fails {
                    failures.push(format!("{name}/{id}"));
                }
            }
        }
    }
    failures.dedup();
    outcome(
        failures.is_empty(),
        format!(
            "{checked} checks over {} fixtures; failing: {failures:?}",
            reports.len()
        ),
    )
}

fn c_reducible_chain(reports: &[(&str, IdentityReport)]) -> Outcome {
    let rep = &reports.iter().find(|(n, _)| *n == "randers-n3").unwrap().1;
    let needed = [
        "berwald",
        "landsberg",
        "general-landsberg",
        "c-reducible",
        "p-reducible",
    ];
    let verdicts: Vec<(&str, Verdict)> = needed
        .iter()
        .map(|n| (*n, rep.classification.verdict(n).unwrap()))
        .collect();
    let classes_ok = verdicts.iter().all(|(_, v)| *v == Verdict::Holds);
    let ratios: Vec<f64> = rep
        .results("c-reducible-curvature")
        .iter()
        .map(|r| r.params["sc_v_over_c_sq"][0])
        .collect();
    let worst = ratios.iter().map(|r| (r + 0.25).abs()).fold(0.0, f64::max);
    let pass = classes_ok && ratios.len() == POINTS && worst <= 1e-7;
    outcome(
        pass,
        format!("classes {verdicts:?}; Sc^v/C^2 within {worst:.2e} of -1/4"),
    )
}

fn minkowski_fixture() -> Outcome {
    let f = fixture("quartic-minkowski-n3").unwrap();
    let mut tol = Tolerances::default();
    tol.set("locally-minkowskian", 1e-9).unwrap();
    tol.set("berwald", 1e-9).unwrap();
    let rep = classify_manifold(&f.spec, &f.domain, POINTS, &tol).unwrap();
    let min_c = rep
        .points
        .iter()
        .map(|p| {
            p.results
                .iter()
                .find(|r| r.name == "riemannian")
                .unwrap()
                .residual
        })
        .fold(f64::INFINITY, f64::min);
    let pass = rep.verdict("locally-minkowskian") == Some(Verdict::Holds)
        && rep.verdict("berwald") == Some(Verdict::Holds)
        && rep.verdict("riemannian") == Some(Verdict::Fails)
        && min_c >= 1e-2;
    outcome(
        pass,
        format!(
            "locally-minkowskian {:?}, berwald {:?}, riemannian {:?} with min |C| {min_c:.2e}",
            rep.verdict("locally-minkowskian"),
            rep.verdict("berwald"),
            rep.verdict("riemannian")
        ),
    )
}

fn every_point_holds(reports: &[(&str, IdentityReport)], id: &str) -> (bool, usize) {
    let mut n = 0;
    let mut ok = true;
    for (_, rep) in reports {
        for r in rep.results(id) {
            n += 1;
            ok &= r.verdict == Verdict::Holds;
        }
    }
    (ok, n)
}

fn sv_collapse(reports: &[(&str, IdentityReport)]) -> Outcome {
    let (ok, n) = every_point_holds(reports, "sv-recurrence-collapse");
    outcome(
        ok && n == reports.len() * POINTS,
        format!("{n} points, verdicts agree: {ok}"),
    )
}

fn p_symmetry_equivalence(reports: &[(&str, IdentityReport)]) -> Outcome {
    let (ok, n) = every_point_holds(reports, "p-symmetry-equivalence");
    let rep = &reports
        .iter()
        .find(|(n, _)| *n == "quartic-perturbed-n3")
        .unwrap()
        .1;
    let nonzero = rep.results("p-symmetry-equivalence").iter().all(|r| {
        let (p, s) = (r.params["p_residual"][0], r.params["s_h0_residual"][0]);
        p > 1e-6 * r.scale && s > 1e-6 * r.scale
    });
    outcome(
        ok && nonzero && n == reports.len() * POINTS,
        format!("{n} points agree: {ok}; both sides nonzero on quartic-perturbed-n3: {nonzero}"),
    )
}

fn synthetic_recovery() -> Outcome {
    let results = synthetic_algebra_tests(2024, 100);
    let get = |name: &str| results.iter().find(|r| r.name == name).unwrap();
    let semi = get("synthetic-semi-recovery");
    let rank = get("synthetic-rank-one-s");
    let pass = results.iter().all(|r| r.verdict == Verdict::Holds)
        && semi.residual <= 1e-12
        && rank.residual <= 1e-14;
    outcome(
        pass,
        format!(
            "(mu, tau) error {:.2e}; rank-one |S|/scale {:.2e}",
            semi.residual, rank.residual
        ),
    )
}

fn implication_lattice(reports: &[(&str, IdentityReport)]) -> Outcome {
    let violations: Vec<String> = reports
        .iter()
        .flat_map(|(name, r)| {
            r.classification
                .lattice_violations
                .iter()
                .map(move |v| format!("{name}: {v}"))
        })
        .collect();
    outcome(
        violations.is_empty(),
        format!(
            "{} fixtures x {POINTS} points, violations: {violations:?}",
            reports.len()
        ),
    )
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_finsler"))
            .args(["classify", "--spec", "randers-curved-n3", "--seed", "42"])
            .env_remove("FINSLER_FIXTURES")
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    let pass = a.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout;
    outcome(
        pass,
        format!(
            "{} bytes, identical: {}",
            a.stdout.len(),
            a.stdout == b.stdout
        ),
    )
}

fn main() {
    let start = Instant::now();
    let reports: Vec<(&str, IdentityReport)> =
        all_fixtures().into_iter().map(|n| (n, suite(n))).collect();
    let criteria: Vec<(&str, Outcome)> = vec![
        (
            "jet engine agrees with finite differences",
            jet_vs_finite_difference(),
        ),
        ("euclidean-n2 is flat", flatness()),
        (
            "sphere and hyperbolic plane curvature constants",
            sphere_curvature(),
        ),
        ("Cartan connection identities", cartan_identities(&reports)),
        (
            "C-reducible chain on randers-n3",
            c_reducible_chain(&reports),
        ),
        ("quartic Minkowski classification", minkowski_fixture()),
        ("S^v-recurrence collapses to S = 0", sv_collapse(&reports)),
        (
            "P symmetry equivalent to S|0 = 0",
            p_symmetry_equivalence(&reports),
        ),
        ("synthetic recovery", synthetic_recovery()),
        ("implication lattice", implication_lattice(&reports)),
        ("byte-identical classify output", determinism()),
    ];
    let mut failed = 0;
    for (i, (label, o)) in criteria.iter().enumerate() {
        println!(
            "criterion {:>2} {}: {label} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} passed in {:.2}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
