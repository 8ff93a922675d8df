//! JSON and text renderings of frames, classifications and identity reports.
//!
//! Every JSON document shares one envelope:
//! `{schema_version, kind, metric, convention, points, predicates, aggregate}`,
//! with verification reports adding `identities`. Object keys are sorted and
//! points appear in sample order, so identical inputs give identical bytes.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::classify::{ClassificationReport, Tolerances};
use crate::convention::convention_json;
use crate::derived::DerivedTensors;
use crate::frame::GeometryFrame;
use crate::identities::{IdentityReport, IdentityResult};
use crate::tensor::Tensor;

pub const SCHEMA_VERSION: &str = "finsler-report/1";

/// JSON schema for every report, shipped alongside the crate.
pub const SCHEMA: &str = include_str!("../schema/report-v1.json");

fn envelope(kind: &str, metric: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("kind".into(), json!(kind));
    m.insert("metric".into(), json!(metric));
    m.insert("convention".into(), convention_json());
    m
}

/// Named tensors of a frame, keyed by tensor name.
pub fn frame_json(frame: &GeometryFrame) -> Value {
    let named: [(&str, &Tensor); 30] = [
        ("g", &frame.g),
        ("g_inv", &frame.g_inv),
        ("ell", &frame.ell),
        ("hbar", &frame.hbar),
        ("phi", &frame.phi),
        ("C", &frame.c),
        ("C_mixed", &frame.c_mixed),
        ("C_vec", &frame.c_vec),
        ("spray", &frame.spray),
        ("barthel", &frame.barthel),
        ("berwald", &frame.berwald),
        ("berwald_dot", &frame.berwald_dot),
        ("gamma", &frame.gamma),
        ("R_torsion", &frame.r_torsion),
        ("P_hat", &frame.p_hat),
        ("landsberg", &frame.landsberg),
        ("R", &frame.r),
        ("P", &frame.p),
        ("S", &frame.s),
        ("R_low", &frame.r_low),
        ("P_low", &frame.p_low),
        ("S_low", &frame.s_low),
        ("Ric_h", &frame.ric_h),
        ("Ric_v", &frame.ric_v),
        ("C_hcov", &frame.c_hcov),
        ("C_vcov", &frame.c_vcov),
        ("C_vec_hcov", &frame.c_vec_hcov),
        ("C_vec_h0", &frame.c_vec_h0),
        ("S_h0", &frame.s_h0),
        ("S_vcov", &frame.s_vcov),
    ];
    let mut tensors = Map::new();
    for (name, t) in named {
        tensors.insert(name.into(), t.to_json());
    }
    let scalars = json!({
        "L": frame.l,
        "det_g": frame.det_g,
        "C_sq": frame.c_sq,
        "Sc_h": frame.sc_h,
        "Sc_v": frame.sc_v,
    });
    let mut out = Map::new();
    out.insert("tensors".into(), Value::Object(tensors));
    out.insert("scalars".into(), scalars);
    if let Ok(d) = DerivedTensors::compute(frame) {
        out.insert("derived".into(), d.to_json());
    }
    Value::Object(out)
}

/// `tensors` command output.
pub fn tensors_json(metric: &str, frames: &[GeometryFrame]) -> Value {
    let mut m = envelope("tensors", metric);
    let points: Vec<Value> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut p = frame_json(f);
            if let Value::Object(o) = &mut p {
                o.insert("index".into(), json!(i));
                o.insert("point".into(), json!(f.point));
            }
            p
        })
        .collect();
    m.insert("points".into(), Value::Array(points));
    m.insert("predicates".into(), json!([]));
    m.insert("aggregate".into(), json!({ "frames": frames.len() }));
    Value::Object(m)
}

fn aggregate_predicates(report: &ClassificationReport) -> Vec<Value> {
    report
        .aggregate
        .iter()
        .map(|a| {
            let params: Map<String, Value> = a
                .spreads
                .iter()
                .map(|s| {
                    (
                        s.param.clone(),
                        json!({"min": s.min, "max": s.max, "mean": s.mean}),
                    )
                })
                .collect();
            let mut v = json!({
                "name": a.name,
                "residual": a.residual,
                "scale": a.scale,
                "worst_ratio": a.worst_ratio,
                "params": params,
                "verdict": a.verdict,
            });
            if let Some(note) = &a.note {
                v["note"] = json!(note);
            }
            v
        })
        .collect()
}

fn classification_fields(
    m: &mut Map<String, Value>,
    report: &ClassificationReport,
    tol: &Tolerances,
) {
    m.insert("points".into(), json!(report.points));
    m.insert(
        "predicates".into(),
        Value::Array(aggregate_predicates(report)),
    );
    let holding: Vec<&str> = report
        .aggregate
        .iter()
        .filter(|a| a.verdict.holds())
        .map(|a| a.name.as_str())
        .collect();
    m.insert(
        "aggregate".into(),
        json!({
            "holds": holding,
            "lattice_violations": report.lattice_violations,
            "tolerances": tol,
        }),
    );
}

/// `classify` command output.
pub fn classification_json(report: &ClassificationReport, tol: &Tolerances) -> Value {
    let mut m = envelope("classification", &report.metric);
    classification_fields(&mut m, report, tol);
    Value::Object(m)
}

/// `verify` command output: the classification envelope plus identities.
pub fn verification_json(
    report: &IdentityReport,
    synthetic: &[IdentityResult],
    tol: &Tolerances,
) -> Value {
    let mut m = envelope("verification", &report.metric);
    classification_fields(&mut m, &report.classification, tol);
    m.insert(
        "identities".into(),
        json!({
            "summary": report.summary,
            "points": report.points,
            "synthetic": synthetic,
        }),
    );
    if let Some(Value::Object(agg)) = m.get_mut("aggregate") {
        agg.insert(
            "identities_pass".into(),
            json!(report.all_pass() && synthetic.iter().all(|s| !s.verdict.fails())),
        );
    }
    Value::Object(m)
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn sci(v: f64) -> String {
    format!("{v:.2e}")
}

fn sci_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| sci(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn table(out: &mut String, header: [&str; 4], rows: &[[String; 4]]) {
    let mut w = header.map(str::len);
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            w[i] = w[i].max(c.len());
        }
    }
    let line = |out: &mut String, c: [&str; 4]| {
        let _ = writeln!(
            out,
            "{:<a$}  {:<b$}  {:>c$}  {:>d$}",
            c[0],
            c[1],
            c[2],
            c[3],
            a = w[0],
            b = w[1],
            c = w[2],
            d = w[3]
        );
    };
    line(out, header);
    let _ = writeln!(out, "{}", "-".repeat(w.iter().sum::<usize>() + 6));
    for r in rows {
        line(out, [&r[0], &r[1], &r[2], &r[3]]);
    }
}

/// Predicate x verdict table.
pub fn classification_text(report: &ClassificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "metric: {}  points: {}",
        report.metric,
        report.points.len()
    );
    let rows: Vec<[String; 4]> = report
        .aggregate
        .iter()
        .map(|a| {
            [
                a.name.clone(),
                a.verdict.to_string(),
                sci(a.residual),
                sci(a.scale),
            ]
        })
        .collect();
    table(
        &mut out,
        ["predicate", "verdict", "residual", "scale"],
        &rows,
    );
    for a in &report.aggregate {
        for s in &a.spreads {
            let _ = writeln!(
                out,
                "  {} {}: min {} max {} mean {}",
                a.name,
                s.param,
                sci_vec(&s.min),
                sci_vec(&s.max),
                sci_vec(&s.mean)
            );
        }
    }
    if report.lattice_violations.is_empty() {
        let _ = writeln!(out, "implication lattice: consistent");
    } else {
        for v in &report.lattice_violations {
            let _ = writeln!(out, "implication lattice violation: {v}");
        }
    }
    out
}

/// Classification table followed by the identity summary.
pub fn verification_text(report: &IdentityReport, synthetic: &[IdentityResult]) -> String {
    let mut out = classification_text(&report.classification);
    let _ = writeln!(out);
    let rows: Vec<[String; 4]> = report
        .summary
        .iter()
        .map(|s| {
            [
                s.name.clone(),
                s.verdict.to_string(),
                sci(s.worst_ratio),
                format!("{}/{}/{}", s.holds, s.fails, s.not_applicable),
            ]
        })
        .collect();
    table(
        &mut out,
        ["identity", "verdict", "worst ratio", "holds/fails/na"],
        &rows,
    );
    let _ = writeln!(out);
    let rows: Vec<[String; 4]> = synthetic
        .iter()
        .map(|s| {
            [
                s.name.clone(),
                s.verdict.to_string(),
                sci(s.residual),
                sci(s.scale),
            ]
        })
        .collect();
    table(
        &mut out,
        ["synthetic check", "verdict", "residual", "scale"],
        &rows,
    );
    out
}

/// Scalar summary of each frame, one block per point.
pub fn tensors_text(metric: &str, frames: &[GeometryFrame]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "metric: {metric}  points: {}", frames.len());
    for (i, f) in frames.iter().enumerate() {
        let _ = writeln!(out, "point {i}: x = {:?}, y = {:?}", f.point.x, f.point.y);
        let rows: Vec<[String; 4]> = [
            ("g", &f.g),
            ("C", &f.c),
            ("gamma", &f.gamma),
            ("R", &f.r),
            ("P", &f.p),
            ("S", &f.s),
            ("P_hat", &f.p_hat),
            ("R_torsion", &f.r_torsion),
        ]
        .iter()
        .map(|(name, t)| {
            let (u, l) = t.valence();
            [
                name.to_string(),
                format!("({u},{l})"),
                sci(t.max_abs()),
                sci(t.frobenius()),
            ]
        })
        .collect();
        table(&mut out, ["tensor", "type", "max|.|", "frobenius"], &rows);
        let _ = writeln!(
            out,
            "L = {}  det g = {}  C^2 = {}  Sc_h = {}  Sc_v = {}",
            sci(f.l),
            sci(f.det_g),
            sci(f.c_sq),
            sci(f.sc_h),
            sci(f.sc_v)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::compute_frame;
    use crate::parser::parse_metric;
    use crate::sampling::ChartPoint;

    #[test]
    fn schema_is_valid_json_with_version() {
        let s: Value = serde_json::from_str(SCHEMA).unwrap();
        assert!(s["properties"]["schema_version"].is_object());
    }

    #[test]
    fn frame_dump_is_keyed_by_name() {
        let spec = parse_metric("dim 2\nL = sqrt(y1^2 + y2^2)\n").unwrap();
        let f = compute_frame(&spec, &ChartPoint::new(vec![0.1, 0.2], vec![0.3, 0.4])).unwrap();
        let v = tensors_json("e", &[f]);
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["points"][0]["tensors"]["g"][1][1], 1.0);
        assert_eq!(v["points"][0]["scalars"]["L"], 0.5);
    }

    #[test]
    fn sci_has_three_significant_digits() {
        assert_eq!(sci(12345.0), "1.23e4");
        assert_eq!(sci(0.0), "0.00e0");
    }
}
