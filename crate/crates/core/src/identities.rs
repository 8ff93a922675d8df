//! Structural identities of the Cartan connection and consequences among
//! the special-space classes, checked numerically at sample points.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    classify_point, combine, fit_scalar, fit_semi_reducible, lattice_violations, lowering_factor,
    natural_scale, s_from_cartan, semi_reducible_basis, v_curvature_vanishes, ClassificationReport,
    PointClassification, PredicateResult, Tolerances, Verdict,
};
use crate::convention::P_ANTISYMMETRY_SIGN;
use crate::derived::DerivedTensors;
use crate::error::GeometryError;
use crate::frame::{FrameContext, FrameEngine, GeometryFrame};
use crate::jet::Jet;
use crate::metric::MetricSpec;
use crate::projection::project_with;
use crate::sampling::ChartPoint;
use crate::tensor::Tensor;

/// `y -> λ y` factors used for the Euler homogeneity checks. Powers of two
/// rescale exactly in floating point, so a generic factor is included.
pub const EULER_LAMBDAS: [f64; 3] = [0.5, 2.0, 7.3];

pub const METRICITY_TOL: f64 = 1e-9;
pub const V_METRICITY_TOL: f64 = 1e-10;
pub const BRIDGE_TOL: f64 = 1e-8;
pub const HOMOGENEITY_DEGREE_TOL: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-9;
pub const C_REDUCIBLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub name: String,
    pub statement: String,
    pub residual: f64,
    pub scale: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub applicability: Option<String>,
}

impl IdentityResult {
    fn judged(name: &str, statement: &str, residual: f64, scale: f64, tol: f64) -> IdentityResult {
        IdentityResult {
            name: name.to_string(),
            statement: statement.to_string(),
            residual,
            scale,
            verdict: Verdict::judge(residual, scale, tol),
            tolerance: tol,
            params: BTreeMap::new(),
            applicability: None,
        }
    }

    fn not_applicable(
        name: &str,
        statement: &str,
        tol: f64,
        why: impl Into<String>,
    ) -> IdentityResult {
        IdentityResult {
            name: name.to_string(),
            statement: statement.to_string(),
            residual: 0.0,
            scale: 0.0,
            verdict: Verdict::NotApplicable,
            tolerance: tol,
            params: BTreeMap::new(),
            applicability: Some(why.into()),
        }
    }

    fn param(mut self, key: &str, v: Vec<f64>) -> IdentityResult {
        self.params.insert(key.to_string(), v);
        self
    }

    fn condition(mut self, why: impl Into<String>) -> IdentityResult {
        self.applicability = Some(why.into());
        self
    }
}

fn verdict_of<'a>(results: &'a [PredicateResult], name: &str) -> &'a PredicateResult {
    results
        .iter()
        .find(|r| r.name == name)
        .expect("every predicate is evaluated")
}

/// The Kronecker delta as a `(1, 1)` tensor.
fn identity(n: usize) -> Tensor {
    Tensor::from_fn(n, 1, 1, |x| if x[0] == x[1] { 1.0 } else { 0.0 })
}

/// Largest deviation from total symmetry of a rank-3 tensor.
fn asymmetry3(t: &Tensor) -> f64 {
    t.sub(&t.transpose(0, 1))
        .max_abs()
        .max(t.sub(&t.transpose(1, 2)).max_abs())
}

/// Largest `y`-contraction over every slot.
fn radial_part(t: &Tensor, y: &[f64]) -> f64 {
    (0..t.rank())
        .map(|s| t.contract(s, y).max_abs())
        .fold(0.0, f64::max)
}

/// Antisymmetry, pair symmetry, cyclic identity and indicatory property of an `S`-like tensor.
pub fn s_algebra_residual(s: &Tensor, y: Option<&[f64]>) -> f64 {
    let anti_plane = s.add(&s.transpose(2, 3)).max_abs();
    let anti_first = s.add(&s.transpose(0, 1)).max_abs();
    let n = s.dim();
    let pair = Tensor::from_fn(n, 0, 4, |x| s.get(x) - s.get(&[x[2], x[3], x[0], x[1]])).max_abs();
    // cyclic over the plane arguments and the transported vector: (j, k, h)
    let cyclic = Tensor::from_fn(n, 0, 4, |x| {
        let (h, i, j, k) = (x[0], x[1], x[2], x[3]);
        s.get(&[h, i, j, k]) + s.get(&[j, i, k, h]) + s.get(&[k, i, h, j])
    })
    .max_abs();
    let radial = y.map_or(0.0, |y| radial_part(s, y));
    anti_plane.max(anti_first).max(pair).max(cyclic).max(radial)
}

/// `g(T(X, W), T(Y, Z)) - g(T(Y, W), T(X, Z))` in components.
fn s_from_torsion_form(c: &Tensor, c_mixed: &Tensor) -> Tensor {
    let n = c.dim();
    Tensor::from_fn(n, 0, 4, |x| {
        let (h, i, j, k) = (x[0], x[1], x[2], x[3]);
        (0..n)
            .map(|m| {
                c_mixed.get(&[m, j, i]) * c.get(&[m, k, h])
                    - c_mixed.get(&[m, k, i]) * c.get(&[m, j, h])
            })
            .sum()
    })
}

/// Closed form of `S` for a C-reducible Cartan tensor.
fn s_c_reducible(frame: &GeometryFrame) -> Tensor {
    let n = frame.n;
    let (hb, cv, c2) = (&frame.hbar, &frame.c_vec, frame.c_sq);
    let w = 1.0 / ((n as f64 + 1.0) * (n as f64 + 1.0));
    Tensor::from_fn(n, 0, 4, |x| {
        let (h, i, j, k) = (x[0], x[1], x[2], x[3]);
        let hh = |a: usize, b: usize| hb.get(&[a, b]);
        let c = |a: usize| cv.get(&[a]);
        w * (c2 * hh(j, i) * hh(k, h) - c2 * hh(k, i) * hh(j, h)
            + hh(j, i) * c(k) * c(h)
            + hh(k, h) * c(j) * c(i)
            - hh(k, i) * c(j) * c(h)
            - hh(j, h) * c(k) * c(i))
    })
}

/// Frame-level identities: metricity, torsion symmetries, the algebra of
/// `S`, the hv-torsion relations, homogeneity and projection.
pub fn structural_identities(
    engine: &FrameEngine,
    spec: &MetricSpec,
    frame: &GeometryFrame,
    ctx: &FrameContext,
    tol: &Tolerances,
) -> Result<Vec<IdentityResult>, GeometryError> {
    let n = frame.n;
    let y = &frame.point.y;
    let y1: f64 = y.iter().map(|v| v.abs()).sum();
    let sc = &frame.scales;
    let gl = lowering_factor(&frame.g);
    let nat1 = natural_scale(frame, 1);
    let nat2 = natural_scale(frame, 2);
    let mut out = Vec::new();

    // metricity
    let gh = ctx.h_cov(ctx.metric(), 0, 2);
    let gv = ctx.v_cov(ctx.metric(), 0, 2);
    let t = tol.get_or("metricity-h", METRICITY_TOL);
    out.push(IdentityResult::judged(
        "metricity-h",
        "g_ij|k = 0",
        gh.tensor.max_abs(),
        gh.scale,
        t,
    ));
    let t = tol.get_or("metricity-v", V_METRICITY_TOL);
    out.push(IdentityResult::judged(
        "metricity-v",
        "g_ij||k = 0",
        gv.tensor.max_abs(),
        gv.scale.max(frame.g.max_abs() / frame.l),
        t,
    ));

    // covariant derivatives of L, the Kronecker delta and y
    let sp = ctx.space();
    let l_jet = sp.powf(&ctx.energy().scale(2.0), 0.5)?;
    let l_h = ctx.h_cov(std::slice::from_ref(&l_jet), 0, 0);
    let kron: Vec<Jet> = identity(n)
        .data()
        .iter()
        .map(|&v| ctx.constant(v))
        .collect();
    let kron_h = ctx.h_cov(&kron, 1, 1);
    let y_jets: Vec<Jet> = (0..n).map(|i| ctx.y_field(i)).collect();
    let y_v = ctx.v_cov(&y_jets, 1, 0);
    let (r, s) = combine(&[
        (l_h.tensor.max_abs(), l_h.scale.max(frame.l)),
        (kron_h.tensor.max_abs(), 1.0),
        (y_v.tensor.sub(&identity(n)).max_abs(), 1.0),
    ]);
    let t = tol.get_or("covariant-basics", METRICITY_TOL);
    out.push(IdentityResult::judged(
        "covariant-basics",
        "L|k = 0, delta|k = 0, y^i||k = delta^i_k",
        r,
        s,
        t,
    ));

    // torsion symmetries
    let (r, s) = combine(&[
        (asymmetry3(&frame.c), frame.c.max_abs().max(nat1)),
        (
            frame.c.contract(2, y).max_abs(),
            frame.c.max_abs().max(nat1) * y1,
        ),
        (
            frame.gamma.sub(&frame.gamma.transpose(1, 2)).max_abs(),
            sc.gamma,
        ),
    ]);
    let t = tol.get_or("torsion-symmetry", IDENTITY_TOL);
    out.push(IdentityResult::judged(
        "torsion-symmetry",
        "C totally symmetric, C_ijk y^k = 0, Gamma^h_ij = Gamma^h_ji",
        r,
        s,
        t,
    ));

    // v-curvature algebra
    let s_scale = (sc.s * gl).max(nat2);
    let cc = s_from_torsion_form(&frame.c, &frame.c_mixed);
    let (r, s) = combine(&[
        (frame.s_low.sub(&cc).max_abs(), s_scale),
        (
            s_algebra_residual(&frame.s_low, Some(y)),
            s_scale * y1.max(1.0),
        ),
    ]);
    let t = tol.get_or("v-curvature-algebra", IDENTITY_TOL);
    out.push(IdentityResult::judged(
        "v-curvature-algebra",
        "S_hijk = g(T(X,W),T(Y,Z)) - g(T(Y,W),T(X,Z)); antisymmetric, pair symmetric, cyclic, indicatory",
        r,
        s,
        t,
    ));

    // hv-torsion
    let landsberg_scale = sc.c_mixed_hcov * y1;
    let (r, s) = combine(&[
        (
            frame.p_hat.sub(&frame.landsberg).max_abs(),
            sc.p_hat.max(landsberg_scale),
        ),
        (
            frame.p_hat.sub(&frame.p_hat.transpose(1, 2)).max_abs(),
            sc.p_hat.max(landsberg_scale),
        ),
        (
            frame
                .p
                .contract(2, y)
                .max_abs()
                .max(frame.p.contract(3, y).max_abs()),
            sc.p * y1,
        ),
        (
            frame.p.contract(1, y).sub(&frame.p_hat).max_abs(),
            (sc.p * y1).max(sc.p_hat),
        ),
    ]);
    let t = tol.get_or("hv-torsion", IDENTITY_TOL);
    out.push(IdentityResult::judged(
        "hv-torsion",
        "P^i_jk = C^i_jk|0 symmetric; P(eta, X) = P(X, eta) = 0; P^i_hjk y^h = P^i_jk",
        r,
        s,
        t,
    ));

    // Berwald and Cartan coefficients
    let r = frame
        .berwald
        .sub(&frame.gamma)
        .sub(&frame.landsberg)
        .max_abs();
    let s = frame.berwald.max_abs().max(sc.gamma).max(landsberg_scale);
    let t = tol.get_or("connection-bridge", BRIDGE_TOL);
    out.push(IdentityResult::judged(
        "connection-bridge",
        "G^h_ij = Gamma^h_ij + C^h_ij|0",
        r,
        s,
        t,
    ));

    // spray from the formal Christoffel symbols
    let mut spray_scale: f64 = 0.0;
    let spray = Tensor::from_fn(n, 1, 0, |x| {
        let mut v = 0.0;
        let mut a = 0.0;
        for i in 0..n {
            for j in 0..n {
                let term = 0.5 * frame.gamma_formal.get(&[x[0], i, j]) * y[i] * y[j];
                v += term;
                a += term.abs();
            }
        }
        spray_scale = spray_scale.max(a);
        v
    });
    let t = tol.get_or("spray-formula", IDENTITY_TOL);
    out.push(IdentityResult::judged(
        "spray-formula",
        "G^h = 1/2 gamma^h_ij y^i y^j",
        spray.sub(&frame.spray).max_abs(),
        spray_scale,
        t,
    ));

    // v-derivative of C symmetric in the derivative and first slots
    let r = frame.c_vcov.sub(&frame.c_vcov.transpose(0, 3)).max_abs();
    let t = tol.get_or("v-derivative-symmetry", IDENTITY_TOL);
    out.push(IdentityResult::judged(
        "v-derivative-symmetry",
        "C_ijk||l = C_ljk||i",
        r,
        sc.c_vcov.max(nat2),
        t,
    ));

    // P antisymmetry against S|0
    let p_anti = frame.p_low.sub(&frame.p_low.transpose(2, 3));
    let r = p_anti.sub(&frame.s_h0.scale(P_ANTISYMMETRY_SIGN)).max_abs();
    let s = (sc.p * gl).max(sc.s_hcov * y1);
    let t = tol.get_or("p-antisymmetry-bridge", IDENTITY_TOL);
    out.push(IdentityResult::judged(
        "p-antisymmetry-bridge",
        "P_hijk - P_hikj = -S_hijk|0",
        r,
        s,
        t,
    ));

    // projection
    let phi = &frame.phi;
    let once = project_with(phi, &frame.r_torsion);
    let (r, s) = combine(&[
        (
            project_with(phi, &once).sub(&once).max_abs(),
            once.max_abs().max(frame.r_torsion.max_abs()),
        ),
        (
            project_with(phi, &frame.hbar).sub(&frame.hbar).max_abs(),
            frame.g.max_abs(),
        ),
        (project_with(phi, phi).sub(phi).max_abs(), 1.0),
        (
            project_with(phi, &frame.c).sub(&frame.c).max_abs(),
            frame.c.max_abs().max(nat1),
        ),
        (
            project_with(phi, &frame.s_low).sub(&frame.s_low).max_abs(),
            s_scale,
        ),
        (
            ((0..n).map(|i| phi.get(&[i, i])).sum::<f64>() - (n as f64 - 1.0)).abs(),
            1.0,
        ),
    ]);
    let t = tol.get_or("projection", IDENTITY_TOL);
    out.push(IdentityResult::judged(
        "projection",
        "P idempotent; hbar, phi, C, S indicatory; Tr phi = n - 1",
        r,
        s,
        t,
    ));

    // Euler homogeneity under y -> λ y
    let mut worst: f64 = 0.0;
    let mut per_lambda = Vec::new();
    for lambda in EULER_LAMBDAS {
        let scaled = engine.compute(spec, &frame.point.scaled(lambda))?;
        let pairs: [(&Tensor, &Tensor, i32); 8] = [
            (&frame.g, &scaled.g, 0),
            (&frame.hbar, &scaled.hbar, 0),
            (&frame.c, &scaled.c, -1),
            (&frame.s, &scaled.s, -2),
            (&frame.p, &scaled.p, -1),
            (&frame.r, &scaled.r, 0),
            (&frame.p_hat, &scaled.p_hat, 0),
            (&frame.r_torsion, &scaled.r_torsion, 1),
        ];
        let mut rel: f64 = 0.0;
        for (a, b, d) in pairs {
            let factor = lambda.powi(d);
            let mag = a.max_abs() * factor;
            let diff = b.sub(&a.scale(factor)).max_abs();
            let floor = frame.g.max_abs() * factor * frame.l.powi(d);
            rel = rel.max(if diff == 0.0 {
                0.0
            } else {
                diff / mag.max(floor)
            });
        }
        per_lambda.push(rel);
        worst = worst.max(rel);
    }
    let t = tol.get_or("euler-homogeneity", HOMOGENEITY_DEGREE_TOL);
    out.push(
        IdentityResult::judged(
            "euler-homogeneity",
            "degrees: g 0, hbar 0, C -1, S -2, P -1, R 0, P^i_jk 0, R^i_jk 1",
            worst,
            1.0,
            t,
        )
        .param("relative_error_per_lambda", per_lambda),
    );

    // radial decomposition of F and H(eta) = 0
    let t = tol.get_or("radial-decomposition", IDENTITY_TOL);
    if n >= 3 {
        let d = DerivedTensors::compute(frame)?;
        let r_scale = sc.r * gl;
        let (r, s) = combine(&[
            (
                d.f.sub(&d.f_from_parts(frame)).max_abs(),
                d.f.max_abs().max(r_scale),
            ),
            (d.h.contract(1, y).max_abs(), r_scale * y1 * y1 * y1),
        ]);
        out.push(IdentityResult::judged(
            "radial-decomposition",
            "F = m + l(x)a + b(x)l + c l(x)l; H(eta) = 0",
            r,
            s,
            t,
        ));
    } else {
        out.push(IdentityResult::not_applicable(
            "radial-decomposition",
            "F = m + l(x)a + b(x)l + c l(x)l; H(eta) = 0",
            t,
            "requires n >= 3",
        ));
    }
    Ok(out)
}

/// Identities that depend on the classification at the same point.
pub fn conditional_identities(
    frame: &GeometryFrame,
    results: &[PredicateResult],
    tol: &Tolerances,
) -> Vec<IdentityResult> {
    let n = frame.n;
    let nf = n as f64;
    let y = &frame.point.y;
    let y1: f64 = y.iter().map(|v| v.abs()).sum();
    let sc = &frame.scales;
    let gl = lowering_factor(&frame.g);
    let nat2 = natural_scale(frame, 2);
    let mut out = Vec::new();
    let holds = |name: &str| verdict_of(results, name).holds();
    let failed = |name: &str| verdict_of(results, name).verdict == Verdict::Fails;

    // C-reducible consequences
    let stmt = "C-reducible: S, Ric^v and Sc^v = (2 - n)/(n + 1) C^2 in closed form";
    let t = tol.get_or("c-reducible-curvature", C_REDUCIBLE_TOL);
    if n < 3 {
        out.push(IdentityResult::not_applicable(
            "c-reducible-curvature",
            stmt,
            t,
            "requires n >= 3",
        ));
    } else if failed("c-reducible") {
        out.push(IdentityResult::not_applicable(
            "c-reducible-curvature",
            stmt,
            t,
            "condition c-reducible fails",
        ));
    } else {
        let c2 = frame.c_sq;
        let s_scale = (sc.s * gl).max(nat2);
        let ric_model = Tensor::from_fn(n, 0, 2, |x| {
            let (i, j) = (x[0], x[1]);
            (3.0 - nf) / ((nf + 1.0) * (nf + 1.0)) * frame.c_vec.get(&[i]) * frame.c_vec.get(&[j])
                - (nf - 1.0) / ((nf + 1.0) * (nf + 1.0)) * c2 * frame.hbar.get(&[i, j])
        });
        let sc_model = (2.0 - nf) / (nf + 1.0) * c2;
        let c2_scale = c2.abs().max(nat2);
        let (r, s) = combine(&[
            (frame.s_low.sub(&s_c_reducible(frame)).max_abs(), s_scale),
            (frame.ric_v.sub(&ric_model).max_abs(), s_scale * nf),
            ((frame.sc_v - sc_model).abs(), c2_scale),
        ]);
        let ratio = if c2 != 0.0 { frame.sc_v / c2 } else { 0.0 };
        let mut res = IdentityResult::judged("c-reducible-curvature", stmt, r, s, t)
            .param("sc_v_over_c_sq", vec![ratio])
            .param("expected_ratio", vec![(2.0 - nf) / (nf + 1.0)]);
        if !holds("c-reducible") {
            res = res.condition("condition c-reducible not applicable; checked unconditionally");
        }
        out.push(res);
    }

    // P symmetry versus S|0
    let stmt = "P symmetric in its plane slots iff S|0 = 0";
    let t = tol.get("p-symmetric");
    let p_sym = verdict_of(results, "p-symmetric");
    let s_h0 = frame.s_h0.max_abs();
    let common = p_sym.scale.max(sc.s_hcov * y1);
    let p_v = Verdict::judge(p_sym.residual, common, t);
    let s_v = Verdict::judge(s_h0, common, t);
    let bridge = frame
        .p_low
        .sub(&frame.p_low.transpose(2, 3))
        .sub(&frame.s_h0.scale(P_ANTISYMMETRY_SIGN))
        .max_abs();
    let mut res = IdentityResult::judged("p-symmetry-equivalence", stmt, bridge, common, t)
        .param("p_residual", vec![p_sym.residual])
        .param("s_h0_residual", vec![s_h0]);
    if p_v != s_v {
        res.verdict = Verdict::Fails;
        res.applicability = Some(format!(
            "verdicts disagree: P-symmetry {p_v}, S|0 = 0 {s_v}"
        ));
    }
    out.push(res);

    // S^v-recurrence collapses to S = 0
    let stmt = "S^v-recurrent (either order) iff S = 0";
    let sv = verdict_of(results, "sv-recurrent").verdict;
    let sv2 = verdict_of(results, "sv-recurrent-2").verdict;
    let zero = v_curvature_vanishes(frame, tol.get("sv-recurrent"));
    let agree = sv == zero.verdict && sv2 == zero.verdict;
    let mut res = IdentityResult::judged(
        "sv-recurrence-collapse",
        stmt,
        if agree { 0.0 } else { 1.0 },
        1.0,
        0.0,
    )
    .param("s_max", vec![zero.residual])
    .param("s_scale", vec![zero.scale]);
    res.applicability = Some(format!("sv-recurrent {sv}, S = 0 {}", zero.verdict));
    out.push(res);

    // R3-like reconstructions
    let t = tol.get_or("r3-like-reconstruction", IDENTITY_TOL);
    let stmt_r = "R3-like: R(X,Y)Z from F0 and F; F0 = m0 + a l + b eta/L + c l eta/L; R-hat and H from m0, b, c";
    let stmt_i = "R3-like with p-scalar curvature is of s-ps curvature; R3-like with scalar curvature has m0 = t phi";
    let r3 = verdict_of(results, "r3-like").verdict;
    match (r3, DerivedTensors::compute(frame)) {
        (Verdict::Holds, Ok(d)) => {
            let r_scale = sc.r.max(frame.r.max_abs());
            let (r, s) = combine(&[
                (frame.r.sub(&d.r_from_f0(frame)).max_abs(), r_scale),
                (
                    d.f0.sub(&d.f0_from_parts(frame)).max_abs(),
                    d.f0.max_abs().max(r_scale),
                ),
                (
                    d.r_hat.sub(&d.r_hat_from_parts(frame)).max_abs(),
                    r_scale * y1,
                ),
                (d.h.sub(&d.h_from_parts(frame)).max_abs(), r_scale * y1 * y1),
            ]);
            out.push(IdentityResult::judged(
                "r3-like-reconstruction",
                stmt_r,
                r,
                s,
                t,
            ));

            let mut parts = Vec::new();
            if holds("p-scalar-curvature") {
                let ok = holds("scalar-curvature") && holds("s-ps-curvature");
                parts.push((if ok { 0.0 } else { 1.0 }, 1.0));
            }
            let mut t_fit = Vec::new();
            if holds("scalar-curvature") {
                let ok = holds("p-scalar-curvature");
                parts.push((if ok { 0.0 } else { 1.0 }, 1.0));
                let (tv, res) = fit_scalar(&d.m0, &frame.phi);
                parts.push((res, d.m0.max_abs().max(r_scale)));
                t_fit.push(tv);
            }
            if parts.is_empty() {
                out.push(IdentityResult::not_applicable(
                    "r3-curvature-implications",
                    stmt_i,
                    t,
                    "neither scalar nor p-scalar curvature holds",
                ));
            } else {
                let (r, s) = combine(&parts);
                out.push(
                    IdentityResult::judged("r3-curvature-implications", stmt_i, r, s, t)
                        .param("t", t_fit),
                );
            }
        }
        (v, _) => {
            let why = format!("condition r3-like is {v}");
            out.push(IdentityResult::not_applicable(
                "r3-like-reconstruction",
                stmt_r,
                t,
                why.clone(),
            ));
            out.push(IdentityResult::not_applicable(
                "r3-curvature-implications",
                stmt_i,
                t,
                why,
            ));
        }
    }

    // C-reducible and general Landsberg force Berwald
    let stmt = "C-reducible and general Landsberg implies Berwald";
    if holds("c-reducible") && holds("general-landsberg") {
        let b = verdict_of(results, "berwald");
        let mut res = IdentityResult::judged(
            "c-reducible-landsberg-berwald",
            stmt,
            b.residual,
            b.scale,
            b.tolerance,
        );
        res.applicability = Some("conditions hold".into());
        out.push(res);
    } else {
        out.push(IdentityResult::not_applicable(
            "c-reducible-landsberg-berwald",
            stmt,
            tol.get("berwald"),
            "conditions not met",
        ));
    }

    // implication lattice
    let violations = lattice_violations(results);
    let mut res = IdentityResult::judged(
        "implication-lattice",
        "no stronger class holds while a weaker one fails",
        violations.len() as f64,
        1.0,
        0.0,
    );
    if !violations.is_empty() {
        res.applicability = Some(violations.join("; "));
    }
    out.push(res);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointIdentities {
    pub index: usize,
    pub point: ChartPoint,
    pub identities: Vec<IdentityResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub name: String,
    pub statement: String,
    pub verdict: Verdict,
    pub worst_ratio: f64,
    pub holds: usize,
    pub fails: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub metric: String,
    pub classification: ClassificationReport,
    pub points: Vec<PointIdentities>,
    pub summary: Vec<IdentitySummary>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.summary.iter().all(|s| s.verdict != Verdict::Fails)
    }

    pub fn summary_for(&self, name: &str) -> Option<&IdentitySummary> {
        self.summary.iter().find(|s| s.name == name)
    }

    /// Every pointwise result with the given name, in sample order.
    pub fn results(&self, name: &str) -> Vec<&IdentityResult> {
        self.points
            .iter()
            .filter_map(|p| p.identities.iter().find(|r| r.name == name))
            .collect()
    }
}

/// Fails if any point fails, holds if some point holds, else not applicable.
fn summarize(points: &[PointIdentities]) -> Vec<IdentitySummary> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    first
        .identities
        .iter()
        .map(|proto| {
            let rows: Vec<&IdentityResult> = points
                .iter()
                .filter_map(|p| p.identities.iter().find(|r| r.name == proto.name))
                .collect();
            let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
            let (h, f, na) = (
                count(Verdict::Holds),
                count(Verdict::Fails),
                count(Verdict::NotApplicable),
            );
            let verdict = if f > 0 {
                Verdict::Fails
            } else if h > 0 {
                Verdict::Holds
            } else {
                Verdict::NotApplicable
            };
            let worst = rows
                .iter()
                .filter(|r| r.verdict != Verdict::NotApplicable)
                .map(|r| {
                    if r.residual == 0.0 {
                        0.0
                    } else {
                        r.residual / r.scale
                    }
                })
                .fold(0.0, f64::max);
            IdentitySummary {
                name: proto.name.clone(),
                statement: proto.statement.clone(),
                verdict,
                worst_ratio: worst,
                holds: h,
                fails: f,
                not_applicable: na,
            }
        })
        .collect()
}

/// Classify and check every identity at the given points.
pub fn run_identity_suite(
    spec: &MetricSpec,
    points: &[ChartPoint],
    tol: &Tolerances,
) -> Result<IdentityReport, GeometryError> {
    let engine = FrameEngine::new(spec.dim());
    let per_point: Vec<(PointClassification, PointIdentities)> = points
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let (frame, ctx) = engine.compute_with_context(spec, p)?;
            let results = classify_point(&frame, tol);
            let mut identities = structural_identities(&engine, spec, &frame, &ctx, tol)?;
            identities.extend(conditional_identities(&frame, &results, tol));
            Ok((
                PointClassification {
                    index,
                    point: p.clone(),
                    results,
                },
                PointIdentities {
                    index,
                    point: p.clone(),
                    identities,
                },
            ))
        })
        .collect::<Result<_, GeometryError>>()?;
    let (class_points, id_points): (Vec<_>, Vec<_>) = per_point.into_iter().unzip();
    let mut violations = Vec::new();
    for p in &class_points {
        for v in lattice_violations(&p.results) {
            violations.push(format!("point {}: {v}", p.index));
        }
    }
    let classification = ClassificationReport {
        metric: spec.name().to_string(),
        aggregate: crate::classify::aggregate(&class_points),
        points: class_points,
        lattice_violations: violations,
    };
    Ok(IdentityReport {
        metric: spec.name().to_string(),
        classification,
        summary: summarize(&id_points),
        points: id_points,
    })
}

/// Random symmetric positive-definite matrix as a `(0, 2)` tensor.
fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> Tensor {
    let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-0.5..0.5)).collect();
    Tensor::from_fn(n, 0, 2, |x| {
        let aat: f64 = (0..n).map(|k| a[x[0] * n + k] * a[x[1] * n + k]).sum();
        aat + if x[0] == x[1] { 1.0 } else { 0.0 }
    })
}

fn inverse(g: &Tensor) -> Tensor {
    let n = g.dim();
    let m = nalgebra::DMatrix::from_row_slice(n, n, g.data());
    let inv = m.try_inverse().expect("positive definite");
    Tensor::from_fn(n, 2, 0, |x| inv[(x[0], x[1])])
}

/// A random admissible configuration: metric, direction, angular metric and
/// an indicatory covector `C_i`.
struct Synthetic {
    g: Tensor,
    g_inv: Tensor,
    y: Vec<f64>,
    hbar: Tensor,
    c_vec: Tensor,
    c_sq: f64,
}

fn synthetic(rng: &mut ChaCha8Rng, n: usize) -> Synthetic {
    let g = random_metric(rng, n);
    let g_inv = inverse(&g);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let gy: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| g.get(&[i, j]) * y[j]).sum())
        .collect();
    let l = y.iter().zip(&gy).map(|(a, b)| a * b).sum::<f64>().sqrt();
    let ell: Vec<f64> = gy.iter().map(|v| v / l).collect();
    let hbar = Tensor::from_fn(n, 0, 2, |x| g.get(x) - ell[x[0]] * ell[x[1]]);
    // C_i y^i = 0 by removing the ℓ component
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ry: f64 = raw.iter().zip(&y).map(|(a, b)| a * b).sum();
    let c: Vec<f64> = raw.iter().zip(&ell).map(|(a, e)| a - ry / l * e).collect();
    let c_vec = Tensor::from_data(n, 0, 1, c);
    let c_up: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| g_inv.get(&[i, j]) * c_vec.get(&[j])).sum())
        .collect();
    let c_sq = c_vec.data().iter().zip(&c_up).map(|(a, b)| a * b).sum();
    Synthetic {
        g,
        g_inv,
        y,
        hbar,
        c_vec,
        c_sq,
    }
}

/// Random totally symmetric `C_ijk` with `C_ijk y^k = 0`.
fn random_indicatory_cartan(rng: &mut ChaCha8Rng, y: &[f64]) -> Tensor {
    let n = y.len();
    let raw = Tensor::from_fn(n, 0, 3, |_| rng.random_range(-1.0..1.0));
    let sym = Tensor::from_fn(n, 0, 3, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        (raw.get(&[i, j, k])
            + raw.get(&[i, k, j])
            + raw.get(&[j, i, k])
            + raw.get(&[j, k, i])
            + raw.get(&[k, i, j])
            + raw.get(&[k, j, i]))
            / 6.0
    });
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let proj = Tensor::from_fn(
        n,
        1,
        1,
        |x| if x[0] == x[1] { 1.0 } else { 0.0 } - y[x[0]] * y[x[1]] / yy,
    );
    // lower slots projected onto the annihilator of y
    let mut c = sym;
    for slot in 0..3 {
        c = crate::projection::apply_slot(&c, slot, &proj);
    }
    c
}

/// Bound on the size of each term of `S` built from `C`.
fn s_term_scale(c: &Tensor, g_inv: &Tensor) -> f64 {
    2.0 * c.max_abs() * c.max_abs() * lowering_factor(g_inv)
}

/// Checks on synthetic Cartan tensors that bypass the metric pipeline.
pub fn synthetic_algebra_tests(seed: u64, trials: usize) -> Vec<IdentityResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rank_one: f64 = 0.0;
    let mut algebra: f64 = 0.0;
    let mut recovery: f64 = 0.0;
    let mut zero: f64 = 0.0;
    let dims = [3usize, 4, 5];
    for trial in 0..trials {
        let n = dims[trial % dims.len()];
        let sy = synthetic(&mut rng, n);

        // rank-one C gives S = 0
        let c1 = Tensor::from_fn(n, 0, 3, |x| {
            sy.c_vec.get(&[x[0]]) * sy.c_vec.get(&[x[1]]) * sy.c_vec.get(&[x[2]]) / sy.c_sq
        });
        let s1 = s_from_cartan(&c1, &sy.g_inv);
        let sc1 = s_term_scale(&c1, &sy.g_inv);
        rank_one = rank_one.max(s1.max_abs() / sc1);

        // S from arbitrary admissible C obeys the curvature symmetries
        let c = random_indicatory_cartan(&mut rng, &sy.y);
        let s = s_from_cartan(&c, &sy.g_inv);
        let res = s_algebra_residual(&s, Some(&sy.y));
        algebra = algebra.max(res / s_term_scale(&c, &sy.g_inv));

        // planted semi-C-reducible coefficients
        let mu: f64 = rng.random_range(-2.0..2.0);
        let tau = 1.0 - mu;
        let (a, b) = semi_reducible_basis(&sy.hbar, &sy.c_vec, sy.c_sq);
        let planted = a.scale(mu).add(&b.scale(tau));
        let (mu_fit, tau_fit, _) = fit_semi_reducible(&planted, &a, &b);
        recovery = recovery.max((mu_fit - mu).abs()).max((tau_fit - tau).abs());

        // C = 0
        let c0 = Tensor::zeros(n, 0, 3);
        let zero_cv = Tensor::zeros(n, 0, 1);
        let (a0, b0) = semi_reducible_basis(&sy.hbar, &zero_cv, 0.0);
        let (_, _, r0) = fit_semi_reducible(&c0, &a0, &b0);
        zero = zero.max(s_from_cartan(&c0, &sy.g_inv).max_abs()).max(r0);
        let _ = &sy.g;
    }
    let count = vec![trials as f64];
    vec![
        IdentityResult::judged(
            "synthetic-rank-one-s",
            "rank-one C yields S = 0",
            rank_one,
            1.0,
            1e-14,
        )
        .param("trials", count.clone()),
        IdentityResult::judged(
            "synthetic-s-algebra",
            "S from any admissible C is antisymmetric, pair symmetric, cyclic, indicatory",
            algebra,
            1.0,
            1e-13,
        )
        .param("trials", count.clone()),
        IdentityResult::judged(
            "synthetic-semi-recovery",
            "planted (mu, tau) recovered by the semi-C-reducible fit",
            recovery,
            1.0,
            1e-12,
        )
        .param("trials", count.clone()),
        IdentityResult::judged(
            "synthetic-zero-cartan",
            "C = 0 gives zero residuals",
            zero,
            1.0,
            0.0,
        )
        .param("trials", count),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sy = synthetic(&mut rng, 4);
        let (a, b) = semi_reducible_basis(&sy.hbar, &sy.c_vec, sy.c_sq);
        let c = a.scale(0.3).add(&b.scale(0.7));
        let (mu, tau, res) = fit_semi_reducible(&c, &a, &b);
        assert!((mu - 0.3).abs() < 1e-12 && (tau - 0.7).abs() < 1e-12);
        assert!(res < 1e-14);
    }

    #[test]
    fn synthetic_suite_passes() {
        for r in synthetic_algebra_tests(11, 30) {
            assert_eq!(r.verdict, Verdict::Holds, "{}: {:e}", r.name, r.residual);
        }
    }
}
