//! Special-Finsler-space predicates as scaled residuals with fitted
//! auxiliary quantities, pointwise and aggregated over samples.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derived::{wedge_expansion, DerivedTensors};
use crate::error::GeometryError;
use crate::frame::{FrameEngine, GeometryFrame};
use crate::lstsq::fit_combination;
use crate::metric::MetricSpec;
use crate::projection::apply_projection;
use crate::sampling::{sample_points, ChartDomain, ChartPoint};
use crate::tensor::Tensor;

pub const DEFAULT_TOLERANCE: f64 = 1e-7;

/// `C L / max|g|` below this makes shape predicates about `C` meaningless.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Fitted scalars demanded to be constant: `max - min <= CONSTANCY_TOL (1 + |mean|)`.
pub const CONSTANCY_TOL: f64 = 1e-6;

pub const PREDICATES: [&str; 26] = [
    "riemannian",
    "locally-minkowskian",
    "berwald",
    "ch-recurrent",
    "p-star",
    "cv-recurrent",
    "c0-recurrent",
    "semi-c-reducible",
    "c-reducible",
    "c2-like",
    "quasi-c-reducible",
    "s3-like",
    "s4-like",
    "sv-recurrent",
    "sv-recurrent-2",
    "landsberg",
    "general-landsberg",
    "p-symmetric",
    "p2-like",
    "p-reducible",
    "h-isotropic",
    "scalar-curvature",
    "constant-curvature",
    "r3-like",
    "p-scalar-curvature",
    "s-ps-curvature",
];

/// `(stronger, weaker)` pairs that must never be `(holds, fails)`.
pub const IMPLICATIONS: [(&str, &str); 11] = [
    ("locally-minkowskian", "berwald"),
    ("berwald", "landsberg"),
    ("landsberg", "general-landsberg"),
    ("berwald", "ch-recurrent"),
    ("berwald", "p-star"),
    ("landsberg", "p-star"),
    ("c-reducible", "semi-c-reducible"),
    ("c2-like", "semi-c-reducible"),
    ("semi-c-reducible", "quasi-c-reducible"),
    ("constant-curvature", "scalar-curvature"),
    ("c-reducible", "p-reducible"),
];

/// Predicates about the shape of `C`; not applicable when `C` vanishes.
pub const C_SHAPE: [&str; 10] = [
    "ch-recurrent",
    "p-star",
    "cv-recurrent",
    "c0-recurrent",
    "semi-c-reducible",
    "c-reducible",
    "c2-like",
    "quasi-c-reducible",
    "p2-like",
    "p-reducible",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::NotApplicable => "not-applicable",
        }
    }

    pub fn judge(residual: f64, scale: f64, tol: f64) -> Verdict {
        if residual <= tol * scale {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }

    pub fn fails(self) -> bool {
        self == Verdict::Fails
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-predicate relative tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub default: f64,
    pub overrides: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            default: DEFAULT_TOLERANCE,
            overrides: BTreeMap::new(),
        }
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.overrides.get(name).copied().unwrap_or(self.default)
    }

    /// Override for `name`, else the given fallback instead of the default.
    pub fn get_or(&self, name: &str, fallback: f64) -> f64 {
        self.overrides.get(name).copied().unwrap_or(fallback)
    }

    /// Set one override; `default` sets the fallback value.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(format!(
                "tolerance for `{name}` must be a nonnegative number, got {value}"
            ));
        }
        if name == "default" {
            self.default = value;
        } else {
            self.overrides.insert(name.to_string(), value);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateResult {
    pub name: String,
    pub residual: f64,
    pub scale: f64,
    pub params: BTreeMap<String, Vec<f64>>,
    pub verdict: Verdict,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl PredicateResult {
    fn judged(name: &str, residual: f64, scale: f64, tol: f64) -> PredicateResult {
        PredicateResult {
            name: name.to_string(),
            residual,
            scale,
            params: BTreeMap::new(),
            verdict: Verdict::judge(residual, scale, tol),
            tolerance: tol,
            note: None,
        }
    }

    fn not_applicable(name: &str, tol: f64, note: impl Into<String>) -> PredicateResult {
        PredicateResult {
            name: name.to_string(),
            residual: 0.0,
            scale: 0.0,
            params: BTreeMap::new(),
            verdict: Verdict::NotApplicable,
            tolerance: tol,
            note: Some(note.into()),
        }
    }

    fn with_param(mut self, key: &str, values: Vec<f64>) -> PredicateResult {
        self.params.insert(key.to_string(), values);
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// Merge independent conditions into one residual/scale pair whose verdict
/// is the conjunction of the parts.
pub fn combine(parts: &[(f64, f64)]) -> (f64, f64) {
    let scale = parts.iter().fold(0.0_f64, |m, p| m.max(p.1));
    let residual = parts.iter().fold(0.0_f64, |m, &(r, s)| {
        let rel = if r == 0.0 {
            0.0
        } else if s == 0.0 {
            f64::INFINITY
        } else {
            r / s * scale
        };
        m.max(rel)
    });
    (residual, scale)
}

/// Best scalar multiple of `basis` matching `target`, and the max-abs misfit.
pub fn fit_scalar(target: &Tensor, basis: &Tensor) -> (f64, f64) {
    let nb = basis.dot(basis);
    let k = if nb > 0.0 {
        target.dot(basis) / nb
    } else {
        0.0
    };
    (k, target.sub(&basis.scale(k)).max_abs())
}

/// `T_{..., k} ≈ λ_k B_{...}` for each value of the last slot of `target`.
fn fit_recurrence(target: &Tensor, base: &Tensor) -> (Vec<f64>, f64) {
    let n = base.dim();
    let stride = base.data().len();
    let nb = base.dot(base);
    let mut lambda = vec![0.0; n];
    let mut residual: f64 = 0.0;
    for (k, lk) in lambda.iter_mut().enumerate() {
        let slice: Vec<f64> = (0..stride).map(|r| target.data()[r * n + k]).collect();
        let dot: f64 = slice.iter().zip(base.data()).map(|(a, b)| a * b).sum();
        *lk = if nb > 0.0 { dot / nb } else { 0.0 };
        for (a, b) in slice.iter().zip(base.data()) {
            residual = residual.max((a - *lk * b).abs());
        }
    }
    (lambda, residual)
}

/// `sym(ℏ ⊗ C) / (n + 1)` and `C ⊗ C ⊗ C / C²`.
pub fn semi_reducible_basis(hbar: &Tensor, c_vec: &Tensor, c_sq: f64) -> (Tensor, Tensor) {
    let n = hbar.dim();
    let a = Tensor::from_fn(n, 0, 3, |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        (hbar.get(&[i, j]) * c_vec.get(&[k])
            + hbar.get(&[j, k]) * c_vec.get(&[i])
            + hbar.get(&[k, i]) * c_vec.get(&[j]))
            / (n as f64 + 1.0)
    });
    let inv = if c_sq != 0.0 { 1.0 / c_sq } else { 0.0 };
    let b = Tensor::from_fn(n, 0, 3, |x| {
        c_vec.get(&[x[0]]) * c_vec.get(&[x[1]]) * c_vec.get(&[x[2]]) * inv
    });
    (a, b)
}

/// Fit `C = μ A + τ B` subject to `μ + τ = 1`.
pub fn fit_semi_reducible(c: &Tensor, a: &Tensor, b: &Tensor) -> (f64, f64, f64) {
    let d = a.sub(b);
    let nd = d.dot(&d);
    let mu = if nd > 0.0 { c.sub(b).dot(&d) / nd } else { 0.0 };
    let tau = 1.0 - mu;
    let residual = c.sub(&a.scale(mu)).sub(&b.scale(tau)).max_abs();
    (mu, tau, residual)
}

/// Orthonormal basis (Euclidean) of the complement of `y`.
fn complement_basis(y: &[f64]) -> Vec<Vec<f64>> {
    let n = y.len();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u: Vec<f64> = y.iter().map(|v| v / ny).collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for e in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
        for _ in 0..2 {
            for w in std::iter::once(&u).chain(out.iter()) {
                let d: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(w).for_each(|(a, b)| *a -= d * b);
            }
        }
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nv > 1e-8 && out.len() < n - 1 {
            out.push(v.iter().map(|a| a / nv).collect());
        }
    }
    out
}

/// Least-squares fit of a symmetric `A` with `A y = 0` in
/// `C_ijk = A_ij C_k + A_jk C_i + A_ki C_j`; returns `(A, residual)`.
pub fn fit_quasi_reducible(c: &Tensor, c_vec: &Tensor, y: &[f64]) -> (Tensor, f64) {
    let n = c.dim();
    let q = complement_basis(y);
    let m = q.len();
    let mut mats: Vec<Tensor> = Vec::new();
    for p in 0..m {
        for r in p..m {
            mats.push(Tensor::from_fn(n, 0, 2, |x| {
                let v = q[p][x[0]] * q[r][x[1]];
                if p == r {
                    v
                } else {
                    v + q[r][x[0]] * q[p][x[1]]
                }
            }));
        }
    }
    let shape = |a: &Tensor| {
        Tensor::from_fn(n, 0, 3, |x| {
            let (i, j, k) = (x[0], x[1], x[2]);
            a.get(&[i, j]) * c_vec.get(&[k])
                + a.get(&[j, k]) * c_vec.get(&[i])
                + a.get(&[k, i]) * c_vec.get(&[j])
        })
    };
    let basis: Vec<Tensor> = mats.iter().map(shape).collect();
    let cols: Vec<&[f64]> = basis.iter().map(Tensor::data).collect();
    let coef = fit_combination(&cols, c.data());
    let mut a = Tensor::zeros(n, 0, 2);
    let mut fit = Tensor::zeros(n, 0, 3);
    for ((w, mat), b) in coef.iter().zip(&mats).zip(&basis) {
        a = a.add(&mat.scale(*w));
        fit = fit.add(&b.scale(*w));
    }
    let residual = c.sub(&fit).max_abs();
    (a, residual)
}

/// The v-curvature from any Cartan-like tensor: `S_hijk = C^m_hk C_imj - C^m_hj C_imk`
/// with indices raised by `g_inv`.
pub fn s_from_cartan(c: &Tensor, g_inv: &Tensor) -> Tensor {
    let n = c.dim();
    let mixed = Tensor::from_fn(n, 1, 2, |x| {
        (0..n)
            .map(|l| g_inv.get(&[x[0], l]) * c.get(&[l, x[1], x[2]]))
            .sum()
    });
    Tensor::from_fn(n, 0, 4, |x| {
        let (h, i, j, k) = (x[0], x[1], x[2], x[3]);
        (0..n)
            .map(|m| {
                mixed.get(&[m, h, k]) * c.get(&[i, m, j])
                    - mixed.get(&[m, h, j]) * c.get(&[i, m, k])
            })
            .sum()
    })
}

/// Largest absolute row sum of `g`, the factor between mixed and lowered scales.
pub fn lowering_factor(g: &Tensor) -> f64 {
    let n = g.dim();
    (0..n)
        .map(|i| (0..n).map(|l| g.get(&[i, l]).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `ℏ_ik ℏ_hj - ℏ_ij ℏ_hk`, the constant-curvature shape for indicatory tensors.
fn indicatory_shape(hbar: &Tensor) -> Tensor {
    Tensor::from_fn(hbar.dim(), 0, 4, |x| {
        let (h, i, j, k) = (x[0], x[1], x[2], x[3]);
        hbar.get(&[i, k]) * hbar.get(&[h, j]) - hbar.get(&[i, j]) * hbar.get(&[h, k])
    })
}

/// Whether `C` is too small at this point to have a shape.
pub fn cartan_negligible(frame: &GeometryFrame) -> bool {
    frame.c.max_abs() * frame.l < NOISE_FLOOR * frame.g.max_abs()
        || frame.c_sq * frame.l * frame.l < NOISE_FLOOR * NOISE_FLOOR
}

/// Typical size of a tensor homogeneous of degree `-k` in `y` built from `g`
/// and `k` factors of the Cartan tensor; floors scales of quantities that
/// are pure roundoff on Riemannian metrics.
pub fn natural_scale(frame: &GeometryFrame, k: i32) -> f64 {
    frame.g.max_abs() / frame.l.powi(k)
}

/// `S ≡ 0` as a verdict, used alongside the recurrence predicates.
pub fn v_curvature_vanishes(frame: &GeometryFrame, tol: f64) -> PredicateResult {
    let scale = (frame.scales.s * lowering_factor(&frame.g)).max(natural_scale(frame, 2));
    PredicateResult::judged("v-curvature-vanishes", frame.s_low.max_abs(), scale, tol)
}

/// Evaluate all predicates at one frame.
pub fn classify_point(frame: &GeometryFrame, tol: &Tolerances) -> Vec<PredicateResult> {
    let n = frame.n;
    let nf = n as f64;
    let y = &frame.point.y;
    let y1: f64 = y.iter().map(|v| v.abs()).sum();
    let sc = &frame.scales;
    let gl = lowering_factor(&frame.g);
    let c_small = cartan_negligible(frame);
    let t = |name: &str| tol.get(name);
    let mut out: Vec<PredicateResult> = Vec::with_capacity(PREDICATES.len());

    let gate = |name: &str, min: usize| -> Option<PredicateResult> {
        if n < min {
            return Some(PredicateResult::not_applicable(
                name,
                t(name),
                format!("requires n >= {min}"),
            ));
        }
        if c_small && C_SHAPE.contains(&name) {
            return Some(PredicateResult::not_applicable(
                name,
                t(name),
                "Cartan tensor vanishes",
            ));
        }
        None
    };

    // 1
    out.push(PredicateResult::judged(
        "riemannian",
        frame.c.max_abs(),
        frame.g.max_abs() / frame.l,
        t("riemannian"),
    ));

    // 2, 3
    let (r2, s2) = combine(&[
        (frame.c_mixed_hcov.max_abs(), sc.c_mixed_hcov),
        (frame.r.max_abs(), sc.r),
    ]);
    out.push(PredicateResult::judged(
        "locally-minkowskian",
        r2,
        s2,
        t("locally-minkowskian"),
    ));
    out.push(PredicateResult::judged(
        "berwald",
        frame.c_mixed_hcov.max_abs(),
        sc.c_mixed_hcov,
        t("berwald"),
    ));

    // 4
    out.push(gate("ch-recurrent", 2).unwrap_or_else(|| {
        let (mu, res) = fit_recurrence(&frame.c_mixed_hcov, &frame.c_mixed);
        PredicateResult::judged("ch-recurrent", res, sc.c_mixed_hcov, t("ch-recurrent"))
            .with_param("mu", mu)
    }));

    // 5
    out.push(gate("p-star", 2).unwrap_or_else(|| {
        let lambda = frame.c_vec_h0.dot(&frame.c_vec_up) / frame.c_sq;
        let res = frame.landsberg.sub(&frame.c_mixed.scale(lambda)).max_abs();
        PredicateResult::judged("p-star", res, sc.c_mixed_hcov * y1, t("p-star"))
            .with_param("lambda", vec![lambda])
    }));

    // 6, 7
    out.push(gate("cv-recurrent", 2).unwrap_or_else(|| {
        let (lambda, res) = fit_recurrence(&frame.c_vcov, &frame.c);
        PredicateResult::judged("cv-recurrent", res, sc.c_vcov, t("cv-recurrent"))
            .with_param("lambda", lambda)
    }));
    out.push(gate("c0-recurrent", 2).unwrap_or_else(|| {
        let (lambda, res) = fit_recurrence(&frame.c_dot, &frame.c);
        PredicateResult::judged(
            "c0-recurrent",
            res,
            frame.c_dot.max_abs(),
            t("c0-recurrent"),
        )
        .with_param("lambda", lambda)
    }));

    // 8, 9, 10
    let c_scale = frame.c.max_abs();
    let semi_basis =
        (n >= 3 && !c_small).then(|| semi_reducible_basis(&frame.hbar, &frame.c_vec, frame.c_sq));
    out.push(gate("semi-c-reducible", 3).unwrap_or_else(|| {
        let (a, b) = semi_basis.as_ref().expect("basis built when applicable");
        let (mu, tau, res) = fit_semi_reducible(&frame.c, a, b);
        PredicateResult::judged("semi-c-reducible", res, c_scale, t("semi-c-reducible"))
            .with_param("mu", vec![mu])
            .with_param("tau", vec![tau])
    }));
    out.push(gate("c-reducible", 3).unwrap_or_else(|| {
        let (a, _) = semi_basis.as_ref().expect("basis built when applicable");
        PredicateResult::judged(
            "c-reducible",
            frame.c.sub(a).max_abs(),
            c_scale,
            t("c-reducible"),
        )
    }));
    out.push(gate("c2-like", 3).unwrap_or_else(|| {
        let (_, b) = semi_basis.as_ref().expect("basis built when applicable");
        PredicateResult::judged("c2-like", frame.c.sub(b).max_abs(), c_scale, t("c2-like"))
    }));

    // 11
    out.push(gate("quasi-c-reducible", 3).unwrap_or_else(|| {
        let (a, res) = fit_quasi_reducible(&frame.c, &frame.c_vec, y);
        PredicateResult::judged("quasi-c-reducible", res, c_scale, t("quasi-c-reducible"))
            .with_param("A", a.data().to_vec())
    }));

    // 12, 13
    let s_scale = (sc.s * gl).max(natural_scale(frame, 2));
    out.push(gate("s3-like", 4).unwrap_or_else(|| {
        let coef = frame.sc_v / ((nf - 1.0) * (nf - 2.0));
        let res = frame
            .s_low
            .sub(&indicatory_shape(&frame.hbar).scale(coef))
            .max_abs();
        PredicateResult::judged("s3-like", res, s_scale, t("s3-like"))
            .with_param("coefficient", vec![coef])
    }));
    out.push(gate("s4-like", 5).unwrap_or_else(|| {
        let fv = Tensor::from_fn(n, 0, 2, |x| {
            (frame.ric_v.get(x) - frame.sc_v * frame.hbar.get(x) / (2.0 * (nf - 2.0))) / (nf - 3.0)
        });
        let res = frame
            .s_low
            .sub(&wedge_expansion(&frame.hbar, &fv))
            .max_abs();
        PredicateResult::judged("s4-like", res, s_scale, t("s4-like"))
    }));

    // 14, 15
    let (mut lambda, res) = fit_recurrence(&frame.s_vcov, &frame.s_low);
    if frame.s_low.max_abs() <= NOISE_FLOOR * s_scale {
        // S is numerically zero, so any λ fits
        lambda.iter_mut().for_each(|l| *l = 0.0);
    }
    let s_vcov_scale = sc.s_vcov.max(natural_scale(frame, 3));
    out.push(
        PredicateResult::judged("sv-recurrent", res, s_vcov_scale, t("sv-recurrent"))
            .with_param("lambda", lambda),
    );
    out.push(PredicateResult::judged(
        "sv-recurrent-2",
        res,
        s_vcov_scale,
        t("sv-recurrent-2"),
    ));

    // 16, 17
    out.push(PredicateResult::judged(
        "landsberg",
        frame.landsberg.max_abs(),
        sc.c_mixed_hcov * y1,
        t("landsberg"),
    ));
    out.push(PredicateResult::judged(
        "general-landsberg",
        frame.c_vec_h0.max_abs(),
        sc.c_vec_hcov.max(nf * sc.c_mixed_hcov) * y1,
        t("general-landsberg"),
    ));

    // 18, 19
    let p_scale = sc.p * gl;
    let p_anti = frame.p_low.sub(&frame.p_low.transpose(2, 3));
    out.push(PredicateResult::judged(
        "p-symmetric",
        p_anti.max_abs(),
        p_scale,
        t("p-symmetric"),
    ));
    out.push(gate("p2-like", 3).unwrap_or_else(|| {
        let basis: Vec<Tensor> = (0..n)
            .map(|m| {
                Tensor::from_fn(n, 0, 4, |x| {
                    let (h, i, j, k) = (x[0], x[1], x[2], x[3]);
                    let dh = if h == m { frame.c.get(&[i, j, k]) } else { 0.0 };
                    let di = if i == m { frame.c.get(&[h, j, k]) } else { 0.0 };
                    dh - di
                })
            })
            .collect();
        let cols: Vec<&[f64]> = basis.iter().map(Tensor::data).collect();
        let alpha = fit_combination(&cols, frame.p_low.data());
        let fit = basis
            .iter()
            .zip(&alpha)
            .fold(Tensor::zeros(n, 0, 4), |acc, (b, a)| acc.add(&b.scale(*a)));
        let res = frame.p_low.sub(&fit).max_abs();
        PredicateResult::judged("p2-like", res, p_scale, t("p2-like")).with_param("alpha", alpha)
    }));

    // 20
    out.push(gate("p-reducible", 3).unwrap_or_else(|| {
        let p_hat_low = frame.p_hat.lower_first(&frame.g);
        let pk = &frame.c_vec_h0;
        let model = Tensor::from_fn(n, 0, 3, |x| {
            let (i, j, k) = (x[0], x[1], x[2]);
            (frame.hbar.get(&[i, j]) * pk.get(&[k])
                + frame.hbar.get(&[j, k]) * pk.get(&[i])
                + frame.hbar.get(&[k, i]) * pk.get(&[j]))
                / (nf + 1.0)
        });
        let res = p_hat_low.sub(&model).max_abs();
        let scale = gl * (sc.p_hat.max(sc.c_mixed_hcov * y1));
        PredicateResult::judged("p-reducible", res, scale, t("p-reducible"))
            .with_param("delta", pk.scale(1.0 / (nf + 1.0)).data().to_vec())
    }));

    // 21
    let r_scale = sc.r * gl;
    let iso = Tensor::from_fn(n, 0, 4, |x| {
        let (h, i, j, k) = (x[0], x[1], x[2], x[3]);
        let g = &frame.g;
        g.get(&[h, j]) * g.get(&[i, k]) - g.get(&[h, k]) * g.get(&[i, j])
    });
    let (k0, res) = fit_scalar(&frame.r_low, &iso);
    out.push(
        PredicateResult::judged("h-isotropic", res, r_scale, t("h-isotropic"))
            .with_param("k0", vec![k0]),
    );

    // 22, 23
    let radial = frame.r_low.contract(0, y).contract(1, y);
    let l2 = frame.l * frame.l;
    let (k, res22) = fit_scalar(&radial, &frame.hbar.scale(l2));
    let scale22 = r_scale * y1 * y1;
    out.push(
        PredicateResult::judged("scalar-curvature", res22, scale22, t("scalar-curvature"))
            .with_param("k", vec![k]),
    );
    out.push(
        PredicateResult::judged(
            "constant-curvature",
            res22,
            scale22,
            t("constant-curvature"),
        )
        .with_param("k", vec![k]),
    );

    // 24
    out.push(
        gate("r3-like", 4).unwrap_or_else(|| match DerivedTensors::compute(frame) {
            Ok(d) => {
                let res = frame.r_low.sub(&d.r3_expansion).max_abs();
                PredicateResult::judged("r3-like", res, r_scale, t("r3-like"))
                    .with_param("psi_residual", vec![d.psi.max_abs()])
            }
            Err(e) => PredicateResult::not_applicable("r3-like", t("r3-like"), e.to_string()),
        }),
    );

    // 25, 26
    let pr = apply_projection(frame, &frame.r_low);
    let (r0, res25) = fit_scalar(&pr, &indicatory_shape(&frame.hbar));
    out.push(
        PredicateResult::judged(
            "p-scalar-curvature",
            res25,
            r_scale,
            t("p-scalar-curvature"),
        )
        .with_param("r0", vec![r0]),
    );
    let (r26, s26) = combine(&[(res22, scale22), (res25, r_scale)]);
    out.push(
        PredicateResult::judged("s-ps-curvature", r26, s26, t("s-ps-curvature"))
            .with_param("k", vec![k])
            .with_param("r0", vec![r0]),
    );

    debug_assert_eq!(out.len(), PREDICATES.len());
    out
}

/// Verdict pairs that contradict the implication list at one point.
pub fn lattice_violations(results: &[PredicateResult]) -> Vec<String> {
    let find = |name: &str| results.iter().find(|r| r.name == name);
    let mut out = Vec::new();
    for (strong, weak) in IMPLICATIONS {
        if let (Some(s), Some(w)) = (find(strong), find(weak)) {
            if s.verdict == Verdict::Holds && w.verdict == Verdict::Fails {
                out.push(format!("{strong} holds but {weak} fails"));
            }
        }
    }
    if find("riemannian").is_some_and(PredicateResult::holds) {
        for name in C_SHAPE {
            if let Some(r) = find(name).filter(|r| r.verdict != Verdict::NotApplicable) {
                out.push(format!("riemannian holds but {} is {}", name, r.verdict));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointClassification {
    pub index: usize,
    pub point: ChartPoint,
    pub results: Vec<PredicateResult>,
}

/// Range of a fitted parameter across points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub param: String,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub mean: Vec<f64>,
}

impl Spread {
    pub fn width(&self) -> f64 {
        self.min
            .iter()
            .zip(&self.max)
            .fold(0.0, |m, (a, b)| m.max(b - a))
    }

    /// `max - min <= CONSTANCY_TOL (1 + |mean|)` in every component.
    pub fn is_constant(&self) -> bool {
        self.min
            .iter()
            .zip(&self.max)
            .zip(&self.mean)
            .all(|((lo, hi), mean)| hi - lo <= CONSTANCY_TOL * (1.0 + mean.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub name: String,
    pub verdict: Verdict,
    /// Largest `residual / scale` over points where the predicate applies.
    pub worst_ratio: f64,
    pub residual: f64,
    pub scale: f64,
    pub spreads: Vec<Spread>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub metric: String,
    pub points: Vec<PointClassification>,
    pub aggregate: Vec<AggregateResult>,
    pub lattice_violations: Vec<String>,
}

impl ClassificationReport {
    pub fn aggregate_for(&self, name: &str) -> Option<&AggregateResult> {
        self.aggregate.iter().find(|a| a.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<Verdict> {
        self.aggregate_for(name).map(|a| a.verdict)
    }
}

/// Any failing point fails; all points holding holds; otherwise not applicable.
pub fn aggregate_verdicts(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut all_hold = true;
    let mut any = false;
    for v in verdicts {
        any = true;
        match v {
            Verdict::Fails => return Verdict::Fails,
            Verdict::NotApplicable => all_hold = false,
            Verdict::Holds => {}
        }
    }
    if any && all_hold {
        Verdict::Holds
    } else {
        Verdict::NotApplicable
    }
}

fn spreads(results: &[&PredicateResult]) -> Vec<Spread> {
    let mut keys: Vec<&String> = results.iter().flat_map(|r| r.params.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|key| {
            let rows: Vec<&Vec<f64>> = results.iter().filter_map(|r| r.params.get(key)).collect();
            let len = rows.first()?.len();
            if len == 0 || rows.iter().any(|r| r.len() != len) {
                return None;
            }
            let col = |i: usize| rows.iter().map(move |r| r[i]);
            Some(Spread {
                param: key.clone(),
                min: (0..len)
                    .map(|i| col(i).fold(f64::INFINITY, f64::min))
                    .collect(),
                max: (0..len)
                    .map(|i| col(i).fold(f64::NEG_INFINITY, f64::max))
                    .collect(),
                mean: (0..len)
                    .map(|i| col(i).sum::<f64>() / rows.len() as f64)
                    .collect(),
            })
        })
        .collect()
}

/// Fold pointwise results into per-predicate aggregates.
pub fn aggregate(points: &[PointClassification]) -> Vec<AggregateResult> {
    PREDICATES
        .iter()
        .map(|&name| {
            let rows: Vec<&PredicateResult> = points
                .iter()
                .filter_map(|p| p.results.iter().find(|r| r.name == name))
                .collect();
            let mut verdict = aggregate_verdicts(rows.iter().map(|r| r.verdict));
            let applicable: Vec<&&PredicateResult> = rows
                .iter()
                .filter(|r| r.verdict != Verdict::NotApplicable)
                .collect();
            let ratio = |r: &PredicateResult| {
                if r.residual == 0.0 {
                    0.0
                } else if r.scale == 0.0 {
                    f64::INFINITY
                } else {
                    r.residual / r.scale
                }
            };
            let worst = applicable
                .iter()
                .copied()
                .max_by(|a, b| ratio(a).total_cmp(&ratio(b)));
            let sp = spreads(&applicable.iter().map(|r| **r).collect::<Vec<_>>());
            let mut note = None;
            if name == "constant-curvature" && verdict == Verdict::Holds {
                let k = sp.iter().find(|s| s.param == "k");
                if rows.len() < 2 {
                    verdict = Verdict::NotApplicable;
                    note = Some("constancy needs at least two points".to_string());
                } else if let Some(k) = k.filter(|k| !k.is_constant()) {
                    verdict = Verdict::Fails;
                    note = Some(format!("k varies by {:.3e} across points", k.width()));
                }
            }
            AggregateResult {
                name: name.to_string(),
                verdict,
                worst_ratio: worst.map_or(0.0, |r| ratio(r)),
                residual: worst.map_or(0.0, |r| r.residual),
                scale: worst.map_or(0.0, |r| r.scale),
                spreads: sp,
                note,
            }
        })
        .collect()
}

/// Classify already-computed frames, keeping sample order.
pub fn classify_frames(
    metric: &str,
    frames: &[GeometryFrame],
    tol: &Tolerances,
) -> ClassificationReport {
    let points: Vec<PointClassification> = frames
        .par_iter()
        .enumerate()
        .map(|(index, f)| PointClassification {
            index,
            point: f.point.clone(),
            results: classify_point(f, tol),
        })
        .collect();
    let mut violations = Vec::new();
    for p in &points {
        for v in lattice_violations(&p.results) {
            violations.push(format!("point {}: {v}", p.index));
        }
    }
    ClassificationReport {
        metric: metric.to_string(),
        aggregate: aggregate(&points),
        points,
        lattice_violations: violations,
    }
}

/// Compute frames at the given points in parallel, in order.
pub fn compute_frames(
    spec: &MetricSpec,
    points: &[ChartPoint],
) -> Result<Vec<GeometryFrame>, GeometryError> {
    let engine = FrameEngine::new(spec.dim());
    points.par_iter().map(|p| engine.compute(spec, p)).collect()
}

/// Sample, compute frames and classify.
pub fn classify_manifold(
    spec: &MetricSpec,
    domain: &ChartDomain,
    count: usize,
    tol: &Tolerances,
) -> Result<ClassificationReport, GeometryError> {
    let points = sample_points(spec, domain, count)?;
    let frames = compute_frames(spec, &points)?;
    Ok(classify_frames(spec.name(), &frames, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregation_rule() {
        use Verdict::*;
        assert_eq!(aggregate_verdicts([Holds, Holds]), Holds);
        assert_eq!(aggregate_verdicts([Holds, NotApplicable]), NotApplicable);
        assert_eq!(aggregate_verdicts([NotApplicable, Fails, Holds]), Fails);
        assert_eq!(aggregate_verdicts([]), NotApplicable);
    }

    #[test]
    fn verdict_boundary_is_inclusive() {
        assert_eq!(Verdict::judge(1e-7, 1.0, 1e-7), Verdict::Holds);
        assert_eq!(Verdict::judge(0.0, 0.0, 1e-7), Verdict::Holds);
        assert_eq!(Verdict::judge(f64::NAN, 1.0, 1e-7), Verdict::Fails);
    }

    #[test]
    fn combine_is_conjunction() {
        let (r, s) = combine(&[(1e-9, 1.0), (1e-3, 1e4)]);
        assert!(r <= 1e-7 * s);
        let (r, s) = combine(&[(1e-9, 1.0), (1e-2, 1e4)]);
        assert!(r > 1e-7 * s);
    }

    #[test]
    fn quasi_fit_recovers_planted_matrix() {
        let n = 4;
        let y = [0.3, -0.5, 0.8, 0.2];
        let q = complement_basis(&y);
        assert_eq!(q.len(), 3);
        let a = Tensor::from_fn(n, 0, 2, |x| {
            (0..3)
                .map(|p| (p as f64 + 1.0) * q[p][x[0]] * q[p][x[1]])
                .sum::<f64>()
                + 0.2 * (q[0][x[0]] * q[1][x[1]] + q[1][x[0]] * q[0][x[1]])
        });
        let cv = Tensor::from_data(n, 0, 1, vec![0.4, 0.1, -0.2, 0.7]);
        let c = Tensor::from_fn(n, 0, 3, |x| {
            let (i, j, k) = (x[0], x[1], x[2]);
            a.get(&[i, j]) * cv.get(&[k])
                + a.get(&[j, k]) * cv.get(&[i])
                + a.get(&[k, i]) * cv.get(&[j])
        });
        let (fitted, res) = fit_quasi_reducible(&c, &cv, &y);
        assert!(res < 1e-13);
        assert!(fitted.sub(&a).max_abs() < 1e-12);
    }
}
