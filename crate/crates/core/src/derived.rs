//! Tensors built from the h-curvature: `F`, its radial parts and the
//! reconstructions used by the R₃-like checks.

use serde_json::{json, Value};

use crate::error::GeometryError;
use crate::frame::GeometryFrame;
use crate::projection::apply_projection;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedTensors {
    /// `F_ij`.
    pub f: Tensor,
    /// `F^a_i = y^a F_ai`.
    pub f_a: Tensor,
    /// `F^b_i = F_ia y^a`.
    pub f_b: Tensor,
    /// `m = ℙ·F`.
    pub m: Tensor,
    pub a: Tensor,
    pub b: Tensor,
    pub c: f64,
    /// `H^i_k = R^i_hjk y^h y^j`.
    pub h: Tensor,
    /// `R̂^i_jk = R^i_hjk y^h`.
    pub r_hat: Tensor,
    pub psi: Tensor,
    /// `m^i_a = g^{ib} m_ab`.
    pub m0: Tensor,
    /// `F^i_a = g^{il} F_al`.
    pub f0: Tensor,
    /// `a^i = g^{ij} a_j`.
    pub a_bar: Tensor,
    /// `g_jh F_ki - g_kh F_ji + g_ki F_jh - g_ji F_kh`, the R₃-like form.
    pub r3_expansion: Tensor,
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `T_hijk = g_jh F_ki - g_kh F_ji + g_ki F_jh - g_ji F_kh` for a metric-like `g`.
pub fn wedge_expansion(g: &Tensor, f: &Tensor) -> Tensor {
    Tensor::from_fn(g.dim(), 0, 4, |x| {
        let (h, i, j, k) = (x[0], x[1], x[2], x[3]);
        g.get(&[j, h]) * f.get(&[k, i]) - g.get(&[k, h]) * f.get(&[j, i])
            + g.get(&[k, i]) * f.get(&[j, h])
            - g.get(&[j, i]) * f.get(&[k, h])
    })
}

fn raise_first(g_inv: &Tensor, t: &Tensor) -> Tensor {
    let n = t.dim();
    Tensor::from_fn(n, 1, 1, |x| {
        (0..n)
            .map(|l| g_inv.get(&[x[0], l]) * t.get(&[x[1], l]))
            .sum()
    })
}

impl DerivedTensors {
    pub fn compute(frame: &GeometryFrame) -> Result<DerivedTensors, GeometryError> {
        let n = frame.n;
        if n < 3 {
            return Err(GeometryError::DimensionTooSmall {
                what: "the curvature decomposition F",
                n,
                min: 3,
            });
        }
        let y = &frame.point.y;
        let l = frame.l;
        let g = &frame.g;
        let nf = n as f64;
        let f = Tensor::from_fn(n, 0, 2, |x| {
            (frame.ric_h.get(x) - frame.sc_h * g.get(x) / (2.0 * (nf - 1.0))) / (nf - 2.0)
        });
        let f_a = f.contract(0, y);
        let f_b = f.contract(1, y);
        let m = apply_projection(frame, &f);
        let a = apply_projection(frame, &f_a).scale(1.0 / l);
        let b = apply_projection(frame, &f_b).scale(1.0 / l);
        let c = f_a.contract(0, y).get(&[]) / (l * l);
        let r_hat = frame.r.contract(1, y);
        let h = r_hat.contract(1, y);

        let r = frame.sc_h / (nf - 1.0);
        let ric = &frame.ric_h;
        let psi = Tensor::from_fn(n, 0, 4, |x| {
            let (hh, i, j, k) = (x[0], x[1], x[2], x[3]);
            let bracket = g.get(&[j, hh]) * ric.get(&[k, i]) + g.get(&[k, i]) * ric.get(&[j, hh])
                - r * g.get(&[j, hh]) * g.get(&[k, i])
                - g.get(&[k, hh]) * ric.get(&[j, i])
                - g.get(&[j, i]) * ric.get(&[k, hh])
                + r * g.get(&[k, hh]) * g.get(&[j, i]);
            frame.r_low.get(x) - bracket / (nf - 2.0)
        });
        let m0 = raise_first(&frame.g_inv, &m);
        let f0 = raise_first(&frame.g_inv, &f);
        let a_bar = Tensor::from_fn(n, 1, 0, |x| {
            (0..n)
                .map(|j| frame.g_inv.get(&[x[0], j]) * a.get(&[j]))
                .sum()
        });
        let r3_expansion = wedge_expansion(g, &f);
        Ok(DerivedTensors {
            f,
            f_a,
            f_b,
            m,
            a,
            b,
            c,
            h,
            r_hat,
            psi,
            m0,
            f0,
            a_bar,
            r3_expansion,
        })
    }

    /// `m + ℓ⊗a + b⊗ℓ + c ℓ⊗ℓ`, which reassembles `F`.
    pub fn f_from_parts(&self, frame: &GeometryFrame) -> Tensor {
        let ell = &frame.ell;
        Tensor::from_fn(frame.n, 0, 2, |x| {
            let (i, j) = (x[0], x[1]);
            self.m.get(x)
                + ell.get(&[i]) * self.a.get(&[j])
                + ell.get(&[j]) * self.b.get(&[i])
                + self.c * ell.get(&[i]) * ell.get(&[j])
        })
    }

    /// `F^i_a` from `m^i_a`, `a^i`, `b_a` and `c`.
    pub fn f0_from_parts(&self, frame: &GeometryFrame) -> Tensor {
        let (ell, up) = (&frame.ell, &frame.ell_up);
        Tensor::from_fn(frame.n, 1, 1, |x| {
            let (i, a) = (x[0], x[1]);
            self.m0.get(x)
                + self.a_bar.get(&[i]) * ell.get(&[a])
                + up.get(&[i]) * self.b.get(&[a])
                + self.c * ell.get(&[a]) * up.get(&[i])
        })
    }

    /// `R^i_hjk` rebuilt from `F^i_a` and `F`.
    pub fn r_from_f0(&self, frame: &GeometryFrame) -> Tensor {
        let g = &frame.g;
        Tensor::from_fn(frame.n, 1, 3, |x| {
            let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
            g.get(&[j, h]) * self.f0.get(&[i, k]) + self.f.get(&[j, h]) * delta(i, k)
                - g.get(&[k, h]) * self.f0.get(&[i, j])
                - self.f.get(&[k, h]) * delta(i, j)
        })
    }

    /// `L{ℓ_j (m^i_k + c φ^i_k) + b_j φ^i_k} - (j ↔ k)`.
    pub fn r_hat_from_parts(&self, frame: &GeometryFrame) -> Tensor {
        let (ell, phi, l) = (&frame.ell, &frame.phi, frame.l);
        let half = |i: usize, j: usize, k: usize| {
            ell.get(&[j]) * (self.m0.get(&[i, k]) + self.c * phi.get(&[i, k]))
                + self.b.get(&[j]) * phi.get(&[i, k])
        };
        Tensor::from_fn(frame.n, 1, 2, |x| {
            l * (half(x[0], x[1], x[2]) - half(x[0], x[2], x[1]))
        })
    }

    /// `L² (m^i_k + c φ^i_k)`.
    pub fn h_from_parts(&self, frame: &GeometryFrame) -> Tensor {
        let l2 = frame.l * frame.l;
        Tensor::from_fn(frame.n, 1, 1, |x| {
            l2 * (self.m0.get(x) + self.c * frame.phi.get(x))
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "F": self.f.to_json(),
            "F_a": self.f_a.to_json(),
            "F_b": self.f_b.to_json(),
            "m": self.m.to_json(),
            "a": self.a.to_json(),
            "b": self.b.to_json(),
            "c": self.c,
            "H": self.h.to_json(),
            "R_hat": self.r_hat.to_json(),
            "Psi": self.psi.to_json(),
        })
    }
}
