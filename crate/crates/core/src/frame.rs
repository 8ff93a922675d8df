//! Every connection, torsion and curvature tensor of the Cartan and Berwald
//! connections at one point of the slit tangent bundle.
//!
//! Intermediate fields (`g`, `g^{-1}`, the spray, `G^h_i`, `Γ`, `C`) are kept
//! as jets so that `δ_k` and `∂̇_k` of assembled quantities are exact. The
//! final tensors are plain values.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::convention::H_CURVATURE_SIGN;
use crate::error::{EvalError, GeometryError};
use crate::expr::{Expr, Var};
use crate::jet::{Jet, JetAlgebra, JetSpace};
use crate::metric::MetricSpec;
use crate::sampling::{ChartPoint, DET_FLOOR};
use crate::tensor::{for_each_index, Tensor};

/// Cancellation-aware magnitudes: for each assembled tensor, the largest
/// sum of absolute values of the individual summands in its formula.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TermScales {
    pub gamma: f64,
    pub r_torsion: f64,
    pub r: f64,
    pub p: f64,
    pub s: f64,
    pub p_hat: f64,
    pub c_hcov: f64,
    pub c_mixed_hcov: f64,
    pub c_vcov: f64,
    pub c_vec_hcov: f64,
    pub s_hcov: f64,
    pub s_vcov: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryFrame {
    pub point: ChartPoint,
    pub n: usize,
    /// `L` at the point.
    pub l: f64,
    pub g: Tensor,
    pub g_inv: Tensor,
    pub det_g: f64,
    /// `ℓ_i = ∂L/∂y^i`.
    pub ell: Tensor,
    /// `ℓ^i = y^i / L`.
    pub ell_up: Tensor,
    pub hbar: Tensor,
    /// `φ^i_j = δ^i_j - ℓ^i ℓ_j`.
    pub phi: Tensor,
    /// `C_ijk`.
    pub c: Tensor,
    /// `C^i_jk`.
    pub c_mixed: Tensor,
    /// `C_i = C^k_ik`.
    pub c_vec: Tensor,
    /// `C^i = g^{ij} C_j`.
    pub c_vec_up: Tensor,
    pub c_sq: f64,
    /// `G^h`.
    pub spray: Tensor,
    /// `G^h_i`.
    pub barthel: Tensor,
    /// `G^h_ij`.
    pub berwald: Tensor,
    /// `G^h_ijk = ∂̇_k G^h_ij`.
    pub berwald_dot: Tensor,
    /// Christoffel symbols of `g` in `x` alone.
    pub gamma_formal: Tensor,
    /// Cartan `Γ^h_ij`.
    pub gamma: Tensor,
    /// `R^i_jk`.
    pub r_torsion: Tensor,
    /// `P^i_jk = G^i_jk - Γ^i_jk`.
    pub p_hat: Tensor,
    /// `C^h_ij|0`, computed through the h-covariant derivative.
    pub landsberg: Tensor,
    /// `R^i_hjk`, `P^i_hjk`, `S^i_hjk` with `(j, k)` the plane pair.
    pub r: Tensor,
    pub p: Tensor,
    pub s: Tensor,
    /// `R_hijk = g_il R^l_hjk` and likewise for `P`, `S`.
    pub r_low: Tensor,
    pub p_low: Tensor,
    pub s_low: Tensor,
    pub ric_h: Tensor,
    pub sc_h: f64,
    pub ric_v: Tensor,
    pub sc_v: f64,
    /// `C_hij|k`.
    pub c_hcov: Tensor,
    /// `C^h_ij|k`.
    pub c_mixed_hcov: Tensor,
    /// `C_ijk‖l`.
    pub c_vcov: Tensor,
    /// `∂̇_l C_ijk`.
    pub c_dot: Tensor,
    /// `C_i|k`.
    pub c_vec_hcov: Tensor,
    /// `C_i|0`.
    pub c_vec_h0: Tensor,
    /// `S_hijk|0`.
    pub s_h0: Tensor,
    /// `S_hijk‖m`.
    pub s_vcov: Tensor,
    pub scales: TermScales,
}

/// A covariant derivative together with its term scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CovDerivative {
    pub tensor: Tensor,
    pub scale: f64,
}

/// Jet spaces for one chart dimension, shared by every point.
#[derive(Debug, Clone)]
pub struct FrameEngine {
    n: usize,
    main: Arc<JetSpace>,
    berwald: Arc<JetSpace>,
}

/// Jet-level data around one point: enough to take h- and v-covariant
/// derivatives of any tensor field given by component jets.
#[derive(Debug, Clone)]
pub struct FrameContext {
    space: Arc<JetSpace>,
    point: ChartPoint,
    n: usize,
    energy: Jet,
    metric: Vec<Jet>,
    barthel: Vec<Jet>,
    gamma: Tensor,
    c_mixed: Tensor,
}

fn idx2(n: usize, a: usize, b: usize) -> usize {
    a * n + b
}

fn idx3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

fn valued(n: usize, upper: usize, lower: usize, jets: &[Jet]) -> Tensor {
    Tensor::from_data(n, upper, lower, jets.iter().map(Jet::value).collect())
}

fn check_finite(t: &Tensor) -> Result<(), GeometryError> {
    if t.data().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(EvalError::NonFinite.into())
    }
}

/// `g^{-1}` as jets by a Neumann series around the value at the point.
fn inverse_jets(space: &JetSpace, g: &[Jet], g0inv: &DMatrix<f64>, n: usize) -> Vec<Jet> {
    let order = g[0].budget().0.max(0) as usize;
    // A = -G0^{-1} (g - G0)
    let mut a = vec![space.zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = space.zero();
            for k in 0..n {
                let mut h = g[idx2(n, k, j)].clone();
                h.add_constant(-h.value());
                acc.axpy(-g0inv[(i, k)], &h);
            }
            a[idx2(n, i, j)] = acc;
        }
    }
    let mut term: Vec<Jet> = (0..n * n)
        .map(|k| space.constant(g0inv[(k / n, k % n)]))
        .collect();
    let mut sum = term.clone();
    for _ in 0..order {
        let mut next = vec![space.zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = space.mul(&a[idx2(n, i, 0)], &term[idx2(n, 0, j)]);
                for m in 1..n {
                    acc = acc.add(&space.mul(&a[idx2(n, i, m)], &term[idx2(n, m, j)]));
                }
                next[idx2(n, i, j)] = acc;
            }
        }
        for (s, t) in sum.iter_mut().zip(&next) {
            *s = s.add(t);
        }
        term = next;
    }
    sum
}

/// The spray `G^h = ½ g^{hl} (y^i ∂_i ∂̇_l E - ∂_l E)` as jets.
fn spray_jets(space: &JetSpace, energy: &Jet, ginv: &[Jet], y: &[f64], n: usize) -> Vec<Jet> {
    let yj: Vec<Jet> = (0..n).map(|i| space.variable(Var::Y(i), y[i])).collect();
    let bracket: Vec<Jet> = (0..n)
        .map(|l| {
            let dyl = space.dy(energy, l);
            let mut acc = space.dx(energy, l).scale(-1.0);
            for (i, yi) in yj.iter().enumerate() {
                acc = acc.add(&space.mul(yi, &space.dx(&dyl, i)));
            }
            acc
        })
        .collect();
    (0..n)
        .map(|h| {
            let mut acc = space.mul(&ginv[idx2(n, h, 0)], &bracket[0]);
            for l in 1..n {
                acc = acc.add(&space.mul(&ginv[idx2(n, h, l)], &bracket[l]));
            }
            acc.scale(0.5)
        })
        .collect()
}

/// Metric jets, inverse-metric jets, the inverse at the point and `det g`.
type MetricJets = (Vec<Jet>, Vec<Jet>, DMatrix<f64>, f64);

fn metric_and_inverse(
    space: &JetSpace,
    energy: &Jet,
    n: usize,
) -> Result<MetricJets, GeometryError> {
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        let di = space.dy(energy, i);
        for j in 0..n {
            g.push(space.dy(&di, j));
        }
    }
    let g0 = DMatrix::from_fn(n, n, |i, j| g[idx2(n, i, j)].value());
    if g0.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite.into());
    }
    let det = g0.determinant();
    let floor = DET_FLOOR * g0.amax().powi(n as i32);
    if det.abs().is_nan() || det.abs() < floor {
        return Err(GeometryError::DegenerateMetric {
            det: det.abs(),
            floor,
        });
    }
    let g0inv = g0
        .clone()
        .try_inverse()
        .ok_or(GeometryError::DegenerateMetric {
            det: det.abs(),
            floor,
        })?;
    let ginv = inverse_jets(space, &g, &g0inv, n);
    Ok((g, ginv, g0inv, det))
}

impl FrameEngine {
    pub fn new(n: usize) -> FrameEngine {
        FrameEngine {
            n,
            main: Arc::new(JetSpace::new(n, 4, 2)),
            berwald: Arc::new(JetSpace::new(n, 5, 1)),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn compute(
        &self,
        spec: &MetricSpec,
        point: &ChartPoint,
    ) -> Result<GeometryFrame, GeometryError> {
        Ok(self.compute_with_context(spec, point)?.0)
    }

    /// The frame plus the jet-level context used to build it.
    pub fn compute_with_context(
        &self,
        spec: &MetricSpec,
        point: &ChartPoint,
    ) -> Result<(GeometryFrame, FrameContext), GeometryError> {
        let n = self.n;
        if spec.dim() != n || point.x.len() != n || point.y.len() != n {
            return Err(GeometryError::PointDimension {
                expected: n,
                got: point.x.len(),
            });
        }
        let sp = &*self.main;
        let y = &point.y;
        let l = spec.eval_l(point)?;
        if !l.is_finite() || l <= 0.0 {
            return Err(GeometryError::NonPositiveLength(l));
        }

        let energy_expr = spec.energy();
        let energy = energy_expr.eval_in(&JetAlgebra {
            space: sp,
            x: &point.x,
            y,
        })?;
        if !energy.is_finite() {
            return Err(EvalError::NonFinite.into());
        }
        let (gj, ginvj, _, det_g) = metric_and_inverse(sp, &energy, n)?;
        let g = valued(n, 0, 2, &gj);
        let g_inv = valued(n, 2, 0, &ginvj);

        // angular data
        let ell = Tensor::from_fn(n, 0, 1, |i| sp.first_partial(&energy, n + i[0]) / l);
        let ell_up = Tensor::from_fn(n, 1, 0, |i| y[i[0]] / l);
        let hbar = Tensor::from_fn(n, 0, 2, |i| g.get(i) - ell.get(&[i[0]]) * ell.get(&[i[1]]));
        let phi = Tensor::from_fn(n, 1, 1, |i| {
            let d = if i[0] == i[1] { 1.0 } else { 0.0 };
            d - ell_up.get(&[i[0]]) * ell.get(&[i[1]])
        });

        // spray and nonlinear connection
        let spray_j = spray_jets(sp, &energy, &ginvj, y, n);
        let barthel_j: Vec<Jet> = (0..n * n).map(|k| sp.dy(&spray_j[k / n], k % n)).collect();
        let spray = valued(n, 1, 0, &spray_j);
        let barthel = valued(n, 1, 1, &barthel_j);
        let berwald = Tensor::from_fn(n, 1, 2, |i| {
            sp.first_partial(&barthel_j[idx2(n, i[0], i[1])], n + i[2])
        });

        let delta = |f: &Jet, k: usize| -> Jet {
            let mut acc = sp.dx(f, k);
            for m in 0..n {
                acc = acc.sub(&sp.mul(&barthel_j[idx2(n, m, k)], &sp.dy(f, m)));
            }
            acc
        };
        // value of δ_k f and the sum of absolute values of its pieces
        let delta_value = |f: &Jet, k: usize| -> (f64, f64) {
            let dx = sp.first_partial(f, k);
            let mut v = dx;
            let mut s = dx.abs();
            for m in 0..n {
                let t = barthel.get(&[m, k]) * sp.first_partial(f, n + m);
                v -= t;
                s += t.abs();
            }
            (v, s)
        };

        // Cartan Γ from δ-derivatives of g
        let mut dg = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    dg.push(delta(&gj[idx2(n, a, b)], k));
                }
            }
        }
        let mut gamma_j = Vec::with_capacity(n * n * n);
        let mut gamma_scale: f64 = 0.0;
        for h in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = sp.zero();
                    let mut sc = 0.0;
                    for l in 0..n {
                        let inner = dg[idx3(n, i, l, j)]
                            .add(&dg[idx3(n, j, i, l)])
                            .sub(&dg[idx3(n, l, i, j)]);
                        sc += (ginvj[idx2(n, h, l)].value()).abs()
                            * (dg[idx3(n, i, l, j)].value().abs()
                                + dg[idx3(n, j, i, l)].value().abs()
                                + dg[idx3(n, l, i, j)].value().abs());
                        acc = acc.add(&sp.mul(&ginvj[idx2(n, h, l)], &inner));
                    }
                    gamma_scale = gamma_scale.max(0.5 * sc);
                    gamma_j.push(acc.scale(0.5));
                }
            }
        }
        let gamma = valued(n, 1, 2, &gamma_j);

        let gamma_formal = Tensor::from_fn(n, 1, 2, |idx| {
            let (h, i, j) = (idx[0], idx[1], idx[2]);
            0.5 * (0..n)
                .map(|l| {
                    g_inv.get(&[h, l])
                        * (sp.first_partial(&gj[idx2(n, l, j)], i)
                            + sp.first_partial(&gj[idx2(n, i, l)], j)
                            - sp.first_partial(&gj[idx2(n, i, j)], l))
                })
                .sum::<f64>()
        });

        // Cartan tensor
        let c_j: Vec<Jet> = (0..n * n * n)
            .map(|k| sp.dy(&gj[k / n], k % n).scale(0.5))
            .collect();
        let c_mixed_j: Vec<Jet> = (0..n * n * n)
            .map(|k| {
                let (h, rest) = (k / (n * n), k % (n * n));
                let mut acc = sp.mul(&ginvj[idx2(n, h, 0)], &c_j[rest]);
                for l in 1..n {
                    acc = acc.add(&sp.mul(&ginvj[idx2(n, h, l)], &c_j[l * n * n + rest]));
                }
                acc
            })
            .collect();
        let c = valued(n, 0, 3, &c_j);
        let c_mixed = valued(n, 1, 2, &c_mixed_j);
        let c_vec_j: Vec<Jet> = (0..n)
            .map(|i| {
                let mut acc = c_mixed_j[idx3(n, 0, i, 0)].clone();
                for k in 1..n {
                    acc = acc.add(&c_mixed_j[idx3(n, k, i, k)]);
                }
                acc
            })
            .collect();
        let c_vec = valued(n, 0, 1, &c_vec_j);
        let c_vec_up = Tensor::from_fn(n, 1, 0, |i| {
            (0..n)
                .map(|j| g_inv.get(&[i[0], j]) * c_vec.get(&[j]))
                .sum()
        });
        let c_sq = c_vec.dot(&c_vec_up);

        // (v)h-torsion R^i_jk = δ_k G^i_j - δ_j G^i_k
        let mut r_torsion = Tensor::zeros(n, 1, 2);
        let mut r_torsion_scale: f64 = 0.0;
        for_each_index(n, 3, |idx| {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            let (a, sa) = delta_value(&barthel_j[idx2(n, i, j)], k);
            let (b, sb) = delta_value(&barthel_j[idx2(n, i, k)], j);
            r_torsion.set(idx, a - b);
            r_torsion_scale = r_torsion_scale.max(sa + sb);
        });

        let ctx = FrameContext {
            space: self.main.clone(),
            point: point.clone(),
            n,
            energy: energy.clone(),
            metric: gj.clone(),
            barthel: barthel_j.clone(),
            gamma: gamma.clone(),
            c_mixed: c_mixed.clone(),
        };

        // h-curvature
        let mut r = Tensor::zeros(n, 1, 3);
        let mut r_scale: f64 = 0.0;
        for_each_index(n, 4, |idx| {
            let (i, h, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let (a, sa) = delta_value(&gamma_j[idx3(n, i, h, j)], k);
            let (b, sb) = delta_value(&gamma_j[idx3(n, i, h, k)], j);
            let mut v = a - b;
            let mut s = sa + sb;
            for m in 0..n {
                let t1 = gamma.get(&[m, h, j]) * gamma.get(&[i, m, k]);
                let t2 = gamma.get(&[m, h, k]) * gamma.get(&[i, m, j]);
                let t3 = c_mixed.get(&[i, h, m]) * r_torsion.get(&[m, j, k]);
                v += t1 - t2 - t3;
                s += t1.abs() + t2.abs() + t3.abs();
            }
            r.set(idx, H_CURVATURE_SIGN * v);
            r_scale = r_scale.max(s);
        });

        // (v)hv-torsion and hv-curvature
        let p_hat = berwald.sub(&gamma);
        let p_hat_scale = berwald.max_abs() + gamma.max_abs();
        let c_mixed_hcov = ctx.h_cov(&c_mixed_j, 1, 2);
        let landsberg = c_mixed_hcov.tensor.contract(3, y);
        let mut p = Tensor::zeros(n, 1, 3);
        let mut p_scale: f64 = 0.0;
        for_each_index(n, 4, |idx| {
            let (i, h, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let a = sp.first_partial(&gamma_j[idx3(n, i, h, j)], n + k);
            let b = c_mixed_hcov.tensor.get(&[i, h, k, j]);
            let mut v = a - b;
            let mut s = a.abs() + b.abs();
            for m in 0..n {
                let t = c_mixed.get(&[i, h, m]) * p_hat.get(&[m, j, k]);
                v += t;
                s += t.abs();
            }
            p.set(idx, v);
            p_scale = p_scale.max(s);
        });

        // v-curvature
        let mut s_curv = Tensor::zeros(n, 1, 3);
        let mut s_scale: f64 = 0.0;
        for_each_index(n, 4, |idx| {
            let (i, h, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let mut v = 0.0;
            let mut s = 0.0;
            for m in 0..n {
                let t1 = c_mixed.get(&[m, h, k]) * c_mixed.get(&[i, m, j]);
                let t2 = c_mixed.get(&[m, h, j]) * c_mixed.get(&[i, m, k]);
                v += t1 - t2;
                s += t1.abs() + t2.abs();
            }
            s_curv.set(idx, v);
            s_scale = s_scale.max(s);
        });

        let r_low = r.lower_first(&g).transpose(0, 1);
        let p_low = p.lower_first(&g).transpose(0, 1);
        let s_low = s_curv.lower_first(&g).transpose(0, 1);

        // Ricci tensors: Ric(X, Y) = Tr(Z -> R(X, Z) Y), i.e. Ric_ab = R^m_{b a m}
        let ric_h = Tensor::from_fn(n, 0, 2, |i| {
            (0..n).map(|m| r.get(&[m, i[1], i[0], m])).sum()
        });
        let ric_v = Tensor::from_fn(n, 0, 2, |i| {
            (0..n).map(|m| s_curv.get(&[m, i[1], i[0], m])).sum()
        });
        let sc_h = g_inv.dot(&ric_h);
        let sc_v = g_inv.dot(&ric_v);

        // covariant derivatives of the Cartan tensor
        let c_hcov = ctx.h_cov(&c_j, 0, 3);
        let c_vcov = ctx.v_cov(&c_j, 0, 3);
        let c_dot = Tensor::from_fn(n, 0, 4, |i| {
            sp.first_partial(&c_j[idx3(n, i[0], i[1], i[2])], n + i[3])
        });
        let c_vec_hcov = ctx.h_cov(&c_vec_j, 0, 1);
        let c_vec_h0 = c_vec_hcov.tensor.contract(1, y);

        // S_hijk as jets for its covariant derivatives
        let s_low_j: Vec<Jet> = {
            let mut out = Vec::with_capacity(n.pow(4));
            for_each_index(n, 4, |idx| {
                let (h, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
                let mut acc = sp.zero();
                for m in 0..n {
                    acc = acc
                        .add(&sp.mul(&c_mixed_j[idx3(n, m, h, k)], &c_j[idx3(n, i, m, j)]))
                        .sub(&sp.mul(&c_mixed_j[idx3(n, m, h, j)], &c_j[idx3(n, i, m, k)]));
                }
                out.push(acc);
            });
            out
        };
        let s_hcov = ctx.h_cov(&s_low_j, 0, 4);
        let s_h0 = s_hcov.tensor.contract(4, y);
        let s_vcov = ctx.v_cov(&s_low_j, 0, 4);

        let berwald_dot = self.berwald_dot(&energy_expr, point)?;

        let frame = GeometryFrame {
            point: point.clone(),
            n,
            l,
            g,
            g_inv,
            det_g,
            ell,
            ell_up,
            hbar,
            phi,
            c,
            c_mixed,
            c_vec,
            c_vec_up,
            c_sq,
            spray,
            barthel,
            berwald,
            berwald_dot,
            gamma_formal,
            gamma,
            r_torsion,
            p_hat,
            landsberg,
            r,
            p,
            s: s_curv,
            r_low,
            p_low,
            s_low,
            ric_h,
            sc_h,
            ric_v,
            sc_v,
            c_hcov: c_hcov.tensor,
            c_mixed_hcov: c_mixed_hcov.tensor,
            c_vcov: c_vcov.tensor,
            c_dot,
            c_vec_hcov: c_vec_hcov.tensor,
            c_vec_h0,
            s_h0,
            s_vcov: s_vcov.tensor,
            scales: TermScales {
                gamma: gamma_scale,
                r_torsion: r_torsion_scale,
                r: r_scale,
                p: p_scale,
                s: s_scale,
                p_hat: p_hat_scale,
                c_hcov: c_hcov.scale,
                c_mixed_hcov: c_mixed_hcov.scale,
                c_vcov: c_vcov.scale,
                c_vec_hcov: c_vec_hcov.scale,
                s_hcov: s_hcov.scale,
                s_vcov: s_vcov.scale,
            },
        };
        for t in [
            &frame.g_inv,
            &frame.gamma,
            &frame.r,
            &frame.p,
            &frame.s,
            &frame.c_hcov,
            &frame.s_h0,
            &frame.berwald_dot,
        ] {
            check_finite(t)?;
        }
        Ok((frame, ctx))
    }

    /// `G^h_ijk` needs three y-derivatives of the spray, one order beyond the
    /// main pass; a second pass keeps total order 5 but only one x-order.
    fn berwald_dot(&self, energy_expr: &Expr, point: &ChartPoint) -> Result<Tensor, GeometryError> {
        let n = self.n;
        let sp = &*self.berwald;
        let energy = energy_expr.eval_in(&JetAlgebra {
            space: sp,
            x: &point.x,
            y: &point.y,
        })?;
        let (_, ginv, _, _) = metric_and_inverse(sp, &energy, n)?;
        let spray = spray_jets(sp, &energy, &ginv, &point.y, n);
        Ok(Tensor::from_fn(n, 1, 3, |i| {
            let a = sp.dy(&spray[i[0]], i[1]);
            let b = sp.dy(&a, i[2]);
            sp.first_partial(&b, n + i[3])
        }))
    }
}

/// Convenience wrapper building a fresh [`FrameEngine`].
pub fn compute_frame(
    spec: &MetricSpec,
    point: &ChartPoint,
) -> Result<GeometryFrame, GeometryError> {
    FrameEngine::new(spec.dim()).compute(spec, point)
}

impl FrameContext {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn point(&self) -> &ChartPoint {
        &self.point
    }

    pub fn energy(&self) -> &Jet {
        &self.energy
    }

    /// `g_ij` as jets.
    pub fn metric(&self) -> &[Jet] {
        &self.metric
    }

    /// Evaluate a scalar field given by an expression as a jet at the point.
    pub fn field(&self, expr: &Expr) -> Result<Jet, EvalError> {
        expr.eval_in(&JetAlgebra {
            space: &self.space,
            x: &self.point.x,
            y: &self.point.y,
        })
    }

    /// The coordinate function `y^i` as a jet.
    pub fn y_field(&self, i: usize) -> Jet {
        self.space.variable(Var::Y(i), self.point.y[i])
    }

    pub fn constant(&self, c: f64) -> Jet {
        self.space.constant(c)
    }

    /// `δ_k f` at the point.
    pub fn delta(&self, f: &Jet, k: usize) -> f64 {
        let n = self.n;
        let mut v = self.space.first_partial(f, k);
        for m in 0..n {
            v -= self.barthel[idx2(n, m, k)].value() * self.space.first_partial(f, n + m);
        }
        v
    }

    /// h-covariant derivative of a `(upper, lower)` field given by component
    /// jets in row-major order (upper indices first). The new slot is last.
    pub fn h_cov(&self, comps: &[Jet], upper: usize, lower: usize) -> CovDerivative {
        self.covariant(comps, upper, lower, true)
    }

    /// v-covariant derivative, same layout as [`FrameContext::h_cov`].
    pub fn v_cov(&self, comps: &[Jet], upper: usize, lower: usize) -> CovDerivative {
        self.covariant(comps, upper, lower, false)
    }

    fn covariant(
        &self,
        comps: &[Jet],
        upper: usize,
        lower: usize,
        horizontal: bool,
    ) -> CovDerivative {
        let n = self.n;
        let rank = upper + lower;
        assert_eq!(comps.len(), n.pow(rank as u32), "component count");
        let sp = &*self.space;
        let coeff = if horizontal {
            &self.gamma
        } else {
            &self.c_mixed
        };
        let values: Vec<f64> = comps.iter().map(Jet::value).collect();
        let offset = |idx: &[usize]| idx.iter().fold(0, |acc, &i| acc * n + i);
        let mut out = Tensor::zeros(n, upper, lower + 1);
        let mut scale: f64 = 0.0;
        let mut probe = vec![0usize; rank];
        for_each_index(n, rank + 1, |idx| {
            let (base, k) = (&idx[..rank], idx[rank]);
            let f = &comps[offset(base)];
            let (mut v, mut s) = if horizontal {
                let dx = sp.first_partial(f, k);
                let mut v = dx;
                let mut s = dx.abs();
                for m in 0..n {
                    let t = self.barthel[idx2(n, m, k)].value() * sp.first_partial(f, n + m);
                    v -= t;
                    s += t.abs();
                }
                (v, s)
            } else {
                let d = sp.first_partial(f, n + k);
                (d, d.abs())
            };
            for slot in 0..rank {
                probe.copy_from_slice(base);
                for m in 0..n {
                    probe[slot] = m;
                    let t = values[offset(&probe)];
                    let term = if slot < upper {
                        t * coeff.get(&[base[slot], m, k])
                    } else {
                        -t * coeff.get(&[m, base[slot], k])
                    };
                    v += term;
                    s += term.abs();
                }
            }
            out.set(idx, v);
            scale = scale.max(s);
        });
        CovDerivative { tensor: out, scale }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_metric;
    use approx::assert_relative_eq;

    fn pt(x: &[f64], y: &[f64]) -> ChartPoint {
        ChartPoint::new(x.to_vec(), y.to_vec())
    }

    #[test]
    fn euclidean_is_flat() {
        let spec = parse_metric("dim 2; L = sqrt(y1^2 + y2^2)").unwrap();
        let f = compute_frame(&spec, &pt(&[0.3, -0.2], &[0.6, 0.8])).unwrap();
        assert_relative_eq!(f.g.get(&[0, 0]), 1.0, epsilon = 1e-14);
        assert!(f.g.get(&[0, 1]).abs() < 1e-14);
        for t in [&f.c, &f.spray, &f.gamma, &f.r, &f.p, &f.s] {
            assert!(t.max_abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_curvature() {
        let spec = parse_metric("dim 2; riemannian; a11 = 1; a22 = sin(x1)^2; a12 = 0").unwrap();
        let x1: f64 = 0.7;
        let f = compute_frame(&spec, &pt(&[x1, 0.3], &[1.0, 2.0])).unwrap();
        assert!(f.c.max_abs() == 0.0);
        assert_relative_eq!(
            f.r_low.get(&[0, 1, 0, 1]),
            x1.sin().powi(2),
            epsilon = 1e-12
        );
        // Γ^1_22 = -sin cos, Γ^2_12 = cot
        assert_relative_eq!(
            f.gamma.get(&[0, 1, 1]),
            -x1.sin() * x1.cos(),
            epsilon = 1e-13
        );
        assert_relative_eq!(
            f.gamma.get(&[1, 0, 1]),
            x1.cos() / x1.sin(),
            epsilon = 1e-13
        );
        assert_relative_eq!(
            f.gamma.get(&[0, 1, 1]),
            f.gamma_formal.get(&[0, 1, 1]),
            epsilon = 1e-13
        );
    }

    #[test]
    fn inverse_jets_invert() {
        let spec = parse_metric("dim 2; L = exp(0.3 * x1) * (y1^4 + y2^4)^0.25").unwrap();
        let engine = FrameEngine::new(2);
        let (_, ctx) = engine
            .compute_with_context(&spec, &pt(&[0.2, 0.1], &[0.9, 0.4]))
            .unwrap();
        let sp = ctx.space();
        let g = ctx.metric();
        let g0 = DMatrix::from_fn(2, 2, |i, j| g[i * 2 + j].value());
        let ginv = inverse_jets(sp, g, &g0.try_inverse().unwrap(), 2);
        // (g ginv)_00 = 1 and its first derivatives vanish
        let prod = sp.mul(&g[0], &ginv[0]).add(&sp.mul(&g[1], &ginv[2]));
        assert_relative_eq!(prod.value(), 1.0, epsilon = 1e-13);
        for slot in 0..4 {
            assert!(sp.first_partial(&prod, slot).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_metric_is_reported() {
        let spec = parse_metric("dim 2; riemannian; a11 = 1; a22 = x1^2").unwrap();
        let err = compute_frame(&spec, &pt(&[0.0, 0.0], &[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateMetric { .. }));
    }
}
