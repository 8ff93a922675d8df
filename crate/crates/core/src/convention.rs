//! Sign and index-order conventions shared by every computed tensor.

use serde_json::{json, Value};

/// Overall sign applied to the h-curvature so that the round sphere has
/// `R_1212 = +sin^2 x1` and sectional curvature `+1`.
pub const H_CURVATURE_SIGN: f64 = 1.0;

/// `P_hijk - P_hikj = P_ANTISYMMETRY_SIGN * S_hijk|0`, calibrated on a
/// fixture where both sides are nonzero.
pub const P_ANTISYMMETRY_SIGN: f64 = -1.0;

/// Slot layout of the curvature tensors.
pub const SLOT_ORDER: &str = "R(d_j, d_k) d_h = R^i_hjk d_i; lowered R_hijk = g_il R^l_hjk";

/// Ricci contraction used for both horizontal and vertical Ricci tensors.
pub const RICCI_CONTRACTION: &str = "Ric_ij = R^m_jim";

pub fn convention_json() -> Value {
    json!({
        "slot_order": SLOT_ORDER,
        "h_curvature_sign": H_CURVATURE_SIGN,
        "p_antisymmetry_sign": P_ANTISYMMETRY_SIGN,
        "ricci": RICCI_CONTRACTION,
        "storage": "row-major, upper indices first",
    })
}
