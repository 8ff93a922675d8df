//! The projector onto the indicatory (y-orthogonal) part of a tensor.

use crate::frame::GeometryFrame;
use crate::tensor::Tensor;

/// Apply `m` to one slot: `T'_{..i..} = m^a_i T_{..a..}` for a lower slot and
/// `T'^{i} = m^i_a T^a` for an upper slot.
pub fn apply_slot(t: &Tensor, slot: usize, m: &Tensor) -> Tensor {
    let (upper, lower) = t.valence();
    let n = t.dim();
    let mut src = vec![0usize; upper + lower];
    Tensor::from_fn(n, upper, lower, |idx| {
        src.copy_from_slice(idx);
        (0..n)
            .map(|a| {
                src[slot] = a;
                let w = if slot < upper {
                    m.get(&[idx[slot], a])
                } else {
                    m.get(&[a, idx[slot]])
                };
                w * t.get(&src)
            })
            .sum()
    })
}

/// Contract every slot with `φ^i_j = δ^i_j - ℓ^i ℓ_j`.
pub fn project_with(phi: &Tensor, t: &Tensor) -> Tensor {
    (0..t.rank()).fold(t.clone(), |acc, slot| apply_slot(&acc, slot, phi))
}

/// `ℙ·ω` for a tensor of valence `(0, p)` or `(1, p)`.
pub fn apply_projection(frame: &GeometryFrame, t: &Tensor) -> Tensor {
    debug_assert!(t.valence().0 <= 1 && t.rank() >= 1);
    project_with(&frame.phi, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::compute_frame;
    use crate::parser::parse_metric;
    use crate::sampling::ChartPoint;

    #[test]
    fn projector_properties() {
        let spec = parse_metric("dim 3; randers; a = identity; b1 = 0.5").unwrap();
        let f = compute_frame(&spec, &ChartPoint::new(vec![0.0; 3], vec![0.3, -0.7, 0.5])).unwrap();
        assert!(apply_projection(&f, &f.g).sub(&f.hbar).max_abs() < 1e-14);
        assert!(apply_projection(&f, &f.c).sub(&f.c).max_abs() < 1e-14);
        let once = apply_projection(&f, &f.r_torsion);
        assert!(apply_projection(&f, &once).sub(&once).max_abs() < 1e-14);
        let trace: f64 = (0..3).map(|i| f.phi.get(&[i, i])).sum();
        assert!((trace - 2.0).abs() < 1e-14);
    }
}
