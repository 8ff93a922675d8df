//! Ricci-type decomposition of the h-curvature for hyperbolic space in
//! dimension four: the `F`, `F0` tensors, their radial parts and the
//! reconstruction of `R` from them.

use finsler::derived::DerivedTensors;
use finsler::fixtures::fixture;
use finsler::frame::compute_frame;
use finsler::sampling::sample_points;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = fixture("hyperbolic-n4")?;
    let point = sample_points(&f.spec, &f.domain, 1)?.remove(0);
    let frame = compute_frame(&f.spec, &point)?;
    let d = DerivedTensors::compute(&frame)?;

    println!("c = {:.6}", d.c);
    println!("max |psi| = {:.2e}", d.psi.max_abs());
    println!(
        "|R - R(F0, F)| = {:.2e}",
        frame.r.sub(&d.r_from_f0(&frame)).max_abs()
    );
    println!(
        "|F - parts|    = {:.2e}",
        d.f.sub(&d.f_from_parts(&frame)).max_abs()
    );
    println!(
        "|H - parts|    = {:.2e}",
        d.h.sub(&d.h_from_parts(&frame)).max_abs()
    );
    println!(
        "|H(eta)|       = {:.2e}",
        d.h.contract(1, &point.y).max_abs()
    );
    Ok(())
}
