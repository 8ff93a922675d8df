//! Exact Taylor-jet partials of the energy `E = L^2 / 2` compared with a
//! finite-difference oracle.

use finsler::derivatives::{fd_derivative, jet_eval};
use finsler::fixtures::fixture;
use finsler::sampling::sample_points;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = fixture("randers-curved-n3")?;
    let energy = f.spec.energy();
    let point = sample_points(&f.spec, &f.domain, 1)?.remove(0);
    let table = jet_eval(&energy, &point, (2, 3))?;
    println!(
        "{} partials of E at x = {:?}, y = {:?}",
        table.len(),
        point.x,
        point.y
    );

    let mut worst: f64 = 0.0;
    for (idx, exact) in table.iter() {
        let approx = fd_derivative(&energy, &point, idx)?;
        let rel = (exact - approx).abs() / exact.abs().max(1.0);
        worst = worst.max(rel);
        if idx.order() == 3 && idx.x_order() == 1 && rel > 0.0 {
            println!(
                "  dx^{:?} dy^{:?}: jet {exact:+.10e}  fd {approx:+.10e}",
                idx.alpha, idx.beta
            );
        }
    }
    println!("largest relative disagreement: {worst:.2e}");
    Ok(())
}
