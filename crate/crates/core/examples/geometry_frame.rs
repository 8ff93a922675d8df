//! Connection and curvature tensors of the round sphere at one point.

use finsler::fixtures::fixture;
use finsler::frame::compute_frame;
use finsler::sampling::ChartPoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sphere = fixture("sphere-n2")?;
    let point = ChartPoint::new(vec![0.7, 0.3], vec![1.0, 2.0]);
    let frame = compute_frame(&sphere.spec, &point)?;

    println!("L = {:.6}", frame.l);
    println!("g = {:?}", frame.g.data());
    println!("max |C| = {:.2e}", frame.c.max_abs());
    println!(
        "Gamma^1_22 = {:.6}  (-sin x cos x = {:.6})",
        frame.gamma.get(&[0, 1, 1]),
        -0.7f64.sin() * 0.7f64.cos()
    );
    println!(
        "Gamma^2_12 = {:.6}  (cot x = {:.6})",
        frame.gamma.get(&[1, 0, 1]),
        1.0 / 0.7f64.tan()
    );
    println!(
        "R_1212 = {:.6}  (sin^2 x = {:.6})",
        frame.r_low.get(&[0, 1, 0, 1]),
        0.7f64.sin().powi(2)
    );
    println!("spray G^h = {:?}", frame.spray.data());
    println!("horizontal scalar curvature = {:.6}", frame.sc_h);
    Ok(())
}
