//! Parse a metric description, print its normalized form and check that
//! `L` is positively homogeneous of degree one in `y`.

use finsler::metric::{validate_homogeneity, HOMOGENEITY_LAMBDAS};
use finsler::parser::parse_metric;
use finsler::sampling::{sample_points, ChartDomain};

const TEXT: &str = "\
dim 3
name \"tilted-randers\"
randers
a11 = 1 + 0.1 * x2^2
a22 = 1
a33 = exp(0.2 * x1)
b1 = 0.3
b2 = 0.1 * sin(x3)
b3 = 0
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = parse_metric(TEXT)?;
    println!("{spec}");
    println!("L = {}", spec.lagrangian());

    let domain = ChartDomain::uniform(3, (-1.0, 1.0), (-1.0, 1.0), 0.1, 42);
    let points = sample_points(&spec, &domain, 5)?;
    let report = validate_homogeneity(&spec, &points, &HOMOGENEITY_LAMBDAS)?;
    println!(
        "homogeneity: max relative error {:.2e}, passed = {}",
        report.max_rel_err, report.passed
    );

    match parse_metric("dim 2\nL = sqrt(y1^2 + y3^2)\n") {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
