//! Structural identities of the Cartan connection on a curved Randers metric.

use finsler::classify::Tolerances;
use finsler::fixtures::fixture;
use finsler::identities::run_identity_suite;
use finsler::sampling::sample_points;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = fixture("randers-curved-n3")?;
    let points = sample_points(&f.spec, &f.domain, 10)?;
    let report = run_identity_suite(&f.spec, &points, &Tolerances::default())?;
    for s in &report.summary {
        println!(
            "{:<30} {:<15} worst {:.2e}  {}",
            s.name, s.verdict, s.worst_ratio, s.statement
        );
    }
    for r in report.results("c-reducible-curvature") {
        if let Some(ratio) = r.params.get("sc_v_over_c_sq") {
            println!("Sc^v / C^2 = {:.12}", ratio[0]);
        }
    }
    println!("all identities pass: {}", report.all_pass());
    Ok(())
}
