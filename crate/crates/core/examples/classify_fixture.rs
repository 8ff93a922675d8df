//! Run every special-space predicate on a fixture and print the table.
//!
//! ```text
//! cargo run --example classify_fixture -- quartic-minkowski-n3
//! ```

use finsler::classify::{classify_manifold, Tolerances};
use finsler::fixtures::fixture;
use finsler::report::classification_text;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "randers-n3".to_string());
    let f = fixture(&name)?;
    println!("{}: {}", name, f.description);
    let report = classify_manifold(&f.spec, &f.domain, 10, &Tolerances::default())?;
    print!("{}", classification_text(&report));
    Ok(())
}
