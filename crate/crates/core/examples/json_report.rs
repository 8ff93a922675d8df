//! Write a versioned JSON classification report and read it back.

use finsler::classify::{classify_manifold, Tolerances};
use finsler::fixtures::fixture;
use finsler::report::{classification_json, to_pretty, SCHEMA_VERSION};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = fixture("hyperbolic-n2")?;
    let mut tol = Tolerances::default();
    tol.set("h-isotropic", 1e-9)?;
    let report = classify_manifold(&f.spec, &f.domain, 4, &tol)?;
    let text = to_pretty(&classification_json(&report, &tol));

    let path = std::env::temp_dir().join("finsler-hyperbolic-n2.json");
    std::fs::write(&path, &text)?;
    let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    assert_eq!(back["schema_version"], SCHEMA_VERSION);
    println!("wrote {} ({} bytes)", path.display(), text.len());
    println!("holds: {}", back["aggregate"]["holds"]);
    Ok(())
}
