//! Load a user metric from a `FINSLER_FIXTURES`-style directory, with its
//! sampling domain in a companion TOML file.

use finsler::classify::{classify_manifold, Tolerances};
use finsler::fixtures::load_fixture_file;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("finsler-fixtures-example");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(
        dir.join("kropina-like.metric"),
        "dim 2\nL = sqrt(y1^2 + y2^2) + 0.3 * y1 + 0.1 * x2 * y2\n",
    )?;
    std::fs::write(
        dir.join("kropina-like.domain.toml"),
        "x_box = [[-1.0, 1.0], [-1.0, 1.0]]\ny_box = [[-1.0, 1.0], [-1.0, 1.0]]\neps_y = 0.2\nseed = 5\n",
    )?;

    let f = load_fixture_file(&dir.join("kropina-like.metric"))?;
    println!("{} with domain {:?}", f.spec.name(), f.domain);
    let report = classify_manifold(&f.spec, &f.domain, 6, &Tolerances::default())?;
    for a in &report.aggregate {
        println!("{:<22} {}", a.name, a.verdict);
    }
    Ok(())
}
