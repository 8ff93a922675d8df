//! Algebraic checks on random Cartan-like tensors, with no metric involved.

use finsler::identities::synthetic_algebra_tests;

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    for r in synthetic_algebra_tests(seed, 100) {
        println!(
            "{:<26} {:<6} residual {:.2e}  {}",
            r.name, r.verdict, r.residual, r.statement
        );
    }
}
