//! Prints the classification of every built-in family for a few dimensions
//! and exponents.

use pfeller::classify::{classify, VerdictPolicy};
use pfeller::warping::{Family, ModelManifold};

fn main() {
    let policy = VerdictPolicy::default();
    println!("{:<16} {:>2} {:>4}  {:<10} {:<10} {:<8}", "family", "m", "p", "hyperbolic", "complete", "feller");
    for family in Family::ALL_DEFAULT {
        for m in [2u32, 3] {
            for p in [1.5, 2.0, 3.0] {
                let manifold = ModelManifold::family(family, m).expect("built-in family");
                let t = std::time::Instant::now();
                let report = classify(&manifold, p, &policy).expect("classification");
                println!(
                    "{:<16} {:>2} {:>4}  {:<10} {:<10} {:<8} ({:.0} ms)",
                    manifold.sigma.label(),
                    m,
                    p,
                    report.is_hyperbolic().label(),
                    report.is_complete().label(),
                    report.is_feller().label(),
                    t.elapsed().as_secs_f64() * 1e3
                );
            }
        }
    }
}
