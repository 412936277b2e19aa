// Rejection sampling of nearly orthogonal unit-vector families, and what
// happens when the requested family size exceeds the sphere-packing
// ceiling for the coherence target.
//
// Run with: cargo run --release --example near_orthogonal_family

use hidimcov::weights::{coherence, near_orthogonal_family};

fn main() -> hidimcov::Result<()> {
    // 12 unit vectors in R^64 with pairwise |inner| <= 2/sqrt(64) = 0.25
    let d = 64;
    let a = 2.0;
    let family = near_orthogonal_family(d, 12, a, 7, 1_000_000)?;
    println!(
        "sampled {} unit vectors in R^{d}: coherence {:.4} (target {:.4})",
        family.len(),
        coherence(&family)?,
        a / (d as f64).sqrt()
    );
    for v in family.iter().take(3) {
        println!("  |v|_2 = {:.6}, |v|_1 = {:.3}", v.l2(), v.l1());
    }

    // Five vectors in R^4 at coherence 0.25 would need to sit exactly at
    // the Welch bound; rejection sampling reports the ceiling instead.
    match near_orthogonal_family(4, 5, 0.5, 7, 50_000) {
        Err(e) => println!("\noverpacked request fails as expected: {e}"),
        Ok(_) => println!("\nunexpected success"),
    }
    Ok(())
}
