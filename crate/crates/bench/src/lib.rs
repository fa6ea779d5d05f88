//! Benchmark-only helpers.
//!
//! Production paths score utility with deterministic expected noise
//! magnitudes; actually drawing Laplace noise happens only here, for
//! the release simulation benchmark.

#![deny(missing_docs)]

use rand::Rng;

/// Draws one Laplace(0, `scale`) sample by inverse CDF.
///
/// # Panics
/// If `scale` is not positive and finite.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    assert!(
        scale > 0.0 && scale.is_finite(),
        "scale must be positive and finite, got {scale}"
    );
    // u = 0 would map to -inf; u < 1 already holds for f64 draws.
    let u = loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            break v;
        }
    };
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}
