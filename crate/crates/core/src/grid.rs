//! Point sets used for validation and certificates.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

/// Square lattice with the given spacing, clipped to the closed disk
/// `D(center, radius)`. Row-major from the bottom-left corner.
pub fn disk_lattice(center: Complex64, radius: f64, spacing: f64) -> Vec<Complex64> {
    let steps = (radius / spacing).floor() as i64;
    let mut out = Vec::new();
    for iy in -steps..=steps {
        for ix in -steps..=steps {
            let w = Complex64::new(ix as f64 * spacing, iy as f64 * spacing);
            if w.norm() <= radius * (1.0 + 1e-12) {
                out.push(center + w);
            }
        }
    }
    out
}

/// `count` points uniformly distributed in `D(center, radius)`.
pub fn random_disk<R: Rng + ?Sized>(
    rng: &mut R,
    center: Complex64,
    radius: f64,
    count: usize,
) -> Vec<Complex64> {
    (0..count)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let t = 2.0 * PI * rng.gen::<f64>();
            center + Complex64::from_polar(r, t)
        })
        .collect()
}

/// `count` equally spaced points on the circle `|z - center| = radius`.
pub fn circle(center: Complex64, radius: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / count as f64))
        .collect()
}
