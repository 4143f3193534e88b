//! Deterministic fixtures shared by the benchmarks.

use warpshift::Curve;

/// A wobbly planar curve of `n` points; `phase` varies the shape.
pub fn wobble(n: usize, phase: f64) -> Curve {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let t = k as f64 * 0.7 + phase;
            (k as f64 * 0.3 + t.sin(), (1.3 * t).cos() * 0.8)
        })
        .collect();
    Curve::from_xy(&pts).expect("finite points")
}

/// A pair of curves with a non-trivial optimal translation.
pub fn pair(n: usize) -> (Curve, Curve) {
    let a = wobble(n, 0.0);
    let b: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let t = k as f64 * 0.7 + 0.4;
            (k as f64 * 0.3 + t.sin() + 2.5, (1.3 * t).cos() * 0.8 - 1.0)
        })
        .collect();
    (a, Curve::from_xy(&b).expect("finite points"))
}
