//! Small dense-vector helpers for the low-dimensional states used throughout
//! the crate. States live in ℝⁿ with n rarely above 3, so plain slices beat
//! pulling in a linear-algebra dependency.

/// Euclidean norm.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Dot product. Panics on length mismatch (callers validate dimensions once
/// at construction time).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean distance between two points.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Squared Euclidean distance.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `out = x + s * d`.
pub fn axpy_into(out: &mut [f64], x: &[f64], s: f64, d: &[f64]) {
    debug_assert_eq!(out.len(), x.len());
    debug_assert_eq!(out.len(), d.len());
    for i in 0..out.len() {
        out[i] = x[i] + s * d[i];
    }
}

/// True if every component is finite.
pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|a| a.is_finite())
}

/// Linear interpolation `a + f * (b - a)`. This form reproduces constants
/// bit-exactly (`a == b` gives `a` for any f), which downstream code relies
/// on when propagating constant payoffs through the value recursion.
pub fn lerp(a: f64, b: f64, f: f64) -> f64 {
    a + f * (b - a)
}
