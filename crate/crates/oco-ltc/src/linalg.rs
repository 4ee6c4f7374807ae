//! Small dense-vector helpers used throughout the crate.
//!
//! Dimensions here are tiny (a handful of coordinates), so plain slices beat
//! pulling in a matrix library; every routine is a few lines and allocation
//! only happens where a new vector is actually produced.

/// Inner product. Panics in debug builds on length mismatch.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len(), "dot: length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// 1-norm (sum of absolute values).
#[inline]
pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// Squared Euclidean distance between two points.
#[inline]
pub fn dist2_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len(), "dist2_sq: length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `a + s * b`, returning a new vector.
#[inline]
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len(), "axpy: length mismatch");
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// In-place `a += s * b`.
#[inline]
pub fn axpy_mut(a: &mut [f64], s: f64, b: &[f64]) {
    debug_assert_eq!(a.len(), b.len(), "axpy_mut: length mismatch");
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// Difference `a - b`, returning a new vector.
#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len(), "sub: length mismatch");
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// True iff every coordinate is finite.
#[inline]
pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_norms() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, -1.0]), 1.0);
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(norm1(&[3.0, -4.0]), 7.0);
        assert_eq!(dist2_sq(&[1.0, 1.0], &[0.0, 0.0]), 2.0);
    }

    #[test]
    fn axpy_matches_manual() {
        assert_eq!(axpy(&[1.0, 0.0], 2.0, &[0.5, 1.0]), vec![2.0, 2.0]);
        let mut a = vec![1.0, 0.0];
        axpy_mut(&mut a, -1.0, &[1.0, 1.0]);
        assert_eq!(a, vec![0.0, -1.0]);
    }
}
