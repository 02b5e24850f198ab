//! Small dense helpers on `f64` slices.

use nalgebra::DMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sup over entries of `|a_i - b_i|`.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a symmetric row-major `n x n` matrix, ascending.
pub fn symmetric_eigenvalues(n: usize, entries: &[f64]) -> Vec<f64> {
    debug_assert_eq!(entries.len(), n * n);
    let m = DMatrix::from_row_slice(n, n, entries);
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Singular values of a row-major `rows x cols` matrix, descending.
pub fn singular_values(rows: usize, cols: usize, entries: &[f64]) -> Vec<f64> {
    debug_assert_eq!(entries.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_row_slice(rows, cols, entries);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Operator 2-norm of a row-major matrix.
pub fn operator_norm(rows: usize, cols: usize, entries: &[f64]) -> f64 {
    singular_values(rows, cols, entries)
        .first()
        .copied()
        .unwrap_or(0.0)
}

/// Determinant of a symmetric row-major matrix; the empty matrix has determinant 1.
pub fn determinant(n: usize, entries: &[f64]) -> f64 {
    match n {
        0 => 1.0,
        1 => entries[0],
        2 => entries[0] * entries[3] - entries[1] * entries[2],
        _ => DMatrix::from_row_slice(n, n, entries).determinant(),
    }
}

/// Inverse of a square row-major matrix, `None` when singular.
pub fn inverse(n: usize, entries: &[f64]) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, entries);
    let inv = m.try_inverse()?;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(inv[(i, j)]);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_indefinite_gram() {
        let ev = symmetric_eigenvalues(2, &[-1.0, -1.0, -1.0, 0.0]);
        let s5 = 5f64.sqrt();
        assert!((ev[0] - (-1.0 - s5) / 2.0).abs() < 1e-12);
        assert!((ev[1] - (-1.0 + s5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        assert!((operator_norm(2, 2, &[0.3, 0.0, 0.0, -0.7]) - 0.7).abs() < 1e-14);
        assert_eq!(operator_norm(0, 3, &[]), 0.0);
    }

    #[test]
    fn inverse_round_trip() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let inv = inverse(2, &a).unwrap();
        let prod = [
            a[0] * inv[0] + a[1] * inv[2],
            a[0] * inv[1] + a[1] * inv[3],
            a[2] * inv[0] + a[3] * inv[2],
            a[2] * inv[1] + a[3] * inv[3],
        ];
        assert!(max_abs_diff(&prod, &[1.0, 0.0, 0.0, 1.0]) < 1e-14);
        assert!(inverse(2, &[1.0, 2.0, 2.0, 4.0]).is_none());
    }
}
