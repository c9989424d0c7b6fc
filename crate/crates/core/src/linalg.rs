//! Small dense linear algebra: LU inversion, row-reduced null spaces, and
//! symbolic determinants for metric inverses.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{sum, Expression};

/// Determinants below this magnitude are treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

/// Determinant and inverse of a row-major `dim x dim` matrix via LU with
/// partial pivoting. `point` is only used to label the error.
pub fn invert(matrix: &[f64], dim: usize, point: &[f64]) -> Result<(f64, Vec<f64>)> {
    if matrix.len() != dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim, found: matrix.len() });
    }
    let m = DMatrix::from_row_slice(dim, dim, matrix);
    let lu = m.lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() < SINGULAR_DET {
        return Err(Error::SingularMetric { point: point.to_vec(), det });
    }
    let inv = lu.try_inverse().ok_or_else(|| Error::SingularMetric { point: point.to_vec(), det })?;
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[i * dim + j] = inv[(i, j)];
        }
    }
    Ok((det, out))
}

pub fn determinant(matrix: &[f64], dim: usize) -> f64 {
    DMatrix::from_row_slice(dim, dim, matrix).determinant()
}

/// Basis of the null space of a row-major `rows x cols` matrix, by reduction
/// to row echelon form with partial pivoting. Pivots below `tol` (relative to
/// the largest entry) count as zero.
pub fn null_space(matrix: &[f64], rows: usize, cols: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut a = matrix.to_vec();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let eps = tol * scale;
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let (best, best_abs) =
            (row..rows)
                .map(|r| (r, a[r * cols + col].abs()))
                .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= eps {
            continue;
        }
        for c in 0..cols {
            a.swap(row * cols + c, best * cols + c);
        }
        let p = a[row * cols + col];
        for c in 0..cols {
            a[row * cols + c] /= p;
        }
        for r in 0..rows {
            if r != row {
                let factor = a[r * cols + col];
                if factor != 0.0 {
                    for c in 0..cols {
                        a[r * cols + c] -= factor * a[row * cols + c];
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![0.0; cols];
            v[fc] = 1.0;
            for (r, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = 0.0 - a[r * cols + fc];
            }
            v
        })
        .collect()
}

pub fn rank(matrix: &[f64], rows: usize, cols: usize, tol: f64) -> usize {
    cols - null_space(matrix, rows, cols, tol).len()
}

/// Symbolic determinant by cofactor expansion along the sparsest row.
pub fn symbolic_det(m: &[Expression], dim: usize) -> Expression {
    let rows: Vec<usize> = (0..dim).collect();
    let cols: Vec<usize> = (0..dim).collect();
    det_minor(m, dim, &rows, &cols)
}

fn det_minor(m: &[Expression], dim: usize, rows: &[usize], cols: &[usize]) -> Expression {
    match rows.len() {
        0 => return Expression::one(),
        1 => return m[rows[0] * dim + cols[0]].clone(),
        _ => {}
    }
    let (pick, _) = rows
        .iter()
        .enumerate()
        .map(|(k, &r)| (k, cols.iter().filter(|&&c| m[r * dim + c].is_zero()).count()))
        .max_by_key(|&(k, zeros)| (zeros, usize::MAX - k))
        .unwrap();
    let r = rows[pick];
    let rest_rows: Vec<usize> = rows.iter().copied().filter(|&x| x != r).collect();
    sum(cols.iter().enumerate().filter_map(|(k, &c)| {
        let entry = &m[r * dim + c];
        if entry.is_zero() {
            return None;
        }
        let rest_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = det_minor(m, dim, &rest_rows, &rest_cols);
        let term = entry * &minor;
        Some(if (pick + k) % 2 == 0 { term } else { -term })
    }))
}

/// Symbolic inverse `adj(m) / det(m)`, row-major.
pub fn symbolic_inverse(m: &[Expression], dim: usize) -> Vec<Expression> {
    let det = symbolic_det(m, dim);
    let mut out = vec![Expression::zero(); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let rows: Vec<usize> = (0..dim).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..dim).filter(|&c| c != i).collect();
            let cof = det_minor(m, dim, &rows, &cols);
            let cof = if (i + j) % 2 == 0 { cof } else { -cof };
            out[i * dim + j] = cof / &det;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_pair_metric() {
        let (det, inv) = invert(&[0.0, 1.0, 1.0, 0.0], 2, &[]).unwrap();
        assert_eq!(det, -1.0);
        assert_eq!(inv, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn refuses_singular_matrices() {
        let err = invert(&[1.0, 2.0, 2.0, 4.0], 2, &[0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::SingularMetric { ref point, .. } if point == &[0.5, 0.5]));
    }

    #[test]
    fn null_space_of_adapted_structure() {
        // f for n = 1, m = 0
        let basis = null_space(&[0.0, 0.0, 1.0, 0.0], 2, 2, 1e-12);
        assert_eq!(basis, vec![vec![0.0, 1.0]]);
        assert_eq!(null_space(&[0.0; 9], 3, 3, 1e-12).len(), 3);
    }

    #[test]
    fn symbolic_inverse_matches_lu() {
        let scope: Vec<String> = vec!["u".into()];
        let texts = ["u^2 + 1", "1", "0", "2", "u", "1", "0", "1", "3"];
        let m: Vec<Expression> = texts.iter().map(|t| crate::expr::parse(t, &scope).unwrap()).collect();
        let inv = symbolic_inverse(&m, 3);
        for u in [-0.7, 0.3, 1.1] {
            let numeric: Vec<f64> = m.iter().map(|e| e.eval(&[u]).unwrap()).collect();
            let (_, lu) = invert(&numeric, 3, &[u]).unwrap();
            for (s, n) in inv.iter().zip(&lu) {
                assert!((s.eval(&[u]).unwrap() - n).abs() < 1e-12);
            }
        }
    }
}
