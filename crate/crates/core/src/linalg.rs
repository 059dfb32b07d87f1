//! Tiny dense solver used by the anchor-rule transform builder.

use alloc::vec;
use alloc::vec::Vec;

const PIVOT_EPS: f64 = 1e-10;

/// Solves `Σ_k x_k · columns[k] = rhs` exactly.
///
/// Returns `None` when the columns are linearly dependent or the system has
/// no exact solution.
pub(crate) fn solve_exact(columns: &[&[f64]], rhs: &[f64]) -> Option<Vec<f64>> {
    let rows = rhs.len();
    let unknowns = columns.len();
    if unknowns > rows {
        return None;
    }
    // augmented rows x (unknowns + 1)
    let mut a: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            let mut row: Vec<f64> = columns.iter().map(|c| c[r]).collect();
            row.push(rhs[r]);
            row
        })
        .collect();

    for col in 0..unknowns {
        let pivot = (col..rows).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < PIVOT_EPS {
            return None;
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == col {
                continue;
            }
            let factor = row[col] / pivot_row[col];
            if factor != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= factor * p;
                }
            }
        }
    }
    // leftover rows must be consistent
    if a[unknowns..].iter().any(|row| row[unknowns].abs() > PIVOT_EPS) {
        return None;
    }
    let mut x = vec![0.0; unknowns];
    for (k, xk) in x.iter_mut().enumerate() {
        *xk = a[k][unknowns] / a[k][k];
    }
    Some(x)
}
