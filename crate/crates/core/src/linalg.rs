//! Small dense linear algebra used by exact policy evaluation and the simplex
//! dual recovery.

use crate::error::{CmdpError, Result};

const PIVOT_EPS: f64 = 1e-14;

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
///
/// `a` is row-major `n x n` and is destroyed; on success `b` holds `x`.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);

    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < PIVOT_EPS || !best.is_finite() {
            return Err(CmdpError::Singular);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }

        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }

    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * b[k];
        }
        b[row] = acc / a[row * n + row];
    }
    Ok(())
}

/// Solves `Aᵀ y = c` for a row-major `n x n` matrix without mutating `a`.
pub fn solve_transposed(a: &[f64], c: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut at = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            at[j * n + i] = a[i * n + j];
        }
    }
    let mut y = c.to_vec();
    solve_dense(&mut at, &mut y, n)?;
    Ok(y)
}
