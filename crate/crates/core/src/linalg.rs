//! Complex least squares by Householder QR with column equilibration.

use nalgebra::{DMatrix, DVector};

use crate::{FdError, Result, C64};

/// Columns whose QR diagonal falls below this fraction of the largest one
/// are treated as rank deficient.
pub(crate) const RANK_TOL: f64 = 1e-10;

/// Solve `min ||a x - b||` for `x`. `label(j)` names column `j` in errors.
pub(crate) fn solve_ls(
    mut a: DMatrix<C64>,
    b: DVector<C64>,
    label: impl Fn(usize) -> String,
) -> Result<DVector<C64>> {
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(FdError::Undetermined {
            rows,
            unknowns: cols,
        });
    }
    let mut scale = Vec::with_capacity(cols);
    for j in 0..cols {
        let norm = a.column(j).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(FdError::Singular {
                column: j,
                label: label(j),
            });
        }
        a.column_mut(j).iter_mut().for_each(|v| *v /= norm);
        scale.push(norm);
    }
    let qr = a.qr();
    let r = qr.r();
    let max_diag = (0..cols).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    for i in 0..cols {
        if r[(i, i)].norm() <= RANK_TOL * max_diag {
            return Err(FdError::Singular {
                column: i,
                label: label(i),
            });
        }
    }
    let mut qtb = b;
    qr.q_tr_mul(&mut qtb);
    let mut x = DVector::from_element(cols, C64::new(0.0, 0.0));
    for i in (0..cols).rev() {
        let mut acc = qtb[i];
        for j in i + 1..cols {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    for (xi, s) in x.iter_mut().zip(&scale) {
        *xi /= *s;
    }
    Ok(x)
}
