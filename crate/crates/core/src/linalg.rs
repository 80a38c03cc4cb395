//! Dense solves for the tiny systems used by closest-point refinement.

use crate::real::Real;

/// Solves `a·x = b` for a row-major `m×m` matrix; the solution replaces `b`.
///
/// Returns `false` when the matrix is numerically singular.
pub(crate) fn solve_in_place<T: Real>(a: &mut [T], b: &mut [T], m: usize) -> bool {
    debug_assert_eq!(a.len(), m * m);
    debug_assert_eq!(b.len(), m);
    let scale = a.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if !(scale > T::zero()) {
        return false;
    }
    let tiny = scale * T::epsilon() * T::from_usize_lossy(m);
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| {
                a[i * m + col]
                    .abs()
                    .partial_cmp(&a[j * m + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty pivot range");
        if !(a[pivot * m + col].abs() > tiny) {
            return false;
        }
        if pivot != col {
            for k in 0..m {
                a.swap(pivot * m + k, col * m + k);
            }
            b.swap(pivot, col);
        }
        let diag = a[col * m + col];
        for row in (col + 1)..m {
            let factor = a[row * m + col] / diag;
            if factor == T::zero() {
                continue;
            }
            for k in col..m {
                a[row * m + k] = a[row * m + k] - factor * a[col * m + k];
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    for row in (0..m).rev() {
        let mut acc = b[row];
        for k in (row + 1)..m {
            acc = acc - a[row * m + k] * b[k];
        }
        b[row] = acc / a[row * m + row];
    }
    true
}
