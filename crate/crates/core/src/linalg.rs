//! Dense complex solves for the small per-bin systems.

use num_complex::Complex64;

/// Pivot magnitudes below `PIVOT_TOLERANCE · scale` are treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Solves `a · x = b` in place by Gaussian elimination with partial pivoting.
///
/// `a` is `n×n` row-major and is destroyed; on success `b` holds `x`. On
/// failure returns the index of the column whose pivot vanished.
pub fn solve_in_place(a: &mut [Complex64], b: &mut [Complex64], n: usize) -> Result<(), usize> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(f64::MIN_POSITIVE);

    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, a[r * n + col].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_mag <= PIVOT_TOLERANCE * scale {
            return Err(col);
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= factor * v;
            }
            let bc = b[col];
            b[r] -= factor * bc;
        }
    }

    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Ok(())
}
