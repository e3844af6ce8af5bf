//! Small dense linear-algebra kernels.

use nalgebra::DMatrix;

/// Orthonormal basis of `ker(a)` from a column-pivoted Householder QR of `aᵀ`.
///
/// Pivoting stops once the largest remaining column norm of `aᵀ` drops to
/// `rel_tol * max_row_norm(a)`; the trailing columns of the full orthogonal
/// factor then span the null space. Returns an `n x d` matrix (`n = a.ncols()`).
pub fn kernel_basis(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    let rows = a.nrows();
    if rows == 0 {
        return DMatrix::identity(n, n);
    }
    let mut r = a.transpose(); // n x rows
    let scale = (0..rows)
        .map(|i| a.row(i).norm())
        .fold(0.0_f64, f64::max);
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE);

    let mut reflectors: Vec<(usize, Vec<f64>)> = Vec::new();
    let steps = n.min(rows);
    let mut rank = 0;
    for k in 0..steps {
        // Pivot: largest remaining column norm.
        let (p, best) = (k..rows)
            .map(|c| {
                let s: f64 = (k..n).map(|i| r[(i, c)] * r[(i, c)]).sum();
                (c, s.sqrt())
            })
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            break;
        }
        r.swap_columns(k, p);

        let alpha = if r[(k, k)] >= 0.0 { -best } else { best };
        let mut v: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for c in k..rows {
                let dot: f64 = v.iter().enumerate().map(|(o, vi)| vi * r[(k + o, c)]).sum();
                let f = 2.0 * dot / vnorm2;
                for (o, vi) in v.iter().enumerate() {
                    r[(k + o, c)] -= f * vi;
                }
            }
            reflectors.push((k, v));
        }
        rank = k + 1;
    }

    // Trailing columns of Q = H_0 H_1 ... applied to the unit vectors e_rank..e_n.
    let d = n - rank;
    let mut basis = DMatrix::<f64>::zeros(n, d);
    for c in 0..d {
        basis[(rank + c, c)] = 1.0;
    }
    for (k, v) in reflectors.iter().rev() {
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for c in 0..d {
            let dot: f64 = v.iter().enumerate().map(|(o, vi)| vi * basis[(k + o, c)]).sum();
            let f = 2.0 * dot / vnorm2;
            for (o, vi) in v.iter().enumerate() {
                basis[(k + o, c)] -= f * vi;
            }
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_rank_deficient_matrix() {
        // Third row is the sum of the first two.
        let a = DMatrix::from_row_slice(3, 4, &[
            1.0, 2.0, 0.0, 1.0,
            0.0, 1.0, 1.0, -1.0,
            1.0, 3.0, 1.0, 0.0,
        ]);
        let b = kernel_basis(&a, 1e-10);
        assert_eq!(b.ncols(), 2);
        assert!((&a * &b).norm() < 1e-12);
        let gram = b.transpose() * &b;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn empty_and_full_rank_cases() {
        let b = kernel_basis(&DMatrix::zeros(0, 3), 1e-10);
        assert_eq!(b, DMatrix::identity(3, 3));
        let b = kernel_basis(&DMatrix::identity(3, 3), 1e-10);
        assert_eq!(b.ncols(), 0);
    }
}
