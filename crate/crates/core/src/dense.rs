//! Small dense symmetric eigenvalue routines used by the oracle paths.

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
///
/// An off-diagonal entry is annihilated unless it is negligible relative to
/// its two diagonal entries; sweeps stop once a full sweep rotates nothing.
pub fn jacobi_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    let mut a = matrix.clone();
    // symmetrize against round-off in the caller's construction
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                // relative skip rule: keeps tiny eigenvalues of graded matrices
                if apq.abs() <= f64::EPSILON * 0.25 * (app * aqq).abs().sqrt() || apq == 0.0 {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Number of eigenvalues with `|value| > threshold * max |value|`.
pub fn numerical_rank(eigenvalues: &[f64], threshold: f64) -> usize {
    let scale = eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    eigenvalues
        .iter()
        .filter(|v| v.abs() > threshold * scale.max(1.0))
        .count()
}

/// Lower-triangular solve `L X = B` for dense `L`.
pub fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for col in 0..b.ncols() {
        for i in 0..n {
            let mut v = x[(i, col)];
            for k in 0..i {
                v -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = v / l[(i, i)];
        }
    }
    x
}

/// `L^{-1} A L^{-T}` for symmetric `A`.
pub fn congruence_by_inverse(l: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let left = solve_lower(l, a);
    solve_lower(l, &left.transpose())
}
