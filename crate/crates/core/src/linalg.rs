//! Dense 4×4 kernels: cyclic Jacobi for symmetric spectra, Routh–Hurwitz
//! stability test, and a symmetry-reduced Lyapunov solver.

use nalgebra::{Matrix4, SMatrix, SVector};

use crate::error::{Error, Result};

pub type Mat4 = Matrix4<f64>;

/// Absolute asymmetry tolerated by the symmetric routines (scaled by the
/// matrix magnitude when that exceeds one).
pub const SYMMETRY_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 64;

pub fn max_asymmetry(m: &Mat4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(m: &Mat4) -> Result<()> {
    let scale = m.amax().max(1.0);
    let asym = max_asymmetry(m);
    if !(asym <= SYMMETRY_TOL * scale) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
/// rotations.
pub fn symmetric_eigenvalues(m: &Mat4) -> Result<[f64; 4]> {
    check_symmetric(m)?;
    let mut a = (m + m.transpose()) * 0.5;
    let frob2 = a.norm_squared();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..4 {
            for q in (p + 1)..4 {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off <= f64::EPSILON * f64::EPSILON * frob2 * 1e-4 || off == 0.0 {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }

    let mut eig = [a[(0, 0)], a[(1, 1)], a[(2, 2)], a[(3, 3)]];
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

pub fn max_eigenvalue_symmetric(m: &Mat4) -> Result<f64> {
    Ok(symmetric_eigenvalues(m)?[3])
}

/// Coefficients `[1, c1, c2, c3, c4]` of `det(sI - A)` (Faddeev–LeVerrier).
pub fn characteristic_polynomial(a: &Mat4) -> [f64; 5] {
    let mut coeffs = [0.0; 5];
    coeffs[0] = 1.0;
    let mut m = Mat4::zeros();
    for k in 1..=4 {
        m = a * m + Mat4::identity() * coeffs[k - 1];
        coeffs[k] = -(a * m).trace() / k as f64;
    }
    coeffs
}

/// Routh–Hurwitz test for a monic quartic `s^4 + c1 s^3 + c2 s^2 + c3 s + c4`.
pub fn quartic_is_hurwitz(coeffs: &[f64; 5]) -> bool {
    let [_, c1, c2, c3, c4] = *coeffs;
    c1 > 0.0 && c3 > 0.0 && c4 > 0.0 && c1 * c2 - c3 > 0.0 && c1 * c2 * c3 - c3 * c3 - c1 * c1 * c4 > 0.0
}

/// True when every eigenvalue of `a` has strictly negative real part.
pub fn is_hurwitz(a: &Mat4) -> bool {
    quartic_is_hurwitz(&characteristic_polynomial(a))
}

/// `‖M‖∞`, the maximum absolute row sum.
pub fn inf_norm(m: &Mat4) -> f64 {
    (0..4).map(|i| (0..4).map(|j| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `‖C A + Aᵀ C + I‖∞`.
pub fn lyapunov_residual(c: &Mat4, a: &Mat4) -> f64 {
    inf_norm(&(c * a + a.transpose() * c + Mat4::identity()))
}

// Position of c_ij (i <= j) in the packed upper triangle.
fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * 4 - i * (i + 1) / 2 + j
}

/// Solve `C A + Aᵀ C = -I` for the symmetric positive definite `C`.
///
/// The matrix equation is stacked over the ten independent entries of `C`
/// and solved directly. Fails with [`Error::UndelayedUnstable`] when `A` is
/// not Hurwitz, the stacked system is singular, or the solution is not
/// positive definite.
pub fn solve_lyapunov(a: &Mat4) -> Result<Mat4> {
    if !is_hurwitz(a) {
        return Err(Error::UndelayedUnstable);
    }

    let mut lhs = SMatrix::<f64, 10, 10>::zeros();
    let mut rhs = SVector::<f64, 10>::zeros();
    for i in 0..4 {
        for j in i..4 {
            let row = packed(i, j);
            // (C A)_ij = sum_k c_ik a_kj ; (Aᵀ C)_ij = sum_k a_ki c_kj
            for k in 0..4 {
                lhs[(row, packed(i, k))] += a[(k, j)];
                lhs[(row, packed(k, j))] += a[(k, i)];
            }
            if i == j {
                rhs[row] = -1.0;
            }
        }
    }

    let sol = lhs.lu().solve(&rhs).ok_or(Error::UndelayedUnstable)?;
    let c = Mat4::from_fn(|i, j| sol[packed(i, j)]);
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::UndelayedUnstable);
    }
    if symmetric_eigenvalues(&c)?[0] <= 0.0 {
        return Err(Error::UndelayedUnstable);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_covers_upper_triangle() {
        let mut seen = [false; 10];
        for i in 0..4 {
            for j in i..4 {
                seen[packed(i, j)] = true;
                assert_eq!(packed(i, j), packed(j, i));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn diagonal_eigenvalues() {
        let m = Mat4::from_diagonal(&nalgebra::Vector4::new(1.0, 2.0, 3.0, 4.0));
        assert_eq!(max_eigenvalue_symmetric(&m).unwrap(), 4.0);
    }

    #[test]
    fn embedded_two_by_two() {
        let mut m = Mat4::zeros();
        m[(0, 0)] = 2.0;
        m[(1, 1)] = 2.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        let eig = symmetric_eigenvalues(&m).unwrap();
        let expected = [0.0, 0.0, 1.0, 3.0];
        for (got, want) in eig.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14, "{eig:?}");
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = Mat4::identity();
        m[(0, 3)] = 1e-3;
        assert!(matches!(max_eigenvalue_symmetric(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn lyapunov_half_identity() {
        let a = -Mat4::identity() * 0.5;
        let c = solve_lyapunov(&a).unwrap();
        assert!((c - Mat4::identity()).amax() < 1e-14);
    }

    #[test]
    fn lyapunov_diagonal() {
        let a = Mat4::from_diagonal(&nalgebra::Vector4::new(-1.0, -2.0, -3.0, -4.0));
        let c = solve_lyapunov(&a).unwrap();
        let want = Mat4::from_diagonal(&nalgebra::Vector4::new(0.5, 0.25, 1.0 / 6.0, 0.125));
        assert!((c - want).amax() < 1e-14);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let a = Mat4::from_diagonal(&nalgebra::Vector4::new(-1.0, -2.0, 0.5, -4.0));
        assert_eq!(solve_lyapunov(&a), Err(Error::UndelayedUnstable));
        assert_eq!(solve_lyapunov(&Mat4::zeros()), Err(Error::UndelayedUnstable));
    }

    #[test]
    fn charpoly_of_diagonal() {
        let a = Mat4::from_diagonal(&nalgebra::Vector4::new(-1.0, -2.0, -3.0, -4.0));
        // (s+1)(s+2)(s+3)(s+4)
        assert_eq!(characteristic_polynomial(&a), [1.0, 10.0, 35.0, 50.0, 24.0]);
        assert!(is_hurwitz(&a));
        assert!(!is_hurwitz(&-a));
    }

    #[test]
    fn hurwitz_detects_oscillator_on_axis() {
        // s^4 + 2 s^2 + 1 has roots on the imaginary axis
        assert!(!quartic_is_hurwitz(&[1.0, 0.0, 2.0, 0.0, 1.0]));
    }
}
