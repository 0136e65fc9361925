//! Singular value decomposition of 3×3 matrices by one-sided Jacobi rotations.

use super::Mat3;
use crate::error::{LieError, Result};

/// Off-diagonal tolerance: columns `p, q` count as orthogonal once
/// `|a_p · a_q| ≤ OFF_DIAG_TOL · ‖a_p‖ ‖a_q‖`.
pub const OFF_DIAG_TOL: f64 = 1e-14;
/// Maximum number of full sweeps over the three column pairs.
pub const MAX_SWEEPS: usize = 60;

/// `m = u · diag(sigma) · vᵀ` with `sigma` sorted descending and non-negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Svd3 {
    pub u: Mat3,
    pub sigma: [f64; 3],
    pub v: Mat3,
}

impl Svd3 {
    pub fn reconstruct(&self) -> Mat3 {
        self.u * Mat3::from_diagonal(&self.sigma) * self.v.transpose()
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: &[f64; 3]) -> Option<[f64; 3]> {
    let n = dot(a, a).sqrt();
    (n > 0.0 && n.is_finite()).then(|| [a[0] / n, a[1] / n, a[2] / n])
}

/// Unit vector orthogonal to `a` (assumed unit length).
fn any_orthogonal(a: &[f64; 3]) -> [f64; 3] {
    // Cross with the basis axis least aligned with `a`.
    let k = (0..3)
        .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[k] = 1.0;
    normalize(&cross(a, &e)).unwrap_or([1.0, 0.0, 0.0])
}

/// Computes the SVD of `m`.
///
/// Columns of `m·V` are orthogonalised by plane rotations in the fixed pair
/// order (0,1), (0,2), (1,2). `U` is then rebuilt by Gram–Schmidt and a cross
/// product, which keeps it orthogonal to working precision even when the
/// smallest singular value is zero.
pub fn svd3(m: &Mat3) -> Result<Svd3> {
    if !m.is_finite() {
        return Err(LieError::NonFinite("svd3 input".into()));
    }
    let mut a: [[f64; 3]; 3] = std::array::from_fn(|j| m.column(j));
    let mut v: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let alpha = dot(&a[p], &a[p]);
            let beta = dot(&a[q], &a[q]);
            let gamma = dot(&a[p], &a[q]);
            if gamma == 0.0 || gamma.abs() <= OFF_DIAG_TOL * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            for k in 0..3 {
                let (ap, aq) = (a[p][k], a[q][k]);
                a[p][k] = c * ap - s * aq;
                a[q][k] = s * ap + c * aq;
                let (vp, vq) = (v[p][k], v[q][k]);
                v[p][k] = c * vp - s * vq;
                v[q][k] = s * vp + c * vq;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LieError::Internal(format!(
            "Jacobi SVD did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order = [0usize, 1, 2];
    let norms: [f64; 3] = std::array::from_fn(|j| dot(&a[j], &a[j]).sqrt());
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma = order.map(|j| norms[j]);
    let cols = order.map(|j| a[j]);
    let vcols = order.map(|j| v[j]);

    let u0 = normalize(&cols[0]).unwrap_or([1.0, 0.0, 0.0]);
    let u1 = {
        let d = dot(&u0, &cols[1]);
        let r = [
            cols[1][0] - d * u0[0],
            cols[1][1] - d * u0[1],
            cols[1][2] - d * u0[2],
        ];
        if sigma[1] > 0.0 {
            normalize(&r).unwrap_or_else(|| any_orthogonal(&u0))
        } else {
            any_orthogonal(&u0)
        }
    };
    let mut u2 = cross(&u0, &u1);
    if sigma[2] > 0.0 && dot(&u2, &cols[2]) < 0.0 {
        u2 = [-u2[0], -u2[1], -u2[2]];
    }

    let mut u = Mat3::zeros();
    let mut vm = Mat3::zeros();
    for (j, c) in [u0, u1, u2].iter().enumerate() {
        u.set_column(j, c);
        vm.set_column(j, &vcols[j]);
    }
    Ok(Svd3 { u, sigma, v: vm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check(m: &Mat3) {
        let s = svd3(m).unwrap();
        let scale = m.frobenius_norm().max(1.0);
        assert!(
            (s.reconstruct() - *m).frobenius_norm() <= 1e-12 * scale,
            "{m:?}"
        );
        assert!((s.u.transpose() * s.u - Mat3::identity()).frobenius_norm() <= 1e-12);
        assert!((s.v.transpose() * s.v - Mat3::identity()).frobenius_norm() <= 1e-12);
        assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2] && s.sigma[2] >= 0.0);
    }

    #[test]
    fn identity() {
        let s = svd3(&Mat3::identity()).unwrap();
        assert_eq!(s.sigma, [1.0, 1.0, 1.0]);
        assert!((s.u * s.v.transpose() - Mat3::identity()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn diagonal_sorted() {
        let s = svd3(&Mat3::from_diagonal(&[1.0, 3.0, 2.0])).unwrap();
        assert_eq!(s.sigma, [3.0, 2.0, 1.0]);
        let s = svd3(&Mat3::from_diagonal(&[-3.0, 2.0, 1.0])).unwrap();
        assert_eq!(s.sigma, [3.0, 2.0, 1.0]);
    }

    #[test]
    fn rank_deficient() {
        check(&Mat3::zeros());
        check(&Mat3::from_rows([
            [1.0, 2.0, 3.0],
            [2.0, 4.0, 6.0],
            [3.0, 6.0, 9.0],
        ]));
        check(&Mat3::from_rows([
            [1.0, 2.0, 0.0],
            [0.5, -1.0, 0.0],
            [3.0, 0.0, 0.0],
        ]));
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let m = Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            check(&m);
        }
    }

    #[test]
    fn nonfinite_rejected() {
        let mut m = Mat3::identity();
        m[(1, 1)] = f64::NAN;
        assert!(svd3(&m).is_err());
    }
}
