//! Matrix exponential by scaling and squaring with Padé approximants, and its
//! Fréchet derivative via the block-triangular identity.

use super::{Mat3, Mat9, Matrix};
use crate::error::{LieError, Result};

/// Inputs whose 1-norm exceeds this bound are rejected; `exp` of such a
/// matrix can overflow `f64`.
pub const EXP_NORM_BOUND: f64 = 500.0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Backward-error thresholds on the 1-norm for each Padé degree (Higham 2005).
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

/// Odd/even split of a low-degree Padé numerator: returns `(U, V)` with
/// `r(A) = (V - U)⁻¹ (V + U)`.
fn pade_low<const N: usize>(a: &Matrix<N>, b: &[f64]) -> (Matrix<N>, Matrix<N>) {
    let id = Matrix::<N>::identity();
    let a2 = *a * *a;
    let mut pow = id;
    let mut u_acc = id.scale(b[1]);
    let mut v_acc = id.scale(b[0]);
    let mut k = 2;
    while k < b.len() {
        pow = pow * a2;
        v_acc += pow.scale(b[k]);
        if k + 1 < b.len() {
            u_acc += pow.scale(b[k + 1]);
        }
        k += 2;
    }
    (*a * u_acc, v_acc)
}

fn pade13<const N: usize>(a: &Matrix<N>) -> (Matrix<N>, Matrix<N>) {
    let b = &B13;
    let id = Matrix::<N>::identity();
    let a2 = *a * *a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let u_inner = a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = *a * u_inner;
    let v = a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);
    (u, v)
}

fn solve_pade<const N: usize>(u: &Matrix<N>, v: &Matrix<N>) -> Result<Matrix<N>> {
    let den = *v - *u;
    let num = *v + *u;
    let lu = den
        .lu()
        .ok_or_else(|| LieError::Internal("singular Padé denominator".into()))?;
    let mut out = Matrix::zeros();
    for j in 0..N {
        out.set_column(j, &lu.solve(&num.column(j)));
    }
    Ok(out)
}

/// Matrix exponential of any small square matrix.
pub fn expm<const N: usize>(a: &Matrix<N>) -> Result<Matrix<N>> {
    if !a.is_finite() {
        return Err(LieError::NonFinite("expm input".into()));
    }
    let norm = a.norm1();
    if norm > EXP_NORM_BOUND {
        return Err(LieError::Range {
            norm,
            bound: EXP_NORM_BOUND,
        });
    }
    if norm == 0.0 {
        return Ok(Matrix::identity());
    }
    let low: [(f64, &[f64]); 4] = [(THETA3, &B3), (THETA5, &B5), (THETA7, &B7), (THETA9, &B9)];
    for (theta, b) in low {
        if norm <= theta {
            let (u, v) = pade_low(a, b);
            return solve_pade(&u, &v);
        }
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale(2f64.powi(-s));
    let (u, v) = pade13(&scaled);
    let mut e = solve_pade(&u, &v)?;
    for _ in 0..s {
        e = e * e;
    }
    if !e.is_finite() {
        return Err(LieError::Range {
            norm,
            bound: EXP_NORM_BOUND,
        });
    }
    Ok(e)
}

/// `exp(m)` for a 3×3 matrix.
pub fn mat_exp(m: &Mat3) -> Result<Mat3> {
    expm(m)
}

/// Fréchet derivative `L(a, e)` of the exponential at `a` in direction `e`,
/// read off the upper-right block of `exp([[a, e], [0, a]])`.
pub fn dexp_frechet(a: &Mat3, e: &Mat3) -> Result<Mat3> {
    let block = Matrix::<6>::from_fn(|i, j| match (i < 3, j < 3) {
        (true, true) => a[(i, j)],
        (true, false) => e[(i, j - 3)],
        (false, false) => a[(i - 3, j - 3)],
        (false, true) => 0.0,
    });
    let big = expm(&block)?;
    Ok(Mat3::from_fn(|i, j| big[(i, j + 3)]))
}

/// 9×9 matrix `J` with `J·vec(e) = vec(L(a, e))` under column stacking.
pub fn dexp_jacobian(a: &Mat3) -> Result<Mat9> {
    let mut j = Mat9::zeros();
    for k in 0..9 {
        let mut basis = [0.0; 9];
        basis[k] = 1.0;
        let col = dexp_frechet(a, &Mat3::unvec(&basis))?.vec();
        j.set_column(k, &col);
    }
    Ok(j)
}

/// Permutation `K` with `K·vec(M) = vec(Mᵀ)`.
pub fn commutation_matrix() -> Mat9 {
    // vec(M)[3j + i] = M[i][j]; vec(Mᵀ)[3j + i] = M[j][i] = vec(M)[3i + j].
    Mat9::from_fn(|r, c| {
        let (i, j) = (r % 3, r / 3);
        if c == 3 * i + j {
            1.0
        } else {
            0.0
        }
    })
}

/// Kronecker product; satisfies `(a ⊗ b)·vec(M) = vec(b·M·aᵀ)`.
pub fn kron(a: &Mat3, b: &Mat3) -> Mat9 {
    Mat9::from_fn(|r, c| a[(r / 3, c / 3)] * b[(r % 3, c % 3)])
}
