//! Random homographies: scale, quarter-turn rotation and four-corner jitter.
//!
//! All homographies live in a normalised image frame: the origin is the image
//! centre and one unit is half the longer image side, so a square image spans
//! `[-1, 1]²`. Pixel `(i, j)` has its centre at `(i + 0.5, j + 0.5)`.

use serde::{Deserialize, Serialize};

use super::rng::Rng;
use crate::error::{LieError, Result};
use crate::lie::{normalize_unit_det, Homography};
use crate::linalg::{Mat3, Matrix};

pub const MAX_CORNER_OFFSET: f64 = 0.125;
pub const SCALE_RANGE: (f64, f64) = (0.8, 1.2);

/// Parameters of one sampled transformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    /// Per-corner `(dx, dy)` as fractions of image width and height, in the
    /// corner order top-left, top-right, bottom-right, bottom-left.
    pub corner_offsets: [[f64; 2]; 4],
    pub scale: f64,
    /// Rotation in multiples of 90°.
    pub rotation_quarter: u8,
}

impl TransformParams {
    pub fn identity() -> Self {
        Self {
            corner_offsets: [[0.0; 2]; 4],
            scale: 1.0,
            rotation_quarter: 0,
        }
    }

    pub fn in_range(&self) -> bool {
        self.corner_offsets
            .iter()
            .flatten()
            .all(|o| o.abs() <= MAX_CORNER_OFFSET)
            && (SCALE_RANGE.0..=SCALE_RANGE.1).contains(&self.scale)
            && self.rotation_quarter < 4
    }
}

/// Draws offsets independently per corner and axis.
pub fn sample_params(rng: &mut Rng) -> TransformParams {
    let mut corner_offsets = [[0.0; 2]; 4];
    for c in corner_offsets.iter_mut().flatten() {
        *c = rng.uniform(-MAX_CORNER_OFFSET, MAX_CORNER_OFFSET);
    }
    let scale = rng.uniform(SCALE_RANGE.0, SCALE_RANGE.1);
    let rotation_quarter = rng.below(4) as u8;
    TransformParams {
        corner_offsets,
        scale,
        rotation_quarter,
    }
}

/// Map from pixel coordinates to the normalised frame.
pub fn pixel_to_frame(width: usize, height: usize) -> Mat3 {
    let half = width.max(height) as f64 / 2.0;
    Mat3::from_rows([
        [1.0 / half, 0.0, -(width as f64) / 2.0 / half],
        [0.0, 1.0 / half, -(height as f64) / 2.0 / half],
        [0.0, 0.0, 1.0],
    ])
}

/// Image corners in the normalised frame (TL, TR, BR, BL).
pub fn frame_corners(width: usize, height: usize) -> [[f64; 2]; 4] {
    let half = width.max(height) as f64 / 2.0;
    let (x, y) = (width as f64 / 2.0 / half, height as f64 / 2.0 / half);
    [[-x, -y], [x, -y], [x, y], [-x, y]]
}

fn quarter_rotation(q: u8) -> Mat3 {
    let (s, c) = match q % 4 {
        0 => (0.0, 1.0),
        1 => (1.0, 0.0),
        2 => (0.0, -1.0),
        _ => (-1.0, 0.0),
    };
    Mat3::from_rows([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
}

/// Direct linear transform from four point correspondences, with `h₃₃ = 1`.
pub fn homography_from_points(src: &[[f64; 2]; 4], dst: &[[f64; 2]; 4]) -> Result<Mat3> {
    let mut a = Matrix::<8>::zeros();
    let mut b = [0.0; 8];
    for k in 0..4 {
        let [x, y] = src[k];
        let [u, v] = dst[k];
        let r = 2 * k;
        let row_u = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y];
        let row_v = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y];
        for c in 0..8 {
            a[(r, c)] = row_u[c];
            a[(r + 1, c)] = row_v[c];
        }
        b[r] = u;
        b[r + 1] = v;
    }
    let lu = a.lu().ok_or(LieError::SingularMatrix { det: 0.0 })?;
    let det = lu.determinant();
    if det.abs() < 1e-12 {
        return Err(LieError::SingularMatrix { det });
    }
    let h = lu.solve(&b);
    Ok(Mat3::from_rows([
        [h[0], h[1], h[2]],
        [h[3], h[4], h[5]],
        [h[6], h[7], 1.0],
    ]))
}

/// Corners of the scaled and rotated image, before jitter.
fn rotated_corners(p: &TransformParams, width: usize, height: usize) -> [[f64; 2]; 4] {
    let rs = quarter_rotation(p.rotation_quarter) * Mat3::from_diagonal(&[p.scale, p.scale, 1.0]);
    frame_corners(width, height).map(|[x, y]| {
        let q = rs.mul_vec(&[x, y, 1.0]);
        [q[0], q[1]]
    })
}

/// Where the four image corners end up under the sampled transformation.
pub fn target_corners(p: &TransformParams, width: usize, height: usize) -> [[f64; 2]; 4] {
    let half = width.max(height) as f64 / 2.0;
    let (sx, sy) = (width as f64 / half, height as f64 / half);
    let mut out = rotated_corners(p, width, height);
    for (c, o) in out.iter_mut().zip(&p.corner_offsets) {
        c[0] += o[0] * sx;
        c[1] += o[1] * sy;
    }
    out
}

/// `H = H_jitter · H_rot · H_scale` in the normalised frame, scaled to unit
/// determinant. `H_jitter` moves the corners of the scaled, rotated image by
/// the sampled offsets.
pub fn params_to_homography(
    p: &TransformParams,
    width: usize,
    height: usize,
) -> Result<Homography> {
    if width < 2 || height < 2 {
        return Err(LieError::Config(format!(
            "image must be at least 2×2, got {width}×{height}"
        )));
    }
    let src = rotated_corners(p, width, height);
    let dst = target_corners(p, width, height);
    let jitter = homography_from_points(&src, &dst)?;
    let h = jitter
        * quarter_rotation(p.rotation_quarter)
        * Mat3::from_diagonal(&[p.scale, p.scale, 1.0]);
    normalize_unit_det(&h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_params() {
        let h = params_to_homography(&TransformParams::identity(), 32, 32).unwrap();
        assert!((*h.matrix() - Mat3::identity()).frobenius_norm() < 1e-14);
    }

    #[test]
    fn quarter_turn() {
        let p = TransformParams {
            rotation_quarter: 1,
            ..TransformParams::identity()
        };
        let h = params_to_homography(&p, 32, 32).unwrap();
        assert!((*h.matrix() - Mat3::rot_z(std::f64::consts::FRAC_PI_2)).frobenius_norm() < 1e-14);
        assert!((h.matrix().det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn corner_roundtrip() {
        let mut rng = Rng::new(5);
        for _ in 0..10_000 {
            let p = sample_params(&mut rng);
            assert!(p.in_range());
            let h = params_to_homography(&p, 32, 24).unwrap();
            assert!((h.matrix().det() - 1.0).abs() < 1e-9);
            let dst = target_corners(&p, 32, 24);
            for (c, d) in frame_corners(32, 24).iter().zip(&dst) {
                let (x, y) = h.apply(c[0], c[1]);
                assert!((x - d[0]).abs() < 1e-9 && (y - d[1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn collinear_rejected() {
        let src = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        assert!(homography_from_points(&src, &src).is_err());
    }

    #[test]
    fn deterministic_and_scale_mean() {
        assert_eq!(
            sample_params(&mut Rng::new(42)),
            sample_params(&mut Rng::new(42))
        );
        let mut rng = Rng::new(9);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_params(&mut rng).scale).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01);
    }
}
