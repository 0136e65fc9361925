//! Transformation sampling and synthetic image generation for the trainer.

mod image;
mod params;
mod rng;

pub use image::{make_synthetic_image, warp_image, GrayImage, BAR_MAX_TILT};
pub use params::{
    frame_corners, homography_from_points, params_to_homography, pixel_to_frame, sample_params,
    target_corners, TransformParams, MAX_CORNER_OFFSET, SCALE_RANGE,
};
pub use rng::Rng;
