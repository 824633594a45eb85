//! CPU raycaster, quartile views and difference images.

pub mod camera;
pub mod diff;
pub mod image;
pub mod raycast;

pub use camera::Camera;
pub use diff::{diff_image, rmse};
pub use image::Image;
pub use raycast::{quartile_pieces, raycast, render_quartile_views, RenderJob, RenderOptions, Scheme};
