//! Transfer functions and expected-color classification.

pub mod gradient;
pub mod joint;
pub mod lowdisc;
pub mod schemes;
pub mod tf;

pub use gradient::{gradient_stencil, GradientStencil};
pub use joint::{expected_color_2d, expected_color_linear};
pub use schemes::{
    expected_color_gaussian, expected_color_gmm, expected_color_parametric, expected_color_quantile_mean,
    expected_color_quantile_range, ParametricSample,
};
pub use tf::{Rgba, TransferFunction1D, TransferFunction2D};
