//! The half-ball to slab diffeomorphism, coefficient pullback, the 2D closed
//! forms of the model operator and the cycloidal metric.
//!
//! In two dimensions the map is `w = Log((1 + z)/(1 - z))` with `z = x_1 + i x_2`:
//! the flat face goes to `w_2 = 0`, the semicircle to `w_2 = π/2`, and the
//! two corners to `w_1 = ±∞`.

mod closed_form;
mod map;
mod metric;
mod pullback;

pub use closed_form::{closed_form_deltas, model2d_closed_form, ClosedForm, ClosedFormDeltas};
pub use map::{forward_map, height_ratio, inverse_map, jacobian, MapDerivatives, CORNER_TOLERANCE};
pub use metric::{cycloidal_distance, holder_seminorm, seminorm_of_points, MAX_PAIRS};
pub use pullback::{
    boundary_drift_limit, pull_function, pullback_coefficients, pulled_back_coefficients, push_function,
    PullbackResult,
};
