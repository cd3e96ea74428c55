//! Exact Legendre-basis algebra, the transform `F` and its zeros.

pub mod legendre;
pub mod points;
pub mod roots;
pub mod series;

pub use legendre::{legendre_eval, legendre_series_eval, legendre_values};
pub use points::{predicted_superconv_exponent, superconv_points, SuperconvergencePointSet, DEGREE_CAP};
pub use roots::roots_in_interval;
pub use series::{f_apply, f_power_l1, LegendreCoeffs, Parity};
