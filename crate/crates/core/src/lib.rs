pub mod arithmetic;
pub mod bloch;
mod dense;
pub mod dilogarithm;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod scalar;
pub mod triangulation;
pub mod zlinalg;

pub use error::{NzError, Result};
pub use scalar::{Dd, PrecisionContext, Real};

/// Complex numbers at machine precision.
pub type Cx = num_complex::Complex<f64>;
/// Complex numbers at double-double precision.
pub type CxDd = num_complex::Complex<Dd>;
pub type Pair = bloch::HalfSymplecticPair<f64>;
pub type PairDd = bloch::HalfSymplecticPair<Dd>;
pub type Shapes = geometry::ShapeAssignment<f64>;
pub type ShapesDd = geometry::ShapeAssignment<Dd>;
