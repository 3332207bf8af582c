pub mod cyclo;
pub mod error;
pub mod expsum;
pub mod ff;
pub mod lfun;
pub mod padic;
pub mod poly;
pub mod polygon;

pub use error::{Error, Result};

/// Elements of `Z[ζ_p]` with arbitrary-precision coordinates.
pub type CycInt = cyclo::Cyc<num_bigint::BigInt>;

/// Exact rationals for polygon arithmetic.
pub type Rational = num_rational::BigRational;

/// Newton and Hodge polygons.
pub type Polygon = polygon::Hull<Rational>;
