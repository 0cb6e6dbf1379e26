pub mod arith;
pub mod classgroup;
pub mod closure;
pub mod cm;
pub mod embed;
pub mod error;
pub mod fp;
pub mod ideal;
pub mod lattice;
pub mod latticeav;
pub mod linalg;
pub mod nf;
pub mod order;
pub mod polar;
pub mod poly;
pub mod qfactor;
pub mod rayclass;
pub mod stverify;
pub mod units;
pub mod wire;

pub use error::{Error, Result};
pub use num_bigint::BigInt;

pub type Rational = num_rational::BigRational;
pub type QPoly = poly::Poly<Rational>;
pub type ZPoly = poly::Poly<BigInt>;
