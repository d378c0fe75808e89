//! Numerical toolkit for the quadratic-phase series
//!
//!     F_s(x) = sum_{n >= 1} e^{2 pi i n^2 x} / n^s,     1/2 < s <= 1.
//!
//! In this exponent range the series converges only on a Diophantine set of
//! points, evaluation near rationals is dominated by Gauss-sum resonances,
//! and the local L2 means around a point scale with an exponent controlled
//! by how well the point is approximated by rationals whose denominators
//! avoid the 2*odd class. The crate provides:
//!
//! * exact continued-fraction machinery and a convergence classifier
//!   ([`diophantine`]),
//! * exact normalized Gauss-sum tables ([`gauss`]),
//! * direct reference summation with exact phase reduction ([`series`]),
//! * stationary-phase accelerated evaluation ([`asymptotics`]),
//! * annulus/ball L2 means, the pointwise exponent estimator, and the
//!   multifractal spectrum formula ([`local_l2`]),
//! * empirical order-of-error verification harnesses ([`verify`]).
//!
//! The quadrature, window, and fitting layers are generic over the scalar
//! type through [`scalar::Real`]; everything precision-critical runs on
//! f64 augmented with the double-double [`scalar::Dd`].

pub mod asymptotics;
pub mod bignum;
pub mod config;
pub mod diophantine;
pub mod error;
pub mod fit;
pub mod gauss;
pub mod local_l2;
pub mod quad;
pub mod scalar;
pub mod series;
pub mod special;
pub mod verify;
pub mod window;

/// Working scalar of the concrete numeric paths.
pub type Scalar = f64;
/// Complex number over the working scalar.
pub type Cx = num_complex::Complex<Scalar>;
/// Line fit over the working scalar.
pub type Fit = fit::LineFit<Scalar>;

pub use config::Calibration;
pub use error::{Error, Result};
pub use scalar::{Dd, Real};
