//! Edgeworth corrector polynomials for normalized sums of independent,
//! non-identically distributed random vectors, together with the exact and
//! Monte Carlo machinery used to check them.

pub mod corrector;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod hermite;
pub mod kernels;
pub mod moments;
pub mod multiindex;
pub mod poly;
pub mod quadrature;
pub mod sampling;

pub use corrector::{corrector, CorrectorPolynomial, DiffOp, HermiteSeries};
pub use error::{Error, Result};
pub use functions::TestFunction;
pub use multiindex::MultiIndex;
pub use moments::{ComponentDistribution, ModelSpec, Summand};
pub use poly::Polynomial;
