pub mod error;
pub mod fourier;
pub mod integrate;
pub mod mc;
pub mod model;
pub mod quad;
pub mod result;
pub mod series;
pub mod specfun;
pub mod tables;

pub use error::{Result, VgError};
pub use result::{Branch, Method, Payoff, PriceResult};
