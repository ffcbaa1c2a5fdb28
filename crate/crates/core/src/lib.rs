//! Relative stability analysis of closed-loop SISO dead-time systems
//! `(1 + G(s) e^{-hs})^{-1}` with respect to a vertical boundary
//! `Re(s) = sigma0 <= 0`.
//!
//! The pipeline:
//!
//! - [`plant`]: the open-loop plant in pole-zero-gain form;
//! - [`boundary`]: the magnitude/phase functions on the boundary and the
//!   frequency intervals on which crossing roots have nonnegative delay and
//!   a fixed crossing direction;
//! - [`delays`]: critical delays in increasing order, root counts per delay
//!   interval and stable delay intervals;
//! - [`oracle`]: independent argument-principle counts and Newton root
//!   tracking used for verification;
//! - [`cli`]: the `delaymargin` command-line front end.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod cli;
pub mod delays;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod plant;
pub mod poly;

pub use boundary::{BoundaryFunctions, BoundaryInterval, IntervalSet};
pub use delays::{AllDelaysVerdict, CrossingEvent, DelayAnalysis, DelayIntervalReport, VerdictFlag};
pub use error::{Error, Result};
pub use plant::{BoundaryConfig, PoleZeroGain};
pub use poly::RealPolynomial;
