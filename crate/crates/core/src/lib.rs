// negated float comparisons throughout are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bifurcation;
pub mod error;
pub mod fd;
pub mod ode;
pub mod radial;
pub mod rescale;
pub mod roots;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::ProblemParams;
