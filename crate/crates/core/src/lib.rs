//! Numerical workbench for Orlicz spaces over finite measure spaces.
//!
//! * [`nfunction`]: N-function catalog, inverses, conjugates, growth probes.
//! * [`measure`]: finite measure spaces and grid functions.
//! * [`modular`]: the modular, Luxemburg and Orlicz norms and their relations.
//! * [`estimates`]: minorant inequalities and modular lower bounds in norm.
//! * [`hammerstein`]: discretized Hammerstein equations `x = S f(x) + g`.
//! * [`cli`]: the batch command-line surface.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimates;
pub mod hammerstein;
pub mod measure;
pub mod modular;
pub mod nfunction;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use measure::{GridFunction, MeasureSpace};
pub use nfunction::{NFunction, NFunctionSpec};
