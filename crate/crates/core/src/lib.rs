//! Two-colour interval coalescence on the line: closures, distributions,
//! Monte Carlo estimation and rigorous verification of dominance and
//! renormalisation arguments.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod exec;
pub mod interval;
pub mod json;
pub mod lbound;
pub mod montecarlo;
pub mod renorm;
pub mod rigor;
pub mod verify;

pub use dist::{DistError, DistSpec, TailMethod, TailValue};
pub use exec::Exec;
pub use interval::{ColoredInterval, Colour, GoodnessReport, IntervalError, RecolourTrace};
