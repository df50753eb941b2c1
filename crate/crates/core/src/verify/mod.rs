//! Rigorous verification: rectangle subdivision, dominance chains and the
//! case analysis for the uniform-against-constant example.

mod chain;
mod e1;
mod report;
mod toy;

use thiserror::Error;

use crate::dist::DistError;

pub use chain::{dominance_chain, geom_half_bound, GeomCompound, LiftedBase};
pub use e1::{
    conv_tail_closed_form, conv_tail_iv, pareto_tail_iv, verify_e1, verify_e1_largex, verify_e1_largex_delta,
    verify_e1_with, E1Config,
};
pub use report::{Leaf, Status, VerificationReport, Witness};
pub use toy::{verify_toy, verify_toy_with, ToyConfig, TOY_LAMBDA};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}
