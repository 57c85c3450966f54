//! Strongly connected components, maximal end components and the
//! EC-collapsing quotient used by the learners and interval iteration.

mod mec;
mod quotient;
mod scc;

pub use mec::{mec_decompose, Mec, MecDecomposition};
pub use quotient::{collapse_mecs, quotient_bellman, CollapseReport, QuotientActions, QuotientView};
pub use scc::scc_decompose;
