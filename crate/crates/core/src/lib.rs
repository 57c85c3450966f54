//! Partial-exploration analysis of Markov decision processes.
//!
//! The crate learns *ε-cores*: sets of states that a system leaves with
//! probability below ε under every strategy. Unbounded cores are learned by
//! sampling-guided Bellman back-propagation ([`learncore`]), step-bounded
//! cores by the same idea over a step-indexed bound store ([`boundedcore`]).
//! Every learned core is re-checked against exact engines in [`numerics`],
//! and [`analysis`] computes stability profiles and extrapolated bounds on a
//! core.
//!
//! ```
//! use mdpcores::learncore::{learn_core, Heuristic, LearnConfig};
//! use mdpcores::model::generators::build_fig3;
//!
//! let mdp = build_fig3(0.3).unwrap();
//! let core = learn_core(&mdp, 0.3, Heuristic::Weighted, 7, &LearnConfig::default(), None).unwrap();
//! assert!(core.verified_exit_upper < 0.3);
//! assert!(core.states.contains(0) && core.states.contains(2));
//! ```

pub mod analysis;
pub mod bench;
pub mod boundedcore;
pub mod graph;
pub mod learncore;
pub mod model;
pub mod numerics;
pub mod report;
mod stateset;

pub use model::{Action, Distribution, ExplicitMdp, ModelError};
pub use stateset::StateSet;
