//! A permissioned ledger for verified recruitment and HR records.
//!
//! Companies verify applicant claims with the authorities that issued them,
//! rank the applicants that pass, and commit signed employment contracts
//! and later HR events to a chain that every participant replicates. Blocks
//! are produced in turn by the permitted miners under a diversity rule.
//!
//! ```
//! use hrchain::simnet::{run, Scenario};
//!
//! let report = run(&Scenario::five_entities()).unwrap();
//! assert!(report.converged());
//! assert_eq!(report.nodes.len(), 5);
//! ```
//!
//! The guide in `book/` walks through each module.

pub mod consensus;
pub mod hrm;
pub mod ledger;
pub mod record;
pub mod recruit;
pub mod registry;
pub mod roster;
pub mod simnet;
pub mod text;

/// The guide's chapters, compiled so their listings run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ledger.md")]
    mod ledger {}
    #[doc = include_str!("../../../book/src/registry.md")]
    mod registry {}
    #[doc = include_str!("../../../book/src/consensus.md")]
    mod consensus {}
    #[doc = include_str!("../../../book/src/recruitment.md")]
    mod recruitment {}
    #[doc = include_str!("../../../book/src/hr-records.md")]
    mod hr_records {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
