//! Slow, obvious reference implementations for hrchain's tests.
//!
//! Nothing here depends on `hrchain`. Each module restates one rule over
//! plain data so the tests can compare the real code against it.

pub mod eligibility;
pub mod merkle;
pub mod ranking;
pub mod sha256;
