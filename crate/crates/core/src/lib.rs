//! Hierarchical function nets, views over them, feature diagrams and the
//! derivation of per-configuration variant views.

pub mod cli;
pub mod diagnostics;
pub mod dot;
pub mod dsl;
pub mod elaborate;
pub mod features;
pub mod model;
pub mod net_check;
pub mod report;
pub mod variants;
pub mod view;
