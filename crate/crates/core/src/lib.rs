//! Fiber weave effect analysis for PCB interconnects: a woven-glass laminate
//! model, a quasi-static 2D field solver, offset sweeps of delay and skew, and
//! the exceedance statistics built on them.

pub mod cache;
pub mod catalog;
pub mod fieldsolver;
pub mod lattice;
pub mod numfmt;
pub mod par;
pub mod report;
pub mod stats;
pub mod svg;
pub mod sweep;
pub mod validation;
