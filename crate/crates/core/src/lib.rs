//! Hybrid dynamical inclusions `H = (C, F, D, G)`: simulation on hybrid time
//! domains, sampled reachable sets, closeness of hybrid arcs, and sampled
//! checkers for well-posedness and viability conditions.
//!
//! All semicontinuity and limit statements are probed at finite resolution.
//! Reports say "consistent with" or "inconsistent with", never more.

pub mod arc;
pub mod closeness;
pub mod definition;
pub mod cones;
pub mod exec;
pub mod expr;
pub mod fixtures;
pub mod geom;
pub mod hybrid;
pub mod maps;
pub mod reach;
pub mod report;
pub mod sets;
pub mod simulate;
pub mod wellposedness;
