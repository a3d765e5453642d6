//! Config-driven experiment pipeline for asynchronous DGD / DGD-ATC:
//! configuration, file formats, and the run/verify/sweep/replay commands
//! behind the `asyncdgd` binary.

pub mod commands;
pub mod config;
pub mod formats;
pub mod rng;
