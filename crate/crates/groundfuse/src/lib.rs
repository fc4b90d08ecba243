//! File formats, command line, batch runs and the session service built on
//! `groundfuse-core`.

pub mod assets;
pub mod cli;
pub mod io;
pub mod parallel;
pub mod service;
pub mod session;
pub mod stats;
pub mod study;
