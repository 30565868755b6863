//! `hodgeloc`: command-line access to weight filtrations, limiting mixed
//! Hodge structures, orbit loci and class enumeration.

pub mod args;
pub mod commands;
pub mod document;
pub mod error;
pub mod report;
