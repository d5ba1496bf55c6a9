//! File formats, run manifests and the `sbm` command-line driver on top of
//! [`sbm_core`].

pub mod cli;
pub mod formats;
pub mod manifest;
