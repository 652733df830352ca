//! File formats, run manifests, parallel trial execution and the `fcm`
//! command line around [`fcm_core`].

pub mod cli;
pub mod codec;
pub mod formats;
pub mod manifest;
pub mod runner;

pub use fcm_core;
