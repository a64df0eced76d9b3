//! Library surface of the batch front-end, exposed so integration tests can
//! drive the commands directly.

pub mod commands;
pub mod config;
pub mod designs;
pub mod report;
