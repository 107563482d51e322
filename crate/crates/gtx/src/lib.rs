//! Text formats, grammar directories, command-line front-end and the Hello
//! World fixture suite for the `gtx-core` engine.

pub mod cli;
pub mod dsl;
pub mod grammar;
pub mod lts;
pub mod suite;
