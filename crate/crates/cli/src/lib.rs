//! Command-line front end: scenario files, queries and table rendering.

pub mod app;
pub mod query;
pub mod render;
pub mod scenario;
