//! Built-in simulators.

pub mod encounter;
pub mod walker;
