//! Simulation and stability analysis for delayed Cohen–Grossberg networks
//! with distributed (kernel) delays.

pub mod config;
pub mod criteria;
pub mod dde;
pub mod experiments;
pub mod expr;
pub mod memory;
pub mod model;
pub mod quadrature;
