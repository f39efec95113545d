//! Exact certification of vanishing spectral invariants for radial
//! Hamiltonians on balls, and Poisson bracket bounds for ball covers.

pub mod calculus;
pub mod certifier;
pub mod config;
pub mod cover;
pub mod exact;
pub mod floer;
pub mod radial;
pub mod report;
pub mod run;
