//! Numerical laboratory for graphical mean curvature flow and the heat
//! equation: self-shrinking tori, spiked and oscillating initial graphs,
//! barrier comparisons and stabilization diagnostics.

pub mod analysis;
pub mod grid;
pub mod shrinker;
pub mod solver;
pub mod barriers;
pub mod initial;
pub mod config;
pub mod experiments;
pub mod io;
