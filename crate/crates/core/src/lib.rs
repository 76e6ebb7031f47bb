pub mod cli;
pub mod error;
pub mod evaluator;
pub mod hardrod;
pub mod hclimit;
pub mod integrate;
pub mod mayer;
pub mod point;
pub mod potential;
pub mod residuals;
