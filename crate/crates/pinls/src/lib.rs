pub mod special;
pub mod grid;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod evolution;
pub mod fractional;
pub mod operator;
