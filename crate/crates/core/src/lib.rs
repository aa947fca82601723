pub mod agents;
pub mod engine;
pub mod game;
pub mod inference;
mod lossless;
pub mod pareto;
pub mod protocol;
pub mod scenarios;
pub mod solvers;
