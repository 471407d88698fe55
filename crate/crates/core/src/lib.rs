pub mod bipmodel;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod extract;
pub mod gatefid;
pub mod gates;
pub mod heuristic;
pub mod hwgraph;
pub mod lexopt;
pub mod qvbench;
pub mod sim;
pub mod solver;
