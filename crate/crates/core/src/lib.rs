pub mod certificate;
pub mod classify;
pub mod cli;
pub mod expr;
pub mod linalg;
pub mod problem;
pub mod report;
pub mod solver;
pub mod transform;
