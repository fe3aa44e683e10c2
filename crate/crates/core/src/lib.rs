//! Deletion problems for dyadic-list linear equations over `Z/2^d`, solved by
//! lifting to `GF(2)`-gain graphs and randomized cycle covering.

pub mod covering;
pub mod error;
pub mod gain_graph;
pub mod gf2;
pub mod io;
pub mod lifting;
pub mod oracles;
pub mod solver;

pub use error::{Error, Result};
pub use io::{generate_planted, parse_instance, write_instance, GenParams, ResultRecord};
pub use lifting::{Constraint, DyadicList, Instance, Relation};
pub use solver::{solve, Answer, DeletionSet, Mode, SolveReport, SolverConfig};
