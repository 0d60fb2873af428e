//! Acyclic directed mixed graphs: separation, projection, fixing, and exact
//! checkers for the Markov models they define over finite distributions.

pub mod checks;
pub mod corpus;
pub mod dist;
pub mod error;
pub mod fixing;
pub mod graph;
pub mod set;
pub mod sim;
pub mod transform;
pub mod walk;

pub use checks::{CheckReport, Model, Violation};
pub use dist::{AnyTable, JointTable, Kernel, Mode, Rational, Scalar, StateSpace, Witness};
pub use error::{Error, Result};
pub use fixing::{CondGraph, FixableSet};
pub use graph::{parse_graph, GraphClass, MixedGraph, TopologicalOrder};
pub use set::VertexSet;
pub use sim::{EquationSystem, Intervention, VerifyReport};
pub use transform::{CliqueScope, UndirectedGraph};
pub use walk::{Mark, SeparationQuery, Walk};
