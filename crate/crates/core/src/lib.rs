//! Polyhedral relaxations of the convex hull of bilinear functions over the
//! unit cube: inequality generators, an exact rational LP solver, envelope
//! oracles, interval-set certificates and the random-graph gap study.
//!
//! The numerical code is generic over [`Scalar`]; the aliases below fix the
//! exact rational instantiation used throughout the verification paths.

pub mod envelopes;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod inequalities;
pub mod lp;
pub mod lpfile;
pub mod qp;
pub mod scalar;
pub mod zuckerberg;

pub use error::{
    EnvelopeError, ExperimentError, GraphError, InequalityError, IntervalError, LpError, ParseError,
};
pub use scalar::{Rational, Scalar};

pub type Graph = graph::WeightedGraph<Rational>;
pub type Constraint = inequalities::LinearConstraint<Rational>;
pub type System = inequalities::ConstraintSystem<Rational>;
pub type Lp = lp::LpProblem<Rational>;
pub type LpSolution = lp::LpSolution<Rational>;
pub type Intervals = zuckerberg::IntervalSet<Rational>;
