//! Toy trace-dynamics engine: matrix-valued degrees of freedom,
//! trace polynomials and derivatives, Hamiltonian flows, the conserved
//! commutator charge, and the noncommutative Minkowski line element.

mod flow;
mod minkowski;
mod poly;

pub use flow::{adler_millard, hamilton_flow, FlowScheme};
pub use minkowski::{
    lorentz_boost, random_four_vector, random_hermitian, trace_line_element, Axis, MatrixFourVector,
};
pub use poly::{
    trace_derivative, trace_eval, Factor, MatrixDegree, Term, TracePolynomial, VarKind, VarRef,
};
