//! Exact operator algebra for the Dirac-Coulomb hidden symmetry, with an
//! independent finite-difference oracle and a radial spectrum solver.

pub mod clifford;
pub mod coeff;
pub mod error;
pub mod exec;
pub mod expr;
pub mod opalg;
pub mod oracle;
pub mod parse;
pub mod radial;
