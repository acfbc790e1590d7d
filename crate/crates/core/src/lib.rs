//! Backward-Euler P1 finite elements for parabolic equations with play and
//! Preisach hysteresis, with an arc-smoothing Newton solver for the
//! piecewise-smooth systems that arise at every time step.

pub mod fem;
pub mod harness;
pub mod hysteresis;
pub mod piecewise;
pub mod quadrature;
pub mod solver;
pub mod stepping;

pub use piecewise::{Jet, PieceFamily, PiecewiseError, ScalarPiecewiseC2};
