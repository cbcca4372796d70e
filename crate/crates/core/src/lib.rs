//! Rigorous bounds on infinite-time averages of polynomial ODEs via
//! sum-of-squares relaxations, with an in-house SDP solver, exact rational
//! certificates and the Lorenz system as a worked case.

pub mod certify;
pub mod dynsim;
pub mod error;
pub mod lorenz;
pub mod pipeline;
pub mod polyalg;
pub mod ratmat;
pub mod sdpsolve;
pub mod sosform;

pub use error::{Error, Result};
pub use polyalg::{rat, Coeff, FPoly, Monomial, Poly, QPoly, Rational, VarSet};
