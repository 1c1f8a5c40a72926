//! Numerical laboratory for backward uniqueness of parabolic equations with
//! non-Lipschitz coefficients.
//!
//! The library tabulates Carleman weights built from a modulus of continuity,
//! checks Littlewood–Paley estimates on a periodic grid, mollifies
//! coefficients in time, and builds and verifies an explicit Pliś-type
//! counterexample for a modulus that fails the Osgood condition.

pub mod carleman;
pub mod dyadic;
pub mod modulus;
pub mod mollify;
pub mod pliss;
pub mod quad;
pub mod report;
pub mod smooth;
pub mod suite;

pub use modulus::{BuiltinKind, Modulus, ModulusError, OsgoodClass};
pub use report::{CheckRow, Relation, VerificationReport};
