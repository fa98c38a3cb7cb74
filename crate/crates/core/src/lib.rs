//! Proximity and integrality-gap machinery for simple second-order conic
//! integer programs.
//!
//! The crate is organized around five subsystems:
//!
//! - [`lattice`]: mixed-integer lattices, covering radii and closest-vector
//!   enumeration;
//! - [`quadric`]: representation and classification of quadratic sets
//!   (`‖Ax−b‖ ≤ cᵀx−d`, `xᵀMx−2βᵀx+γ ≤ 0`, `‖Qx−p‖ ≤ r`), branch
//!   separation, cone depth constants, ball shifts and inner ellipsoids;
//! - [`relax`]: closed-form continuous-relaxation solvers and the
//!   unimodular objective normalization;
//! - [`bounds`]: every proximity / integrality-gap bound formula, reported
//!   as a [`bounds::BoundReport`];
//! - [`oracle`]: an exact brute-force integer-programming oracle used to
//!   certify every bound at desk scale.
//!
//! All operations are pure functions over immutable values and safe to call
//! concurrently.

pub mod bounds;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod oracle;
pub mod quadric;
pub mod rational;
pub mod relax;

pub use error::ProxError;
pub use rational::Rat;
