//! Upper bounds on long-time averages of polynomial quantities along
//! trajectories of polynomial ODEs.
//!
//! For `dx/dt = f(x)` and a quantity `Φ(x)`, any differentiable `V` gives the
//! pointwise bound `Φ̄ ≤ max (Φ + f·∇V)`, because `f·∇V` averages to zero along
//! bounded trajectories. Requiring `U − Φ − f·∇V` to be a sum of squares turns
//! the search for the best `(U, V)` into a semidefinite program, which this
//! crate assembles ([`sos`]) and solves ([`sdp`]). Supporting modules integrate
//! trajectories and converge periodic orbits ([`dynamics`]) and measure how
//! near-optimal trajectories concentrate in sublevel sets of the residual
//! ([`certify`]).
//!
//! The crate is `no_std` (it needs `alloc`); file formats and the CLI live in
//! the `ergobound` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod certify;
pub mod dynamics;
pub mod error;
pub mod poly;
pub mod sdp;
pub mod sos;
pub mod system;

pub use error::{CertifyError, DynamicsError, PolyError, SdpError, SosError};
pub use poly::{monomial_basis, Monomial, Polynomial};
pub use system::PolySystem;
