//! Numerical laboratory for the Vlasov-Poisson system coupled to the
//! isotropic Landau collision operator
//!
//! ```text
//!   d_t f + v . grad_x f + E_f . grad_v f = Q(f, f),
//!   Q(f, f) = (-Lap_v)^{-1} f * Lap_v f + f^2,
//!   E_f(x)  = -+ x / (4 pi |x|^3) *_x rho_f,
//! ```
//!
//! with the minus sign for gravitational attraction and the plus sign for
//! electrostatic repulsion. The crate provides
//!
//! * cell-centered phase-space grids and radial grids ([`grid`]),
//! * free-space Newtonian potential solvers, spectral and conservative
//!   ([`poisson`]),
//! * the collision operator and positivity-aware collision steppers
//!   ([`collision`]),
//! * conservative semi-Lagrangian transport ([`transport`]) and the split
//!   time integrator ([`sim`]),
//! * moment, energy, entropy, and virial diagnostics ([`diagnostics`]),
//! * the localized linearized scheme and its Picard iteration ([`linear`]),
//! * the cubic virial bound, the contraction-map fixed-point analysis, and
//!   the guaranteed-existence-time calculus ([`criterion`]),
//! * binary snapshots ([`snapshot`]) and flat-file run configuration
//!   ([`config`]).

pub mod collision;
pub mod config;
pub mod criterion;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod linear;
pub mod poisson;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod snapshot;
pub mod transport;
pub mod weights;

pub use error::{Result, VpilError};
pub use fields::{InteractionSign, PhaseField, RadialField, ScalarField3, VectorField3};
pub use grid::{Grid3, PhaseGrid, RadialGrid, WeightParams};
