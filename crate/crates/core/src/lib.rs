#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! First Dirichlet eigenvalues of the mixed local-nonlocal operator
//! `-a Δ_p + b (-Δ_p)^s` on lattice domains, with exact discrete
//! polarization and Schwarz rearrangements.
//!
//! Modules, bottom-up:
//!
//! - [`geometry`]: lattices, domain masks, shapes, polarizers and set polarization.
//! - [`rearrange`]: grid functions, function polarization, rank-fill Schwarz
//!   symmetrization and greedy iterated polarization.
//! - [`energy`]: `L^p` norms, local p-Dirichlet energy, Gagliardo seminorm with
//!   exterior tail, Rayleigh quotient and its gradient.
//! - [`eigsolve`]: dense `p = 2` eigensolver and projected descent for general `p`.
//!
//! Data-parallel loops go through [`par`]; with the `parallel` feature off they
//! run sequentially and produce bit-identical results.

pub mod eigsolve;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod par;
pub mod rearrange;

pub use eigsolve::{solve, solve_descent, solve_p2, EigenResult, SolverOptions};
pub use energy::{EnergyBreakdown, LocalForm, OperatorParams};
pub use error::{EigsolveError, EnergyError, Error, GeometryError, RearrangeError};
pub use geometry::{DomainMask, Lattice, Point, Polarizer, ShapeSpec};
pub use rearrange::GridFunction;
