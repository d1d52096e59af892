//! Lattices, domain masks, shapes and polarizers.
//!
//! Polarizers are restricted to reflections that map lattice nodes onto
//! lattice nodes (axis normals at half-lattice offsets, diagonals through
//! nodes), which makes every set identity of polarization exact on the grid.

mod lattice;
mod mask;
mod polarizer;
mod shape;

pub use lattice::{Lattice, Point};
pub use mask::{ball_of_count, equal_measure_ball, mask_measure, random_connected_mask, DomainMask};
pub use polarizer::{polarize_mask, reflect_mask, reflect_point, witness_sets, LatticeReflection, Polarizer};
pub use shape::{build_mask, ShapeSpec};
