//! Grid functions and their rearrangements.

mod function;
mod polarize;
mod schwarz;

pub use function::GridFunction;
pub use polarize::{polarize_function, polarize_function_in_box};
pub use schwarz::{iterate_polarizations, schwarz_symmetrize, SchwarzOptions, SchwarzTrace};
