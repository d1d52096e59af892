use std::cmp::Ordering;

use super::function::GridFunction;
use crate::error::RearrangeError;
use crate::geometry::{polarize_mask, Polarizer};

/// `P_H u`: `max(u, u∘σ_H)` on `H`, `min(u, u∘σ_H)` off its closure, `u` on `∂H`.
///
/// The lattice box must be σ_H-symmetric and `u` nonnegative. The result is
/// supported in `P_H(supp u)`.
pub fn polarize_function(u: &GridFunction, h: &Polarizer) -> Result<GridFunction, RearrangeError> {
    polarize(u, h, true)
}

/// Like [`polarize_function`], but only requires the reflected support mask
/// to stay inside the box; nodes whose mirror falls off the box pair with zero.
pub fn polarize_function_in_box(u: &GridFunction, h: &Polarizer) -> Result<GridFunction, RearrangeError> {
    polarize(u, h, false)
}

fn polarize(u: &GridFunction, h: &Polarizer, strict: bool) -> Result<GridFunction, RearrangeError> {
    let r = h.on_lattice(u.lattice())?;
    if strict && !r.is_box_symmetric() {
        return Err(RearrangeError::BoxNotSymmetric);
    }
    if let Some(i) = u.first_negative() {
        return Err(RearrangeError::NegativeValue(i));
    }
    // also rejects supports whose reflection leaves the box
    let mask = polarize_mask(u.mask(), h)?;
    let vals = u.values();
    let values = (0..vals.len())
        .map(|i| {
            let own = vals[i];
            let mirror = r.reflect(i).map(|j| vals[j]).unwrap_or(0.0);
            match r.side(i) {
                Ordering::Less => own.max(mirror),
                Ordering::Equal => own,
                Ordering::Greater => own.min(mirror),
            }
        })
        .collect();
    GridFunction::new(mask, values)
}
