//! Lattice sizing and mask construction for configured domains.
//!
//! Every lattice built here is aligned with the global grid `hℤ^d`, so the
//! same shape produces the same node pattern whatever box it sits in.

use mixed_eig_core::geometry::{build_mask, random_connected_mask, DomainMask, Lattice, Point, Polarizer};
use mixed_eig_core::ShapeSpec;

use crate::config::{DomainSpec, LatticeSpec};
use crate::error::{HarnessError, Result};

const EPS: f64 = 1e-9;

/// Axis-aligned bounding box of a domain.
pub fn bounding_box(domain: &DomainSpec) -> (Point, Point) {
    match domain {
        DomainSpec::Shape(s) => s.bounding_box(),
        DomainSpec::Blob { center, radius, .. } => ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius]),
    }
}

/// Diameter of balls and annuli, bounding-box diagonal otherwise.
pub fn diameter(domain: &DomainSpec, dim: usize) -> f64 {
    match domain {
        DomainSpec::Shape(ShapeSpec::Ball { radius, .. }) => 2.0 * radius,
        DomainSpec::Shape(ShapeSpec::Annulus { outer_radius, .. }) => 2.0 * outer_radius,
        _ => {
            let (lo, hi) = bounding_box(domain);
            (0..dim).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
        }
    }
}

/// Configured padding, or `max(diam, 8h)`.
pub fn padding(spec: &LatticeSpec, diam: f64) -> f64 {
    spec.padding.unwrap_or_else(|| diam.max(8.0 * spec.h))
}

/// Box covering `domain` with padding, see [`centered_lattice`].
pub fn lattice_for(spec: &LatticeSpec, domain: &DomainSpec) -> Result<Lattice> {
    let (lo, hi) = bounding_box(domain);
    centered_lattice(spec, lo, hi, diameter(domain, spec.dim))
}

/// Box `-N..=N` nodes per axis around the origin covering `lo..hi` plus padding.
pub fn centered_lattice(spec: &LatticeSpec, lo: Point, hi: Point, diam: f64) -> Result<Lattice> {
    let pad = padding(spec, diam);
    let reach = (0..spec.dim).map(|k| lo[k].abs().max(hi[k].abs())).fold(0.0, f64::max) + pad;
    let half = (reach / spec.h - EPS).ceil().max(1.0) as usize;
    Ok(Lattice::centered(spec.dim, spec.h, half)?)
}

/// Smallest grid-aligned box that is mapped onto itself by `σ_H` and covers
/// `lo..hi`, its mirror image, and the padding.
///
/// The box center lies on `∂H` at `a·n`. For diagonal polarizers the box is
/// square.
pub fn symmetric_lattice(spec: &LatticeSpec, pol: &Polarizer, domain: &DomainSpec) -> Result<Lattice> {
    let (lo, hi) = bounding_box(domain);
    let h = spec.h;
    let n = pol.normal();
    let c = [pol.offset() * n[0], pol.offset() * n[1]];
    // box center in half-cells; odd means the center sits between nodes
    let mut k = [0i64; 2];
    for a in 0..spec.dim {
        let t = 2.0 * c[a] / h;
        if (t - t.round()).abs() > 1e-6 {
            return Err(HarnessError::config("polarizer.list", format!("{pol} is not compatible with lattice.h = {h}")));
        }
        k[a] = t.round() as i64;
    }
    let pad = padding(spec, diameter(domain, spec.dim));
    let mut corners = vec![];
    for x in [lo[0], hi[0]] {
        for y in [lo[1], hi[1]] {
            corners.push([x, y]);
            corners.push(pol.reflect_point([x, y]));
        }
    }
    let mut j = [0i64; 2];
    for a in 0..spec.dim {
        let center = k[a] as f64 * h / 2.0;
        let w = corners.iter().map(|p| (p[a] - center).abs()).fold(0.0, f64::max) + pad;
        j[a] = (2.0 * w / h - EPS).ceil() as i64;
        if (j[a] - k[a]).rem_euclid(2) == 1 {
            j[a] += 1;
        }
    }
    if pol.is_diagonal() {
        let m = j[0].max(j[1]);
        j = [m, m];
    }
    let extent = if spec.dim == 1 { [j[0] as usize + 1, 1] } else { [j[0] as usize + 1, j[1] as usize + 1] };
    let origin = [((k[0] - j[0]) / 2) as f64 * h, ((k[1] - j[1]) / 2) as f64 * h];
    let lattice = Lattice::new(spec.dim, h, extent, origin)?;
    if !pol.is_box_symmetric(&lattice) {
        return Err(HarnessError::config("polarizer.list", format!("{pol} admits no symmetric box on this lattice")));
    }
    Ok(lattice)
}

/// Mask of `domain` on `lattice`.
pub fn build_domain(lattice: &Lattice, domain: &DomainSpec) -> Result<DomainMask> {
    match domain {
        DomainSpec::Shape(s) => Ok(build_mask(lattice, s)?),
        DomainSpec::Blob { cells, center, radius, seed } => {
            let h = lattice.h();
            let snapped = [(center[0] / h).round() * h, (center[1] / h).round() * h];
            let half = (radius / h - EPS).ceil() as usize;
            // grow on a private box so the blob stays within `radius` of its center
            let local = Lattice::centered_at(lattice.dim(), h, 2 * half + 1, snapped)?;
            let blob = random_connected_mask(local, *cells, snapped, *seed)?;
            let mut out = DomainMask::empty(*lattice);
            for i in blob.indices() {
                let x = local.coord(i);
                let j = lattice.nearest_node(x);
                let y = lattice.coord(j);
                if (x[0] - y[0]).abs() > h / 4.0 || (x[1] - y[1]).abs() > h / 4.0 {
                    return Err(HarnessError::config("shape.radius", "blob does not fit in the lattice box"));
                }
                out.set(j, true);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> LatticeSpec {
        LatticeSpec { dim: 2, h: 0.125, padding: Some(0.5) }
    }

    #[test]
    fn symmetric_boxes_for_all_directions() {
        let dirs = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]];
        for dir in dirs {
            for k in -3..=3 {
                let norm = if dir[0] != 0 && dir[1] != 0 { std::f64::consts::SQRT_2 } else { 2.0 };
                let pol = Polarizer::new(dir, k as f64 * 0.125 / norm).unwrap();
                let rect = DomainSpec::Shape(ShapeSpec::Rectangle { lo: [-1.0, -0.5], hi: [1.0, 0.5] });
                let l = symmetric_lattice(&spec(), &pol, &rect).unwrap();
                assert!(pol.is_box_symmetric(&l), "{pol}");
                // grid aligned
                let o = l.origin();
                assert!((o[0] / 0.125 - (o[0] / 0.125).round()).abs() < 1e-12);
                let m = build_domain(&l, &rect).unwrap();
                assert!(mixed_eig_core::geometry::reflect_mask(&m, &pol).is_ok());
            }
        }
    }

    #[test]
    fn incompatible_polarizer_is_a_config_error() {
        let pol = Polarizer::axis(0, true, 0.1);
        let ball = DomainSpec::Shape(ShapeSpec::Ball { center: [0.0; 2], radius: 1.0 });
        assert!(matches!(symmetric_lattice(&spec(), &pol, &ball), Err(HarnessError::Config { .. })));
    }

    #[test]
    fn blob_is_connected_and_transferred() {
        let l = centered_lattice(&spec(), [-1.0; 2], [1.0; 2], 2.0).unwrap();
        let blob = DomainSpec::Blob { cells: 40, center: [0.3, -0.2], radius: 1.0, seed: 3 };
        let m = build_domain(&l, &blob).unwrap();
        assert_eq!(m.count(), 40);
        assert!(m.is_connected());
    }

    #[test]
    fn default_padding() {
        let s = LatticeSpec { padding: None, ..spec() };
        assert_eq!(padding(&s, 2.0), 2.0);
        assert_eq!(padding(&s, 0.5), 1.0);
        let disk = DomainSpec::Shape(ShapeSpec::Ball { center: [0.0; 2], radius: 1.0 });
        assert_eq!(lattice_for(&s, &disk).unwrap().extent()[0], 2 * 24 + 1);
    }
}
