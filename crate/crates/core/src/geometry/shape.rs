use super::lattice::{Lattice, Point};
use super::mask::DomainMask;
use crate::error::GeometryError;

/// Continuum shapes in world coordinates. Regions are open.
#[derive(Clone, Debug, PartialEq)]
pub enum ShapeSpec {
    Ball { center: Point, radius: f64 },
    /// `B_R(0) \ closed B_r(hole_center)`.
    Annulus { outer_radius: f64, inner_radius: f64, hole_center: Point },
    /// Open box between two corners.
    Rectangle { lo: Point, hi: Point },
    Union(Vec<ShapeSpec>),
    Difference(Box<ShapeSpec>, Box<ShapeSpec>),
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |s: String| Err(GeometryError::InvalidShape(s));
        match self {
            Self::Ball { radius, .. } if !(*radius > 0.0) => bad(format!("ball radius {radius} must be positive")),
            Self::Annulus { outer_radius, inner_radius, .. } if !(*inner_radius > 0.0 && inner_radius < outer_radius) => {
                bad(format!("annulus needs 0 < r < R, got r = {inner_radius}, R = {outer_radius}"))
            }
            Self::Rectangle { lo, hi } if !(lo[0] < hi[0] && lo[1] < hi[1]) => bad(format!("rectangle corners {lo:?} {hi:?} are not ordered")),
            Self::Union(parts) if parts.is_empty() => bad("empty union".into()),
            Self::Union(parts) => parts.iter().try_for_each(Self::validate),
            Self::Difference(a, b) => {
                a.validate()?;
                b.validate()
            }
            _ => Ok(()),
        }
    }

    /// Whether the hole of an annulus sits strictly inside the outer ball.
    pub fn hole_contained(&self) -> bool {
        match self {
            Self::Annulus { outer_radius, inner_radius, hole_center } => dist(*hole_center, [0.0, 0.0]) + inner_radius < *outer_radius,
            _ => true,
        }
    }

    /// Open-region membership. For 1-D lattices points have `x[1] == 0`.
    pub fn contains(&self, x: Point) -> bool {
        match self {
            Self::Ball { center, radius } => dist(x, *center) < *radius,
            Self::Annulus { outer_radius, inner_radius, hole_center } => {
                dist(x, [0.0, 0.0]) < *outer_radius && dist(x, *hole_center) > *inner_radius
            }
            Self::Rectangle { lo, hi } => lo[0] < x[0] && x[0] < hi[0] && lo[1] < x[1] && x[1] < hi[1],
            Self::Union(parts) => parts.iter().any(|p| p.contains(x)),
            Self::Difference(a, b) => a.contains(x) && !b.contains(x),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Self::Ball { center, radius } => ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius]),
            Self::Annulus { outer_radius: r, .. } => ([-r, -r], [*r, *r]),
            Self::Rectangle { lo, hi } => (*lo, *hi),
            Self::Union(parts) => parts.iter().map(Self::bounding_box).fold(
                ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                |(lo, hi), (a, b)| ([lo[0].min(a[0]), lo[1].min(a[1])], [hi[0].max(b[0]), hi[1].max(b[1])]),
            ),
            Self::Difference(a, _) => a.bounding_box(),
        }
    }

    /// Bounding-box diagonal, an upper bound on the diameter.
    pub fn diameter_bound(&self, dim: usize) -> f64 {
        let (lo, hi) = self.bounding_box();
        (0..dim).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
    }
}

/// Cell-center classification: node `i` is inside iff its coordinate lies in
/// the open shape. The shape's bounding box must fit in the node box.
pub fn build_mask(lattice: &Lattice, shape: &ShapeSpec) -> Result<DomainMask, GeometryError> {
    shape.validate()?;
    let (lo, hi) = shape.bounding_box();
    let (blo, bhi) = lattice.node_box();
    let eps = 1e-12 * lattice.h();
    for k in 0..lattice.dim() {
        if lo[k] < blo[k] - eps || hi[k] > bhi[k] + eps {
            return Err(GeometryError::ShapeOutsideLattice { lo, hi });
        }
    }
    Ok(DomainMask::from_fn(*lattice, |i| shape.contains(lattice.coord(i))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_ball() {
        let l = Lattice::centered(1, 1.0, 2).unwrap();
        let m = build_mask(&l, &ShapeSpec::Ball { center: [0.0, 0.0], radius: 1.5 }).unwrap();
        let xs: Vec<f64> = m.indices().iter().map(|&i| l.coord(i)[0]).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn tiny_ball_is_one_node() {
        let l = Lattice::centered(2, 1.0, 2).unwrap();
        let m = build_mask(&l, &ShapeSpec::Ball { center: [0.0, 0.0], radius: 0.4 }).unwrap();
        assert_eq!(m.indices(), vec![l.index([2, 2])]);
    }

    #[test]
    fn annulus_nodes_satisfy_definition() {
        let l = Lattice::centered(2, 0.1, 12).unwrap();
        let m = build_mask(&l, &ShapeSpec::Annulus { outer_radius: 1.0, inner_radius: 0.3, hole_center: [0.0, 0.0] }).unwrap();
        assert!(m.count() > 0);
        for i in m.indices() {
            let x = l.coord(i);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!(0.3 < r && r < 1.0);
        }
    }

    #[test]
    fn shape_outside_box_is_an_error() {
        let l = Lattice::centered(2, 0.5, 2).unwrap();
        let err = build_mask(&l, &ShapeSpec::Ball { center: [0.0, 0.0], radius: 1.5 });
        assert!(matches!(err, Err(GeometryError::ShapeOutsideLattice { .. })));
    }

    #[test]
    fn invalid_shapes() {
        assert!(ShapeSpec::Ball { center: [0.0, 0.0], radius: 0.0 }.validate().is_err());
        assert!(ShapeSpec::Annulus { outer_radius: 1.0, inner_radius: 1.0, hole_center: [0.0, 0.0] }.validate().is_err());
        assert!(ShapeSpec::Rectangle { lo: [1.0, 0.0], hi: [0.0, 1.0] }.validate().is_err());
        assert!(!ShapeSpec::Annulus { outer_radius: 1.0, inner_radius: 0.3, hole_center: [0.8, 0.0] }.hole_contained());
    }

    #[test]
    fn union_and_difference() {
        let a = ShapeSpec::Rectangle { lo: [-1.0, -1.0], hi: [1.0, 1.0] };
        let b = ShapeSpec::Ball { center: [0.0, 0.0], radius: 0.5 };
        let d = ShapeSpec::Difference(Box::new(a.clone()), Box::new(b.clone()));
        assert!(d.contains([0.8, 0.0]) && !d.contains([0.1, 0.0]));
        let u = ShapeSpec::Union(vec![b, ShapeSpec::Ball { center: [2.0, 0.0], radius: 0.5 }]);
        assert!(u.contains([2.1, 0.0]));
        assert_eq!(u.bounding_box(), ([-0.5, -0.5], [2.5, 0.5]));
    }
}
