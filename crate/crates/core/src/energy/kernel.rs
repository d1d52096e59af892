use super::OperatorParams;
use crate::geometry::Lattice;

/// Pair weights `h^{2d} |x_i - x_j|^{-(d+sp)}` indexed by absolute index
/// offset. Values depend only on the integer squared distance, so mirrored
/// pairs get bit-identical weights.
#[derive(Clone, Debug)]
pub struct KernelTable {
    stride: usize,
    weights: Vec<f64>,
}

impl KernelTable {
    pub fn new(lattice: &Lattice, s: f64, p: f64) -> Self {
        let d = lattice.dim() as f64;
        let [nx, ny] = lattice.extent();
        let scale = lattice.h().powf(d - s * p);
        let expo = -(d + s * p) / 2.0;
        let mut weights = vec![0.0; nx * ny];
        for b in 0..ny {
            for a in 0..nx {
                let r2 = (a * a + b * b) as f64;
                if r2 > 0.0 {
                    weights[a + nx * b] = scale * r2.powf(expo);
                }
            }
        }
        Self { stride: nx, weights }
    }

    #[inline]
    pub fn weight(&self, da: usize, db: usize) -> f64 {
        self.weights[da + self.stride * db]
    }

    #[inline]
    pub fn between(&self, a: [usize; 2], b: [usize; 2]) -> f64 {
        self.weight(a[0].abs_diff(b[0]), a[1].abs_diff(b[1]))
    }
}

/// Unit-sphere area `d ω_d`.
fn sphere_area(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        2.0 * std::f64::consts::PI
    }
}

/// `κ(x) = d ω_d ρ^{-ps} / (ps)`: kernel mass beyond distance `ρ(x)` from
/// `x`, where `ρ` is the distance to the boundary of the cell box. It bounds
/// the mass outside the box from above.
pub fn tail_kappa(lattice: &Lattice, index: usize, s: f64, p: f64) -> f64 {
    let rho = lattice.distance_to_box_boundary(index);
    sphere_area(lattice.dim()) * rho.powf(-p * s) / (p * s)
}

/// Coefficient of `|u_i|^p` contributed by the exterior tail: `2 h^d κ(x_i)`
/// (both orderings of the pair, one cell of volume).
pub fn tail_weight(lattice: &Lattice, index: usize, params: &OperatorParams) -> f64 {
    if !params.tail {
        return 0.0;
    }
    2.0 * lattice.cell_volume() * tail_kappa(lattice, index, params.s, params.p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        let l = Lattice::centered(1, 1.0, 2).unwrap();
        let k = KernelTable::new(&l, 0.5, 2.0);
        assert_eq!(k.weight(0, 0), 0.0);
        assert_eq!(k.weight(1, 0), 1.0);
        assert!((k.weight(2, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn kernel_scaling_with_h() {
        let l = Lattice::centered(2, 0.5, 3).unwrap();
        let k = KernelTable::new(&l, 0.5, 2.0);
        // h^4 / (h * sqrt(5))^3
        let expect = 0.5f64.powi(4) / (0.5 * 5f64.sqrt()).powi(3);
        assert!((k.weight(1, 2) - expect).abs() < 1e-15);
        assert_eq!(k.weight(1, 2), k.weight(2, 1));
    }

    #[test]
    fn tail_is_symmetric_on_box() {
        let l = Lattice::centered(2, 0.25, 5).unwrap();
        for i in 0..l.len() {
            let [a, b] = l.multi_index(i);
            let mirrored = [
                l.index([10 - a, b]),
                l.index([a, 10 - b]),
                l.index([b, a]),
                l.index([10 - b, 10 - a]),
            ];
            for j in mirrored {
                assert_eq!(tail_kappa(&l, i, 0.5, 2.0), tail_kappa(&l, j, 0.5, 2.0));
            }
        }
    }
}
