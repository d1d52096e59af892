use crate::error::GeometryError;

/// World coordinates. One-dimensional lattices use the first component and
/// keep the second at zero.
pub type Point = [f64; 2];

/// Uniform grid over an axis-aligned box in one or two dimensions.
///
/// Nodes are stored in row-major order with the first axis fastest:
/// `index = i0 + extent[0] * i1`. Coordinates are always computed from the
/// integer index, never accumulated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    dim: usize,
    h: f64,
    extent: [usize; 2],
    origin: Point,
}

impl Lattice {
    pub fn new(dim: usize, h: f64, extent: [usize; 2], origin: Point) -> Result<Self, GeometryError> {
        if dim != 1 && dim != 2 {
            return Err(GeometryError::InvalidLattice(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(GeometryError::InvalidLattice(format!("spacing must be positive, got {h}")));
        }
        if extent[0] == 0 || extent[1] == 0 {
            return Err(GeometryError::InvalidLattice("extent must be at least 1 per axis".into()));
        }
        let (extent, origin) = if dim == 1 {
            if extent[1] != 1 {
                return Err(GeometryError::InvalidLattice("1-D lattice needs extent[1] == 1".into()));
            }
            ([extent[0], 1], [origin[0], 0.0])
        } else {
            (extent, origin)
        };
        Ok(Self { dim, h, extent, origin })
    }

    /// Nodes `-half..=half` on every axis, node `0` at the world origin.
    pub fn centered(dim: usize, h: f64, half: usize) -> Result<Self, GeometryError> {
        Self::centered_at(dim, h, 2 * half + 1, [0.0, 0.0])
    }

    /// A square (or 1-D) box of `n` nodes per axis whose geometric center is `center`.
    pub fn centered_at(dim: usize, h: f64, n: usize, center: Point) -> Result<Self, GeometryError> {
        let shift = h * (n as f64 - 1.0) / 2.0;
        let origin = [center[0] - shift, center[1] - shift];
        let extent = if dim == 1 { [n, 1] } else { [n, n] };
        Self::new(dim, h, extent, origin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn extent(&self) -> [usize; 2] {
        self.extent
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.extent[0] * self.extent[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^d`, the volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn index(&self, multi: [usize; 2]) -> usize {
        multi[0] + self.extent[0] * multi[1]
    }

    pub fn multi_index(&self, index: usize) -> [usize; 2] {
        [index % self.extent[0], index / self.extent[0]]
    }

    /// Index of a signed multi-index, or `None` outside the box.
    pub fn checked_index(&self, multi: [i64; 2]) -> Option<usize> {
        if multi[0] < 0 || multi[1] < 0 {
            return None;
        }
        let (a, b) = (multi[0] as usize, multi[1] as usize);
        (a < self.extent[0] && b < self.extent[1]).then(|| self.index([a, b]))
    }

    pub fn coord(&self, index: usize) -> Point {
        let [i, j] = self.multi_index(index);
        let x = self.origin[0] + self.h * i as f64;
        if self.dim == 1 {
            [x, 0.0]
        } else {
            [x, self.origin[1] + self.h * j as f64]
        }
    }

    /// First and last node coordinates.
    pub fn node_box(&self) -> (Point, Point) {
        let hi = [
            self.origin[0] + self.h * (self.extent[0] - 1) as f64,
            self.origin[1] + self.h * (self.extent[1] - 1) as f64,
        ];
        (self.origin, hi)
    }

    pub fn box_center(&self) -> Point {
        let (lo, hi) = self.node_box();
        [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0]
    }

    /// Lattice node closest to `p` (ties toward the lower index).
    pub fn nearest_node(&self, p: Point) -> usize {
        let mut multi = [0usize; 2];
        for k in 0..self.dim {
            let t = ((p[k] - self.origin[k]) / self.h).round();
            multi[k] = t.clamp(0.0, (self.extent[k] - 1) as f64) as usize;
        }
        self.index(multi)
    }

    /// Neighbor of `index` one step along `axis` in direction `forward`.
    pub fn neighbor(&self, index: usize, axis: usize, forward: bool) -> Option<usize> {
        let m = self.multi_index(index);
        let mut s = [m[0] as i64, m[1] as i64];
        s[axis] += if forward { 1 } else { -1 };
        self.checked_index(s)
    }

    /// The `2d` lattice neighbors; `None` marks a neighbor outside the box.
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        (0..self.dim).flat_map(move |axis| [false, true].into_iter().map(move |fw| self.neighbor(index, axis, fw)))
    }

    /// Number of node layers between `index` and the outside of the box (0 on the outer layer).
    pub fn boundary_layer(&self, index: usize) -> usize {
        let m = self.multi_index(index);
        (0..self.dim).map(|k| m[k].min(self.extent[k] - 1 - m[k])).min().unwrap_or(0)
    }

    pub fn is_boundary_node(&self, index: usize) -> bool {
        self.boundary_layer(index) == 0
    }

    /// Distance from node `index` to the boundary of the cell box (the node box
    /// grown by half a cell), computed from integers.
    pub fn distance_to_box_boundary(&self, index: usize) -> f64 {
        self.h * (self.boundary_layer(index) as f64 + 0.5)
    }

    /// Node indices sorted by distance from `center`, ties broken by index.
    ///
    /// When `center` sits on the lattice or half-lattice the keys are exact
    /// integers, so symmetric nodes tie exactly.
    pub fn nodes_by_distance(&self, center: Point) -> Vec<usize> {
        let mut q = [0.0f64; 2];
        for k in 0..self.dim {
            let t = 2.0 * (center[k] - self.origin[k]) / self.h;
            q[k] = if (t - t.round()).abs() < 1e-9 { t.round() } else { t };
        }
        let mut keyed: Vec<(f64, usize)> = (0..self.len())
            .map(|idx| {
                let m = self.multi_index(idx);
                let d: f64 = (0..self.dim).map(|k| (2.0 * m[k] as f64 - q[k]).powi(2)).sum();
                (d, idx)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, idx)| idx).collect()
    }
}
