use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::lattice::{Lattice, Point};
use super::mask::DomainMask;
use crate::error::GeometryError;

const COMPAT_TOL: f64 = 1e-9;

/// Open halfspace `H = {x : x·n < a}` with `n` one of the eight axis or
/// diagonal unit directions, stored as an integer direction `dir`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polarizer {
    dir: [i8; 2],
    offset: f64,
}

impl Polarizer {
    /// `dir` must have entries in `{-1, 0, 1}` and not be zero.
    pub fn new(dir: [i8; 2], offset: f64) -> Result<Self, GeometryError> {
        if dir.iter().any(|d| !(-1..=1).contains(d)) || dir == [0, 0] {
            return Err(GeometryError::IncompatiblePolarizer(format!("unsupported direction {dir:?}")));
        }
        if !offset.is_finite() {
            return Err(GeometryError::IncompatiblePolarizer("offset must be finite".into()));
        }
        Ok(Self { dir, offset })
    }

    /// `H = {x_axis < a}` (or `{-x_axis < a}` when `positive` is false).
    pub fn axis(axis: usize, positive: bool, offset: f64) -> Self {
        let s = if positive { 1 } else { -1 };
        let mut dir = [0i8; 2];
        dir[axis] = s;
        Self { dir, offset }
    }

    /// Normal `(s0 e0 + s1 e1)/√2`.
    pub fn diagonal(s0: i8, s1: i8, offset: f64) -> Self {
        Self { dir: [s0.signum(), s1.signum()], offset }
    }

    pub fn dir(&self) -> [i8; 2] {
        self.dir
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_diagonal(&self) -> bool {
        self.dir[0] != 0 && self.dir[1] != 0
    }

    fn dir_norm(&self) -> f64 {
        if self.is_diagonal() {
            std::f64::consts::SQRT_2
        } else {
            1.0
        }
    }

    pub fn normal(&self) -> Point {
        let n = self.dir_norm();
        [self.dir[0] as f64 / n, self.dir[1] as f64 / n]
    }

    /// `x ∈ H`.
    pub fn contains(&self, x: Point) -> bool {
        let n = self.normal();
        x[0] * n[0] + x[1] * n[1] < self.offset
    }

    /// `σ_H(x) = x - 2(x·n - a) n`.
    pub fn reflect_point(&self, x: Point) -> Point {
        let n = self.normal();
        let t = 2.0 * (x[0] * n[0] + x[1] * n[1] - self.offset);
        [x[0] - t * n[0], x[1] - t * n[1]]
    }

    /// Resolves the reflection into exact integer index arithmetic.
    pub fn on_lattice(&self, lattice: &Lattice) -> Result<LatticeReflection, GeometryError> {
        if lattice.dim() == 1 && self.dir[1] != 0 {
            return Err(GeometryError::IncompatiblePolarizer("1-D lattices only admit axis-0 polarizers".into()));
        }
        let weight: i64 = if self.is_diagonal() { 1 } else { 2 };
        let o = lattice.origin();
        let dot_o = self.dir[0] as f64 * o[0] + self.dir[1] as f64 * o[1];
        let m = weight as f64 * (self.offset * self.dir_norm() - dot_o) / lattice.h();
        let rounded = m.round();
        if (m - rounded).abs() > COMPAT_TOL * m.abs().max(1.0) {
            return Err(GeometryError::IncompatiblePolarizer(format!(
                "reflection of {self} does not map lattice nodes onto lattice nodes"
            )));
        }
        Ok(LatticeReflection {
            dir: [self.dir[0] as i64, self.dir[1] as i64],
            weight,
            level: rounded as i64,
            lattice: *lattice,
        })
    }

    /// Whether `σ_H` maps the lattice box onto itself.
    pub fn is_box_symmetric(&self, lattice: &Lattice) -> bool {
        self.on_lattice(lattice).map(|r| r.is_box_symmetric()).unwrap_or(false)
    }

    /// Polarizer through `point` with this direction.
    pub fn through(dir: [i8; 2], point: Point) -> Result<Self, GeometryError> {
        let probe = Self::new(dir, 0.0)?;
        let n = probe.normal();
        Self::new(dir, point[0] * n[0] + point[1] * n[1])
    }
}

impl fmt::Display for Polarizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})@{}", self.dir[0], self.dir[1], self.offset)
    }
}

impl FromStr for Polarizer {
    type Err = GeometryError;

    /// Parses `(d0,d1)@a`, e.g. `(1,0)@0.5` or `(1,-1)@0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeometryError::Parse(format!("polarizer {s:?}: expected (d0,d1)@offset"));
        let (dir, off) = s.trim().split_once('@').ok_or_else(bad)?;
        let dir = dir.trim().strip_prefix('(').and_then(|d| d.strip_suffix(')')).ok_or_else(bad)?;
        let (a, b) = dir.split_once(',').ok_or_else(bad)?;
        let a: i8 = a.trim().parse().map_err(|_| bad())?;
        let b: i8 = b.trim().parse().map_err(|_| bad())?;
        let off: f64 = off.trim().parse().map_err(|_| bad())?;
        Self::new([a, b], off)
    }
}

/// A polarizer resolved against a lattice. With `L(i) = weight · (dir·i)`:
/// a node is in `H` iff `L(i) < level`, on `∂H` iff equal, and
/// `σ_H(i) = i - (L(i) - level)·dir`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeReflection {
    dir: [i64; 2],
    weight: i64,
    level: i64,
    lattice: Lattice,
}

impl LatticeReflection {
    fn form(&self, m: [i64; 2]) -> i64 {
        self.weight * (self.dir[0] * m[0] + self.dir[1] * m[1])
    }

    fn signed(&self, index: usize) -> [i64; 2] {
        let m = self.lattice.multi_index(index);
        [m[0] as i64, m[1] as i64]
    }

    /// `Less`: inside `H`; `Equal`: on `∂H`; `Greater`: outside the closure.
    pub fn side(&self, index: usize) -> Ordering {
        self.form(self.signed(index)).cmp(&self.level)
    }

    pub fn reflect_multi(&self, m: [i64; 2]) -> [i64; 2] {
        let t = self.form(m) - self.level;
        [m[0] - t * self.dir[0], m[1] - t * self.dir[1]]
    }

    /// Index of `σ_H(node)`, or `None` if the image lies outside the box.
    pub fn reflect(&self, index: usize) -> Option<usize> {
        self.lattice.checked_index(self.reflect_multi(self.signed(index)))
    }

    pub fn is_box_symmetric(&self) -> bool {
        let [nx, ny] = self.lattice.extent();
        let (nx, ny) = (nx as i64 - 1, ny as i64 - 1);
        let corners = [[0, 0], [nx, 0], [0, ny], [nx, ny]];
        corners.iter().all(|&c| {
            let r = self.reflect_multi(c);
            corners.contains(&r)
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Signed distance level of `center` in the integer form; used to keep
    /// a point inside the closed halfspace.
    pub fn form_at_point(&self, p: Point) -> f64 {
        let o = self.lattice.origin();
        let h = self.lattice.h();
        let q = [(p[0] - o[0]) / h, (p[1] - o[1]) / h];
        self.weight as f64 * (self.dir[0] as f64 * q[0] + self.dir[1] as f64 * q[1])
    }
}

/// `σ_H(x)` for a single point.
pub fn reflect_point(p: Point, h: &Polarizer) -> Point {
    h.reflect_point(p)
}

fn reflection_for(m: &DomainMask, h: &Polarizer) -> Result<LatticeReflection, GeometryError> {
    let r = h.on_lattice(m.lattice())?;
    for i in m.indices() {
        if r.reflect(i).is_none() {
            return Err(GeometryError::ReflectionEscapesBox);
        }
    }
    Ok(r)
}

/// `σ_H(Ω)`.
pub fn reflect_mask(m: &DomainMask, h: &Polarizer) -> Result<DomainMask, GeometryError> {
    let r = reflection_for(m, h)?;
    let mut out = DomainMask::empty(*m.lattice());
    for i in m.indices() {
        // checked by reflection_for
        out.set(r.reflect(i).expect("image in box"), true);
    }
    Ok(out)
}

/// `P_H(Ω) = [(Ω ∪ σ_HΩ) ∩ H] ∪ [Ω ∩ σ_HΩ]`, node by node. Nodes on `∂H`
/// keep their membership.
pub fn polarize_mask(m: &DomainMask, h: &Polarizer) -> Result<DomainMask, GeometryError> {
    let r = reflection_for(m, h)?;
    let mirrored = |i: usize| r.reflect(i).map(|j| m.contains(j)).unwrap_or(false);
    Ok(DomainMask::from_fn(*m.lattice(), |i| match r.side(i) {
        Ordering::Less => m.contains(i) || mirrored(i),
        Ordering::Equal => m.contains(i),
        Ordering::Greater => m.contains(i) && mirrored(i),
    }))
}

/// `A_H = σ_HΩ ∩ Ω^c ∩ H` and `B_H = Ω ∩ σ_H(Ω^c) ∩ H`.
pub fn witness_sets(m: &DomainMask, h: &Polarizer) -> Result<(DomainMask, DomainMask), GeometryError> {
    let r = reflection_for(m, h)?;
    let lattice = *m.lattice();
    let mirrored = |i: usize| r.reflect(i).map(|j| m.contains(j)).unwrap_or(false);
    let in_h = |i: usize| r.side(i) == Ordering::Less;
    let a = DomainMask::from_fn(lattice, |i| in_h(i) && !m.contains(i) && mirrored(i));
    let b = DomainMask::from_fn(lattice, |i| in_h(i) && m.contains(i) && !mirrored(i));
    Ok((a, b))
}
