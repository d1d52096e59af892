use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lattice::{Lattice, Point};
use crate::error::GeometryError;

/// A discrete domain: the set of lattice nodes inside `Ω`. Everything
/// outside the set (including everything off the box) is exterior.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainMask {
    lattice: Lattice,
    inside: Vec<bool>,
}

impl DomainMask {
    pub fn empty(lattice: Lattice) -> Self {
        Self { inside: vec![false; lattice.len()], lattice }
    }

    pub fn from_fn(lattice: Lattice, mut f: impl FnMut(usize) -> bool) -> Self {
        Self { inside: (0..lattice.len()).map(&mut f).collect(), lattice }
    }

    pub fn from_indices(lattice: Lattice, indices: impl IntoIterator<Item = usize>) -> Result<Self, GeometryError> {
        let mut m = Self::empty(lattice);
        for i in indices {
            if i >= lattice.len() {
                return Err(GeometryError::InvalidShape(format!("node {i} outside lattice")));
            }
            m.inside[i] = true;
        }
        Ok(m)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn contains(&self, index: usize) -> bool {
        self.inside.get(index).copied().unwrap_or(false)
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.inside[index] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.inside
    }

    pub fn indices(&self) -> Vec<usize> {
        self.inside.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }

    /// `|Ω| = count · h^d`.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.lattice.cell_volume()
    }

    fn check_same(&self, other: &Self) -> Result<(), GeometryError> {
        if self.lattice != other.lattice {
            return Err(GeometryError::LatticeMismatch);
        }
        Ok(())
    }

    pub fn union(&self, other: &Self) -> Result<Self, GeometryError> {
        self.check_same(other)?;
        Ok(Self::from_fn(self.lattice, |i| self.inside[i] || other.inside[i]))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, GeometryError> {
        self.check_same(other)?;
        Ok(Self::from_fn(self.lattice, |i| self.inside[i] && other.inside[i]))
    }

    pub fn difference(&self, other: &Self) -> Result<Self, GeometryError> {
        self.check_same(other)?;
        Ok(Self::from_fn(self.lattice, |i| self.inside[i] && !other.inside[i]))
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.lattice == other.lattice && self.inside.iter().zip(&other.inside).all(|(&a, &b)| !a || b)
    }

    /// Some inside node lies on the outermost layer of the box.
    pub fn touches_boundary(&self) -> bool {
        self.inside.iter().enumerate().any(|(i, &b)| b && self.lattice.is_boundary_node(i))
    }

    /// Minimum number of layers between an inside node and the box exterior.
    pub fn clearance(&self) -> Option<usize> {
        self.indices().into_iter().map(|i| self.lattice.boundary_layer(i)).min()
    }

    /// 4-neighbor (2-neighbor in 1-D) connectivity. The empty mask counts as connected.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.inside.iter().position(|&b| b) else {
            return true;
        };
        let mut seen = vec![false; self.inside.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut reached = 1;
        while let Some(i) = queue.pop_front() {
            for j in self.lattice.neighbors(i).flatten() {
                if self.inside[j] && !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    queue.push_back(j);
                }
            }
        }
        reached == self.count()
    }

    /// Lattice distance (in steps) from each inside node to the nearest
    /// exterior node; zero outside. Nodes beyond the box are exterior.
    pub fn erosion_depth(&self) -> Vec<u32> {
        let n = self.inside.len();
        let mut depth = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if !self.inside[i] {
                depth[i] = 0;
                queue.push_back(i);
            } else if self.lattice.neighbors(i).any(|nb| nb.is_none()) {
                depth[i] = 1;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let next = depth[i] + 1;
            for j in self.lattice.neighbors(i).flatten() {
                if depth[j] > next {
                    depth[j] = next;
                    queue.push_back(j);
                }
            }
        }
        depth
    }

    /// Shifts every inside node by `shift` lattice steps.
    pub fn translate(&self, shift: [i64; 2]) -> Result<Self, GeometryError> {
        let mut out = Self::empty(self.lattice);
        for i in self.indices() {
            let m = self.lattice.multi_index(i);
            let j = self
                .lattice
                .checked_index([m[0] as i64 + shift[0], m[1] as i64 + shift[1]])
                .ok_or(GeometryError::ReflectionEscapesBox)?;
            out.inside[j] = true;
        }
        Ok(out)
    }

    /// Rows of `0`/`1`, highest second-axis row first.
    pub fn to_text(&self) -> String {
        let [nx, ny] = self.lattice.extent();
        let mut s = String::with_capacity((nx + 1) * ny);
        for row in (0..ny).rev() {
            for col in 0..nx {
                s.push(if self.inside[self.lattice.index([col, row])] { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(lattice: Lattice, text: &str) -> Result<Self, GeometryError> {
        let [nx, ny] = lattice.extent();
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if rows.len() != ny {
            return Err(GeometryError::Parse(format!("expected {ny} rows, found {}", rows.len())));
        }
        let mut m = Self::empty(lattice);
        for (r, line) in rows.iter().enumerate() {
            let row = ny - 1 - r;
            if line.len() != nx {
                return Err(GeometryError::Parse(format!("row {r} has {} cells, expected {nx}", line.len())));
            }
            for (col, ch) in line.chars().enumerate() {
                let v = match ch {
                    '0' => false,
                    '1' => true,
                    other => return Err(GeometryError::Parse(format!("unexpected character {other:?}"))),
                };
                m.inside[lattice.index([col, row])] = v;
            }
        }
        Ok(m)
    }
}

/// `|Ω|` as node count times `h^d`.
pub fn mask_measure(m: &DomainMask) -> f64 {
    m.measure()
}

/// The first `|m|` nodes in order of distance from the lattice node nearest
/// the box center (ties by index): the discrete equal-measure ball.
pub fn equal_measure_ball(m: &DomainMask) -> Result<DomainMask, GeometryError> {
    let lattice = *m.lattice();
    let center = lattice.coord(lattice.nearest_node(lattice.box_center()));
    ball_of_count(&lattice, center, m.count())
}

/// First `count` nodes ordered by distance from `center`.
pub fn ball_of_count(lattice: &Lattice, center: Point, count: usize) -> Result<DomainMask, GeometryError> {
    if count > lattice.len() {
        return Err(GeometryError::LatticeTooSmall(format!("{count} nodes requested, lattice has {}", lattice.len())));
    }
    let order = lattice.nodes_by_distance(center);
    let ball = DomainMask::from_indices(*lattice, order[..count].iter().copied())?;
    if count > 0 && ball.touches_boundary() {
        return Err(GeometryError::LatticeTooSmall("equal-measure ball reaches the box boundary".into()));
    }
    Ok(ball)
}

/// Random 4-connected mask of `cells` nodes grown from the node nearest
/// `center`, never touching the outer layer of the box.
pub fn random_connected_mask(lattice: Lattice, cells: usize, center: Point, seed: u64) -> Result<DomainMask, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = DomainMask::empty(lattice);
    if cells == 0 {
        return Ok(mask);
    }
    let start = lattice.nearest_node(center);
    if lattice.is_boundary_node(start) {
        return Err(GeometryError::LatticeTooSmall("seed node on the box boundary".into()));
    }
    let mut queued = vec![false; lattice.len()];
    let mut frontier = vec![start];
    queued[start] = true;
    let mut placed = 0;
    while placed < cells {
        if frontier.is_empty() {
            return Err(GeometryError::LatticeTooSmall(format!("only {placed} of {cells} cells fit")));
        }
        let pick = rng.gen_range(0..frontier.len());
        let node = frontier.swap_remove(pick);
        mask.inside[node] = true;
        placed += 1;
        for nb in lattice.neighbors(node).flatten() {
            if !queued[nb] && !lattice.is_boundary_node(nb) {
                queued[nb] = true;
                frontier.push(nb);
            }
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(half: usize) -> Lattice {
        Lattice::centered(1, 1.0, half).unwrap()
    }

    #[test]
    fn measure_counts_cells() {
        let l = Lattice::centered(1, 0.5, 3).unwrap();
        let m = DomainMask::from_indices(l, [3, 4, 5]).unwrap();
        assert_eq!(mask_measure(&m), 1.5);
        assert_eq!(mask_measure(&DomainMask::empty(l)), 0.0);
    }

    #[test]
    fn connectivity() {
        let l = line(3);
        assert!(DomainMask::from_indices(l, [2, 3, 4]).unwrap().is_connected());
        assert!(!DomainMask::from_indices(l, [1, 3]).unwrap().is_connected());
        let l2 = Lattice::centered(2, 1.0, 2).unwrap();
        let diag = DomainMask::from_indices(l2, [l2.index([1, 1]), l2.index([2, 2])]).unwrap();
        assert!(!diag.is_connected());
    }

    #[test]
    fn erosion_depth_of_square() {
        let l = Lattice::centered(2, 1.0, 4).unwrap();
        let m = DomainMask::from_fn(l, |i| {
            let [a, b] = l.multi_index(i);
            (2..=6).contains(&a) && (2..=6).contains(&b)
        });
        let d = m.erosion_depth();
        assert_eq!(d[l.index([4, 4])], 3);
        assert_eq!(d[l.index([2, 4])], 1);
        assert_eq!(d[l.index([0, 0])], 0);
    }

    #[test]
    fn equal_measure_ball_small_cases() {
        let l = Lattice::centered(2, 1.0, 4).unwrap();
        let one = DomainMask::from_indices(l, [0]).unwrap();
        assert_eq!(equal_measure_ball(&one).unwrap().indices(), vec![l.index([4, 4])]);
        let five = DomainMask::from_indices(l, [0, 1, 2, 3, 9]).unwrap();
        let mut expect = vec![l.index([4, 4]), l.index([3, 4]), l.index([5, 4]), l.index([4, 3]), l.index([4, 5])];
        expect.sort();
        assert_eq!(equal_measure_ball(&five).unwrap().indices(), expect);
    }

    #[test]
    fn equal_measure_ball_too_large() {
        let l = Lattice::centered(2, 1.0, 2).unwrap();
        let m = DomainMask::from_fn(l, |_| true);
        assert!(matches!(equal_measure_ball(&m), Err(GeometryError::LatticeTooSmall(_))));
    }

    #[test]
    fn text_round_trip() {
        let l = Lattice::new(2, 1.0, [4, 3], [0.0, 0.0]).unwrap();
        let m = DomainMask::from_indices(l, [0, 5, 6, 11]).unwrap();
        let t = m.to_text();
        assert_eq!(t, "0001\n0110\n1000\n");
        assert_eq!(DomainMask::from_text(l, &t).unwrap(), m);
        assert!(DomainMask::from_text(l, "01\n").is_err());
    }

    #[test]
    fn random_blob_is_connected_and_sized() {
        let l = Lattice::centered(2, 1.0, 8).unwrap();
        let a = random_connected_mask(l, 40, [0.0, 0.0], 7).unwrap();
        assert_eq!(a.count(), 40);
        assert!(a.is_connected());
        assert!(!a.touches_boundary());
        assert_eq!(a, random_connected_mask(l, 40, [0.0, 0.0], 7).unwrap());
    }

    #[test]
    fn translate_shifts_nodes() {
        let l = line(3);
        let m = DomainMask::from_indices(l, [1, 2]).unwrap();
        assert_eq!(m.translate([2, 0]).unwrap().indices(), vec![3, 4]);
        assert!(m.translate([-2, 0]).is_err());
    }
}
