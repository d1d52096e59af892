use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::function::GridFunction;
use super::polarize::polarize_function_in_box;
use crate::error::RearrangeError;
use crate::geometry::{DomainMask, Lattice, Point, Polarizer};
use crate::par;

/// Discrete Schwarz symmetrization by rank fill: values sorted in decreasing
/// order are assigned to nodes sorted by distance from `center` (ties by
/// index). The support mask becomes the first `|supp mask|` nodes of that order.
pub fn schwarz_symmetrize(u: &GridFunction, center: Point) -> Result<GridFunction, RearrangeError> {
    if let Some(i) = u.first_negative() {
        return Err(RearrangeError::NegativeValue(i));
    }
    let lattice = *u.lattice();
    let order = lattice.nodes_by_distance(center);
    let mut sorted = u.values().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut values = vec![0.0; lattice.len()];
    for (&node, &v) in order.iter().zip(&sorted) {
        values[node] = v;
    }
    let mask = DomainMask::from_indices(lattice, order[..u.mask().count()].iter().copied())?;
    GridFunction::new(mask, values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchwarzOptions {
    /// Exponent of the `L^p` distance driving the greedy choice.
    pub p: f64,
    /// Maximum number of polarizations.
    pub budget: usize,
    /// Candidate polarizers sampled per step.
    pub candidates: usize,
    pub seed: u64,
}

impl Default for SchwarzOptions {
    fn default() -> Self {
        Self { p: 2.0, budget: 50, candidates: 16, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SchwarzTrace {
    /// The rank-fill target `u*`.
    pub target: GridFunction,
    /// `u_0 = u, u_1, ..., u_m`.
    pub functions: Vec<GridFunction>,
    /// `‖u_k - u*‖_p`, non-increasing.
    pub distances: Vec<f64>,
    /// Polarizer applied at each step.
    pub polarizers: Vec<Polarizer>,
}

const DIRECTIONS_2D: [[i8; 2]; 8] = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]];
const DIRECTIONS_1D: [[i8; 2]; 2] = [[1, 0], [-1, 0]];

fn polarizer_at_level(lattice: &Lattice, dir: [i8; 2], level: i64) -> Polarizer {
    let diagonal = dir[0] != 0 && dir[1] != 0;
    let (weight, norm) = if diagonal { (1.0, std::f64::consts::SQRT_2) } else { (2.0, 1.0) };
    let o = lattice.origin();
    let dot_o = dir[0] as f64 * o[0] + dir[1] as f64 * o[1];
    let offset = (level as f64 * lattice.h() / weight + dot_o) / norm;
    Polarizer::new(dir, offset).expect("valid direction")
}

/// Integer levels `lowest..=highest` for direction `dir`: the closure of
/// `H` contains `center`, and `∂H` does not lie beyond the whole support
/// (those act as the identity).
fn level_range(lattice: &Lattice, dir: [i8; 2], center: Point, support: &[usize]) -> (i64, i64) {
    let probe = polarizer_at_level(lattice, dir, 0).on_lattice(lattice).expect("compatible by construction");
    let lowest = (probe.form_at_point(center) - 1e-9).ceil() as i64;
    let highest = support
        .iter()
        .map(|&i| probe.form_at_point(lattice.coord(i)).round() as i64)
        .max()
        .unwrap_or(lowest)
        .max(lowest);
    (lowest, highest)
}

fn directions(lattice: &Lattice) -> &'static [[i8; 2]] {
    if lattice.dim() == 1 {
        &DIRECTIONS_1D
    } else {
        &DIRECTIONS_2D
    }
}

/// Random admissible polarizer, see [`level_range`].
fn sample_candidate(lattice: &Lattice, center: Point, support: &[usize], rng: &mut ChaCha8Rng) -> Polarizer {
    let dirs = directions(lattice);
    let dir = dirs[rng.gen_range(0..dirs.len())];
    let (lowest, highest) = level_range(lattice, dir, center, support);
    polarizer_at_level(lattice, dir, rng.gen_range(lowest..=highest))
}

/// Every admissible polarizer, direction by direction.
fn all_candidates(lattice: &Lattice, center: Point, support: &[usize]) -> Vec<Polarizer> {
    let mut out = Vec::new();
    for &dir in directions(lattice) {
        let (lowest, highest) = level_range(lattice, dir, center, support);
        out.extend((lowest..=highest).map(|level| polarizer_at_level(lattice, dir, level)));
    }
    out
}

/// Index and distance of the best candidate, lowest index on ties.
fn best_candidate(current: &GridFunction, target: &GridFunction, cands: &[Polarizer], p: f64) -> Option<(usize, f64, GridFunction)> {
    let evaluated = par::map_range(cands.len(), |k| polarize_function_in_box(current, &cands[k]).ok().map(|f| (f.lp_distance(target, p), f)));
    let mut best: Option<(usize, f64, GridFunction)> = None;
    for (k, e) in evaluated.into_iter().enumerate() {
        if let Some((d, f)) = e {
            if best.as_ref().is_none_or(|b| d < b.1) {
                best = Some((k, d, f));
            }
        }
    }
    best
}

/// Greedy iterated polarization toward `u*`.
///
/// Each step samples `candidates` polarizers whose closed halfspace contains
/// `center`, keeps those whose reflection of the support stays in the box,
/// and applies the one giving the smallest `‖P_H u - u*‖_p` (lowest candidate
/// index on ties). When no sampled candidate strictly decreases the distance,
/// every admissible polarizer is tried before stopping. Also stops when the
/// budget is spent.
pub fn iterate_polarizations(u: &GridFunction, center: Point, opts: &SchwarzOptions) -> Result<SchwarzTrace, RearrangeError> {
    let target = schwarz_symmetrize(u, center)?;
    let lattice = *u.lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut current = u.clone();
    let mut distances = vec![current.lp_distance(&target, opts.p)];
    let mut functions = vec![current.clone()];
    let mut polarizers = Vec::new();
    for _ in 0..opts.budget {
        let best_so_far = *distances.last().expect("nonempty");
        if best_so_far == 0.0 {
            break;
        }
        let support = current.support().indices();
        let sampled: Vec<Polarizer> = (0..opts.candidates).map(|_| sample_candidate(&lattice, center, &support, &mut rng)).collect();
        let mut choice = best_candidate(&current, &target, &sampled, opts.p).map(|(k, d, f)| (sampled[k], d, f));
        if choice.as_ref().is_none_or(|c| c.1 >= best_so_far) {
            // the sample stalled: only stop once no admissible polarizer helps
            let every = all_candidates(&lattice, center, &support);
            choice = best_candidate(&current, &target, &every, opts.p).map(|(k, d, f)| (every[k], d, f));
        }
        match choice {
            Some((h, d, f)) if d < best_so_far => {
                current = f;
                distances.push(d);
                functions.push(current.clone());
                polarizers.push(h);
            }
            _ => break,
        }
    }
    Ok(SchwarzTrace { target, functions, distances, polarizers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::reflect_mask;

    #[test]
    fn single_value_moves_to_center() {
        let l = Lattice::centered(2, 1.0, 3).unwrap();
        let m = DomainMask::from_indices(l, [l.index([0, 1])]).unwrap();
        let u = GridFunction::from_fn(m, |_| 5.0);
        let s = schwarz_symmetrize(&u, [0.0, 0.0]).unwrap();
        assert_eq!(s.value(l.index([3, 3])), 5.0);
        assert_eq!(s.values().iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn one_dimensional_rank_fill_tie_break() {
        let l = Lattice::centered(1, 1.0, 2).unwrap();
        let m = DomainMask::from_indices(l, [1, 2]).unwrap();
        let u = GridFunction::new(m, vec![0.0, 2.0, 1.0, 0.0, 0.0]).unwrap();
        let s = schwarz_symmetrize(&u, [0.0, 0.0]).unwrap();
        assert_eq!(s.values(), &[0.0, 1.0, 2.0, 0.0, 0.0]);
        assert_eq!(schwarz_symmetrize(&s, [0.0, 0.0]).unwrap(), s);
    }

    #[test]
    fn already_symmetric_exits_immediately() {
        let l = Lattice::centered(2, 1.0, 4).unwrap();
        let m = DomainMask::from_indices(l, [l.index([4, 4]), l.index([3, 4])]).unwrap();
        let u = GridFunction::from_fn(m, |i| if i == l.index([4, 4]) { 2.0 } else { 1.0 });
        let star = schwarz_symmetrize(&u, [0.0, 0.0]).unwrap();
        let t = iterate_polarizations(&star, [0.0, 0.0], &SchwarzOptions::default()).unwrap();
        assert_eq!(t.distances, vec![0.0]);
    }

    #[test]
    fn mirrored_target_is_recovered_by_one_reflection() {
        let l = Lattice::centered(2, 1.0, 8).unwrap();
        let ball = crate::geometry::ball_of_count(&l, [0.0, 0.0], 9).unwrap();
        let order = l.nodes_by_distance([0.0, 0.0]);
        let star = GridFunction::from_fn(ball.clone(), |i| 10.0 - order.iter().position(|&j| j == i).unwrap() as f64);
        let h = Polarizer::axis(0, true, 1.5);
        let r = h.on_lattice(&l).unwrap();
        let mirrored_mask = reflect_mask(&ball, &h).unwrap();
        let u = GridFunction::from_fn(mirrored_mask, |i| star.value(r.reflect(i).unwrap()));
        let p = polarize_function_in_box(&u, &h).unwrap();
        assert_eq!(p.values(), star.values());
        let t = iterate_polarizations(&u, [0.0, 0.0], &SchwarzOptions { budget: 200, ..Default::default() }).unwrap();
        assert!(t.distances.windows(2).all(|w| w[1] < w[0]));
        assert!(*t.distances.last().unwrap() < t.distances[0]);
    }
}
