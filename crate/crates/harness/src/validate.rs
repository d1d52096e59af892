//! Randomized property battery behind `mixed-eig validate`.
//!
//! Each suite draws its cases from its own ChaCha stream, so suites can be
//! resized independently and reruns with the same seed are identical.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use mixed_eig_core::eigsolve::{assemble_p2_matrix, dense_eigenvalues, solve_descent, solve_p2};
use mixed_eig_core::energy::{energy_gradient, gagliardo_p, local_energy, lp_norm_p, rayleigh_quotient};
use mixed_eig_core::geometry::{polarize_mask, random_connected_mask, reflect_mask, witness_sets, DomainMask, Lattice, Polarizer};
use mixed_eig_core::rearrange::{polarize_function, GridFunction};
use mixed_eig_core::{GeometryError, LocalForm, OperatorParams, SolverOptions};

use crate::config::{ExperimentConfig, Fault};
use crate::error::Result;
use crate::report::{Check, Report, ReportRow};

const DIRS: [[i8; 2]; 8] = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]];
const PS: [f64; 3] = [1.5, 2.0, 3.0];
const SS: [f64; 3] = [0.25, 0.5, 0.75];
/// Counterexamples kept per suite.
const MAX_EXAMPLES: usize = 5;

/// Tolerances of the individual suites.
pub const CHAIN_TOL: f64 = 1e-12;
pub const ORACLE_TOL: f64 = 1e-10;
pub const DESCENT_TOL: f64 = 1e-5;
pub const GRADIENT_TOL: f64 = 1e-5;
pub const FD_EPS: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest value of the suite's error metric (violations are positive
    /// for the chain suite, relative errors otherwise).
    pub worst: f64,
    pub counterexamples: Vec<serde_json::Value>,
    /// Suite-specific tallies.
    pub notes: serde_json::Value,
}

impl SuiteOutcome {
    fn new(name: &str) -> Self {
        Self { name: name.into(), worst: f64::NEG_INFINITY, notes: json!({}), ..Self::default() }
    }

    fn record(&mut self, metric: f64) {
        self.worst = self.worst.max(metric);
    }

    fn fail(&mut self, example: serde_json::Value) {
        self.failures += 1;
        if self.counterexamples.len() < MAX_EXAMPLES {
            self.counterexamples.push(example);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn stream(seed: u64, suite: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite);
    rng
}

/// Polarizer `H` with `∂H` through the center of a 16×16 box; the box is
/// then σ_H-symmetric.
fn symmetric_box_case(rng: &mut ChaCha8Rng, h: f64) -> (Polarizer, Lattice) {
    // odd half-cell coordinates: the center of an even-sized box sits between nodes
    let k = [2 * rng.gen_range(-4i64..4) + 1, 2 * rng.gen_range(-4i64..4) + 1];
    let c = [k[0] as f64 * h / 2.0, k[1] as f64 * h / 2.0];
    let dir = DIRS[rng.gen_range(0..DIRS.len())];
    let pol = Polarizer::through(dir, c).expect("valid direction");
    let origin = [((k[0] - 15) / 2) as f64 * h, ((k[1] - 15) / 2) as f64 * h];
    let lattice = Lattice::new(2, h, [16, 16], origin).expect("valid lattice");
    (pol, lattice)
}

/// Exact discrete Pólya-Szegő chain on σ_H-symmetric 16×16 boxes.
pub fn chain_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("polya_szego_chain");
    let mut rng = stream(seed, 1);
    for case in 0..cases {
        let (pol, lattice) = symmetric_box_case(&mut rng, 0.125);
        let p = PS[case % 3];
        let s = SS[(case / 3) % 3];
        let tail = rng.gen_bool(0.5);
        let density = rng.gen_range(0.2..0.9);
        let mask = DomainMask::from_fn(lattice, |i| !lattice.is_boundary_node(i) && rng.gen_bool(density));
        let values: Vec<f64> = (0..lattice.len()).map(|i| if mask.contains(i) { rng.gen_range(0.05..1.0) } else { 0.0 }).collect();
        let u = GridFunction::new(mask, values).expect("zero off the mask");
        let pu = polarize_function(&u, &pol).expect("symmetric box");

        let (n0, n1) = (lp_norm_p(&u, p), lp_norm_p(&pu, p));
        let (l0, l1) = (local_energy(&u, p, LocalForm::Edge), local_energy(&pu, p, LocalForm::Edge));
        let g0 = gagliardo_p(&u, p, s, tail).expect("support off the boundary layer");
        let g1 = gagliardo_p(&pu, p, s, tail).expect("support off the boundary layer");
        let rel = |a: f64, b: f64| if a == 0.0 { b - a } else { (b - a) / a };
        // positive metric means a violation beyond rounding
        let metric = ((n1 - n0).abs() / n0.max(f64::MIN_POSITIVE)).max(rel(l0, l1)).max(rel(g0, g1));
        out.record(metric);
        out.cases += 1;
        if metric > CHAIN_TOL {
            out.fail(json!({
                "case": case, "polarizer": pol.to_string(), "p": p, "s": s, "tail": tail,
                "norm": [n0, n1], "local": [l0, l1], "nonlocal": [g0, g1], "function": u.to_text(),
            }));
        }
    }
    out
}

type PolarizeFn = fn(&DomainMask, &Polarizer) -> std::result::Result<DomainMask, GeometryError>;

/// Fault fixture: drops the highest node of the polarized mask.
fn faulty_polarize(m: &DomainMask, h: &Polarizer) -> std::result::Result<DomainMask, GeometryError> {
    let mut out = polarize_mask(m, h)?;
    if let Some(&last) = out.indices().last() {
        out.set(last, false);
    }
    Ok(out)
}

/// Random lattice-compatible polarizer on a box with origin at zero and `h = 1`.
fn random_polarizer(rng: &mut ChaCha8Rng, lattice: &Lattice) -> Polarizer {
    let dir = DIRS[rng.gen_range(0..DIRS.len())];
    let diagonal = dir[0] != 0 && dir[1] != 0;
    let weight = if diagonal { 1 } else { 2 };
    let [nx, ny] = lattice.extent();
    let forms: Vec<i64> = [[0, 0], [nx - 1, 0], [0, ny - 1], [nx - 1, ny - 1]]
        .iter()
        .map(|c| weight * (dir[0] as i64 * c[0] as i64 + dir[1] as i64 * c[1] as i64))
        .collect();
    let level = rng.gen_range(*forms.iter().min().unwrap()..=*forms.iter().max().unwrap());
    let norm = if diagonal { std::f64::consts::SQRT_2 } else { 1.0 };
    Polarizer::new(dir, level as f64 / weight as f64 / norm).expect("valid direction")
}

/// Set identities of polarization on 12×12 grids, plus the logged
/// connectivity statement.
pub fn set_suite(cases: usize, seed: u64, fault: Fault) -> SuiteOutcome {
    let polarize: PolarizeFn = match fault {
        Fault::None => polarize_mask,
        Fault::PolarizeMask => faulty_polarize,
    };
    let mut out = SuiteOutcome::new("set_identities");
    let mut rng = stream(seed, 2);
    let lattice = Lattice::new(2, 1.0, [12, 12], [0.0, 0.0]).expect("valid lattice");
    let (mut conn_checked, mut conn_violations) = (0usize, 0usize);
    let mut conn_examples = Vec::new();
    for case in 0..cases {
        let pol = random_polarizer(&mut rng, &lattice);
        let r = pol.on_lattice(&lattice).expect("compatible by construction");
        let density = rng.gen_range(0.1..0.9);
        let m = DomainMask::from_fn(lattice, |i| r.reflect(i).is_some() && rng.gen_bool(density));
        let keep = rng.gen_range(0.3..1.0);
        let sub = DomainMask::from_fn(lattice, |i| m.contains(i) && rng.gen_bool(keep));

        let pm = polarize(&m, &pol).expect("reflection stays in the box");
        let mirrored = reflect_mask(&m, &pol).expect("reflection stays in the box");
        let (a, b) = witness_sets(&m, &pol).expect("reflection stays in the box");
        let in_h = DomainMask::from_fn(lattice, |i| r.side(i) == std::cmp::Ordering::Less);
        let fixed_criterion = mirrored.intersection(&in_h).expect("same lattice").is_subset_of(&m);
        let psub = polarize(&sub, &pol).expect("subset reflects in the box");

        let props = [
            ("measure", pm.count() == m.count()),
            ("idempotent", polarize(&pm, &pol).map(|x| x == pm).unwrap_or(false)),
            ("reflection_invariant", polarize(&mirrored, &pol).map(|x| x == pm).unwrap_or(false)),
            ("fixed_point_criterion", (pm == m) == fixed_criterion),
            ("a_empty_iff_fixed", a.is_empty() == (pm == m)),
            ("b_empty_iff_reflected", b.is_empty() == (pm == mirrored)),
            ("inclusion", psub.is_subset_of(&pm)),
        ];
        out.cases += 1;
        let broken: Vec<&str> = props.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
        out.record(broken.len() as f64);
        if !broken.is_empty() {
            out.fail(json!({ "case": case, "polarizer": pol.to_string(), "violated": broken, "mask": m.to_text() }));
        }

        // connectivity of P_H(Ω) ∩ H for a connected Ω, logged only
        let cells = rng.gen_range(4..40);
        let center = lattice.coord(rng.gen_range(0..lattice.len()));
        let blob = random_connected_mask(lattice, cells, center, rng.gen());
        if let Ok(blob) = blob {
            if let Ok(pb) = polarize_mask(&blob, &pol) {
                conn_checked += 1;
                let part = pb.intersection(&in_h).expect("same lattice");
                if !part.is_empty() && !part.is_connected() {
                    conn_violations += 1;
                    if conn_examples.len() < MAX_EXAMPLES {
                        conn_examples.push(json!({ "case": case, "polarizer": pol.to_string(), "mask": blob.to_text() }));
                    }
                }
            }
        }
    }
    out.notes = json!({
        "connectivity_checked": conn_checked,
        "connectivity_lattice_artifacts": conn_violations,
        "connectivity_examples": conn_examples,
    });
    out
}

/// What the oracle suite measured for one mask.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCase {
    pub nodes: usize,
    pub oracle: f64,
    pub p2_error: f64,
    pub descent_error: f64,
    pub p2_interior_min: f64,
    pub descent_interior_min: f64,
    pub converged: bool,
}

/// `p = 2` solvers against the dense eigendecomposition on random blobs.
pub fn oracle_suite(cases: usize, max_nodes: usize, seed: u64) -> (SuiteOutcome, Vec<OracleCase>) {
    let mut out = SuiteOutcome::new("p2_oracle");
    let mut rng = stream(seed, 3);
    let weights = [(1.0, 1.0), (0.0, 1.0), (2.0, 0.5)];
    let mut details = Vec::new();
    let lo = 20.min(max_nodes);
    for case in 0..cases {
        let n = if cases > 1 { lo + (max_nodes - lo) * case / (cases - 1) } else { max_nodes };
        let half = (n as f64).sqrt().ceil() as usize + 6;
        let lattice = Lattice::centered(2, 0.125, half).expect("valid lattice");
        let mask = match random_connected_mask(lattice, n, [0.0, 0.0], rng.gen()) {
            Ok(m) => m,
            Err(e) => {
                out.fail(json!({ "case": case, "error": e.to_string() }));
                continue;
            }
        };
        let (a, b) = weights[case % 3];
        let params = OperatorParams { a, b, ..OperatorParams::mixed(2.0, SS[case % 3]) };
        let oracle = dense_eigenvalues(&mask, &params).expect("nonempty mask")[0];
        let p2 = solve_p2(&mask, &params, &SolverOptions::p2()).expect("SPD matrix");
        let descent = solve_descent(&mask, &params, &SolverOptions::descent().with_seed(case as u64)).expect("nonempty mask");
        let e2 = (p2.lambda - oracle).abs() / oracle;
        let ed = (descent.lambda - oracle).abs() / oracle;
        out.cases += 1;
        out.record(e2);
        let ok = e2 <= ORACLE_TOL && ed <= DESCENT_TOL && p2.converged && descent.converged;
        if !ok {
            out.fail(json!({
                "case": case, "nodes": n, "oracle": oracle, "p2": p2.lambda, "descent": descent.lambda,
                "p2_converged": p2.converged, "descent_converged": descent.converged, "mask": mask.to_text(),
            }));
        }
        details.push(OracleCase {
            nodes: mask.count(),
            oracle,
            p2_error: e2,
            descent_error: ed,
            p2_interior_min: p2.interior_min,
            descent_interior_min: descent.interior_min,
            converged: p2.converged && descent.converged,
        });
    }
    let worst_descent = details.iter().map(|d| d.descent_error).fold(0.0, f64::max);
    out.notes = json!({ "worst_descent_error": worst_descent });
    (out, details)
}

/// `energy_gradient` against central differences, and against `2Mu` at `p = 2`.
pub fn gradient_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("gradient");
    let mut rng = stream(seed, 4);
    let lattice = Lattice::centered(2, 0.25, 4).expect("valid lattice");
    for case in 0..cases {
        let p = PS[case % 3];
        let form = if (case / 3) % 2 == 0 { LocalForm::Edge } else { LocalForm::Euclidean };
        let params = OperatorParams {
            p,
            s: SS[rng.gen_range(0..3)],
            a: rng.gen_range(0.5..1.5),
            b: rng.gen_range(0.5..1.5),
            tail: rng.gen_bool(0.5),
            local_form: form,
        };
        let density = rng.gen_range(0.5..1.0);
        let mut mask = DomainMask::from_fn(lattice, |i| !lattice.is_boundary_node(i) && rng.gen_bool(density));
        if mask.is_empty() {
            mask.set(lattice.nearest_node([0.0, 0.0]), true);
        }
        // distinct levels keep every pair difference away from the kink at 0
        let nodes = mask.indices();
        let mut ranks: Vec<usize> = (0..nodes.len()).collect();
        ranks.shuffle(&mut rng);
        let step = 1.0 / nodes.len() as f64;
        let mut values = vec![0.0; lattice.len()];
        for (&i, &r) in nodes.iter().zip(&ranks) {
            values[i] = 0.3 + (r as f64 + rng.gen_range(0.0..0.5)) * step;
        }
        let u = GridFunction::new(mask.clone(), values).expect("zero off the mask");
        let grad = energy_gradient(&u, &params).expect("valid params");
        let energy = |v: &GridFunction| {
            let br = rayleigh_quotient(v, &params).expect("nonzero");
            params.a * br.local_energy + params.b * br.nonlocal_energy
        };
        let shifted = |dir: &[f64], t: f64| {
            let vals = u.values().iter().zip(dir).map(|(x, d)| x + t * d).collect();
            GridFunction::new(mask.clone(), vals).expect("zero off the mask")
        };
        let gnorm = nodes.iter().map(|&i| grad[i] * grad[i]).sum::<f64>().sqrt();
        let mut directions: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&i| {
                let mut e = vec![0.0; lattice.len()];
                e[i] = 1.0;
                e
            })
            .collect();
        directions.push((0..lattice.len()).map(|i| if mask.contains(i) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect());
        let mut worst: f64 = 0.0;
        let mut example = None;
        for dir in &directions {
            let fd = (energy(&shifted(dir, FD_EPS)) - energy(&shifted(dir, -FD_EPS))) / (2.0 * FD_EPS);
            let analytic: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
            let dnorm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            let err = (fd - analytic).abs() / analytic.abs().max(1e-3 * gnorm * dnorm);
            if err > worst {
                worst = err;
                example = Some((fd, analytic));
            }
        }
        if p == 2.0 {
            let m = assemble_p2_matrix(&mask, &params).expect("nonempty mask");
            for (r, &i) in nodes.iter().enumerate() {
                let mu: f64 = nodes.iter().enumerate().map(|(c, &j)| m[(r, c)] * u.value(j)).sum();
                // the matrix carries the quadratic form; the gradient is twice M u
                let err = (grad[i] - 2.0 * mu).abs() / grad[i].abs().max(1e-3 * gnorm);
                worst = worst.max(err);
            }
        }
        out.cases += 1;
        out.record(worst);
        if worst > GRADIENT_TOL {
            let (fd, analytic) = example.unwrap_or((f64::NAN, f64::NAN));
            out.fail(json!({ "case": case, "p": p, "form": form.to_string(), "error": worst, "fd": fd, "analytic": analytic }));
        }
    }
    out
}

/// `validate`: every suite with the configured sizes.
pub fn run_validate(cfg: &ExperimentConfig) -> Result<Report> {
    let v = &cfg.validate;
    let seed = cfg.seed;
    let (oracle, details) = oracle_suite(v.oracle_cases, v.oracle_max_nodes, seed);
    let suites = [chain_suite(v.chain_cases, seed), set_suite(v.set_cases, seed, v.fault), oracle, gradient_suite(v.gradient_cases, seed)];
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (k, s) in suites.iter().enumerate() {
        let mut row = ReportRow::new("validate", k, &s.name, s.cases.to_string(), if s.passed() { "pass" } else { "fail" });
        row.nodes = s.failures;
        rows.push(row);
        checks.push(Check::flag(format!("suite[{}]", s.name), s.passed(), format!("{} of {} cases failed", s.failures, s.cases)));
    }
    let positive = details.iter().filter(|d| d.converged).all(|d| d.p2_interior_min > 0.0 && d.descent_interior_min > 0.0);
    checks.push(Check::flag("positivity[p2_oracle]", positive, "interior minimum of converged eigenfunctions"));
    Ok(Report::new("validate", seed, rows, checks, json!({ "suites": suites })))
}
