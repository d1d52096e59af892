//! The experiment drivers behind the CLI subcommands.
//!
//! Each driver returns a [`Report`]; independent solves are spread over the
//! worker pool with `par::map_range`, which keeps row order fixed.

use std::time::Instant;

use serde_json::json;

use mixed_eig_core::eigsolve::solve;
use mixed_eig_core::energy::MaskedOperator;
use mixed_eig_core::geometry::{equal_measure_ball, polarize_mask, reflect_mask, witness_sets, DomainMask, Lattice};
use mixed_eig_core::par;
use mixed_eig_core::rearrange::{iterate_polarizations, polarize_function, GridFunction, SchwarzOptions};
use mixed_eig_core::{EigenResult, OperatorParams, ShapeSpec};

use crate::config::{DomainSpec, ExperimentConfig, FunctionInput, NamedDomain};
use crate::domain::{build_domain, lattice_for, symmetric_lattice};
use crate::error::{HarnessError, Result};
use crate::report::{Check, Report, ReportRow};

/// Relative tolerance for quantities that agree up to summation order.
const ROUNDING_TOL: f64 = 1e-12;

/// A finished solve plus its wall time.
pub struct Solve {
    pub result: EigenResult,
    pub seconds: f64,
}

pub fn solve_mask(cfg: &ExperimentConfig, mask: &DomainMask) -> Result<Solve> {
    let start = Instant::now();
    let result = solve(mask, &cfg.operator, &cfg.solver)?;
    Ok(Solve { result, seconds: start.elapsed().as_secs_f64() })
}

fn fill(row: &mut ReportRow, cfg: &ExperimentConfig, s: &Solve) {
    let r = &s.result;
    row.nodes = r.eigenfunction.mask().count();
    row.lambda = Some(r.lambda);
    row.local_energy = Some(r.breakdown.local_energy);
    row.nonlocal_energy = Some(r.breakdown.nonlocal_energy);
    row.iterations = Some(r.iterations);
    row.converged = Some(r.converged);
    row.residual = Some(r.residual);
    row.interior_min = Some(r.interior_min);
    if cfg.output.timings {
        row.wall_time_s = Some(s.seconds);
    }
}

fn solved_row(cfg: &ExperimentConfig, s: &Solve, experiment: &str, case: usize, domain: &str, param: &str, role: &str) -> ReportRow {
    let mut row = ReportRow::new(experiment, case, domain, param, role);
    fill(&mut row, cfg, s);
    row
}

/// `≤` slack: configured, or `10 · tol_rel · λ`.
fn slack(cfg: &ExperimentConfig, lambda: f64) -> f64 {
    cfg.check.tol.unwrap_or(10.0 * cfg.solver.tol_rel * lambda)
}

/// Strong maximum principle diagnostic: converged eigenfunctions on
/// connected masks are strictly positive.
fn positivity(name: &str, mask: &DomainMask, s: &Solve) -> Option<Check> {
    (s.result.converged && mask.is_connected()).then(|| {
        let m = s.result.interior_min;
        Check::flag(format!("positivity[{name}]"), m > 0.0, format!("interior min {m:e}"))
    })
}

fn collect<T>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

/// `eig`: first eigenvalue of every configured domain.
pub fn run_eig(cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.domains.is_empty() {
        return Err(HarnessError::config("shape.kind", "no domain configured"));
    }
    let solved = collect(par::map_range(cfg.domains.len(), |k| {
        let d = &cfg.domains[k];
        let lattice = lattice_for(&cfg.lattice, &d.domain)?;
        let mask = build_domain(&lattice, &d.domain)?;
        let s = solve_mask(cfg, &mask)?;
        Ok((mask, s))
    }))?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (k, (d, (mask, s))) in cfg.domains.iter().zip(&solved).enumerate() {
        rows.push(solved_row(cfg, s, "eig", k, &d.name, "", "omega"));
        checks.extend(positivity(&d.name, mask, s));
    }
    Ok(Report::new("eig", cfg.seed, rows, checks, json!({})))
}

/// `polarize-set`: `P_H(Ω)`, `σ_H(Ω)` and the witness sets per polarizer,
/// with the set identities checked node by node.
pub fn run_polarize_set(cfg: &ExperimentConfig) -> Result<Report> {
    let d = cfg.primary_domain()?;
    require_polarizers(cfg)?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut masks = Vec::new();
    for (k, pol) in cfg.polarizers.iter().enumerate() {
        let lattice = symmetric_lattice(&cfg.lattice, pol, &d.domain)?;
        let omega = build_domain(&lattice, &d.domain)?;
        let polarized = polarize_mask(&omega, pol)?;
        let mirrored = reflect_mask(&omega, pol)?;
        let (a, b) = witness_sets(&omega, pol)?;
        let param = pol.to_string();
        let mut r0 = ReportRow::new("polarize-set", k, &d.name, &param, "omega");
        r0.nodes = omega.count();
        let mut r1 = ReportRow::new("polarize-set", k, &d.name, &param, "polarized");
        r1.nodes = polarized.count();
        r1.a_h = Some(a.count());
        r1.b_h = Some(b.count());
        rows.extend([r0, r1]);
        let tag = |what: &str| format!("{what}[{param}]");
        checks.push(Check::flag(tag("measure"), polarized.count() == omega.count(), ""));
        checks.push(Check::flag(tag("idempotent"), polarize_mask(&polarized, pol)? == polarized, ""));
        checks.push(Check::flag(tag("reflection_invariant"), polarize_mask(&mirrored, pol)? == polarized, ""));
        checks.push(Check::flag(tag("a_empty_iff_fixed"), a.is_empty() == (polarized == omega), ""));
        checks.push(Check::flag(tag("b_empty_iff_reflected"), b.is_empty() == (polarized == mirrored), ""));
        masks.push(json!({ "polarizer": param, "omega": omega.to_text(), "polarized": polarized.to_text() }));
    }
    Ok(Report::new("polarize-set", cfg.seed, rows, checks, json!({ "masks": masks })))
}

fn require_polarizers(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.polarizers.is_empty() {
        return Err(HarnessError::config("polarizer.list", "at least one polarizer is required"));
    }
    Ok(())
}

fn read_function(path: &std::path::Path) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path)?;
    let u = GridFunction::from_text(&text)?;
    if let Some(i) = u.first_negative() {
        return Err(HarnessError::config("input.path", format!("negative value at node {i}")));
    }
    Ok(u)
}

/// The configured input function of `domain` on `lattice`.
fn domain_function(cfg: &ExperimentConfig, lattice: &Lattice, domain: &DomainSpec) -> Result<GridFunction> {
    let mask = build_domain(lattice, domain)?;
    match &cfg.input {
        FunctionInput::Bump => {
            let depth = mask.erosion_depth();
            Ok(GridFunction::from_fn(mask, |i| depth[i] as f64))
        }
        FunctionInput::Eigenfunction => Ok(solve_mask(cfg, &mask)?.result.eigenfunction),
        FunctionInput::File(path) => read_function(path),
    }
}

/// Energy breakdown of an arbitrary function through the operator on its support.
pub fn rayleigh(u: &GridFunction, params: &OperatorParams) -> Result<(f64, f64, f64)> {
    let support = u.support();
    let op = MaskedOperator::new(&support, params)?;
    let v = op.from_grid(u);
    let parts = op.energy(&v);
    let norm = op.lp_norm_p(&v);
    if !(norm > 0.0) {
        return Err(mixed_eig_core::EnergyError::Degenerate.into());
    }
    Ok((op.weighted(parts) / norm, parts.local, parts.nonlocal))
}

/// `polarize-fn`: the discrete Pólya-Szegő chain for `P_H u`.
pub fn run_polarize_fn(cfg: &ExperimentConfig) -> Result<Report> {
    require_polarizers(cfg)?;
    let file_input = matches!(cfg.input, FunctionInput::File(_));
    let d = if file_input { None } else { Some(cfg.primary_domain()?) };
    let name = d.map_or("file", |d| d.name.as_str());
    let p = cfg.operator.p;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (k, pol) in cfg.polarizers.iter().enumerate() {
        let u = match (d, &cfg.input) {
            (_, FunctionInput::File(path)) => read_function(path)?,
            (Some(d), _) => domain_function(cfg, &symmetric_lattice(&cfg.lattice, pol, &d.domain)?, &d.domain)?,
            (None, _) => unreachable!("domain is present unless the input is a file"),
        };
        let pu = polarize_function(&u, pol)?;
        let param = pol.to_string();
        let mut out = Vec::new();
        for (role, f) in [("u", &u), ("polarized", &pu)] {
            let (r, local, nonlocal) = rayleigh(f, &cfg.operator)?;
            let mut row = ReportRow::new("polarize-fn", k, name, &param, role);
            row.nodes = f.support().count();
            row.lambda = Some(r);
            row.local_energy = Some(local);
            row.nonlocal_energy = Some(nonlocal);
            rows.push(row);
            out.push((local, nonlocal, mixed_eig_core::energy::lp_norm_p(f, p)));
        }
        let ((l0, n0, q0), (l1, n1, q1)) = (out[0], out[1]);
        let tag = |what: &str| format!("{what}[{param}]");
        checks.push(Check::margin(tag("norm_preserved"), ROUNDING_TOL * q0 - (q1 - q0).abs(), format!("{q0:e} vs {q1:e}")));
        checks.push(Check::margin(tag("local_non_increasing"), l0 * (1.0 + ROUNDING_TOL) - l1, format!("{l0:e} -> {l1:e}")));
        checks.push(Check::margin(tag("nonlocal_non_increasing"), n0 * (1.0 + ROUNDING_TOL) - n1, format!("{n0:e} -> {n1:e}")));
    }
    Ok(Report::new("polarize-fn", cfg.seed, rows, checks, json!({})))
}

/// `fk-polarization`: `λ(P_H Ω) ≤ λ(Ω)` per polarizer, strict when both
/// witness sets are nonempty.
pub fn run_fk_polarization(cfg: &ExperimentConfig) -> Result<Report> {
    let d = cfg.primary_domain()?.clone();
    require_polarizers(cfg)?;
    struct Case {
        omega: DomainMask,
        polarized: DomainMask,
        a: usize,
        b: usize,
        s_omega: Solve,
        s_pol: Option<Solve>,
    }
    let cases = collect(par::map_range(cfg.polarizers.len(), |k| {
        let pol = &cfg.polarizers[k];
        let lattice = symmetric_lattice(&cfg.lattice, pol, &d.domain)?;
        let omega = build_domain(&lattice, &d.domain)?;
        let polarized = polarize_mask(&omega, pol)?;
        let (a, b) = witness_sets(&omega, pol)?;
        let s_omega = solve_mask(cfg, &omega)?;
        // same mask, same solve: the gap is then exactly zero
        let s_pol = if polarized == omega { None } else { Some(solve_mask(cfg, &polarized)?) };
        Ok(Case { omega, polarized, a: a.count(), b: b.count(), s_omega, s_pol })
    }))?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut gaps = Vec::new();
    for (k, (pol, c)) in cfg.polarizers.iter().zip(&cases).enumerate() {
        let param = pol.to_string();
        let sp = c.s_pol.as_ref().unwrap_or(&c.s_omega);
        let (l0, l1) = (c.s_omega.result.lambda, sp.result.lambda);
        let gap = (l0 - l1) / l0;
        gaps.push((k as f64, gap));
        rows.push(solved_row(cfg, &c.s_omega, "fk-polarization", k, &d.name, &param, "omega"));
        let mut row = solved_row(cfg, sp, "fk-polarization", k, &d.name, &param, "polarized");
        row.gap = Some(gap);
        row.a_h = Some(c.a);
        row.b_h = Some(c.b);
        rows.push(row);
        let tag = |what: &str| format!("{what}[{param}]");
        checks.push(Check::margin(tag("inequality"), l0 + slack(cfg, l0) - l1, format!("λ(Ω) = {l0:e}, λ(P_H Ω) = {l1:e}")));
        if c.a > 0 && c.b > 0 {
            checks.push(Check::margin(tag("strict"), gap - cfg.check.margin_min, format!("relative gap {gap:e}")));
        }
        if c.a == 0 {
            checks.push(Check::flag(tag("fixed_gap_zero"), gap == 0.0, format!("relative gap {gap:e}")));
        }
        checks.extend(positivity(&format!("{param}/omega"), &c.omega, &c.s_omega));
        if let Some(s) = &c.s_pol {
            checks.extend(positivity(&format!("{param}/polarized"), &c.polarized, s));
        }
    }
    Ok(Report::new("fk-polarization", cfg.seed, rows, checks, json!({ "gaps": gaps.iter().map(|g| g.1).collect::<Vec<_>>() })))
}

/// The annulus with its hole moved to `(t, 0)`.
fn annulus_at(outer: f64, inner: f64, t: f64) -> ShapeSpec {
    ShapeSpec::Annulus { outer_radius: outer, inner_radius: inner, hole_center: [t, 0.0] }
}

/// `annulus-sweep`: `λ(B_R \ B_r(t e_1))` along the configured `t` values.
pub fn run_annulus_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    let d = cfg.primary_domain()?;
    let (outer, inner) = match &d.domain {
        DomainSpec::Shape(ShapeSpec::Annulus { outer_radius, inner_radius, .. }) => (*outer_radius, *inner_radius),
        _ => return Err(HarnessError::config("shape.kind", "annulus-sweep needs an annulus")),
    };
    let ts = &cfg.sweep.t;
    if ts.is_empty() {
        return Err(HarnessError::config("sweep.t", "required for annulus-sweep"));
    }
    if let Some(t) = ts.iter().find(|&&t| !(0.0..outer - inner).contains(&t)) {
        return Err(HarnessError::config("sweep.t", format!("t = {t} outside [0, R - r)")));
    }
    if 2.0 * inner / cfg.lattice.h < 3.0 {
        return Err(HarnessError::config("shape.inner_radius", "hole is less than 3 cells across"));
    }
    let lattice = lattice_for(&cfg.lattice, &d.domain)?;
    let mirror = cfg.sweep.mirror_check && *ts.last().expect("nonempty") > 0.0;
    let mut holes: Vec<f64> = ts.clone();
    if mirror {
        holes.push(-ts[ts.len() - 1]);
    }
    let solved = collect(par::map_range(holes.len(), |k| {
        let mask = build_domain(&lattice, &DomainSpec::Shape(annulus_at(outer, inner, holes[k])))?;
        Ok((mask.clone(), solve_mask(cfg, &mask)?))
    }))?;

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (k, (t, (mask, s))) in holes.iter().zip(&solved).enumerate() {
        let role = if k < ts.len() { "annulus" } else { "mirror" };
        rows.push(solved_row(cfg, s, "annulus-sweep", k, &d.name, &t.to_string(), role));
        checks.extend(positivity(&format!("t={t}"), mask, s));
    }
    let lambdas: Vec<f64> = solved[..ts.len()].iter().map(|(_, s)| s.result.lambda).collect();
    for k in 1..lambdas.len() {
        let step = (lambdas[k - 1] - lambdas[k]) / lambdas[k - 1];
        checks.push(Check::margin(
            format!("strictly_decreasing[{} -> {}]", ts[k - 1], ts[k]),
            step - cfg.sweep.margin_min,
            format!("relative step {step:e}"),
        ));
    }
    if ts[0] == 0.0 && lambdas.len() > 1 {
        let rest = lambdas[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::margin("concentric_is_max", lambdas[0] - rest, format!("λ(0) = {:e}", lambdas[0])));
    }
    if mirror {
        let (a, b) = (lambdas[lambdas.len() - 1], solved[ts.len()].1.result.lambda);
        let rel = (a - b).abs() / a;
        // both solves stop at the solver tolerance, not at rounding
        let tol = ROUNDING_TOL.max(slack(cfg, a) / a);
        checks.push(Check::margin("mirror_symmetric", tol - rel, format!("relative difference {rel:e}, tolerance {tol:e}")));
    }
    let curve: Vec<(f64, f64)> = ts.iter().copied().zip(lambdas.iter().copied()).collect();
    Ok(Report::new("annulus-sweep", cfg.seed, rows, checks, json!({ "curve": curve })))
}

/// Whether `mask` is `ball` shifted by a lattice vector.
fn is_translated(mask: &DomainMask, ball: &DomainMask) -> bool {
    if mask.count() != ball.count() || mask.is_empty() {
        return mask == ball;
    }
    let l = mask.lattice();
    let first = |m: &DomainMask| {
        let mi = l.multi_index(m.indices()[0]);
        [mi[0] as i64, mi[1] as i64]
    };
    let (a, b) = (first(mask), first(ball));
    ball.translate([a[0] - b[0], a[1] - b[1]]).is_ok_and(|t| &t == mask)
}

/// `fk-classical`: every domain against its equal-measure ball.
pub fn run_fk_classical(cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.domains.is_empty() {
        return Err(HarnessError::config("shape.kind", "no domain configured"));
    }
    struct Case {
        omega: DomainMask,
        ball: DomainMask,
        s_omega: Solve,
        s_ball: Option<Solve>,
    }
    let cases = collect(par::map_range(cfg.domains.len(), |k| {
        let d: &NamedDomain = &cfg.domains[k];
        let lattice = lattice_for(&cfg.lattice, &d.domain)?;
        let omega = build_domain(&lattice, &d.domain)?;
        let ball = equal_measure_ball(&omega)?;
        let s_omega = solve_mask(cfg, &omega)?;
        let s_ball = if ball == omega { None } else { Some(solve_mask(cfg, &ball)?) };
        Ok(Case { omega, ball, s_omega, s_ball })
    }))?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (k, (d, c)) in cfg.domains.iter().zip(&cases).enumerate() {
        let sb = c.s_ball.as_ref().unwrap_or(&c.s_omega);
        let (l0, l1) = (c.s_omega.result.lambda, sb.result.lambda);
        let gap = (l0 - l1) / l0;
        rows.push(solved_row(cfg, &c.s_omega, "fk-classical", k, &d.name, "", "omega"));
        let mut row = solved_row(cfg, sb, "fk-classical", k, &d.name, "", "ball");
        row.gap = Some(gap);
        rows.push(row);
        let tag = |what: &str| format!("{what}[{}]", d.name);
        checks.push(Check::margin(tag("inequality"), l0 + slack(cfg, l0) - l1, format!("λ(Ω) = {l0:e}, λ(Ω*) = {l1:e}")));
        if c.ball == c.omega {
            checks.push(Check::flag(tag("ball_gap_zero"), gap == 0.0, format!("relative gap {gap:e}")));
        } else if is_translated(&c.omega, &c.ball) {
            checks.push(Check::margin(tag("translated_ball"), slack(cfg, l0) / l0 - gap.abs(), format!("relative gap {gap:e}")));
        } else {
            checks.push(Check::margin(tag("strict"), gap - cfg.check.margin_min, format!("relative gap {gap:e}")));
        }
        checks.extend(positivity(&d.name, &c.omega, &c.s_omega));
        if let Some(s) = &c.s_ball {
            checks.extend(positivity(&format!("{}/ball", d.name), &c.ball, s));
        }
    }
    Ok(Report::new("fk-classical", cfg.seed, rows, checks, json!({})))
}

/// `schwarz`: greedy iterated polarization toward the rank-fill target.
pub fn run_schwarz(cfg: &ExperimentConfig) -> Result<Report> {
    let (u, name) = match &cfg.input {
        FunctionInput::File(path) => (read_function(path)?, "file".to_string()),
        _ => {
            let d = cfg.primary_domain()?;
            let lattice = lattice_for(&cfg.lattice, &d.domain)?;
            (domain_function(cfg, &lattice, &d.domain)?, d.name.clone())
        }
    };
    if u.is_zero() {
        return Err(HarnessError::config("input.function", "input function is identically zero"));
    }
    let s = &cfg.schwarz;
    let opts = SchwarzOptions { p: s.p, budget: s.budget, candidates: s.candidates, seed: cfg.seed };
    let trace = iterate_polarizations(&u, s.center, &opts)?;
    let values = collect(par::map_range(trace.functions.len(), |k| rayleigh(&trace.functions[k], &cfg.operator)))?;

    let mut rows = Vec::new();
    for (k, (dist, (r, local, nonlocal))) in trace.distances.iter().zip(&values).enumerate() {
        let mut row = ReportRow::new("schwarz", k, &name, k.to_string(), "step");
        row.nodes = trace.functions[k].support().count();
        row.distance = Some(*dist);
        row.lambda = Some(*r);
        row.local_energy = Some(*local);
        row.nonlocal_energy = Some(*nonlocal);
        rows.push(row);
    }
    let mut checks = Vec::new();
    let worst_dist = trace.distances.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    checks.push(Check::margin("distance_non_increasing", if worst_dist.is_finite() { worst_dist } else { 0.0 }, ""));
    let worst_r = values.windows(2).map(|w| w[0].0 * (1.0 + ROUNDING_TOL) - w[1].0).fold(f64::INFINITY, f64::min);
    checks.push(Check::margin("rayleigh_non_increasing", if worst_r.is_finite() { worst_r } else { 0.0 }, ""));

    // the target's support is the discrete ball Ω*
    let star = solve_mask(cfg, trace.target.mask())?;
    let last = values.last().expect("at least the input").0;
    let lstar = star.result.lambda;
    checks.push(Check::margin("final_above_ball", last - (lstar - slack(cfg, lstar)), format!("final {last:e}, λ(Ω*) = {lstar:e}")));
    rows.push(solved_row(cfg, &star, "schwarz", trace.functions.len(), &name, "", "ball"));

    let ratio = trace.distances.last().expect("nonempty") / trace.distances[0].max(f64::MIN_POSITIVE);
    let extra = json!({
        "distances": trace.distances,
        "final_ratio": if trace.distances[0] == 0.0 { 0.0 } else { ratio },
        "polarizers": trace.polarizers.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
    });
    Ok(Report::new("schwarz", cfg.seed, rows, checks, extra))
}
