//! Flat `section.key = value` configuration.
//!
//! Lines starting with `#` are comments. Every key must be consumed by
//! [`ExperimentConfig::parse`]; leftovers are reported as unknown keys.
//!
//! ```text
//! lattice.h = 0.0625
//! shape.kind = ball
//! shape.radius = 1
//! operator.p = 2
//! operator.s = 0.5
//! ```

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mixed_eig_core::{LocalForm, OperatorParams, Point, Polarizer, ShapeSpec, SolverOptions};

use crate::error::{HarnessError, Result};

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed key-value pairs with consumption tracking.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
    used: RefCell<BTreeSet<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Syntax { line: line_no, message: format!("expected `section.key = value`, got {line:?}") })?;
            let key = key.trim();
            let valid = key.split_once('.').is_some_and(|(s, k)| !s.is_empty() && !k.is_empty())
                && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
            if !valid {
                return Err(HarnessError::Syntax { line: line_no, message: format!("malformed key {key:?}") });
            }
            let entry = Entry { value: value.trim().to_string(), line: line_no };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(HarnessError::config(key, format!("duplicate key (first on line {})", prev.line)));
            }
        }
        Ok(Self { entries, used: RefCell::default() })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let e = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(&e.value)
    }

    fn typed<T>(&self, key: &str, what: &str, parse: impl FnOnce(&str) -> Option<T>) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => parse(v).map(Some).ok_or_else(|| HarnessError::config(key, format!("expected {what}, got {v:?}"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.typed(key, "a finite number", |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.typed(key, "a nonnegative integer", |v| v.parse().ok())
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.typed(key, "a nonnegative integer", |v| v.parse().ok())
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.typed(key, "true or false", |v| match v {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => None,
        })
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    /// `x` or `x, y`.
    pub fn point(&self, key: &str) -> Result<Option<Point>> {
        self.typed(key, "a point `x` or `x, y`", |v| {
            let xs = parse_list::<f64>(v)?;
            match xs[..] {
                [x] => Some([x, 0.0]),
                [x, y] => Some([x, y]),
                _ => None,
            }
        })
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.typed(key, "a comma-separated list of numbers", parse_list::<f64>)
    }

    pub fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        self.typed(key, what, |v| v.parse().ok())
    }

    pub fn required<T>(&self, key: &str, value: Option<T>) -> Result<T> {
        value.ok_or_else(|| HarnessError::config(key, "required key is missing"))
    }

    /// Distinct section names, sorted.
    pub fn sections(&self) -> BTreeSet<String> {
        self.entries.keys().filter_map(|k| k.split_once('.').map(|(s, _)| s.to_string())).collect()
    }

    /// First key never read.
    pub fn check_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().find(|(k, _)| !used.contains(*k)) {
            Some((k, e)) => Err(HarnessError::config(k.clone(), format!("unknown key (line {})", e.line))),
            None => Ok(()),
        }
    }
}

fn parse_list<T: FromStr>(v: &str) -> Option<Vec<T>> {
    let items: Option<Vec<T>> = v.split(',').map(|x| x.trim().parse().ok()).collect();
    items.filter(|xs| !xs.is_empty())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub dim: usize,
    pub h: f64,
    /// Extra margin around the domain's bounding box; `None` means
    /// `max(diam, 8h)`.
    pub padding: Option<f64>,
}

/// A domain: a continuum shape or a random connected blob.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Shape(ShapeSpec),
    /// `cells` nodes grown from `center`, kept within the square of half-width `radius`.
    Blob { cells: usize, center: Point, radius: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedDomain {
    pub name: String,
    pub domain: DomainSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckSpec {
    /// Slack for `≤` checks; `None` means `10 · tol_rel · λ`.
    pub tol: Option<f64>,
    /// Minimal relative gap for strictness checks.
    pub margin_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub t: Vec<f64>,
    pub margin_min: f64,
    /// Also solve the hole mirrored across the vertical axis at the last `t`.
    pub mirror_check: bool,
}

/// Source of the function fed to `polarize-fn` and `schwarz`.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionInput {
    /// First eigenfunction of the domain.
    Eigenfunction,
    /// Erosion-depth profile of the domain.
    Bump,
    /// Text grid function (see `GridFunction::to_text`).
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchwarzSpec {
    pub budget: usize,
    pub candidates: usize,
    pub p: f64,
    pub center: Point,
}

/// Fault injected into the validation battery to exercise its failure path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Drops the last node of every polarized mask.
    PolarizeMask,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidateSpec {
    pub chain_cases: usize,
    pub set_cases: usize,
    pub oracle_cases: usize,
    pub oracle_max_nodes: usize,
    pub gradient_cases: usize,
    pub fault: Fault,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub csv: bool,
    pub json: bool,
    pub plot: bool,
    pub timings: bool,
    /// File stem; defaults to the subcommand name.
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads; `0` uses all cores.
    pub workers: usize,
    pub lattice: LatticeSpec,
    /// Sections `shape` and `shape_<name>`, in section-name order.
    pub domains: Vec<NamedDomain>,
    pub operator: OperatorParams,
    pub solver: SolverOptions,
    pub polarizers: Vec<Polarizer>,
    pub check: CheckSpec,
    pub sweep: SweepSpec,
    pub input: FunctionInput,
    pub schwarz: SchwarzSpec,
    pub validate: ValidateSpec,
    pub output: OutputSpec,
}

const MAX_PART_DEPTH: usize = 8;

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_file_seeded(path, None)
    }

    /// Like [`from_file`](Self::from_file), with `seed` replacing `run.seed`.
    pub fn from_file_seeded(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse_seeded(&text, base, seed)
    }

    /// Parses `text`; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        Self::parse_seeded(text, base, None)
    }

    /// The seed feeds the solver start, blob domains without their own seed,
    /// and the validation streams.
    pub fn parse_seeded(text: &str, base: &Path, seed: Option<u64>) -> Result<Self> {
        let raw = RawConfig::parse(text)?;
        let configured = raw.u64("run.seed")?.unwrap_or(0);
        let seed = seed.unwrap_or(configured);
        let workers = raw.usize("run.workers")?.unwrap_or(0);

        let dim = raw.usize("lattice.dim")?.unwrap_or(2);
        if dim != 1 && dim != 2 {
            return Err(HarnessError::config("lattice.dim", "must be 1 or 2"));
        }
        let h = raw.required("lattice.h", raw.f64("lattice.h")?)?;
        if !(h > 0.0) {
            return Err(HarnessError::config("lattice.h", "must be positive"));
        }
        let padding = match raw.string("lattice.padding").as_deref() {
            None | Some("auto") => None,
            Some(v) => Some(v.parse::<f64>().ok().filter(|x| *x >= 0.0).ok_or_else(|| {
                HarnessError::config("lattice.padding", format!("expected `auto` or a nonnegative number, got {v:?}"))
            })?),
        };
        let lattice = LatticeSpec { dim, h, padding };

        let mut domains = Vec::new();
        for section in raw.sections() {
            if section == "shape" || section.starts_with("shape_") {
                let name = section.strip_prefix("shape_").unwrap_or(&section).to_string();
                let domain = parse_domain(&raw, &section, seed, 0)?;
                domains.push(NamedDomain { name, domain });
            }
        }
        // part sections are read through their parents; unreferenced ones stay unused

        let p = raw.required("operator.p", raw.f64("operator.p")?)?;
        let s = raw.required("operator.s", raw.f64("operator.s")?)?;
        let operator = OperatorParams {
            p,
            s,
            a: raw.f64("operator.a")?.unwrap_or(1.0),
            b: raw.f64("operator.b")?.unwrap_or(1.0),
            tail: raw.bool("operator.tail")?.unwrap_or(true),
            local_form: raw.parsed::<LocalForm>("operator.local_form", "`edge` or `euclidean`")?.unwrap_or_default(),
        };
        operator.validate().map_err(|e| HarnessError::config("operator", e.to_string()))?;

        let defaults = SolverOptions::for_p(p);
        let solver = SolverOptions {
            tol_rel: raw.f64("solver.tol_rel")?.unwrap_or(defaults.tol_rel),
            max_iter: raw.usize("solver.max_iter")?.unwrap_or(defaults.max_iter),
            step_init: raw.f64("solver.step_init")?.unwrap_or(defaults.step_init),
            backtrack_factor: raw.f64("solver.backtrack_factor")?.unwrap_or(defaults.backtrack_factor),
            grad_tol: raw.f64("solver.grad_tol")?.unwrap_or(defaults.grad_tol),
            seed,
        };
        solver.validate().map_err(|e| HarnessError::config("solver", e.to_string()))?;

        let polarizers = match raw.string("polarizer.list") {
            None => Vec::new(),
            Some(list) => list
                .split(';')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<Polarizer>().map_err(|e| HarnessError::config("polarizer.list", e.to_string())))
                .collect::<Result<_>>()?,
        };

        let check = CheckSpec { tol: raw.f64("check.tol")?, margin_min: raw.f64("check.margin_min")?.unwrap_or(1e-3) };

        let sweep = SweepSpec {
            t: raw.f64_list("sweep.t")?.unwrap_or_default(),
            margin_min: raw.f64("sweep.margin_min")?.unwrap_or(1e-3),
            mirror_check: raw.bool("sweep.mirror_check")?.unwrap_or(true),
        };
        if sweep.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HarnessError::config("sweep.t", "values must be strictly increasing"));
        }

        let input = match raw.string("input.function").as_deref() {
            None | Some("eigenfunction") => FunctionInput::Eigenfunction,
            Some("bump") => FunctionInput::Bump,
            Some("file") => {
                let path = raw.required("input.path", raw.string("input.path"))?;
                FunctionInput::File(base.join(path))
            }
            Some(v) => return Err(HarnessError::config("input.function", format!("expected eigenfunction, bump or file, got {v:?}"))),
        };

        let schwarz = SchwarzSpec {
            budget: raw.usize("schwarz.budget")?.unwrap_or(50),
            candidates: raw.usize("schwarz.candidates")?.unwrap_or(16),
            p: raw.f64("schwarz.p")?.unwrap_or(2.0),
            center: raw.point("schwarz.center")?.unwrap_or([0.0, 0.0]),
        };
        if schwarz.candidates == 0 {
            return Err(HarnessError::config("schwarz.candidates", "must be at least 1"));
        }

        let validate = ValidateSpec {
            chain_cases: raw.usize("validate.chain_cases")?.unwrap_or(200),
            set_cases: raw.usize("validate.set_cases")?.unwrap_or(1000),
            oracle_cases: raw.usize("validate.oracle_cases")?.unwrap_or(20),
            oracle_max_nodes: raw.usize("validate.oracle_max_nodes")?.unwrap_or(400),
            gradient_cases: raw.usize("validate.gradient_cases")?.unwrap_or(20),
            fault: match raw.string("validate.fault").as_deref() {
                None | Some("none") => Fault::None,
                Some("polarize_mask") => Fault::PolarizeMask,
                Some(v) => return Err(HarnessError::config("validate.fault", format!("expected none or polarize_mask, got {v:?}"))),
            },
        };

        let output = OutputSpec {
            csv: raw.bool("output.csv")?.unwrap_or(true),
            json: raw.bool("output.json")?.unwrap_or(true),
            plot: raw.bool("output.plot")?.unwrap_or(false),
            timings: raw.bool("output.timings")?.unwrap_or(false),
            name: raw.string("output.name"),
        };

        raw.check_unused()?;
        Ok(Self { seed, workers, lattice, domains, operator, solver, polarizers, check, sweep, input, schwarz, validate, output })
    }

    /// The `shape` section, or the first domain.
    pub fn primary_domain(&self) -> Result<&NamedDomain> {
        self.domains
            .iter()
            .find(|d| d.name == "shape")
            .or_else(|| self.domains.first())
            .ok_or_else(|| HarnessError::config("shape.kind", "no domain configured"))
    }
}

fn parse_domain(raw: &RawConfig, section: &str, seed: u64, depth: usize) -> Result<DomainSpec> {
    let key = |k: &str| format!("{section}.{k}");
    let kind = raw.required(&key("kind"), raw.string(&key("kind")))?;
    let req_f64 = |k: &str| -> Result<f64> { raw.required(&key(k), raw.f64(&key(k))?) };
    let req_point = |k: &str| -> Result<Point> { raw.required(&key(k), raw.point(&key(k))?) };
    let shape = match kind.as_str() {
        "ball" => ShapeSpec::Ball { center: raw.point(&key("center"))?.unwrap_or([0.0, 0.0]), radius: req_f64("radius")? },
        "annulus" => ShapeSpec::Annulus {
            outer_radius: req_f64("outer_radius")?,
            inner_radius: req_f64("inner_radius")?,
            hole_center: raw.point(&key("hole_center"))?.unwrap_or([0.0, 0.0]),
        },
        "rectangle" => ShapeSpec::Rectangle { lo: req_point("lo")?, hi: req_point("hi")? },
        "union" | "difference" => {
            if depth >= MAX_PART_DEPTH {
                return Err(HarnessError::config(key("parts"), "parts nested too deeply"));
            }
            let names = raw.required(&key("parts"), raw.string(&key("parts")))?;
            let parts = names
                .split(',')
                .map(|n| match parse_domain(raw, &format!("part_{}", n.trim()), seed, depth + 1)? {
                    DomainSpec::Shape(s) => Ok(s),
                    DomainSpec::Blob { .. } => Err(HarnessError::config(key("parts"), "blobs cannot be combined")),
                })
                .collect::<Result<Vec<_>>>()?;
            if kind == "union" {
                ShapeSpec::Union(parts)
            } else {
                let mut it = parts.into_iter();
                let first = it.next().ok_or_else(|| HarnessError::config(key("parts"), "empty part list"))?;
                let rest: Vec<_> = it.collect();
                if rest.is_empty() {
                    return Err(HarnessError::config(key("parts"), "difference needs at least two parts"));
                }
                ShapeSpec::Difference(Box::new(first), Box::new(ShapeSpec::Union(rest)))
            }
        }
        "blob" => {
            let cells = raw.required(&key("cells"), raw.usize(&key("cells"))?)?;
            let radius = req_f64("radius")?;
            let center = raw.point(&key("center"))?.unwrap_or([0.0, 0.0]);
            let seed = raw.u64(&key("seed"))?.unwrap_or(seed);
            if cells == 0 || !(radius > 0.0) {
                return Err(HarnessError::config(key("cells"), "blob needs cells ≥ 1 and radius > 0"));
            }
            return Ok(DomainSpec::Blob { cells, center, radius, seed });
        }
        other => return Err(HarnessError::config(key("kind"), format!("unknown shape kind {other:?}"))),
    };
    shape.validate().map_err(|e| HarnessError::config(key("kind"), e.to_string()))?;
    Ok(DomainSpec::Shape(shape))
}
