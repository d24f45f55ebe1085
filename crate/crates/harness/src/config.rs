//! Line-based `key = value` configuration.
//!
//! ```text
//! # comment
//! kind = scaling
//! dim = 2
//! domain.cells = 6
//! hole.shape = ball
//! hole.size = 0.125
//! sweep.eps = 0.125
//! sweep.eta = 0.125, 0.0625, 0.03125
//! sweep.p = 4, 2
//! grid.nodes_per_hole = 4
//! scaling.which = A
//! ```
//!
//! Lists are comma separated. Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pdhl_core::constants_lab::Constant;
use pdhl_core::geometry::{AxisBox, HolePlan, HoleShape, OffsetRule, PerforatedDomain, ShapeRule};
use pdhl_core::sweeps::{box_nodes, cells_nodes, Trace};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Solve,
    Corrector,
    Rate,
    Scaling,
    Eig,
    Witness,
}

impl Kind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "solve" => Kind::Solve,
            "corrector" => Kind::Corrector,
            "rate" => Kind::Rate,
            "scaling" => Kind::Scaling,
            "eig" => Kind::Eig,
            "witness" => Kind::Witness,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Solve => "solve",
            Kind::Corrector => "corrector",
            Kind::Rate => "rate",
            Kind::Scaling => "scaling",
            Kind::Eig => "eig",
            Kind::Witness => "witness",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outer {
    /// Cube `(lo, hi)^d`.
    Cube { lo: f64, hi: f64 },
    /// Cube `(0, cells·ε)^d`.
    Cells(f64),
    /// Single periodic cell `[−ε/2, ε/2)^d`.
    PeriodicCell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolution {
    /// Nodes per axis (per cell for periodic cells).
    Nodes(usize),
    /// Nodes across the smallest hole diameter.
    PerHole(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub dim: usize,
    pub outer: Outer,
    /// `None` for hole-free domains.
    pub shape: Option<ShapeRule<f64>>,
    pub offsets: OffsetRule<f64>,
    pub hole_seed: u64,
    pub eps: Vec<f64>,
    pub eta: Vec<f64>,
    pub p: Vec<f64>,
    pub resolution: Resolution,
    pub tol: f64,
    pub which: Constant,
    pub random: usize,
    pub bumps: bool,
    pub witness: bool,
    pub trace: Trace,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Sorted `key = value` lines, the input of the config hash.
    pub canonical: String,
}

const KEYS: &[&str] = &[
    "kind",
    "dim",
    "seed",
    "domain.lo",
    "domain.hi",
    "domain.cells",
    "domain.periodic_cell",
    "hole.shape",
    "hole.size",
    "hole.semi_axes",
    "hole.min_size",
    "hole.max_size",
    "hole.offsets",
    "hole.amplitude",
    "hole.seed",
    "sweep.eps",
    "sweep.eta",
    "sweep.p",
    "grid.n",
    "grid.nodes_per_hole",
    "solver.tol",
    "scaling.which",
    "scaling.random",
    "scaling.bumps",
    "scaling.witness",
    "rate.trace",
    "output.dir",
];

struct Raw(BTreeMap<String, String>);

impl Raw {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| HarnessError::config(format!("{key}: cannot parse {v:?}"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    let s = s.trim();
                    s.parse::<f64>().map_err(|_| HarnessError::config(format!("{key}: cannot parse {s:?}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(HarnessError::config(format!("{key}: expected true or false, got {v:?}"))),
        }
    }
}

fn tokenize(text: &str) -> Result<Raw> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(HarnessError::config(format!("line {}: expected `key = value`", lineno + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(HarnessError::config(format!("line {}: unknown key {k:?}", lineno + 1)));
        }
        if v.is_empty() {
            return Err(HarnessError::config(format!("line {}: empty value for {k}", lineno + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(HarnessError::config(format!("line {}: repeated key {k}", lineno + 1)));
        }
    }
    Ok(Raw(map))
}

impl ExperimentConfig {
    pub fn from_file(path: &Path, kind: Option<Kind>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?;
        Self::parse_as(&text, kind)
    }

    /// Parses and validates, including the resolution guard of every point.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_as(text, None)
    }

    /// As [`parse`](Self::parse) with the kind fixed by the caller. A `kind`
    /// key in the text must then agree.
    pub fn parse_as(text: &str, kind: Option<Kind>) -> Result<Self> {
        let mut raw = tokenize(text)?;
        let given = match raw.get("kind") {
            Some(s) => Some(Kind::parse(s).ok_or_else(|| HarnessError::config(format!("unknown kind {s:?}")))?),
            None => None,
        };
        let kind = match (given, kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(HarnessError::config(format!("config says kind = {}, command is {}", a.name(), b.name())))
            }
            (_, Some(k)) | (Some(k), None) => k,
            (None, None) => return Err(HarnessError::config("missing key kind")),
        };
        raw.0.insert("kind".into(), kind.name().into());
        let canonical: String = raw.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let dim: usize = raw.num("dim")?.unwrap_or(2);
        if !(dim == 2 || dim == 3) {
            return Err(HarnessError::config(format!("dim must be 2 or 3, got {dim}")));
        }

        let outer = if raw.flag("domain.periodic_cell", false)? {
            Outer::PeriodicCell
        } else if let Some(c) = raw.num::<f64>("domain.cells")? {
            Outer::Cells(c)
        } else {
            Outer::Cube { lo: raw.num("domain.lo")?.unwrap_or(0.0), hi: raw.num("domain.hi")?.unwrap_or(1.0) }
        };

        let size: f64 = raw.num("hole.size")?.unwrap_or(0.125);
        let shape = match raw.get("hole.shape").unwrap_or("ball") {
            "none" => None,
            "ball" => Some(ShapeRule::Uniform(HoleShape::ball(size))),
            "square" => Some(ShapeRule::Uniform(HoleShape::Square { half_side: size })),
            "ellipse" => {
                let a = raw.list("hole.semi_axes")?.ok_or_else(|| HarnessError::config("ellipse needs hole.semi_axes"))?;
                if a.len() != dim {
                    return Err(HarnessError::config(format!("hole.semi_axes needs {dim} values")));
                }
                let mut semi_axes = [0.0; 3];
                semi_axes[..dim].copy_from_slice(&a);
                Some(ShapeRule::Uniform(HoleShape::AxisEllipse { semi_axes }))
            }
            "random_ball" => Some(ShapeRule::RandomBall {
                min_radius: raw.num("hole.min_size")?.unwrap_or(size / 2.0),
                max_radius: raw.num("hole.max_size")?.unwrap_or(size),
            }),
            s => return Err(HarnessError::config(format!("unknown hole.shape {s:?}"))),
        };
        let offsets = match raw.get("hole.offsets").unwrap_or("zero") {
            "zero" => OffsetRule::Zero,
            "random" => OffsetRule::Random { amplitude: raw.num("hole.amplitude")?.unwrap_or(0.1) },
            s => return Err(HarnessError::config(format!("unknown hole.offsets {s:?}"))),
        };

        let resolution = match (raw.num::<usize>("grid.n")?, raw.num::<usize>("grid.nodes_per_hole")?) {
            (Some(_), Some(_)) => return Err(HarnessError::config("give grid.n or grid.nodes_per_hole, not both")),
            (Some(n), None) => Resolution::Nodes(n),
            (None, Some(k)) => Resolution::PerHole(k),
            (None, None) => Resolution::PerHole(4),
        };
        let which = match raw.get("scaling.which").unwrap_or("A") {
            "A" => Constant::A,
            "B" => Constant::B,
            "C" => Constant::C,
            "D" => Constant::D,
            s => return Err(HarnessError::config(format!("scaling.which must be A, B, C or D, got {s:?}"))),
        };
        let trace_s = raw.get("rate.trace").unwrap_or("x");
        let trace = Trace::parse(trace_s).ok_or_else(|| HarnessError::config(format!("unknown rate.trace {trace_s:?}")))?;

        let cfg = ExperimentConfig {
            kind,
            dim,
            outer,
            shape,
            offsets,
            hole_seed: raw.num("hole.seed")?.unwrap_or(0),
            eps: raw.list("sweep.eps")?.unwrap_or_else(|| vec![0.125]),
            eta: raw.list("sweep.eta")?.unwrap_or_else(|| vec![0.125]),
            p: raw.list("sweep.p")?.unwrap_or_else(|| vec![2.0]),
            resolution,
            tol: raw.num("solver.tol")?.unwrap_or(pdhl_core::linsolve::SWEEP_TOL),
            which,
            random: raw.num("scaling.random")?.unwrap_or(20),
            bumps: raw.flag("scaling.bumps", true)?,
            witness: raw.flag("scaling.witness", true)?,
            trace,
            seed: raw.num("seed")?.unwrap_or(1),
            output_dir: raw.get("output.dir").map(PathBuf::from),
            canonical,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn plan(&self) -> Option<HolePlan<f64>> {
        self.shape.as_ref().map(|s| HolePlan {
            shapes: s.clone(),
            offsets: self.offsets.clone(),
            seed: self.hole_seed,
            offset_overrides: Vec::new(),
        })
    }

    /// Sweep points in config order: `ε` outer, `η` inner.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.eps.iter().flat_map(|&e| self.eta.iter().map(move |&h| (e, h))).collect()
    }

    pub fn outer_box(&self, eps: f64) -> pdhl_core::Result<AxisBox<f64>> {
        match self.outer {
            Outer::Cube { lo, hi } => AxisBox::cube(self.dim, lo, hi),
            Outer::Cells(c) => AxisBox::cube(self.dim, 0.0, c * eps),
            Outer::PeriodicCell => AxisBox::cube(self.dim, -eps / 2.0, eps / 2.0),
        }
    }

    /// Reference shape used for resolution rules and the periodic cell.
    pub fn reference_shape(&self) -> Option<HoleShape<f64>> {
        match self.shape.as_ref()? {
            ShapeRule::Uniform(s) => Some(s.clone()),
            ShapeRule::Alternating(a, b) => {
                Some(if a.inradius(self.dim) <= b.inradius(self.dim) { a.clone() } else { b.clone() })
            }
            ShapeRule::RandomBall { min_radius, .. } => Some(HoleShape::ball(*min_radius)),
        }
    }

    /// Nodes per axis of the box grid, or per cell for periodic cells.
    pub fn nodes(&self, eps: f64, eta: f64) -> pdhl_core::Result<usize> {
        match (self.resolution, self.reference_shape()) {
            (Resolution::Nodes(n), _) => Ok(n),
            (Resolution::PerHole(k), Some(shape)) => Ok(match self.outer {
                Outer::PeriodicCell => cells_nodes(self.dim, eps, eta, &shape, k),
                _ => box_nodes(&self.outer_box(eps)?, eps, eta, &shape, k),
            }),
            (Resolution::PerHole(_), None) => Err(pdhl_core::Error::InvalidGrid(
                "grid.nodes_per_hole needs holes; use grid.n".into(),
            )),
        }
    }

    /// Periodic-cell kinds and eig on a cell use no perforated box.
    pub fn uses_cell(&self) -> bool {
        self.kind == Kind::Witness || (self.kind == Kind::Eig && self.outer == Outer::PeriodicCell)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::ConfigInvalid(m));
        if self.eps.is_empty() || self.eta.is_empty() || self.p.is_empty() {
            return bad("sweep lists must be nonempty".into());
        }
        if let Some(p) = self.p.iter().find(|&&p| !(p >= 1.0) || !p.is_finite()) {
            return bad(format!("exponent p = {p} < 1"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("solver.tol = {} outside (0, 1)", self.tol));
        }
        if self.kind == Kind::Witness && self.outer != Outer::PeriodicCell {
            return bad("kind = witness needs domain.periodic_cell = true".into());
        }
        if self.outer == Outer::PeriodicCell && !self.uses_cell() {
            return bad(format!("kind = {} needs a box domain", self.kind.name()));
        }
        if self.shape.is_none() && !matches!(self.kind, Kind::Eig | Kind::Solve) {
            return bad(format!("kind = {} needs holes", self.kind.name()));
        }
        if let Outer::Cube { lo, hi } = self.outer {
            if !(hi > lo) {
                return bad(format!("domain.hi = {hi} must exceed domain.lo = {lo}"));
            }
        }
        for (eps, eta) in self.points() {
            self.check_point(eps, eta).map_err(|e| HarnessError::config(format!("eps = {eps}, eta = {eta}: {e}")))?;
        }
        Ok(())
    }

    /// Builds the geometry of one point and checks `≥ 4` nodes per hole
    /// diameter without allocating a grid.
    fn check_point(&self, eps: f64, eta: f64) -> pdhl_core::Result<()> {
        let n = self.nodes(eps, eta)?;
        if self.shape.is_none() {
            return if n >= 3 { Ok(()) } else { Err(pdhl_core::Error::InvalidGrid(format!("n = {n}"))) };
        }
        let (diameter, h) = if self.uses_cell() {
            let shape = self.reference_shape().unwrap();
            shape.validate(self.dim)?;
            if !(eta > 0.0 && eta < 0.5) {
                return Err(pdhl_core::Error::EtaOutOfRange(eta));
            }
            if n < 4 || n % 2 != 0 {
                return Err(pdhl_core::Error::InvalidGrid(format!("periodic cell needs an even node count ≥ 4, got {n}")));
            }
            (2.0 * shape.inradius(self.dim) * eps * eta, eps / n as f64)
        } else {
            let d = PerforatedDomain::build(self.outer_box(eps)?, eps, eta, self.plan().unwrap())?;
            if n < 3 {
                return Err(pdhl_core::Error::InvalidGrid(format!("n = {n}")));
            }
            match d.min_hole_diameter() {
                Some(diam) => (diam, d.outer.side(0) / (n - 1) as f64),
                None => return Ok(()),
            }
        };
        if diameter < 4.0 * h * (1.0 - 1e-9) {
            return Err(pdhl_core::Error::UnresolvedHoles { diameter, four_h: 4.0 * h });
        }
        Ok(())
    }
}
