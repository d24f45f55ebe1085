//! Sweep execution and report files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use pdhl_core::constants_lab::{fit_exponent, ScalingFit, XTransform};
use pdhl_core::correctors::{build_corrector, corrector_norm_report, ProfileSet};
use pdhl_core::geometry::PerforatedDomain;
use pdhl_core::grid::{discrete_gradient, lp_norm, rasterize, FieldRef, GridMask, NodeFlag};
use pdhl_core::intermediate::solve_dirichlet;
use pdhl_core::snapshot::Snapshot;
use pdhl_core::sweeps::{cell_point, domain_eigenvalue, rate_point, scaling_point, TrialFamily};

use crate::config::{ExperimentConfig, Kind, Outer};
use crate::error::{HarnessError, Result};
use crate::plot::emit_plot;

/// Bumped whenever a CSV column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

const KEY_COLUMNS: [&str; 4] = ["dim", "eps", "eta", "n"];

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitRow {
    pub eps: f64,
    pub p: Option<f64>,
    pub quantity: &'static str,
    pub fit: ScalingFit,
    pub points: usize,
    pub plot: PathBuf,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub out_dir: PathBuf,
    pub table: PathBuf,
    pub header: Vec<String>,
    /// Cell text as written to the CSV.
    pub rows: Vec<Vec<String>>,
    pub failed_rows: usize,
    pub fits: Vec<FitRow>,
    pub config_hash: String,
    pub manifest: PathBuf,
}

impl Report {
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One CSV row before the fit column is known.
struct Row {
    eps_index: usize,
    eta: f64,
    p: Option<f64>,
    keys: Vec<String>,
    outcome: std::result::Result<(Vec<String>, Option<f64>), String>,
}

enum TaskError {
    Core(pdhl_core::Error),
    Output(HarnessError),
}

impl From<pdhl_core::Error> for TaskError {
    fn from(e: pdhl_core::Error) -> Self {
        TaskError::Core(e)
    }
}

type Cells = (Vec<String>, Option<f64>);

fn value_columns(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Eig => &["dofs", "lambda1", "iterations"],
        Kind::Solve => &["dofs", "iterations", "residual", "grad_l2", "snapshot"],
        Kind::Corrector => &["p", "chi_minus_one", "gradient", "max_cell_gradient", "snapshot"],
        Kind::Rate => &["p", "sigma", "error", "chi_minus_one", "max_cell_gradient", "iterations"],
        Kind::Scaling => &[
            "p",
            "which",
            "sigma",
            "regime",
            "radius",
            "estimate",
            "witness_ratio",
            "max_coarse_ratio",
            "trials",
        ],
        Kind::Witness => &["p", "lambda1", "eig_iterations", "psi_mean", "psi_grad"],
    }
}

/// Column fitted against `η`, if the kind has one.
fn fitted_quantity(cfg: &ExperimentConfig) -> Option<&'static str> {
    match cfg.kind {
        Kind::Eig if cfg.shape.is_some() => Some("lambda1"),
        Kind::Rate => Some("error"),
        Kind::Scaling => Some("estimate"),
        Kind::Witness => Some("lambda1"),
        _ => None,
    }
}

fn transform(dim: usize) -> XTransform {
    if dim == 2 {
        XTransform::LogLogInv
    } else {
        XTransform::Log
    }
}

fn build_domain(cfg: &ExperimentConfig, eps: f64, eta: f64) -> pdhl_core::Result<PerforatedDomain<f64>> {
    let plan = cfg.plan().ok_or_else(|| pdhl_core::Error::InvalidArguments("no holes configured".into()))?;
    PerforatedDomain::build(cfg.outer_box(eps)?, eps, eta, plan)
}

fn build_mask(cfg: &ExperimentConfig, eps: f64, eta: f64, n: usize) -> pdhl_core::Result<GridMask<f64>> {
    if cfg.outer == Outer::PeriodicCell {
        let shape = cfg.reference_shape().expect("validated");
        return GridMask::periodic_cell(cfg.dim, eps, eta, &shape, n);
    }
    if cfg.shape.is_none() {
        let b = cfg.outer_box(eps)?;
        return GridMask::unperforated_box(cfg.dim, b.lo[0], b.hi[0], n);
    }
    rasterize(&build_domain(cfg, eps, eta)?, n)
}

fn save(snap: Snapshot, dir: &Path, name: String) -> std::result::Result<String, TaskError> {
    let path = dir.join(&name);
    snap.save(&path).map_err(|e| TaskError::Output(HarnessError::output(&path, e)))?;
    Ok(name)
}

/// Rows of one `(ε, η)` point, one per exponent where the kind has one.
fn run_point(
    cfg: &ExperimentConfig,
    index: usize,
    eps: f64,
    eta: f64,
    dir: &Path,
) -> std::result::Result<Vec<(Option<f64>, Cells)>, TaskError> {
    let n = cfg.nodes(eps, eta)?;
    let tag = format!("{}_{index:03}.pdhl", cfg.kind.name());
    Ok(match cfg.kind {
        Kind::Eig => {
            let mask = build_mask(cfg, eps, eta, n)?;
            let (l, it) = domain_eigenvalue(&mask, cfg.tol)?;
            vec![(None, (vec![mask.ndofs().to_string(), num(l), it.to_string()], Some(l)))]
        }
        Kind::Solve => {
            let mask = build_mask(cfg, eps, eta, n)?;
            let g: Vec<f64> = (0..mask.len())
                .map(|i| if mask.flags[i] == NodeFlag::OuterBoundary { cfg.trace.eval(&mask.coord(i)) } else { 0.0 })
                .collect();
            let zero = vec![0.0; mask.len()];
            let (u, rep) = solve_dirichlet(&mask, &g, &zero, cfg.tol)?;
            let grad = lp_norm(FieldRef::Face(&discrete_gradient(&u, &mask)), 2.0, &mask)?;
            let snap = save(Snapshot::node(&mask, &u)?, dir, tag)?;
            let cells = vec![
                mask.ndofs().to_string(),
                rep.iterations.to_string(),
                num(rep.final_residual),
                num(grad),
                snap,
            ];
            vec![(None, (cells, None))]
        }
        Kind::Corrector => {
            let domain = build_domain(cfg, eps, eta)?;
            let mask = rasterize(&domain, n)?;
            let chi = build_corrector(&domain, &mask, &ProfileSet::analytic())?;
            let snap = save(Snapshot::node(&mask, &chi.values)?, dir, tag)?;
            let mut out = Vec::with_capacity(cfg.p.len());
            for &p in &cfg.p {
                let r = corrector_norm_report(&chi, &domain, &mask, p)?;
                let cells =
                    vec![num(p), num(r.chi_minus_one), num(r.gradient), num(r.max_cell_gradient()), snap.clone()];
                out.push((Some(p), (cells, None)));
            }
            out
        }
        Kind::Rate => {
            let domain = build_domain(cfg, eps, eta)?;
            let mut out = Vec::with_capacity(cfg.p.len());
            for &p in &cfg.p {
                let r = rate_point(&domain, n, cfg.trace, &ProfileSet::analytic(), p, cfg.tol)?;
                let cells = vec![
                    num(p),
                    num(r.sigma),
                    num(r.error),
                    num(r.chi_minus_one),
                    num(r.max_cell_gradient),
                    r.iterations.to_string(),
                ];
                out.push((Some(p), (cells, Some(r.error))));
            }
            out
        }
        Kind::Scaling => {
            let domain = build_domain(cfg, eps, eta)?;
            let family = TrialFamily { random: cfg.random, bumps: cfg.bumps, witness: cfg.witness, seed: cfg.seed };
            scaling_point(&domain, n, cfg.which, &cfg.p, family, cfg.tol)?
                .into_iter()
                .map(|r| {
                    let cells = vec![
                        num(r.p),
                        r.which.to_string(),
                        num(r.sigma),
                        r.regime.to_string(),
                        num(r.radius),
                        num(r.estimate),
                        opt(r.witness_ratio),
                        opt(r.max_coarse_ratio),
                        r.trials.to_string(),
                    ];
                    (Some(r.p), (cells, Some(r.estimate)))
                })
                .collect()
        }
        Kind::Witness => {
            let shape = cfg.reference_shape().expect("validated");
            let mut out = Vec::with_capacity(cfg.p.len());
            for &p in &cfg.p {
                let r = cell_point(cfg.dim, eps, eta, &shape, n, p, cfg.tol)?;
                let cells =
                    vec![num(p), num(r.lambda1), r.eig_iterations.to_string(), num(r.psi_mean), num(r.psi_grad)];
                out.push((Some(p), (cells, Some(r.lambda1))));
            }
            out
        }
    })
}

/// Exponents a failed point would have produced rows for.
fn row_ps(cfg: &ExperimentConfig) -> Vec<Option<f64>> {
    match cfg.kind {
        Kind::Eig | Kind::Solve => vec![None],
        _ => cfg.p.iter().map(|&p| Some(p)).collect(),
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(HarnessError::config("--threads must be positive"));
        }
        b = b.num_threads(t);
    }
    b.build().map_err(|e| HarnessError::config(format!("thread pool: {e}")))
}

fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::output(path, e))?;
    w.write_record(header).map_err(|e| HarnessError::output(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| HarnessError::output(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::output(path, e))
}

/// Runs every sweep point of `cfg`, then writes `<kind>.csv`, `fits.csv`,
/// one SVG per fitted group and `manifest.txt` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let out_dir = opts.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("pdhl-out"));
    std::fs::create_dir_all(&out_dir).map_err(|e| HarnessError::output(&out_dir, e))?;

    let points: Vec<(usize, (f64, f64))> = cfg.points().into_iter().enumerate().collect();
    let eps_index = |eps: f64| cfg.eps.iter().position(|&e| e == eps).unwrap_or(0);
    let results = pool(opts.threads)?.install(|| {
        points
            .par_iter()
            .map(|&(i, (eps, eta))| (i, eps, eta, run_point(&cfg, i, eps, eta, &out_dir)))
            .collect::<Vec<_>>()
    });

    let mut rows = Vec::new();
    for (_, eps, eta, res) in results {
        let n = cfg.nodes(eps, eta).map(|n| n.to_string()).unwrap_or_default();
        let keys = vec![cfg.dim.to_string(), num(eps), num(eta), n];
        let base = |p: Option<f64>, outcome| Row { eps_index: eps_index(eps), eta, p, keys: keys.clone(), outcome };
        match res {
            Ok(list) => rows.extend(list.into_iter().map(|(p, cells)| base(p, Ok(cells)))),
            Err(TaskError::Output(e)) => return Err(e),
            Err(TaskError::Core(e)) => {
                let msg = e.to_string();
                rows.extend(row_ps(&cfg).into_iter().map(|p| base(p, Err(msg.clone()))));
            }
        }
    }

    let fits = fit_groups(&cfg, &rows, &out_dir)?;
    let width = value_columns(cfg.kind).len();
    let mut header: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(value_columns(cfg.kind).iter().map(|s| s.to_string()));
    header.push("status".into());
    header.push("fit_slope".into());

    let mut failed_rows = 0;
    let mut table = Vec::with_capacity(rows.len());
    for r in &rows {
        let mut cells = r.keys.clone();
        match &r.outcome {
            Ok((v, _)) => {
                cells.extend(v.iter().cloned());
                cells.push("ok".into());
            }
            Err(msg) => {
                failed_rows += 1;
                let mut blank = vec![String::new(); width];
                if let (Some(p), true) = (r.p, value_columns(cfg.kind).first() == Some(&"p")) {
                    blank[0] = num(p);
                }
                cells.extend(blank);
                cells.push(format!("error: {msg}"));
            }
        }
        let slope = fits.iter().find(|f| cfg.eps[r.eps_index] == f.eps && f.p == r.p).map(|f| num(f.fit.slope));
        cells.push(slope.unwrap_or_default());
        table.push(cells);
    }

    let table_path = out_dir.join(format!("{}.csv", cfg.kind.name()));
    write_csv(&table_path, &header, &table)?;
    let fits_path = out_dir.join("fits.csv");
    let fit_header: Vec<String> = ["eps", "p", "quantity", "transform", "slope", "intercept", "r_squared", "points"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let fit_rows: Vec<Vec<String>> = fits
        .iter()
        .map(|f| {
            vec![
                num(f.eps),
                opt(f.p),
                f.quantity.to_string(),
                match transform(cfg.dim) {
                    XTransform::Log => "ln eta".into(),
                    XTransform::LogLogInv => "ln|ln eta|".into(),
                },
                num(f.fit.slope),
                num(f.fit.intercept),
                num(f.fit.r_squared),
                f.points.to_string(),
            ]
        })
        .collect();
    write_csv(&fits_path, &fit_header, &fit_rows)?;

    let config_hash = config_hash(&cfg);
    let manifest = out_dir.join("manifest.txt");
    let text = format!(
        "tool = pdhl-harness {}\nschema = {}/{}\nconfig_sha256 = {}\nseed = {}\nrows = {}\nfailed_rows = {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.kind.name(),
        SCHEMA_VERSION,
        config_hash,
        cfg.seed,
        table.len(),
        failed_rows,
    );
    std::fs::write(&manifest, text).map_err(|e| HarnessError::output(&manifest, e))?;

    Ok(Report { out_dir, table: table_path, header, rows: table, failed_rows, fits, config_hash, manifest })
}

/// Fits the kind's quantity against `η` per `(ε, p)` group with at least
/// three successful rows, and plots every group that has any.
fn fit_groups(cfg: &ExperimentConfig, rows: &[Row], dir: &Path) -> Result<Vec<FitRow>> {
    let Some(quantity) = fitted_quantity(cfg) else {
        return Ok(Vec::new());
    };
    let t = transform(cfg.dim);
    let ps: Vec<Option<f64>> = row_ps(cfg);
    let mut out = Vec::new();
    for (ei, &eps) in cfg.eps.iter().enumerate() {
        for (pi, &p) in ps.iter().enumerate() {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.eps_index == ei && r.p == p)
                .filter_map(|r| r.outcome.as_ref().ok().and_then(|(_, y)| y.map(|y| (r.eta, y))))
                .filter(|&(_, y)| y > 0.0 && y.is_finite())
                .collect();
            if pts.is_empty() {
                continue;
            }
            let fit = if pts.len() >= 3 { fit_exponent(&pts, t).ok() } else { None };
            let plot = dir.join(format!("{}_{ei}_{pi}.svg", cfg.kind.name()));
            emit_plot(fit.as_ref(), &pts, t, &plot)?;
            if let Some(fit) = fit {
                out.push(FitRow { eps, p, quantity, fit, points: pts.len(), plot });
            }
        }
    }
    Ok(out)
}
