use std::path::PathBuf;

use pdhl_harness::{run_experiment, ExperimentConfig, Kind, RunOptions};

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("run").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn opts(name: &str, threads: usize) -> RunOptions {
    RunOptions { threads: Some(threads), out: Some(scratch(name)), seed: None }
}

#[test]
fn hole_free_square_eigenvalue() {
    let cfg = ExperimentConfig::parse_as("hole.shape = none\ngrid.n = 257\n", Some(Kind::Eig)).unwrap();
    let report = run_experiment(&cfg, &opts("eig", 1)).unwrap();
    let l: f64 = report.column("lambda1").unwrap()[0].parse().unwrap();
    let two_pi2 = 2.0 * std::f64::consts::PI.powi(2);
    assert!((l - two_pi2).abs() / two_pi2 < 0.01, "{l}");
    assert_eq!(report.column("status").unwrap(), vec!["ok"]);
    assert_eq!(report.failed_rows, 0);
    let csv = std::fs::read_to_string(&report.table).unwrap();
    assert!(csv.starts_with("dim,eps,eta,n,dofs,lambda1,iterations,status,fit_slope\n"));
}

const SMALL_SCALING: &str = "kind = scaling
domain.cells = 2
sweep.eta = 0.125, 0.0625, 0.03125
sweep.p = 4, 2
scaling.random = 3
scaling.witness = false
";

#[test]
fn rerun_and_thread_count_do_not_change_output() {
    let cfg = ExperimentConfig::parse(SMALL_SCALING).unwrap();
    let a = run_experiment(&cfg, &opts("det_a", 1)).unwrap();
    let b = run_experiment(&cfg, &opts("det_b", 1)).unwrap();
    let c = run_experiment(&cfg, &opts("det_c", 3)).unwrap();
    assert_eq!(a.rows.len(), 6);
    for other in [&b, &c] {
        for f in ["scaling.csv", "fits.csv", "manifest.txt"] {
            let x = std::fs::read(a.out_dir.join(f)).unwrap();
            let y = std::fs::read(other.out_dir.join(f)).unwrap();
            assert!(x == y, "{f} differs");
        }
        assert_eq!(a.config_hash, other.config_hash);
    }
    // Rows follow config order: p inner, eta outer.
    let ps = a.column("p").unwrap();
    assert_eq!(ps[0], ps[2]);
    assert_ne!(ps[0], ps[1]);
}

#[test]
fn seed_changes_random_trials_and_manifest() {
    let cfg = ExperimentConfig::parse(SMALL_SCALING).unwrap();
    let a = run_experiment(&cfg, &opts("seed_a", 1)).unwrap();
    let mut o = opts("seed_b", 1);
    o.seed = Some(7);
    let b = run_experiment(&cfg, &o).unwrap();
    let ma = std::fs::read_to_string(&a.manifest).unwrap();
    let mb = std::fs::read_to_string(&b.manifest).unwrap();
    assert!(ma.contains("seed = 1\n") && mb.contains("seed = 7\n"));
    assert_eq!(a.config_hash, b.config_hash);
    assert_ne!(a.column("estimate"), b.column("estimate"));
}

#[test]
fn scaling_sweep_reports_slope_and_status() {
    let text = "kind = scaling
sweep.eps = 0.125
sweep.eta = 0.125, 0.0625, 0.03125, 0.015625
sweep.p = 4
domain.cells = 2
scaling.which = A
scaling.random = 3
scaling.bumps = false
";
    let cfg = ExperimentConfig::parse(text).unwrap();
    let report = run_experiment(&cfg, &opts("scaling", 1)).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert!(report.column("status").unwrap().iter().all(|s| *s == "ok"));
    let slopes = report.column("fit_slope").unwrap();
    assert!(slopes.iter().all(|s| *s == slopes[0] && !s.is_empty()));
    assert_eq!(report.fits.len(), 1);
    assert!(report.fits[0].plot.exists());
    // A₄ grows as η shrinks.
    assert!(report.fits[0].fit.slope > 0.0);
    let fits = std::fs::read_to_string(report.out_dir.join("fits.csv")).unwrap();
    assert_eq!(fits.lines().count(), 2);
    let manifest = std::fs::read_to_string(&report.manifest).unwrap();
    assert!(manifest.contains("schema = scaling/1\n"));
    assert!(manifest.contains(&format!("config_sha256 = {}\n", report.config_hash)));
    assert!(!manifest.contains("time"));
}

#[test]
fn unconverged_points_become_error_rows() {
    let text = "hole.shape = none\ngrid.n = 33\nsolver.tol = 1e-300\nsweep.eta = 0.125, 0.0625\n";
    let cfg = ExperimentConfig::parse_as(text, Some(Kind::Solve)).unwrap();
    let report = run_experiment(&cfg, &opts("fail", 1)).unwrap();
    assert_eq!(report.failed_rows, 2);
    for s in report.column("status").unwrap() {
        assert!(s.starts_with("error: not converged"), "{s}");
    }
    assert_eq!(report.column("iterations").unwrap(), vec!["", ""]);
}

#[test]
fn solve_and_corrector_write_snapshots() {
    let cfg = ExperimentConfig::parse_as("domain.cells = 2\n", Some(Kind::Solve)).unwrap();
    let report = run_experiment(&cfg, &opts("solve", 1)).unwrap();
    let name = report.column("snapshot").unwrap()[0].to_string();
    let snap = pdhl_core::snapshot::Snapshot::load(&report.out_dir.join(name)).unwrap();
    assert_eq!(snap.n, 257);
    // Harmonic with trace x: u = x away from the holes.
    let top_right = snap.values[snap.values.len() - 1];
    assert!((top_right - 0.25).abs() < 1e-12);

    let cfg = ExperimentConfig::parse_as("domain.cells = 2\nsweep.p = 2, 4\n", Some(Kind::Corrector)).unwrap();
    let report = run_experiment(&cfg, &opts("corrector", 1)).unwrap();
    assert_eq!(report.rows.len(), 2);
    let chi: Vec<f64> = report.column("chi_minus_one").unwrap().iter().map(|s| s.parse().unwrap()).collect();
    assert!(chi.iter().all(|&c| c > 0.0));
    assert!(report.column("fit_slope").unwrap().iter().all(|s| s.is_empty()));
}

#[test]
fn witness_cell_rows() {
    let text = "domain.periodic_cell = true\nsweep.eta = 0.125, 0.0625, 0.03125\ngrid.nodes_per_hole = 4\n";
    let cfg = ExperimentConfig::parse_as(text, Some(Kind::Witness)).unwrap();
    let report = run_experiment(&cfg, &opts("witness", 1)).unwrap();
    let l: Vec<f64> = report.column("lambda1").unwrap().iter().map(|s| s.parse().unwrap()).collect();
    assert!(l[0] > l[1] && l[1] > l[2], "{l:?}");
    assert!(report.fits[0].fit.slope < 0.0);
}
