use pdhl_harness::config::{Outer, Resolution};
use pdhl_harness::{ExperimentConfig, HarnessError, Kind};

fn invalid(text: &str) -> String {
    match ExperimentConfig::parse(text) {
        Err(HarnessError::ConfigInvalid(m)) => m,
        other => panic!("expected ConfigInvalid, got {other:?}"),
    }
}

#[test]
fn parses_lists_comments_and_defaults() {
    let cfg = ExperimentConfig::parse(
        "# scaling sweep\n\
         kind = scaling\n\
         domain.cells = 2   # two cells per side\n\
         sweep.eta = 0.125, 0.0625\n\
         sweep.p = 4,2\n\
         scaling.which = C\n",
    )
    .unwrap();
    assert_eq!(cfg.kind, Kind::Scaling);
    assert_eq!(cfg.dim, 2);
    assert_eq!(cfg.outer, Outer::Cells(2.0));
    assert_eq!(cfg.eta, vec![0.125, 0.0625]);
    assert_eq!(cfg.p, vec![4.0, 2.0]);
    assert_eq!(cfg.resolution, Resolution::PerHole(4));
    assert_eq!(cfg.points(), vec![(0.125, 0.125), (0.125, 0.0625)]);
    assert_eq!(cfg.nodes(0.125, 0.0625).unwrap(), 513);
}

#[test]
fn canonical_form_ignores_layout() {
    let a = ExperimentConfig::parse("kind = eig\nhole.shape = none\ngrid.n = 17\n").unwrap();
    let b = ExperimentConfig::parse("# same\ngrid.n=17\n\n  hole.shape =none\nkind= eig").unwrap();
    assert_eq!(a.canonical, b.canonical);
}

#[test]
fn command_kind_fills_in_and_must_agree() {
    let cfg = ExperimentConfig::parse_as("hole.shape = none\ngrid.n = 17\n", Some(Kind::Eig)).unwrap();
    assert_eq!(cfg.kind, Kind::Eig);
    let err = ExperimentConfig::parse_as("kind = rate\n", Some(Kind::Eig)).unwrap_err();
    assert!(err.to_string().contains("kind"));
    assert!(invalid("dim = 2\n").contains("missing key kind"));
}

#[test]
fn rejects_unknown_repeated_and_malformed_lines() {
    assert!(invalid("kind = eig\nsweep.etta = 0.1\n").contains("unknown key"));
    assert!(invalid("kind = eig\nkind = eig\n").contains("repeated"));
    assert!(invalid("kind = eig\njust words\n").contains("key = value"));
    assert!(invalid("kind = eig\nsweep.eta = 0.1, x\n").contains("cannot parse"));
    assert!(invalid("kind = eig\nsweep.eta =\n").contains("empty value"));
    assert!(invalid("kind = fly\n").contains("unknown kind"));
    assert!(invalid("kind = eig\ndim = 4\n").contains("dim"));
    assert!(invalid("kind = scaling\nscaling.which = E\n").contains("scaling.which"));
    assert!(invalid("kind = eig\nscaling.bumps = yes\n").contains("true or false"));
}

#[test]
fn rejects_inconsistent_settings() {
    assert!(invalid("kind = scaling\nsweep.p = 0.5\n").contains("exponent"));
    assert!(invalid("kind = eig\nsolver.tol = 2\n").contains("solver.tol"));
    assert!(invalid("kind = witness\n").contains("periodic_cell"));
    assert!(invalid("kind = rate\ndomain.periodic_cell = true\n").contains("box domain"));
    assert!(invalid("kind = rate\nhole.shape = none\ngrid.n = 33\n").contains("needs holes"));
    assert!(invalid("kind = eig\ngrid.n = 33\ngrid.nodes_per_hole = 4\n").contains("not both"));
    assert!(invalid("kind = eig\nhole.shape = none\n").contains("needs holes"));
    assert!(invalid("kind = eig\ndomain.lo = 1\ndomain.hi = 0\n").contains("must exceed"));
}

#[test]
fn resolution_guard_runs_before_any_solve() {
    // Hole diameters 3.9e-3 and 1.95e-3 against 4h = 3.9e-3.
    let m = invalid("kind = scaling\ngrid.n = 1025\nsweep.eta = 0.125, 0.0625\n");
    assert!(m.contains("eta = 0.0625"), "{m}");
    assert!(m.contains("not resolved"), "{m}");
    let m = invalid("kind = witness\ndomain.periodic_cell = true\ngrid.n = 64\nsweep.eta = 0.03125\n");
    assert!(m.contains("not resolved"), "{m}");
    assert!(invalid("kind = witness\ndomain.periodic_cell = true\ngrid.n = 129\n").contains("even"));
    // Resolved at 4 nodes per hole.
    ExperimentConfig::parse("kind = scaling\nsweep.eta = 0.125, 0.0625, 0.03125, 0.015625\n").unwrap();
}

#[test]
fn geometry_errors_surface_as_config_errors() {
    assert!(invalid("kind = rate\nsweep.eta = 0.7\n").contains("eta"));
    assert!(invalid("kind = rate\nhole.size = 0.3\n").contains("circumradius"));
    assert!(invalid("kind = rate\nhole.shape = ellipse\n").contains("semi_axes"));
    assert!(invalid("kind = rate\nhole.shape = ellipse\nhole.semi_axes = 0.1\n").contains("2 values"));
    let cfg = ExperimentConfig::parse("kind = rate\nhole.shape = ellipse\nhole.semi_axes = 0.1, 0.05\n").unwrap();
    // Inscribed diameter 2·0.05·ε·η = 1/640, four nodes across.
    assert_eq!(cfg.nodes(0.125, 0.125).unwrap(), 2561);
}
