use pdhl_core::constants_lab::{fit_exponent, XTransform};
use pdhl_harness::{emit_plot, HarnessError};

fn path(name: &str) -> std::path::PathBuf {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("plot");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn quadratic_points_show_slope_two() {
    let pts = [(1.0, 1.0), (2.0, 4.0), (3.0, 9.0)];
    let fit = fit_exponent(&pts, XTransform::Log).unwrap();
    let p = path("square.svg");
    emit_plot(Some(&fit), &pts, XTransform::Log, &p).unwrap();
    let svg = std::fs::read_to_string(&p).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("slope 2.00"));
    assert_eq!(svg.matches("<circle").count(), 3);
    assert_eq!(svg.matches(r#"class="fit""#).count(), 1);
}

#[test]
fn single_point_is_scatter_only() {
    let p = path("single.svg");
    emit_plot(None, &[(0.125, 0.7)], XTransform::LogLogInv, &p).unwrap();
    let svg = std::fs::read_to_string(&p).unwrap();
    assert_eq!(svg.matches("<circle").count(), 1);
    assert!(!svg.contains(r#"class="fit""#));
    assert!(!svg.contains("slope"));
    assert!(!svg.contains("NaN"));
}

#[test]
fn empty_input_and_bad_path_are_errors() {
    let e = emit_plot(None, &[], XTransform::Log, &path("empty.svg")).unwrap_err();
    assert!(matches!(e, HarnessError::OutputUnwritable(_)));
    let missing = path("no_such_dir").join("x.svg");
    let e = emit_plot(None, &[(1.0, 1.0)], XTransform::Log, &missing).unwrap_err();
    assert!(matches!(e, HarnessError::OutputUnwritable(_)));
}
