use std::sync::OnceLock;

use proptest::prelude::*;

use pdhl_core::constants_lab::{fit_exponent, XTransform};
use pdhl_core::geometry::{AxisBox, HolePlan, HoleShape, OffsetRule, PerforatedDomain, ShapeRule};
use pdhl_core::grid::{
    assemble_laplacian, discrete_gradient, gradient_adjoint, lp_norm, random_face_field, rasterize, FieldRef,
    GridMask,
};
use pdhl_core::snapshot::Snapshot;

/// Two by two cells of size 1/4 with randomly offset balls, 257 nodes.
fn mask() -> &'static GridMask<f64> {
    static M: OnceLock<GridMask<f64>> = OnceLock::new();
    M.get_or_init(|| {
        let plan = HolePlan {
            shapes: ShapeRule::RandomBall { min_radius: 0.08, max_radius: 0.125 },
            offsets: OffsetRule::Random { amplitude: 0.2 },
            seed: 3,
            offset_overrides: Vec::new(),
        };
        let outer = AxisBox::cube(2, 0.0, 0.5).unwrap();
        rasterize(&PerforatedDomain::build(outer, 0.25, 0.25, plan).unwrap(), 257).unwrap()
    })
}

fn dof_field(seed: u64) -> Vec<f64> {
    let m = mask();
    let f = random_face_field(m, seed);
    m.to_nodes(&m.to_dofs(&f.axes[0]))
}

fn face_dot(a: &pdhl_core::grid::FaceField<f64>, b: &pdhl_core::grid::FaceField<f64>) -> f64 {
    a.axes.iter().flatten().zip(b.axes.iter().flatten()).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_adjoint_is_the_transpose(su in 0u64..1000, sf in 0u64..1000) {
        let m = mask();
        let u = dof_field(su);
        let f = random_face_field(m, sf);
        let lhs = face_dot(&discrete_gradient(&u, m), &f);
        let rhs: f64 = m.to_dofs(&u).iter().zip(gradient_adjoint(&f, m)).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn laplacian_matches_its_factored_form(su in 0u64..1000) {
        let m = mask();
        let u = dof_field(su);
        let a = assemble_laplacian(m);
        let x = m.to_dofs(&u);
        let y = a.mul_vec(&x);
        let via = gradient_adjoint(&discrete_gradient(&u, m), m);
        let scale = via.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (p, q) in y.iter().zip(&via) {
            prop_assert!((p - q).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn lp_norm_is_homogeneous_and_ordered(s in 0u64..1000, c in -5.0f64..5.0, p in 1.0f64..8.0) {
        let m = mask();
        let f = random_face_field(m, s);
        let mut g = f.clone();
        g.scale(c);
        let nf = lp_norm(FieldRef::Face(&f), p, m).unwrap();
        let ng = lp_norm(FieldRef::Face(&g), p, m).unwrap();
        prop_assert!((ng - c.abs() * nf).abs() <= 1e-10 * nf);
        // On a domain of measure ≤ 1 the norm increases with p.
        let nq = lp_norm(FieldRef::Face(&f), p + 1.0, m).unwrap();
        prop_assert!(nq >= nf * (1.0 - 1e-12));
    }

    #[test]
    fn snapshot_round_trips_bit_exactly(s in 0u64..1000) {
        let m = mask();
        let u = dof_field(s);
        let snap = Snapshot::node(m, &u).unwrap();
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let back = Snapshot::read_from(&buf[..]).unwrap();
        prop_assert_eq!(back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        u.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn fit_recovers_exact_power_laws(k in -3.0f64..3.0, c in 0.1f64..10.0) {
        let pts: Vec<(f64, f64)> = [0.125, 0.0625, 0.03125, 0.015625].iter().map(|&x: &f64| (x, c * x.powf(k))).collect();
        let fit = fit_exponent(&pts, XTransform::Log).unwrap();
        prop_assert!((fit.slope - k).abs() < 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
        let logs: Vec<(f64, f64)> = pts.iter().map(|&(x, _)| (x, c * (1.0 / x).ln().powf(k))).collect();
        let fit = fit_exponent(&logs, XTransform::LogLogInv).unwrap();
        prop_assert!((fit.slope - k).abs() < 1e-10);
    }
}

#[test]
fn shapes_outside_the_cell_are_rejected() {
    assert!(HoleShape::ball(0.2f64).validate(2).is_err());
    assert!(HoleShape::ball(0.1f64).validate(2).is_ok());
}
