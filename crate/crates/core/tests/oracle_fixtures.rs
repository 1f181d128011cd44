use nalgebra::DMatrix;
use proptest::prelude::*;
use ricci_forge::lie::{left_invariant_ricci, GroupChart};
use ricci_forge::oracle::{self, DiffScheme, Preset};

fn frame_error(preset: &Preset, x: &[f64], scheme: DiffScheme) -> f64 {
    let frame = preset.orthonormal_frame(x);
    let ric = oracle::frame_ricci_with(&preset.chart(), &frame, scheme).unwrap();
    (ric - preset.frame_ricci()).amax()
}

#[test]
fn mesh_refinement_shows_high_order_convergence() {
    for spec in ["sphere:2:1", "sphere:3:2", "hyperbolic2"] {
        let preset: Preset = spec.parse().unwrap();
        let x = preset.sample_point();
        let coarse = frame_error(&preset, &x, DiffScheme::plain(0.1));
        let fine = frame_error(&preset, &x, DiffScheme::plain(0.05));
        assert!(coarse / fine >= 4.0, "{spec}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn constant_curvature_fixtures() {
    let mut presets: Vec<Preset> = (1..=6).map(|dim| Preset::Euclidean { dim }).collect();
    for dim in 2..=5 {
        for radius in [1.0, 2.0] {
            presets.push(Preset::Sphere { dim, radius });
        }
    }
    presets.push(Preset::Hyperbolic2);
    for p in presets {
        let k = p.constant_curvature().unwrap();
        let expected = DMatrix::identity(p.dim(), p.dim()) * (k * (p.dim() as f64 - 1.0));
        let frame = p.orthonormal_frame(&p.sample_point());
        let ric = oracle::frame_ricci(&p.chart(), &frame).unwrap();
        assert!((ric - expected).amax() < 1e-6, "{p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn s3_oracle_agrees_with_lie_algebra_route(
        scales in prop::array::uniform3(0.3f64..2.0),
        x in prop::array::uniform3(-0.4f64..0.4),
    ) {
        let preset = Preset::S3LeftInvariant { scales };
        let frame = preset.orthonormal_frame(&x);
        let ric = oracle::frame_ricci(&preset.chart(), &frame).unwrap();
        let expected = left_invariant_ricci(&GroupChart::S3.structure(), &scales);
        let scale = 1.0 + expected.amax();
        prop_assert!((ric - expected).amax() < 1e-7 * scale);
    }

    #[test]
    fn sphere_sectional_curvature_is_plane_independent(
        u in prop::array::uniform3(-1.0f64..1.0),
        v in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let preset = Preset::Sphere { dim: 3, radius: 2.0 };
        let chart = preset.chart();
        match oracle::sectional(&chart, &[0.1, -0.2, 0.15], &u, &v) {
            Ok(k) => prop_assert!((k - 0.25).abs() < 1e-6),
            Err(oracle::OracleError::DegeneratePlane { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
