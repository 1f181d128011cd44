use nalgebra::DMatrix;
use proptest::prelude::*;
use ricci_forge::variation::{
    a_invariants_from_ricci, berger_algebraic_ricci, berger_oracle_ricci,
    canonical_variation_ricci, error_bound_check, hopf_preset, SubmersionData,
};

#[test]
fn canonical_variation_of_hopf_is_the_berger_family() {
    let d = hopf_preset().unwrap();
    for t in [1.0, 0.5, 0.25] {
        let closed = canonical_variation_ricci(&d, t).unwrap();
        let oracle = berger_oracle_ricci(t).unwrap();
        assert!((closed.assemble() - oracle.assemble()).amax() < 1e-5, "t={t}");
        assert!((closed.assemble() - berger_algebraic_ricci(t)).amax() < 1e-6, "t={t}");
    }
    let round = canonical_variation_ricci(&d, 1.0).unwrap().assemble();
    assert!((round - DMatrix::identity(3, 3) * 2.0).amax() < 1e-5);
}

#[test]
fn hopf_error_inequalities_hold_with_derived_constant() {
    let d = hopf_preset().unwrap();
    let rep = error_bound_check(&d, d.derived_constant(), &[1.0, 0.5, 0.1, 0.01]).unwrap();
    assert!(rep.pass(), "{:?}", rep.violations);
    assert!(rep.vertical_slack >= 0.0 && rep.horizontal_slack >= -1e-9);
}

#[test]
fn too_small_constant_is_reported_at_t_one() {
    let d = hopf_preset().unwrap();
    let rep = error_bound_check(&d, 1.0, &[1.0]).unwrap();
    assert!(!rep.pass());
    assert!(rep.violations.iter().any(|v| v.t == 1.0 && v.inequality == "horizontal lower bound"));
}

#[test]
fn circle_fiber_collapses_and_positive_fiber_blows_up() {
    let hopf = hopf_preset().unwrap();
    let mut positive = hopf.clone();
    positive.ric_f = DMatrix::from_element(1, 1, 0.5);
    let mut prev_hopf = f64::INFINITY;
    let mut prev_pos = 0.0;
    for t in [1e-1, 1e-2, 1e-3] {
        let flat_fiber = canonical_variation_ricci(&hopf, t).unwrap().vv[(0, 0)];
        assert!((flat_fiber - t * t * hopf.a_uv[(0, 0)]).abs() < 1e-15);
        assert!(flat_fiber < prev_hopf);
        prev_hopf = flat_fiber;
        let blown = canonical_variation_ricci(&positive, t).unwrap().vv[(0, 0)];
        assert!(blown > prev_pos && blown >= 0.5 / (t * t));
        prev_pos = blown;
    }
    assert!(prev_hopf < 1e-5);
    assert!(prev_pos > 1e5);
}

fn sym(n: usize, v: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |i, j| v[i * n + j]);
    (&m + m.transpose()) * 0.5
}

fn psd(n: usize, v: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |i, j| v[i * n + j]);
    &m * m.transpose()
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

proptest! {
    #[test]
    fn invariants_round_trip_through_t_one(
        b in 1usize..4,
        f in 1usize..4,
        vals in prop::collection::vec(-5.0f64..5.0, 40),
    ) {
        let vv = sym(f, &vals[0..9]);
        let hh = sym(b, &vals[9..18]);
        let hv = DMatrix::from_fn(b, f, |i, j| vals[18 + i * 3 + j]);
        let rb = diag(&vals[27..27 + b]);
        let rf = diag(&vals[31..31 + f]);
        let a = a_invariants_from_ricci(&vv, &hh, &hv, &rb, &rf).unwrap();
        // skip the PSD validation: this is a purely algebraic identity
        let d = SubmersionData { ric_b: rb, ric_f: rf, a_uv: a.a_uv, a_xy: a.a_xy, delta_a: a.delta_a };
        let s = canonical_variation_ricci(&d, 1.0).unwrap();
        prop_assert!((s.vv - vv).amax() <= 1e-14);
        prop_assert!((s.hh - hh).amax() <= 1e-14);
        prop_assert_eq!(s.hv, hv);
    }

    #[test]
    fn derived_constant_makes_inequalities_hold(
        b in 1usize..4,
        f in 1usize..4,
        vals in prop::collection::vec(-2.0f64..2.0, 40),
        t in 0.001f64..1.0,
    ) {
        let d = SubmersionData::new(
            diag(&vals[27..27 + b]),
            diag(&vals[31..31 + f]),
            psd(f, &vals[0..9]),
            psd(b, &vals[9..18]),
            DMatrix::from_fn(b, f, |i, j| vals[18 + i * 3 + j]),
        ).unwrap();
        let rep = error_bound_check(&d, d.derived_constant() * (1.0 + 1e-12), &[t, 1.0]).unwrap();
        prop_assert!(rep.pass(), "{:?}", rep.violations);
    }

    #[test]
    fn nonnegativity_transfers(
        b in 1usize..4,
        f in 1usize..4,
        vals in prop::collection::vec(0.0f64..2.0, 40),
        t in 0.001f64..1.0,
    ) {
        let d = SubmersionData::new(
            diag(&vals[27..27 + b]),
            diag(&vals[31..31 + f]),
            psd(f, &vals[0..9]),
            psd(b, &vals[9..18]),
            DMatrix::from_fn(b, f, |i, j| vals[18 + i * 3 + j] - 1.0),
        ).unwrap();
        let c = d.derived_constant();
        let s = canonical_variation_ricci(&d, t).unwrap();
        for i in 0..f { prop_assert!(s.vv[(i, i)] >= 0.0); }
        for i in 0..b { prop_assert!(s.hh[(i, i)] >= -c * t * t * (1.0 + 1e-12)); }
    }
}
