use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use ricci_forge::bundlecalc::{
    evaluate_plan, lemma_a_m_hat, lemma_a_required_r, lemma_main, normalize, ratio, reparametrize, rescale,
    vb_lift, weaken, BundleError, BundlePlan, CurvatureBound, FamilyParams, Variant, Q,
};
use ricci_forge::positivity::{min_p, GridSpec};

fn rat(max: i64) -> impl Strategy<Value = Q> {
    (0..=max, 1..=12i64).prop_map(|(n, d)| ratio(n, d))
}

fn pos_rat(max: i64) -> impl Strategy<Value = Q> {
    (1..=max, 1..=12i64).prop_map(|(n, d)| ratio(n, d))
}

fn family() -> impl Strategy<Value = FamilyParams> {
    (1..6u32, pos_rat(40), rat(20), rat(30), rat(20), rat(30), 0..=100i64).prop_map(|(dim, q, c, m, l, e, frac)| {
        let floor = &m * ratio(frac, 100);
        FamilyParams::new(dim, q, c, m, floor)
            .unwrap()
            .with_curvature(CurvatureBound::new(l, e).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn reparametrize_composes(fp in family(), a in pos_rat(20), b in pos_rat(20)) {
        let two = reparametrize(&reparametrize(&fp, &a).unwrap(), &b).unwrap();
        prop_assert_eq!(two, reparametrize(&fp, &(&a * &b)).unwrap());
        let back = reparametrize(&reparametrize(&fp, &a).unwrap(), &(Q::one() / &a)).unwrap();
        prop_assert_eq!(back, fp);
    }

    #[test]
    fn rescale_laws(fp in family(), frac in 1..100i64) {
        let r = &fp.q * ratio(frac, 200);
        let s = rescale(&fp, &r).unwrap();
        prop_assert_eq!(&s.q + &r * ratio(2, 1), fp.q.clone());
        prop_assert_eq!(&s.m - &r, fp.m.clone());
        prop_assert_eq!(&s.m_floor - &r, fp.m_floor.clone());
        prop_assert!(rescale(&fp, &(&fp.q / ratio(2, 1))).is_err());
        // rescaling commutes with reparametrizing when r is scaled along
        let rho = ratio(3, 2);
        let lhs = reparametrize(&s, &rho).unwrap();
        let rhs = rescale(&reparametrize(&fp, &rho).unwrap(), &(&r * &rho)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn weaken_is_idempotent(fp in family(), frac in 1..=100i64) {
        let s = &fp.q * ratio(frac, 100);
        let w = weaken(&fp, &s).unwrap();
        prop_assert_eq!(weaken(&w, &s).unwrap(), w.clone());
        prop_assert_eq!(w.m, fp.m);
    }

    #[test]
    fn lemma_a_formulas(base in family(), fiber in family(), la in rat(5)) {
        let b = base.curvature.clone().unwrap().e;
        let f = fiber.curvature.clone().unwrap().e;
        let two = ratio(2, 1);
        let mut m_hat = b.clone();
        if &base.m * &two > m_hat { m_hat = &base.m * &two; }
        if f > m_hat { m_hat = f.clone(); }
        prop_assert_eq!(lemma_a_m_hat(&base, &fiber).unwrap(), m_hat.clone());
        let need = &m_hat * &two + &base.q * ratio(3, 1);
        prop_assert_eq!(lemma_a_required_r(&base, &fiber).unwrap(), need.clone());
        match lemma_main(&base, &fiber, &la, Variant::A) {
            Ok(e) => {
                prop_assert!(fiber.q >= need);
                prop_assert_eq!(e.curvature.unwrap().e, &m_hat * &two + &base.q * &two + &f);
                prop_assert_eq!(e.q, base.q.clone());
                prop_assert!(e.m >= base.m && e.m >= fiber.m);
            }
            Err(BundleError::Precondition { .. }) => prop_assert!(fiber.q < need),
            Err(other) => prop_assert!(false, "{other}"),
        }
    }

    #[test]
    fn normalized_certificates_replay(fp in family()) {
        let (n, _) = normalize(&fp).unwrap();
        prop_assert_eq!(n.q.clone(), ratio(2, 1));
        prop_assert!(n.m_floor.is_positive());
        prop_assert!(n.m >= n.m_floor);
    }
}

#[test]
fn normalized_certificate_gives_finite_min_p() {
    let base = ricci_forge::bundlecalc::ricnneg_params(2);
    let e = vb_lift(&base, 1, &ratio(1, 1), &ratio(1, 1)).unwrap();
    let (n, _) = normalize(&e).unwrap();
    let m: f64 = ricci_forge::bundlecalc::to_f64(&n.m);
    let c = ricci_forge::bundlecalc::to_f64(&n.c);
    let r = min_p(3, c, &[m; 3], GridSpec::default()).unwrap();
    assert!(r.p_star.is_some());
    // the raw certificate has m_i = 0 directions: no p works on a flat base
    assert!(e.m_floor.is_zero());
    let raw = min_p(1, 0.0, &[0.0], GridSpec::default()).unwrap();
    assert_eq!(raw.p_star, None);
}

#[test]
fn plan_evaluation_is_deterministic() {
    let text = r#"{"kind": "vectorBundle", "rank": 3, "La": "1/2", "fiberCurvBound": 2,
        "base": {"kind": "fiberBundle", "La": 1,
            "base": {"kind": "nilmanifold", "dim": 3, "q": 2, "c": 1, "curvatureBound": {"L": 4, "e": 0}},
            "fiber": {"kind": "ricNonneg", "dim": 2}}}"#;
    let plan = BundlePlan::from_json(text).unwrap();
    let a = evaluate_plan(&plan).unwrap();
    let b = evaluate_plan(&BundlePlan::from_json(text).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.certificate.dim, 8);
}
