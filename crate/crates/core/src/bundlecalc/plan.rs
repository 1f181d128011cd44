//! Bundle plans: trees of base certificates joined by bundle constructions,
//! folded into one certificate and a dimension bound `p`.

use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use super::{
    fmt_q, int, lemma_a_m_hat, lemma_a_required_r, lemma_main, nilmanifold_params, normalize,
    parse_rational, reparametrize, ricnneg_params, vb_lift, BundleError, CurvatureBound, FamilyParams,
    Variant, Q,
};
use crate::positivity::{k_bound_interval, min_p, GridSpec, MinP};

#[derive(Clone, Debug, PartialEq)]
pub enum PlanNode {
    RicNonneg {
        dim: u32,
        /// Sectional curvature bound; 1 when omitted.
        curvature: Option<Q>,
    },
    Nilmanifold {
        dim: u32,
        q: Q,
        c: Q,
        curvature: Option<CurvatureBound>,
    },
    Custom(FamilyParams),
    /// A manifold with no certificate, e.g. a compact Sol manifold.
    Opaque { name: String },
    FiberBundle {
        base: Box<BundlePlan>,
        fiber: Box<BundlePlan>,
        la: Q,
    },
    FlatBundle {
        base: Box<BundlePlan>,
        fiber: Box<BundlePlan>,
    },
    VectorBundle {
        base: Box<BundlePlan>,
        rank: u32,
        la: Q,
        fiber_curvature: Q,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BundlePlan {
    pub node: PlanNode,
    /// Free-form symmetry tag, carried into the trace.
    pub sym: Option<String>,
}

impl From<PlanNode> for BundlePlan {
    fn from(node: PlanNode) -> Self {
        BundlePlan { node, sym: None }
    }
}

fn jerr(path: &str, msg: impl std::fmt::Display) -> BundleError {
    BundleError::Json(format!("{path}: {msg}"))
}

fn rational_value(v: &Value, path: &str) -> Result<Q, BundleError> {
    match v {
        Value::Number(n) => parse_rational(&n.to_string()),
        Value::String(s) => parse_rational(s),
        _ => Err(jerr(path, "expected a number or a \"n/d\" string")),
    }
    .map_err(|e| jerr(path, e))
}

struct Fields<'a> {
    map: &'a Map<String, Value>,
    path: String,
    seen: Vec<&'static str>,
}

impl<'a> Fields<'a> {
    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.map.get(key)
    }

    fn required(&mut self, key: &'static str) -> Result<&'a Value, BundleError> {
        let path = format!("{}.{key}", self.path);
        self.get(key).ok_or_else(|| jerr(&path, "missing"))
    }

    fn rational(&mut self, key: &'static str) -> Result<Q, BundleError> {
        let v = self.required(key)?;
        rational_value(v, &format!("{}.{key}", self.path))
    }

    fn opt_rational(&mut self, key: &'static str) -> Result<Option<Q>, BundleError> {
        let path = format!("{}.{key}", self.path);
        self.get(key).map(|v| rational_value(v, &path)).transpose()
    }

    fn uint(&mut self, key: &'static str) -> Result<u32, BundleError> {
        let path = format!("{}.{key}", self.path);
        self.required(key)?
            .as_u64()
            .and_then(|d| u32::try_from(d).ok())
            .ok_or_else(|| jerr(&path, "expected a nonnegative integer"))
    }

    fn curvature(&mut self, key: &'static str) -> Result<Option<CurvatureBound>, BundleError> {
        let path = format!("{}.{key}", self.path);
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let map = v.as_object().ok_or_else(|| jerr(&path, "expected {\"L\", \"e\"}"))?;
        let mut f = Fields {
            map,
            path,
            seen: Vec::new(),
        };
        let bound = CurvatureBound::new(f.rational("L")?, f.rational("e")?).map_err(|e| jerr(&f.path, e))?;
        f.finish()?;
        Ok(Some(bound))
    }

    fn child(&mut self, key: &'static str) -> Result<Box<BundlePlan>, BundleError> {
        let path = format!("{}.{key}", self.path);
        Ok(Box::new(parse_node(self.required(key)?, &path)?))
    }

    fn finish(&self) -> Result<(), BundleError> {
        match self.map.keys().find(|k| !self.seen.contains(&k.as_str())) {
            Some(k) => Err(jerr(&self.path, format!("unknown field {k:?}"))),
            None => Ok(()),
        }
    }
}

fn parse_node(v: &Value, path: &str) -> Result<BundlePlan, BundleError> {
    let map = v.as_object().ok_or_else(|| jerr(path, "expected an object"))?;
    let mut f = Fields {
        map,
        path: path.to_string(),
        seen: Vec::new(),
    };
    let kind = f
        .required("kind")?
        .as_str()
        .ok_or_else(|| jerr(path, "kind must be a string"))?;
    let sym = match f.get("sym") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(jerr(path, "sym must be a string")),
    };
    let node = match kind {
        "ricNonneg" => PlanNode::RicNonneg {
            dim: f.uint("dim")?,
            curvature: f.opt_rational("curvatureBound")?,
        },
        "nilmanifold" => PlanNode::Nilmanifold {
            dim: f.uint("dim")?,
            q: f.opt_rational("q")?.unwrap_or_else(|| int(2)),
            c: f.opt_rational("c")?.unwrap_or_else(|| int(1)),
            curvature: f.curvature("curvatureBound")?,
        },
        "custom" => {
            let dim = f.uint("dim")?;
            let q = f.rational("q")?;
            let c = f.rational("c")?;
            let m = f.rational("m")?;
            let floor = f.opt_rational("mFloor")?.unwrap_or_else(Q::zero);
            let mut fp = FamilyParams::new(dim, q, c, m, floor).map_err(|e| jerr(path, e))?;
            if let Some(k) = f.curvature("curvatureBound")? {
                fp = fp.with_curvature(k);
            }
            if let Some(a) = f.opt_rational("aBound")? {
                fp = fp.with_a_bound(a).map_err(|e| jerr(path, e))?;
            }
            PlanNode::Custom(fp)
        }
        "opaque" => PlanNode::Opaque {
            name: f
                .required("name")?
                .as_str()
                .ok_or_else(|| jerr(path, "name must be a string"))?
                .to_string(),
        },
        "fiberBundle" => PlanNode::FiberBundle {
            base: f.child("base")?,
            fiber: f.child("fiber")?,
            la: f.rational("La")?,
        },
        "flatBundle" => PlanNode::FlatBundle {
            base: f.child("base")?,
            fiber: f.child("fiber")?,
        },
        "vectorBundle" => PlanNode::VectorBundle {
            base: f.child("base")?,
            rank: f.uint("rank")?,
            la: f.rational("La")?,
            fiber_curvature: f.rational("fiberCurvBound")?,
        },
        other => return Err(jerr(path, format!("unknown kind {other:?}"))),
    };
    f.finish()?;
    Ok(BundlePlan { node, sym })
}

impl BundlePlan {
    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        let v: Value = serde_json::from_str(text).map_err(|e| BundleError::Json(e.to_string()))?;
        Self::from_json_value(&v)
    }

    pub fn from_json_value(v: &Value) -> Result<Self, BundleError> {
        parse_node(v, "root")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub node: String,
    pub rule: String,
    pub detail: String,
    pub result: FamilyParams,
}

impl TraceStep {
    pub fn to_json_value(&self) -> Value {
        json!({
            "node": self.node,
            "rule": self.rule,
            "detail": self.detail,
            "result": self.result.to_json_value(),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlanOptions {
    /// Also run the grid search for the smallest `p` with `m_i = m` throughout.
    pub search: bool,
    pub grid: GridSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub certificate: FamilyParams,
    pub normalized: FamilyParams,
    pub k_bound: f64,
    /// Smallest integer strictly above `k_bound`.
    pub p_bound: u64,
    pub search: Option<MinP>,
    pub trace: Vec<TraceStep>,
}

impl PlanResult {
    pub fn rules(&self) -> Vec<&str> {
        self.trace.iter().map(|s| s.rule.as_str()).collect()
    }
}

struct Folder {
    trace: Vec<TraceStep>,
}

impl Folder {
    fn push(&mut self, node: &str, rule: &str, detail: String, result: &FamilyParams) {
        self.trace.push(TraceStep {
            node: node.to_string(),
            rule: rule.to_string(),
            detail,
            result: result.clone(),
        });
    }

    fn eval(&mut self, plan: &BundlePlan, path: &str) -> Result<FamilyParams, BundleError> {
        self.eval_inner(plan, path).map_err(|e| match e {
            BundleError::AtNode { .. } => e,
            other => BundleError::AtNode {
                node: path.to_string(),
                source: Box::new(other),
            },
        })
    }

    fn eval_inner(&mut self, plan: &BundlePlan, path: &str) -> Result<FamilyParams, BundleError> {
        let tag = plan
            .sym
            .as_ref()
            .map(|s| format!(" [sym {s}]"))
            .unwrap_or_default();
        let out = match &plan.node {
            PlanNode::RicNonneg { dim, curvature } => {
                let mut fp = ricnneg_params(*dim);
                if let Some(l) = curvature {
                    fp = fp.with_curvature(CurvatureBound::bounded(l.clone())?);
                }
                self.push(path, "ricnneg", format!("compact Ric >= 0, dim {dim}{tag}"), &fp);
                fp
            }
            PlanNode::Nilmanifold { dim, q, c, curvature } => {
                let mut fp = nilmanifold_params(*dim, q, c)?;
                if let Some(k) = curvature {
                    fp = fp.with_curvature(k.clone());
                }
                let detail = format!("m = 2^({dim}-2)({} - 1) + 1{tag}", fmt_q(q));
                self.push(path, "nilmanifold", detail, &fp);
                fp
            }
            PlanNode::Custom(fp) => {
                fp.validate()?;
                self.push(path, "custom", format!("supplied certificate{tag}"), fp);
                fp.clone()
            }
            PlanNode::Opaque { name } => return Err(BundleError::NoCertificate(name.clone())),
            PlanNode::FlatBundle { base, fiber } => {
                let b = self.eval(base, &format!("{path}.base"))?;
                let f = self.eval(fiber, &format!("{path}.fiber"))?;
                let e = lemma_main(&b, &f, &Q::zero(), Variant::C)?;
                self.push(path, Variant::C.rule(), format!("flat bundle, k = min(q_B, q_F){tag}"), &e);
                e
            }
            PlanNode::FiberBundle { base, fiber, la } => {
                let b = self.eval(base, &format!("{path}.base"))?;
                let f = self.eval(fiber, &format!("{path}.fiber"))?;
                self.fiber_bundle(&b, f, la, path, &tag)?
            }
            PlanNode::VectorBundle {
                base,
                rank,
                la,
                fiber_curvature,
            } => {
                let b = self.eval(base, &format!("{path}.base"))?;
                let e = vb_lift(&b, *rank, la, fiber_curvature)?;
                let detail = if *rank == 0 {
                    format!("rank 0, unchanged{tag}")
                } else {
                    let need = lemma_a_required_r(&b, &super::vector_fiber(*rank, int(1), fiber_curvature.clone())?)?;
                    format!("rank {rank} fiber taken at r = {} through lemma-main-A{tag}", fmt_q(&need))
                };
                self.push(path, "vb-lift", detail, &e);
                e
            }
        };
        Ok(out)
    }

    fn fiber_bundle(
        &mut self,
        b: &FamilyParams,
        mut f: FamilyParams,
        la: &Q,
        path: &str,
        tag: &str,
    ) -> Result<FamilyParams, BundleError> {
        let need = lemma_a_required_r(b, &f)?;
        if f.q < need {
            let kf = f.curvature.clone().expect("checked by lemma_a_required_r");
            let kb = b.curvature.clone().expect("checked by lemma_a_required_r");
            if kf.l.is_zero() && kb.e.is_zero() {
                let e = lemma_main(b, &f, la, Variant::B)?;
                let detail = format!("flat fiber, r = {} < {}{tag}", fmt_q(&f.q), fmt_q(&need));
                self.push(path, Variant::B.rule(), detail, &e);
                return Ok(e);
            }
            let slack = &f.q - &kf.e * int(2);
            if !slack.is_positive() {
                return Err(BundleError::Precondition {
                    rule: Variant::A.rule(),
                    inequality: "r >= 2 m_hat + 3 q, unreachable by reparametrizing since r <= 2 f",
                    lhs: fmt_q(&f.q),
                    rhs: fmt_q(&need),
                });
            }
            let fixed = (lemma_a_m_hat(b, &FamilyParams {
                curvature: Some(CurvatureBound {
                    e: Q::zero(),
                    ..kf.clone()
                }),
                ..f.clone()
            })? * int(2)
                + &b.q * int(3))
                / &f.q;
            let mut rho = fixed;
            if kf.e.is_positive() {
                let via_f = &b.q * int(3) / &slack;
                if via_f > rho {
                    rho = via_f;
                }
            }
            f = reparametrize(&f, &rho)?;
            let detail = format!("fiber t -> t^{} to reach r >= 2 m_hat + 3 q", fmt_q(&rho));
            self.push(&format!("{path}.fiber"), "reparametrize", detail, &f);
        }
        let m_hat = lemma_a_m_hat(b, &f)?;
        let e = lemma_main(b, &f, la, Variant::A)?;
        let detail = format!(
            "m_hat = {}, r = {} >= {}{tag}",
            fmt_q(&m_hat),
            fmt_q(&f.q),
            fmt_q(&lemma_a_required_r(b, &f)?)
        );
        self.push(path, Variant::A.rule(), detail, &e);
        Ok(e)
    }
}

pub fn evaluate_plan(plan: &BundlePlan) -> Result<PlanResult, BundleError> {
    evaluate_plan_with(plan, PlanOptions::default())
}

pub fn evaluate_plan_with(plan: &BundlePlan, options: PlanOptions) -> Result<PlanResult, BundleError> {
    let mut folder = Folder { trace: Vec::new() };
    let certificate = folder.eval(plan, "root")?;
    let (normalized, steps) = normalize(&certificate)?;
    for s in steps {
        let detail = format!("by {}", fmt_q(&s.amount));
        folder.push("root", s.rule, detail, &s.result);
    }
    let n = normalized.dim as usize;
    let c = super::to_f64(&normalized.c);
    let floor = super::to_f64(&normalized.m_floor);
    let m = super::to_f64(&normalized.m);
    let k_bound = k_bound_interval(n, c, floor, m)?;
    let p_bound = k_bound
        .floor()
        .to_u64()
        .and_then(|k| k.checked_add(1))
        .ok_or_else(|| BundleError::Numeric(format!("k bound {k_bound} does not fit an integer")))?;
    folder.push(
        "root",
        "k-bound",
        format!("k({n}, c, [m_floor, m]) = {k_bound}, p > k"),
        &normalized,
    );
    let search = if options.search {
        Some(min_p(n, c, &vec![m; n], options.grid)?)
    } else {
        None
    };
    Ok(PlanResult {
        certificate,
        normalized,
        k_bound,
        p_bound: p_bound.max(2),
        search,
        trace: folder.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundlecalc::ratio;

    fn plan(text: &str) -> BundlePlan {
        BundlePlan::from_json(text).unwrap()
    }

    const VB_OVER_RICNNEG: &str = r#"{"kind": "vectorBundle", "rank": 2, "La": 1, "fiberCurvBound": 1,
        "base": {"kind": "ricNonneg", "dim": 3}}"#;

    #[test]
    fn vector_bundle_over_ricnneg() {
        let r = evaluate_plan(&plan(VB_OVER_RICNNEG)).unwrap();
        assert_eq!(r.certificate.dim, 5);
        assert_eq!(r.normalized.q, int(2));
        assert!(r.normalized.m_floor.is_positive());
        assert_eq!(r.rules(), ["ricnneg", "vb-lift", "reparametrize", "rescale", "k-bound"]);
        assert!(r.k_bound.is_finite());
        assert!(r.p_bound as f64 > r.k_bound);
        assert_eq!(evaluate_plan(&plan(VB_OVER_RICNNEG)).unwrap(), r);
    }

    #[test]
    fn nilmanifold_leaf_alone() {
        let r = evaluate_plan(&plan(r#"{"kind": "nilmanifold", "dim": 3, "sym": "Heisenberg"}"#)).unwrap();
        assert_eq!(r.certificate.m, int(3));
        assert!(r.trace[0].detail.contains("Heisenberg"));
        assert!(r.p_bound >= 2);
    }

    #[test]
    fn sol_base_is_rejected() {
        let p = plan(r#"{"kind": "flatBundle", "base": {"kind": "opaque", "name": "Sol"},
            "fiber": {"kind": "ricNonneg", "dim": 1}}"#);
        match evaluate_plan(&p) {
            Err(BundleError::AtNode { node, source }) => {
                assert_eq!(node, "root.base");
                assert_eq!(*source, BundleError::NoCertificate("Sol".into()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flat_bundles_associate() {
        let leaf = |d: u32, c: i64| {
            format!(r#"{{"kind": "custom", "dim": {d}, "q": "{d}/2", "c": {c}, "m": {d}, "mFloor": 1, "curvatureBound": {{"L": {c}, "e": {d}}}}}"#)
        };
        let (a, b, c) = (leaf(1, 2), leaf(2, 1), leaf(3, 5));
        let left = format!(r#"{{"kind": "flatBundle", "base": {{"kind": "flatBundle", "base": {a}, "fiber": {b}}}, "fiber": {c}}}"#);
        let right = format!(r#"{{"kind": "flatBundle", "base": {a}, "fiber": {{"kind": "flatBundle", "base": {b}, "fiber": {c}}}}}"#);
        let l = evaluate_plan(&plan(&left)).unwrap();
        let r = evaluate_plan(&plan(&right)).unwrap();
        assert_eq!(l.certificate, r.certificate);
        assert_eq!(l.p_bound, r.p_bound);
    }

    #[test]
    fn fiber_bundle_reparametrizes_short_fiber() {
        let p = plan(r#"{"kind": "fiberBundle", "La": 1,
            "base": {"kind": "custom", "dim": 2, "q": 1, "c": 1, "m": 1, "curvatureBound": {"L": 1, "e": 2}},
            "fiber": {"kind": "custom", "dim": 1, "q": 6, "c": 0, "m": 1, "curvatureBound": {"L": 1, "e": 0}}}"#);
        let r = evaluate_plan(&p).unwrap();
        assert_eq!(r.rules()[2..4], ["reparametrize", "lemma-main-A"]);
        // fiber t -> t^{7/6}, so m_F = 7/6 and m_E = 7/6 + 2 + 1
        assert_eq!(r.certificate.m, ratio(25, 6));
    }

    #[test]
    fn flat_fiber_falls_back_to_b() {
        let p = plan(r#"{"kind": "fiberBundle", "La": 1,
            "base": {"kind": "ricNonneg", "dim": 2},
            "fiber": {"kind": "custom", "dim": 1, "q": "1/10", "c": 0, "m": 0, "curvatureBound": {"L": 0, "e": "1/5"}}}"#);
        let r = evaluate_plan(&p).unwrap();
        assert!(r.rules().contains(&"lemma-main-B"));
    }

    #[test]
    fn unreachable_budget_is_reported() {
        let p = plan(r#"{"kind": "fiberBundle", "La": 1,
            "base": {"kind": "ricNonneg", "dim": 2},
            "fiber": {"kind": "custom", "dim": 1, "q": 1, "c": 0, "m": 0, "curvatureBound": {"L": 1, "e": 1}}}"#);
        let err = evaluate_plan(&p).unwrap_err();
        assert!(err.to_string().contains("at root"), "{err}");
        assert!(matches!(err, BundleError::AtNode { ref source, .. } if matches!(**source, BundleError::Precondition { .. })));
    }

    #[test]
    fn malformed_plans_are_rejected() {
        for text in [
            r#"{"kind": "torus"}"#,
            r#"{"kind": "ricNonneg"}"#,
            r#"{"kind": "ricNonneg", "dim": 2, "extra": 1}"#,
            r#"{"kind": "custom", "dim": 1, "q": 0, "c": 0, "m": 0}"#,
            r#"{"kind": "vectorBundle", "rank": 1, "La": "x", "fiberCurvBound": 1, "base": {"kind": "ricNonneg", "dim": 1}}"#,
            r#"[1]"#,
        ] {
            assert!(BundlePlan::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn search_replays_certificate() {
        let options = PlanOptions {
            search: true,
            ..PlanOptions::default()
        };
        let r = evaluate_plan_with(&plan(r#"{"kind": "ricNonneg", "dim": 2}"#), options).unwrap();
        let p = r.search.unwrap().p_star.unwrap();
        assert!(p <= r.p_bound);
    }
}
