//! Exact bookkeeping for class certificates `M_q(c, m)`.
//!
//! A certificate records a family `g_t`, `t ∈ (0, 1]`, with local frames
//! `Y_i = X_i / t^{m_i}` where every `m_i ∈ [m_floor, m]`, diagonal Ricci at
//! least `-c t^q`, off-diagonal Ricci at most `c t^q`, and optionally a
//! sectional curvature bound `|K| ≤ L / t^e`. All arithmetic is over
//! arbitrary-precision rationals.

mod plan;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::positivity::PositivityError;

pub use plan::{evaluate_plan, evaluate_plan_with, BundlePlan, PlanNode, PlanOptions, PlanResult, TraceStep};

pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: String },
    #[error("{name} must be nonnegative, got {value}")]
    Negative { name: &'static str, value: String },
    #[error("m_floor = {floor} exceeds m = {m}")]
    FloorAboveM { floor: String, m: String },
    #[error("rescale needs 0 < r < q/2, got r = {r} with q = {q}")]
    RescaleRange { r: String, q: String },
    #[error("weaken needs 0 < s <= q, got s = {s} with q = {q}")]
    WeakenRange { s: String, q: String },
    #[error("{role} has no sectional curvature bound")]
    MissingCurvature { role: &'static str },
    #[error("{rule} needs {inequality}: {lhs} vs {rhs}")]
    Precondition {
        rule: &'static str,
        inequality: &'static str,
        lhs: String,
        rhs: String,
    },
    #[error("nilmanifold dimension must be at least 2, got {0}")]
    NilmanifoldDimension(u32),
    #[error("q must be at least 1 for the nilmanifold exponent formula, got {0}")]
    NilmanifoldQ(String),
    #[error("no certificate is known for {0}")]
    NoCertificate(String),
    #[error("cannot parse rational {0:?}")]
    Rational(String),
    #[error("malformed plan: {0}")]
    Json(String),
    #[error("at {node}: {source}")]
    AtNode {
        node: String,
        #[source]
        source: Box<BundleError>,
    },
    #[error(transparent)]
    Positivity(#[from] PositivityError),
    #[error("numeric overflow: {0}")]
    Numeric(String),
}

pub fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"7"`, `"-3/4"` or a decimal such as `"0.125"` / `"1e-3"` exactly.
pub fn parse_rational(text: &str) -> Result<Q, BundleError> {
    let bad = || BundleError::Rational(text.to_string());
    let s = text.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty()
        || !whole.chars().chain(frac.chars()).all(|ch| ch.is_ascii_digit())
    {
        return Err(bad());
    }
    let all: BigInt = format!("0{whole}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut q = Q::from_integer(all);
    if scale >= 0 {
        q *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -q } else { q })
}

pub fn fmt_q(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn max_q(a: &Q, b: &Q) -> Q {
    if a >= b { a.clone() } else { b.clone() }
}

fn min_q(a: &Q, b: &Q) -> Q {
    if a <= b { a.clone() } else { b.clone() }
}

fn require_positive(name: &'static str, v: &Q) -> Result<(), BundleError> {
    if v.is_positive() {
        Ok(())
    } else {
        Err(BundleError::NonPositive { name, value: fmt_q(v) })
    }
}

fn require_nonnegative(name: &'static str, v: &Q) -> Result<(), BundleError> {
    if v.is_negative() {
        Err(BundleError::Negative { name, value: fmt_q(v) })
    } else {
        Ok(())
    }
}

/// `|K| ≤ l / t^e`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CurvatureBound {
    pub l: Q,
    pub e: Q,
}

impl CurvatureBound {
    pub fn new(l: Q, e: Q) -> Result<Self, BundleError> {
        require_nonnegative("L", &l)?;
        require_nonnegative("e", &e)?;
        Ok(CurvatureBound { l, e })
    }

    /// `t`-independent bound.
    pub fn bounded(l: Q) -> Result<Self, BundleError> {
        Self::new(l, Q::zero())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FamilyParams {
    pub dim: u32,
    pub q: Q,
    pub c: Q,
    pub m: Q,
    pub m_floor: Q,
    pub curvature: Option<CurvatureBound>,
    /// Bound on the A-tensor at `t = 1` when this family is the total space of
    /// a submersion; carried through plans but not used by the laws.
    pub a_bound: Option<Q>,
}

impl FamilyParams {
    pub fn new(dim: u32, q: Q, c: Q, m: Q, m_floor: Q) -> Result<Self, BundleError> {
        let fp = FamilyParams {
            dim,
            q,
            c,
            m,
            m_floor,
            curvature: None,
            a_bound: None,
        };
        fp.validate()?;
        Ok(fp)
    }

    pub fn with_curvature(mut self, bound: CurvatureBound) -> Self {
        self.curvature = Some(bound);
        self
    }

    pub fn with_a_bound(mut self, a: Q) -> Result<Self, BundleError> {
        require_nonnegative("aBound", &a)?;
        self.a_bound = Some(a);
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), BundleError> {
        require_positive("q", &self.q)?;
        require_nonnegative("c", &self.c)?;
        require_nonnegative("m_floor", &self.m_floor)?;
        if self.m_floor > self.m {
            return Err(BundleError::FloorAboveM {
                floor: fmt_q(&self.m_floor),
                m: fmt_q(&self.m),
            });
        }
        if let Some(k) = &self.curvature {
            require_nonnegative("L", &k.l)?;
            require_nonnegative("e", &k.e)?;
        }
        if let Some(a) = &self.a_bound {
            require_nonnegative("aBound", a)?;
        }
        Ok(())
    }

    /// Curvature bounded independently of `t`: reparametrizing then keeps the
    /// bound, so the family serves every exponent `p`.
    pub fn every_q(&self) -> bool {
        self.curvature.as_ref().is_some_and(|k| k.e.is_zero())
    }

    fn curvature_or(&self, role: &'static str) -> Result<&CurvatureBound, BundleError> {
        self.curvature
            .as_ref()
            .ok_or(BundleError::MissingCurvature { role })
    }

    pub fn to_json_value(&self) -> Value {
        let curvature = match &self.curvature {
            Some(k) => json!({"L": fmt_q(&k.l), "e": fmt_q(&k.e)}),
            None => Value::Null,
        };
        json!({
            "dim": self.dim,
            "q": fmt_q(&self.q),
            "c": fmt_q(&self.c),
            "m": fmt_q(&self.m),
            "mFloor": fmt_q(&self.m_floor),
            "curvatureBound": curvature,
            "aBound": self.a_bound.as_ref().map(fmt_q),
            "everyQ": self.every_q(),
        })
    }
}

impl fmt::Display for FamilyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M_{}({}, {}) dim {} m_i in [{}, {}]",
            fmt_q(&self.q),
            fmt_q(&self.c),
            fmt_q(&self.m),
            self.dim,
            fmt_q(&self.m_floor),
            fmt_q(&self.m)
        )?;
        if let Some(k) = &self.curvature {
            write!(f, " |K| <= {}/t^{}", fmt_q(&k.l), fmt_q(&k.e))?;
        }
        Ok(())
    }
}

/// Substitutes `t ↦ t^rho`: `q`, every `m_i` and `e` scale by `rho`.
pub fn reparametrize(fp: &FamilyParams, rho: &Q) -> Result<FamilyParams, BundleError> {
    require_positive("rho", rho)?;
    Ok(FamilyParams {
        dim: fp.dim,
        q: &fp.q * rho,
        c: fp.c.clone(),
        m: &fp.m * rho,
        m_floor: &fp.m_floor * rho,
        curvature: fp.curvature.as_ref().map(|k| CurvatureBound {
            l: k.l.clone(),
            e: &k.e * rho,
        }),
        a_bound: fp.a_bound.clone(),
    })
}

/// Reparametrizes so that the Ricci exponent becomes `target`.
pub fn reparametrize_to(fp: &FamilyParams, target: &Q) -> Result<FamilyParams, BundleError> {
    require_positive("target q", target)?;
    reparametrize(fp, &(target / &fp.q))
}

/// Multiplies `g_t` by `t^{2r}`: `q ↦ q - 2r`, `m_i ↦ m_i + r`, `e ↦ e + 2r`.
pub fn rescale(fp: &FamilyParams, r: &Q) -> Result<FamilyParams, BundleError> {
    let two = int(2);
    if !r.is_positive() || r * &two >= fp.q {
        return Err(BundleError::RescaleRange {
            r: fmt_q(r),
            q: fmt_q(&fp.q),
        });
    }
    Ok(FamilyParams {
        dim: fp.dim,
        q: &fp.q - r * &two,
        c: fp.c.clone(),
        m: &fp.m + r,
        m_floor: &fp.m_floor + r,
        curvature: fp.curvature.as_ref().map(|k| CurvatureBound {
            l: k.l.clone(),
            e: &k.e + r * &two,
        }),
        a_bound: fp.a_bound.clone(),
    })
}

/// `M_q(c, m) ⊂ M_s(c, m)` for `s ≤ q`.
pub fn weaken(fp: &FamilyParams, s: &Q) -> Result<FamilyParams, BundleError> {
    if !s.is_positive() || s > &fp.q {
        return Err(BundleError::WeakenRange {
            s: fmt_q(s),
            q: fmt_q(&fp.q),
        });
    }
    Ok(FamilyParams {
        q: s.clone(),
        ..fp.clone()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Shrink fibers by `s = t^{m̂+q}`; needs a large fiber exponent.
    A,
    /// Flat fibers over a base of bounded curvature; shrink by `t^{2m_B+1}`.
    B,
    /// Vanishing A-tensor.
    C,
}

impl Variant {
    pub fn rule(self) -> &'static str {
        match self {
            Variant::A => "lemma-main-A",
            Variant::B => "lemma-main-B",
            Variant::C => "lemma-main-C",
        }
    }
}

/// `m̂ = max(b, 2 m_B, f)`.
pub fn lemma_a_m_hat(base: &FamilyParams, fiber: &FamilyParams) -> Result<Q, BundleError> {
    let b = &base.curvature_or("base")?.e;
    let f = &fiber.curvature_or("fiber")?.e;
    Ok(max_q(&max_q(b, &(&base.m * int(2))), f))
}

/// `2 m̂ + 3 q`, the smallest fiber exponent that variant A accepts.
pub fn lemma_a_required_r(base: &FamilyParams, fiber: &FamilyParams) -> Result<Q, BundleError> {
    Ok(lemma_a_m_hat(base, fiber)? * int(2) + &base.q * int(3))
}

/// Combines a base and a fiber certificate into one for the total space.
///
/// Unspecified constants are fixed conservatively: `Q₂ = 2 dim E`, the error
/// factor `Q₃ = Q₂ (L_b + 4 dim B² L_a + L_f)` and curvature constant
/// `Q₄ = L_b + 4 dim B² L_a + L_f`; variant B uses the same with `L_f = 0`.
pub fn lemma_main(
    base: &FamilyParams,
    fiber: &FamilyParams,
    la: &Q,
    variant: Variant,
) -> Result<FamilyParams, BundleError> {
    base.validate()?;
    fiber.validate()?;
    require_nonnegative("La", la)?;
    let kb = base.curvature_or("base")?;
    let kf = fiber.curvature_or("fiber")?;
    let dim = base.dim + fiber.dim;
    let q2 = int(2 * i64::from(dim));
    let a_term = int(4 * i64::from(base.dim) * i64::from(base.dim)) * la;
    match variant {
        Variant::A => {
            let m_hat = lemma_a_m_hat(base, fiber)?;
            let need = &m_hat * int(2) + &base.q * int(3);
            if fiber.q < need {
                return Err(BundleError::Precondition {
                    rule: variant.rule(),
                    inequality: "r >= 2 m_hat + 3 q",
                    lhs: fmt_q(&fiber.q),
                    rhs: fmt_q(&need),
                });
            }
            let shift = &m_hat + &base.q;
            let q4 = &kb.l + &a_term + &kf.l;
            let q3 = &q2 * &q4;
            Ok(FamilyParams {
                dim,
                q: base.q.clone(),
                c: max_q(&(&base.c + q3), &fiber.c),
                m: max_q(&base.m, &(&fiber.m + &shift)),
                m_floor: min_q(&base.m_floor, &(&fiber.m_floor + &shift)),
                curvature: Some(CurvatureBound {
                    l: q4,
                    e: &m_hat * int(2) + &base.q * int(2) + &kf.e,
                }),
                a_bound: None,
            })
        }
        Variant::B => {
            if !kf.l.is_zero() {
                return Err(BundleError::Precondition {
                    rule: variant.rule(),
                    inequality: "L_f = 0",
                    lhs: fmt_q(&kf.l),
                    rhs: "0".into(),
                });
            }
            if !kb.e.is_zero() {
                return Err(BundleError::Precondition {
                    rule: variant.rule(),
                    inequality: "b = 0",
                    lhs: fmt_q(&kb.e),
                    rhs: "0".into(),
                });
            }
            let shift = &base.m * int(2) + Q::one();
            let q5 = &kb.l + &a_term;
            let q6 = &q2 * &q5;
            Ok(FamilyParams {
                dim,
                q: min_q(&Q::one(), &base.q),
                c: &base.c + q6,
                m: max_q(&base.m, &(&fiber.m + &shift)),
                m_floor: min_q(&base.m_floor, &(&fiber.m_floor + &shift)),
                curvature: Some(CurvatureBound { l: q5, e: Q::zero() }),
                a_bound: None,
            })
        }
        Variant::C => {
            if !la.is_zero() {
                return Err(BundleError::Precondition {
                    rule: variant.rule(),
                    inequality: "La = 0",
                    lhs: fmt_q(la),
                    rhs: "0".into(),
                });
            }
            Ok(FamilyParams {
                dim,
                q: min_q(&base.q, &fiber.q),
                c: max_q(&base.c, &fiber.c),
                m: max_q(&base.m, &fiber.m),
                m_floor: min_q(&base.m_floor, &fiber.m_floor),
                curvature: Some(CurvatureBound {
                    l: &kb.l + &kf.l,
                    e: max_q(&kb.e, &kf.e),
                }),
                a_bound: None,
            })
        }
    }
}

/// Fiber of a rank-`rank` vector bundle: `t`-independent, `Ric ≥ 0`,
/// sectional curvature in `[0, l_f]`, usable at any exponent.
pub fn vector_fiber(rank: u32, q: Q, l_f: Q) -> Result<FamilyParams, BundleError> {
    Ok(FamilyParams::new(rank, q, Q::zero(), Q::zero(), Q::zero())?
        .with_curvature(CurvatureBound::bounded(l_f)?))
}

/// Certificate for the total space of a rank-`rank` vector bundle via variant A,
/// with the fiber taken at exactly the required exponent.
pub fn vb_lift(base: &FamilyParams, rank: u32, la: &Q, l_f: &Q) -> Result<FamilyParams, BundleError> {
    base.curvature_or("base")?;
    if rank == 0 {
        return Ok(base.clone());
    }
    let probe = vector_fiber(rank, Q::one(), l_f.clone())?;
    let need = lemma_a_required_r(base, &probe)?;
    let fiber = vector_fiber(rank, need, l_f.clone())?;
    lemma_main(base, &fiber, la, Variant::A)
}

/// `M_q(c, 2^{n-2}(q-1) + 1)`; `c` depends on the structure constants and is
/// supplied by the caller. The exponent floor is left at 0.
pub fn nilmanifold_params(n: u32, q: &Q, c: &Q) -> Result<FamilyParams, BundleError> {
    if n < 2 {
        return Err(BundleError::NilmanifoldDimension(n));
    }
    if q < &Q::one() {
        return Err(BundleError::NilmanifoldQ(fmt_q(q)));
    }
    let pow = Q::from_integer(num_traits::pow(BigInt::from(2), (n - 2) as usize));
    let m = pow * (q - Q::one()) + Q::one();
    FamilyParams::new(n, q.clone(), c.clone(), m, Q::zero())
}

/// A fixed metric with `Ric ≥ 0` on a compact manifold, scaled so `|K| ≤ 1`.
/// Valid at every `q`; represented at `q = 1`.
pub fn ricnneg_params(dim: u32) -> FamilyParams {
    FamilyParams {
        dim,
        q: Q::one(),
        c: Q::zero(),
        m: Q::zero(),
        m_floor: Q::zero(),
        curvature: Some(CurvatureBound {
            l: Q::one(),
            e: Q::zero(),
        }),
        a_bound: None,
    }
}

/// One rewrite applied while normalizing.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizeStep {
    pub rule: &'static str,
    pub amount: Q,
    pub result: FamilyParams,
}

/// Brings a certificate into `M_2` with every `m_i > 0`.
///
/// With `m_floor > 0` this only weakens (or reparametrizes up to 2); otherwise
/// it reparametrizes to `q = 4` and rescales by 1.
pub fn normalize(fp: &FamilyParams) -> Result<(FamilyParams, Vec<NormalizeStep>), BundleError> {
    let two = int(2);
    let mut steps = Vec::new();
    let mut cur = fp.clone();
    if cur.m_floor.is_positive() {
        if cur.q > two {
            cur = weaken(&cur, &two)?;
            steps.push(NormalizeStep {
                rule: "weaken",
                amount: two.clone(),
                result: cur.clone(),
            });
        } else if cur.q < two {
            let rho = &two / &cur.q;
            cur = reparametrize(&cur, &rho)?;
            steps.push(NormalizeStep {
                rule: "reparametrize",
                amount: rho,
                result: cur.clone(),
            });
        }
        return Ok((cur, steps));
    }
    let four = int(4);
    if cur.q != four {
        let rho = &four / &cur.q;
        cur = reparametrize(&cur, &rho)?;
        steps.push(NormalizeStep {
            rule: "reparametrize",
            amount: rho,
            result: cur.clone(),
        });
    }
    cur = rescale(&cur, &Q::one())?;
    steps.push(NormalizeStep {
        rule: "rescale",
        amount: Q::one(),
        result: cur.clone(),
    });
    Ok((cur, steps))
}
