use std::path::{Path, PathBuf};

use clap::Args;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use ricci_forge::bundlecalc::{evaluate_plan_with, BundleError, BundlePlan, PlanOptions};
use ricci_forge::oracle::{self, OracleError, Preset};
use ricci_forge::parallel::{self, Mode};
use ricci_forge::positivity::{k_bound_interval, min_p_with, GridSpec, PositivityError};
use ricci_forge::variation::{
    berger_oracle_ricci, canonical_variation_ricci, error_bound_check, hopf_preset, SubmersionData,
    VariationError,
};
use ricci_forge::warped::{
    assemble_and_check_pd, ricci_warped, smoothness_check, verify_against_oracle_with, VerifyEntry,
    WarpedError, WarpedFamilySpec,
};

use crate::report::{num, Check, Report};

/// Exit status 3 for `Usage`, 4 for `Numeric`.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<WarpedError> for CliError {
    fn from(e: WarpedError) -> Self {
        match e {
            WarpedError::Parse { .. }
            | WarpedError::InvalidSpec(_)
            | WarpedError::SphereDimension(_)
            | WarpedError::Unrealizable(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::UnknownPreset(_) | OracleError::Dimension(_) | OracleError::PointDimension { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<VariationError> for CliError {
    fn from(e: VariationError) -> Self {
        match e {
            VariationError::Oracle(o) => o.into(),
            VariationError::InvalidT(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<PositivityError> for CliError {
    fn from(e: PositivityError) -> Self {
        match e {
            PositivityError::Dimension { .. } | PositivityError::Grid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        match e {
            BundleError::Json(_) | BundleError::Rational(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

pub struct Ctx {
    pub seed: u64,
    pub mode: Mode,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)]).unwrap_or(Value::Null)).collect()))
            .collect(),
    )
}

fn f(x: f64) -> Value {
    num(x).unwrap_or(Value::Null)
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {x}")))
    }
}

fn load_spec(path: &Path) -> Result<WarpedFamilySpec, CliError> {
    Ok(WarpedFamilySpec::from_json(&read(path)?)?)
}

#[derive(Args, Debug)]
pub struct OracleCheckArgs {
    /// euclidean:d, sphere:d:a, hyperbolic2 or s3-left-invariant:a:b:c
    #[arg(long)]
    pub preset: String,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Random points in addition to the fixed sample point.
    #[arg(long, default_value_t = 4)]
    pub samples: usize,
}

pub fn oracle_check(a: &OracleCheckArgs, ctx: &Ctx) -> Result<Report, CliError> {
    positive("tol", a.tol)?;
    let preset: Preset = a.preset.parse()?;
    let chart = preset.chart();
    let expected = preset.frame_ricci();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut points = vec![preset.sample_point()];
    for _ in 0..a.samples {
        let u: Vec<f64> = (0..preset.dim()).map(|_| rng.gen::<f64>()).collect();
        points.push(preset.point_from_unit(&u));
    }
    let devs = parallel::try_map(ctx.mode, &points, |x| {
        let frame = preset.orthonormal_frame(x);
        oracle::frame_ricci(&chart, &frame).map(|m| (m - &expected).amax())
    })?;
    let worst = devs.iter().cloned().fold(0.0, f64::max);

    let mut rep = Report::new(
        "oracle-check",
        json!({"preset": preset.to_string(), "tol": a.tol, "samples": a.samples, "seed": ctx.seed}),
    );
    let kappa = preset.constant_curvature();
    if let Some(k) = kappa {
        rep.notes.push(format!("expected Ric = {} g", k * (preset.dim() as f64 - 1.0)));
    }
    rep.header = vec!["point", "maxDeviation"];
    rep.rows = devs.iter().enumerate().map(|(i, d)| vec![json!(i), f(*d)]).collect();
    rep.results = json!({
        "dim": preset.dim(),
        "sectional": kappa.map(f),
        "expected": matrix(&expected),
        "points": points.iter().zip(&devs).map(|(x, d)| json!({"x": x.iter().map(|v| f(*v)).collect::<Vec<_>>(), "maxDeviation": f(*d)})).collect::<Vec<_>>(),
        "maxDeviation": f(worst),
    });
    rep.checks.push(Check::within("frame-ricci", worst, a.tol));
    Ok(rep)
}

#[derive(Args, Debug)]
pub struct WarpedEvalArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long = "r", value_delimiter = ',', required = true)]
    pub r: Vec<f64>,
}

pub fn warped_eval(a: &WarpedEvalArgs, _ctx: &Ctx) -> Result<Report, CliError> {
    let spec = load_spec(&a.spec)?;
    let mut rep = Report::new(
        "warped-eval",
        json!({"spec": spec.to_json_value(), "p": a.p, "r": a.r.iter().map(|v| f(*v)).collect::<Vec<_>>()}),
    );
    rep.header = vec!["r", "rr", "uu", "minEigen", "positiveDefinite"];
    let mut out = Vec::new();
    for &r in &a.r {
        let b = ricci_warped(&spec, r, a.p)?;
        let pd = assemble_and_check_pd(&b, 0.0);
        rep.rows.push(vec![f(r), f(b.rr), f(b.uu), f(pd.min_eigen), json!(pd.positive_definite)]);
        out.push(json!({
            "r": f(r),
            "rr": f(b.rr),
            "uu": f(b.uu),
            "yy": matrix(&b.yy),
            "ry": b.ry.iter().map(|v| f(*v)).collect::<Vec<_>>(),
            "ryTrusted": b.ry_trusted,
            "minEigen": f(pd.min_eigen),
            "positiveDefinite": pd.positive_definite,
        }));
    }
    rep.results = json!({ "blocks": out });
    Ok(rep)
}

#[derive(Args, Debug)]
pub struct WarpedVerifyArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub p: u32,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long = "r", value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0, 2.0, 4.0])]
    pub r: Vec<f64>,
}

fn entries_json(es: &[VerifyEntry]) -> Vec<Value> {
    es.iter()
        .map(|e| {
            json!({
                "r": f(e.r),
                "name": e.name,
                "closedForm": f(e.closed_form),
                "oracle": f(e.oracle),
                "deviation": f(e.deviation),
            })
        })
        .collect()
}

pub fn warped_verify(a: &WarpedVerifyArgs, ctx: &Ctx) -> Result<Report, CliError> {
    positive("tol", a.tol)?;
    let spec = load_spec(&a.spec)?;
    let v = verify_against_oracle_with(&spec, a.p, &a.r, a.tol, ctx.mode)?;
    let mut rep = Report::new(
        "warped-verify",
        json!({"spec": spec.to_json_value(), "p": a.p, "tol": a.tol, "r": a.r.iter().map(|v| f(*v)).collect::<Vec<_>>()}),
    );
    rep.header = vec!["r", "entry", "closedForm", "oracle", "deviation", "gating"];
    for (es, gating) in [(&v.entries, true), (&v.known_erratum, false)] {
        for e in es {
            rep.rows.push(vec![f(e.r), json!(e.name), f(e.closed_form), f(e.oracle), f(e.deviation), json!(gating)]);
        }
    }
    if !v.known_erratum.is_empty() {
        rep.notes.push(format!(
            "Ric(dr, Y_j) sum formula is known to be wrong here; largest deviation {:.3e}, not gating",
            v.max_erratum_deviation()
        ));
    }
    rep.results = json!({
        "realization": format!("{:?}", v.realization),
        "maxDeviation": f(v.max_deviation()),
        "uIsotropy": f(v.u_isotropy),
        "entries": entries_json(&v.entries),
        "knownErratum": {
            "gating": false,
            "maxDeviation": f(v.max_erratum_deviation()),
            "entries": entries_json(&v.known_erratum),
        },
    });
    rep.checks.push(Check::within("closed-form-vs-oracle", v.max_deviation(), a.tol));
    Ok(rep)
}

#[derive(Args, Debug)]
pub struct SmoothnessArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

pub fn smoothness(a: &SmoothnessArgs, _ctx: &Ctx) -> Result<Report, CliError> {
    positive("tol", a.tol)?;
    let spec = load_spec(&a.spec)?;
    let s = smoothness_check(&spec, a.tol)?;
    let mut rep = Report::new("smoothness", json!({"spec": spec.to_json_value(), "tol": a.tol}));
    rep.checks.push(Check::new("f(0) = 0", s.f_vanishes, s.f_value.abs(), a.tol));
    rep.checks.push(Check::new("f'(0) = 1", s.f_unit_slope, (s.f_slope - 1.0).abs(), a.tol));
    rep.checks.push(Check::new("f''(0) = 0", s.f_even_vanishes, s.f_second.abs(), a.tol));
    rep.checks.push(Check::flag("f > 0", s.f_positive));
    for (i, (slope, ok)) in s.h_slopes.iter().zip(&s.h_odd_vanish).enumerate() {
        rep.checks.push(Check::new(format!("h_{i}'(0) = 0"), *ok, slope.abs(), a.tol));
    }
    rep.results = json!({
        "evaluatedAt": f(s.evaluated_at),
        "fValue": f(s.f_value),
        "fSlope": f(s.f_slope),
        "fSecond": f(s.f_second),
        "hSlopes": s.h_slopes.iter().map(|v| f(*v)).collect::<Vec<_>>(),
    });
    Ok(rep)
}

#[derive(Args, Debug)]
pub struct SubmersionInput {
    /// Submersion data JSON (dimB, dimF, ricB, ricF, aUV, aXY, deltaA).
    #[arg(long, conflicts_with = "preset")]
    pub data: Option<PathBuf>,
    /// Built-in data; only `hopf` is available.
    #[arg(long)]
    pub preset: Option<String>,
}

impl SubmersionInput {
    fn load(&self) -> Result<(SubmersionData, Value, bool), CliError> {
        match (&self.data, self.preset.as_deref()) {
            (Some(path), None) => {
                let v: Value = serde_json::from_str(&read(path)?)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                let d = SubmersionData::from_json_value(&v)?;
                Ok((d, json!({"data": v}), false))
            }
            (None, Some("hopf")) => Ok((hopf_preset()?, json!({"preset": "hopf"}), true)),
            (None, Some(other)) => Err(CliError::Usage(format!("unknown submersion preset `{other}`"))),
            _ => Err(CliError::Usage("give --data FILE or --preset hopf".into())),
        }
    }
}

#[derive(Args, Debug)]
pub struct VariationEvalArgs {
    #[command(flatten)]
    pub input: SubmersionInput,
    #[arg(long = "t", value_delimiter = ',', default_values_t = [1.0])]
    pub t: Vec<f64>,
    /// Tolerance for the Berger comparison of the hopf preset.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

pub fn variation_eval(a: &VariationEvalArgs, _ctx: &Ctx) -> Result<Report, CliError> {
    positive("tol", a.tol)?;
    let (d, mut inputs, hopf) = a.input.load()?;
    inputs["t"] = json!(a.t.iter().map(|v| f(*v)).collect::<Vec<_>>());
    inputs["tol"] = f(a.tol);
    let mut rep = Report::new("variation-eval", inputs);
    rep.header = vec!["t", "i", "j", "ricci"];
    let mut out = Vec::new();
    for &t in &a.t {
        let s = canonical_variation_ricci(&d, t)?;
        let full = s.assemble();
        for i in 0..full.nrows() {
            for j in 0..full.ncols() {
                rep.rows.push(vec![f(t), json!(i), json!(j), f(full[(i, j)])]);
            }
        }
        let mut entry = json!({"t": f(t), "vv": matrix(&s.vv), "hh": matrix(&s.hh), "hv": matrix(&s.hv)});
        if hopf {
            let dev = (&full - berger_oracle_ricci(t)?.assemble()).amax();
            entry["bergerOracleDeviation"] = f(dev);
            rep.checks.push(Check::within(format!("berger-oracle t={t}"), dev, a.tol));
            if t == 1.0 {
                let round = (&full - DMatrix::identity(3, 3) * 2.0).amax();
                rep.checks.push(Check::within("round-s3 Ric = 2 g", round, a.tol));
            }
        }
        out.push(entry);
    }
    rep.results = json!({"dimB": d.dim_b(), "dimF": d.dim_f(), "blocks": out});
    Ok(rep)
}

#[derive(Args, Debug)]
pub struct ErrorBoundsArgs {
    #[command(flatten)]
    pub input: SubmersionInput,
    /// Error constant; defaults to the one derived from the A-tensor invariants.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long = "t", value_delimiter = ',', default_values_t = [1.0, 0.5, 0.1, 0.01])]
    pub t: Vec<f64>,
}

pub fn error_bounds(a: &ErrorBoundsArgs, _ctx: &Ctx) -> Result<Report, CliError> {
    let (d, mut inputs, _) = a.input.load()?;
    let c = a.c.unwrap_or_else(|| d.derived_constant());
    if !(c >= 0.0 && c.is_finite()) {
        return Err(CliError::Usage(format!("c must be nonnegative, got {c}")));
    }
    inputs["c"] = a.c.map(f).unwrap_or(Value::Null);
    inputs["t"] = json!(a.t.iter().map(|v| f(*v)).collect::<Vec<_>>());
    let r = error_bound_check(&d, c, &a.t)?;
    let mut rep = Report::new("error-bounds", inputs);
    rep.header = vec!["t", "inequality", "i", "j", "lhs", "bound"];
    rep.rows = r
        .violations
        .iter()
        .map(|v| vec![f(v.t), json!(v.inequality), json!(v.index.0), json!(v.index.1), f(v.lhs), f(v.bound)])
        .collect();
    let none_of = |names: &[&str]| !r.violations.iter().any(|v| names.contains(&v.inequality));
    rep.checks.push(Check::new(
        "off-diagonal |Ric| <= C t",
        none_of(&["vertical off-diagonal", "horizontal off-diagonal", "mixed"]),
        r.offdiag_slack,
        0.0,
    ));
    rep.checks.push(Check::new(
        "vertical Ric >= Ric_F / t^2 - C",
        none_of(&["vertical lower bound"]),
        r.vertical_slack,
        0.0,
    ));
    rep.checks.push(Check::new(
        "horizontal Ric >= Ric_B - C t^2",
        none_of(&["horizontal lower bound"]),
        r.horizontal_slack,
        0.0,
    ));
    rep.results = json!({
        "c": f(c),
        "derivedC": f(r.derived_c),
        "offdiagSlack": f(r.offdiag_slack),
        "verticalSlack": f(r.vertical_slack),
        "horizontalSlack": f(r.horizontal_slack),
        "violations": r.violations.len(),
    });
    Ok(rep)
}

#[derive(Args, Debug)]
pub struct MinpArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub c: f64,
    /// Exponents m_i, comma separated; a single value is used for every direction.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub r_min: f64,
    #[arg(long, default_value_t = 50.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 2000)]
    pub points: usize,
}

fn exponents(n: usize, m: &[f64]) -> Vec<f64> {
    if m.len() == 1 {
        vec![m[0]; n]
    } else {
        m.to_vec()
    }
}

pub fn minp(a: &MinpArgs, ctx: &Ctx) -> Result<Report, CliError> {
    let mi = exponents(a.n, &a.m);
    let grid = GridSpec {
        r_min: a.r_min,
        r_max: a.r_max,
        points: a.points,
    };
    let res = min_p_with(a.n, a.c, &mi, grid, ctx.mode)?;
    let lo = mi.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mi.iter().cloned().fold(0.0, f64::max);
    let k = if a.n == 0 { k_bound_interval(0, a.c, 1.0, 1.0).ok() } else { k_bound_interval(a.n, a.c, lo, hi).ok() };
    let mut rep = Report::new(
        "minp",
        json!({"n": a.n, "c": f(a.c), "m": mi.iter().map(|v| f(*v)).collect::<Vec<_>>(), "rMin": f(a.r_min), "rMax": f(a.r_max), "points": a.points}),
    );
    rep.header = vec!["p", "minMargin", "atR"];
    for g in [res.below, res.certificate].into_iter().flatten() {
        rep.rows.push(vec![json!(g.p), f(g.min_margin), f(g.at_r)]);
    }
    match (res.p_star, res.certificate) {
        (Some(p), Some(cert)) => {
            rep.checks.push(Check::new("positive definite at pStar", cert.pass(), cert.min_margin, 0.0));
            if let Some(b) = res.below {
                rep.checks.push(Check::new("fails at pStar - 1", !b.pass(), b.min_margin, 0.0));
            }
            if let Some(k) = k {
                rep.checks.push(Check::new("pStar <= k bound", p as f64 <= k.max(2.0), p as f64, k));
            }
        }
        _ => rep.notes.push(format!(
            "no p up to {} makes the Ricci tensor positive definite on the grid",
            ricci_forge::positivity::P_LIMIT
        )),
    }
    rep.results = json!({
        "pStar": res.p_star,
        "kBound": k.map(f),
        "gridPoints": res.grid_points,
        "rMax": f(res.r_max),
        "marginAtPStar": res.certificate.map(|g| f(g.min_margin)),
        "marginBelow": res.below.map(|g| f(g.min_margin)),
    });
    Ok(rep)
}

#[derive(Args, Debug)]
pub struct KboundArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub m: f64,
    /// Smallest exponent; defaults to `m`.
    #[arg(long)]
    pub m_floor: Option<f64>,
}

pub fn kbound(a: &KboundArgs, _ctx: &Ctx) -> Result<Report, CliError> {
    let floor = a.m_floor.unwrap_or(a.m);
    let k = k_bound_interval(a.n, a.c, floor, a.m)?;
    let p = (k.floor() as u64).saturating_add(1).max(2);
    let mut rep = Report::new("kbound", json!({"n": a.n, "c": f(a.c), "m": f(a.m), "mFloor": f(floor)}));
    rep.header = vec!["k", "pBound"];
    rep.rows.push(vec![f(k), json!(p)]);
    rep.results = json!({"k": f(k), "pBound": p});
    Ok(rep)
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[arg(long)]
    pub file: PathBuf,
    /// Also search for the smallest p with every m_i equal to m.
    #[arg(long)]
    pub search: bool,
}

pub fn plan(a: &PlanArgs, _ctx: &Ctx) -> Result<Report, CliError> {
    let text = read(&a.file)?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.file.display())))?;
    let plan = BundlePlan::from_json_value(&raw)?;
    let options = PlanOptions {
        search: a.search,
        ..PlanOptions::default()
    };
    let r = evaluate_plan_with(&plan, options)?;
    let mut rep = Report::new("plan", json!({"plan": raw, "search": a.search}));
    rep.header = vec!["node", "rule", "detail", "certificate"];
    rep.rows = r
        .trace
        .iter()
        .map(|s| vec![json!(s.node), json!(s.rule), json!(s.detail), json!(s.result.to_string())])
        .collect();
    rep.results = json!({
        "certificate": r.certificate.to_json_value(),
        "normalized": r.normalized.to_json_value(),
        "kBound": f(r.k_bound),
        "pBound": r.p_bound,
        "pSearch": r.search.as_ref().map(|s| s.p_star),
        "trace": r.trace.iter().map(|s| s.to_json_value()).collect::<Vec<_>>(),
    });
    if let Some(s) = &r.search {
        if let Some(p) = s.p_star {
            rep.checks.push(Check::new("searched p <= pBound", p <= r.p_bound, p as f64, r.p_bound as f64));
        }
    }
    Ok(rep)
}
