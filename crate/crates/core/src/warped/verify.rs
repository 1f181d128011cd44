//! Chart realizations of warped families and comparison with the oracle.

use nalgebra::DMatrix;

use super::{ricci_warped, BaseRicci, RicciBlocks, WarpedError, WarpedFamilySpec};
use crate::lie::{GroupChart, StructureConstants};
use crate::oracle::{self, ChartMetric, DiffScheme, FrameAtPoint, OracleError};
use crate::parallel::{self, Mode};

/// Which group chart realizes `E` for this spec, if any.
pub fn realization(spec: &WarpedFamilySpec) -> Result<GroupChart, WarpedError> {
    let n = spec.n();
    let c = spec.structure();
    let lie_or_zero = match spec.base_ricci() {
        BaseRicci::Zero | BaseRicci::LieAlgebra => true,
        BaseRicci::Constant(m) => m.iter().all(|v| *v == 0.0),
        BaseRicci::ScaledIdentity(_) => false,
    };
    let unrealizable = |why: &str| Err(WarpedError::Unrealizable(why.to_string()));
    if c.is_zero() {
        if !lie_or_zero {
            return unrealizable("a flat torus has zero Ricci curvature");
        }
        return Ok(GroupChart::Torus(n));
    }
    if !matches!(spec.base_ricci(), BaseRicci::LieAlgebra) {
        return unrealizable("non-abelian bases need baseRicci = lieAlgebra");
    }
    if n == 3 && *c == StructureConstants::su2() {
        return Ok(GroupChart::S3);
    }
    if n == 2 && *c == StructureConstants::affine() {
        return Ok(GroupChart::Affine);
    }
    unrealizable("structure constants match neither su(2) nor the affine algebra")
}

fn sphere_point(p: u32) -> Vec<f64> {
    [0.1, -0.07, 0.05, 0.03, -0.02, 0.04, 0.06][..(p as usize - 1)].to_vec()
}

/// The metric `S(x)ᵀ diag(h(r)²) S(x) + f(r)² ds² + dr²` in coordinates `(x, y, r)`,
/// with the sphere in stereographic coordinates `y`.
pub fn warped_chart(
    spec: &WarpedFamilySpec,
    group: GroupChart,
    p: u32,
) -> Result<ChartMetric, WarpedError> {
    let n = spec.n();
    let u = p as usize - 1;
    let dim = n + u + 1;
    let spec = spec.clone();
    let chart = ChartMetric::new(dim, move |z: &[f64]| {
        let (x, rest) = z.split_at(n);
        let (y, r) = rest.split_at(u);
        let r = r[0];
        let eval = |e: &crate::exprs::Expr| {
            e.eval(r).map_err(|err| OracleError::Evaluation(err.to_string()))
        };
        let f = eval(&spec.f().expr)?;
        let hs = spec
            .h()
            .iter()
            .map(|p| eval(&p.expr))
            .collect::<Result<Vec<_>, _>>()?;
        let mut g = DMatrix::zeros(dim, dim);
        if n > 0 {
            let base = group.left_invariant_metric(x, &hs);
            g.view_mut((0, 0), (n, n)).copy_from(&base);
        }
        let y2: f64 = y.iter().map(|v| v * v).sum();
        let conformal = 2.0 * f / (1.0 + y2);
        for a in 0..u {
            g[(n + a, n + a)] = conformal * conformal;
        }
        g[(dim - 1, dim - 1)] = 1.0;
        Ok(g)
    })?;
    Ok(chart
        .with_domain(move |z| z[dim - 1] > 0.0 && group.contains(&z[..n]))
        .with_label(format!("warped:{group:?}:p={p}")))
}

/// Orthonormal frame `[∂_r, U_1.., Y_1..]` of the warped chart at radius `r`.
pub fn warped_frame(
    spec: &WarpedFamilySpec,
    group: GroupChart,
    p: u32,
    r: f64,
) -> Result<FrameAtPoint, WarpedError> {
    let n = spec.n();
    let u = p as usize - 1;
    let dim = n + u + 1;
    let x = group.base_point();
    let y = sphere_point(p);
    let (f, h) = spec.jets(r)?;
    let mut point = x.clone();
    point.extend_from_slice(&y);
    point.push(r);

    let mut frame = DMatrix::zeros(dim, dim);
    frame[(dim - 1, 0)] = 1.0;
    let y2: f64 = y.iter().map(|v| v * v).sum();
    for a in 0..u {
        frame[(n + a, 1 + a)] = (1.0 + y2) / (2.0 * f[0]);
    }
    if n > 0 {
        let xs = group.frame(&x);
        for i in 0..n {
            for k in 0..n {
                frame[(k, 1 + u + i)] = xs[(k, i)] / h[i][0];
            }
        }
    }
    Ok(FrameAtPoint::new(point, frame))
}

/// One compared quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyEntry {
    pub r: f64,
    pub name: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub p: u32,
    pub tol: f64,
    pub realization: GroupChart,
    /// Entries that decide `pass`: `rr`, `uu`, `yy`, the vanishing mixed `U` terms,
    /// and `ry` when the sum formula is trusted.
    pub entries: Vec<VerifyEntry>,
    /// `Ric(∂_r, Y_j)` when the sum formula is not trusted; informational only.
    pub known_erratum: Vec<VerifyEntry>,
    /// Largest deviation of the oracle `U`-block from a multiple of the identity.
    pub u_isotropy: f64,
    pub pass: bool,
}

impl VerifyReport {
    pub fn max_deviation(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.deviation))
    }

    pub fn max_erratum_deviation(&self) -> f64 {
        self.known_erratum.iter().fold(0.0, |m, e| m.max(e.deviation))
    }
}

struct RadiusResult {
    entries: Vec<VerifyEntry>,
    erratum: Vec<VerifyEntry>,
    isotropy: f64,
}

fn compare_at(
    spec: &WarpedFamilySpec,
    chart: &ChartMetric,
    group: GroupChart,
    p: u32,
    r: f64,
) -> Result<RadiusResult, WarpedError> {
    let blocks: RicciBlocks = ricci_warped(spec, r, p)?;
    let frame = warped_frame(spec, group, p, r)?;
    let m = oracle::frame_ricci_with(chart, &frame, DiffScheme::default())?;
    let n = spec.n();
    let u = p as usize - 1;
    let entry = |name: String, closed_form: f64, oracle: f64| VerifyEntry {
        r,
        name,
        closed_form,
        oracle,
        deviation: (closed_form - oracle).abs(),
    };

    let mut entries = vec![entry("rr".into(), blocks.rr, m[(0, 0)])];
    let mut isotropy: f64 = 0.0;
    let mut mixed: f64 = 0.0;
    let mut worst_uu = (0.0, blocks.uu);
    for a in 0..u {
        let v = m[(1 + a, 1 + a)];
        let dev = (v - blocks.uu).abs();
        if dev >= worst_uu.0 {
            worst_uu = (dev, v);
        }
        isotropy = isotropy.max((v - m[(1, 1)]).abs());
        for b in (a + 1)..u {
            isotropy = isotropy.max(m[(1 + a, 1 + b)].abs());
        }
        mixed = mixed.max(m[(0, 1 + a)].abs());
        for j in 0..n {
            mixed = mixed.max(m[(1 + a, 1 + u + j)].abs());
        }
    }
    entries.push(entry("uu".into(), blocks.uu, worst_uu.1));
    for i in 0..n {
        for j in i..n {
            entries.push(entry(
                format!("yy[{i}][{j}]"),
                blocks.yy[(i, j)],
                m[(1 + u + i, 1 + u + j)],
            ));
        }
    }
    entries.push(entry("mixedU".into(), 0.0, mixed));
    let ry: Vec<VerifyEntry> = (0..n)
        .map(|j| entry(format!("ry[{j}]"), blocks.ry[j], m[(0, 1 + u + j)]))
        .collect();
    let erratum = if blocks.ry_trusted {
        entries.extend(ry);
        Vec::new()
    } else {
        ry
    };
    Ok(RadiusResult {
        entries,
        erratum,
        isotropy,
    })
}

/// Compares the closed-form blocks with the oracle at each radius in `rs`.
pub fn verify_against_oracle(
    spec: &WarpedFamilySpec,
    p: u32,
    rs: &[f64],
    tol: f64,
) -> Result<VerifyReport, WarpedError> {
    verify_against_oracle_with(spec, p, rs, tol, Mode::default())
}

pub fn verify_against_oracle_with(
    spec: &WarpedFamilySpec,
    p: u32,
    rs: &[f64],
    tol: f64,
    mode: Mode,
) -> Result<VerifyReport, WarpedError> {
    if !(3..=5).contains(&p) {
        return Err(WarpedError::Unrealizable(format!(
            "oracle comparison supports p in 3..=5, got {p}"
        )));
    }
    let group = realization(spec)?;
    if spec.n() + p as usize > oracle::MAX_DIM {
        return Err(WarpedError::Unrealizable(format!(
            "total dimension {} exceeds the oracle limit {}",
            spec.n() + p as usize,
            oracle::MAX_DIM
        )));
    }
    let chart = warped_chart(spec, group, p)?;
    let per_r = parallel::try_map(mode, rs, |&r| compare_at(spec, &chart, group, p, r))?;
    let mut report = VerifyReport {
        p,
        tol,
        realization: group,
        entries: Vec::new(),
        known_erratum: Vec::new(),
        u_isotropy: 0.0,
        pass: true,
    };
    for res in per_r {
        report.entries.extend(res.entries);
        report.known_erratum.extend(res.erratum);
        report.u_isotropy = report.u_isotropy.max(res.isotropy);
    }
    report.pass = report.entries.iter().all(|e| e.deviation <= tol);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessReport {
    /// Radius at which the origin conditions were evaluated (0 or a small positive fallback).
    pub evaluated_at: f64,
    pub f_value: f64,
    pub f_slope: f64,
    pub f_second: f64,
    pub h_slopes: Vec<f64>,
    pub f_vanishes: bool,
    pub f_unit_slope: bool,
    pub f_even_vanishes: bool,
    pub f_positive: bool,
    pub h_odd_vanish: Vec<bool>,
}

impl SmoothnessReport {
    pub fn all_pass(&self) -> bool {
        self.f_vanishes
            && self.f_unit_slope
            && self.f_even_vanishes
            && self.f_positive
            && self.h_odd_vanish.iter().all(|b| *b)
    }
}

/// Radii used for positivity sampling: log-spaced up to 1, then uniform up to 50.
pub(crate) fn smoothness_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..40).map(|k| 10f64.powf(-4.0 + 4.0 * k as f64 / 40.0)).collect();
    grid.extend((0..=98).map(|k| 1.0 + 49.0 * k as f64 / 98.0));
    grid
}

const ORIGIN_FALLBACK: f64 = 1e-6;

fn jet_near_origin(p: &super::Profile) -> Result<(f64, [f64; 3]), WarpedError> {
    match p.jet(0.0) {
        Ok(j) if j.iter().all(|v| v.is_finite()) => Ok((0.0, j)),
        _ => Ok((ORIGIN_FALLBACK, p.jet(ORIGIN_FALLBACK)?)),
    }
}

/// Checks the conditions for the metric to close up smoothly at `r = 0`.
pub fn smoothness_check(spec: &WarpedFamilySpec, tol: f64) -> Result<SmoothnessReport, WarpedError> {
    let (at_f, [f0, f1, f2]) = jet_near_origin(spec.f())?;
    let mut evaluated_at = at_f;
    let mut h_slopes = Vec::with_capacity(spec.n());
    for p in spec.h() {
        let (at, jet) = jet_near_origin(p)?;
        evaluated_at = evaluated_at.max(at);
        h_slopes.push(jet[1]);
    }
    let f_positive = smoothness_grid()
        .into_iter()
        .all(|r| spec.f().expr.eval(r).map(|v| v > 0.0).unwrap_or(false));
    Ok(SmoothnessReport {
        evaluated_at,
        f_value: f0,
        f_slope: f1,
        f_second: f2,
        f_vanishes: f0.abs() <= tol,
        f_unit_slope: (f1 - 1.0).abs() <= tol,
        f_even_vanishes: f2.abs() <= tol,
        f_positive,
        h_odd_vanish: h_slopes.iter().map(|s| s.abs() <= tol).collect(),
        h_slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprs::Expr;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn smoothness_of_standard_profiles() {
        let spec = WarpedFamilySpec::flat(e("r*(1+r^2)^(-1/4)"), vec![e("(1+r^2)^(-1)")]);
        assert!(smoothness_check(&spec, 1e-9).unwrap().all_pass());
        let sine = WarpedFamilySpec::flat(e("sin(r)"), vec![]);
        let rep = smoothness_check(&sine, 1e-12).unwrap();
        assert!(rep.f_vanishes && rep.f_unit_slope && rep.f_even_vanishes);
        let square = WarpedFamilySpec::flat(e("r^2"), vec![]);
        let rep = smoothness_check(&square, 1e-9).unwrap();
        assert!(!rep.f_unit_slope);
        assert!(!rep.all_pass());
    }

    #[test]
    fn origin_singularities_fall_back_to_small_radius() {
        let spec = WarpedFamilySpec::flat(e("r"), vec![e("1+r^2*sqrt(r)/sqrt(r)")]);
        let rep = smoothness_check(&spec, 1e-3).unwrap();
        assert_eq!(rep.evaluated_at, ORIGIN_FALLBACK);
        assert!(rep.h_odd_vanish[0]);
    }

    #[test]
    fn realizations() {
        let torus = WarpedFamilySpec::flat(e("r"), vec![e("1"), e("2")]);
        assert_eq!(realization(&torus).unwrap(), GroupChart::Torus(2));
        let s3 = WarpedFamilySpec::new(
            e("r"),
            vec![e("1"), e("1"), e("1")],
            StructureConstants::su2(),
            BaseRicci::LieAlgebra,
        )
        .unwrap();
        assert_eq!(realization(&s3).unwrap(), GroupChart::S3);
        let scaled = WarpedFamilySpec::new(
            e("r"),
            vec![e("1")],
            StructureConstants::zero(1),
            BaseRicci::ScaledIdentity(e("1")),
        )
        .unwrap();
        assert!(matches!(realization(&scaled), Err(WarpedError::Unrealizable(_))));
    }

    #[test]
    fn warped_frame_is_orthonormal() {
        let spec = WarpedFamilySpec::flat(e("r*(1+r^2)^(-1/4)"), vec![e("(1+r^2)^(-1)")]);
        let chart = warped_chart(&spec, GroupChart::Torus(1), 3).unwrap();
        let frame = warped_frame(&spec, GroupChart::Torus(1), 3, 0.8).unwrap();
        assert!(frame.orthonormality_defect(&chart).unwrap() < 1e-14);
    }
}
