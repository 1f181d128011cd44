//! Positive Ricci curvature for the warped family with the standard profiles
//! `h = (1+r²)^(-1)`, `f = r (1+r²)^(-1/4)` and `h_i = h^{m_i}`, when the base
//! family only satisfies `Ric(Y_i, Y_i) ≥ -c h²` and `|Ric(Y_i, Y_j)| ≤ c h²`.
//!
//! With `x = r²` every diagonal entry of the Ricci tensor is bounded below by
//! `h² (x (pK - L) + pR - S)` for per-direction coefficients derived below.

use thiserror::Error;

use crate::exprs::Expr;
use crate::parallel::{self, Mode};
use crate::warped::{assemble_and_check_pd, RicciBlocks};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PositivityError {
    #[error("exponent m_{index} is zero; every m_i must be positive")]
    ZeroExponent { index: usize },
    #[error("{name} must be nonnegative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("m must be positive, got {0}")]
    NonPositiveM(f64),
    #[error("expected {n} exponents, got {got}")]
    Dimension { n: usize, got: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
}

/// `(f, h)`: `f = r (1+r²)^(-1/4)`, `h = (1+r²)^(-1)`.
pub fn standard_profiles() -> (Expr, Expr) {
    (
        Expr::parse("r*(1+r^2)^(-1/4)").expect("valid literal"),
        Expr::parse("(1+r^2)^(-1)").expect("valid literal"),
    )
}

/// `((1+x)^(5/2) - (1 + x/2)²) / x`, evaluated without cancellation near `x = 0`.
fn aux_numerator_over_x(x: f64) -> f64 {
    (2.5 * x.ln_1p()).exp_m1() / x - 1.0 - x / 4.0
}

/// `(1 - f'²) / f²` for the standard `f`.
pub fn sphere_term(r: f64) -> f64 {
    let x = r * r;
    let h = 1.0 / (1.0 + x);
    h * h * aux_numerator_over_x(x)
}

/// `(1 - f'²)/f² - h² (3/2 + r²)`, which is nonnegative for all `r > 0`.
pub fn aux_inequality_margin(r: f64) -> f64 {
    let x = r * r;
    let h = 1.0 / (1.0 + x);
    h * h * (aux_numerator_over_x(x) - 1.5 - x)
}

fn check_inputs(n: usize, c: f64, mi: &[f64]) -> Result<(), PositivityError> {
    if mi.len() != n {
        return Err(PositivityError::Dimension { n, got: mi.len() });
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(PositivityError::Negative { name: "c", value: c });
    }
    for &m in mi {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(PositivityError::Negative { name: "m_i", value: m });
        }
    }
    Ok(())
}

/// Diagonal Ricci entries at `(r, p)` under the worst-case base Ricci `-c h²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagonals {
    pub r: f64,
    pub h2: f64,
    pub rr: f64,
    pub uu: f64,
    pub yy: Vec<f64>,
    /// Bound on each off-diagonal base entry, `c h²`.
    pub slack: f64,
}

/// Closed-form diagonals at `(r, p)`; equal to the general warped formulas with
/// these profiles, rearranged to avoid cancellation.
pub fn diagonals(c: f64, mi: &[f64], p: u64, r: f64) -> Diagonals {
    let x = r * r;
    let h = 1.0 / (1.0 + x);
    let h2 = h * h;
    let pf = p as f64;
    let big_m: f64 = mi.iter().sum();
    let uu = (pf - 2.0) * sphere_term(r) + h2 * (2.0 * big_m + big_m * x + 1.5 + x / 4.0);
    let rr = h2
        * ((pf - 1.0) * (1.5 + x / 4.0)
            + mi
                .iter()
                .map(|m| 2.0 * m - (2.0 * m + 4.0 * m * m) * x)
                .sum::<f64>());
    let yy = mi
        .iter()
        .map(|m| h2 * (x * (pf * m - 3.0 * m - 4.0 * m * big_m) + 2.0 * m * pf) - c * h2)
        .collect();
    Diagonals {
        r,
        h2,
        rr,
        uu,
        yy,
        slack: c * h2,
    }
}

impl Diagonals {
    pub fn blocks(&self, p: u64) -> RicciBlocks {
        let n = self.yy.len();
        RicciBlocks {
            r: self.r,
            p: p.min(u32::MAX as u64) as u32,
            rr: self.rr,
            uu: self.uu,
            yy: nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.yy)),
            ry: nalgebra::DVector::zeros(n),
            ry_trusted: true,
        }
    }

    /// Certified lower bound on the smallest Ricci eigenvalue.
    pub fn margin(&self, p: u64) -> f64 {
        assemble_and_check_pd(&self.blocks(p), self.slack).min_eigen
    }
}

/// `x (pK - L) + pR - S`, a lower bound for a diagonal entry divided by `h²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub k: f64,
    pub l: f64,
    pub r: f64,
    pub s: f64,
}

impl Coefficients {
    pub fn bound(&self, p: f64, x: f64) -> f64 {
        x * (p * self.k - self.l) + p * self.r - self.s
    }

    /// For `p` at or above this the bound is positive for every `x ≥ 0`.
    pub fn threshold(&self) -> f64 {
        (self.l / self.k).max(self.s / self.r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityCoefficients {
    pub n: usize,
    pub c: f64,
    pub mi: Vec<f64>,
    pub radial: Coefficients,
    /// Valid for `p ≥ 2`, using the auxiliary inequality for the sphere term.
    pub sphere: Coefficients,
    /// One per base direction, already net of the Gershgorin radius `(n-1) c h²`.
    pub base: Vec<Coefficients>,
}

impl PositivityCoefficients {
    pub fn threshold(&self) -> f64 {
        self.base
            .iter()
            .map(Coefficients::threshold)
            .fold(self.radial.threshold().max(self.sphere.threshold()), f64::max)
    }
}

pub fn derive_coefficients(
    n: usize,
    c: f64,
    mi: &[f64],
) -> Result<PositivityCoefficients, PositivityError> {
    check_inputs(n, c, mi)?;
    if let Some(index) = mi.iter().position(|m| *m == 0.0) {
        return Err(PositivityError::ZeroExponent { index: index + 1 });
    }
    let big_m: f64 = mi.iter().sum();
    let radial = Coefficients {
        k: 0.25,
        l: 0.25 + mi.iter().map(|m| 4.0 * m * m + 2.0 * m).sum::<f64>(),
        r: 1.5,
        s: 1.5 - 2.0 * big_m,
    };
    let sphere = Coefficients {
        k: 1.0,
        l: 1.75 - big_m,
        r: 1.5,
        s: 1.5 - 2.0 * big_m,
    };
    let base = mi
        .iter()
        .map(|&m| Coefficients {
            k: m,
            l: 3.0 * m + 4.0 * m * big_m,
            r: 2.0 * m,
            s: n as f64 * c,
        })
        .collect();
    Ok(PositivityCoefficients {
        n,
        c,
        mi: mi.to_vec(),
        radial,
        sphere,
        base,
    })
}

/// Sufficient threshold when every `m_i` lies in `[m_floor, m]`: any `p` at or
/// above it makes all diagonal bounds positive.
pub fn k_bound_interval(n: usize, c: f64, m_floor: f64, m: f64) -> Result<f64, PositivityError> {
    if !(m_floor > 0.0) || !(m >= m_floor) || !m.is_finite() {
        return Err(PositivityError::NonPositiveM(m_floor.min(m)));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(PositivityError::Negative { name: "c", value: c });
    }
    let nf = n as f64;
    let radial_l = 1.0 + 4.0 * nf * (4.0 * m * m + 2.0 * m);
    let radial_s = 1.0 - 4.0 * nf * m_floor / 3.0;
    let sphere_l = 1.75 - nf * m_floor;
    let base_l = if n > 0 { 3.0 + 4.0 * nf * m } else { f64::NEG_INFINITY };
    let base_s = if n > 0 { nf * c / (2.0 * m_floor) } else { f64::NEG_INFINITY };
    Ok([radial_l, radial_s, sphere_l, base_l, base_s]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Threshold for `m_i = m` in every direction.
pub fn k_bound(n: usize, c: f64, m: f64) -> Result<f64, PositivityError> {
    if !(m > 0.0) {
        return Err(PositivityError::NonPositiveM(m));
    }
    k_bound_interval(n, c, m, m)
}

/// Sample radii: a log-spaced head from `r_min` to 1 and a uniform tail to `r_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            r_min: 1e-4,
            r_max: 50.0,
            points: 2000,
        }
    }
}

impl GridSpec {
    pub fn with_r_max(self, r_max: f64) -> Self {
        GridSpec { r_max, ..self }
    }

    pub fn radii(&self) -> Result<Vec<f64>, PositivityError> {
        if !(self.r_min > 0.0 && self.r_min < 1.0 && self.r_max > 1.0 && self.r_max.is_finite()) {
            return Err(PositivityError::Grid(format!(
                "need 0 < r_min < 1 < r_max, got r_min = {}, r_max = {}",
                self.r_min, self.r_max
            )));
        }
        if self.points < 8 {
            return Err(PositivityError::Grid("at least 8 points are required".into()));
        }
        let head = self.points / 4;
        let tail = self.points - head;
        let lo = self.r_min.ln();
        let mut radii: Vec<f64> = (0..head)
            .map(|k| (lo * (1.0 - k as f64 / head as f64)).exp())
            .collect();
        radii.extend((1..=tail).map(|k| 1.0 + (self.r_max - 1.0) * k as f64 / tail as f64));
        Ok(radii)
    }
}

/// Where the margin is smallest for a given `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCheck {
    pub p: u64,
    pub min_margin: f64,
    pub at_r: f64,
}

impl GridCheck {
    pub fn pass(&self) -> bool {
        self.min_margin > 0.0
    }
}

pub fn check_pd_on_grid(c: f64, mi: &[f64], p: u64, radii: &[f64], mode: Mode) -> GridCheck {
    let margins = parallel::map(mode, radii, |&r| diagonals(c, mi, p, r).margin(p));
    let (min_margin, at_r) = margins
        .iter()
        .zip(radii)
        .fold((f64::INFINITY, f64::NAN), |acc, (&m, &r)| if m < acc.0 { (m, r) } else { acc });
    GridCheck {
        p,
        min_margin,
        at_r,
    }
}

pub const P_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct MinP {
    pub p_star: Option<u64>,
    /// Grid check at `p_star`.
    pub certificate: Option<GridCheck>,
    /// Grid check at `p_star - 1` (when that is at least 2).
    pub below: Option<GridCheck>,
    pub grid_points: usize,
    pub r_max: f64,
}

/// Smallest `p ≥ 2` for which the Ricci tensor is positive definite on the grid.
pub fn min_p(n: usize, c: f64, mi: &[f64], grid: GridSpec) -> Result<MinP, PositivityError> {
    min_p_with(n, c, mi, grid, Mode::default())
}

pub fn min_p_with(
    n: usize,
    c: f64,
    mi: &[f64],
    grid: GridSpec,
    mode: Mode,
) -> Result<MinP, PositivityError> {
    check_inputs(n, c, mi)?;
    let radii = grid.radii()?;
    let check = |p: u64| check_pd_on_grid(c, mi, p, &radii, mode);
    let mut result = MinP {
        p_star: None,
        certificate: None,
        below: None,
        grid_points: radii.len(),
        r_max: grid.r_max,
    };
    if !check(P_LIMIT).pass() {
        return Ok(result);
    }
    // each diagonal is affine in p with nonnegative slope, so the predicate is monotone
    let mut hi = 2;
    while hi < P_LIMIT && !check(hi).pass() {
        hi = (hi * 2).min(P_LIMIT);
    }
    let mut lo = hi / 2;
    if hi == 2 {
        lo = 1;
    }
    // invariant: check(lo) fails or lo < 2, check(hi) passes
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if check(mid).pass() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    result.p_star = Some(hi);
    result.certificate = Some(check(hi));
    if hi > 2 {
        result.below = Some(check(hi - 1));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warped::{ricci_warped, WarpedFamilySpec};

    #[test]
    fn profiles_have_expected_values() {
        let (f, h) = standard_profiles();
        assert_eq!(h.eval(1.0).unwrap(), 0.5);
        assert!((f.eval(1.0).unwrap() - 2f64.powf(-0.25)).abs() < 1e-15);
        assert_eq!(f.diff(1).eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn stable_diagonals_match_general_formulas() {
        let (f, h) = standard_profiles();
        for mi in [vec![1.0], vec![1.0, 2.0], vec![0.5, 1.0, 1.5]] {
            let hs = mi
                .iter()
                .map(|m| Expr::Pow(Box::new(h.clone()), crate::exprs::Rational::new((m * 2.0) as i64, 2)))
                .collect();
            let spec = WarpedFamilySpec::flat(f.clone(), hs);
            for p in [2u64, 3, 17, 400] {
                for r in [0.05, 0.3, 1.0, 2.5, 9.0, 40.0] {
                    let b = ricci_warped(&spec, r, p as u32).unwrap();
                    let d = diagonals(0.0, &mi, p, r);
                    let scale = 1.0 + b.rr.abs() + b.uu.abs();
                    assert!((b.rr - d.rr).abs() < 1e-12 * scale, "rr m={mi:?} p={p} r={r}");
                    assert!((b.uu - d.uu).abs() < 1e-10 * scale, "uu m={mi:?} p={p} r={r}");
                    for (i, y) in d.yy.iter().enumerate() {
                        let yscale = 1.0 + y.abs();
                        assert!((b.yy[(i, i)] - y).abs() < 1e-10 * yscale, "yy m={mi:?} p={p} r={r}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_exponent_is_rejected_by_coefficients() {
        assert_eq!(
            derive_coefficients(2, 0.0, &[1.0, 0.0]),
            Err(PositivityError::ZeroExponent { index: 2 })
        );
    }

    #[test]
    fn coefficient_positivity_and_c_dependence() {
        let a = derive_coefficients(2, 1.0, &[1.0, 2.0]).unwrap();
        let b = derive_coefficients(2, 2.0, &[1.0, 2.0]).unwrap();
        for co in [a.radial, a.sphere].iter().chain(&a.base) {
            assert!(co.k > 0.0 && co.r > 0.0);
        }
        assert_eq!(a.radial, b.radial);
        assert_eq!(a.sphere, b.sphere);
        for (x, y) in a.base.iter().zip(&b.base) {
            assert_eq!((x.k, x.l, x.r), (y.k, y.l, y.r));
            assert_eq!(y.s, 2.0 * x.s);
        }
        let unit = derive_coefficients(1, 0.0, &[1.0]).unwrap();
        assert!(2.0 * unit.sphere.k - unit.sphere.l >= 0.0);
    }

    #[test]
    fn k_bound_values() {
        assert_eq!(k_bound(1, 0.0, 1.0).unwrap(), 25.0);
        assert_eq!(k_bound(2, 0.0, 1.0).unwrap(), 49.0);
        assert_eq!(k_bound(3, 1.0, 1.0).unwrap(), 73.0);
        assert!(k_bound(1, 0.0, 0.0).is_err());
        let co = derive_coefficients(3, 1.0, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(co.threshold(), k_bound(3, 1.0, 1.0).unwrap());
    }

    #[test]
    fn grid_shape() {
        let radii = GridSpec::default().radii().unwrap();
        assert_eq!(radii.len(), 2000);
        assert!((radii[0] - 1e-4).abs() < 1e-18);
        assert_eq!(*radii.last().unwrap(), 50.0);
        assert!(radii.windows(2).all(|w| w[0] < w[1]));
        assert!(GridSpec { r_min: 0.0, ..GridSpec::default() }.radii().is_err());
    }

    #[test]
    fn single_direction_search() {
        let res = min_p_with(1, 0.0, &[1.0], GridSpec::default(), Mode::Sequential).unwrap();
        assert_eq!(res.p_star, Some(25));
        assert!(res.certificate.unwrap().pass());
        assert!(!res.below.unwrap().pass());
        let none = min_p(1, 0.0, &[0.0], GridSpec::default()).unwrap();
        assert_eq!(none.p_star, None);
    }
}
