//! Finite-difference curvature of metrics given in a coordinate chart.
//!
//! This is the ground truth every closed form in the crate is checked
//! against. Metric components are differentiated with fourth-order central
//! stencils (plus one Richardson level by default); the derivatives of the
//! Christoffel symbols are then assembled analytically from the first and
//! second metric derivatives rather than by nested differencing.

pub mod presets;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

pub use presets::Preset;

/// Largest chart dimension the oracle accepts.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("chart dimension {0} is outside 1..={MAX_DIM}")]
    Dimension(usize),
    #[error("point has {got} coordinates, chart expects {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("stencil point {point:?} leaves the chart domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("metric is numerically singular (condition number {condition:e})")]
    Singular { condition: f64 },
    #[error("metric evaluation produced a non-finite component")]
    NonFinite,
    #[error("frame is not orthonormal (max deviation {defect:e})")]
    FrameNotOrthonormal { defect: f64 },
    #[error("degenerate plane (area element {denominator:e})")]
    DegeneratePlane { denominator: f64 },
    #[error("metric evaluation failed: {0}")]
    Evaluation(String),
    #[error("unknown chart preset `{0}`")]
    UnknownPreset(String),
}

pub type MetricFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>, OracleError> + Send + Sync;
pub type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A metric on an open subset of `R^d`.
///
/// Only the lower triangle of the evaluator's output is read, so the metric is
/// symmetric by construction.
#[derive(Clone)]
pub struct ChartMetric {
    dim: usize,
    metric: Arc<MetricFn>,
    domain: Arc<DomainFn>,
    label: Option<String>,
}

impl fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMetric")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl ChartMetric {
    pub fn new<F>(dim: usize, metric: F) -> Result<Self, OracleError>
    where
        F: Fn(&[f64]) -> Result<DMatrix<f64>, OracleError> + Send + Sync + 'static,
    {
        if dim == 0 || dim > MAX_DIM {
            return Err(OracleError::Dimension(dim));
        }
        Ok(ChartMetric {
            dim,
            metric: Arc::new(metric),
            domain: Arc::new(|_| true),
            label: None,
        })
    }

    pub fn with_domain<D>(mut self, domain: D) -> Self
    where
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.domain = Arc::new(domain);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && (self.domain)(x)
    }

    fn components(&self, x: &[f64]) -> Result<DMatrix<f64>, OracleError> {
        if x.len() != self.dim {
            return Err(OracleError::PointDimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !(self.domain)(x) {
            return Err(OracleError::OutsideDomain { point: x.to_vec() });
        }
        let raw = (self.metric)(x)?;
        let d = self.dim;
        let mut g = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let v = raw[(i, j)];
                if !v.is_finite() {
                    return Err(OracleError::NonFinite);
                }
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Metric at `x`, checked to be positive definite.
    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>, OracleError> {
        let g = self.components(x)?;
        let eig = SymmetricEigen::new(g.clone()).eigenvalues;
        let min = eig.min();
        if min <= 1e-12 {
            return Err(OracleError::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(g)
    }
}

/// Finite-difference settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffScheme {
    /// Base step, scaled per coordinate by `max(1, |x_i|)`.
    pub step: f64,
    /// Combine steps `h` and `h/2` to cancel the leading `h^4` error term.
    pub richardson: bool,
}

impl Default for DiffScheme {
    fn default() -> Self {
        DiffScheme {
            step: 1e-3,
            richardson: true,
        }
    }
}

impl DiffScheme {
    pub fn plain(step: f64) -> Self {
        DiffScheme {
            step,
            richardson: false,
        }
    }
}

/// Metric value with first and second coordinate derivatives at a point.
struct MetricJet {
    g: DMatrix<f64>,
    dg: Vec<DMatrix<f64>>,
    ddg: Vec<Vec<DMatrix<f64>>>,
}

/// `8(f(1) - f(-1)) - (f(2) - f(-2))`; exactly zero when `f` ignores the axis.
fn antisymmetric_sum(
    mut f: impl FnMut(f64) -> Result<DMatrix<f64>, OracleError>,
) -> Result<DMatrix<f64>, OracleError> {
    let near = f(1.0)? - f(-1.0)?;
    let far = f(2.0)? - f(-2.0)?;
    Ok(near * 8.0 - far)
}

fn jet_at_step(m: &ChartMetric, x: &[f64], step: f64) -> Result<MetricJet, OracleError> {
    let d = m.dim;
    let h: Vec<f64> = x.iter().map(|xi| step * xi.abs().max(1.0)).collect();
    let eval = |shifts: &[(usize, f64)]| -> Result<DMatrix<f64>, OracleError> {
        let mut p = x.to_vec();
        for &(axis, units) in shifts {
            p[axis] += units * h[axis];
        }
        m.components(&p)
    };

    // Stencils are written as sums of differences so that components which do
    // not depend on the differenced coordinate come out exactly zero; large
    // inverse-metric entries would otherwise amplify the rounding residue.
    let g = m.metric_at(x)?;
    let mut dg = Vec::with_capacity(d);
    let mut ddg = vec![vec![DMatrix::zeros(d, d); d]; d];
    for a in 0..d {
        dg.push(antisymmetric_sum(|u| eval(&[(a, u)]))? / (12.0 * h[a]));

        let near = (eval(&[(a, 1.0)])? - &g) + (eval(&[(a, -1.0)])? - &g);
        let far = (eval(&[(a, 2.0)])? - &g) + (eval(&[(a, -2.0)])? - &g);
        ddg[a][a] = (near * 16.0 - far) / (12.0 * h[a] * h[a]);

        for b in 0..a {
            let mixed = antisymmetric_sum(|ub| antisymmetric_sum(|ua| eval(&[(a, ua), (b, ub)])))?
                / (144.0 * h[a] * h[b]);
            ddg[a][b] = mixed.clone();
            ddg[b][a] = mixed;
        }
    }
    Ok(MetricJet { g, dg, ddg })
}

fn metric_jet(m: &ChartMetric, x: &[f64], scheme: DiffScheme) -> Result<MetricJet, OracleError> {
    let coarse = jet_at_step(m, x, scheme.step)?;
    if !scheme.richardson {
        return Ok(coarse);
    }
    let fine = jet_at_step(m, x, scheme.step / 2.0)?;
    let extrapolate = |f: &DMatrix<f64>, c: &DMatrix<f64>| (f * 16.0 - c) / 15.0;
    let dg = fine
        .dg
        .iter()
        .zip(&coarse.dg)
        .map(|(f, c)| extrapolate(f, c))
        .collect();
    let ddg = fine
        .ddg
        .iter()
        .zip(&coarse.ddg)
        .map(|(fr, cr)| fr.iter().zip(cr).map(|(f, c)| extrapolate(f, c)).collect())
        .collect();
    Ok(MetricJet {
        g: fine.g,
        dg,
        ddg,
    })
}

/// Christoffel symbols `Γ^k_ij`, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    values: Vec<f64>,
}

impl Christoffel {
    fn zeros(dim: usize) -> Self {
        Christoffel {
            dim,
            values: vec![0.0; dim * dim * dim],
        }
    }

    fn index(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.dim + i) * self.dim + j
    }

    /// `Γ^k_ij`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[self.index(k, i, j)]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let idx = self.index(k, i, j);
        self.values[idx] = v;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Full curvature data at one point.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub point: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub christoffel: Christoffel,
    /// `R^a_{bcd}` with `R(∂_c, ∂_d)∂_b = R^a_{bcd} ∂_a`, index `((a*d+b)*d+c)*d+e`.
    riemann: Vec<f64>,
    /// Coordinate Ricci tensor after symmetrization.
    pub ricci: DMatrix<f64>,
    /// `max |R_ij - R_ji|` before symmetrization.
    pub asymmetry: f64,
}

impl Curvature {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    /// `R^a_{bcd}`.
    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.dim();
        self.riemann[((a * n + b) * n + c) * n + d]
    }

    /// `⟨R(u,v)v, u⟩`.
    pub fn curvature_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        for e in 0..n {
            // lowered first index: R_{abcd} = g_{ae} R^e_{bcd}
            for a in 0..n {
                let gae = self.metric[(a, e)];
                if gae == 0.0 || u[a] == 0.0 {
                    continue;
                }
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            total += gae * self.riemann(e, b, c, d) * u[a] * v[b] * u[c] * v[d];
                        }
                    }
                }
            }
        }
        total
    }
}

fn condition_check(g: &DMatrix<f64>) -> Result<DMatrix<f64>, OracleError> {
    let eig = SymmetricEigen::new(g.clone()).eigenvalues;
    let (min, max) = (eig.min(), eig.max());
    let condition = max / min;
    if !(condition.is_finite()) || condition > 1e12 {
        return Err(OracleError::Singular { condition });
    }
    g.clone()
        .try_inverse()
        .ok_or(OracleError::Singular { condition })
}

/// Christoffel symbols and their coordinate derivatives from a metric jet.
fn connection(jet: &MetricJet, ginv: &DMatrix<f64>) -> (Christoffel, Vec<Christoffel>) {
    let d = jet.g.nrows();
    // T_ijl = ∂_i g_jl + ∂_j g_il - ∂_l g_ij
    let t = |i: usize, j: usize, l: usize| jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)];
    let dt = |m: usize, i: usize, j: usize, l: usize| {
        jet.ddg[m][i][(j, l)] + jet.ddg[m][j][(i, l)] - jet.ddg[m][l][(i, j)]
    };
    let dginv: Vec<DMatrix<f64>> = (0..d).map(|m| -(ginv * &jet.dg[m] * ginv)).collect();

    let mut gamma = Christoffel::zeros(d);
    let mut dgamma = vec![Christoffel::zeros(d); d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..=i {
                let mut value = 0.0;
                for l in 0..d {
                    value += 0.5 * ginv[(k, l)] * t(i, j, l);
                }
                gamma.set(k, i, j, value);
                gamma.set(k, j, i, value);
                for (m, dg_m) in dgamma.iter_mut().enumerate() {
                    let mut dv = 0.0;
                    for l in 0..d {
                        dv += 0.5 * (dginv[m][(k, l)] * t(i, j, l) + ginv[(k, l)] * dt(m, i, j, l));
                    }
                    dg_m.set(k, i, j, dv);
                    dg_m.set(k, j, i, dv);
                }
            }
        }
    }
    (gamma, dgamma)
}

/// Christoffel symbols at `x` using plain fourth-order differences with the given step.
pub fn christoffel(m: &ChartMetric, x: &[f64], step: f64) -> Result<Christoffel, OracleError> {
    christoffel_with(m, x, DiffScheme { step, richardson: true })
}

pub fn christoffel_with(
    m: &ChartMetric,
    x: &[f64],
    scheme: DiffScheme,
) -> Result<Christoffel, OracleError> {
    let jet = metric_jet(m, x, scheme)?;
    let ginv = condition_check(&jet.g)?;
    Ok(connection(&jet, &ginv).0)
}

/// Christoffel symbols, Riemann and Ricci tensors at `x`.
pub fn curvature(m: &ChartMetric, x: &[f64], scheme: DiffScheme) -> Result<Curvature, OracleError> {
    let jet = metric_jet(m, x, scheme)?;
    let ginv = condition_check(&jet.g)?;
    let (gamma, dgamma) = connection(&jet, &ginv);
    let n = m.dim;

    let mut riemann = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = dgamma[c].get(a, d, b) - dgamma[d].get(a, c, b);
                    for e in 0..n {
                        v += gamma.get(a, c, e) * gamma.get(e, d, b)
                            - gamma.get(a, d, e) * gamma.get(e, c, b);
                    }
                    riemann[((a * n + b) * n + c) * n + d] = v;
                }
            }
        }
    }

    let mut raw = DMatrix::zeros(n, n);
    for b in 0..n {
        for d in 0..n {
            raw[(b, d)] = (0..n).map(|a| riemann[((a * n + b) * n + a) * n + d]).sum();
        }
    }
    let asymmetry = (&raw - raw.transpose()).amax();
    let ricci = (&raw + raw.transpose()) * 0.5;
    Ok(Curvature {
        point: x.to_vec(),
        metric: jet.g,
        christoffel: gamma,
        riemann,
        ricci,
        asymmetry,
    })
}

/// Coordinate Ricci tensor at `x` with the default scheme.
pub fn ricci(m: &ChartMetric, x: &[f64]) -> Result<Curvature, OracleError> {
    curvature(m, x, DiffScheme::default())
}

/// A set of `d` vectors at a point, stored as matrix columns.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameAtPoint {
    pub point: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl FrameAtPoint {
    pub fn new(point: Vec<f64>, vectors: DMatrix<f64>) -> Self {
        FrameAtPoint { point, vectors }
    }

    /// `max |Vᵀ g V - I|`.
    pub fn orthonormality_defect(&self, m: &ChartMetric) -> Result<f64, OracleError> {
        let g = m.metric_at(&self.point)?;
        let gram = self.vectors.transpose() * g * &self.vectors;
        let n = gram.nrows();
        Ok((gram - DMatrix::identity(n, n)).amax())
    }

    /// Gram–Schmidt in the metric at `point`, starting from the columns of `seed`.
    pub fn orthonormalize(
        m: &ChartMetric,
        point: Vec<f64>,
        seed: &DMatrix<f64>,
    ) -> Result<Self, OracleError> {
        let g = m.metric_at(&point)?;
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(seed.ncols());
        for j in 0..seed.ncols() {
            let mut v = seed.column(j).into_owned();
            for _ in 0..2 {
                for u in &cols {
                    let proj = (u.transpose() * &g * &v)[(0, 0)];
                    v -= u * proj;
                }
            }
            let norm = (v.transpose() * &g * &v)[(0, 0)].sqrt();
            if !(norm > 1e-14) {
                return Err(OracleError::DegeneratePlane { denominator: norm });
            }
            cols.push(v / norm);
        }
        Ok(FrameAtPoint::new(point, DMatrix::from_columns(&cols)))
    }
}

/// Ricci tensor in a g-orthonormal frame: `Vᵀ Ric V`.
pub fn frame_ricci(m: &ChartMetric, frame: &FrameAtPoint) -> Result<DMatrix<f64>, OracleError> {
    frame_ricci_with(m, frame, DiffScheme::default())
}

pub fn frame_ricci_with(
    m: &ChartMetric,
    frame: &FrameAtPoint,
    scheme: DiffScheme,
) -> Result<DMatrix<f64>, OracleError> {
    let defect = frame.orthonormality_defect(m)?;
    if defect > 1e-8 {
        return Err(OracleError::FrameNotOrthonormal { defect });
    }
    let curv = curvature(m, &frame.point, scheme)?;
    Ok(frame.vectors.transpose() * curv.ricci * &frame.vectors)
}

/// Sectional curvature of the plane spanned by `u`, `v` at `x`.
pub fn sectional(m: &ChartMetric, x: &[f64], u: &[f64], v: &[f64]) -> Result<f64, OracleError> {
    let curv = curvature(m, x, DiffScheme::default())?;
    sectional_from(&curv, u, v)
}

/// Sectional curvature reusing an already computed [`Curvature`].
pub fn sectional_from(curv: &Curvature, u: &[f64], v: &[f64]) -> Result<f64, OracleError> {
    let n = curv.dim();
    if u.len() != n || v.len() != n {
        return Err(OracleError::PointDimension {
            expected: n,
            got: u.len().min(v.len()),
        });
    }
    let uu = DVector::from_column_slice(u);
    let vv = DVector::from_column_slice(v);
    let g = &curv.metric;
    let guu = (uu.transpose() * g * &uu)[(0, 0)];
    let gvv = (vv.transpose() * g * &vv)[(0, 0)];
    let guv = (uu.transpose() * g * &vv)[(0, 0)];
    let denominator = guu * gvv - guv * guv;
    if denominator < 1e-12 {
        return Err(OracleError::DegeneratePlane { denominator });
    }
    Ok(curv.curvature_form(u, v) / denominator)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_plane() -> ChartMetric {
        ChartMetric::new(2, |x| {
            let s = 1.0 / (x[1] * x[1]);
            Ok(DMatrix::from_diagonal_element(2, 2, s))
        })
        .unwrap()
        .with_domain(|x| x[1] > 0.0)
    }

    fn round_sphere_angles() -> ChartMetric {
        ChartMetric::new(2, |x| {
            let s = x[0].sin();
            Ok(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, s * s]))
        })
        .unwrap()
        .with_domain(|x| x[0] > 0.0 && x[0] < std::f64::consts::PI)
    }

    #[test]
    fn euclidean_christoffels_vanish() {
        let m = ChartMetric::new(3, |_| Ok(DMatrix::identity(3, 3))).unwrap();
        let g = christoffel(&m, &[0.3, -1.2, 4.0], 1e-3).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn half_plane_christoffels() {
        // g = (dx² + dy²)/y²: Γ^x_xy = -1/y, Γ^y_xx = 1/y, Γ^y_yy = -1/y
        let g = christoffel(&half_plane(), &[0.0, 1.0], 1e-3).unwrap();
        let expect = |k, i, j, v: f64| assert!((g.get(k, i, j) - v).abs() < 1e-9, "Γ^{k}_{i}{j}");
        expect(0, 0, 1, -1.0);
        expect(0, 1, 0, -1.0);
        expect(1, 0, 0, 1.0);
        expect(1, 1, 1, -1.0);
        expect(0, 0, 0, 0.0);
        expect(0, 1, 1, 0.0);
        expect(1, 0, 1, 0.0);
    }

    #[test]
    fn sphere_angle_chart_christoffel() {
        let theta = std::f64::consts::FRAC_PI_3;
        let g = christoffel(&round_sphere_angles(), &[theta, 0.4], 1e-3).unwrap();
        assert!((g.get(0, 1, 1) + 3f64.sqrt() / 4.0).abs() < 1e-9);
        assert!((g.get(1, 0, 1) - theta.cos() / theta.sin()).abs() < 1e-9);
    }

    #[test]
    fn half_plane_ricci_is_minus_metric() {
        let c = ricci(&half_plane(), &[0.0, 1.0]).unwrap();
        assert!((c.ricci.clone() + DMatrix::identity(2, 2)).amax() < 1e-7);
        assert!(c.asymmetry < 1e-7);
    }

    #[test]
    fn sphere_frame_ricci_is_identity() {
        let m = round_sphere_angles();
        let theta = std::f64::consts::FRAC_PI_3;
        let frame = FrameAtPoint::new(
            vec![theta, 0.2],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0 / theta.sin()]),
        );
        let ric = frame_ricci(&m, &frame).unwrap();
        assert!((ric - DMatrix::identity(2, 2)).amax() < 1e-7);
    }

    #[test]
    fn non_orthonormal_frame_is_rejected() {
        let m = round_sphere_angles();
        let frame = FrameAtPoint::new(vec![1.0, 0.0], DMatrix::identity(2, 2));
        assert!(matches!(
            frame_ricci(&m, &frame),
            Err(OracleError::FrameNotOrthonormal { .. })
        ));
    }

    #[test]
    fn hyperbolic_sectional_is_minus_one() {
        let k = sectional(&half_plane(), &[0.5, 2.0], &[1.0, 0.0], &[0.3, 1.0]).unwrap();
        assert!((k + 1.0).abs() < 1e-7);
    }

    #[test]
    fn degenerate_plane_is_an_error() {
        let err = sectional(&half_plane(), &[0.0, 1.0], &[1.0, 2.0], &[2.0, 4.0]).unwrap_err();
        assert!(matches!(err, OracleError::DegeneratePlane { .. }));
    }

    #[test]
    fn stencil_outside_domain_is_reported() {
        let err = ricci(&half_plane(), &[0.0, 0.001]).unwrap_err();
        assert!(matches!(err, OracleError::OutsideDomain { .. }));
    }

    #[test]
    fn singular_metrics_are_rejected() {
        let m = ChartMetric::new(2, |_| Ok(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-13])))
            .unwrap();
        assert!(m.metric_at(&[0.0, 0.0]).is_err());
        let m = ChartMetric::new(2, |_| Ok(DMatrix::from_row_slice(2, 2, &[1e6, 0.0, 0.0, 1e-7])))
            .unwrap();
        assert!(matches!(
            christoffel(&m, &[0.0, 0.0], 1e-3),
            Err(OracleError::Singular { .. })
        ));
    }

    #[test]
    fn dimension_cap() {
        assert!(ChartMetric::new(9, |_| Ok(DMatrix::identity(9, 9))).is_err());
        assert!(ChartMetric::new(0, |_| Ok(DMatrix::identity(0, 0))).is_err());
    }
}
