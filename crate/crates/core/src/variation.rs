//! Canonical variation of a Riemannian submersion with totally geodesic fibers.
//!
//! The metric `g_t` scales the fibers by `t` and keeps horizontal lengths. All
//! matrices are pointwise values in adapted orthonormal frames: `W_j` on the
//! fiber (so `W_j / t` is `g_t`-orthonormal) and horizontal lifts `H_i`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde_json::{json, Value};
use thiserror::Error;

use crate::lie::{left_invariant_ricci, GroupChart};
use crate::oracle::{self, OracleError, Preset};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationError {
    #[error("t must lie in (0, 1], got {0}")]
    InvalidT(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} is not symmetric")]
    NotSymmetric(&'static str),
    #[error("{0} is not diagonal")]
    NotDiagonal(&'static str),
    #[error("{name} is not positive semidefinite (smallest eigenvalue {min:e})")]
    NotPsd { name: &'static str, min: f64 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid submersion data: {0}")]
    Json(String),
}

const DIAGONAL_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

fn check_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<(), VariationError> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(VariationError::Dimension(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn off_diagonal_max(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (0..m.ncols()).filter(|&j| j != i) {
            worst = worst.max(m[(i, j)].abs());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubmersionData {
    pub ric_b: DMatrix<f64>,
    pub ric_f: DMatrix<f64>,
    /// `⟨A U, A V⟩` on unit vertical vectors.
    pub a_uv: DMatrix<f64>,
    /// `⟨A_X, A_Y⟩` on unit horizontal vectors.
    pub a_xy: DMatrix<f64>,
    /// `⟨δ̌A(X), U⟩`, rows horizontal, columns vertical.
    pub delta_a: DMatrix<f64>,
}

impl SubmersionData {
    pub fn new(
        ric_b: DMatrix<f64>,
        ric_f: DMatrix<f64>,
        a_uv: DMatrix<f64>,
        a_xy: DMatrix<f64>,
        delta_a: DMatrix<f64>,
    ) -> Result<Self, VariationError> {
        let b = ric_b.nrows();
        let f = ric_f.nrows();
        if b == 0 || f == 0 {
            return Err(VariationError::Dimension("base and fiber must be nonempty".into()));
        }
        check_shape("ricB", &ric_b, b, b)?;
        check_shape("ricF", &ric_f, f, f)?;
        check_shape("aUV", &a_uv, f, f)?;
        check_shape("aXY", &a_xy, b, b)?;
        check_shape("deltaA", &delta_a, b, f)?;
        for (name, m) in [("ricB", &ric_b), ("ricF", &ric_f), ("aUV", &a_uv), ("aXY", &a_xy)] {
            if m != &m.transpose() {
                return Err(VariationError::NotSymmetric(name));
            }
        }
        for (name, m) in [("ricB", &ric_b), ("ricF", &ric_f)] {
            if off_diagonal_max(m) > DIAGONAL_TOL {
                return Err(VariationError::NotDiagonal(name));
            }
        }
        for (name, m) in [("aUV", &a_uv), ("aXY", &a_xy)] {
            let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
            if min < -PSD_TOL {
                return Err(VariationError::NotPsd { name, min });
            }
        }
        Ok(SubmersionData {
            ric_b,
            ric_f,
            a_uv,
            a_xy,
            delta_a,
        })
    }

    /// A flat bundle: zero A-tensor.
    pub fn flat(ric_b: DMatrix<f64>, ric_f: DMatrix<f64>) -> Result<Self, VariationError> {
        let (b, f) = (ric_b.nrows(), ric_f.nrows());
        SubmersionData::new(
            ric_b,
            ric_f,
            DMatrix::zeros(f, f),
            DMatrix::zeros(b, b),
            DMatrix::zeros(b, f),
        )
    }

    pub fn dim_b(&self) -> usize {
        self.ric_b.nrows()
    }

    pub fn dim_f(&self) -> usize {
        self.ric_f.nrows()
    }

    /// Smallest `C` for which the error inequalities hold for every `t ≤ 1`.
    pub fn derived_constant(&self) -> f64 {
        self.a_uv
            .amax()
            .max(2.0 * self.a_xy.amax())
            .max(self.delta_a.amax())
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "dimB": self.dim_b(),
            "dimF": self.dim_f(),
            "ricB": rows(&self.ric_b),
            "ricF": rows(&self.ric_f),
            "aUV": rows(&self.a_uv),
            "aXY": rows(&self.a_xy),
            "deltaA": rows(&self.delta_a),
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self, VariationError> {
        let dim = |key: &str| -> Result<usize, VariationError> {
            v.get(key)
                .and_then(Value::as_u64)
                .map(|n| n as usize)
                .ok_or_else(|| VariationError::Json(format!("missing integer `{key}`")))
        };
        let (b, f) = (dim("dimB")?, dim("dimF")?);
        let matrix = |key: &str, r: usize, c: usize| -> Result<DMatrix<f64>, VariationError> {
            let raw = v
                .get(key)
                .ok_or_else(|| VariationError::Json(format!("missing matrix `{key}`")))?;
            let data: Vec<Vec<f64>> = serde_json::from_value(raw.clone())
                .map_err(|e| VariationError::Json(format!("`{key}`: {e}")))?;
            if data.len() != r || data.iter().any(|row| row.len() != c) {
                return Err(VariationError::Dimension(format!("{key} must be {r}x{c}")));
            }
            Ok(DMatrix::from_row_iterator(r, c, data.into_iter().flatten()))
        };
        SubmersionData::new(
            matrix("ricB", b, b)?,
            matrix("ricF", f, f)?,
            matrix("aUV", f, f)?,
            matrix("aXY", b, b)?,
            matrix("deltaA", b, f)?,
        )
    }
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Ricci tensor of `g_t` in the frame `{W_j / t, H_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledRicci {
    pub t: f64,
    pub vv: DMatrix<f64>,
    pub hh: DMatrix<f64>,
    /// Rows horizontal, columns vertical.
    pub hv: DMatrix<f64>,
}

impl ScaledRicci {
    /// Full matrix with the vertical directions first.
    pub fn assemble(&self) -> DMatrix<f64> {
        let (f, b) = (self.vv.nrows(), self.hh.nrows());
        let mut m = DMatrix::zeros(f + b, f + b);
        m.view_mut((0, 0), (f, f)).copy_from(&self.vv);
        m.view_mut((f, f), (b, b)).copy_from(&self.hh);
        m.view_mut((f, 0), (b, f)).copy_from(&self.hv);
        m.view_mut((0, f), (f, b)).copy_from(&self.hv.transpose());
        m
    }
}

pub fn canonical_variation_ricci(d: &SubmersionData, t: f64) -> Result<ScaledRicci, VariationError> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(VariationError::InvalidT(t));
    }
    let t2 = t * t;
    Ok(ScaledRicci {
        t,
        vv: &d.ric_f / t2 + &d.a_uv * t2,
        hh: &d.ric_b - &d.a_xy * (2.0 * t2),
        hv: &d.delta_a * -t,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AInvariants {
    pub a_uv: DMatrix<f64>,
    pub a_xy: DMatrix<f64>,
    pub delta_a: DMatrix<f64>,
}

/// Recovers the A-tensor invariants from the Ricci tensor of the unscaled total space.
pub fn a_invariants_from_ricci(
    ric_e_vv: &DMatrix<f64>,
    ric_e_hh: &DMatrix<f64>,
    ric_e_hv: &DMatrix<f64>,
    ric_b: &DMatrix<f64>,
    ric_f: &DMatrix<f64>,
) -> Result<AInvariants, VariationError> {
    let (b, f) = (ric_b.nrows(), ric_f.nrows());
    check_shape("ricE vertical block", ric_e_vv, f, f)?;
    check_shape("ricE horizontal block", ric_e_hh, b, b)?;
    check_shape("ricE mixed block", ric_e_hv, b, f)?;
    check_shape("ricB", ric_b, b, b)?;
    check_shape("ricF", ric_f, f, f)?;
    Ok(AInvariants {
        a_uv: ric_e_vv - ric_f,
        a_xy: (ric_b - ric_e_hh) / 2.0,
        delta_a: -ric_e_hv,
    })
}

/// One failed inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub inequality: &'static str,
    pub index: (usize, usize),
    pub lhs: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBoundReport {
    pub c: f64,
    pub derived_c: f64,
    /// Smallest margin of `|off-diagonal or mixed| ≤ C t` over all `t`.
    pub offdiag_slack: f64,
    /// Smallest margin of `vv_ii ≥ ricF_ii / t²`.
    pub vertical_slack: f64,
    /// Smallest margin of `hh_ii ≥ ricB_ii - C t²`.
    pub horizontal_slack: f64,
    pub violations: Vec<Violation>,
}

impl ErrorBoundReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the three error inequalities at each `t`.
pub fn error_bound_check(
    d: &SubmersionData,
    c: f64,
    ts: &[f64],
) -> Result<ErrorBoundReport, VariationError> {
    let mut report = ErrorBoundReport {
        c,
        derived_c: d.derived_constant(),
        offdiag_slack: f64::INFINITY,
        vertical_slack: f64::INFINITY,
        horizontal_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    for &t in ts {
        let s = canonical_variation_ricci(d, t)?;
        let off_bound = c * t;
        let mut off = |name: &'static str, m: &DMatrix<f64>, skip_diag: bool| {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if skip_diag && i == j {
                        continue;
                    }
                    let lhs = m[(i, j)].abs();
                    report.offdiag_slack = report.offdiag_slack.min(off_bound - lhs);
                    if lhs > off_bound {
                        report.violations.push(Violation {
                            t,
                            inequality: name,
                            index: (i, j),
                            lhs,
                            bound: off_bound,
                        });
                    }
                }
            }
        };
        off("vertical off-diagonal", &s.vv, true);
        off("horizontal off-diagonal", &s.hh, true);
        off("mixed", &s.hv, false);
        for i in 0..d.dim_f() {
            let bound = d.ric_f[(i, i)] / (t * t);
            let lhs = s.vv[(i, i)];
            report.vertical_slack = report.vertical_slack.min(lhs - bound);
            if lhs < bound {
                report.violations.push(Violation {
                    t,
                    inequality: "vertical lower bound",
                    index: (i, i),
                    lhs,
                    bound,
                });
            }
        }
        for i in 0..d.dim_b() {
            let bound = d.ric_b[(i, i)] - c * t * t;
            let lhs = s.hh[(i, i)];
            report.horizontal_slack = report.horizontal_slack.min(lhs - bound);
            if lhs < bound {
                report.violations.push(Violation {
                    t,
                    inequality: "horizontal lower bound",
                    index: (i, i),
                    lhs,
                    bound,
                });
            }
        }
    }
    Ok(report)
}

/// Oracle noise below this is treated as an exact zero in presets.
const PRESET_NOISE: f64 = 1e-7;

fn clean(m: DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| if v.abs() < PRESET_NOISE { 0.0 } else { v })
}

/// Unit round `S^3` Ricci in the frame `{X_1, X_2, X_3}` (fiber direction first).
fn round_s3_frame_ricci() -> Result<DMatrix<f64>, VariationError> {
    let preset = Preset::S3LeftInvariant {
        scales: [1.0, 1.0, 1.0],
    };
    let frame = preset.orthonormal_frame(&GroupChart::S3.base_point());
    Ok(oracle::frame_ricci(&preset.chart(), &frame)?)
}

/// The Hopf fibration `S^1 → S^3(1) → S^2(1/2)`, with invariants read off the oracle.
pub fn hopf_preset() -> Result<SubmersionData, VariationError> {
    let ric_e = round_s3_frame_ricci()?;
    let sphere = Preset::Sphere {
        dim: 2,
        radius: 0.5,
    };
    let base_frame = sphere.orthonormal_frame(&sphere.sample_point());
    let ric_b = clean(oracle::frame_ricci(&sphere.chart(), &base_frame)?);
    let ric_f = DMatrix::zeros(1, 1);
    let a = a_invariants_from_ricci(
        &ric_e.view((0, 0), (1, 1)).into_owned(),
        &ric_e.view((1, 1), (2, 2)).into_owned(),
        &ric_e.view((1, 0), (2, 1)).into_owned(),
        &ric_b,
        &ric_f,
    )?;
    let symmetrize = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    SubmersionData::new(
        symmetrize(ric_b),
        ric_f,
        symmetrize(clean(a.a_uv)),
        symmetrize(clean(a.a_xy)),
        clean(a.delta_a),
    )
}

/// Berger sphere Ricci (`S^3` with the Hopf fiber scaled by `t`) from the oracle,
/// split into blocks in the frame `{X_1 / t, X_2, X_3}`.
pub fn berger_oracle_ricci(t: f64) -> Result<ScaledRicci, VariationError> {
    let preset = Preset::S3LeftInvariant {
        scales: [t, 1.0, 1.0],
    };
    let frame = preset.orthonormal_frame(&GroupChart::S3.base_point());
    let m = oracle::frame_ricci(&preset.chart(), &frame)?;
    Ok(ScaledRicci {
        t,
        vv: m.view((0, 0), (1, 1)).into_owned(),
        hh: m.view((1, 1), (2, 2)).into_owned(),
        hv: m.view((1, 0), (2, 1)).into_owned(),
    })
}

/// The same Berger Ricci computed algebraically from the structure constants.
pub fn berger_algebraic_ricci(t: f64) -> DMatrix<f64> {
    left_invariant_ricci(&GroupChart::S3.structure(), &[t, 1.0, 1.0])
}
