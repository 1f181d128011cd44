//! Ricci tensor of `g = g_r + f(r)² ds²_{p-1} + dr²` on `E × S^{p-1} × (0, ∞)`.
//!
//! Here `g_r = Σ h_i(r)² (σ^i)²` for a fixed coframe `σ^i` on `E` dual to
//! `X_i`, and everything is expressed in the orthonormal frame
//! `{∂_r, U_a, Y_i = X_i / h_i}` with `U_a` tangent to the sphere factor.

mod json;
mod verify;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::exprs::{EvalError, Expr, ParseError};
use crate::lie::{left_invariant_ricci, StructureConstants};
use crate::oracle::OracleError;

pub use verify::{
    realization, smoothness_check, verify_against_oracle, verify_against_oracle_with,
    warped_chart, warped_frame, SmoothnessReport, VerifyEntry, VerifyReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpedError {
    #[error("cannot parse `{text}`: {source}")]
    Parse { text: String, source: ParseError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid warped spec: {0}")]
    InvalidSpec(String),
    #[error("sphere dimension requires p >= 2, got {0}")]
    SphereDimension(u32),
    #[error("r must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("{name}({r}) = {value} is not positive")]
    NonPositiveProfile { name: String, r: f64, value: f64 },
    #[error("spec has no chart realization: {0}")]
    Unrealizable(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Ricci tensor of `g_r` in the frame `Y_i`, as a function of `r`.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseRicci {
    Zero,
    Constant(DMatrix<f64>),
    ScaledIdentity(Expr),
    /// Left-invariant Ricci tensor computed from the structure constants and `h_i(r)`.
    LieAlgebra,
}

/// An expression together with its first two derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub expr: Expr,
    d1: Expr,
    d2: Expr,
}

impl Profile {
    pub fn new(expr: Expr) -> Self {
        let d1 = expr.diff(1);
        let d2 = d1.diff(1);
        Profile { expr, d1, d2 }
    }

    pub fn parse(text: &str) -> Result<Self, WarpedError> {
        Expr::parse(text)
            .map(Profile::new)
            .map_err(|source| WarpedError::Parse {
                text: text.to_string(),
                source,
            })
    }

    /// `[value, first derivative, second derivative]` at `r`.
    pub fn jet(&self, r: f64) -> Result<[f64; 3], EvalError> {
        Ok([self.expr.eval(r)?, self.d1.eval(r)?, self.d2.eval(r)?])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WarpedFamilySpec {
    f: Profile,
    h: Vec<Profile>,
    /// Structure constants of the `X_i` (not of the rescaled `Y_i`).
    structure: StructureConstants,
    base_ricci: BaseRicci,
}

impl WarpedFamilySpec {
    pub fn new(
        f: Expr,
        h: Vec<Expr>,
        structure: StructureConstants,
        base_ricci: BaseRicci,
    ) -> Result<Self, WarpedError> {
        let n = h.len();
        if structure.dim() != n {
            return Err(WarpedError::InvalidSpec(format!(
                "structure constants have dimension {}, expected {n}",
                structure.dim()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if structure.get(i, j, k) != -structure.get(j, i, k) {
                        return Err(WarpedError::InvalidSpec(format!(
                            "structure constants are not antisymmetric at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        if let BaseRicci::Constant(m) = &base_ricci {
            if m.nrows() != n || m.ncols() != n {
                return Err(WarpedError::InvalidSpec(format!(
                    "constant base Ricci must be {n}x{n}"
                )));
            }
            if m != &m.transpose() {
                return Err(WarpedError::InvalidSpec("constant base Ricci must be symmetric".into()));
            }
        }
        Ok(WarpedFamilySpec {
            f: Profile::new(f),
            h: h.into_iter().map(Profile::new).collect(),
            structure,
            base_ricci,
        })
    }

    /// Flat base (`E` a torus) with the given profiles.
    pub fn flat(f: Expr, h: Vec<Expr>) -> Self {
        let n = h.len();
        WarpedFamilySpec::new(f, h, StructureConstants::zero(n), BaseRicci::Zero)
            .expect("flat specs are always valid")
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn f(&self) -> &Profile {
        &self.f
    }

    pub fn h(&self) -> &[Profile] {
        &self.h
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    pub fn base_ricci(&self) -> &BaseRicci {
        &self.base_ricci
    }

    /// True when `⟨[Y_i, Y_j], Y_i⟩ = 0` for all `i, j`.
    pub fn ry_trusted(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| self.structure.get(i, j, i) == 0.0))
    }

    /// Profile jets at `r`, checking positivity of `f` and every `h_i`.
    pub fn jets(&self, r: f64) -> Result<([f64; 3], Vec<[f64; 3]>), WarpedError> {
        let f = self.f.jet(r)?;
        if !(f[0] > 0.0) {
            return Err(WarpedError::NonPositiveProfile {
                name: "f".into(),
                r,
                value: f[0],
            });
        }
        let mut h = Vec::with_capacity(self.n());
        for (i, p) in self.h.iter().enumerate() {
            let jet = p.jet(r)?;
            if !(jet[0] > 0.0) {
                return Err(WarpedError::NonPositiveProfile {
                    name: format!("h{}", i + 1),
                    r,
                    value: jet[0],
                });
            }
            h.push(jet);
        }
        Ok((f, h))
    }

    fn base_ricci_at(&self, r: f64, hs: &[f64]) -> Result<DMatrix<f64>, WarpedError> {
        let n = self.n();
        Ok(match &self.base_ricci {
            BaseRicci::Zero => DMatrix::zeros(n, n),
            BaseRicci::Constant(m) => m.clone(),
            BaseRicci::ScaledIdentity(e) => DMatrix::identity(n, n) * e.eval(r)?,
            BaseRicci::LieAlgebra => left_invariant_ricci(&self.structure, hs),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RicciBlocks {
    pub r: f64,
    pub p: u32,
    pub rr: f64,
    /// Common value of `Ric(U_a, U_a)`.
    pub uu: f64,
    pub yy: DMatrix<f64>,
    /// `Ric(∂_r, Y_j)` from the sum formula; only meaningful when `ry_trusted`.
    pub ry: DVector<f64>,
    pub ry_trusted: bool,
}

impl RicciBlocks {
    pub fn n(&self) -> usize {
        self.yy.nrows()
    }

    /// Block `{∂_r, Y_1, ..., Y_n}`.
    pub fn reduced(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = self.rr;
        for j in 0..n {
            m[(0, j + 1)] = self.ry[j];
            m[(j + 1, 0)] = self.ry[j];
            for i in 0..n {
                m[(i + 1, j + 1)] = self.yy[(i, j)];
            }
        }
        m
    }

    /// Full matrix in the order `∂_r, U_1, ..., U_{p-1}, Y_1, ..., Y_n`.
    pub fn assemble(&self) -> DMatrix<f64> {
        let n = self.n();
        let u = self.p as usize - 1;
        let size = 1 + u + n;
        let mut m = DMatrix::zeros(size, size);
        m[(0, 0)] = self.rr;
        for a in 0..u {
            m[(1 + a, 1 + a)] = self.uu;
        }
        for j in 0..n {
            m[(0, 1 + u + j)] = self.ry[j];
            m[(1 + u + j, 0)] = self.ry[j];
            for i in 0..n {
                m[(1 + u + i, 1 + u + j)] = self.yy[(i, j)];
            }
        }
        m
    }
}

/// Closed-form Ricci blocks at radius `r` for sphere dimension `p - 1`.
pub fn ricci_warped(spec: &WarpedFamilySpec, r: f64, p: u32) -> Result<RicciBlocks, WarpedError> {
    if p < 2 {
        return Err(WarpedError::SphereDimension(p));
    }
    if !(r > 0.0) {
        return Err(WarpedError::NonPositiveRadius(r));
    }
    let n = spec.n();
    let ([f, f1, f2], h) = spec.jets(r)?;
    let pf = p as f64;
    let log_h: Vec<f64> = h.iter().map(|j| j[1] / j[0]).collect();
    let curv_h: Vec<f64> = h.iter().map(|j| j[2] / j[0]).collect();
    let sum_log_h: f64 = log_h.iter().sum();
    let hs: Vec<f64> = h.iter().map(|j| j[0]).collect();

    let uu = (pf - 2.0) * (1.0 - f1 * f1) / (f * f) - (f1 / f) * sum_log_h - f2 / f;
    let rr = -(pf - 1.0) * f2 / f - curv_h.iter().sum::<f64>();
    let mut yy = spec.base_ricci_at(r, &hs)?;
    for i in 0..n {
        yy[(i, i)] += -(pf - 1.0) * f1 * log_h[i] / f
            - log_h[i] * (sum_log_h - log_h[i])
            - curv_h[i];
    }

    let ry_trusted = spec.ry_trusted();
    let mut ry = DVector::zeros(n);
    if !ry_trusted {
        for j in 0..n {
            for i in (0..n).filter(|&i| i != j) {
                // ⟨[Y_i, Y_j], Y_i⟩ = c_ij^i / h_j
                let bracket = spec.structure.get(i, j, i) / hs[j];
                ry[j] += bracket * (log_h[i] + log_h[j]);
            }
        }
    }
    Ok(RicciBlocks {
        r,
        p,
        rr,
        uu,
        yy,
        ry,
        ry_trusted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdCheck {
    pub positive_definite: bool,
    /// Smallest eigenvalue, or a certified lower bound for it when slack is used.
    pub min_eigen: f64,
}

/// Positive definiteness of the full Ricci matrix from its blocks.
///
/// With `off_diag_slack > 0` every `Y_i`–`Y_j` entry (`i ≠ j`) may additionally
/// be perturbed by up to the slack, and a Gershgorin bound is used.
pub fn assemble_and_check_pd(blocks: &RicciBlocks, off_diag_slack: f64) -> PdCheck {
    let reduced = blocks.reduced();
    let size = reduced.nrows();
    let reduced_min = if off_diag_slack > 0.0 {
        (0..size)
            .map(|i| {
                let mut radius = 0.0;
                for j in (0..size).filter(|&j| j != i) {
                    radius += reduced[(i, j)].abs();
                    if i > 0 && j > 0 {
                        radius += off_diag_slack;
                    }
                }
                reduced[(i, i)] - radius
            })
            .fold(f64::INFINITY, f64::min)
    } else {
        SymmetricEigen::new(reduced).eigenvalues.min()
    };
    let min_eigen = reduced_min.min(blocks.uu);
    PdCheck {
        positive_definite: min_eigen > 0.0,
        min_eigen,
    }
}
