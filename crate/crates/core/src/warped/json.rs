//! JSON form of [`WarpedFamilySpec`].
//!
//! ```json
//! { "n": 2, "f": "r*(1+r^2)^(-1/4)", "h": ["(1+r^2)^(-1)", "(1+r^2)^(-1)"],
//!   "structure": [[0, 1, 1, 1.0]], "baseRicci": "lieAlgebra" }
//! ```
//!
//! Indices are zero-based, each `[i, j, k, c]` entry sets `c_ij^k = c` and
//! `c_ji^k = -c` for the unscaled frame `X_i`. `baseRicci` is one of `zero`,
//! `constant:<matrix>` (a JSON array of rows), `scaledIdentity:<expr>` or
//! `lieAlgebra`.

use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{BaseRicci, WarpedError, WarpedFamilySpec};
use crate::exprs::Expr;
use crate::lie::StructureConstants;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    n: usize,
    f: String,
    #[serde(default)]
    h: Vec<String>,
    #[serde(default)]
    structure: Vec<(usize, usize, usize, f64)>,
    #[serde(default, rename = "baseRicci")]
    base_ricci: Option<String>,
}

fn parse_expr(text: &str) -> Result<Expr, WarpedError> {
    Expr::parse(text).map_err(|source| WarpedError::Parse {
        text: text.to_string(),
        source,
    })
}

fn parse_base_ricci(text: &str, n: usize) -> Result<BaseRicci, WarpedError> {
    let invalid = |msg: String| WarpedError::InvalidSpec(msg);
    if text == "zero" {
        return Ok(BaseRicci::Zero);
    }
    if text == "lieAlgebra" {
        return Ok(BaseRicci::LieAlgebra);
    }
    if let Some(rest) = text.strip_prefix("scaledIdentity:") {
        return Ok(BaseRicci::ScaledIdentity(parse_expr(rest)?));
    }
    if let Some(rest) = text.strip_prefix("constant:") {
        let rows: Vec<Vec<f64>> = serde_json::from_str(rest)
            .map_err(|e| invalid(format!("constant base Ricci matrix: {e}")))?;
        if rows.len() != n || rows.iter().any(|row| row.len() != n) {
            return Err(invalid(format!("constant base Ricci must be {n}x{n}")));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        return Ok(BaseRicci::Constant(DMatrix::from_row_slice(n, n, &flat)));
    }
    Err(invalid(format!("unknown baseRicci `{text}`")))
}

impl WarpedFamilySpec {
    pub fn from_json(text: &str) -> Result<Self, WarpedError> {
        let raw: RawSpec =
            serde_json::from_str(text).map_err(|e| WarpedError::InvalidSpec(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_json_value(value: &Value) -> Result<Self, WarpedError> {
        let raw: RawSpec = serde_json::from_value(value.clone())
            .map_err(|e| WarpedError::InvalidSpec(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawSpec) -> Result<Self, WarpedError> {
        let n = raw.n;
        if raw.h.len() != n {
            return Err(WarpedError::InvalidSpec(format!(
                "expected {n} h profiles, got {}",
                raw.h.len()
            )));
        }
        let mut structure = StructureConstants::zero(n);
        let mut seen = std::collections::BTreeMap::new();
        for (i, j, k, value) in raw.structure {
            if i >= n || j >= n || k >= n {
                return Err(WarpedError::InvalidSpec(format!(
                    "structure index ({i},{j},{k}) out of range for n = {n}"
                )));
            }
            if i == j && value != 0.0 {
                return Err(WarpedError::InvalidSpec(format!(
                    "structure entry ({i},{i},{k}) must vanish"
                )));
            }
            let (key, signed) = if i < j { ((i, j, k), value) } else { ((j, i, k), -value) };
            if let Some(previous) = seen.insert(key, signed) {
                if previous != signed {
                    return Err(WarpedError::InvalidSpec(format!(
                        "structure entries for ({i},{j},{k}) are not antisymmetric"
                    )));
                }
            }
            structure.set_antisymmetric(key.0, key.1, key.2, signed);
        }
        let base_ricci = parse_base_ricci(raw.base_ricci.as_deref().unwrap_or("zero"), n)?;
        let f = parse_expr(&raw.f)?;
        let h = raw.h.iter().map(|s| parse_expr(s)).collect::<Result<_, _>>()?;
        WarpedFamilySpec::new(f, h, structure, base_ricci)
    }

    pub fn to_json_value(&self) -> Value {
        let n = self.n();
        let mut structure = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let c = self.structure.get(i, j, k);
                    if c != 0.0 {
                        structure.push(json!([i, j, k, c]));
                    }
                }
            }
        }
        let base = match &self.base_ricci {
            BaseRicci::Zero => "zero".to_string(),
            BaseRicci::LieAlgebra => "lieAlgebra".to_string(),
            BaseRicci::ScaledIdentity(e) => format!("scaledIdentity:{e}"),
            BaseRicci::Constant(m) => {
                let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
                format!("constant:{}", serde_json::to_string(&rows).expect("finite matrix"))
            }
        };
        json!({
            "n": n,
            "f": self.f.expr.to_string(),
            "h": self.h.iter().map(|p| p.expr.to_string()).collect::<Vec<_>>(),
            "structure": structure,
            "baseRicci": base,
        })
    }
}
