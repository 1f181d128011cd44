//! Named chart metrics with known curvature.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::{ChartMetric, FrameAtPoint, OracleError};
use crate::lie::GroupChart;

#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    Euclidean { dim: usize },
    /// Round sphere of the given radius in stereographic coordinates.
    Sphere { dim: usize, radius: f64 },
    /// Upper half-plane model of curvature `-1`.
    Hyperbolic2,
    /// Diagonal left-invariant metric `Σ λ_k² (σ^k)²` on `S^3`.
    S3LeftInvariant { scales: [f64; 3] },
}

fn parse_field<T: FromStr>(text: &str, spec: &str) -> Result<T, OracleError> {
    text.parse()
        .map_err(|_| OracleError::UnknownPreset(spec.to_string()))
}

impl FromStr for Preset {
    type Err = OracleError;

    /// Accepts `euclidean:d`, `sphere:d:a`, `hyperbolic2`, `s3-left-invariant:l1:l2:l3`.
    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = spec.split(':').collect();
        let unknown = || OracleError::UnknownPreset(spec.to_string());
        let preset = match parts.as_slice() {
            ["euclidean", d] => Preset::Euclidean {
                dim: parse_field(d, spec)?,
            },
            ["sphere", d, a] => Preset::Sphere {
                dim: parse_field(d, spec)?,
                radius: parse_field(a, spec)?,
            },
            ["hyperbolic2"] => Preset::Hyperbolic2,
            ["s3-left-invariant", a, b, c] => Preset::S3LeftInvariant {
                scales: [parse_field(a, spec)?, parse_field(b, spec)?, parse_field(c, spec)?],
            },
            _ => return Err(unknown()),
        };
        let valid = match &preset {
            Preset::Euclidean { dim } => (1..=super::MAX_DIM).contains(dim),
            Preset::Sphere { dim, radius } => {
                (2..=super::MAX_DIM).contains(dim) && *radius > 0.0 && radius.is_finite()
            }
            Preset::Hyperbolic2 => true,
            Preset::S3LeftInvariant { scales } => scales.iter().all(|s| *s > 0.0 && s.is_finite()),
        };
        if valid {
            Ok(preset)
        } else {
            Err(unknown())
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            Preset::Sphere { dim, radius } => write!(f, "sphere:{dim}:{radius}"),
            Preset::Hyperbolic2 => f.write_str("hyperbolic2"),
            Preset::S3LeftInvariant { scales: [a, b, c] } => {
                write!(f, "s3-left-invariant:{a}:{b}:{c}")
            }
        }
    }
}

fn squared_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl Preset {
    pub fn dim(&self) -> usize {
        match self {
            Preset::Euclidean { dim } | Preset::Sphere { dim, .. } => *dim,
            Preset::Hyperbolic2 => 2,
            Preset::S3LeftInvariant { .. } => 3,
        }
    }

    pub fn chart(&self) -> ChartMetric {
        let label = self.to_string();
        let chart = match *self {
            Preset::Euclidean { dim } => {
                ChartMetric::new(dim, move |_| Ok(DMatrix::identity(dim, dim)))
            }
            Preset::Sphere { dim, radius } => ChartMetric::new(dim, move |x| {
                let s = 2.0 * radius / (1.0 + squared_norm(x));
                Ok(DMatrix::from_diagonal_element(dim, dim, s * s))
            }),
            Preset::Hyperbolic2 => ChartMetric::new(2, |x| {
                Ok(DMatrix::from_diagonal_element(2, 2, 1.0 / (x[1] * x[1])))
            })
            .map(|m| m.with_domain(|x| x[1] > 0.0)),
            Preset::S3LeftInvariant { scales } => ChartMetric::new(3, move |x| {
                Ok(GroupChart::S3.left_invariant_metric(x, &scales))
            })
            .map(|m| m.with_domain(|x| GroupChart::S3.contains(x))),
        };
        chart
            .expect("preset dimensions are validated on construction")
            .with_label(label)
    }

    /// Sectional curvature when it is constant.
    pub fn constant_curvature(&self) -> Option<f64> {
        match *self {
            Preset::Euclidean { .. } => Some(0.0),
            Preset::Sphere { radius, .. } => Some(1.0 / (radius * radius)),
            Preset::Hyperbolic2 => Some(-1.0),
            Preset::S3LeftInvariant { scales: [a, b, c] } => {
                (a == b && b == c).then(|| 1.0 / (a * a))
            }
        }
    }

    /// Expected Ricci tensor in [`Preset::orthonormal_frame`].
    pub fn frame_ricci(&self) -> DMatrix<f64> {
        let n = self.dim();
        match self {
            Preset::S3LeftInvariant { scales } => {
                crate::lie::left_invariant_ricci(&GroupChart::S3.structure(), scales)
            }
            _ => {
                let k = self.constant_curvature().unwrap_or(0.0);
                DMatrix::identity(n, n) * ((n as f64 - 1.0) * k)
            }
        }
    }

    /// A g-orthonormal frame at `x`.
    pub fn orthonormal_frame(&self, x: &[f64]) -> FrameAtPoint {
        let n = self.dim();
        let vectors = match self {
            Preset::Euclidean { .. } => DMatrix::identity(n, n),
            Preset::Sphere { radius, .. } => {
                DMatrix::identity(n, n) * ((1.0 + squared_norm(x)) / (2.0 * radius))
            }
            Preset::Hyperbolic2 => DMatrix::identity(2, 2) * x[1],
            Preset::S3LeftInvariant { scales } => {
                let mut frame = GroupChart::S3.frame(x);
                for (k, s) in scales.iter().enumerate() {
                    frame.column_mut(k).scale_mut(1.0 / s);
                }
                frame
            }
        };
        FrameAtPoint::new(x.to_vec(), vectors)
    }

    /// A point well inside the chart.
    pub fn sample_point(&self) -> Vec<f64> {
        match self {
            Preset::Euclidean { dim } => (0..*dim).map(|i| 0.3 - 0.1 * i as f64).collect(),
            Preset::Sphere { dim, .. } => (0..*dim).map(|i| 0.2 + 0.05 * i as f64).collect(),
            Preset::Hyperbolic2 => vec![0.3, 1.5],
            Preset::S3LeftInvariant { .. } => GroupChart::S3.base_point(),
        }
    }

    /// Draws a point inside the chart from unit-interval samples.
    pub fn point_from_unit(&self, u: &[f64]) -> Vec<f64> {
        match self {
            Preset::Euclidean { .. } => u.iter().map(|v| 4.0 * v - 2.0).collect(),
            Preset::Sphere { .. } => u.iter().map(|v| 1.2 * v - 0.6).collect(),
            Preset::Hyperbolic2 => vec![4.0 * u[0] - 2.0, 0.5 + 2.5 * u[1]],
            Preset::S3LeftInvariant { .. } => u.iter().map(|v| 0.8 * v - 0.4).collect(),
        }
    }
}
