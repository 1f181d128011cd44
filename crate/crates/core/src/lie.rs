//! Left-invariant geometry on small Lie groups.
//!
//! Two independent routes are provided: explicit coordinate charts whose
//! left-invariant coframes are exact (used to build oracle metrics), and the
//! algebraic Ricci tensor of a diagonal left-invariant metric computed from
//! structure constants alone.

use nalgebra::DMatrix;

/// Structure constants `c_ij^k` with `[X_i, X_j] = Σ_k c_ij^k X_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    n: usize,
    values: Vec<f64>,
}

impl StructureConstants {
    pub fn zero(n: usize) -> Self {
        StructureConstants {
            n,
            values: vec![0.0; n * n * n],
        }
    }

    /// `su(2)` in the basis `i, j, k` of imaginary quaternions: `[X_i, X_j] = 2 ε_ijk X_k`.
    pub fn su2() -> Self {
        let mut c = StructureConstants::zero(3);
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c.set_antisymmetric(i, j, k, 2.0);
        }
        c
    }

    /// The two-dimensional non-abelian algebra `[X_1, X_2] = X_2`.
    pub fn affine() -> Self {
        let mut c = StructureConstants::zero(2);
        c.set_antisymmetric(0, 1, 1, 1.0);
        c
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// Sets `c_ij^k = v` and `c_ji^k = -v`.
    pub fn set_antisymmetric(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let a = self.index(i, j, k);
        let b = self.index(j, i, k);
        self.values[a] = v;
        self.values[b] = -v;
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Largest Jacobi-identity defect over all index triples.
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += self.get(i, j, l) * self.get(l, k, m)
                                + self.get(j, k, l) * self.get(l, i, m)
                                + self.get(k, i, l) * self.get(l, j, m);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Constants of the rescaled frame `Y_i = X_i / scales_i`:
    /// `[Y_i, Y_j] = Σ_k c_ij^k scales_k / (scales_i scales_j) Y_k`.
    pub fn rescaled(&self, scales: &[f64]) -> StructureConstants {
        let mut out = StructureConstants::zero(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    let idx = out.index(i, j, k);
                    out.values[idx] = self.get(i, j, k) * scales[k] / (scales[i] * scales[j]);
                }
            }
        }
        out
    }
}

/// Ricci tensor of the left-invariant metric making `X_i / scales_i` orthonormal,
/// expressed in that orthonormal frame.
pub fn left_invariant_ricci(c: &StructureConstants, scales: &[f64]) -> DMatrix<f64> {
    let n = c.dim();
    assert_eq!(scales.len(), n, "one scale per basis vector");
    // α_ijk = ⟨[e_i, e_j], e_k⟩ in the orthonormal frame
    let alpha = c.rescaled(scales);
    let a = |i, j, k| alpha.get(i, j, k);
    // Koszul: Γ_ijk = ⟨∇_{e_i} e_j, e_k⟩
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[(i * n + j) * n + k] = 0.5 * (a(i, j, k) - a(j, k, i) + a(k, i, j));
            }
        }
    }
    let g = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];
    // ⟨R(e_i, e_j) e_k, e_m⟩ with R(X,Y) = ∇_X∇_Y - ∇_Y∇_X - ∇_[X,Y]
    let riem = |i: usize, j: usize, k: usize, m: usize| {
        let mut v = 0.0;
        for l in 0..n {
            v += g(j, k, l) * g(i, l, m) - g(i, k, l) * g(j, l, m);
        }
        for s in 0..n {
            v -= a(i, j, s) * g(s, k, m);
        }
        v
    };
    let mut ric = DMatrix::zeros(n, n);
    for b in 0..n {
        for d in 0..n {
            ric[(b, d)] = (0..n).map(|e| riem(e, d, b, e)).sum();
        }
    }
    (&ric + ric.transpose()) * 0.5
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Quaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Quaternion {
    fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }

    fn conj(self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// `q⁻¹ v q` for a unit quaternion `q`.
    fn conjugate_by(self, v: Quaternion) -> Quaternion {
        self.conj().mul(v).mul(self)
    }
}

/// Coordinate charts on groups whose left-invariant coframe is known exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroupChart {
    /// `R^n` (or a flat torus) with the coordinate frame.
    Torus(usize),
    /// `S^3` via `q = exp(x_1 i) exp(x_2 j) exp(x_3 k)`.
    S3,
    /// `{(a, b) : a > 0}` with `X_1 = a ∂_a`, `X_2 = a ∂_b`.
    Affine,
}

impl GroupChart {
    pub fn dim(&self) -> usize {
        match self {
            GroupChart::Torus(n) => *n,
            GroupChart::S3 => 3,
            GroupChart::Affine => 2,
        }
    }

    pub fn structure(&self) -> StructureConstants {
        match self {
            GroupChart::Torus(n) => StructureConstants::zero(*n),
            GroupChart::S3 => StructureConstants::su2(),
            GroupChart::Affine => StructureConstants::affine(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            GroupChart::Torus(_) => true,
            // the Euler-type chart degenerates at |x_2| = π/4
            GroupChart::S3 => x[1].abs() < std::f64::consts::FRAC_PI_4 - 0.05,
            GroupChart::Affine => x[0] > 0.0,
        }
    }

    /// A point comfortably inside the chart.
    pub fn base_point(&self) -> Vec<f64> {
        match self {
            GroupChart::Torus(n) => vec![0.1; *n],
            GroupChart::S3 => vec![0.1, 0.05, -0.1],
            GroupChart::Affine => vec![1.0, 0.0],
        }
    }

    /// Coframe matrix `S(x)`: row `k` holds the coordinate components of `σ^k`.
    pub fn coframe(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            GroupChart::Torus(n) => DMatrix::identity(*n, *n),
            GroupChart::Affine => {
                DMatrix::from_row_slice(2, 2, &[1.0 / x[0], 0.0, 0.0, 1.0 / x[0]])
            }
            GroupChart::S3 => {
                let b = Quaternion::new(x[1].cos(), 0.0, x[1].sin(), 0.0);
                let c = Quaternion::new(x[2].cos(), 0.0, 0.0, x[2].sin());
                let i = Quaternion::new(0.0, 1.0, 0.0, 0.0);
                let j = Quaternion::new(0.0, 0.0, 1.0, 0.0);
                let k = Quaternion::new(0.0, 0.0, 0.0, 1.0);
                let columns = [b.mul(c).conjugate_by(i), c.conjugate_by(j), k];
                let mut s = DMatrix::zeros(3, 3);
                for (a, q) in columns.iter().enumerate() {
                    s[(0, a)] = q.x;
                    s[(1, a)] = q.y;
                    s[(2, a)] = q.z;
                }
                s
            }
        }
    }

    /// Left-invariant frame: column `i` holds the coordinate components of `X_i`.
    pub fn frame(&self, x: &[f64]) -> DMatrix<f64> {
        self.coframe(x)
            .try_inverse()
            .expect("coframe is invertible inside the chart")
    }

    /// `Σ_k scales_k² (σ^k)²` at `x`.
    pub fn left_invariant_metric(&self, x: &[f64], scales: &[f64]) -> DMatrix<f64> {
        let s = self.coframe(x);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            scales.len(),
            scales.iter().map(|v| v * v),
        ));
        s.transpose() * d * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_constants_satisfy_jacobi() {
        assert_eq!(StructureConstants::su2().jacobi_defect(), 0.0);
        assert_eq!(StructureConstants::affine().jacobi_defect(), 0.0);
    }

    #[test]
    fn round_three_sphere_is_einstein() {
        let ric = left_invariant_ricci(&StructureConstants::su2(), &[1.0, 1.0, 1.0]);
        assert!((ric - DMatrix::identity(3, 3) * 2.0).amax() < 1e-14);
    }

    #[test]
    fn berger_sphere_ricci() {
        for t in [1.0, 0.5, 0.1] {
            let ric = left_invariant_ricci(&StructureConstants::su2(), &[t, 1.0, 1.0]);
            assert!((ric[(0, 0)] - 2.0 * t * t).abs() < 1e-14);
            assert!((ric[(1, 1)] - (4.0 - 2.0 * t * t)).abs() < 1e-14);
            assert!((ric[(2, 2)] - (4.0 - 2.0 * t * t)).abs() < 1e-14);
        }
    }

    #[test]
    fn affine_group_is_hyperbolic_plane() {
        let ric = left_invariant_ricci(&StructureConstants::affine(), &[1.0, 1.0]);
        assert!((ric + DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn s3_coframe_is_exact_at_identity() {
        let s = GroupChart::S3.coframe(&[0.0, 0.0, 0.0]);
        assert!((s - DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn s3_frame_brackets_match_su2() {
        // [X_a, X_b] via finite differences of the frame in coordinates
        let chart = GroupChart::S3;
        let x = [0.2, -0.1, 0.3];
        let h = 1e-6;
        let frame = chart.frame(&x);
        let mut dframe = Vec::new();
        for a in 0..3 {
            let mut p = x;
            let mut m = x;
            p[a] += h;
            m[a] -= h;
            dframe.push((chart.frame(&p) - chart.frame(&m)) / (2.0 * h));
        }
        let c = StructureConstants::su2();
        for i in 0..3 {
            for j in 0..3 {
                let mut bracket = nalgebra::DVector::zeros(3);
                for a in 0..3 {
                    bracket += dframe[a].column(j) * frame[(a, i)] - dframe[a].column(i) * frame[(a, j)];
                }
                let mut expected = nalgebra::DVector::zeros(3);
                for k in 0..3 {
                    expected += frame.column(k) * c.get(i, j, k);
                }
                assert!((bracket - expected).amax() < 1e-8, "[X_{i}, X_{j}]");
            }
        }
    }
}
