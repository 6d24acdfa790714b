//! Coordinates on the weighted mean-zero subspace and small dense helpers.

use nalgebra::{DMatrix, DVector};

use crate::potentials::{Density, OperatorMatrix};
use crate::C64;

/// Orthonormal coordinates for densities with zero weighted mean on each of
/// one or more curves.
///
/// With `D = W^{1/2}`, the map `φ ↦ D φ` is an isometry from the weighted L²
/// space onto Euclidean space, where the mean-zero constraint on block `b`
/// becomes orthogonality to `D 1_b`. A Householder reflector per block maps
/// that direction to the first block coordinate, and the remaining columns
/// form the basis `Q`.
#[derive(Debug, Clone)]
pub struct MeanZeroBasis {
    sqrt_w: Vec<f64>,
    q: DMatrix<f64>,
    blocks: Vec<(usize, usize)>,
}

impl MeanZeroBasis {
    /// Basis for one weight block per curve.
    pub fn new(weight_blocks: &[&[f64]]) -> Self {
        let total: usize = weight_blocks.iter().map(|w| w.len()).sum();
        let dim = total - weight_blocks.len();
        let mut q = DMatrix::zeros(total, dim);
        let mut sqrt_w = Vec::with_capacity(total);
        let mut blocks = Vec::with_capacity(weight_blocks.len());
        let (mut row, mut col) = (0, 0);
        for w in weight_blocks {
            let n = w.len();
            let s: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
            let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
            // u = v − e₁ (normalized); H = I − 2uuᵀ maps v to e₁.
            let mut u: Vec<f64> = s.iter().map(|x| x / norm).collect();
            u[0] -= 1.0;
            let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if un > 0.0 {
                u.iter_mut().for_each(|x| *x /= un);
            }
            for c in 1..n {
                for r in 0..n {
                    let delta = if r == c { 1.0 } else { 0.0 };
                    q[(row + r, col + c - 1)] = delta - 2.0 * u[r] * u[c];
                }
            }
            blocks.push((row, n));
            sqrt_w.extend(s);
            row += n;
            col += n - 1;
        }
        MeanZeroBasis { sqrt_w, q, blocks }
    }

    /// Number of nodal values.
    pub fn len(&self) -> usize {
        self.sqrt_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sqrt_w.is_empty()
    }

    /// Dimension of the mean-zero subspace.
    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    /// Node ranges `(start, len)` of the curve blocks.
    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// Coordinates of the mean-zero projection of `density`.
    pub fn coords(&self, density: &Density) -> DVector<C64> {
        let scaled = DVector::from_iterator(
            self.len(),
            density.iter().zip(&self.sqrt_w).map(|(v, s)| v * *s),
        );
        let mut out = DVector::zeros(self.dim());
        for (c, col) in self.q.column_iter().enumerate() {
            out[c] = col.iter().zip(scaled.iter()).map(|(a, v)| v * *a).sum();
        }
        out
    }

    /// Nodal values of the mean-zero density with coordinates `c`.
    pub fn lift(&self, c: &DVector<C64>) -> Density {
        let mut out = Density::zeros(self.len());
        for (k, col) in self.q.column_iter().enumerate() {
            let ck = c[k];
            if ck == C64::new(0.0, 0.0) {
                continue;
            }
            for (r, a) in col.iter().enumerate() {
                out[r] += ck * *a;
            }
        }
        for (v, s) in out.iter_mut().zip(&self.sqrt_w) {
            *v /= *s;
        }
        out
    }

    /// Real version of [`MeanZeroBasis::lift`].
    pub fn lift_real(&self, c: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.q * c;
        for (v, s) in out.iter_mut().zip(&self.sqrt_w) {
            *v /= *s;
        }
        out
    }

    /// Matrix of `P A` on the subspace, `Qᵀ D A D⁻¹ Q`, where `P` is the
    /// weighted projection onto mean-zero densities.
    pub fn restrict(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut scaled = a.clone();
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                scaled[(i, j)] *= self.sqrt_w[i] / self.sqrt_w[j];
            }
        }
        self.q.transpose() * scaled * &self.q
    }

    /// [`MeanZeroBasis::restrict`] applied to an operator matrix.
    pub fn restrict_op(&self, a: &OperatorMatrix) -> DMatrix<f64> {
        self.restrict(&a.entries)
    }
}

/// Complexify a real matrix.
pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|v| C64::new(v, 0.0))
}

/// Smallest and largest singular values of a complex matrix.
pub fn singular_range(a: &DMatrix<C64>) -> (f64, f64) {
    let sv = a.clone().singular_values();
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = sv.iter().cloned().fold(0.0, f64::max);
    (min, max)
}

/// Symmetric part `(A + Aᵀ)/2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}
