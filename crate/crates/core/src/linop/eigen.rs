use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{sine_product_matrix, TrigPolynomial};

/// Spectrum of `S_k = -∂_xx + ε π_k(a_0 ·)` on the sine modes `j ≠ |k|`, `j <= J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    pub k: i64,
    pub epsilon: f64,
    /// Sine modes spanning `F_k`, ascending; the `i`-th eigenvalue is `λ_{k, modes[i]}`.
    pub modes: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    /// Column `i` holds the coefficients of `φ_{k, modes[i]}` in the orthonormal basis `√(2/π) sin(jx)`.
    #[serde(skip)]
    pub eigenvectors: DMatrix<f64>,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
}

impl EigenSystem {
    pub fn lambda(&self, j: usize) -> Option<f64> {
        self.modes.iter().position(|&m| m == j).map(|i| self.eigenvalues[i])
    }

    /// `max_i ||S_k φ_i - λ_i φ_i||`.
    pub fn max_residual(&self) -> f64 {
        (0..self.modes.len())
            .map(|i| {
                let v = self.eigenvectors.column(i);
                (&self.matrix * v - v * self.eigenvalues[i]).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.modes.len();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(n, n))
            .abs()
            .max()
    }
}

/// Matrix of `diag(j²) + ε (2/π)∫ a_0 sin(ix) sin(jx)` on `F_k`.
pub fn sk_matrix(k: i64, epsilon: f64, a0: &TrigPolynomial, j_max: usize) -> (Vec<usize>, DMatrix<f64>) {
    let full = sine_product_matrix(&a0.exp_coeffs(), j_max);
    let modes: Vec<usize> = (1..=j_max).filter(|&j| j != k.unsigned_abs() as usize).collect();
    let m = DMatrix::from_fn(modes.len(), modes.len(), |r, c| {
        let (i, j) = (modes[r], modes[c]);
        let diag = if i == j { (j * j) as f64 } else { 0.0 };
        diag + epsilon * full[i - 1][j - 1].re
    });
    (modes, m)
}

pub fn eigen_sk(k: i64, epsilon: f64, a0: &TrigPolynomial, j_max: usize) -> Result<EigenSystem> {
    let bound = epsilon.abs() * a0.max_abs();
    if bound >= 1.0 {
        return Err(Error::NotScalarProduct { bound });
    }
    if j_max <= k.unsigned_abs() as usize {
        return Err(Error::TruncationOverflow {
            required: k.unsigned_abs() as usize + 1,
            available: j_max,
        });
    }
    let (modes, matrix) = sk_matrix(k, epsilon, a0, j_max);
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(modes.len(), modes.len());
    for (c, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if v[c] < 0.0 {
            v = -v;
        }
        eigenvectors.set_column(c, &v);
    }
    Ok(EigenSystem {
        k,
        epsilon,
        modes,
        eigenvalues,
        eigenvectors,
        matrix,
    })
}

/// `α_k = min_{j ≠ |k|, j <= 2|k| + margin} |ω²k² - λ_{k,j}|` and its argmin.
pub fn alpha_k(eigs: &EigenSystem, omega: f64, j_margin: usize) -> Result<(f64, usize)> {
    let k = eigs.k.unsigned_abs() as usize;
    let w = omega * omega * (k * k) as f64;
    let limit = 2 * k + j_margin;
    let mut best = (f64::INFINITY, 0usize);
    for (i, &j) in eigs.modes.iter().enumerate() {
        if j > limit {
            break;
        }
        let d = (w - eigs.eigenvalues[i]).abs();
        if d < best.0 {
            best = (d, j);
        }
    }
    if best.1 == *eigs.modes.last().unwrap_or(&0) {
        return Err(Error::TruncationTooSmall { k: eigs.k, j: best.1 });
    }
    Ok(best)
}
