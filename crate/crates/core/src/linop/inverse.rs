use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::assemble::LinearizedOperator;
use super::eigen::EigenSystem;
use crate::error::{Error, Result};

fn cplx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Largest singular value by power iteration on `M^H M`.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.618).sin() * 0.5, (i as f64 * 1.3).cos() * 0.25));
    x /= cplx(x.norm());
    let mh = m.adjoint();
    let mut est = 0.0;
    for _ in 0..1000 {
        let y = &mh * (m * &x);
        let ny = y.norm();
        if ny == 0.0 {
            return 0.0;
        }
        let next = ny.sqrt();
        x = y / cplx(ny);
        if (next - est).abs() <= 1e-13 * next {
            return next;
        }
        est = next;
    }
    est
}

/// Operator norm in the norm with coefficient weights `roots²`: `||W M W^{-1}||_2`.
pub fn weighted_norm(m: &DMatrix<Complex64>, row_roots: &[f64], col_roots: &[f64]) -> f64 {
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * (row_roots[r] / col_roots[c]));
    spectral_norm(&scaled)
}

pub fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn invert_direct(op: &LinearizedOperator) -> Result<DMatrix<Complex64>> {
    op.full().try_inverse().ok_or(Error::ResonantLinearization {
        k: 0,
        j: 0,
        value: 0.0,
    })
}

/// `L_n^{-1} = |D|^{-1/2} (U - R1 - R2)^{-1} |D|^{-1/2}` with `U = |D|^{-1} D`.
#[derive(Debug, Clone)]
pub struct StructuredInverse {
    pub half: DMatrix<Complex64>,
    pub u: DMatrix<Complex64>,
    pub r1: DMatrix<Complex64>,
    pub r2: DMatrix<Complex64>,
    pub inverse: DMatrix<Complex64>,
    /// Estimate of `||U (R1 + R2)||_2`; below 1 the Neumann series converges.
    pub neumann_ratio: f64,
    /// `(k, j, ω²k² - λ_{k,j})` for every diagonal entry of `D`.
    pub d_values: Vec<(i64, usize, f64)>,
}

/// Builds `|D|^{±1/2}` and `U` blockwise from the eigenbases of `S_k`.
pub fn invert_structured(op: &LinearizedOperator, eigs: &BTreeMap<i64, EigenSystem>, floor: f64) -> Result<StructuredInverse> {
    let n = op.dim();
    let mut half = DMatrix::zeros(n, n);
    let mut u = DMatrix::zeros(n, n);
    let mut d_values = Vec::with_capacity(n);
    let w2 = op.omega * op.omega;
    for k in -(op.l_n as i64)..=op.l_n as i64 {
        let (start, len) = op.block(k);
        let e = eigs.get(&k).ok_or(Error::TruncationOverflow {
            required: k.unsigned_abs() as usize,
            available: eigs.len(),
        })?;
        if e.modes.len() != len {
            return Err(Error::TruncationOverflow {
                required: len,
                available: e.modes.len(),
            });
        }
        let scale = w2 * (k * k) as f64;
        let d: Vec<f64> = e.eigenvalues.iter().map(|l| scale - l).collect();
        for (i, &di) in d.iter().enumerate() {
            if di.abs() < floor * scale.max(1.0) {
                return Err(Error::ResonantLinearization {
                    k,
                    j: e.modes[i],
                    value: di,
                });
            }
            d_values.push((k, e.modes[i], di));
        }
        let phi = &e.eigenvectors;
        let hk = phi * DMatrix::from_diagonal(&DVector::from_iterator(len, d.iter().map(|x| x.abs().powf(-0.5)))) * phi.transpose();
        let uk = phi * DMatrix::from_diagonal(&DVector::from_iterator(len, d.iter().map(|x| x.signum()))) * phi.transpose();
        for r in 0..len {
            for c in 0..len {
                half[(start + r, start + c)] = cplx(hk[(r, c)]);
                u[(start + r, start + c)] = cplx(uk[(r, c)]);
            }
        }
    }
    let r1 = &half * &op.m1 * &half;
    let r2 = &half * &op.m2 * &half;
    // U^{-1} = U, so U - R = U (I - U R)
    let b = &u * (&r1 + &r2);
    let neumann_ratio = spectral_norm(&b);
    let mut lhs = -b;
    for i in 0..n {
        lhs[(i, i)] += cplx(1.0);
    }
    let lu = lhs.clone().lu();
    let mut y = lu.solve(&u).ok_or(Error::ResonantLinearization {
        k: 0,
        j: 0,
        value: 0.0,
    })?;
    // one step of iterative refinement
    let resid = &u - &lhs * &y;
    if let Some(corr) = lu.solve(&resid) {
        y += corr;
    }
    let inverse = &half * y * &half;
    Ok(StructuredInverse {
        half,
        u,
        r1,
        r2,
        inverse,
        neumann_ratio,
        d_values,
    })
}
