use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::assemble::LinearizedOperator;
use super::eigen::{alpha_k, EigenSystem};
use super::inverse::{weighted_norm, StructuredInverse};
use crate::error::Result;
use crate::spectral::{BetaConvention, NormWeights, TrigPolynomial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub k: i64,
    pub l: i64,
    pub alpha_k: f64,
    pub alpha_l: f64,
    pub bound: f64,
    pub ratio: f64,
    pub case: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallDivisorAudit {
    pub rows: Vec<AuditRow>,
    /// `(k, α_k, j(k))`.
    pub alphas: Vec<(i64, f64, usize)>,
    pub beta: f64,
    /// Largest ratio per case 1..=4 (`0` for an empty case).
    pub case_constants: [f64; 4],
    pub case_counts: [usize; 4],
    pub fitted_c: f64,
    /// `√γ max_k ||(|D_k|^{-1/2})||` measured from `s' + (τ-1)/2` to `s'`.
    pub d_half_constant: f64,
    /// `max_k (||U_k^{-1}||_{H¹} - 1) / (|ε| ||a_0||_{H¹})`.
    pub u_inverse_constant: f64,
    /// `min_{|k| <= 1/(3|ε|)} α_k / ((|k| + 1)/8)`; at least 1 when the automatic bound holds.
    pub small_k_margin: f64,
    pub alpha_symmetric: bool,
}

fn h1_norm(a: &TrigPolynomial) -> f64 {
    let n = 4096;
    let h = std::f64::consts::PI / n as f64;
    let eps = 1e-6;
    (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            let d = (a.eval(x + eps) - a.eval(x - eps)) / (2.0 * eps);
            a.eval(x).powi(2) + d * d
        })
        .sum::<f64>()
        .sqrt()
        * h.sqrt()
}

fn block_norm(phi: &DMatrix<f64>, modes: &[usize], diag: &[f64]) -> f64 {
    let n = modes.len();
    let m = phi * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)) * phi.transpose();
    // H¹ seminorm weights j on the sine coefficients
    let w = DMatrix::from_fn(n, n, |r, c| m[(r, c)] * modes[r] as f64 / modes[c] as f64);
    w.singular_values().max()
}

/// Tabulates `1/(α_k α_l)` against `C |k-l|^{2(τ-1)/β} / (γ² |ε|^{τ-1})` for all
/// `k ≠ l` with `|k|, |l| <= L`, classified into four cases.
pub fn smalldivisor_audit(
    eigs: &BTreeMap<i64, EigenSystem>,
    omega: f64,
    epsilon: f64,
    gamma: f64,
    tau: f64,
    s: f64,
    convention: BetaConvention,
    a0: &TrigPolynomial,
    j_margin: usize,
) -> Result<SmallDivisorAudit> {
    let beta = convention.beta(tau);
    let mut alphas = Vec::new();
    let mut lookup = BTreeMap::new();
    for (&k, e) in eigs {
        let (a, j) = alpha_k(e, omega, j_margin)?;
        alphas.push((k, a, j));
        lookup.insert(k, (a, j));
    }
    let alpha_symmetric = lookup
        .iter()
        .all(|(k, (a, _))| lookup.get(&-k).is_none_or(|(b, _)| a == b));
    let small = 1.0 / (3.0 * epsilon.abs());
    let exponent = 2.0 * (tau - 1.0) / beta;
    let denom = gamma * gamma * epsilon.abs().powf(tau - 1.0);
    let mut rows = Vec::new();
    let mut case_constants = [0.0f64; 4];
    let mut case_counts = [0usize; 4];
    for (&k, &(ak, jk)) in &lookup {
        for (&l, &(al, il)) in &lookup {
            if k == l {
                continue;
            }
            let diff = (k - l).unsigned_abs() as f64;
            let top = (k.unsigned_abs().max(l.unsigned_abs())) as f64;
            let case = if diff >= top.powf(beta) {
                1
            } else if (k.unsigned_abs() as f64) <= small || (l.unsigned_abs() as f64) <= small {
                2
            } else if (k - l).unsigned_abs() == (jk as i64 - il as i64).unsigned_abs() {
                3
            } else {
                4
            };
            let bound = diff.powf(exponent) / denom;
            let ratio = 1.0 / (ak * al) / bound;
            case_constants[case as usize - 1] = case_constants[case as usize - 1].max(ratio);
            case_counts[case as usize - 1] += 1;
            rows.push(AuditRow {
                k,
                l,
                alpha_k: ak,
                alpha_l: al,
                bound,
                ratio,
                case,
            });
        }
    }
    let fitted_c = case_constants.iter().copied().fold(0.0, f64::max);

    let mut d_half = 0.0f64;
    let mut u_inv = 0.0f64;
    let a0_h1 = h1_norm(a0);
    let mut small_k_margin = f64::INFINITY;
    for (&k, e) in eigs {
        let kk = k.unsigned_abs() as f64;
        let d: Vec<f64> = e.eigenvalues.iter().map(|l| omega * omega * kk * kk - l).collect();
        let hk = block_norm(&e.eigenvectors, &e.modes, &d.iter().map(|x| x.abs().powf(-0.5)).collect::<Vec<_>>());
        let time = ((kk.powf(2.0 * s) + 1.0) / (kk.powf(2.0 * s + tau - 1.0) + 1.0)).sqrt();
        d_half = d_half.max(gamma.sqrt() * hk * time);
        let uk = block_norm(&e.eigenvectors, &e.modes, &d.iter().map(|x| x.signum()).collect::<Vec<_>>());
        if epsilon != 0.0 && a0_h1 > 0.0 {
            u_inv = u_inv.max((uk - 1.0) / (epsilon.abs() * a0_h1));
        }
        if kk <= small {
            let (a, _) = lookup[&k];
            small_k_margin = small_k_margin.min(a / ((kk + 1.0) / 8.0));
        }
    }
    Ok(SmallDivisorAudit {
        rows,
        alphas,
        beta,
        case_constants,
        case_counts,
        fitted_c,
        d_half_constant: d_half,
        u_inverse_constant: u_inv,
        small_k_margin,
        alpha_symmetric,
    })
}

/// Fitted constants of the remainder bounds, measured on an assembled operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderConstants {
    /// `||R1||_{s → s+(τ-1)/2} γ / |ε|^{(3-τ)/2}`.
    pub r1: f64,
    /// `||R2||_{s → s} γ / |ε|`.
    pub r2: f64,
    /// `||U^{-1} R1||` and `||U^{-1} R2||` in the `(σ, s)` norm.
    pub u_r1: f64,
    pub u_r2: f64,
}

pub fn remainder_constants(
    op: &LinearizedOperator,
    inv: &StructuredInverse,
    weights: NormWeights,
    gamma: f64,
    tau: f64,
) -> RemainderConstants {
    let base = op.weight_roots(weights);
    let smooth = op.weight_roots(NormWeights::new(weights.sigma, weights.s + (tau - 1.0) / 2.0));
    let eps = op.epsilon.abs();
    let r1n = weighted_norm(&inv.r1, &smooth, &base);
    let r2n = weighted_norm(&inv.r2, &base, &base);
    let scale = |x: f64, e: f64| if eps > 0.0 { x * gamma / eps.powf(e) } else { 0.0 };
    RemainderConstants {
        r1: scale(r1n, (3.0 - tau) / 2.0),
        r2: scale(r2n, 1.0),
        u_r1: weighted_norm(&(&inv.u * &inv.r1), &base, &base),
        u_r2: weighted_norm(&(&inv.u * &inv.r2), &base, &base),
    }
}
