//! The linearized operator on `W`: Sturm-Liouville structure, small divisors,
//! Melnikov conditions, assembly and inversion.

mod assemble;
mod audit;
mod eigen;
mod inverse;
mod melnikov;

pub use assemble::{assemble_ln, w_index, LinearizedOperator};
pub use audit::{remainder_constants, smalldivisor_audit, AuditRow, RemainderConstants, SmallDivisorAudit};
pub use eigen::{alpha_k, eigen_sk, sk_matrix, EigenSystem};
pub use inverse::{frobenius, invert_direct, invert_structured, spectral_norm, weighted_norm, StructuredInverse};
pub use melnikov::{melnikov_test, melnikov_test_eps, MelnikovReport, Precision, Violation};

use std::collections::BTreeMap;

use crate::error::Result;
use crate::spectral::{mean_value_m, NonlinearitySpec, SpectralField, TrigPolynomial};

/// `M = (1/|Ω|) ∫_Ω ∂_u g(δ, x, v1 + w + v2)`.
pub fn mean_value(spec: &NonlinearitySpec, delta: f64, v1: &SpectralField, w: &SpectralField, v2: &SpectralField) -> Result<f64> {
    mean_value_m(spec, delta, &v1.add(w).add(v2))
}

/// Eigensystems of `S_k` for `|k| <= l_max`.
pub fn eigensystems(l_max: usize, epsilon: f64, a0: &TrigPolynomial, j_max: usize) -> Result<BTreeMap<i64, EigenSystem>> {
    use rayon::prelude::*;
    let ks: Vec<i64> = (-(l_max as i64)..=l_max as i64).collect();
    let list: Result<Vec<EigenSystem>> = ks.par_iter().map(|&k| eigen_sk(k, epsilon, a0, j_max)).collect();
    Ok(list?.into_iter().map(|e| (e.k, e)).collect())
}

#[cfg(test)]
mod tests;
