use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::spectral::NonlinearitySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub j: usize,
    /// 1 for `|ωk - j|`, 2 for `|ωk - j - εM/(2j)|`.
    pub condition: u8,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelnikovReport {
    pub accepted: bool,
    pub violations: Vec<Violation>,
    pub gamma: f64,
    pub tau: f64,
    pub l_n: usize,
    pub epsilon: f64,
    pub m_value: f64,
    /// Smallest margin over the scanned range, `None` when the range is empty.
    pub min_margin: Option<f64>,
}

pub fn melnikov_test(
    delta: f64,
    spec: &NonlinearitySpec,
    m_value: f64,
    l_n: usize,
    gamma: f64,
    tau: f64,
) -> MelnikovReport {
    melnikov_test_eps(spec.epsilon(delta), m_value, l_n, gamma, tau, Precision::Double)
}

/// Both first-order conditions for `k ∈ (1/(3|ε|), L_n]`, `j <= 2L_n`, `j ≠ k`.
pub fn melnikov_test_eps(
    epsilon: f64,
    m_value: f64,
    l_n: usize,
    gamma: f64,
    tau: f64,
    precision: Precision,
) -> MelnikovReport {
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    if epsilon != 0.0 {
        let k_min = (1.0 / (3.0 * epsilon.abs())).floor() as usize + 1;
        for k in k_min..=l_n {
            for j in 1..=2 * l_n {
                if j == k {
                    continue;
                }
                let threshold = gamma / ((k + j) as f64).powf(tau);
                let (d1, d2) = match precision {
                    Precision::Double => {
                        let omega = (1.0 + 2.0 * epsilon).sqrt();
                        let d1 = omega * k as f64 - j as f64;
                        (d1.abs(), (d1 - epsilon * m_value / (2.0 * j as f64)).abs())
                    }
                    Precision::Extended => {
                        let e = TwoFloat::from(epsilon);
                        let omega = (TwoFloat::from(1.0) + e * 2.0).sqrt();
                        let d1 = omega * k as f64 - j as f64;
                        let d2 = d1 - e * m_value / (2.0 * j as f64);
                        (f64::from(d1.abs()), f64::from(d2.abs()))
                    }
                };
                for (cond, d) in [(1u8, d1), (2u8, d2)] {
                    let margin = d - threshold;
                    min_margin = min_margin.min(margin);
                    if margin < 0.0 {
                        violations.push(Violation {
                            k,
                            j,
                            condition: cond,
                            margin,
                        });
                    }
                }
            }
        }
    }
    MelnikovReport {
        accepted: violations.is_empty(),
        violations,
        gamma,
        tau,
        l_n,
        epsilon,
        m_value,
        min_margin: min_margin.is_finite().then_some(min_margin),
    }
}
