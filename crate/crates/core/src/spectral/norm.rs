use serde::{Deserialize, Serialize};

use super::field::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormWeights {
    pub sigma: f64,
    pub s: f64,
}

impl NormWeights {
    pub fn new(sigma: f64, s: f64) -> Self {
        Self { sigma, s }
    }

    /// `e^{2σ|l|}(|l|^{2s} + 1)`.
    #[inline]
    pub fn time_weight(&self, l: i64) -> f64 {
        let a = l.unsigned_abs() as f64;
        (2.0 * self.sigma * a).exp() * (a.powf(2.0 * self.s) + 1.0)
    }

    /// Weight of coefficient `(l, j)` in the squared norm.
    #[inline]
    pub fn weight(&self, l: i64, j: usize) -> f64 {
        self.time_weight(l) * std::f64::consts::FRAC_PI_2 * (j * j) as f64
    }
}

/// `||u||_{σ,s}`, with `||u_l||²_{H¹} = (π/2) Σ_j j² |c_{l,j}|²`.
pub fn norm_sigma_s(u: &SpectralField, w: NormWeights) -> f64 {
    u.iter()
        .map(|(l, j, c)| w.weight(l, j) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Which of the two conflicting definitions of `β` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaConvention {
    /// `β = (2 - τ) / 2`.
    Bracket,
    /// `β = (2 - τ) / τ`.
    SmallDivisor,
}

impl BetaConvention {
    pub fn beta(self, tau: f64) -> f64 {
        match self {
            BetaConvention::Bracket => (2.0 - tau) / 2.0,
            BetaConvention::SmallDivisor => (2.0 - tau) / tau,
        }
    }
}

/// `Σ_i ||h_i||_{σ_i,s} / (σ_i - σ)^{2(τ-1)/β}` for a stored decomposition.
/// Returns `+∞` if some `σ_i <= σ`.
pub fn bracket_norm(
    decomposition: &[(SpectralField, f64)],
    sigma: f64,
    s: f64,
    tau: f64,
    convention: BetaConvention,
) -> f64 {
    let exponent = 2.0 * (tau - 1.0) / convention.beta(tau);
    let mut total = 0.0;
    for (h, sigma_i) in decomposition {
        if *sigma_i <= sigma {
            return f64::INFINITY;
        }
        total += norm_sigma_s(h, NormWeights::new(*sigma_i, s)) / (sigma_i - sigma).powf(exponent);
    }
    total
}
