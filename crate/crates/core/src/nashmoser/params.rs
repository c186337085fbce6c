use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::Precision;
use crate::spectral::NormWeights;

/// Parameters of the iterative scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeParams {
    /// V1 cutoff `N`.
    pub n_cut: usize,
    pub l0: usize,
    pub sigma_bar: f64,
    /// Budget for the loss of analyticity, `γ_n = γ0/(n²+1)`.
    pub gamma0: f64,
    pub s: f64,
    pub gamma: f64,
    pub tau: f64,
    pub chi: f64,
    pub mu: f64,
    pub n_max: usize,
    /// Sine modes of the working frame.
    pub j_max: usize,
    pub fixed_point_tol: f64,
    pub newton_tol: f64,
    pub residual_tol: f64,
    pub max_chord: usize,
    pub max_newton: usize,
    /// Stop at the first stage whose residual is below `residual_tol`.
    pub early_stop: bool,
    pub precision: Precision,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            n_cut: 3,
            l0: 1,
            sigma_bar: 1.0,
            gamma0: 0.2,
            s: 1.0,
            gamma: 0.05,
            tau: 1.5,
            chi: 1.5,
            mu: 1.0,
            n_max: 4,
            j_max: 24,
            fixed_point_tol: 1e-13,
            newton_tol: 1e-11,
            residual_tol: 1e-8,
            max_chord: 60,
            max_newton: 30,
            early_stop: false,
            precision: Precision::Double,
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 1.0 && self.tau < 2.0) {
            return Err(invalid("tau", format!("{} not in (1, 2)", self.tau)));
        }
        if !(self.chi > 1.0 && self.chi < 2.0) {
            return Err(invalid("chi", format!("{} not in (1, 2)", self.chi)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma", format!("{} not in (0, 1)", self.gamma)));
        }
        if self.l0 == 0 || self.n_cut == 0 {
            return Err(invalid("l0", "L0 and N must be positive"));
        }
        if !(self.sigma_bar > 0.0 && self.gamma0 > 0.0) {
            return Err(invalid("sigma_bar", "widths must be positive"));
        }
        let budget: f64 = (0..=self.n_max).map(|n| self.gamma_n(n)).sum();
        if budget > self.sigma_bar / 2.0 {
            return Err(invalid("gamma0", format!("sum of losses {budget} exceeds sigma_bar/2")));
        }
        if self.j_max <= self.frame_l() {
            return Err(invalid("j_max", format!("need j_max > L_nmax = {}", self.frame_l())));
        }
        if self.n_cut >= self.frame_l() {
            return Err(invalid("n_cut", "N must be below the frame size"));
        }
        Ok(())
    }

    /// `L_n = L0 2^n`.
    pub fn l_n(&self, n: usize) -> usize {
        self.l0 << n
    }

    pub fn gamma_n(&self, n: usize) -> f64 {
        self.gamma0 / ((n * n) as f64 + 1.0)
    }

    /// `σ_n = σ̄ - Σ_{i<n} γ_i`.
    pub fn sigma_n(&self, n: usize) -> f64 {
        self.sigma_bar - (0..n).map(|i| self.gamma_n(i)).sum::<f64>()
    }

    pub fn weights(&self, n: usize) -> NormWeights {
        NormWeights::new(self.sigma_n(n), self.s)
    }

    pub fn frame_l(&self) -> usize {
        self.l_n(self.n_max)
    }
}
