//! Iteration on the range equation over growing truncations, (Q1) continuation in
//! `δ`, residuals, and the return to physical variables.

mod branch;
mod params;
mod solve;

pub use branch::{continue_branch_from, continue_branch_q1, q1_defect, rescale_solution, Branch, PhysicalSolution, Termination};
pub use params::SchemeParams;
pub use solve::{nash_moser_solve, p_defect, residual_field, residual_norm, BranchPoint, Stage};

use serde::{Deserialize, Serialize};

/// Least-squares fit of `log ||h_i|| = a - b χ^i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiFit {
    pub chi: f64,
    pub a: f64,
    pub b: f64,
    pub rms: f64,
}

/// Scans `χ ∈ (1, chi_max]` and keeps the best linear fit with `b > 0`.
/// Zero entries are skipped; needs three positive entries.
pub fn fit_superexponential(history: &[f64], chi_max: f64) -> Option<ChiFit> {
    let pts: Vec<(f64, f64)> = history
        .iter()
        .enumerate()
        .filter(|(_, &h)| h > 0.0)
        .map(|(i, &h)| (i as f64, h.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let fit = |chi: f64| {
        let n = pts.len() as f64;
        let xs: Vec<f64> = pts.iter().map(|(i, _)| chi.powf(*i)).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&pts).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let a = my - slope * mx;
        let rms = (xs.iter().zip(&pts).map(|(x, p)| (a + slope * x - p.1).powi(2)).sum::<f64>() / n).sqrt();
        ChiFit { chi, a, b: -slope, rms }
    };
    let steps = 2000;
    (1..=steps)
        .map(|k| fit(1.0 + (chi_max - 1.0) * k as f64 / steps as f64))
        .filter(|f| f.b > 0.0 && f.rms.is_finite())
        .min_by(|x, y| x.rms.total_cmp(&y.rms))
}
