use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{norm_sigma_s, synthesize, Multiplier, NonlinearitySpec, NormWeights, SpectralField, Subspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Q2Options {
    /// V1 cutoff `N`.
    pub n_cut: usize,
    pub tol: f64,
    pub weights: NormWeights,
    pub max_iter: usize,
}

impl Q2Options {
    pub fn new(n_cut: usize, tol: f64) -> Self {
        Self {
            n_cut,
            tol,
            weights: NormWeights::new(0.0, 1.0),
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Q2Solution {
    pub v2: SpectralField,
    pub contraction_rate: f64,
    pub iterations: usize,
}

/// Tracks ratios of successive step sizes and flags persistent growth.
#[derive(Debug, Default)]
pub(crate) struct RateMonitor {
    last: Option<f64>,
    pub rate: f64,
    growing: usize,
}

impl RateMonitor {
    /// Records a step; returns `true` if the iteration has expanded for a full window.
    pub fn push(&mut self, step: f64, floor: f64) -> bool {
        if let Some(prev) = self.last {
            if prev > floor && step > floor {
                let r = step / prev;
                self.rate = self.rate.max(r);
                self.growing = if r > 1.0 { self.growing + 1 } else { 0 };
            }
        }
        self.last = Some(step);
        self.growing >= 3
    }
}

/// Fixed point of `v2 ↦ (-Δ)^{-1} Π_{V2} g(δ, x, v1 + w + v2)`.
pub fn solve_q2(
    spec: &NonlinearitySpec,
    delta: f64,
    v1: &SpectralField,
    w: &SpectralField,
    opts: &Q2Options,
) -> Result<Q2Solution> {
    solve_q2_from(spec, delta, v1, w, opts, None)
}

pub fn solve_q2_from(
    spec: &NonlinearitySpec,
    delta: f64,
    v1: &SpectralField,
    w: &SpectralField,
    opts: &Q2Options,
    start: Option<&SpectralField>,
) -> Result<Q2Solution> {
    let base = v1.add(w);
    let sub = Subspace::V2(opts.n_cut);
    let mut v2 = match start {
        Some(s) => s.project(sub),
        None => SpectralField::zeros(v1.l_max(), v1.j_max()),
    };
    let mut monitor = RateMonitor::default();
    let mut prev = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let g = crate::spectral::eval_nonlinearity(spec, delta, &base.add(&v2), 2)?;
        let next = g.project(sub).inv_laplacian_v()?;
        let step = norm_sigma_s(&next.sub(&v2), opts.weights);
        let scale = norm_sigma_s(&next, opts.weights).max(1e-300);
        v2 = next;
        let stalled = step <= 1e-12 * scale && step > 0.5 * prev;
        prev = step;
        if step <= opts.tol || stalled {
            return Ok(Q2Solution {
                v2,
                contraction_rate: monitor.rate,
                iterations: it,
            });
        }
        if monitor.push(step, 1e-13 * scale) {
            return Err(Error::NonContraction {
                stage: "Q2",
                rate: monitor.rate,
                condition: "N too small or ||v1|| beyond the admissible ball for this delta",
            });
        }
    }
    Err(Error::NoConvergence {
        stage: "Q2",
        iterations: opts.max_iter,
        last_step: monitor.rate,
    })
}

/// Multiplication by `∂_u g(δ, x, u)` resolving outputs up to time mode `l_out`.
pub fn derivative_multiplier(
    spec: &NonlinearitySpec,
    delta: f64,
    u: &SpectralField,
    h_l: usize,
    l_out: usize,
) -> Multiplier {
    let k = spec.max_power() - 1;
    let dims = crate::spectral::grid_dims(
        &[u],
        k * u.support_l() + h_l,
        k * u.j_max() + u.j_max() + spec.max_x_degree(),
        l_out,
    );
    let ug = synthesize(u, dims.0, dims.1);
    Multiplier::new(spec.pointwise(delta, &ug, 1))
}

/// Solves `z = (-Δ)^{-1} Π_{V2} (A (h + z))`: the derivative of `v2` along `h`,
/// where `A` multiplies by `∂_u g` at the solution.
pub fn q2_tangent(a: &Multiplier, h: &SpectralField, opts: &Q2Options) -> Result<SpectralField> {
    let sub = Subspace::V2(opts.n_cut);
    let (l, j) = (h.l_max(), h.j_max());
    let mut z = SpectralField::zeros(l, j);
    let hn = norm_sigma_s(h, opts.weights);
    let mut monitor = RateMonitor::default();
    let mut last = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let next = a.apply(&h.add(&z), l, j).project(sub).inv_laplacian_v()?;
        let step = norm_sigma_s(&next.sub(&z), opts.weights);
        let scale = norm_sigma_s(&next, opts.weights).max(1e-300);
        z = next;
        // below 1e-11 a step that fails to halve is rounding noise
        let floor = scale + hn;
        if step <= 1e-14 * floor || (step <= 1e-11 * floor && step > 0.5 * last) {
            return Ok(z);
        }
        last = step;
        if monitor.push(step, 1e-13 * scale) {
            return Err(Error::NonContraction {
                stage: "Q2 tangent",
                rate: monitor.rate,
                condition: "N too small for the linearized (Q2) map",
            });
        }
    }
    Err(Error::NoConvergence {
        stage: "Q2 tangent",
        iterations: opts.max_iter,
        last_step: last,
    })
}
