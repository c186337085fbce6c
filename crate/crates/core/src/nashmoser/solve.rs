use serde::{Deserialize, Serialize};

use super::params::SchemeParams;
use crate::bifurcation::{solve_q2_from, Q2Options};
use crate::error::{Error, Result};
use crate::linop::{assemble_ln, mean_value, melnikov_test_eps, MelnikovReport};
use crate::spectral::{eval_nonlinearity_to, norm_sigma_s, NonlinearitySpec, NormWeights, SpectralField, Subspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub n: usize,
    pub l_n: usize,
    pub sigma: f64,
    /// `||h_n||_{σ_n, s}`.
    pub h_norm: f64,
    pub chord_iterations: usize,
    pub contraction_rate: f64,
    /// `||L_ω w_n - ε P_n Π_W Γ(δ, v1, w_n)||_{σ_n, s}`.
    pub defect: f64,
    pub melnikov: MelnikovReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub delta: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub v1: SpectralField,
    pub w: SpectralField,
    pub v2: SpectralField,
    /// Corrections `h_n` with the width `σ_n` they are measured in.
    pub h: Vec<(SpectralField, f64)>,
    pub stages: Vec<Stage>,
    pub accepted: bool,
    pub rejected_stage: Option<usize>,
    pub rejection: Option<String>,
    /// Rescaled residual of the full equation on the frame.
    pub residual: f64,
    pub h_norm_history: Vec<f64>,
    pub m_value: f64,
    /// Newton iterations and final defect of the (Q1) equation; zero when `v1` was held fixed.
    pub q1_iterations: usize,
    pub q1_defect: f64,
}

impl BranchPoint {
    pub fn u(&self) -> SpectralField {
        self.v1.add(&self.w).add(&self.v2)
    }
}

/// `(L_ω u - ε g(δ, x, u)) / ε` on `l <= l_out, j <= j_out`; just `L_ω u` when `ε = 0`.
pub fn residual_field(spec: &NonlinearitySpec, delta: f64, u: &SpectralField, l_out: usize, j_out: usize) -> Result<SpectralField> {
    let eps = spec.epsilon(delta);
    let lin = u.resized(l_out, j_out).apply_l_omega(spec.omega(delta));
    if eps == 0.0 {
        return Ok(lin);
    }
    let g = eval_nonlinearity_to(spec, delta, u, l_out, j_out, 2)?;
    Ok(lin.scale(1.0 / eps).sub(&g))
}

/// `σ,s`-norm of the rescaled residual on the frame of `u`. Its `V1`, `V2` and `W`
/// parts are the (Q1), (Q2) and `1/ε` times the (P) defects.
pub fn residual_norm(spec: &NonlinearitySpec, delta: f64, u: &SpectralField, weights: NormWeights) -> Result<f64> {
    Ok(norm_sigma_s(&residual_field(spec, delta, u, u.l_max(), u.j_max())?, weights))
}

/// `P_n[L_ω w - ε Π_W g(δ, x, v1 + w + v2)]` with `P_n` the projection on `|l| <= l_n`.
pub fn p_defect(
    spec: &NonlinearitySpec,
    delta: f64,
    v1: &SpectralField,
    w: &SpectralField,
    v2: &SpectralField,
    l_n: usize,
) -> Result<SpectralField> {
    let u = v1.add(w).add(v2);
    let g = eval_nonlinearity_to(spec, delta, &u, u.l_max(), u.j_max(), 2)?;
    let eps = spec.epsilon(delta);
    Ok(w.apply_l_omega(spec.omega(delta))
        .sub(&g.scale(eps))
        .project(Subspace::Pn(l_n)))
}

pub(crate) fn q2_options(params: &SchemeParams) -> Q2Options {
    Q2Options {
        n_cut: params.n_cut,
        tol: 1e-16,
        weights: NormWeights::new(0.0, params.s),
        max_iter: 400,
    }
}

/// Checks that `v1` lies in `V1` and moves it to the working frame.
pub(crate) fn frame_v1(v1: &SpectralField, params: &SchemeParams) -> Result<SpectralField> {
    let sub = Subspace::V1(params.n_cut);
    if !v1.is_supported_on(sub) {
        return Err(Error::InvalidParameter {
            name: "v1",
            reason: format!("not supported on V1 with N = {}", params.n_cut),
        });
    }
    Ok(v1.resized(params.frame_l(), params.j_max))
}

fn reject(point: &mut BranchPoint, n: usize, reason: String) {
    point.accepted = false;
    point.rejected_stage = Some(n);
    point.rejection = Some(reason);
}

/// Solves the range equation for fixed `v1` on the truncations `W^(0) ⊂ … ⊂ W^(n_max)`,
/// starting from `w = 0`. Each stage is a chord iteration with the factorized `L_n`.
pub fn nash_moser_solve(spec: &NonlinearitySpec, delta: f64, v1: &SpectralField, params: &SchemeParams) -> Result<BranchPoint> {
    params.validate()?;
    let v1 = frame_v1(v1, params)?;
    let (lf, jf) = (params.frame_l(), params.j_max);
    let eps = spec.epsilon(delta);
    let q2 = q2_options(params);
    let mut w = SpectralField::zeros(lf, jf);
    let mut v2 = solve_q2_from(spec, delta, &v1, &w, &q2, None)?.v2;
    let mut point = BranchPoint {
        delta,
        omega: spec.omega(delta),
        epsilon: eps,
        v1: v1.clone(),
        w: w.clone(),
        v2: v2.clone(),
        h: Vec::new(),
        stages: Vec::new(),
        accepted: true,
        rejected_stage: None,
        rejection: None,
        residual: 0.0,
        h_norm_history: Vec::new(),
        m_value: mean_value(spec, delta, &v1, &w, &v2)?,
        q1_iterations: 0,
        q1_defect: 0.0,
    };
    if eps == 0.0 {
        point.residual = residual_norm(spec, delta, &point.u(), params.weights(0))?;
        return Ok(point);
    }

    'stages: for n in 0..=params.n_max {
        let l_n = params.l_n(n);
        let weights = params.weights(n);
        let m_value = mean_value(spec, delta, &v1, &w, &v2)?;
        let melnikov = melnikov_test_eps(eps, m_value, l_n, params.gamma, params.tau, params.precision);
        if !melnikov.accepted {
            let v = &melnikov.violations[0];
            let reason = format!("Melnikov condition {} fails at (k={}, j={})", v.condition, v.k, v.j);
            reject(&mut point, n, reason);
            break;
        }
        let op = assemble_ln(spec, delta, &v1, &w, &v2, params.n_cut, l_n)?;
        let lu = op.full().lu();
        let mut h = SpectralField::zeros(lf, jf);
        let mut prev = f64::INFINITY;
        let mut rate = 0.0f64;
        let mut iterations = 0;
        loop {
            let trial = w.add(&h);
            let f = p_defect(spec, delta, &v1, &trial, &v2, l_n)?;
            let Some(step) = lu.solve(&op.to_vec(&f)) else {
                reject(&mut point, n, format!("L_{n} is singular"));
                break 'stages;
            };
            let mut step = op.from_vec(&step, lf, jf).scale(-1.0);
            step.enforce_reality();
            h = h.add(&step);
            v2 = solve_q2_from(spec, delta, &v1, &w.add(&h), &q2, Some(&v2))?.v2;
            iterations += 1;
            let size = norm_sigma_s(&step, weights);
            let scale = norm_sigma_s(&w.add(&h), weights);
            if prev.is_finite() && prev > 1e-15 * scale {
                rate = rate.max(size / prev);
            }
            let stalled = prev.is_finite() && size > 0.5 * prev && size <= 1e-10 * scale;
            if size <= params.fixed_point_tol * scale.max(1e-300) || size == 0.0 || stalled {
                break;
            }
            if prev.is_finite() && size >= prev {
                return Err(Error::NonContraction {
                    stage: "range equation",
                    rate: size / prev,
                    condition: "|eps| gamma^-1 L_n^(tau-1) too large for the correction map",
                });
            }
            if iterations >= params.max_chord {
                return Err(Error::NoConvergence {
                    stage: "range equation",
                    iterations,
                    last_step: size,
                });
            }
            prev = size;
        }
        w = w.add(&h);
        let defect = norm_sigma_s(&p_defect(spec, delta, &v1, &w, &v2, l_n)?, weights);
        let h_norm = norm_sigma_s(&h, weights);
        point.h.push((h, weights.sigma));
        point.h_norm_history.push(h_norm);
        point.stages.push(Stage {
            n,
            l_n,
            sigma: weights.sigma,
            h_norm,
            chord_iterations: iterations,
            contraction_rate: rate,
            defect,
            melnikov,
        });
        point.w = w.clone();
        point.v2 = v2.clone();
        if params.early_stop && defect / eps.abs() <= params.residual_tol {
            break;
        }
    }
    point.m_value = mean_value(spec, delta, &v1, &w, &v2)?;
    let last = point.stages.len().saturating_sub(1);
    point.residual = residual_norm(spec, delta, &point.u(), params.weights(last))?;
    Ok(point)
}
