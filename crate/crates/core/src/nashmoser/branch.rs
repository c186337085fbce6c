use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::params::SchemeParams;
use super::solve::{frame_v1, nash_moser_solve, q2_options, residual_field, BranchPoint};
use crate::bifurcation::{derivative_multiplier, q2_tangent, tangent_pairs, CriticalCircle, Representative, VCoords};
use crate::error::{Error, Result};
use crate::spectral::{eval_nonlinearity_to, synthesize, NonlinearitySpec, SpectralField, Subspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub delta: f64,
    pub last_good: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub terminated: Option<Termination>,
}

/// `-Δv1 - Π_{V1} g(δ, x, v1 + w + v2)`.
pub fn q1_defect(spec: &NonlinearitySpec, delta: f64, point: &BranchPoint, n_cut: usize) -> Result<SpectralField> {
    let u = point.u();
    let g = eval_nonlinearity_to(spec, delta, &u, u.l_max(), u.j_max(), 2)?;
    Ok(point.v1.neg_laplacian().sub(&g).project(Subspace::V1(n_cut)))
}

/// Derivative of the (Q1) map in `v1` with `w` frozen and `v2` following `v1`.
fn q1_jacobian(spec: &NonlinearitySpec, delta: f64, point: &BranchPoint, coords: &VCoords, params: &SchemeParams) -> Result<DMatrix<f64>> {
    let u = point.u();
    let (l, j) = (u.l_max(), u.j_max());
    let a = derivative_multiplier(spec, delta, &u, l, l);
    let q2 = q2_options(params);
    let dim = coords.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let e = DVector::from_fn(dim, |k, _| if k == i { 1.0 } else { 0.0 });
        let h = coords.to_field(&e);
        let z = q2_tangent(&a, &h, &q2)?;
        let col = h.neg_laplacian().sub(&a.apply(&h.add(&z), l, j)).project(Subspace::V1(coords.n));
        m.set_column(i, &coords.from_field(&col));
    }
    Ok(m)
}

/// Newton for (Q1) at fixed `δ` with the phase pinned by `<x - x_ref, τ_ref> = 0`.
fn solve_q1(
    spec: &NonlinearitySpec,
    delta: f64,
    start: &DVector<f64>,
    x_ref: &DVector<f64>,
    coords: &VCoords,
    params: &SchemeParams,
) -> Result<BranchPoint> {
    let tau = tangent_pairs(x_ref);
    let n = start.len();
    let mut x = start.clone();
    let mut last = f64::INFINITY;
    for it in 0..params.max_newton {
        let mut point = nash_moser_solve(spec, delta, &coords.to_field(&x), params)?;
        let f = coords.from_field(&q1_defect(spec, delta, &point, params.n_cut)?);
        let phase = (&x - x_ref).dot(&tau);
        last = f.norm();
        if last <= params.newton_tol && phase.abs() <= params.newton_tol {
            point.q1_iterations = it;
            point.q1_defect = last;
            return Ok(point);
        }
        let jac = q1_jacobian(spec, delta, &point, coords, params)?;
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&jac);
        m.view_mut((0, n), (n, 1)).copy_from(&tau);
        m.view_mut((n, 0), (1, n)).copy_from(&tau.transpose());
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-&f));
        rhs[n] = -phase;
        let sol = m.lu().solve(&rhs).ok_or(Error::NonContraction {
            stage: "Q1 Newton",
            rate: f64::INFINITY,
            condition: "bordered Jacobian is singular; the circle is degenerate at this delta",
        })?;
        x += sol.rows(0, n);
    }
    Err(Error::NoConvergence {
        stage: "Q1 Newton",
        iterations: params.max_newton,
        last_step: last,
    })
}

/// Predictor-corrector continuation of `(Q1)` in `δ` from `v̄1`, over the grid in
/// increasing order. A failed corrector ends the branch.
pub fn continue_branch_from(spec: &NonlinearitySpec, v1_bar: &SpectralField, delta_grid: &[f64], params: &SchemeParams) -> Result<Branch> {
    params.validate()?;
    let v1_bar = frame_v1(v1_bar, params)?;
    let coords = VCoords::new(params.n_cut, params.frame_l(), params.j_max);
    let x_ref = coords.from_field(&v1_bar);
    let mut grid = delta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut history: Vec<(f64, DVector<f64>)> = vec![(0.0, x_ref.clone())];
    let mut points = Vec::new();
    for &delta in &grid {
        let predictor = match history.as_slice() {
            [.., (d0, x0), (d1, x1)] => x1 + (x1 - x0) * ((delta - d1) / (d1 - d0)),
            [(_, x)] => x.clone(),
            [] => unreachable!(),
        };
        match solve_q1(spec, delta, &predictor, &x_ref, &coords, params) {
            Ok(point) => {
                history.push((delta, coords.from_field(&point.v1)));
                points.push(point);
            }
            Err(e) => {
                return Ok(Branch {
                    points,
                    terminated: Some(Termination {
                        delta,
                        last_good: history.last().map(|h| h.0).filter(|&d| d > 0.0),
                        reason: e.to_string(),
                    }),
                });
            }
        }
    }
    Ok(Branch { points, terminated: None })
}

pub fn continue_branch_q1(spec: &NonlinearitySpec, circle: &CriticalCircle, delta_grid: &[f64], params: &SchemeParams) -> Result<Branch> {
    match &circle.representative {
        Representative::Field(v) => continue_branch_from(spec, v, delta_grid, params),
        Representative::Loop(_) => Err(Error::InvalidParameter {
            name: "circle",
            reason: "continuation needs a V1 field representative".into(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSolution {
    pub delta: f64,
    pub omega: f64,
    /// `ũ = δ(v1 + w + v2)`, `2π`-periodic in `τ = ωt`.
    pub u_tilde: SpectralField,
    pub nt: usize,
    pub nx: usize,
    /// `u(t_a, x_b) = ũ(ω t_a, x_b)` with `t_a = 2πa/(ω nt)`, row-major in `a`.
    pub samples: Vec<f64>,
    /// `L²` norm over one period of `u_tt - u_xx + f(x, u)` by grid evaluation.
    pub physical_residual: f64,
    /// `δ^p ||rescaled residual||_{L²} / √ω` with the residual resolved on a doubled frame.
    pub predicted_residual: f64,
}

/// Undoes the rescaling and evaluates the original equation on a grid.
pub fn rescale_solution(point: &BranchPoint, spec: &NonlinearitySpec, nt: usize, nx: usize) -> Result<PhysicalSolution> {
    let delta = point.delta;
    let omega = point.omega;
    let u = point.u();
    let u_tilde = u.scale(delta);
    let samples = synthesize(&u_tilde, nt, nx).values;
    // ω² ũ_ττ - ũ_xx + f(x, ũ) with f(x, s) = Σ a_k s^k
    let w2 = omega * omega;
    let lin = u_tilde.map_indexed(|l, j, c| c * (-w2 * (l * l) as f64 + (j * j) as f64));
    let lin_grid = synthesize(&lin, nt, nx).values;
    let xs = crate::spectral::x_nodes(nx);
    let mut acc = 0.0;
    for (i, (&v, &lv)) in samples.iter().zip(&lin_grid).enumerate() {
        let b = i % nx;
        if xs[b] >= std::f64::consts::PI {
            continue;
        }
        let f: f64 = spec.terms.iter().map(|(&k, a)| a.eval(xs[b]) * v.powi(k as i32)).sum();
        let r = lv + f;
        acc += r * r;
    }
    let cell = (2.0 * std::f64::consts::PI / nt as f64) * (2.0 * std::f64::consts::PI / nx as f64);
    let physical_residual = (acc * cell / omega).sqrt();

    let r = residual_field(spec, delta, &u, 2 * u.l_max(), 2 * u.j_max())?;
    let r_l2 = r.l2_dot(&r).max(0.0).sqrt();
    let predicted_residual = delta.powi(spec.p as i32) * r_l2 / omega.sqrt();
    Ok(PhysicalSolution {
        delta,
        omega,
        u_tilde,
        nt,
        nx,
        samples,
        physical_residual,
        predicted_residual,
    })
}
