use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::coords::{tangent_pairs, LoopFunction, VCoords};
use super::phi0::{embed_hn, phi0, phi0_hessian_action, power_terms};
use super::q2::{derivative_multiplier, q2_tangent, solve_q2, Q2Options};
use crate::error::{Error, Result};
use crate::spectral::{NonlinearitySpec, SpectralField, Subspace, TrigPolynomial};

/// A smooth functional in real orthonormal coordinates, invariant under time translation.
pub trait Functional: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> Result<f64>;
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn representative(&self, x: &DVector<f64>) -> Result<Representative>;

    /// Coordinates of `∂_t` at `x`.
    fn tangent(&self, x: &DVector<f64>) -> DVector<f64> {
        tangent_pairs(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representative {
    Field(SpectralField),
    Loop(LoopFunction),
}

fn columns(dim: usize, mut col: impl FnMut(&DVector<f64>) -> Result<DVector<f64>>) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let e = DVector::from_fn(dim, |k, _| if k == i { 1.0 } else { 0.0 });
        m.set_column(i, &col(&e)?);
    }
    Ok(m)
}

/// `Φ0` restricted to the V-modes `1 <= l <= n`.
#[derive(Debug, Clone)]
pub struct Phi0Functional {
    pub spec: NonlinearitySpec,
    pub coords: VCoords,
}

impl Functional for Phi0Functional {
    fn dim(&self) -> usize {
        self.coords.dim()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(phi0(&self.coords.to_field(x), &self.spec)?.0)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (_, g) = phi0(&self.coords.to_field(x), &self.spec)?;
        Ok(self.coords.from_field(&g))
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let v = self.coords.to_field(x);
        columns(self.dim(), |e| {
            let h = self.coords.to_field(e);
            Ok(self.coords.from_field(&phi0_hessian_action(&v, &h, &self.spec)))
        })
    }

    fn representative(&self, x: &DVector<f64>) -> Result<Representative> {
        Ok(Representative::Field(self.coords.to_field(x)))
    }
}

/// `Ψ0(v1) = Φ0(v1 + v2(0, v1, 0))` on `V1`.
#[derive(Debug, Clone)]
pub struct Psi0Functional {
    pub spec: NonlinearitySpec,
    pub coords: VCoords,
    pub q2: Q2Options,
}

impl Psi0Functional {
    pub fn new(spec: &NonlinearitySpec, coords: VCoords, q2: Q2Options) -> Self {
        Self {
            spec: spec.leading_only(),
            coords,
            q2,
        }
    }

    /// `v1 + v2(0, v1, 0)`.
    pub fn lift(&self, v1: &SpectralField) -> Result<SpectralField> {
        let zero = SpectralField::zeros(v1.l_max(), v1.j_max());
        let sol = solve_q2(&self.spec, 0.0, v1, &zero, &self.q2)?;
        Ok(v1.add(&sol.v2))
    }

    /// Value and `V1` gradient via `dΨ0(v1)[h] = ∫ [-Δv1 - Π_{V1}(s* a_p (v1 + v2)^p)] h`.
    pub fn value_gradient(&self, v1: &SpectralField) -> Result<(f64, SpectralField)> {
        let v = self.lift(v1)?;
        let (value, g) = phi0(&v, &self.spec)?;
        Ok((value, g.project(Subspace::V1(self.coords.n))))
    }
}

impl Functional for Psi0Functional {
    fn dim(&self) -> usize {
        self.coords.dim()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let v = self.lift(&self.coords.to_field(x))?;
        Ok(phi0(&v, &self.spec)?.0)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (_, g) = self.value_gradient(&self.coords.to_field(x))?;
        Ok(self.coords.from_field(&g))
    }

    /// `D²Ψ0[h, k] = D²Φ0(v)[h + ∂v2·h, k]`, the term with `v2''` vanishing by (Q2).
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let v = self.lift(&self.coords.to_field(x))?;
        let a = derivative_multiplier(&self.spec, 0.0, &v, v.l_max(), v.l_max());
        let sub = Subspace::V1(self.coords.n);
        columns(self.dim(), |e| {
            let h = self.coords.to_field(e);
            let z = q2_tangent(&a, &h, &self.q2)?;
            let act = h
                .neg_laplacian()
                .sub(&a.apply(&h.add(&z), v.l_max(), v.j_max()))
                .project(sub);
            Ok(self.coords.from_field(&act))
        })
    }

    fn representative(&self, x: &DVector<f64>) -> Result<Representative> {
        Ok(Representative::Field(self.coords.to_field(x)))
    }
}

fn loop_grid(l_eta: usize) -> usize {
    crate::spectral::fft_size(4 * l_eta + 2)
}

fn neg_second_derivative(eta: &LoopFunction) -> LoopFunction {
    let mut d = eta.derivative().derivative();
    d.coeffs.iter_mut().for_each(|c| *c = -*c);
    d
}

fn combine(parts: &[(f64, &LoopFunction)]) -> LoopFunction {
    let n = parts[0].1.l_eta();
    LoopFunction {
        coeffs: (0..n)
            .map(|i| parts.iter().map(|(a, f)| f.coeffs[i] * *a).sum::<Complex64>())
            .collect(),
    }
}

/// `∫ η⁴` and `P0(c η² g)` for loops.
fn loop_power(eta: &LoopFunction, g: &LoopFunction, c: f64) -> (f64, LoopFunction) {
    let nt = loop_grid(eta.l_eta().max(g.l_eta()));
    let e = eta.samples(nt);
    let gs = g.samples(nt);
    let quartic = e.iter().map(|x| x.powi(4)).sum::<f64>() * 2.0 * PI / nt as f64;
    let prod: Vec<f64> = e.iter().zip(&gs).map(|(a, b)| c * a * a * b).collect();
    (quartic, LoopFunction::from_samples(&prod, eta.l_eta()))
}

/// `Ψ(η) = ½∫η̇² - ¼(∫η²)²`.
#[derive(Debug, Clone, Copy)]
pub struct PsiQuadratic {
    pub l_eta: usize,
}

impl PsiQuadratic {
    pub fn psi(&self, eta: &LoopFunction) -> f64 {
        let d = eta.derivative();
        let m = eta.dot(eta);
        0.5 * d.dot(&d) - 0.25 * m * m
    }

    /// `-η̈ - (∫η²) η`; vanishes exactly at critical points.
    pub fn gradient_loop(&self, eta: &LoopFunction) -> LoopFunction {
        let m = eta.dot(eta);
        combine(&[(1.0, &neg_second_derivative(eta)), (-m, eta)])
    }

    /// `-ḧ - (∫η²) h - 2(∫ηh) η`.
    pub fn hessian_action(&self, eta: &LoopFunction, h: &LoopFunction) -> LoopFunction {
        let m = eta.dot(eta);
        let c = eta.dot(h);
        combine(&[(1.0, &neg_second_derivative(h)), (-m, h), (-2.0 * c, eta)])
    }
}

impl Functional for PsiQuadratic {
    fn dim(&self) -> usize {
        2 * self.l_eta
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.psi(&LoopFunction::from_coords(x)))
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.gradient_loop(&LoopFunction::from_coords(x)).to_coords())
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let eta = LoopFunction::from_coords(x);
        columns(self.dim(), |e| {
            Ok(self.hessian_action(&eta, &LoopFunction::from_coords(e)).to_coords())
        })
    }

    fn representative(&self, x: &DVector<f64>) -> Result<Representative> {
        Ok(Representative::Loop(LoopFunction::from_coords(x)))
    }
}

/// `Ψ(η) = ½∫η̇² - ¼∫η⁴ - (3/8π)(∫η²)²` plus `R_n(v) = (1/8π)∫_Ω b (H_n v)⁴`,
/// with `b = a_3/<a_3> - 1` and `v` the V-field of `η`.
#[derive(Debug, Clone)]
pub struct PsiCubic {
    pub n: usize,
    pub l_eta: usize,
    pub b: TrigPolynomial,
}

impl PsiCubic {
    pub fn new(n: usize, l_eta: usize, a3: &TrigPolynomial) -> Result<Self> {
        let mean = a3.mean();
        if mean.abs() < 1e-14 * a3.max_abs().max(1.0) {
            return Err(Error::MeanValueHypothesis);
        }
        let b = a3.scaled(1.0 / mean).add(&TrigPolynomial::constant(-1.0));
        Ok(Self { n, l_eta, b })
    }

    fn frame(&self) -> usize {
        self.n * self.l_eta
    }

    fn hv(&self, eta: &LoopFunction) -> Result<SpectralField> {
        let f = self.frame();
        embed_hn(&eta.to_v_field(f, f)?, self.n)
    }

    /// Pulls a V-field gradient back to loop coordinates through `η ↦ H_n v`.
    fn pullback(&self, w: &SpectralField) -> LoopFunction {
        let n = self.n as i64;
        LoopFunction {
            coeffs: (1..=self.l_eta as i64)
                .map(|l| w.get(n * l, (n * l) as usize) * Complex64::new(0.0, -PI))
                .collect(),
        }
    }

    pub fn psi(&self, eta: &LoopFunction) -> f64 {
        let d = eta.derivative();
        let m = eta.dot(eta);
        let (quartic, _) = loop_power(eta, eta, 0.0);
        0.5 * d.dot(&d) - 0.25 * quartic - 3.0 / (8.0 * PI) * m * m
    }

    pub fn psi_gradient(&self, eta: &LoopFunction) -> LoopFunction {
        let m = eta.dot(eta);
        let (_, cube) = loop_power(eta, eta, 1.0);
        combine(&[
            (1.0, &neg_second_derivative(eta)),
            (-1.0, &cube),
            (-3.0 / (2.0 * PI) * m, eta),
        ])
    }

    pub fn psi_hessian_action(&self, eta: &LoopFunction, h: &LoopFunction) -> LoopFunction {
        let m = eta.dot(eta);
        let c = eta.dot(h);
        let (_, sq) = loop_power(eta, h, 3.0);
        combine(&[
            (1.0, &neg_second_derivative(h)),
            (-1.0, &sq),
            (-3.0 / (2.0 * PI) * m, h),
            (-3.0 / PI * c, eta),
        ])
    }

    pub fn rn(&self, eta: &LoopFunction) -> Result<f64> {
        let v = self.hv(eta)?;
        Ok(power_terms(&self.b, 1.0 / (8.0 * PI), &v, 4, None, false).0)
    }

    pub fn rn_gradient(&self, eta: &LoopFunction) -> Result<LoopFunction> {
        let v = self.hv(eta)?;
        let (_, g) = power_terms(&self.b, 1.0 / (2.0 * PI), &v, 3, None, true);
        Ok(self.pullback(&g.expect("galerkin requested")))
    }

    pub fn rn_hessian_action(&self, eta: &LoopFunction, h: &LoopFunction) -> Result<LoopFunction> {
        let v = self.hv(eta)?;
        let vh = self.hv(h)?;
        let (_, g) = power_terms(&self.b, 3.0 / (2.0 * PI), &v, 2, Some(&vh), true);
        Ok(self.pullback(&g.expect("galerkin requested")))
    }
}

impl Functional for PsiCubic {
    fn dim(&self) -> usize {
        2 * self.l_eta
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let eta = LoopFunction::from_coords(x);
        Ok(self.psi(&eta) + self.rn(&eta)?)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let eta = LoopFunction::from_coords(x);
        Ok(self.psi_gradient(&eta).to_coords() + self.rn_gradient(&eta)?.to_coords())
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let eta = LoopFunction::from_coords(x);
        columns(self.dim(), |e| {
            let h = LoopFunction::from_coords(e);
            Ok(self.psi_hessian_action(&eta, &h).to_coords() + self.rn_hessian_action(&eta, &h)?.to_coords())
        })
    }

    fn representative(&self, x: &DVector<f64>) -> Result<Representative> {
        Ok(Representative::Loop(LoopFunction::from_coords(x)))
    }
}

/// `Φ0(v) = ||v||²_{H¹}/2 + (a_2²/2) ∫_Ω v² L^{-1} Π_W(v²)` on `V`.
pub fn phi0_quadratic(v: &SpectralField, a2: f64) -> Result<f64> {
    let lv = v.support_l();
    let j_out = (16 * lv).max(64);
    let frame = v.resized(2 * lv.max(1), j_out);
    let (_, sq) = power_terms(&TrigPolynomial::constant(1.0), 1.0, &frame, 2, None, true);
    let sq = sq.expect("galerkin requested").project(Subspace::W);
    let inv = sq.apply_l_inverse_w()?;
    Ok(0.5 * v.neg_laplacian().l2_dot(v) + 0.5 * a2 * a2 * sq.l2_dot(&inv))
}
