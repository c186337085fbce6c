use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::{fft_size, synthesize, x_nodes, GridSpectrum, GridValues};
use super::trig::TrigPolynomial;
use crate::error::{Error, Result};

/// `f(x, u) = Σ_{k >= p} a_k(x) u^k`, together with the sign `s*` of the rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub p: usize,
    pub terms: BTreeMap<usize, TrigPolynomial>,
    pub s_star: f64,
    /// Guard on `δ · max|u|`; `None` for polynomial nonlinearities.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Exponent `e` in `ε = s* δ^e`; `p - 1` unless set.
    #[serde(default)]
    pub eps_exponent: Option<u32>,
}

impl NonlinearitySpec {
    pub fn new(p: usize, terms: BTreeMap<usize, TrigPolynomial>, s_star: f64) -> Result<Self> {
        let spec = Self {
            p,
            terms,
            s_star,
            radius: None,
            eps_exponent: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `f = a u^p` with constant `a`.
    pub fn monomial(p: usize, a: f64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(p, TrigPolynomial::constant(a));
        Self {
            p,
            terms,
            s_star: 1.0,
            radius: None,
            eps_exponent: None,
        }
    }

    pub fn with_term(mut self, k: usize, a: TrigPolynomial) -> Self {
        self.terms.insert(k, a);
        self
    }

    pub fn with_sign(mut self, s_star: f64) -> Self {
        self.s_star = s_star;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("leading power must be >= 2, got {}", self.p),
            });
        }
        if self.s_star != 1.0 && self.s_star != -1.0 {
            return Err(Error::InvalidParameter {
                name: "s_star",
                reason: "must be +1 or -1".into(),
            });
        }
        match self.terms.get(&self.p) {
            Some(a) if !a.is_zero() => {}
            _ => {
                return Err(Error::InvalidParameter {
                    name: "terms",
                    reason: format!("a_{} must be present and nonzero", self.p),
                })
            }
        }
        if let Some(k) = self.terms.keys().find(|&&k| k < self.p) {
            return Err(Error::InvalidParameter {
                name: "terms",
                reason: format!("power {k} is below p = {}", self.p),
            });
        }
        Ok(())
    }

    pub fn leading(&self) -> &TrigPolynomial {
        &self.terms[&self.p]
    }

    pub fn max_power(&self) -> usize {
        *self.terms.keys().next_back().unwrap_or(&self.p)
    }

    pub fn max_x_degree(&self) -> usize {
        self.terms.values().map(|a| a.degree()).max().unwrap_or(0)
    }

    pub fn with_eps_exponent(mut self, e: u32) -> Self {
        self.eps_exponent = Some(e);
        self
    }

    /// `ε = s* δ^{p-1}`, or `s* δ^e` with an explicit exponent.
    pub fn epsilon(&self, delta: f64) -> f64 {
        let e = self.eps_exponent.map_or(self.p as i32 - 1, |e| e as i32);
        self.s_star * delta.powi(e)
    }

    /// `ω = √(1 + 2ε)`.
    pub fn omega(&self, delta: f64) -> f64 {
        (1.0 + 2.0 * self.epsilon(delta)).sqrt()
    }

    /// Keeps only the leading term (the `δ = 0` limit of `g`).
    pub fn leading_only(&self) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(self.p, self.leading().clone());
        Self {
            terms,
            ..self.clone()
        }
    }

    fn check_radius(&self, delta: f64, ugrid: &GridValues) -> Result<()> {
        if let Some(radius) = self.radius {
            let amplitude = delta * ugrid.max_abs();
            if amplitude >= radius {
                return Err(Error::OutsideAnalyticityRadius { amplitude, radius });
            }
        }
        Ok(())
    }

    /// Pointwise `∂_u^order g(δ, x, u)` on the grid.
    pub fn pointwise(&self, delta: f64, ugrid: &GridValues, order: usize) -> GridValues {
        let xs = x_nodes(ugrid.nx);
        let terms: Vec<(usize, f64, Vec<f64>)> = self
            .terms
            .iter()
            .filter(|(&k, _)| k >= order)
            .map(|(&k, a)| {
                let falling: f64 = (0..order).map(|i| (k - i) as f64).product();
                let c = self.s_star * falling * delta.powi((k - self.p) as i32);
                (k - order, c, xs.iter().map(|&x| a.eval(x)).collect())
            })
            .filter(|(_, c, _)| *c != 0.0)
            .collect();
        let mut values = vec![0.0; ugrid.values.len()];
        for (i, (out, &u)) in values.iter_mut().zip(&ugrid.values).enumerate() {
            let b = i % ugrid.nx;
            *out = terms.iter().map(|(e, c, a)| c * a[b] * u.powi(*e as i32)).sum();
        }
        GridValues {
            nt: ugrid.nt,
            nx: ugrid.nx,
            values,
        }
    }

    /// Grid sizes resolving `∂_u^order g(u)` exactly for time modes `|l| <= l_out`.
    pub fn grid_for(&self, u: &SpectralField, order: usize, l_out: usize, oversample: usize) -> (usize, usize) {
        let k = self.max_power().saturating_sub(order).max(1);
        let dt = k * u.support_l();
        let dx = k * u.j_max() + self.max_x_degree();
        let nt = fft_size((dt + l_out + 1).max(oversample * (l_out + 1)).max(2 * u.l_max() + 1));
        let nx = fft_size((2 * dx + 2).max(2 * u.j_max() + 2));
        (nt, nx)
    }

    /// Exponential spectrum of `∂_u^order g(δ, x, u)` resolving time modes `|q| <= q_max`.
    pub fn spectrum(&self, delta: f64, u: &SpectralField, order: usize, q_max: usize) -> Result<GridSpectrum> {
        let (nt, nx) = self.grid_for(u, order, q_max, 2);
        let ugrid = synthesize(u, nt, nx);
        self.check_radius(delta, &ugrid)?;
        Ok(self.pointwise(delta, &ugrid, order).analyze())
    }
}

/// Sine × Fourier Galerkin coefficients of `g(δ, x, u)` on the frame of `u`.
pub fn eval_nonlinearity(
    spec: &NonlinearitySpec,
    delta: f64,
    u: &SpectralField,
    oversample: usize,
) -> Result<SpectralField> {
    eval_nonlinearity_to(spec, delta, u, u.l_max(), u.j_max(), oversample)
}

pub fn eval_nonlinearity_to(
    spec: &NonlinearitySpec,
    delta: f64,
    u: &SpectralField,
    l_out: usize,
    j_out: usize,
    oversample: usize,
) -> Result<SpectralField> {
    let (nt, nx) = spec.grid_for(u, 0, l_out, oversample.max(2));
    let ugrid = synthesize(u, nt, nx);
    spec.check_radius(delta, &ugrid)?;
    Ok(spec.pointwise(delta, &ugrid, 0).analyze().galerkin(l_out, j_out))
}
