//! Real orthonormal coordinates on finite-dimensional pieces of `V` and of
//! the loop space `E` of zero-mean `2π`-periodic functions.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::spectral::{fft_size, SpectralField};

/// Coordinates `(a_l, b_l)_{l=1..n}` of `Σ (a_l cos lt + b_l sin lt) (√2/π) sin lx`,
/// an `L²(Ω)`-orthonormal basis of the V-modes with `1 <= l <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VCoords {
    pub n: usize,
    pub l_max: usize,
    pub j_max: usize,
}

impl VCoords {
    pub fn new(n: usize, l_max: usize, j_max: usize) -> Self {
        assert!(n <= l_max && n <= j_max);
        Self { n, l_max, j_max }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn to_field(&self, x: &DVector<f64>) -> SpectralField {
        let mut u = SpectralField::zeros(self.l_max, self.j_max);
        let s = SQRT_2 / PI / 2.0;
        for l in 1..=self.n {
            let (a, b) = (x[2 * l - 2], x[2 * l - 1]);
            u.set(l as i64, l, Complex64::new(a * s, -b * s));
        }
        u
    }

    pub fn from_field(&self, u: &SpectralField) -> DVector<f64> {
        let s = SQRT_2 * PI;
        DVector::from_fn(self.dim(), |i, _| {
            let c = u.get((i / 2 + 1) as i64, i / 2 + 1);
            if i % 2 == 0 {
                s * c.re
            } else {
                -s * c.im
            }
        })
    }
}

/// Coordinates of the time derivative for any `(a_l, b_l)` layout.
pub fn tangent_pairs(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let l = (i / 2 + 1) as f64;
        if i % 2 == 0 {
            l * x[i + 1]
        } else {
            -l * x[i - 1]
        }
    })
}

/// Real zero-mean `2π`-periodic `η(t) = Σ_{l≠0} η_l e^{ilt}`, `|l| <= L_η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopFunction {
    /// `η_l` for `l = 1..=L_η`; negative modes follow by conjugation.
    pub coeffs: Vec<Complex64>,
}

impl LoopFunction {
    pub fn zeros(l_eta: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); l_eta],
        }
    }

    pub fn l_eta(&self) -> usize {
        self.coeffs.len()
    }

    pub fn get(&self, l: i64) -> Complex64 {
        match l {
            0 => Complex64::new(0.0, 0.0),
            l if l.unsigned_abs() as usize > self.coeffs.len() => Complex64::new(0.0, 0.0),
            l if l > 0 => self.coeffs[l as usize - 1],
            l => self.coeffs[(-l) as usize - 1].conj(),
        }
    }

    /// `η = a cos(lt) + b sin(lt)`.
    pub fn mode(l_eta: usize, l: usize, a: f64, b: f64) -> Self {
        let mut e = Self::zeros(l_eta);
        e.coeffs[l - 1] = Complex64::new(a / 2.0, -b / 2.0);
        e
    }

    /// From `L²(T)`-orthonormal coordinates `(a_l, b_l)` of `(a cos lt + b sin lt)/√π`.
    pub fn from_coords(x: &DVector<f64>) -> Self {
        let s = 1.0 / (2.0 * PI.sqrt());
        Self {
            coeffs: (0..x.len() / 2)
                .map(|l| Complex64::new(x[2 * l] * s, -x[2 * l + 1] * s))
                .collect(),
        }
    }

    pub fn to_coords(&self) -> DVector<f64> {
        let s = 2.0 * PI.sqrt();
        DVector::from_fn(2 * self.l_eta(), |i, _| {
            let c = self.coeffs[i / 2];
            if i % 2 == 0 {
                s * c.re
            } else {
                -s * c.im
            }
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| 2.0 * (c * Complex64::from_polar(1.0, (i + 1) as f64 * t)).re)
            .sum()
    }

    /// Samples at `t_a = 2πa/nt`.
    pub fn samples(&self, nt: usize) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); nt];
        for (i, c) in self.coeffs.iter().enumerate() {
            let l = i + 1;
            assert!(2 * l < nt, "grid does not resolve loop");
            buf[l] = *c;
            buf[nt - l] = c.conj();
        }
        crate::spectral::fft1(&mut buf, true);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Zero-mean projection of sampled values onto modes `1..=l_eta`.
    pub fn from_samples(values: &[f64], l_eta: usize) -> Self {
        let nt = values.len();
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        crate::spectral::fft1(&mut buf, false);
        Self {
            coeffs: (1..=l_eta).map(|l| buf[l] / nt as f64).collect(),
        }
    }

    /// `∫_0^{2π} η ζ dt`.
    pub fn dot(&self, other: &Self) -> f64 {
        let n = self.l_eta().min(other.l_eta());
        4.0 * PI * (0..n).map(|i| (self.coeffs[i] * other.coeffs[i].conj()).re).sum::<f64>()
    }

    pub fn derivative(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, (i + 1) as f64))
                .collect(),
        }
    }

    pub fn time_shift(&self, theta: f64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::from_polar(1.0, (i + 1) as f64 * theta))
                .collect(),
        }
    }

    /// The V-field `η(t + x) - η(t - x)`: `c[l, |l|] = 2i sign(l) η_l`.
    pub fn to_v_field(&self, l_max: usize, j_max: usize) -> Result<SpectralField> {
        let need = self.l_eta();
        if need > l_max.min(j_max) {
            return Err(Error::TruncationOverflow {
                required: need,
                available: l_max.min(j_max),
            });
        }
        let mut u = SpectralField::zeros(l_max, j_max);
        for (i, c) in self.coeffs.iter().enumerate() {
            u.set((i + 1) as i64, i + 1, c * Complex64::new(0.0, 2.0));
        }
        Ok(u)
    }

    /// Inverse of [`LoopFunction::to_v_field`] on the V-part of `u`.
    pub fn from_v_field(u: &SpectralField, l_eta: usize) -> Self {
        Self {
            coeffs: (1..=l_eta)
                .map(|l| u.get(l as i64, l) / Complex64::new(0.0, 2.0))
                .collect(),
        }
    }

    pub fn grid_size(&self, degree: usize) -> usize {
        fft_size(degree * self.l_eta() + self.l_eta() + 2)
    }
}
