use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `u(t, x) = Σ c[l, j] e^{ilt} sin(jx)`, `l ∈ [-L, L]`, `j ∈ [1, J]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    l_max: usize,
    j_max: usize,
    coeffs: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    V,
    W,
    /// V-modes with `|l| <= n`.
    V1(usize),
    /// V-modes with `|l| > n`.
    V2(usize),
    /// W-modes with `|l| <= l_n`.
    Pn(usize),
    /// W-modes with `|l| > l_n`.
    PnPerp(usize),
}

impl Subspace {
    pub fn contains(self, l: i64, j: usize) -> bool {
        let a = l.unsigned_abs() as usize;
        let in_v = a == j;
        match self {
            Subspace::V => in_v,
            Subspace::W => !in_v,
            Subspace::V1(n) => in_v && a <= n,
            Subspace::V2(n) => in_v && a > n,
            Subspace::Pn(ln) => !in_v && a <= ln,
            Subspace::PnPerp(ln) => !in_v && a > ln,
        }
    }
}

impl SpectralField {
    pub fn zeros(l_max: usize, j_max: usize) -> Self {
        assert!(j_max >= 1, "J must be at least 1");
        Self {
            l_max,
            j_max,
            coeffs: vec![Complex64::new(0.0, 0.0); (2 * l_max + 1) * j_max],
        }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    #[inline]
    fn idx(&self, l: i64, j: usize) -> usize {
        debug_assert!(l.unsigned_abs() as usize <= self.l_max && (1..=self.j_max).contains(&j));
        (l + self.l_max as i64) as usize * self.j_max + (j - 1)
    }

    #[inline]
    pub fn get(&self, l: i64, j: usize) -> Complex64 {
        if l.unsigned_abs() as usize > self.l_max || j == 0 || j > self.j_max {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[self.idx(l, j)]
    }

    /// Sets `c[l, j]` and its mirror `c[-l, j] = conj(c[l, j])`.
    pub fn set(&mut self, l: i64, j: usize, value: Complex64) {
        let i = self.idx(l, j);
        let m = self.idx(-l, j);
        if l == 0 {
            self.coeffs[i] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[i] = value;
            self.coeffs[m] = value.conj();
        }
    }

    /// Raw write without enforcing the reality mirror.
    #[inline]
    pub fn set_raw(&mut self, l: i64, j: usize, value: Complex64) {
        let i = self.idx(l, j);
        self.coeffs[i] = value;
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Iterates `(l, j, c)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, usize, Complex64)> + '_ {
        let lm = self.l_max as i64;
        let jm = self.j_max;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| ((i / jm) as i64 - lm, i % jm + 1, *c))
    }

    pub fn map_indexed(&self, f: impl Fn(i64, usize, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        let lm = self.l_max as i64;
        let jm = self.j_max;
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c = f((i / jm) as i64 - lm, i % jm + 1, *c);
        }
        out
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        self.iter()
            .all(|(l, j, c)| (c - self.get(-l, j).conj()).norm() <= tol * scale)
    }

    /// Symmetrizes the reality condition: `c[l] ← (c[l] + conj c[-l]) / 2`.
    pub fn enforce_reality(&mut self) {
        let snapshot = self.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            let l = (i / self.j_max) as i64 - self.l_max as i64;
            let j = i % self.j_max + 1;
            *c = 0.5 * (snapshot.get(l, j) + snapshot.get(-l, j).conj());
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn project(&self, sub: Subspace) -> Self {
        self.map_indexed(|l, j, c| if sub.contains(l, j) { c } else { Complex64::new(0.0, 0.0) })
    }

    pub fn is_supported_on(&self, sub: Subspace) -> bool {
        self.iter().all(|(l, j, c)| sub.contains(l, j) || c == Complex64::new(0.0, 0.0))
    }

    fn first_outside(&self, sub: Subspace) -> Option<(i64, usize)> {
        self.iter()
            .find(|&(l, j, c)| !sub.contains(l, j) && c != Complex64::new(0.0, 0.0))
            .map(|(l, j, _)| (l, j))
    }

    /// Copies into a frame of a different size, truncating or zero-padding.
    pub fn resized(&self, l_max: usize, j_max: usize) -> Self {
        let mut out = Self::zeros(l_max, j_max);
        let lm = l_max.min(self.l_max) as i64;
        for l in -lm..=lm {
            for j in 1..=j_max.min(self.j_max) {
                out.set_raw(l, j, self.get(l, j));
            }
        }
        out
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!((self.l_max, self.j_max), (other.l_max, other.j_max));
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    /// `L_ω = -ω²∂_tt + ∂_xx`: multiplies `c[l, j]` by `ω² l² - j²`.
    pub fn apply_l_omega(&self, omega: f64) -> Self {
        let w2 = omega * omega;
        self.map_indexed(|l, j, c| c * (w2 * (l * l) as f64 - (j * j) as f64))
    }

    /// `(-Δ)^{-1}` on `V`: `c[l, |l|] / (2 l²)`.
    pub fn inv_laplacian_v(&self) -> Result<Self> {
        if let Some((l, j)) = self.first_outside(Subspace::V) {
            return Err(Error::NotInV { l, j });
        }
        Ok(self.map_indexed(|l, _, c| if l == 0 { c } else { c / (2 * l * l) as f64 }))
    }

    /// `-Δ = -∂_tt - ∂_xx`: multiplies by `l² + j²`.
    pub fn neg_laplacian(&self) -> Self {
        self.map_indexed(|l, j, c| c * ((l * l) as f64 + (j * j) as f64))
    }

    /// `L^{-1}` on `W` at `ω = 1`: `c[l, j] / (l² - j²)`.
    pub fn apply_l_inverse_w(&self) -> Result<Self> {
        if let Some((l, j)) = self.first_outside(Subspace::W) {
            return Err(Error::NotInW { l, j });
        }
        Ok(self.map_indexed(|l, j, c| {
            let d = (l * l) as f64 - (j * j) as f64;
            if d == 0.0 {
                c
            } else {
                c / d
            }
        }))
    }

    /// Time derivative `∂_t`.
    pub fn dt(&self) -> Self {
        self.map_indexed(|l, _, c| c * Complex64::new(0.0, l as f64))
    }

    /// Time translation `u(t + θ, x)`.
    pub fn time_shift(&self, theta: f64) -> Self {
        self.map_indexed(|l, _, c| c * Complex64::from_polar(1.0, l as f64 * theta))
    }

    /// `L²(Ω)` pairing `∫_Ω u v` for real fields, `Ω = T × (0, π)`.
    pub fn l2_dot(&self, other: &Self) -> f64 {
        assert_eq!((self.l_max, self.j_max), (other.l_max, other.j_max));
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        std::f64::consts::PI.powi(2) * s
    }

    /// Largest `|l|` carrying a nonzero coefficient.
    pub fn support_l(&self) -> usize {
        self.iter()
            .filter(|(_, _, c)| c.norm() > 0.0)
            .map(|(l, _, _)| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Row-major `(l, j)` real/imaginary pairs.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.coeffs.iter().map(|c| [c.re, c.im]).collect()
    }

    pub fn from_pairs(l_max: usize, j_max: usize, pairs: &[[f64; 2]]) -> Result<Self> {
        if pairs.len() != (2 * l_max + 1) * j_max {
            return Err(Error::InvalidParameter {
                name: "coefficients",
                reason: format!("expected {} entries, got {}", (2 * l_max + 1) * j_max, pairs.len()),
            });
        }
        Ok(Self {
            l_max,
            j_max,
            coeffs: pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
        })
    }
}
