use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `a(x) = c0 + Σ_m cos_coeffs[m-1] cos(mx) + Σ_m sin_coeffs[m-1] sin(mx)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub c0: f64,
    #[serde(default, rename = "cos")]
    pub cos_coeffs: Vec<f64>,
    #[serde(default, rename = "sin")]
    pub sin_coeffs: Vec<f64>,
}

impl TrigPolynomial {
    pub fn constant(c0: f64) -> Self {
        Self {
            c0,
            ..Default::default()
        }
    }

    pub fn new(c0: f64, cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Self {
        Self {
            c0,
            cos_coeffs,
            sin_coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        let last = |v: &[f64]| v.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
        last(&self.cos_coeffs).max(last(&self.sin_coeffs))
    }

    pub fn is_zero(&self) -> bool {
        self.c0 == 0.0 && self.degree() == 0
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut s = self.c0;
        for (m, a) in self.cos_coeffs.iter().enumerate() {
            s += a * ((m + 1) as f64 * x).cos();
        }
        for (m, b) in self.sin_coeffs.iter().enumerate() {
            s += b * ((m + 1) as f64 * x).sin();
        }
        s
    }

    /// `max_{x ∈ [0, π]} |a(x)|` sampled on a grid fine relative to the degree.
    pub fn max_abs(&self) -> f64 {
        let n = 64 * (self.degree() + 1) + 1;
        (0..n)
            .map(|i| self.eval(std::f64::consts::PI * i as f64 / (n - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Mean over `(0, π)`: `(1/π) ∫_0^π a`.
    pub fn mean(&self) -> f64 {
        let mut s = self.c0;
        for (m, b) in self.sin_coeffs.iter().enumerate() {
            let m = (m + 1) as f64;
            if (m as usize) % 2 == 1 {
                s += b * 2.0 / (m * std::f64::consts::PI);
            }
        }
        s
    }

    /// Complex coefficients `A[m]`, `m ∈ [-d, d]`, with `a(x) = Σ A[m] e^{imx}`;
    /// entry `m` is stored at index `m + d`.
    pub fn exp_coeffs(&self) -> Vec<Complex64> {
        let d = self.degree();
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * d + 1];
        out[d] = Complex64::new(self.c0, 0.0);
        for m in 1..=d {
            let a = self.cos_coeffs.get(m - 1).copied().unwrap_or(0.0);
            let b = self.sin_coeffs.get(m - 1).copied().unwrap_or(0.0);
            // a cos + b sin = (a - ib)/2 e^{imx} + (a + ib)/2 e^{-imx}
            out[d + m] = Complex64::new(a / 2.0, -b / 2.0);
            out[d - m] = Complex64::new(a / 2.0, b / 2.0);
        }
        out
    }

    /// Inverse of [`TrigPolynomial::exp_coeffs`] for the coefficients of a real function.
    pub fn from_exp_coeffs(coeffs: &[Complex64]) -> Self {
        let d = (coeffs.len() - 1) / 2;
        Self {
            c0: coeffs[d].re,
            cos_coeffs: (1..=d).map(|m| coeffs[d + m].re + coeffs[d - m].re).collect(),
            sin_coeffs: (1..=d).map(|m| coeffs[d - m].im - coeffs[d + m].im).collect(),
        }
    }

    /// Reflection `x ↦ π - x`.
    pub fn reflect(&self) -> Self {
        let sign = |m: usize| if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        Self {
            c0: self.c0,
            // cos(m(π - x)) = (-1)^m cos(mx);  sin(m(π - x)) = -(-1)^m sin(mx)
            cos_coeffs: self
                .cos_coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| a * sign(i + 1))
                .collect(),
            sin_coeffs: self
                .sin_coeffs
                .iter()
                .enumerate()
                .map(|(i, b)| -b * sign(i + 1))
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            c0: self.c0 * s,
            cos_coeffs: self.cos_coeffs.iter().map(|a| a * s).collect(),
            sin_coeffs: self.sin_coeffs.iter().map(|b| b * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let merge = |a: &[f64], b: &[f64]| {
            (0..a.len().max(b.len()))
                .map(|i| a.get(i).unwrap_or(&0.0) + b.get(i).unwrap_or(&0.0))
                .collect()
        };
        Self {
            c0: self.c0 + other.c0,
            cos_coeffs: merge(&self.cos_coeffs, &other.cos_coeffs),
            sin_coeffs: merge(&self.sin_coeffs, &other.sin_coeffs),
        }
    }
}

/// `∫_0^π e^{iqx} dx`.
#[inline]
pub fn exp_integral(q: i64) -> Complex64 {
    if q == 0 {
        Complex64::new(std::f64::consts::PI, 0.0)
    } else if q % 2 == 0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, 2.0 / q as f64)
    }
}

/// `∫_0^π e^{imx} sin(jx) dx`.
#[inline]
pub fn exp_sine_integral(m: i64, j: i64) -> Complex64 {
    (exp_integral(m + j) - exp_integral(m - j)) / Complex64::new(0.0, 2.0)
}

/// Table of `(2/π) ∫_0^π a(x) sin(ix) sin(jx) dx` for `i, j ∈ [1, j_max]`, where
/// `a = Σ_m coeffs[m + d] e^{imx}`, `d = (coeffs.len() - 1) / 2`.
pub fn sine_product_matrix(coeffs: &[Complex64], j_max: usize) -> Vec<Vec<Complex64>> {
    let t = sine_shift_table(coeffs, j_max);
    let jm = j_max as i64;
    let tv = |d: i64| t[(d + 2 * jm) as usize];
    let mut out = vec![vec![Complex64::new(0.0, 0.0); j_max]; j_max];
    for i in 1..=jm {
        for j in 1..=jm {
            out[(i - 1) as usize][(j - 1) as usize] =
                (tv(i - j) + tv(j - i) - tv(i + j) - tv(-i - j)) / (2.0 * std::f64::consts::PI);
        }
    }
    out
}

/// `T(d) = Σ_m A[m] ∫_0^π e^{i(m+d)x} dx` for `d ∈ [-2J, 2J]` (index `d + 2J`).
pub fn sine_shift_table(coeffs: &[Complex64], j_max: usize) -> Vec<Complex64> {
    let d0 = ((coeffs.len() - 1) / 2) as i64;
    let jm = 2 * j_max as i64;
    (-jm..=jm)
        .map(|d| {
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(i, a)| a * exp_integral(i as i64 - d0 + d))
                .sum()
        })
        .collect()
}
