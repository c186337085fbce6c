//! Tensor grids on `[0, 2π) × [0, 2π)` for pseudo-spectral products.
//!
//! Sine series are extended to full trigonometric polynomials in `x`, so the
//! grid analysis gives exact exponential coefficients once the product degree
//! is resolved. Sine-Galerkin coefficients on `(0, π)` then follow from exact
//! integrals of `e^{imx} sin(jx)`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use super::trig::{exp_integral, exp_sine_integral};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Smallest power of two `>= n`.
pub fn fft_size(n: usize) -> usize {
    n.max(2).next_power_of_two()
}

fn fft2(data: &mut [Complex64], nt: usize, nx: usize, inverse: bool) {
    let fx = plan(nx, inverse);
    fx.process(data);
    let ft = plan(nt, inverse);
    let mut col = vec![Complex64::new(0.0, 0.0); nt];
    for b in 0..nx {
        for a in 0..nt {
            col[a] = data[a * nx + b];
        }
        ft.process(&mut col);
        for a in 0..nt {
            data[a * nx + b] = col[a];
        }
    }
}

/// Real samples `g(t_a, x_b)`, `t_a = 2πa/nt`, `x_b = 2πb/nx`, row-major in `a`.
#[derive(Debug, Clone)]
pub struct GridValues {
    pub nt: usize,
    pub nx: usize,
    pub values: Vec<f64>,
}

/// Normalized exponential coefficients `G[l, m]` of a grid function.
#[derive(Debug, Clone)]
pub struct GridSpectrum {
    pub nt: usize,
    pub nx: usize,
    coeffs: Vec<Complex64>,
}

pub fn x_nodes(nx: usize) -> Vec<f64> {
    (0..nx)
        .map(|b| 2.0 * std::f64::consts::PI * b as f64 / nx as f64)
        .collect()
}

/// Synthesizes `u` on an `nt × nx` grid. Requires `nt > 2L` and `nx > 2J`.
pub fn synthesize(u: &SpectralField, nt: usize, nx: usize) -> GridValues {
    GridValues {
        nt,
        nx,
        values: synthesize_complex(u, nt, nx).into_iter().map(|z| z.re).collect(),
    }
}

/// Largest imaginary part of the synthesized field relative to its largest value.
pub fn imaginary_defect(u: &SpectralField, nt: usize, nx: usize) -> f64 {
    let z = synthesize_complex(u, nt, nx);
    let re = z.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
    let im = z.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    im / re.max(f64::MIN_POSITIVE)
}

fn synthesize_complex(u: &SpectralField, nt: usize, nx: usize) -> Vec<Complex64> {
    assert!(nt > 2 * u.l_max() && nx > 2 * u.j_max(), "grid does not resolve field");
    let mut data = vec![Complex64::new(0.0, 0.0); nt * nx];
    let half_i = Complex64::new(0.0, -0.5);
    for (l, j, c) in u.iter() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let a = l.rem_euclid(nt as i64) as usize;
        // sin(jx) = (e^{ijx} - e^{-ijx}) / 2i
        data[a * nx + j] += c * half_i;
        data[a * nx + (nx - j)] -= c * half_i;
    }
    fft2(&mut data, nt, nx, true);
    data
}

impl GridValues {
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            nt: self.nt,
            nx: self.nx,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn analyze(&self) -> GridSpectrum {
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut data, self.nt, self.nx, false);
        let scale = 1.0 / (self.nt * self.nx) as f64;
        data.iter_mut().for_each(|z| *z *= scale);
        GridSpectrum {
            nt: self.nt,
            nx: self.nx,
            coeffs: data,
        }
    }
}

impl GridSpectrum {
    pub fn max_l(&self) -> i64 {
        (self.nt / 2) as i64 - 1
    }

    pub fn max_m(&self) -> i64 {
        (self.nx / 2) as i64 - 1
    }

    #[inline]
    pub fn get(&self, l: i64, m: i64) -> Complex64 {
        let a = l.rem_euclid(self.nt as i64) as usize;
        let b = m.rem_euclid(self.nx as i64) as usize;
        self.coeffs[a * self.nx + b]
    }

    /// Exponential `x`-coefficients of the time mode `q`, indexed `m + max_m`.
    pub fn time_mode(&self, q: i64) -> Vec<Complex64> {
        let mm = self.max_m();
        (-mm..=mm).map(|m| self.get(q, m)).collect()
    }

    /// Sine-Galerkin coefficients `(2/π) ∫_0^π g_l(x) sin(jx) dx` for `|l| <= L`, `j <= J`.
    pub fn galerkin(&self, l_max: usize, j_max: usize) -> SpectralField {
        assert!((l_max as i64) <= self.max_l(), "grid does not resolve requested time modes");
        let mm = self.max_m();
        let table: Vec<Vec<Complex64>> = (1..=j_max as i64)
            .map(|j| (-mm..=mm).map(|m| exp_sine_integral(m, j)).collect())
            .collect();
        let mut out = SpectralField::zeros(l_max, j_max);
        let scale = 2.0 / std::f64::consts::PI;
        for l in -(l_max as i64)..=l_max as i64 {
            let row = self.time_mode(l);
            for (jj, tab) in table.iter().enumerate() {
                let s: Complex64 = row.iter().zip(tab).map(|(g, t)| g * t).sum();
                out.set_raw(l, jj + 1, s * scale);
            }
        }
        out
    }

    /// `∫_0^{2π} ∫_0^π g dx dt`.
    pub fn integral(&self) -> f64 {
        let mm = self.max_m();
        let s: Complex64 = (-mm..=mm).map(|m| self.get(0, m) * exp_integral(m)).sum();
        2.0 * std::f64::consts::PI * s.re
    }
}

/// In-place unnormalized 1D transform.
pub fn fft1(data: &mut [Complex64], inverse: bool) {
    plan(data.len(), inverse).process(data);
}
