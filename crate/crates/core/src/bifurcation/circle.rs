use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::functional::{Functional, Representative};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleOptions {
    pub newton_tol: f64,
    pub gap_threshold: f64,
    pub max_descent: usize,
    pub max_newton: usize,
    /// Relative gradient size at which descent hands over to Newton.
    pub handover: f64,
}

impl Default for CircleOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-11,
            gap_threshold: 1e-3,
            max_descent: 400,
            max_newton: 40,
            handover: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCircle {
    pub representative: Representative,
    pub coords: Vec<f64>,
    pub value: f64,
    pub kernel_dim_mod_translation: usize,
    pub second_eigenvalue_gap: f64,
    pub gradient_norm: f64,
    pub seed_index: usize,
}

/// Time shift `θ` in `(a_l, b_l)` pair coordinates.
pub fn shift_pairs(x: &DVector<f64>, theta: f64) -> DVector<f64> {
    let mut y = x.clone();
    for l in 0..x.len() / 2 {
        let (s, c) = (((l + 1) as f64) * theta).sin_cos();
        let (a, b) = (x[2 * l], x[2 * l + 1]);
        y[2 * l] = a * c + b * s;
        y[2 * l + 1] = b * c - a * s;
    }
    y
}

/// Minimizes `|shift(x, θ) - target|` over `θ`; returns `(θ, distance)`.
pub fn align_phase(x: &DVector<f64>, target: &DVector<f64>) -> (f64, f64) {
    let dist = |t: f64| (shift_pairs(x, t) - target).norm();
    let n = 720;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let mut best = (0.0, dist(0.0));
    for i in 1..n {
        let d = dist(i as f64 * h);
        if d < best.1 {
            best = (i as f64 * h, d);
        }
    }
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if dist(c) < dist(d) {
            b = d;
        } else {
            a = c;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let t = 0.5 * (a + b);
    (t, dist(t))
}

/// Scales `x` to the maximum of `t ↦ J(tx)`; `None` if the ray has no interior maximum.
fn ray_max(f: &dyn Functional, x: &DVector<f64>) -> Result<Option<(f64, DVector<f64>)>> {
    let phi = |t: f64| -> Result<f64> { Ok(f.gradient(&(x * t))?.dot(x)) };
    let (mut lo, mut hi) = (1.0, 1.0);
    let (mut flo, mut fhi);
    let f1 = phi(1.0)?;
    if f1 > 0.0 {
        flo = f1;
        loop {
            hi *= 2.0;
            fhi = phi(hi)?;
            if fhi < 0.0 {
                break;
            }
            lo = hi;
            flo = fhi;
            if hi > 1e8 {
                return Ok(None);
            }
        }
    } else {
        fhi = f1;
        loop {
            lo /= 2.0;
            flo = phi(lo)?;
            if flo > 0.0 {
                break;
            }
            hi = lo;
            fhi = flo;
            if lo < 1e-10 {
                return Ok(None);
            }
        }
    }
    // Illinois false position
    let mut side = 0;
    for _ in 0..100 {
        let t = (lo * fhi - hi * flo) / (fhi - flo);
        let ft = phi(t)?;
        if ft.abs() <= 1e-14 * (1.0 + flo.abs().max(fhi.abs())) || (hi - lo) < 1e-14 * hi {
            return Ok(Some((t, x * t)));
        }
        if ft > 0.0 {
            lo = t;
            flo = ft;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = t;
            fhi = ft;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(Some((t, x * t)))
}

fn bordered_newton(f: &dyn Functional, mut x: DVector<f64>, opts: &CircleOptions) -> Result<(DVector<f64>, f64)> {
    let n = x.len();
    let mut gnorm = f64::INFINITY;
    for _ in 0..opts.max_newton {
        let g = f.gradient(&x)?;
        gnorm = g.norm();
        if gnorm < opts.newton_tol {
            return Ok((x, gnorm));
        }
        let h = f.hessian(&x)?;
        let tau = f.tangent(&x);
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&h);
        m.view_mut((0, n), (n, 1)).copy_from(&tau);
        m.view_mut((n, 0), (1, n)).copy_from(&tau.transpose());
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-&g));
        let Some(sol) = m.lu().solve(&rhs) else {
            break;
        };
        x += sol.rows(0, n);
    }
    let gnorm_final = f.gradient(&x)?.norm();
    if gnorm_final < opts.newton_tol {
        Ok((x, gnorm_final))
    } else {
        Err(Error::NoConvergence {
            stage: "circle Newton",
            iterations: opts.max_newton,
            last_step: gnorm.min(gnorm_final),
        })
    }
}

/// `(kernel dimension, least |eigenvalue|)` of the Hessian on the complement of `∂_t`.
pub fn transverse_spectrum(h: &DMatrix<f64>, tau: &DVector<f64>, threshold: f64) -> (usize, f64, Vec<f64>) {
    let t = tau / tau.norm();
    let p = DMatrix::identity(h.nrows(), h.nrows()) - &t * t.transpose();
    let hs = &p * h * &p;
    let sym = (&hs + hs.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let skip = (0..eig.eigenvalues.len())
        .max_by(|&a, &b| {
            let pa = eig.eigenvectors.column(a).dot(&t).abs();
            let pb = eig.eigenvectors.column(b).dot(&t).abs();
            pa.total_cmp(&pb)
        })
        .unwrap_or(0);
    let mut rest: Vec<f64> = (0..eig.eigenvalues.len())
        .filter(|&i| i != skip)
        .map(|i| eig.eigenvalues[i])
        .collect();
    rest.sort_by(f64::total_cmp);
    let gap = rest.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let kernel = rest.iter().filter(|v| v.abs() < threshold).count();
    (kernel, gap, rest)
}

fn search_from(f: &dyn Functional, seed: &DVector<f64>, index: usize, opts: &CircleOptions) -> Result<CriticalCircle> {
    if seed.norm() == 0.0 {
        return Err(Error::NoCriticalCircle { seeds: 1 });
    }
    let unit = |v: &DVector<f64>| v / v.norm();
    let Some((_, mut x)) = ray_max(f, &unit(seed))? else {
        return Err(Error::NoCriticalCircle { seeds: 1 });
    };
    let mut value = f.value(&x)?;
    let mut step = 0.1;
    for _ in 0..opts.max_descent {
        let g = f.gradient(&x)?;
        let r = x.norm();
        let gt = &g - &x * (g.dot(&x) / (r * r));
        if gt.norm() <= opts.handover * (1.0 + g.norm().max(r)) {
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let trial = unit(&(&x / r - &gt * (step / r)));
            if let Some((_, y)) = ray_max(f, &trial)? {
                let vy = f.value(&y)?;
                if vy < value {
                    x = y;
                    value = vy;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
            }
            step *= 0.3;
        }
        if !accepted {
            break;
        }
    }
    let (x, gnorm) = bordered_newton(f, x, opts)?;
    if x.norm() < 1e-8 {
        return Err(Error::NoCriticalCircle { seeds: 1 });
    }
    let (kernel, gap, _) = transverse_spectrum(&f.hessian(&x)?, &f.tangent(&x), opts.gap_threshold);
    if gap < opts.gap_threshold {
        return Err(Error::DegenerateCircle {
            gap,
            threshold: opts.gap_threshold,
        });
    }
    Ok(CriticalCircle {
        representative: f.representative(&x)?,
        coords: x.iter().copied().collect(),
        value: f.value(&x)?,
        kernel_dim_mod_translation: kernel,
        second_eigenvalue_gap: gap,
        gradient_norm: gnorm,
        seed_index: index,
    })
}

/// Mountain-pass search: Nehari ray scaling, descent along the Nehari set,
/// bordered Newton with the phase fixed against `∂_t`, then a gap certificate.
pub fn find_critical_circle(f: &dyn Functional, seeds: &[DVector<f64>], opts: &CircleOptions) -> Result<CriticalCircle> {
    if seeds.is_empty() {
        return Err(Error::NoCriticalCircle { seeds: 0 });
    }
    let results: Vec<Result<CriticalCircle>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| search_from(f, s, i, opts))
        .collect();
    let mut best: Option<CriticalCircle> = None;
    let mut degenerate = None;
    for r in results {
        match r {
            Ok(c) => {
                if best.as_ref().is_none_or(|b| c.value < b.value) {
                    best = Some(c);
                }
            }
            Err(e @ Error::DegenerateCircle { .. }) => {
                degenerate.get_or_insert(e);
            }
            Err(_) => {}
        }
    }
    best.ok_or_else(|| degenerate.unwrap_or(Error::NoCriticalCircle { seeds: seeds.len() }))
}
