use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{sine_shift_table, NonlinearitySpec, NormWeights, SpectralField, TrigPolynomial};

/// `L_n = D - M1 - M2` on the truncation `W^(n)`, in the basis `e^{ilt} sin(jx)`.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    /// Modes `(l, j)`, `|l| <= L_n`, `j ≠ |l|`, ordered by `l` then `j`.
    pub index: Vec<(i64, usize)>,
    pub d: DMatrix<Complex64>,
    pub m1: DMatrix<Complex64>,
    pub m2: DMatrix<Complex64>,
    pub omega: f64,
    pub epsilon: f64,
    pub l_n: usize,
    pub j_max: usize,
    /// Time average `a_0(x)` of `∂_u g`.
    pub a0: TrigPolynomial,
}

pub fn w_index(l_n: usize, j_max: usize) -> Vec<(i64, usize)> {
    let mut out = Vec::new();
    for l in -(l_n as i64)..=l_n as i64 {
        for j in 1..=j_max {
            if j != l.unsigned_abs() as usize {
                out.push((l, j));
            }
        }
    }
    out
}

impl LinearizedOperator {
    pub fn full(&self) -> DMatrix<Complex64> {
        &self.d - &self.m1 - &self.m2
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn to_vec(&self, u: &SpectralField) -> DVector<Complex64> {
        DVector::from_iterator(self.dim(), self.index.iter().map(|&(l, j)| u.get(l, j)))
    }

    pub fn from_vec(&self, v: &DVector<Complex64>, l_max: usize, j_max: usize) -> SpectralField {
        let mut u = SpectralField::zeros(l_max, j_max);
        for (i, &(l, j)) in self.index.iter().enumerate() {
            u.set_raw(l, j, v[i]);
        }
        u
    }

    /// Square roots of the norm weights, one per index.
    pub fn weight_roots(&self, w: NormWeights) -> Vec<f64> {
        self.index.iter().map(|&(l, j)| w.weight(l, j).sqrt()).collect()
    }

    /// Position of the block of time frequency `k` as `(start, len)`.
    pub fn block(&self, k: i64) -> (usize, usize) {
        let start = self.index.iter().position(|&(l, _)| l == k).unwrap_or(self.dim());
        let len = self.index[start..].iter().take_while(|&&(l, _)| l == k).count();
        (start, len)
    }
}

/// Galerkin matrix entries of multiplication by a real function given through
/// its exponential coefficients per time frequency.
struct MultiplicationTables {
    j_max: i64,
    q_max: i64,
    tables: Vec<Vec<Complex64>>,
}

impl MultiplicationTables {
    fn new(spectrum: &crate::spectral::GridSpectrum, q_max: usize, j_max: usize) -> Self {
        let tables = (-(q_max as i64)..=q_max as i64)
            .map(|q| sine_shift_table(&spectrum.time_mode(q), j_max))
            .collect();
        Self {
            j_max: j_max as i64,
            q_max: q_max as i64,
            tables,
        }
    }

    /// `(2/π) ∫ a_{k-l}(x) sin(jx) sin(ix) dx` for output `(k, i)`, input `(l, j)`.
    #[inline]
    fn entry(&self, k: i64, i: usize, l: i64, j: usize) -> Complex64 {
        let q = k - l;
        debug_assert!(q.abs() <= self.q_max);
        let t = &self.tables[(q + self.q_max) as usize];
        let at = |d: i64| t[(d + 2 * self.j_max) as usize];
        let (i, j) = (i as i64, j as i64);
        (at(i - j) + at(j - i) - at(i + j) - at(-i - j)) / (2.0 * std::f64::consts::PI)
    }

    fn block(&self, rows: &[(i64, usize)], cols: &[(i64, usize)], filter: impl Fn(i64) -> bool) -> DMatrix<Complex64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
            let (k, i) = rows[r];
            let (l, j) = cols[c];
            if filter(k - l) {
                self.entry(k, i, l, j)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// Assembles `L_n(δ, v1, w)[h] = L_ω h - ε P_n Π_W ∂_u g(u)(h + ∂_w v2 h)` at
/// `u = v1 + w + v2`, split as `D - M1 - M2`.
pub fn assemble_ln(
    spec: &NonlinearitySpec,
    delta: f64,
    v1: &SpectralField,
    w: &SpectralField,
    v2: &SpectralField,
    n_cut: usize,
    l_n: usize,
) -> Result<LinearizedOperator> {
    let u = v1.add(w).add(v2);
    let (l_frame, j_max) = (u.l_max(), u.j_max());
    if l_n > l_frame {
        return Err(Error::TruncationOverflow {
            required: l_n,
            available: l_frame,
        });
    }
    let epsilon = spec.epsilon(delta);
    let omega = spec.omega(delta);
    let q_max = 2 * l_frame;
    let spectrum = spec.spectrum(delta, &u, 1, q_max)?;
    let tables = MultiplicationTables::new(&spectrum, q_max, j_max);

    let index = w_index(l_n, j_max);
    let v2_index: Vec<(i64, usize)> = (-(l_frame.min(j_max) as i64)..=l_frame.min(j_max) as i64)
        .filter(|l| l.unsigned_abs() as usize > n_cut)
        .map(|l| (l, l.unsigned_abs() as usize))
        .collect();

    let a_same = tables.block(&index, &index, |q| q == 0);
    let a_off = tables.block(&index, &index, |q| q != 0);
    let mut d = -a_same * Complex64::new(epsilon, 0.0);
    for (r, &(l, j)) in index.iter().enumerate() {
        d[(r, r)] += Complex64::new(omega * omega * (l * l) as f64 - (j * j) as f64, 0.0);
    }
    let m1 = a_off * Complex64::new(epsilon, 0.0);

    let m2 = if v2_index.is_empty() || epsilon == 0.0 {
        DMatrix::zeros(index.len(), index.len())
    } else {
        let kinv = DVector::from_iterator(
            v2_index.len(),
            v2_index.iter().map(|&(l, _)| Complex64::new(1.0 / (2 * l * l) as f64, 0.0)),
        );
        let a22 = tables.block(&v2_index, &v2_index, |_| true);
        let a2w = tables.block(&v2_index, &index, |_| true);
        let aw2 = tables.block(&index, &v2_index, |_| true);
        let mut lhs = -DMatrix::from_diagonal(&kinv) * a22;
        for i in 0..v2_index.len() {
            lhs[(i, i)] += Complex64::new(1.0, 0.0);
        }
        let rhs = DMatrix::from_diagonal(&kinv) * a2w;
        let x = lhs.lu().solve(&rhs).ok_or(Error::NonContraction {
            stage: "dv2/dw",
            rate: f64::INFINITY,
            condition: "I - K A on V2 is singular; N too small",
        })?;
        aw2 * x * Complex64::new(epsilon, 0.0)
    };

    let mm = spectrum.max_m();
    let mut exp: Vec<_> = (-mm..=mm).map(|m| spectrum.get(0, m)).collect();
    let top = exp.iter().map(|z| z.norm()).fold(0.0, f64::max);
    while exp.len() > 1 && exp[0].norm() <= 1e-14 * top && exp[exp.len() - 1].norm() <= 1e-14 * top {
        exp.remove(0);
        exp.pop();
    }
    let a0 = TrigPolynomial::from_exp_coeffs(&exp);
    Ok(LinearizedOperator {
        index,
        d,
        m1,
        m2,
        omega,
        epsilon,
        l_n,
        j_max,
        a0,
    })
}
