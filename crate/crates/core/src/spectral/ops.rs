use super::field::SpectralField;
use super::grid::{fft_size, synthesize, GridSpectrum, GridValues};

/// Grid sizes resolving a pointwise expression of time degree `t_degree` and
/// `x` degree `x_degree`, with output time modes up to `l_out`.
pub fn grid_dims(fields: &[&SpectralField], t_degree: usize, x_degree: usize, l_out: usize) -> (usize, usize) {
    let lm = fields.iter().map(|f| f.l_max()).max().unwrap_or(0).max(l_out);
    let jm = fields.iter().map(|f| f.j_max()).max().unwrap_or(1);
    let nt = fft_size((t_degree + l_out + 1).max(2 * lm + 2));
    let nx = fft_size((2 * x_degree + 2).max(2 * jm + 2));
    (nt, nx)
}

/// Spectrum of `f(b, [u_1, …, u_n])` evaluated at every grid node, where `b`
/// is the `x` node index.
pub fn pointwise_spectrum(
    fields: &[&SpectralField],
    dims: (usize, usize),
    f: impl Fn(usize, &[f64]) -> f64,
) -> GridSpectrum {
    let (nt, nx) = dims;
    let grids: Vec<GridValues> = fields.iter().map(|u| synthesize(u, nt, nx)).collect();
    let mut vals = vec![0.0; fields.len()];
    let values = (0..nt * nx)
        .map(|i| {
            for (v, g) in vals.iter_mut().zip(&grids) {
                *v = g.values[i];
            }
            f(i % nx, &vals)
        })
        .collect();
    GridValues { nt, nx, values }.analyze()
}

/// Multiplication by a fixed real function `a(t, x)` sampled on a grid,
/// followed by sine-Galerkin projection.
#[derive(Debug, Clone)]
pub struct Multiplier {
    a: GridValues,
}

impl Multiplier {
    pub fn new(a: GridValues) -> Self {
        Self { a }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a.nt, self.a.nx)
    }

    pub fn apply(&self, h: &SpectralField, l_out: usize, j_out: usize) -> SpectralField {
        let hg = synthesize(h, self.a.nt, self.a.nx);
        let values = hg.values.iter().zip(&self.a.values).map(|(x, y)| x * y).collect();
        GridValues {
            nt: self.a.nt,
            nx: self.a.nx,
            values,
        }
        .analyze()
        .galerkin(l_out, j_out)
    }
}
