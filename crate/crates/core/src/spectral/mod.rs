//! Space-time fields, analytic norms, projectors and pseudo-spectral products.

mod field;
mod grid;
mod nonlinearity;
mod norm;
mod ops;
mod trig;

pub use field::{SpectralField, Subspace};
pub use grid::{fft1, fft_size, imaginary_defect, synthesize, x_nodes, GridSpectrum, GridValues};
pub use nonlinearity::{eval_nonlinearity, eval_nonlinearity_to, NonlinearitySpec};
pub use ops::{grid_dims, pointwise_spectrum, Multiplier};
pub use norm::{bracket_norm, norm_sigma_s, BetaConvention, NormWeights};
pub use trig::{exp_integral, exp_sine_integral, sine_product_matrix, sine_shift_table, TrigPolynomial};

/// Mean of `∂_u g(δ, x, u)` over `Ω = T × (0, π)`, `|Ω| = 2π²`.
pub fn mean_value_m(spec: &NonlinearitySpec, delta: f64, u: &SpectralField) -> crate::Result<f64> {
    let spectrum = spec.spectrum(delta, u, 1, 0)?;
    Ok(spectrum.integral() / (2.0 * std::f64::consts::PI.powi(2)))
}

/// Product `u · v` projected on the Galerkin frame of `u`.
pub fn multiply(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let dims = grid_dims(&[u, v], u.support_l() + v.support_l(), u.j_max() + v.j_max(), u.l_max());
    pointwise_spectrum(&[u, v], dims, |_, x| x[0] * x[1]).galerkin(u.l_max(), u.j_max())
}
