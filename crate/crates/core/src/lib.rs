//! Time-periodic solutions of completely resonant nonlinear wave equations
//!
//! `u_tt - u_xx + f(x, u) = 0` on `(0, π)` with Dirichlet conditions. Solutions
//! are sought as `u(t, x) = δ ũ(ω t, x)` with `ω² = 1 + 2 s* δ^{p-1}` through a
//! Lyapunov-Schmidt split into the resonant kernel `V` and its complement `W`.

pub mod bifurcation;
pub mod cantor;
pub mod error;
pub mod linop;
pub mod nashmoser;
pub mod parity;
pub mod spectral;

pub use error::{Error, Result};
