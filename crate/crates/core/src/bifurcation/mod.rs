//! Zeroth-order variational problem, the (Q2) contraction, and the reduced
//! functionals on `V1` and on loops.

mod circle;
mod coords;
mod functional;
mod phi0;
mod q2;

pub use circle::{align_phase, find_critical_circle, shift_pairs, transverse_spectrum, CircleOptions, CriticalCircle};
pub use coords::{tangent_pairs, LoopFunction, VCoords};
pub use functional::{
    phi0_quadratic, Functional, Phi0Functional, Psi0Functional, PsiCubic, PsiQuadratic, Representative,
};
pub use phi0::{embed_hn, phi0, phi0_hessian_action};
pub use q2::{derivative_multiplier, q2_tangent, solve_q2, solve_q2_from, Q2Options, Q2Solution};

#[cfg(test)]
mod tests;
