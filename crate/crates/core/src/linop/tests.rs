use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use super::*;
use crate::bifurcation::{derivative_multiplier, solve_q2, Q2Options};
use crate::error::Error;
use crate::spectral::{NonlinearitySpec, NormWeights, SpectralField, Subspace, TrigPolynomial};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn sample_a0() -> TrigPolynomial {
    TrigPolynomial::new(0.0, vec![0.0, 1.0], vec![0.5])
}

/// `(spec, δ, v1, w, v2)` with `f = u³`, `v1 = cos t sin x`, small random `w`.
fn state(delta: f64, l: usize, j: usize, n_cut: usize) -> (NonlinearitySpec, f64, SpectralField, SpectralField, SpectralField) {
    let spec = NonlinearitySpec::monomial(3, 1.0);
    let mut v1 = SpectralField::zeros(l, j);
    v1.set(1, 1, c(0.5));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut w = SpectralField::zeros(l, j);
    for ll in 0..=2i64 {
        for jj in 1..=4usize {
            if jj != ll as usize {
                let s = 0.02 * (-(ll as f64 + jj as f64) * 0.5).exp();
                w.set(ll, jj, Complex64::new(rng.gen_range(-s..s), if ll == 0 { 0.0 } else { rng.gen_range(-s..s) }));
            }
        }
    }
    let v2 = solve_q2(&spec, delta, &v1, &w, &Q2Options::new(n_cut, 1e-15)).unwrap().v2;
    (spec, delta, v1, w, v2)
}

#[test]
fn eigen_at_zero_epsilon() {
    let e = eigen_sk(3, 0.0, &sample_a0(), 12).unwrap();
    assert!(!e.modes.contains(&3));
    for (i, &j) in e.modes.iter().enumerate() {
        assert_eq!(e.eigenvalues[i], (j * j) as f64);
    }
    assert!(e.orthonormality_defect() < 1e-14);
    let id = DMatrix::<f64>::identity(e.modes.len(), e.modes.len());
    assert!((&e.eigenvectors - id).abs().max() < 1e-14);
}

#[test]
fn eigen_invariants() {
    let a0 = sample_a0();
    let eps = 0.2;
    let bound = eps * a0.max_abs();
    for k in [0i64, 1, 2, 5, 9] {
        let e = eigen_sk(k, eps, &a0, 24).unwrap();
        assert!(e.max_residual() < 1e-9);
        assert!(e.orthonormality_defect() < 1e-10);
        for (i, &j) in e.modes.iter().enumerate() {
            assert!((e.eigenvalues[i] - (j * j) as f64).abs() <= bound + 1e-12);
            for (m, &l) in e.modes.iter().enumerate().skip(i + 1) {
                let gap = (e.eigenvalues[m] - e.eigenvalues[i]).abs();
                assert!(gap >= (l + j) as f64 - 2.0 - 1e-8, "k={k} l={l} j={j}");
            }
        }
        let mirror = eigen_sk(-k, eps, &a0, 24).unwrap();
        assert_eq!(mirror.eigenvalues, e.eigenvalues);
    }
}

#[test]
fn eigen_errors() {
    let big = TrigPolynomial::constant(20.0);
    assert!(matches!(eigen_sk(1, 0.1, &big, 8), Err(Error::NotScalarProduct { .. })));
    assert!(matches!(eigen_sk(8, 0.01, &sample_a0(), 8), Err(Error::TruncationOverflow { .. })));
}

#[test]
fn constant_coefficient_shift() {
    let e = eigen_sk(2, 0.3, &TrigPolynomial::constant(1.5), 10).unwrap();
    for (i, &j) in e.modes.iter().enumerate() {
        assert_relative_eq!(e.eigenvalues[i], (j * j) as f64 + 0.45, epsilon = 1e-12);
    }
}

#[test]
fn eigenvalue_asymptotics() {
    // mean of a_0 over (0, π) is the shift; the remainder is O(ε/j)
    let a0 = sample_a0();
    let eps = 0.01;
    let m = a0.mean();
    for k in [0i64, 3, 10] {
        let e = eigen_sk(k, eps, &a0, 64).unwrap();
        let scaled: Vec<f64> = e
            .modes
            .iter()
            .zip(&e.eigenvalues)
            .filter(|(&j, _)| (8..=32).contains(&j))
            .map(|(&j, &l)| j as f64 * (l - (j * j) as f64 - eps * m).abs() / eps)
            .collect();
        let top = scaled.iter().copied().fold(0.0, f64::max);
        assert!(top < 1.0, "k={k}: {top}");
    }
}

#[test]
fn eigenvector_proximity() {
    let a0 = sample_a0();
    let eps = 0.05;
    let e = eigen_sk(1, eps, &a0, 48).unwrap();
    let mut worst = 0.0f64;
    for (i, &j) in e.modes.iter().enumerate().filter(|(_, &j)| (4..=24).contains(&j)) {
        let mut v = e.eigenvectors.column(i).into_owned();
        v[i] -= 1.0;
        worst = worst.max(v.norm() * j as f64 / (eps * a0.max_abs()));
    }
    assert!(worst.is_finite() && worst < 2.0, "{worst}");
}

#[test]
fn alpha_closed_form_and_symmetry() {
    let a0 = sample_a0();
    let omega: f64 = 1.3;
    for k in 1..6i64 {
        let e = eigen_sk(k, 0.0, &a0, 40).unwrap();
        let (a, j) = alpha_k(&e, omega, 8).unwrap();
        let w = omega * omega * (k * k) as f64;
        let oracle = (1..=(2 * k as usize + 8))
            .filter(|&j| j != k as usize)
            .map(|j| (w - (j * j) as f64).abs())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(a, oracle);
        assert_eq!((w - (j * j) as f64).abs(), oracle);
        let m = eigen_sk(-k, 0.0, &a0, 40).unwrap();
        assert_eq!(alpha_k(&m, omega, 8).unwrap().0, a);
    }
    let short = eigen_sk(5, 0.0, &a0, 6).unwrap();
    assert!(matches!(alpha_k(&short, 2.0, 8), Err(Error::TruncationTooSmall { .. })));
}

#[test]
fn small_k_lower_bound() {
    let a0 = sample_a0();
    let eps: f64 = 0.02;
    let omega = (1.0 + 2.0 * eps).sqrt();
    let k_max = (1.0 / (3.0 * eps)).floor() as i64;
    for k in 0..=k_max {
        let e = eigen_sk(k, eps, &a0, 2 * k_max as usize + 12).unwrap();
        let (a, _) = alpha_k(&e, omega, 8).unwrap();
        assert!(a >= (k as f64 + 1.0) / 8.0, "k={k}: {a}");
    }
}

#[test]
fn melnikov_basics() {
    let r = melnikov_test_eps(0.3, 1.0, 10, 0.0, 1.5, Precision::Double);
    assert!(r.accepted && r.violations.is_empty());

    // ω k = j at k = 5, j = 6: ω = 6/5, ε = (ω² - 1)/2
    let eps = (1.44 - 1.0) / 2.0;
    let r = melnikov_test_eps(eps, 0.0, 8, 0.01, 1.5, Precision::Double);
    assert!(!r.accepted);
    assert!(r.violations.iter().any(|v| v.k == 5 && v.j == 6 && v.condition == 1));
    let brute = (2..=8usize).any(|k| (1..=16usize).any(|j| j != k && ((1.0 + 2.0 * eps).sqrt() * k as f64 - j as f64).abs() < 1e-12));
    assert!(brute);

    let spec = NonlinearitySpec::monomial(3, 1.0);
    let r = melnikov_test(0.1, &spec, 3.0, 40, 0.05, 1.5);
    assert_relative_eq!(r.epsilon, 0.01, max_relative = 1e-14);
    assert_eq!(r.accepted, r.violations.is_empty());
}

#[test]
fn melnikov_precisions_agree_away_from_boundary() {
    let a = melnikov_test_eps(0.0371, 2.0, 30, 0.02, 1.5, Precision::Double);
    let b = melnikov_test_eps(0.0371, 2.0, 30, 0.02, 1.5, Precision::Extended);
    assert_eq!(a.accepted, b.accepted);
    assert_eq!(a.violations.len(), b.violations.len());
    assert!((a.min_margin.unwrap() - b.min_margin.unwrap()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn doubling_gamma_is_monotone(eps in 0.01f64..0.3, gamma in 0.0f64..0.1, m in -3.0f64..3.0) {
        let weak = melnikov_test_eps(eps, m, 20, gamma, 1.5, Precision::Double);
        let strong = melnikov_test_eps(eps, m, 20, 2.0 * gamma, 1.5, Precision::Double);
        prop_assert!(!strong.accepted || weak.accepted);
        prop_assert!(strong.violations.len() >= weak.violations.len());
    }
}

#[test]
fn mean_value_examples() {
    let spec = NonlinearitySpec::monomial(3, 1.0);
    let z = SpectralField::zeros(2, 3);
    assert_eq!(mean_value(&spec, 0.1, &z, &z, &z).unwrap(), 0.0);
    // u = 2 cos t sin x: c[±1, 1] = 1
    let mut u = SpectralField::zeros(2, 3);
    u.set(1, 1, c(1.0));
    assert_relative_eq!(mean_value(&spec, 1.0, &u, &z, &z).unwrap(), 3.0, epsilon = 1e-12);
}

#[test]
fn linear_equation_is_diagonal() {
    let spec = NonlinearitySpec::monomial(3, 1.0);
    let z = SpectralField::zeros(4, 8);
    let op = assemble_ln(&spec, 0.2, &z, &z, &z, 1, 3).unwrap();
    let omega = spec.omega(0.2);
    assert_eq!(op.m1.iter().map(|x| x.norm()).fold(0.0, f64::max), 0.0);
    assert_eq!(op.m2.iter().map(|x| x.norm()).fold(0.0, f64::max), 0.0);
    let direct = invert_direct(&op).unwrap();
    let eigs = eigensystems(3, op.epsilon, &op.a0, 8).unwrap();
    let structured = invert_structured(&op, &eigs, 1e-12).unwrap();
    for (r, &(l, j)) in op.index.iter().enumerate() {
        let d = omega * omega * (l * l) as f64 - (j * j) as f64;
        assert_relative_eq!(op.d[(r, r)].re, d, epsilon = 1e-12);
        assert_relative_eq!(direct[(r, r)].re, 1.0 / d, max_relative = 1e-12);
        assert_relative_eq!(structured.inverse[(r, r)].re, 1.0 / d, max_relative = 1e-12);
    }
    let off = &op.d - DMatrix::from_diagonal(&op.d.diagonal());
    assert_eq!(off.iter().map(|x| x.norm()).fold(0.0, f64::max), 0.0);
}

#[test]
fn block_structure_and_diagonalization() {
    let (spec, delta, v1, w, v2) = state(0.3, 6, 12, 1);
    let op = assemble_ln(&spec, delta, &v1, &w, &v2, 1, 3).unwrap();
    assert!(op.m1.iter().map(|x| x.norm()).fold(0.0, f64::max) > 1e-6);
    for k in -3..=3i64 {
        let (s, n) = op.block(k);
        let blk = op.m1.view((s, s), (n, n));
        assert_eq!(blk.iter().map(|x| x.norm()).fold(0.0, f64::max), 0.0);
    }
    // D is Hermitian and block diagonal
    assert!((&op.d - op.d.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-13);
    let eigs = eigensystems(3, op.epsilon, &op.a0, op.j_max).unwrap();
    let w2 = op.omega * op.omega;
    for k in -3..=3i64 {
        let (s, n) = op.block(k);
        let e = &eigs[&k];
        let dk = op.d.view((s, s), (n, n)).map(|z| z.re);
        let rebuilt = &e.eigenvectors
            * DMatrix::from_diagonal(&DVector::from_iterator(n, e.eigenvalues.iter().map(|l| w2 * (k * k) as f64 - l)))
            * e.eigenvectors.transpose();
        assert!((&dk - rebuilt).abs().max() < 1e-10);
    }
}

#[test]
fn m2_matches_finite_differences() {
    let (spec, delta, v1, w, v2) = state(0.3, 6, 12, 1);
    let (l, j) = (v1.l_max(), v1.j_max());
    let op = assemble_ln(&spec, delta, &v1, &w, &v2, 1, 2).unwrap();
    let mut h = SpectralField::zeros(l, j);
    h.set(1, 3, Complex64::new(0.3, -0.2));
    h.set(0, 2, c(0.5));
    h.set(2, 1, Complex64::new(-0.1, 0.4));
    let opts = Q2Options::new(1, 1e-15);
    let t = 1e-4;
    let plus = solve_q2(&spec, delta, &v1, &w.add(&h.scale(t)), &opts).unwrap().v2;
    let minus = solve_q2(&spec, delta, &v1, &w.sub(&h.scale(t)), &opts).unwrap().v2;
    let plus2 = solve_q2(&spec, delta, &v1, &w.add(&h.scale(2.0 * t)), &opts).unwrap().v2;
    let minus2 = solve_q2(&spec, delta, &v1, &w.sub(&h.scale(2.0 * t)), &opts).unwrap().v2;
    // five-point stencil
    let dz = plus
        .scale(8.0)
        .sub(&minus.scale(8.0))
        .sub(&plus2)
        .add(&minus2)
        .scale(1.0 / (12.0 * t));
    let u = v1.add(&w).add(&v2);
    let a = derivative_multiplier(&spec, delta, &u, l, l);
    let fd = a.apply(&dz, l, j).scale(op.epsilon);
    let mine = op.from_vec(&(&op.m2 * op.to_vec(&h)), l, j);
    let fd_vec = op.to_vec(&fd.project(Subspace::Pn(2)));
    let diff = (op.to_vec(&mine) - &fd_vec).norm();
    assert!(diff < 1e-8 * fd_vec.norm().max(1e-12), "{diff} vs {}", fd_vec.norm());
}

#[test]
fn structured_inverse_matches_direct() {
    let (spec, delta, v1, w, v2) = state(0.3, 8, 16, 1);
    for l_n in [2usize, 4] {
        let op = assemble_ln(&spec, delta, &v1, &w, &v2, 1, l_n).unwrap();
        let direct = invert_direct(&op).unwrap();
        let eigs = eigensystems(l_n, op.epsilon, &op.a0, op.j_max).unwrap();
        let s = invert_structured(&op, &eigs, 1e-12).unwrap();
        let rel = frobenius(&(&s.inverse - &direct)) / spectral_norm(&direct);
        assert!(rel < 1e-8, "L_n={l_n}: {rel}");
        assert!(s.neumann_ratio < 1.0);
        // U is an involution
        let n = op.dim();
        let uu = &s.u * &s.u - DMatrix::<Complex64>::identity(n, n);
        assert!(uu.iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-12);
    }
}

#[test]
fn resonant_linearization_is_refused() {
    // ω = 2 makes ω²k² - j² vanish at j = 2|k| when a ≡ 0
    let spec = NonlinearitySpec::monomial(3, 1.0);
    let delta = 1.5f64.sqrt();
    assert_relative_eq!(spec.omega(delta), 2.0, epsilon = 1e-12);
    let z = SpectralField::zeros(2, 6);
    let op = assemble_ln(&spec, delta, &z, &z, &z, 1, 2).unwrap();
    let eigs = eigensystems(2, 0.0, &op.a0, 6).unwrap();
    match invert_structured(&op, &eigs, 1e-12) {
        Err(Error::ResonantLinearization { k, j, .. }) => assert_eq!(2 * k.abs(), j as i64),
        other => panic!("expected refusal, got {other:?}"),
    }
}

#[test]
fn spectral_norm_oracle() {
    let m = DMatrix::from_fn(5, 4, |r, c_| Complex64::new((r as f64 + 1.0) / (c_ as f64 + 2.0), (r * c_) as f64 * 0.1));
    let svd = m.clone().svd(false, false);
    assert_relative_eq!(spectral_norm(&m), svd.singular_values.max(), max_relative = 1e-10);
    let roots: Vec<f64> = (0..5).map(|i| 1.0 + i as f64).collect();
    let cols: Vec<f64> = (0..4).map(|i| 2.0 + i as f64).collect();
    let scaled = DMatrix::from_fn(5, 4, |r, c_| m[(r, c_)] * (roots[r] / cols[c_]));
    assert_relative_eq!(weighted_norm(&m, &roots, &cols), scaled.svd(false, false).singular_values.max(), max_relative = 1e-10);
}

#[test]
fn smoothing_estimate_on_single_modes() {
    let (sigma, sigma_p, s, l_n) = (0.4, 0.1, 1.0, 3usize);
    for l in (l_n + 1) as i64..=(l_n + 4) as i64 {
        let mut u = SpectralField::zeros(8, 10);
        u.set(l, 2, c(1.0));
        let hi = crate::spectral::norm_sigma_s(&u, NormWeights::new(sigma, s));
        let lo = crate::spectral::norm_sigma_s(&u, NormWeights::new(sigma_p, s));
        assert!(lo <= (-(l_n as f64) * (sigma - sigma_p)).exp() * hi * (1.0 + 1e-14));
        assert_relative_eq!(lo, (-(l as f64) * (sigma - sigma_p)).exp() * hi, max_relative = 1e-13);
    }
}

#[test]
fn audit_tables() {
    let a0 = sample_a0();
    let eps: f64 = 0.1;
    let omega = (1.0 + 2.0 * eps).sqrt();
    let eigs = eigensystems(8, eps, &a0, 32).unwrap();
    let audit = smalldivisor_audit(&eigs, omega, eps, 0.02, 1.5, 1.0, crate::spectral::BetaConvention::SmallDivisor, &a0, 8).unwrap();
    assert!(audit.alpha_symmetric);
    assert_eq!(audit.rows.len(), 17 * 16);
    assert!(audit.fitted_c.is_finite() && audit.fitted_c > 0.0);
    assert!(audit.rows.iter().all(|r| r.ratio <= audit.fitted_c));
    assert!(audit.small_k_margin >= 1.0);
    assert!(audit.d_half_constant.is_finite());
    assert!(audit.u_inverse_constant.is_finite());
    let by_k: std::collections::BTreeMap<i64, f64> = audit.alphas.iter().map(|&(k, a, _)| (k, a)).collect();
    for (k, a) in &by_k {
        assert_eq!(by_k[&-k], *a);
    }
}

#[test]
fn remainder_constants_are_finite() {
    let (spec, delta, v1, w, v2) = state(0.3, 6, 12, 1);
    let op = assemble_ln(&spec, delta, &v1, &w, &v2, 1, 3).unwrap();
    let eigs = eigensystems(3, op.epsilon, &op.a0, op.j_max).unwrap();
    let s = invert_structured(&op, &eigs, 1e-12).unwrap();
    let r = remainder_constants(&op, &s, NormWeights::new(0.0, 1.0), 0.02, 1.5);
    assert!(r.r1.is_finite() && r.r2.is_finite());
    assert!(r.u_r1 < 1.0 && r.u_r2 < 1.0);
}
