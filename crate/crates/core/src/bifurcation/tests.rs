use approx::assert_relative_eq;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

use super::*;
use crate::spectral::{norm_sigma_s, NonlinearitySpec, NormWeights, SpectralField, Subspace, TrigPolynomial};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(dim: usize, seed: u64, scale: f64) -> DVector<f64> {
    let mut r = rng(seed);
    DVector::from_fn(dim, |i, _| r.gen_range(-1.0..1.0) * scale / (1 + i / 2).pow(2) as f64)
}

/// Central-difference check of the gradient along random directions.
fn check_gradient(f: &dyn Functional, x: &DVector<f64>, seed: u64, directions: usize) {
    let g = f.gradient(x).unwrap();
    for k in 0..directions {
        let d = random_vec(f.dim(), seed + k as u64, 1.0);
        let d = &d / d.norm();
        let h = 1e-5 * (1.0 + x.norm());
        let fd = (f.value(&(x + &d * h)).unwrap() - f.value(&(x - &d * h)).unwrap()) / (2.0 * h);
        let an = g.dot(&d);
        let scale = an.abs().max(g.norm()).max(1e-12);
        assert!((fd - an).abs() / scale < 1e-6, "fd {fd} vs analytic {an}");
    }
}

fn check_symmetric(f: &dyn Functional, x: &DVector<f64>) {
    let h = f.hessian(x).unwrap();
    let scale = h.abs().max().max(1.0);
    assert!((&h - h.transpose()).abs().max() / scale < 1e-10);
}

#[test]
fn phi0_cubic_example() {
    let spec = NonlinearitySpec::monomial(3, 1.0);
    let mut v = SpectralField::zeros(3, 3);
    v.set(1, 1, c(1.0, 0.0));
    let (value, _) = phi0(&v, &spec).unwrap();
    // ∫v_t² + v_x² = 4π², ∫v⁴ = 16 · (3π/4) · (3π/8)
    let oracle = 0.5 * 4.0 * PI * PI - 16.0 * (3.0 * PI / 4.0) * (3.0 * PI / 8.0) / 4.0;
    assert_relative_eq!(value, oracle, max_relative = 1e-13);
    assert_relative_eq!(value, 7.0 * PI * PI / 8.0, max_relative = 1e-13);
    let (z, g) = phi0(&SpectralField::zeros(3, 3), &spec).unwrap();
    assert_eq!(z, 0.0);
    assert_eq!(g.max_abs(), 0.0);
}

#[test]
fn phi0_gradient_and_hessian_hygiene() {
    let spec = NonlinearitySpec::monomial(3, 1.0).with_term(3, TrigPolynomial::new(1.0, vec![0.3], vec![0.2]));
    let f = Phi0Functional {
        spec,
        coords: VCoords::new(4, 4, 8),
    };
    let x = random_vec(8, 1, 1.0);
    check_gradient(&f, &x, 100, 20);
    check_symmetric(&f, &x);
}

#[test]
fn gradient_is_translation_equivariant() {
    let spec = NonlinearitySpec::monomial(3, 1.0);
    let f = Phi0Functional {
        spec,
        coords: VCoords::new(3, 3, 6),
    };
    let x = random_vec(6, 2, 1.0);
    for k in 0..8 {
        let theta = 0.7 * k as f64;
        let a = f.gradient(&shift_pairs(&x, theta)).unwrap();
        let b = shift_pairs(&f.gradient(&x).unwrap(), theta);
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn q2_trivial_and_two_starts() {
    let spec = NonlinearitySpec::monomial(3, 1.0);
    let opts = Q2Options::new(2, 1e-13);
    let zero = SpectralField::zeros(8, 10);
    let s = solve_q2(&spec, 0.1, &zero, &zero, &opts).unwrap();
    assert_eq!(s.v2.max_abs(), 0.0);
    assert_eq!(s.iterations, 1);

    let mut v1 = SpectralField::zeros(8, 10);
    v1.set(1, 1, c(0.0, -0.8));
    v1.set(2, 2, c(0.1, 0.05));
    let mut w = SpectralField::zeros(8, 10);
    w.set(1, 3, c(0.02, 0.0));
    let a = solve_q2(&spec, 0.1, &v1, &w, &opts).unwrap();
    assert!(a.contraction_rate <= 0.5, "rate {}", a.contraction_rate);
    let mut start = SpectralField::zeros(8, 10);
    start.set(3, 3, c(0.3, 0.3));
    start.set(5, 5, c(-0.2, 0.1));
    let b = solve_q2_from(&spec, 0.1, &v1, &w, &opts, Some(&start)).unwrap();
    let wts = NormWeights::new(0.0, 1.0);
    assert!(norm_sigma_s(&a.v2.sub(&b.v2), wts) < 10.0 * opts.tol);
    assert!(a.v2.is_supported_on(Subspace::V2(2)));
}

#[test]
fn psi0_gradient_identity_and_hessian() {
    let spec = NonlinearitySpec::monomial(3, 1.0);
    let f = Psi0Functional::new(&spec, VCoords::new(3, 10, 12), Q2Options::new(3, 1e-14));
    let x = random_vec(6, 5, 1.2);
    check_gradient(&f, &x, 300, 20);
    check_symmetric(&f, &x);
}

#[test]
fn quadratic_loop_functional() {
    let f = PsiQuadratic { l_eta: 4 };
    for a in [0.3, 1.0, 1.7] {
        let eta = LoopFunction::mode(4, 1, 0.0, a);
        assert_relative_eq!(
            f.psi(&eta),
            a * a * PI / 2.0 - a.powi(4) * PI * PI / 4.0,
            max_relative = 1e-13
        );
    }
    let bar = LoopFunction::mode(4, 1, 0.0, 1.0 / PI.sqrt());
    assert!(f.gradient_loop(&bar).to_coords().norm() < 1e-14);
    let x = random_vec(8, 9, 1.0);
    check_gradient(&f, &x, 50, 20);
    check_symmetric(&f, &x);
}

#[test]
fn quadratic_circle_is_the_explicit_solution() {
    let f = PsiQuadratic { l_eta: 6 };
    let mut seed = LoopFunction::mode(6, 1, 0.2, 0.5).to_coords();
    seed += random_vec(12, 17, 0.05);
    let circle = find_critical_circle(&f, &[seed], &CircleOptions::default()).unwrap();
    let bar = LoopFunction::mode(6, 1, 0.0, 1.0 / PI.sqrt()).to_coords();
    let (_, dist) = align_phase(&DVector::from_vec(circle.coords.clone()), &bar);
    assert!(dist < 1e-10, "distance {dist}");
    assert_eq!(circle.kernel_dim_mod_translation, 0);
    assert!(circle.second_eigenvalue_gap > 0.1);
}

#[test]
fn cubic_loop_functional() {
    let a3 = TrigPolynomial::new(1.0, vec![0.4], vec![0.3]);
    let f = PsiCubic::new(2, 3, &a3).unwrap();
    for a in [0.5, 1.3] {
        let eta = LoopFunction::mode(3, 1, 0.0, a);
        let oracle = a * a * PI / 2.0 - 0.25 * 3.0 * PI * a.powi(4) / 4.0 - 3.0 / (8.0 * PI) * (a * a * PI).powi(2);
        assert_relative_eq!(f.psi(&eta), oracle, max_relative = 1e-13);
        assert_relative_eq!(oracle, a * a * PI / 2.0 - 9.0 * PI * a.powi(4) / 16.0, max_relative = 1e-13);
    }
    let x = random_vec(6, 21, 1.0);
    check_gradient(&f, &x, 70, 20);
    check_symmetric(&f, &x);
    let flat = PsiCubic::new(3, 3, &TrigPolynomial::constant(2.0)).unwrap();
    assert!(flat.rn(&LoopFunction::from_coords(&x)).unwrap().abs() < 1e-14);
    assert!(matches!(
        PsiCubic::new(1, 3, &TrigPolynomial::new(0.0, vec![1.0], vec![])),
        Err(crate::Error::MeanValueHypothesis)
    ));
}

#[test]
fn rn_derivatives_decay_with_n() {
    let a3 = TrigPolynomial::new(1.0, vec![0.0, 0.5], vec![]);
    let x = random_vec(4, 33, 1.0);
    let norms: Vec<(f64, f64)> = [1usize, 2, 4, 8]
        .iter()
        .map(|&n| {
            let f = PsiCubic::new(n, 2, &a3).unwrap();
            let eta = LoopFunction::from_coords(&x);
            let g = f.rn_gradient(&eta).unwrap().to_coords().norm();
            let h = nalgebra::DMatrix::from_fn(4, 4, |i, j| {
                let e = LoopFunction::from_coords(&DVector::from_fn(4, |k, _| (k == j) as u8 as f64));
                f.rn_hessian_action(&eta, &e).unwrap().to_coords()[i]
            })
            .norm();
            (g, h)
        })
        .collect();
    assert!(norms[3].0 < norms[0].0 && norms[3].1 < norms[0].1, "{norms:?}");
    assert!(norms[3].0 < 1e-6 && norms[3].1 < 1e-6, "{norms:?}");
}

#[test]
fn hn_embedding() {
    let mut v = SpectralField::zeros(9, 9);
    v.set(1, 1, c(1.0, 0.0));
    assert_eq!(embed_hn(&v, 1).unwrap(), v);
    let h = embed_hn(&v, 3).unwrap();
    assert_eq!(h.get(3, 3), c(1.0, 0.0));
    let mut r = rng(3);
    let mut u = SpectralField::zeros(9, 9);
    for l in 1..=3 {
        u.set(l, l as usize, c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
    }
    let q = |f: &SpectralField| {
        let spec = NonlinearitySpec::monomial(3, 1.0);
        phi0(f, &spec).unwrap().0 - 0.5 * f.neg_laplacian().l2_dot(f)
    };
    let h2 = embed_hn(&u, 3).unwrap();
    assert_relative_eq!(q(&u), q(&h2), max_relative = 1e-10);
    assert!(matches!(embed_hn(&u, 4), Err(crate::Error::TruncationOverflow { .. })));
}

#[test]
fn phi0_quadratic_against_dense_oracle() {
    let mut v = SpectralField::zeros(1, 1);
    v.set(1, 1, c(1.0, 0.0));
    let a2 = 0.7;
    let got = phi0_quadratic(&v, a2).unwrap();
    // oracle: v² = 4cos²t sin²x sampled, sine coefficients by trapezoid, L^{-1} coefficient-wise
    let (nt, nx, jm) = (16usize, 4096usize, 400usize);
    let mut total = 0.0;
    for l in -2i64..=2 {
        for j in 1..=jm {
            if l.unsigned_abs() as usize == j {
                continue;
            }
            let mut acc = c(0.0, 0.0);
            for a in 0..nt {
                let t = 2.0 * PI * a as f64 / nt as f64;
                let mut xs = 0.0;
                for b in 1..nx {
                    let x = PI * b as f64 / nx as f64;
                    xs += 4.0 * (t.cos() * x.sin()).powi(2) * (j as f64 * x).sin();
                }
                acc += Complex64::from_polar(1.0, -(l as f64) * t) * xs;
            }
            let coef = acc / nt as f64 * (PI / nx as f64) * (2.0 / PI);
            total += PI * PI * coef.norm_sqr() / ((l * l) as f64 - (j * j) as f64);
        }
    }
    let oracle = 0.5 * 4.0 * PI * PI + 0.5 * a2 * a2 * total;
    assert_relative_eq!(got, oracle, max_relative = 1e-8);
}

#[test]
fn translation_invariance_of_loop_functionals() {
    let f = PsiCubic::new(2, 3, &TrigPolynomial::new(1.0, vec![0.2], vec![])).unwrap();
    let q = PsiQuadratic { l_eta: 3 };
    let x = random_vec(6, 8, 1.0);
    for k in 0..10 {
        let y = shift_pairs(&x, 0.37 * k as f64);
        assert!((f.value(&y).unwrap() - f.value(&x).unwrap()).abs() < 1e-10);
        assert!((q.value(&y).unwrap() - q.value(&x).unwrap()).abs() < 1e-10);
    }
}
