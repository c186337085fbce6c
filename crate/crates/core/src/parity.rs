//! When does `∫_Ω a(x) v^q` vanish for every `v ∈ V`?
//!
//! Since `v(t + π, π - x) = -v(t, x)` on `V`, the integral equals `(-1)^q ∫ a(π - x) v^q`.
//! It vanishes identically iff `a` is antisymmetric about `π/2` (even `q`) or symmetric
//! (odd `q`).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{grid_dims, pointwise_spectrum, x_nodes, SpectralField, TrigPolynomial};

/// Tolerance for structural (parity) verdicts.
pub const STRUCTURAL_TOL: f64 = 1e-9;
/// A witness integral must exceed this to count.
pub const WITNESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityVerdict {
    pub q: usize,
    /// `max_x |a(π - x) - a(x)|`.
    pub symmetric_defect: f64,
    /// `max_x |a(π - x) + a(x)|`.
    pub antisymmetric_defect: f64,
    pub vanishes_on_v: bool,
    pub witness: Option<SpectralField>,
    pub witness_integral: f64,
    pub s_star: Option<f64>,
}

/// `∫_Ω a(x) v(t, x)^q dt dx`, exact for trig polynomials up to rounding.
pub fn integral_a_vq(a: &TrigPolynomial, v: &SpectralField, q: usize, refine: usize) -> f64 {
    let lv = v.support_l().max(1);
    let jv = v.j_max();
    let (nt, nx) = grid_dims(&[v], q * lv, q * jv + a.degree(), 0);
    let dims = (nt * refine, nx * refine);
    let av: Vec<f64> = x_nodes(dims.1).into_iter().map(|x| a.eval(x)).collect();
    pointwise_spectrum(&[v], dims, |b, u| av[b] * u[0].powi(q as i32)).integral()
}

fn defects(a: &TrigPolynomial) -> (f64, f64) {
    let n = 64 * (a.degree() + 1) + 1;
    let (mut sym, mut anti) = (0.0f64, 0.0f64);
    for i in 0..n {
        let x = std::f64::consts::PI * i as f64 / (n - 1) as f64;
        let (ax, ar) = (a.eval(x), a.eval(std::f64::consts::PI - x));
        sym = sym.max((ar - ax).abs());
        anti = anti.max((ar + ax).abs());
    }
    (sym, anti)
}

/// `v ∈ V` with `|l| <= l_max`, normalized to unit `L²(Ω)` norm.
pub fn random_v(rng: &mut impl Rng, l_max: usize) -> SpectralField {
    let mut v = SpectralField::zeros(l_max, l_max);
    for l in 1..=l_max {
        v.set(l as i64, l, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    }
    normalized(v)
}

fn normalized(v: SpectralField) -> SpectralField {
    let n = v.l2_dot(&v).sqrt();
    if n > 0.0 {
        v.scale(1.0 / n)
    } else {
        v
    }
}

/// Single modes `cos(lt) sin(lx)` and the pairs `cos(lt) sin(lx) ± cos(mt + φ) sin(mx)`.
fn seed_fields(l_max: usize) -> Vec<SpectralField> {
    let mut out = Vec::new();
    for l in 1..=l_max {
        let mut v = SpectralField::zeros(l_max, l_max);
        v.set(l as i64, l, Complex64::new(0.5, 0.0));
        out.push(normalized(v));
        for m in (l + 1)..=l_max {
            for phase in [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5), Complex64::new(-0.5, 0.0)] {
                let mut v = SpectralField::zeros(l_max, l_max);
                v.set(l as i64, l, Complex64::new(0.5, 0.0));
                v.set(m as i64, m, phase);
                out.push(normalized(v));
            }
        }
    }
    out
}

/// Largest `|∫ a v^q|` over the deterministic seeds and `trials` random fields; also the
/// largest positive value found.
fn search(a: &TrigPolynomial, q: usize, l_max: usize, trials: usize, seed: u64) -> (Option<(SpectralField, f64)>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = seed_fields(l_max);
    fields.extend((0..trials).map(|_| random_v(&mut rng, l_max)));
    let values: Vec<f64> = fields.par_iter().map(|v| integral_a_vq(a, v, q, 1)).collect();
    let best = values
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .map(|(i, &val)| (fields[i].clone(), val));
    let max_positive = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (best, max_positive)
}

/// Parity of `a` about `π/2` and the resulting verdict for `∫ a v^q` on `V`.
pub fn parity_classify(a: &TrigPolynomial, q: usize, tol: f64) -> Result<ParityVerdict> {
    if q < 2 {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("{q} < 2"),
        });
    }
    let (symmetric_defect, antisymmetric_defect) = defects(a);
    let vanishes_on_v = if q.is_multiple_of(2) { antisymmetric_defect < tol } else { symmetric_defect < tol };
    let mut verdict = ParityVerdict {
        q,
        symmetric_defect,
        antisymmetric_defect,
        vanishes_on_v,
        witness: None,
        witness_integral: 0.0,
        s_star: None,
    };
    if !vanishes_on_v {
        let l_max = 4.max(a.degree().div_ceil(q) + 1);
        let (best, max_positive) = search(a, q, l_max, 32, 0);
        if let Some((v, val)) = best.filter(|(_, val)| val.abs() > WITNESS_TOL) {
            verdict.witness = Some(v);
            verdict.witness_integral = val;
            verdict.s_star = Some(if max_positive > WITNESS_TOL { 1.0 } else { -1.0 });
        }
    }
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApCondition {
    pub holds: bool,
    pub witness: Option<SpectralField>,
    pub integral: f64,
    /// The witness integral on a grid refined twice in each direction.
    pub refined_integral: f64,
    pub s_star: Option<f64>,
    pub verdict: ParityVerdict,
}

/// Searches for `v ∈ V` with `∫ a_p v^{p+1} ≠ 0`. `s*` is `+1` when a positive value
/// exists.
pub fn integral_condition_ap(a_p: &TrigPolynomial, p: usize, trials: usize, truncation: usize, seed: u64) -> Result<ApCondition> {
    if trials == 0 || truncation == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "need at least one trial and a positive truncation".into(),
        });
    }
    let q = p + 1;
    let verdict = parity_classify(a_p, q, STRUCTURAL_TOL)?;
    let (best, max_positive) = search(a_p, q, truncation, trials, seed);
    let (witness, integral) = match best {
        Some((v, val)) if val.abs() > WITNESS_TOL => (Some(v), val),
        Some((_, val)) => (None, val),
        None => (None, 0.0),
    };
    let refined_integral = witness.as_ref().map_or(0.0, |v| integral_a_vq(a_p, v, q, 2));
    let holds = witness.is_some();
    Ok(ApCondition {
        holds,
        s_star: holds.then_some(if max_positive > WITNESS_TOL { 1.0 } else { -1.0 }),
        witness,
        integral,
        refined_integral,
        verdict,
    })
}

/// `(a + a∘r)/2` and `(a - a∘r)/2` with `r(x) = π - x`.
pub fn split_parity(a: &TrigPolynomial) -> (TrigPolynomial, TrigPolynomial) {
    let r = a.reflect();
    (a.add(&r).scaled(0.5), a.add(&r.scaled(-1.0)).scaled(0.5))
}

pub fn random_trig(rng: &mut impl Rng, degree: usize) -> TrigPolynomial {
    TrigPolynomial::new(
        rng.gen_range(-1.0..1.0),
        (0..degree).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (0..degree).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqRow {
    pub index: usize,
    pub q: usize,
    /// Largest sampled `|∫ a_match v^q|` for the parity-matching part.
    pub matching_max: f64,
    /// Largest `|∫ a_mismatch v^q|` found for the other part.
    pub mismatching_witness: f64,
    pub matching_classified: bool,
    pub mismatching_classified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqAudit {
    pub rows: Vec<VqRow>,
    pub tol: f64,
    pub misclassifications: usize,
}

/// Random `a` split into parity parts; the matching part must vanish on every sampled
/// `v`, the other must admit a witness above `100·tol` (and above the witness floor).
pub fn vq_equivalence_audit(random_a_count: usize, q_list: &[usize], truncation: usize, tol: f64, seed: u64) -> Result<VqAudit> {
    let cases: Vec<(usize, usize)> = (0..random_a_count).flat_map(|i| q_list.iter().map(move |&q| (i, q))).collect();
    let rows: Vec<VqRow> = cases
        .par_iter()
        .map(|&(index, q)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let a = random_trig(&mut rng, 5);
            let (sym, anti) = split_parity(&a);
            let (matching, other) = if q % 2 == 0 { (anti, sym) } else { (sym, anti) };
            let inner = rng.gen();
            let (m_best, _) = search(&matching, q, truncation, 16, inner);
            let (o_best, _) = search(&other, q, truncation, 16, inner);
            let matching_max = m_best.map_or(0.0, |b| b.1.abs());
            let mismatching_witness = o_best.map_or(0.0, |b| b.1.abs());
            let mv = parity_classify(&matching, q, STRUCTURAL_TOL)?;
            let ov = parity_classify(&other, q, STRUCTURAL_TOL)?;
            Ok(VqRow {
                index,
                q,
                matching_max,
                mismatching_witness,
                matching_classified: mv.vanishes_on_v && matching_max < tol,
                mismatching_classified: !ov.vanishes_on_v && mismatching_witness > (100.0 * tol).max(WITNESS_TOL),
            })
        })
        .collect::<Result<_>>()?;
    let misclassifications = rows.iter().filter(|r| !(r.matching_classified && r.mismatching_classified)).count();
    Ok(VqAudit {
        rows,
        tol,
        misclassifications,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn sin_m(m: usize) -> TrigPolynomial {
        let mut s = vec![0.0; m];
        s[m - 1] = 1.0;
        TrigPolynomial::new(0.0, vec![], s)
    }

    #[test]
    fn sin2x_even_q_vanishes() {
        let v = parity_classify(&sin_m(2), 4, STRUCTURAL_TOL).unwrap();
        assert!(v.vanishes_on_v && v.antisymmetric_defect < 1e-14);
        assert!(v.witness.is_none());
    }

    #[test]
    fn sinx_odd_q_vanishes() {
        let v = parity_classify(&sin_m(1), 3, STRUCTURAL_TOL).unwrap();
        assert!(v.vanishes_on_v && v.symmetric_defect < 1e-14);
    }

    #[test]
    fn constant_even_q_has_positive_witness() {
        let v = parity_classify(&TrigPolynomial::constant(1.0), 4, STRUCTURAL_TOL).unwrap();
        assert!(!v.vanishes_on_v);
        assert!(v.witness_integral > 0.0);
        assert_eq!(v.s_star, Some(1.0));
        // cos t sin x: ∫ cos⁴t sin⁴x = (3π/4)(3π/8)
        let mut w = SpectralField::zeros(1, 1);
        w.set(1, 1, Complex64::new(0.5, 0.0));
        assert_relative_eq!(integral_a_vq(&TrigPolynomial::constant(1.0), &w, 4, 1), 9.0 * std::f64::consts::PI.powi(2) / 32.0, epsilon = 1e-13);
    }

    #[test]
    fn q_below_two_is_refused() {
        assert!(parity_classify(&sin_m(1), 1, 1e-9).is_err());
    }

    #[test]
    fn cubic_condition_and_sign() {
        let ap = integral_condition_ap(&TrigPolynomial::constant(1.0), 3, 8, 3, 1).unwrap();
        assert!(ap.holds);
        assert_eq!(ap.s_star, Some(1.0));
        assert!((ap.integral - ap.refined_integral).abs() < 1e-10);
        let neg = integral_condition_ap(&TrigPolynomial::constant(-2.0), 3, 8, 3, 1).unwrap();
        assert_eq!(neg.s_star, Some(-1.0));
    }

    #[test]
    fn quadratic_with_symmetric_coefficient_fails() {
        let a = TrigPolynomial::new(1.0, vec![0.0, 0.4], vec![0.3]);
        let ap = integral_condition_ap(&a, 2, 16, 4, 2).unwrap();
        assert!(!ap.holds);
        assert!(ap.verdict.vanishes_on_v);
        assert!(ap.integral.abs() < 1e-12);
    }

    #[test]
    fn split_reproduces_and_has_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_trig(&mut rng, 6);
        let (s, t) = split_parity(&a);
        for i in 0..50 {
            let x = 0.06 * i as f64;
            assert_relative_eq!(s.eval(x) + t.eval(x), a.eval(x), epsilon = 1e-14);
            assert_relative_eq!(s.eval(std::f64::consts::PI - x), s.eval(x), epsilon = 1e-14);
            assert_relative_eq!(t.eval(std::f64::consts::PI - x), -t.eval(x), epsilon = 1e-14);
        }
    }

    #[test]
    fn small_audit_is_clean() {
        let audit = vq_equivalence_audit(6, &[2, 3, 4, 5], 4, 1e-10, 11).unwrap();
        assert_eq!(audit.rows.len(), 24);
        assert_eq!(audit.misclassifications, 0, "{:?}", audit.rows.iter().find(|r| !(r.matching_classified && r.mismatching_classified)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matching_part_integrates_to_zero(seed in 0u64..1000, q in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (sym, anti) = split_parity(&random_trig(&mut rng, 4));
            let a = if q % 2 == 0 { anti } else { sym };
            let v = random_v(&mut rng, 3);
            prop_assert!(integral_a_vq(&a, &v, q, 1).abs() < 1e-12);
        }

        #[test]
        fn refinement_does_not_change_integrals(seed in 0u64..1000, q in 2usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_trig(&mut rng, 3);
            let v = random_v(&mut rng, 3);
            let (c, f) = (integral_a_vq(&a, &v, q, 1), integral_a_vq(&a, &v, q, 2));
            prop_assert!((c - f).abs() < 1e-12 * (1.0 + c.abs()));
        }
    }
}
