//! Scenario files: the nonlinearity, scheme parameters and the requested run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use resonant_core::cantor::ScanParams;
use resonant_core::nashmoser::SchemeParams;
use resonant_core::parity::{integral_condition_ap, ParityVerdict};
use resonant_core::spectral::{NonlinearitySpec, TrigPolynomial};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySource {
    pub p: usize,
    /// Coefficients `a_k(x)` keyed by the power `k`.
    pub terms: BTreeMap<String, TrigPolynomial>,
    #[serde(default)]
    pub s_star: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunSpec {
    Solve {
        deltas: Vec<f64>,
    },
    Scan {
        eta: f64,
        /// Branch grid used to tabulate `M(δ)`.
        #[serde(default = "default_m_deltas")]
        m_deltas: Vec<f64>,
        #[serde(default)]
        scan: ScanParams,
    },
    Eig {
        ks: Vec<i64>,
        epsilon: f64,
        a0: TrigPolynomial,
        #[serde(default = "default_j_max")]
        j_max: usize,
    },
    Audit {
        epsilon: f64,
        a0: TrigPolynomial,
        l_max: usize,
        #[serde(default = "default_j_max")]
        j_max: usize,
    },
    Parity {
        q: usize,
        /// Defaults to the leading coefficient.
        #[serde(default)]
        a: Option<TrigPolynomial>,
    },
}

fn default_m_deltas() -> Vec<f64> {
    vec![0.01, 0.02, 0.03, 0.04, 0.05]
}

fn default_j_max() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub nonlinearity: NonlinearitySource,
    #[serde(default)]
    pub scheme: SchemeParams,
    pub run: RunSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

/// Which rescaling the preflight selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pathway {
    /// `ε = s* δ^{p-1}`.
    Standard,
    /// `p = 2` with vanishing cubic integral: `ε = -δ²`.
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preflight {
    pub pathway: Pathway,
    pub s_star: f64,
    pub eps_exponent: u32,
    pub condition_integral: f64,
    pub verdict: Option<ParityVerdict>,
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::schema(field, format!("{v} is not finite")))
    }
}

fn check_trig(field: &str, a: &TrigPolynomial) -> Result<()> {
    finite(&format!("{field}.c0"), a.c0)?;
    for (i, c) in a.cos_coeffs.iter().enumerate() {
        finite(&format!("{field}.cos[{i}]"), *c)?;
    }
    for (i, c) in a.sin_coeffs.iter().enumerate() {
        finite(&format!("{field}.sin[{i}]"), *c)?;
    }
    Ok(())
}

fn range(field: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(CliError::schema(field, format!("{v} not in ({lo}, {hi})")))
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::schema("<toml>", e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn terms(&self) -> Result<BTreeMap<usize, TrigPolynomial>> {
        let mut out = BTreeMap::new();
        for (k, a) in &self.nonlinearity.terms {
            let field = format!("nonlinearity.terms.{k}");
            let power = k.parse::<usize>().map_err(|_| CliError::schema(&field, "key must be a nonnegative integer power"))?;
            check_trig(&field, a)?;
            out.insert(power, a.clone());
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scheme;
        range("scheme.tau", s.tau, 1.0, 2.0)?;
        range("scheme.chi", s.chi, 1.0, 2.0)?;
        range("scheme.gamma", s.gamma, 0.0, 1.0)?;
        s.validate().map_err(|e| CliError::schema("scheme", e.to_string()))?;
        let nl = &self.nonlinearity;
        if nl.p < 2 {
            return Err(CliError::schema("nonlinearity.p", format!("{} is below 2", nl.p)));
        }
        let terms = self.terms()?;
        match terms.get(&nl.p) {
            Some(a) if !a.is_zero() => {}
            _ => return Err(CliError::schema(format!("nonlinearity.terms.{}", nl.p), "leading coefficient missing or zero")),
        }
        if let Some(k) = terms.keys().find(|&&k| k < nl.p) {
            return Err(CliError::schema(format!("nonlinearity.terms.{k}"), format!("power below p = {}", nl.p)));
        }
        if let Some(s) = nl.s_star {
            if s != 1.0 && s != -1.0 {
                return Err(CliError::schema("nonlinearity.s_star", format!("{s} is not +1 or -1")));
            }
        }
        if let Some(r) = nl.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(CliError::schema("nonlinearity.radius", format!("{r} is not positive")));
            }
        }
        match &self.run {
            RunSpec::Solve { deltas } => {
                if deltas.is_empty() {
                    return Err(CliError::schema("run.deltas", "empty"));
                }
                if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err(CliError::schema("run.deltas", "entries must be finite and nonnegative"));
                }
                if deltas.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::schema("run.deltas", "must be strictly increasing"));
                }
            }
            RunSpec::Scan { eta, m_deltas, scan } => {
                range("run.eta", *eta, 0.0, 0.5)?;
                range("run.scan.tau", scan.tau, 1.0, 2.0)?;
                range("run.scan.gamma", scan.gamma, 0.0, 1.0)?;
                scan.validate().map_err(|e| CliError::schema("run.scan", e.to_string()))?;
                if m_deltas.is_empty() || m_deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) || m_deltas.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::schema("run.m_deltas", "must be positive and strictly increasing"));
                }
            }
            RunSpec::Eig { ks, epsilon, a0, j_max } => {
                finite("run.epsilon", *epsilon)?;
                check_trig("run.a0", a0)?;
                if ks.is_empty() {
                    return Err(CliError::schema("run.ks", "empty"));
                }
                if *j_max < 2 {
                    return Err(CliError::schema("run.j_max", "must be at least 2"));
                }
            }
            RunSpec::Audit { epsilon, a0, l_max, j_max } => {
                finite("run.epsilon", *epsilon)?;
                if *epsilon == 0.0 {
                    return Err(CliError::schema("run.epsilon", "must be nonzero"));
                }
                check_trig("run.a0", a0)?;
                if *l_max == 0 || *j_max <= 2 * l_max {
                    return Err(CliError::schema("run.j_max", format!("need j_max > 2 l_max = {}", 2 * l_max)));
                }
            }
            RunSpec::Parity { q, a } => {
                if *q < 2 {
                    return Err(CliError::schema("run.q", format!("{q} is below 2")));
                }
                if let Some(a) = a {
                    check_trig("run.a", a)?;
                }
            }
        }
        Ok(())
    }

    /// Checks that `∫ a_p v^{p+1}` is not identically zero on V and picks `s*` and the rescaling exponent.
    pub fn preflight(&self) -> Result<Preflight> {
        let terms = self.terms()?;
        let p = self.nonlinearity.p;
        let a_p = &terms[&p];
        if p == 3 {
            let mean = a_p.mean();
            if mean == 0.0 {
                return Err(CliError::Preflight("<a_3> = 0: the cubic pathway needs a nonzero mean".into()));
            }
            let s_star = self.nonlinearity.s_star.unwrap_or(mean.signum());
            return Ok(Preflight {
                pathway: Pathway::Standard,
                s_star,
                eps_exponent: 2,
                condition_integral: mean,
                verdict: None,
            });
        }
        let ap = integral_condition_ap(a_p, p, 64, 4, self.seed)?;
        if ap.holds {
            return Ok(Preflight {
                pathway: Pathway::Standard,
                s_star: self.nonlinearity.s_star.or(ap.s_star).unwrap_or(1.0),
                eps_exponent: (p - 1) as u32,
                condition_integral: ap.integral,
                verdict: Some(ap.verdict),
            });
        }
        if p == 2 {
            return Ok(Preflight {
                pathway: Pathway::Quadratic,
                s_star: -1.0,
                eps_exponent: 2,
                condition_integral: ap.integral,
                verdict: Some(ap.verdict),
            });
        }
        Err(CliError::Preflight(format!(
            "nondegeneracy fails: every sampled integral of a_{p} v^{} vanishes",
            p + 1
        )))
    }

    /// The nonlinearity with the preflight choices applied.
    pub fn spec(&self, pre: &Preflight) -> Result<NonlinearitySpec> {
        let mut spec = NonlinearitySpec::new(self.nonlinearity.p, self.terms()?, pre.s_star)?;
        spec.radius = self.nonlinearity.radius;
        if pre.eps_exponent as usize != self.nonlinearity.p - 1 {
            spec = spec.with_eps_exponent(pre.eps_exponent);
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBIC: &str = r#"
seed = 3
[nonlinearity]
p = 3
terms = { "3" = { c0 = 1.0 } }
[run]
kind = "solve"
deltas = [0.0]
"#;

    #[test]
    fn parses_minimal_cubic() {
        let s = Scenario::from_toml(CUBIC).unwrap();
        assert_eq!(s.seed, 3);
        assert_eq!(s.scheme, SchemeParams::default());
        let pre = s.preflight().unwrap();
        assert_eq!(pre.s_star, 1.0);
        assert_eq!(pre.pathway, Pathway::Standard);
    }

    #[test]
    fn tau_out_of_range_names_field() {
        let text = CUBIC.replace("[run]", "[scheme]\ntau = 2.5\n[run]");
        match Scenario::from_toml(&text) {
            Err(CliError::Schema { field, reason }) => {
                assert_eq!(field, "scheme.tau");
                assert!(reason.contains("(1, 2)"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = CUBIC.replace("seed = 3", "seed = 3\ncolour = 1");
        assert!(matches!(Scenario::from_toml(&text), Err(CliError::Schema { .. })));
    }

    #[test]
    fn zero_mean_cubic_fails_preflight() {
        let text = CUBIC.replace("c0 = 1.0", "c0 = 0.0, cos = [1.0]");
        let s = Scenario::from_toml(&text).unwrap();
        assert!(matches!(s.preflight(), Err(CliError::Preflight(_))));
    }

    #[test]
    fn negative_mean_selects_negative_sign() {
        let text = CUBIC.replace("c0 = 1.0", "c0 = -2.0");
        let s = Scenario::from_toml(&text).unwrap();
        assert_eq!(s.preflight().unwrap().s_star, -1.0);
    }

    #[test]
    fn symmetric_quadratic_takes_second_pathway() {
        let text = CUBIC.replace("p = 3", "p = 2").replace("\"3\" =", "\"2\" =");
        let s = Scenario::from_toml(&text).unwrap();
        let pre = s.preflight().unwrap();
        assert_eq!(pre.pathway, Pathway::Quadratic);
        let spec = s.spec(&pre).unwrap();
        assert_eq!(spec.epsilon(0.1), -0.1f64.powi(2));
    }

    #[test]
    fn quartic_needs_a_coefficient_odd_about_the_midpoint() {
        let text = CUBIC.replace("p = 3", "p = 4").replace("\"3\" =", "\"4\" =");
        let s = Scenario::from_toml(&text).unwrap();
        assert!(matches!(s.preflight(), Err(CliError::Preflight(_))));
        let s = Scenario::from_toml(&text.replace("c0 = 1.0", "c0 = 0.0, cos = [1.0]")).unwrap();
        let pre = s.preflight().unwrap();
        assert_eq!(pre.pathway, Pathway::Standard);
        assert_eq!(pre.eps_exponent, 3);
    }

    #[test]
    fn non_increasing_deltas_rejected() {
        let text = CUBIC.replace("deltas = [0.0]", "deltas = [0.02, 0.01]");
        assert!(matches!(Scenario::from_toml(&text), Err(CliError::Schema { field, .. }) if field == "run.deltas"));
    }
}
