//! Command implementations. Each writes its artifacts under the output directory.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use resonant_core::bifurcation::{find_critical_circle, CircleOptions, CriticalCircle, PsiQuadratic};
use resonant_core::cantor::{density_report, scan_delta_grid, DensityFit, MeanValueCurve, MeasureReport};
use resonant_core::linop::{alpha_k, eigen_sk, eigensystems, smalldivisor_audit, EigenSystem, Precision, SmallDivisorAudit};
use resonant_core::nashmoser::{continue_branch_from, nash_moser_solve, BranchPoint, SchemeParams, Termination};
use resonant_core::parity::{integral_condition_ap, parity_classify, ApCondition, ParityVerdict, STRUCTURAL_TOL};
use resonant_core::spectral::{BetaConvention, NonlinearitySpec};

use crate::error::Result;
use crate::output::Artifacts;
use crate::scenario::{Pathway, Preflight, RunSpec, Scenario};
use crate::verify::{critical_v1, run_suite, VerifyReport};

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub precision: Option<Precision>,
}

impl Context {
    fn params(&self, scenario: &Scenario) -> SchemeParams {
        let mut p = scenario.scheme;
        if let Some(prec) = self.precision {
            p.precision = prec;
        }
        p
    }
}

/// What a command reports back to the dispatcher.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub summary: String,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub preflight: Preflight,
    pub deltas: Vec<f64>,
    pub points: Vec<BranchPoint>,
    pub terminated: Option<Termination>,
    /// Loop-functional circle, on the quadratic pathway only.
    pub quadratic_circle: Option<CriticalCircle>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BranchRow {
    delta: f64,
    status: &'static str,
    omega: f64,
    epsilon: f64,
    residual: f64,
    m_value: f64,
    stages: usize,
    last_h_norm: f64,
}

const BRANCH_HEADER: [&str; 8] = ["delta", "status", "omega", "epsilon", "residual", "m_value", "stages", "last_h_norm"];

fn branch_rows(deltas: &[f64], points: &[BranchPoint]) -> Vec<BranchRow> {
    deltas
        .iter()
        .map(|&d| match points.iter().find(|p| p.delta == d) {
            Some(p) => BranchRow {
                delta: d,
                status: if p.accepted { "accepted" } else { "rejected" },
                omega: p.omega,
                epsilon: p.epsilon,
                residual: p.residual,
                m_value: p.m_value,
                stages: p.stages.len(),
                last_h_norm: p.h_norm_history.last().copied().unwrap_or(0.0),
            },
            None => BranchRow {
                delta: d,
                status: "not_reached",
                omega: f64::NAN,
                epsilon: f64::NAN,
                residual: f64::NAN,
                m_value: f64::NAN,
                stages: 0,
                last_h_norm: f64::NAN,
            },
        })
        .collect()
}

/// Solutions at `δ = 0` directly, and by continuation from the critical circle elsewhere.
fn solve_points(spec: &NonlinearitySpec, params: &SchemeParams, deltas: &[f64]) -> Result<(Vec<BranchPoint>, Option<Termination>)> {
    let v1_bar = critical_v1(spec, params)?;
    let mut points = Vec::new();
    if deltas.first() == Some(&0.0) {
        points.push(nash_moser_solve(spec, 0.0, &v1_bar, params)?);
    }
    let positive: Vec<f64> = deltas.iter().copied().filter(|&d| d > 0.0).collect();
    let mut terminated = None;
    if !positive.is_empty() {
        let branch = continue_branch_from(spec, &v1_bar, &positive, params)?;
        points.extend(branch.points);
        terminated = branch.terminated;
    }
    Ok((points, terminated))
}

pub fn solve(scenario: &Scenario, pre: &Preflight, ctx: &Context) -> Result<Outcome> {
    let RunSpec::Solve { deltas } = &scenario.run else {
        return Err(crate::error::CliError::schema("run.kind", "expected `solve`"));
    };
    let spec = scenario.spec(pre)?;
    let params = ctx.params(scenario);
    let mut report = SolveReport {
        preflight: pre.clone(),
        deltas: deltas.clone(),
        points: Vec::new(),
        terminated: None,
        quadratic_circle: None,
    };
    match pre.pathway {
        Pathway::Standard => {
            let (points, terminated) = solve_points(&spec, &params, deltas)?;
            report.points = points;
            report.terminated = terminated;
        }
        Pathway::Quadratic => {
            let f = PsiQuadratic { l_eta: params.frame_l() };
            let seed = resonant_core::bifurcation::LoopFunction::mode(params.frame_l(), 1, 0.2, 0.5).to_coords();
            report.quadratic_circle = Some(find_critical_circle(&f, &[seed], &CircleOptions::default())?);
        }
    }
    let mut art = Artifacts::default();
    art.json(&ctx.out, "solve.json", "solve", &report)?;
    art.csv(&ctx.out, "branch.csv", &BRANCH_HEADER, &branch_rows(deltas, &report.points))?;
    let decay: Vec<Vec<f64>> = report
        .points
        .iter()
        .flat_map(|p| p.h_norm_history.iter().enumerate().map(move |(i, h)| vec![p.delta, i as f64, *h]))
        .collect();
    art.plot(&ctx.out, "h_decay.dat", &["delta", "stage", "h_norm"], &decay)?;
    let accepted = report.points.iter().filter(|p| p.accepted).count();
    let success = report.terminated.is_none() && (pre.pathway == Pathway::Quadratic || report.points.len() == deltas.len());
    let summary = match pre.pathway {
        Pathway::Standard => format!("{} of {} points solved, {accepted} accepted", report.points.len(), deltas.len()),
        Pathway::Quadratic => "quadratic pathway: loop-functional circle written; no continuation".to_string(),
    };
    Ok(Outcome {
        artifacts: art,
        summary,
        success,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOutput {
    pub preflight: Preflight,
    /// Pairs are written to `pairs.csv` and cleared here.
    pub report: MeasureReport,
    pub fit: Option<DensityFit>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PairRow {
    l: usize,
    j: usize,
    delta1: f64,
    intervals: usize,
    length: f64,
}

pub fn scan(scenario: &Scenario, pre: &Preflight, ctx: &Context) -> Result<Outcome> {
    let RunSpec::Scan { eta, m_deltas, scan } = &scenario.run else {
        return Err(crate::error::CliError::schema("run.kind", "expected `scan`"));
    };
    let spec = scenario.spec(pre)?;
    let params = ctx.params(scenario);
    let v1_bar = critical_v1(&spec, &params)?;
    let m0 = nash_moser_solve(&spec, 0.0, &v1_bar, &params)?.m_value;
    let branch = continue_branch_from(&spec, &v1_bar, m_deltas, &params)?;
    let curve = MeanValueCurve::from_branch(&branch.points, Some((0.0, m0)))?;
    let mut report = scan_delta_grid(&spec, &curve, *eta, scan)?;
    let (fit, fit_error) = match density_report(&report) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let pairs = std::mem::take(&mut report.pairs);
    let mut art = Artifacts::default();
    let window_rows: Vec<Vec<f64>> = report
        .windows
        .iter()
        .map(|w| vec![w.delta1, w.density, w.density_lower, w.excised, w.tail_bound])
        .collect();
    let out = ScanOutput {
        preflight: pre.clone(),
        report,
        fit,
        fit_error,
    };
    art.json(&ctx.out, "scan.json", "scan", &out)?;
    let rows: Vec<PairRow> = pairs
        .iter()
        .map(|p| PairRow {
            l: p.l,
            j: p.j,
            delta1: p.delta1,
            intervals: p.intervals.len(),
            length: p.length,
        })
        .collect();
    art.csv(&ctx.out, "pairs.csv", &["l", "j", "delta1", "intervals", "length"], &rows)?;
    art.csv(&ctx.out, "windows.csv", &["delta1", "density", "density_lower", "excised", "tail_bound"], &window_rows)?;
    art.plot(&ctx.out, "density.dat", &["eta", "density", "density_lower"], &window_rows.iter().map(|r| vec![r[0], r[1], r[2]]).collect::<Vec<_>>())?;
    let summary = match &out.fit {
        Some(f) => format!("{} windows, exponent {:.4} (target {}), last density {:.6}", out.report.windows.len(), f.exponent, f.target, f.last_density),
        None => format!("{} windows, no exponent fit: {}", out.report.windows.len(), out.fit_error.as_deref().unwrap_or("")),
    };
    Ok(Outcome {
        artifacts: art,
        summary,
        success: out.fit.as_ref().is_some_and(|f| f.exponent_ok),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigReport {
    pub epsilon: f64,
    pub systems: Vec<EigenSystem>,
}

pub fn eig(scenario: &Scenario, ctx: &Context) -> Result<Outcome> {
    let RunSpec::Eig { ks, epsilon, a0, j_max } = &scenario.run else {
        return Err(crate::error::CliError::schema("run.kind", "expected `eig`"));
    };
    let systems = ks.iter().map(|&k| eigen_sk(k, *epsilon, a0, *j_max)).collect::<resonant_core::Result<Vec<_>>>()?;
    let rows: Vec<(i64, usize, f64, f64)> = systems
        .iter()
        .flat_map(|e| e.modes.iter().zip(&e.eigenvalues).map(move |(&j, &l)| (e.k, j, l, l - (j * j) as f64)))
        .collect();
    let mut art = Artifacts::default();
    let report = EigReport {
        epsilon: *epsilon,
        systems,
    };
    art.json(&ctx.out, "eig.json", "eig", &report)?;
    art.csv(&ctx.out, "eigenvalues.csv", &["k", "j", "lambda", "lambda_minus_j2"], &rows)?;
    let plot: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0 as f64, r.1 as f64, r.3]).collect();
    art.plot(&ctx.out, "lambda_minus_j2.dat", &["k", "j", "lambda_minus_j2"], &plot)?;
    Ok(Outcome {
        artifacts: art,
        summary: format!("{} eigenvalues for {} values of k", rows.len(), ks.len()),
        success: true,
    })
}

pub fn audit(scenario: &Scenario, ctx: &Context) -> Result<Outcome> {
    let RunSpec::Audit { epsilon, a0, l_max, j_max } = &scenario.run else {
        return Err(crate::error::CliError::schema("run.kind", "expected `audit`"));
    };
    let p = ctx.params(scenario);
    let omega = (1.0 + 2.0 * epsilon).sqrt();
    let eigs = eigensystems(*l_max, *epsilon, a0, *j_max)?;
    let report: SmallDivisorAudit = smalldivisor_audit(&eigs, omega, *epsilon, p.gamma, p.tau, p.s, BetaConvention::SmallDivisor, a0, 8)?;
    let mut art = Artifacts::default();
    art.json(&ctx.out, "audit.json", "audit", &report)?;
    art.csv(&ctx.out, "audit_rows.csv", &["k", "l", "alpha_k", "alpha_l", "bound", "ratio", "case"], &report.rows)?;
    let mut alpha = Vec::new();
    for (k, e) in &eigs {
        let (a, j) = alpha_k(e, omega, 8)?;
        alpha.push(vec![*k as f64, a, j as f64]);
    }
    art.plot(&ctx.out, "alpha.dat", &["k", "alpha_k", "j_k"], &alpha)?;
    Ok(Outcome {
        artifacts: art,
        summary: format!("{} pairs, fitted C {:.4e}, case counts {:?}", report.rows.len(), report.fitted_c, report.case_counts),
        success: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub preflight: Preflight,
    pub verdict: ParityVerdict,
    pub condition: ApCondition,
}

pub fn parity(scenario: &Scenario, pre: &Preflight, ctx: &Context) -> Result<Outcome> {
    let RunSpec::Parity { q, a } = &scenario.run else {
        return Err(crate::error::CliError::schema("run.kind", "expected `parity`"));
    };
    let spec = scenario.spec(pre)?;
    let a = a.clone().unwrap_or_else(|| spec.leading().clone());
    let verdict = parity_classify(&a, *q, STRUCTURAL_TOL)?;
    let condition = integral_condition_ap(spec.leading(), spec.p, 64, 4, ctx.seed)?;
    let summary = format!(
        "q = {q}: vanishes on V: {}; condition on a_{}: {}",
        verdict.vanishes_on_v, spec.p, condition.holds
    );
    let mut art = Artifacts::default();
    art.json(
        &ctx.out,
        "parity.json",
        "parity",
        &ParityReport {
            preflight: pre.clone(),
            verdict,
            condition,
        },
    )?;
    Ok(Outcome {
        artifacts: art,
        summary,
        success: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CriterionRow<'a> {
    id: u8,
    name: &'a str,
    passed: bool,
    summary: &'a str,
}

pub fn verify(ctx: &Context) -> Result<(Outcome, VerifyReport)> {
    let (report, bytes) = run_suite(ctx.seed)?;
    let mut art = Artifacts::default();
    let path = ctx.out.join("verify.json");
    crate::output::write_atomic(&path, &bytes)?;
    art.files.push(path);
    let rows: Vec<CriterionRow> = report
        .criteria
        .iter()
        .map(|c| CriterionRow {
            id: c.id,
            name: &c.name,
            passed: c.passed,
            summary: &c.summary,
        })
        .collect();
    art.csv(&ctx.out, "verify.csv", &["id", "name", "passed", "summary"], &rows)?;
    let passed = report.criteria.iter().filter(|c| c.passed).count();
    let outcome = Outcome {
        artifacts: art,
        summary: format!("{passed} of {} criteria passed", report.criteria.len()),
        success: report.all_passed(),
    };
    Ok((outcome, report))
}

/// Validates, runs the preflight and dispatches on the run kind.
pub fn run_scenario(scenario: &Scenario, ctx: &Context) -> Result<Outcome> {
    let pre = scenario.preflight()?;
    match scenario.run {
        RunSpec::Solve { .. } => solve(scenario, &pre, ctx),
        RunSpec::Scan { .. } => scan(scenario, &pre, ctx),
        RunSpec::Eig { .. } => eig(scenario, ctx),
        RunSpec::Audit { .. } => audit(scenario, ctx),
        RunSpec::Parity { .. } => parity(scenario, &pre, ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_points_still_get_rows() {
        let rows = branch_rows(&[0.01, 0.02], &[]);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.status == "not_reached"));
        let bytes = crate::output::csv_bytes(&BRANCH_HEADER, &rows).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 3);
    }

    #[test]
    fn run_kind_mismatch_is_a_schema_error() {
        let text = r#"
[nonlinearity]
p = 3
terms = { "3" = { c0 = 1.0 } }
[run]
kind = "parity"
q = 4
"#;
        let s = Scenario::from_toml(text).unwrap();
        let pre = s.preflight().unwrap();
        let ctx = Context {
            out: PathBuf::from("unused"),
            seed: 0,
            precision: None,
        };
        assert!(matches!(solve(&s, &pre, &ctx), Err(crate::error::CliError::Schema { .. })));
    }
}
