//! Experiment orchestration: resolves a configuration, dispatches to the
//! core experiments through the parallel drivers, and emits CSV/JSON
//! outputs.

use std::path::PathBuf;

use serde_json::json;

use shift_core::error::Error as CoreError;
use shift_core::estimators::EstimatorSpec;
use shift_core::experiments::{
    van_trees_bound, verify_theorem1, BayesExperiment, RiskExperiment,
};
use shift_core::rng::RandomStream;
use shift_core::signal::{simulate, ObservationKind};
use shift_core::weights::{
    check_assumptions, default_gamma, prior_variances, risk_functional, solve_bandwidth,
    VarianceMode, WeightSequence,
};

use crate::config::{
    EstimatorKindConfig, ExperimentConfig, ExperimentKind, ObservationKindConfig, OutputFormat,
};
use crate::output::{
    atomic_write, bayes_report_rows, estimates_csv, observations_csv, risk_report_rows,
    summary_json, theorem1_csv, tidy_csv, weights_csv, RunSummary, TidyRow,
};
use crate::parallel;

/// Failure classes, mapped onto process exit codes.
#[derive(Debug)]
pub enum RunError {
    /// Configuration or contract violation (exit 1).
    Validation(String),
    /// The bandwidth solver did not converge (exit 2).
    Solver(String),
    /// Filesystem failure (exit 3).
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 1,
            RunError::Solver(_) => 2,
            RunError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(msg) => write!(f, "validation error: {msg}"),
            RunError::Solver(msg) => write!(f, "solver failure: {msg}"),
            RunError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::SolverFailure { .. } => RunError::Solver(e.to_string()),
            other => RunError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

fn validation(msg: String) -> RunError {
    // Bandwidth-solver failures surface through string contexts too.
    if msg.contains("bandwidth solver failed") {
        RunError::Solver(msg)
    } else {
        RunError::Validation(msg)
    }
}

/// What a run produced: one summary line per report plus the files written.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

struct Emitter<'a> {
    config: &'a ExperimentConfig,
    out: RunOutput,
    reports: Vec<serde_json::Value>,
    tidy: Vec<TidyRow>,
}

impl<'a> Emitter<'a> {
    fn new(config: &'a ExperimentConfig) -> Self {
        Emitter {
            config,
            out: RunOutput::default(),
            reports: Vec::new(),
            tidy: Vec::new(),
        }
    }

    fn wants(&self, format: OutputFormat) -> bool {
        self.config.output.formats.contains(&format)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.config.output.directory.join(name);
        atomic_write(&path, bytes)?;
        self.out.files.push(path);
        Ok(())
    }

    fn finish(mut self) -> Result<RunOutput, RunError> {
        if self.wants(OutputFormat::Csv) {
            let bytes = tidy_csv(&self.tidy);
            self.write("plot_data.csv", &bytes)?;
        }
        if self.wants(OutputFormat::Json) {
            let summary = RunSummary {
                config_hash: self.config.hash(),
                seed: self.config.mc.seed,
                reports: self.reports.clone(),
            };
            self.write("summary.json", &summary_json(&summary))?;
        }
        Ok(self.out)
    }
}

/// Executes the configured experiment on up to `threads` workers.
pub fn run(config: &ExperimentConfig, threads: usize) -> Result<RunOutput, RunError> {
    let resolved = config.resolve().map_err(validation)?;
    let mut emit = Emitter::new(config);
    let eps = config.model.eps;
    let seed = config.mc.seed;
    let reps = config.mc.reps;

    match config.experiment {
        ExperimentKind::Simulate => {
            let kind = match config.model.observation {
                ObservationKindConfig::Full => ObservationKind::Full,
                ObservationKindConfig::Local => ObservationKind::Local,
            };
            let truncation = config
                .truncation(eps)
                .map_err(validation)?
                .max(resolved.signal.support());
            let mut rows = Vec::new();
            for rep in 0..reps as u64 {
                let mut rng = RandomStream::replication(seed, rep);
                let obs = simulate(
                    &resolved.signal,
                    resolved.theta,
                    eps,
                    truncation,
                    kind,
                    &mut rng,
                )?;
                for (i, (a, b)) in obs.pairs.iter().enumerate() {
                    rows.push((rep, i + 1, *a, *b));
                }
            }
            if emit.wants(OutputFormat::Csv) {
                emit.write("observations.csv", &observations_csv(&rows))?;
            }
            emit.reports.push(json!({
                "experiment": "simulate",
                "eps": eps,
                "theta": resolved.theta,
                "replications": reps,
                "truncation": truncation,
            }));
            emit.out
                .lines
                .push(format!("simulate: {reps} observations at eps = {eps}"));
        }

        ExperimentKind::Estimate => {
            let truncation = config.truncation(eps).map_err(validation)?;
            let mut rows = Vec::new();
            for kind in &config.estimators {
                let estimator = config.build_estimator(*kind, eps).map_err(validation)?;
                let exp = RiskExperiment {
                    estimator,
                    signal: resolved.signal.clone(),
                    theta: resolved.theta,
                    eps,
                    truncation: truncation.max(resolved.signal.support()),
                    domain: resolved.domain,
                    search: resolved.search,
                };
                let outcomes =
                    parallel::run_indexed(reps, threads, |rep| exp.replicate(seed, rep))?;
                for (rep, o) in outcomes.iter().enumerate() {
                    rows.push((
                        rep as u64,
                        exp.estimator.id().to_string(),
                        o.estimate,
                        o.degenerate,
                    ));
                }
                emit.out.lines.push(format!(
                    "estimate {}: {} replications",
                    exp.estimator.id(),
                    reps
                ));
            }
            if emit.wants(OutputFormat::Csv) {
                emit.write("estimates.csv", &estimates_csv(&rows))?;
            }
            emit.reports.push(json!({
                "experiment": "estimate",
                "eps": eps,
                "theta": resolved.theta,
                "replications": reps,
            }));
        }

        ExperimentKind::Risk => {
            let truncation = config.truncation(eps).map_err(validation)?;
            for kind in &config.estimators {
                let estimator = config.build_estimator(*kind, eps).map_err(validation)?;
                let exp = RiskExperiment {
                    estimator,
                    signal: resolved.signal.clone(),
                    theta: resolved.theta,
                    eps,
                    truncation: truncation.max(resolved.signal.support()),
                    domain: resolved.domain,
                    search: resolved.search,
                };
                let report = parallel::mc_risk(&exp, reps, seed, threads)?;
                emit.out.lines.push(format!(
                    "risk {}: {:.6} +/- {:.6} ({} degenerate of {})",
                    report.estimator,
                    report.mean_sq_normalized,
                    report.std_err,
                    report.degenerate_count,
                    report.reps
                ));
                emit.tidy.extend(risk_report_rows("risk", eps, &report));
                emit.reports.push(json!({
                    "experiment": "risk",
                    "estimator": report.estimator,
                    "eps": eps,
                    "mean_sq_normalized": report.mean_sq_normalized,
                    "std_err": report.std_err,
                    "reps": report.reps,
                    "degenerate_count": report.degenerate_count,
                    "seed": report.seed,
                }));
            }
        }

        ExperimentKind::VerifyTheorem1 => {
            let weights = config.build_weights(eps)?;
            let truncation = config
                .truncation(eps)
                .map_err(validation)?
                .max(weights.support())
                .max(resolved.signal.support());
            let report = check_assumptions(
                &weights,
                eps,
                &resolved.assumption_b,
                &resolved.signal,
            );
            let rows = verify_theorem1(
                &resolved.signal,
                &weights,
                resolved.theta,
                &config.model.eps_list,
                truncation,
                resolved.domain,
                resolved.search,
                reps,
                seed,
            )?;
            for row in &rows {
                emit.out.lines.push(format!(
                    "theorem1 eps = {}: mc {:.4}, predicted {:.4}, excess ratio {:.3}",
                    row.eps, row.mc_risk, row.predicted, row.excess_ratio
                ));
                emit.tidy.push(TidyRow {
                    experiment: "verify_theorem1".into(),
                    eps: row.eps,
                    estimator: "adaptive_contrast".into(),
                    metric: "excess_ratio".into(),
                    value: row.excess_ratio,
                    std_err: Some(row.std_err),
                });
            }
            if emit.wants(OutputFormat::Csv) {
                emit.write("theorem1.csv", &theorem1_csv(&rows))?;
            }
            emit.reports.push(json!({
                "experiment": "verify_theorem1",
                "assumption_b0": report.b0,
                "assumption_b1": report.b1,
                "assumption_b2": report.b2,
                "assumption_c_ratio": report.c_ratio,
                "rows": rows.iter().map(|r| json!({
                    "eps": r.eps,
                    "mc_risk": r.mc_risk,
                    "predicted": r.predicted,
                    "excess_ratio": r.excess_ratio,
                    "std_err": r.std_err,
                })).collect::<Vec<_>>(),
            }));
        }

        ExperimentKind::Weights => {
            let sol = solve_bandwidth(&resolved.ball, eps, config.search.refine_tol.max(1e-12))?;
            let k_max = sol.bandwidth.ceil() as usize;
            let q = WeightSequence::pinsker(&resolved.ball, sol.bandwidth, k_max)?;
            let gamma = match &config.weights {
                crate::config::WeightsConfig::Corrected { gamma: Some(g) } => *g,
                _ => default_gamma(eps)?,
            };
            let lambda = WeightSequence::corrected(&resolved.ball, sol.bandwidth, gamma, k_max)?;
            let s2 = prior_variances(&q, eps, VarianceMode::Saddle)?;
            let rows: Vec<(usize, f64, f64, f64)> = (1..=k_max)
                .map(|k| (k, q.get(k), lambda.get(k), s2[k - 1]))
                .collect();
            if emit.wants(OutputFormat::Csv) {
                emit.write("weights.csv", &weights_csv(sol.bandwidth, &rows))?;
            }
            let minimax = shift_core::weights::minimax_value(
                &resolved.ball,
                eps,
                config.search.refine_tol.max(1e-12),
            )?;
            emit.reports.push(json!({
                "experiment": "weights",
                "eps": eps,
                "bandwidth": sol.bandwidth,
                "residual": sol.residual,
                "iterations": sol.iterations,
                "gamma": gamma,
                "minimax_exact": minimax.exact,
                "minimax_asymptotic": minimax.asymptotic,
                "minimax_constant": minimax.constant,
                "weights": {
                    "kind": "corrected",
                    "parameters": { "beta": resolved.ball.beta(), "l": resolved.ball.radius(),
                                     "bandwidth": sol.bandwidth, "gamma": gamma },
                    "values": lambda.values(),
                },
            }));
            emit.out.lines.push(format!(
                "weights: W = {:.6} (residual {:.3e}, {} iterations), gamma = {:.4}",
                sol.bandwidth, sol.residual, sol.iterations, gamma
            ));
        }

        ExperimentKind::LowerBound => {
            let prior = config.build_prior(eps).map_err(validation)?;
            let bound = van_trees_bound(&prior, eps)?;
            let truncation = config
                .truncation(eps)
                .map_err(validation)?
                .max(prior.support());
            emit.out.lines.push(format!(
                "lowerbound: raw {:.6}, expanded {:.6}, mean info {:.3}",
                bound.raw, bound.expanded, bound.mean_info
            ));
            emit.reports.push(json!({
                "experiment": "lowerbound",
                "eps": eps,
                "bound_raw": bound.raw,
                "bound_expanded": bound.expanded,
                "mean_info": bound.mean_info,
            }));
            for kind in &config.estimators {
                let estimator = config.build_estimator(*kind, eps).map_err(validation)?;
                let exp = BayesExperiment {
                    estimator,
                    prior: prior.clone(),
                    eps,
                    truncation,
                    domain: resolved.domain,
                    search: resolved.search,
                };
                let report = parallel::bayes_risk(&exp, reps, seed, threads)?;
                emit.out.lines.push(format!(
                    "bayes {}: {:.6} +/- {:.6} (bound {:.6})",
                    report.estimator, report.bayes_risk_normalized, report.std_err, report.bound
                ));
                emit.tidy.extend(bayes_report_rows("lowerbound", eps, &report));
                emit.reports.push(json!({
                    "experiment": "lowerbound",
                    "estimator": report.estimator,
                    "eps": eps,
                    "bayes_risk_normalized": report.bayes_risk_normalized,
                    "std_err": report.std_err,
                    "risk_fisher_normalized": report.risk_fisher_normalized,
                    "std_err_fisher": report.std_err_fisher,
                    "bound": report.bound,
                    "reps": report.reps,
                    "degenerate_count": report.degenerate_count,
                    "seed": report.seed,
                }));
            }
        }

        ExperimentKind::Sweep => {
            let eps_list = config.model.eps_list.clone();
            if eps_list.is_empty() {
                return Err(RunError::Validation(
                    "model.eps_list: a sweep needs at least one noise level".into(),
                ));
            }
            for &sweep_eps in &eps_list {
                let truncation = config.truncation(sweep_eps).map_err(validation)?;
                for kind in &config.estimators {
                    let estimator =
                        config.build_estimator(*kind, sweep_eps).map_err(validation)?;
                    let theta = config.model.theta.unwrap_or(sweep_eps / 2.0);
                    let exp = RiskExperiment {
                        estimator,
                        signal: resolved.signal.clone(),
                        theta,
                        eps: sweep_eps,
                        truncation: truncation.max(resolved.signal.support()),
                        domain: resolved.domain,
                        search: resolved.search,
                    };
                    let report = parallel::mc_risk(&exp, reps, seed, threads)?;
                    emit.out.lines.push(format!(
                        "sweep eps = {} {}: {:.6} +/- {:.6}",
                        sweep_eps, report.estimator, report.mean_sq_normalized, report.std_err
                    ));
                    emit.tidy
                        .extend(risk_report_rows("sweep", sweep_eps, &report));
                    emit.reports.push(json!({
                        "experiment": "sweep",
                        "estimator": report.estimator,
                        "eps": sweep_eps,
                        "mean_sq_normalized": report.mean_sq_normalized,
                        "std_err": report.std_err,
                        "reps": report.reps,
                        "degenerate_count": report.degenerate_count,
                        "seed": report.seed,
                    }));
                }
            }
        }
    }

    emit.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ExperimentKind};

    fn quick_config(kind: ExperimentKind, dir: &std::path::Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(kind);
        config.model.signal = vec![1.0, 0.4];
        config.mc.reps = 200;
        config.output.directory = dir.to_path_buf();
        config
    }

    #[test]
    fn risk_run_writes_plot_data_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = quick_config(ExperimentKind::Risk, dir.path());
        config.weights = crate::config::WeightsConfig::Projection { cutoff: 2 };
        let out = run(&config, 1).unwrap();
        assert!(dir.path().join("plot_data.csv").exists());
        assert!(dir.path().join("summary.json").exists());
        assert!(!out.lines.is_empty());

        let summary: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary["config_hash"], serde_json::json!(config.hash()));
        assert_eq!(summary["seed"], serde_json::json!(config.mc.seed));
    }

    #[test]
    fn weights_run_emits_the_table() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = quick_config(ExperimentKind::Weights, dir.path());
        config.model.eps = 0.01;
        run(&config, 1).unwrap();
        let text = std::fs::read_to_string(dir.path().join("weights.csv")).unwrap();
        assert!(text.starts_with("# W_eps = "));
        assert!(text.lines().nth(1).unwrap().starts_with("k,q_k,lambda_star_k,s_k2"));
    }

    #[test]
    fn invalid_tau0_maps_to_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = quick_config(ExperimentKind::Risk, dir.path());
        config.model.tau0 = 0.3;
        match run(&config, 1) {
            Err(e) => {
                assert_eq!(e.exit_code(), 1);
                let msg = e.to_string();
                assert!(msg.contains("model.tau0"), "{msg}");
            }
            Ok(_) => panic!("expected validation failure"),
        }
    }

    #[test]
    fn lowerbound_requires_a_prior() {
        let dir = tempfile::tempdir().unwrap();
        let config = quick_config(ExperimentKind::LowerBound, dir.path());
        match run(&config, 1) {
            Err(e) => assert_eq!(e.exit_code(), 1),
            Ok(_) => panic!("expected validation failure"),
        }
    }

    #[test]
    fn runs_are_deterministic_across_thread_counts() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut config_a = quick_config(ExperimentKind::Sweep, dir_a.path());
        config_a.model.eps_list = vec![0.1, 0.05];
        config_a.weights = crate::config::WeightsConfig::Projection { cutoff: 2 };
        let mut config_b = config_a.clone();
        config_b.output.directory = dir_b.path().to_path_buf();

        run(&config_a, 1).unwrap();
        run(&config_b, 3).unwrap();
        let a = std::fs::read(dir_a.path().join("plot_data.csv")).unwrap();
        let b = std::fs::read(dir_b.path().join("plot_data.csv")).unwrap();
        assert_eq!(a, b);
    }
}
