//! JSON experiment configuration: schema, defaults, dotted-path overrides
//! and the canonical content hash.
//!
//! The hash is taken over the canonicalized JSON value (sorted keys, no
//! insignificant whitespace), so it changes exactly when a semantically
//! meaningful field changes.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use shift_core::error::Error as CoreError;
use shift_core::estimators::{EstimatorSpec, SearchOptions};
use shift_core::experiments::{PriorSpec, ThetaPrior};
use shift_core::signal::{ParamDomain, SignalSpectrum, SobolevBall};
use shift_core::weights::{
    default_gamma, prior_variances, solve_bandwidth, AssumptionBParams, VarianceMode,
    WeightSequence,
};

/// Which experiment the front end runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Estimate,
    Risk,
    VerifyTheorem1,
    Weights,
    LowerBound,
    Sweep,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Estimate => "estimate",
            ExperimentKind::Risk => "risk",
            ExperimentKind::VerifyTheorem1 => "verify_theorem1",
            ExperimentKind::Weights => "weights",
            ExperimentKind::LowerBound => "lowerbound",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKindConfig {
    Full,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Fourier cosine coefficients of the signal.
    pub signal: Vec<f64>,
    /// True shift; omitted means the template default `eps / 2`.
    pub theta: Option<f64>,
    pub eps: f64,
    /// Noise levels for sweep-style experiments.
    pub eps_list: Vec<f64>,
    /// Observation truncation; omitted means the smallest admissible value.
    pub truncation: Option<usize>,
    /// Half-width of the shift domain.
    pub tau0: f64,
    /// Which sequence model the `simulate` experiment draws.
    pub observation: ObservationKindConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            signal: canonical_signal_coeffs(2.0, 1.0, 32),
            theta: None,
            eps: 0.05,
            eps_list: vec![0.2, 0.1, 0.05, 0.02],
            truncation: None,
            tau0: 0.2,
            observation: ObservationKindConfig::Full,
        }
    }
}

/// Canonical test signal: ellipsoid mass proportional to `k^{-4}`, scaled
/// onto the smoothness-constraint boundary of the `(beta, l)` ball.
pub fn canonical_signal_coeffs(beta: f64, l: f64, k_f: usize) -> Vec<f64> {
    let ball = SobolevBall::new(beta, l).expect("canonical ball");
    let profile: Vec<f64> = (1..=k_f).map(|k| (k as f64).powi(-4)).collect();
    SignalSpectrum::on_sobolev_boundary(&ball, &profile)
        .expect("canonical boundary signal")
        .coeffs()
        .to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsConfig {
    /// Indicator weights up to `cutoff`.
    Projection { cutoff: usize },
    /// Minimax shrinkage weights at the solved bandwidth.
    Pinsker,
    /// Pinsker weights with the all-pass head; `gamma` defaults to
    /// `1 / ln(eps^{-2})`.
    Corrected { gamma: Option<f64> },
    /// Explicit values, projected onto `[0, 1]`.
    Custom { values: Vec<f64> },
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig::Corrected { gamma: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKindConfig {
    OracleMl,
    AdaptiveContrast,
    LinearizedFull,
    LocalKnown,
    LocalNaive,
    LocalCorrected,
    LinearizedOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub reps: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            reps: 1000,
            seed: 1729,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BallConfig {
    pub beta: f64,
    pub l: f64,
}

impl Default for BallConfig {
    fn default() -> Self {
        BallConfig { beta: 2.0, l: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorVariancesConfig {
    /// Explicit per-coefficient variances.
    List { values: Vec<f64> },
    /// Truncated saddle variances derived from the ball at the model's
    /// noise level: zero on the all-pass head, `(1 - gamma) s_k^2` beyond.
    Truncated { gamma: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaPriorConfig {
    PointMass { theta: f64 },
    /// Cosine-squared prior; `tau0` defaults to the model domain.
    CosineSquared { tau0: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub fbar: Vec<f64>,
    pub sigma2: PriorVariancesConfig,
    pub theta_prior: ThetaPriorConfig,
}

/// Convention defaults; the regularity constants have no canonical values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssumptionBConfig {
    pub rho1: f64,
    pub c1: f64,
}

impl Default for AssumptionBConfig {
    fn default() -> Self {
        AssumptionBConfig {
            rho1: 1.0,
            c1: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub grid_points: usize,
    pub refine_tol: f64,
    pub refine_max_iter: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_points: 1024,
            refine_tol: 1e-10,
            refine_max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKindConfig>,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub prior: Option<PriorConfig>,
    #[serde(default)]
    pub ball: BallConfig,
    #[serde(default)]
    pub assumption_b: AssumptionBConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_estimators() -> Vec<EstimatorKindConfig> {
    vec![EstimatorKindConfig::AdaptiveContrast]
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            model: ModelConfig::default(),
            weights: WeightsConfig::default(),
            estimators: default_estimators(),
            mc: McConfig::default(),
            prior: None,
            ball: BallConfig::default(),
            assumption_b: AssumptionBConfig::default(),
            search: SearchConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config does not match the schema: {e}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Stable digest of the canonicalized configuration: whitespace and key
    /// order never matter, every meaningful field does.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        // serde_json maps are ordered (BTreeMap), so serializing the value
        // yields the canonical form.
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    /// Applies a `path.to.field=value` override. The value is parsed as
    /// JSON when possible and as a bare string otherwise.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), String> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| format!("override `{assignment}` is not of the form key=value"))?;
        let new_value: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));

        let mut tree = serde_json::to_value(&*self).expect("config serializes");
        let mut node = &mut tree;
        let segments: Vec<&str> = path.split('.').collect();
        for (i, segment) in segments.iter().enumerate() {
            let object = node.as_object_mut().ok_or_else(|| {
                format!("override path `{path}` descends into a non-object at `{segment}`")
            })?;
            if i + 1 == segments.len() {
                object.insert(segment.to_string(), new_value);
                break;
            }
            node = object
                .entry(segment.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
        }
        *self = serde_json::from_value(tree)
            .map_err(|e| format!("override `{assignment}` breaks the schema: {e}"))?;
        Ok(())
    }
}

/// A configuration resolved into core types, ready to run.
pub struct Resolved {
    pub domain: ParamDomain,
    pub ball: SobolevBall,
    pub signal: SignalSpectrum,
    pub theta: f64,
    pub search: SearchOptions,
    pub assumption_b: AssumptionBParams,
}

fn field_err(field: &str, e: CoreError) -> String {
    format!("{field}: {e}")
}

impl ExperimentConfig {
    /// Validates the scalar parts of the configuration and builds the core
    /// objects that do not depend on the noise level.
    pub fn resolve(&self) -> Result<Resolved, String> {
        let domain = ParamDomain::new(self.model.tau0).map_err(|e| field_err("model.tau0", e))?;
        let ball =
            SobolevBall::new(self.ball.beta, self.ball.l).map_err(|e| field_err("ball", e))?;
        let signal = SignalSpectrum::new(self.model.signal.clone())
            .map_err(|e| field_err("model.signal", e))?;
        let theta = self.model.theta.unwrap_or(self.model.eps / 2.0);
        if !(self.model.eps >= 0.0) || !self.model.eps.is_finite() {
            return Err(format!(
                "model.eps: must be finite and nonnegative, got {}",
                self.model.eps
            ));
        }
        let assumption_b = AssumptionBParams::new(self.assumption_b.rho1, self.assumption_b.c1)
            .map_err(|e| field_err("assumption_b", e))?;
        Ok(Resolved {
            domain,
            ball,
            signal,
            theta,
            search: SearchOptions {
                grid_points: self.search.grid_points,
                refine_tol: self.search.refine_tol,
                refine_max_iter: self.search.refine_max_iter,
            },
            assumption_b,
        })
    }

    /// Builds the configured weight sequence at noise level `eps`.
    /// Bandwidth-based kinds are recalibrated per noise level.
    pub fn build_weights(&self, eps: f64) -> Result<WeightSequence, CoreError> {
        let ball = SobolevBall::new(self.ball.beta, self.ball.l)?;
        match &self.weights {
            WeightsConfig::Projection { cutoff } => {
                let k = (*cutoff).max(self.model.signal.len());
                WeightSequence::projection(*cutoff, k)
            }
            WeightsConfig::Pinsker => {
                let sol = solve_bandwidth(&ball, eps, self.search.refine_tol.max(1e-12))?;
                WeightSequence::pinsker(&ball, sol.bandwidth, sol.bandwidth.ceil() as usize)
            }
            WeightsConfig::Corrected { gamma } => {
                let sol = solve_bandwidth(&ball, eps, self.search.refine_tol.max(1e-12))?;
                let gamma = match gamma {
                    Some(g) => *g,
                    None => default_gamma(eps)?,
                };
                WeightSequence::corrected(
                    &ball,
                    sol.bandwidth,
                    gamma,
                    sol.bandwidth.ceil() as usize,
                )
            }
            WeightsConfig::Custom { values } => WeightSequence::custom(values.clone()),
        }
    }

    /// Builds an estimator spec at noise level `eps`.
    pub fn build_estimator(
        &self,
        kind: EstimatorKindConfig,
        eps: f64,
    ) -> Result<EstimatorSpec, String> {
        let signal = || {
            SignalSpectrum::new(self.model.signal.clone()).map_err(|e| field_err("model.signal", e))
        };
        let weights = || self.build_weights(eps).map_err(|e| field_err("weights", e));
        Ok(match kind {
            EstimatorKindConfig::OracleMl => EstimatorSpec::OracleMl { signal: signal()? },
            EstimatorKindConfig::AdaptiveContrast => EstimatorSpec::AdaptiveContrast {
                weights: weights()?,
            },
            EstimatorKindConfig::LinearizedFull => EstimatorSpec::LinearizedFull {
                weights: weights()?,
            },
            EstimatorKindConfig::LocalKnown => EstimatorSpec::LocalKnown { signal: signal()? },
            EstimatorKindConfig::LocalNaive => EstimatorSpec::LocalNaive {
                weights: weights()?,
            },
            EstimatorKindConfig::LocalCorrected => EstimatorSpec::LocalCorrected {
                weights: weights()?,
            },
            EstimatorKindConfig::LinearizedOracle => EstimatorSpec::LinearizedOracle {
                weights: weights()?,
                signal: signal()?,
            },
        })
    }

    /// Builds the coefficient-and-shift prior at noise level `eps`.
    pub fn build_prior(&self, eps: f64) -> Result<PriorSpec, String> {
        let cfg = self
            .prior
            .as_ref()
            .ok_or_else(|| "prior: required for this experiment".to_string())?;
        let fbar =
            SignalSpectrum::new(cfg.fbar.clone()).map_err(|e| field_err("prior.fbar", e))?;
        let ball =
            SobolevBall::new(self.ball.beta, self.ball.l).map_err(|e| field_err("ball", e))?;
        let sigma2 = match &cfg.sigma2 {
            PriorVariancesConfig::List { values } => values.clone(),
            PriorVariancesConfig::Truncated { gamma } => {
                let sol = solve_bandwidth(&ball, eps, self.search.refine_tol.max(1e-12))
                    .map_err(|e| field_err("prior.sigma2", e))?;
                let gamma = match gamma {
                    Some(g) => *g,
                    None => default_gamma(eps).map_err(|e| field_err("prior.sigma2.gamma", e))?,
                };
                let q =
                    WeightSequence::pinsker(&ball, sol.bandwidth, sol.bandwidth.ceil() as usize)
                        .map_err(|e| field_err("prior.sigma2", e))?;
                prior_variances(
                    &q,
                    eps,
                    VarianceMode::Truncated {
                        gamma,
                        bandwidth: sol.bandwidth,
                    },
                )
                .map_err(|e| field_err("prior.sigma2", e))?
            }
        };
        let theta_prior = match &cfg.theta_prior {
            ThetaPriorConfig::PointMass { theta } => ThetaPrior::PointMass { theta: *theta },
            ThetaPriorConfig::CosineSquared { tau0 } => ThetaPrior::CosineSquared {
                tau0: tau0.unwrap_or(self.model.tau0),
            },
        };
        PriorSpec::new(fbar, sigma2, theta_prior).map_err(|e| field_err("prior", e))
    }

    /// Observation truncation covering the signal, the configured weights
    /// and (when present) the prior, at noise level `eps`.
    pub fn truncation(&self, eps: f64) -> Result<usize, String> {
        if let Some(k) = self.model.truncation {
            return Ok(k);
        }
        let mut k = self.model.signal.len();
        if let Ok(w) = self.build_weights(eps) {
            k = k.max(w.support());
        }
        if self.prior.is_some() {
            if let Ok(p) = self.build_prior(eps) {
                k = k.max(p.support());
            }
        }
        Ok(k)
    }
}
