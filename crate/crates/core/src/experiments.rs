//! Seeded Monte Carlo risk evaluation, Gaussian priors on the signal
//! coefficients, block Fisher information and Van Trees lower bounds.
//!
//! Every experiment is a pure function of `(configuration, seed)`.
//! Replication `rep` always owns the stream `(seed, rep)` and consumes it in
//! a fixed order (prior draws first, then noise in coefficient order), so
//! per-replication results are independent of scheduling; aggregation folds
//! the outcomes in replication-index order. Running the same experiment
//! with any worker layout therefore reproduces the report bit for bit.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorSpec, SearchOptions};
use crate::rng::RandomStream;
use crate::signal::{check_vicinity, omega, ParamDomain, SignalSpectrum, SobolevBall};
use crate::weights::{risk_functional, WeightSequence};

use alloc::format;
use alloc::string::ToString;
use core::f64::consts::PI;

/// Prior on the shift parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaPrior {
    /// Degenerate prior at a fixed shift. Its Fisher information is
    /// infinite, so it cannot feed the Van Trees bound.
    PointMass { theta: f64 },
    /// Density `cos^2(pi x / (2 tau0)) / tau0` on `[-tau0, tau0]`; vanishes
    /// smoothly at the endpoints with prior Fisher information
    /// `(pi / tau0)^2`.
    CosineSquared { tau0: f64 },
}

impl ThetaPrior {
    pub fn validate(&self) -> Result<()> {
        match self {
            ThetaPrior::PointMass { theta } => {
                if !theta.is_finite() {
                    return Err(Error::invalid("point-mass shift must be finite"));
                }
            }
            ThetaPrior::CosineSquared { tau0 } => {
                ParamDomain::new(*tau0)?;
            }
        }
        Ok(())
    }

    /// Prior Fisher information `int (pi')^2 / pi`.
    pub fn fisher_information(&self) -> Result<f64> {
        match self {
            ThetaPrior::PointMass { .. } => Err(Error::invalid(
                "a point-mass shift prior has infinite Fisher information",
            )),
            ThetaPrior::CosineSquared { tau0 } => Ok((PI / tau0) * (PI / tau0)),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            ThetaPrior::PointMass { .. } => {
                if x.is_finite() {
                    0.0
                } else {
                    f64::NAN
                }
            }
            ThetaPrior::CosineSquared { tau0 } => {
                if x.abs() > *tau0 {
                    0.0
                } else {
                    let c = (PI * x / (2.0 * tau0)).cos();
                    c * c / tau0
                }
            }
        }
    }

    /// Closed-form CDF of the cosine-squared prior;
    /// `F(x) = (x + tau0)/(2 tau0) + sin(pi x / tau0)/(2 pi)` on the support.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ThetaPrior::PointMass { theta } => {
                if x >= *theta {
                    1.0
                } else {
                    0.0
                }
            }
            ThetaPrior::CosineSquared { tau0 } => {
                if x <= -tau0 {
                    0.0
                } else if x >= *tau0 {
                    1.0
                } else {
                    (x + tau0) / (2.0 * tau0) + (PI * x / tau0).sin() / (2.0 * PI)
                }
            }
        }
    }

    /// Inverse-CDF sampling; the cosine-squared case bisects the monotone
    /// closed-form CDF.
    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        match self {
            ThetaPrior::PointMass { theta } => *theta,
            ThetaPrior::CosineSquared { tau0 } => {
                let u = rng.uniform();
                let (mut lo, mut hi) = (-*tau0, *tau0);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

/// Independent Gaussian prior `N(fbar_k, sigma_k^2)` on each coefficient
/// plus a prior on the shift. A zero variance pins the coefficient to its
/// mean; `sigma2` may be longer than the mean spectrum (zero-padded means)
/// or shorter (zero-padded variances).
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub fbar: SignalSpectrum,
    pub sigma2: Vec<f64>,
    pub theta_prior: ThetaPrior,
}

impl PriorSpec {
    pub fn new(fbar: SignalSpectrum, sigma2: Vec<f64>, theta_prior: ThetaPrior) -> Result<Self> {
        if sigma2.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid("prior variances must be finite and nonnegative"));
        }
        theta_prior.validate()?;
        Ok(PriorSpec {
            fbar,
            sigma2,
            theta_prior,
        })
    }

    /// Number of coefficients the prior describes.
    pub fn support(&self) -> usize {
        self.fbar.support().max(self.sigma2.len())
    }

    pub fn variance(&self, k: usize) -> f64 {
        if k >= 1 {
            self.sigma2.get(k - 1).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }
}

/// Draws `(f, theta)` from the prior. Consumes one normal per coefficient
/// (even where the variance is zero, keeping the stream layout fixed) and
/// then whatever the shift prior needs.
pub fn sample_prior(prior: &PriorSpec, rng: &mut RandomStream) -> (SignalSpectrum, f64) {
    let support = prior.support();
    let mut coeffs = Vec::with_capacity(support);
    for k in 1..=support {
        let eta = rng.standard_normal();
        coeffs.push(prior.fbar.coeff(k) + prior.variance(k).sqrt() * eta);
    }
    let f = SignalSpectrum::new(coeffs).expect("prior draws are finite");
    let theta = prior.theta_prior.sample(rng);
    (f, theta)
}

/// Monte Carlo estimate of a normalized quadratic risk.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub estimator: String,
    pub mean_sq_normalized: f64,
    pub std_err: f64,
    pub reps: usize,
    pub degenerate_count: usize,
    pub seed: u64,
}

/// One replication outcome of a fixed-signal risk experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replicate {
    pub estimate: f64,
    pub sq_err_normalized: f64,
    pub degenerate: bool,
}

/// A fixed-signal, fixed-shift Monte Carlo risk experiment.
#[derive(Debug, Clone)]
pub struct RiskExperiment {
    pub estimator: EstimatorSpec,
    pub signal: SignalSpectrum,
    pub theta: f64,
    pub eps: f64,
    pub truncation: usize,
    pub domain: ParamDomain,
    pub search: SearchOptions,
}

impl RiskExperiment {
    /// Risk normalizer: the Fisher information of the signal at this noise
    /// level. The noiseless case has no finite information; estimates are
    /// exact there and the raw squared error is reported (normalizer 1).
    pub fn normalizer(&self) -> Result<f64> {
        if self.eps == 0.0 {
            return Ok(1.0);
        }
        let info = self.signal.fisher_info(self.eps)?;
        if !(info > 0.0) {
            return Err(Error::invalid(
                "the zero signal carries no shift information; risk normalization is undefined",
            ));
        }
        Ok(info)
    }

    /// Runs replication `rep` of the experiment keyed by `seed`.
    /// Degenerate estimates are clamped to the domain and flagged.
    pub fn replicate(&self, seed: u64, rep: u64) -> Result<Replicate> {
        let normalizer = self.normalizer()?;
        let mut rng = RandomStream::replication(seed, rep);
        let obs = crate::signal::simulate(
            &self.signal,
            self.theta,
            self.eps,
            self.truncation,
            self.estimator.expected_kind(),
            &mut rng,
        )?;
        let (value, degenerate) = match estimate(&self.estimator, &obs, &self.domain, &self.search)
        {
            Ok(v) => (v, false),
            Err(Error::Degenerate { raw }) => (self.domain.clamp(raw), true),
            Err(e) => return Err(e),
        };
        let d = value - self.theta;
        Ok(Replicate {
            estimate: value,
            sq_err_normalized: d * d * normalizer,
            degenerate,
        })
    }
}

/// Index-ordered reduction of replication outcomes into a report.
pub fn summarize_risk(
    estimator: &str,
    seed: u64,
    outcomes: &[Replicate],
) -> RiskReport {
    let n = outcomes.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut degenerate_count = 0usize;
    for o in outcomes {
        sum += o.sq_err_normalized;
        sum_sq += o.sq_err_normalized * o.sq_err_normalized;
        if o.degenerate {
            degenerate_count += 1;
        }
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    RiskReport {
        estimator: estimator.to_string(),
        mean_sq_normalized: mean,
        std_err: (var / nf).sqrt(),
        reps: n,
        degenerate_count,
        seed,
    }
}

/// Serial Monte Carlo risk: `reps` independent replications of the
/// experiment, reduced in replication order.
pub fn mc_risk(exp: &RiskExperiment, reps: usize, seed: u64) -> Result<RiskReport> {
    if reps < 100 {
        return Err(Error::invalid(format!(
            "risk experiments need at least 100 replications, got {reps}"
        )));
    }
    let mut outcomes = Vec::with_capacity(reps);
    for rep in 0..reps as u64 {
        outcomes.push(exp.replicate(seed, rep)?);
    }
    Ok(summarize_risk(exp.estimator.id(), seed, &outcomes))
}

/// One row of the second-order expansion check.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Row {
    pub eps: f64,
    pub mc_risk: f64,
    pub predicted: f64,
    pub excess_ratio: f64,
    pub std_err: f64,
    pub degenerate_count: usize,
}

/// Runs the contrast maximizer at each noise level and compares its Monte
/// Carlo risk with the second-order prediction
/// `1 + R[f, h] / ||f'||^2`; `excess_ratio` is the ratio of measured to
/// predicted excess over 1.
#[allow(clippy::too_many_arguments)]
pub fn verify_theorem1(
    f: &SignalSpectrum,
    h: &WeightSequence,
    theta: f64,
    eps_list: &[f64],
    truncation: usize,
    domain: ParamDomain,
    search: SearchOptions,
    reps: usize,
    seed: u64,
) -> Result<Vec<Theorem1Row>> {
    let deriv_sq = f.norms().deriv_sq;
    if !(deriv_sq > 0.0) {
        return Err(Error::invalid("theorem-1 check needs a nonzero signal"));
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let exp = RiskExperiment {
            estimator: EstimatorSpec::AdaptiveContrast {
                weights: h.clone(),
            },
            signal: f.clone(),
            theta,
            eps,
            truncation,
            domain,
            search,
        };
        let report = mc_risk(&exp, reps, seed)?;
        let predicted = 1.0 + risk_functional(f, h, eps) / deriv_sq;
        let excess_ratio = (report.mean_sq_normalized - 1.0) / (predicted - 1.0);
        rows.push(Theorem1Row {
            eps,
            mc_risk: report.mean_sq_normalized,
            predicted,
            excess_ratio,
            std_err: report.std_err,
            degenerate_count: report.degenerate_count,
        });
    }
    Ok(rows)
}

/// Empirical fraction of prior draws that leave the vicinity
/// `{ ||f - fbar|| <= delta, f - fbar in the Sobolev ball }`.
pub fn membership_rate(
    prior: &PriorSpec,
    delta: f64,
    ball: &SobolevBall,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    if reps < 1000 {
        return Err(Error::invalid(format!(
            "membership-rate estimation needs at least 1000 draws, got {reps}"
        )));
    }
    let mut outside = 0usize;
    for rep in 0..reps as u64 {
        let mut rng = RandomStream::replication(seed, rep);
        let (f, _) = sample_prior(prior, &mut rng);
        if !check_vicinity(&f, &prior.fbar, delta, ball) {
            outside += 1;
        }
    }
    Ok(outside as f64 / reps as f64)
}

/// Fisher information about the shift carried by one frequency block when
/// the coefficient has a Gaussian prior `N(fbar, sigma2)`:
/// `eps^{-2} (fbar^2 + sigma2^2/(eps^2 + sigma2)) (2 pi k)^2`.
/// Independent of the shift, and even in the sign of `k`.
pub fn block_fisher_info(fbar_k: f64, sigma2_k: f64, eps: f64, k: i64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !(sigma2_k >= 0.0) || !sigma2_k.is_finite() {
        return Err(Error::invalid("prior variance must be finite and nonnegative"));
    }
    let w = 2.0 * PI * k as f64;
    Ok((fbar_k * fbar_k + sigma2_k * sigma2_k / (eps * eps + sigma2_k)) * w * w / (eps * eps))
}

/// Shift-dependent part of the marginal log-density of one frequency block
/// under the Gaussian coefficient prior:
/// `lambda y^2 / (2 eps^2) + (1 - lambda) fbar y / eps^2` with
/// `y = x cos(2 pi k theta) + x* sin(2 pi k theta)` and
/// `lambda = sigma2 / (eps^2 + sigma2)`. Valid for `sigma2 = 0` as well.
/// Used as the finite-difference oracle for [`block_fisher_info`].
pub fn block_marginal_loglik(
    fbar_k: f64,
    sigma2_k: f64,
    eps: f64,
    k: i64,
    theta: f64,
    x: f64,
    x_star: f64,
) -> f64 {
    let lambda = sigma2_k / (eps * eps + sigma2_k);
    let phase = 2.0 * PI * k as f64 * theta;
    let y = x * phase.cos() + x_star * phase.sin();
    lambda * y * y / (2.0 * eps * eps) + (1.0 - lambda) * fbar_k * y / (eps * eps)
}

/// The Van Trees lower bound on the normalized Bayes risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanTreesBound {
    /// `Ibar / (J + I_pi)`: mean information over total information plus
    /// the prior's. A valid lower bound at every noise level.
    pub raw: f64,
    /// Expanded form `1 + (sum (2 pi k)^2 lambda_k - I_pi) / Ibar`;
    /// never exceeds `raw`.
    pub expanded: f64,
    /// Mean Fisher information `Ibar = eps^{-2} sum (2 pi k)^2 (fbar_k^2 + sigma_k^2)`.
    pub mean_info: f64,
}

/// Computes the Van Trees bound for a Gaussian coefficient prior and a
/// smooth shift prior. Requires a shift prior with finite Fisher
/// information.
pub fn van_trees_bound(prior: &PriorSpec, eps: f64) -> Result<VanTreesBound> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let i_pi = prior.theta_prior.fisher_information()?;
    let mut info_sum = 0.0;
    let mut mean_info = 0.0;
    let mut shrink_sum = 0.0;
    for k in 1..=prior.support() {
        let fb = prior.fbar.coeff(k);
        let s2 = prior.variance(k);
        info_sum += block_fisher_info(fb, s2, eps, k as i64)?;
        let w2 = omega(k) * omega(k);
        mean_info += w2 * (fb * fb + s2) / (eps * eps);
        shrink_sum += w2 * s2 / (eps * eps + s2);
    }
    if !(mean_info > 0.0) {
        return Err(Error::invalid("prior carries no shift information"));
    }
    Ok(VanTreesBound {
        raw: mean_info / (info_sum + i_pi),
        expanded: 1.0 + (shrink_sum - i_pi) / mean_info,
        mean_info,
    })
}

/// One replication outcome of a Bayes risk experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesReplicate {
    /// Squared error, not yet normalized.
    pub sq_err: f64,
    /// Squared error times the drawn signal's Fisher information.
    pub sq_err_fisher: f64,
    pub degenerate: bool,
}

/// Monte Carlo Bayes risk report. The primary normalization multiplies by
/// the mean information `Ibar`; the secondary one uses the drawn signal's
/// own Fisher information and is reported for transparency.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesRiskReport {
    pub estimator: String,
    pub bayes_risk_normalized: f64,
    pub std_err: f64,
    pub risk_fisher_normalized: f64,
    pub std_err_fisher: f64,
    pub bound: f64,
    pub reps: usize,
    pub degenerate_count: usize,
    pub seed: u64,
}

/// A Bayes risk experiment: `(f, theta)` drawn from the prior each
/// replication, then one observation simulated and estimated.
#[derive(Debug, Clone)]
pub struct BayesExperiment {
    pub estimator: EstimatorSpec,
    pub prior: PriorSpec,
    pub eps: f64,
    pub truncation: usize,
    pub domain: ParamDomain,
    pub search: SearchOptions,
}

impl BayesExperiment {
    /// Runs replication `rep`. Oracle estimators receive the drawn signal.
    pub fn replicate(&self, seed: u64, rep: u64) -> Result<BayesReplicate> {
        let mut rng = RandomStream::replication(seed, rep);
        let (f, theta) = sample_prior(&self.prior, &mut rng);
        let spec = if self.estimator.is_oracle() {
            self.estimator.with_signal(f.clone())
        } else {
            self.estimator.clone()
        };
        let obs = crate::signal::simulate(
            &f,
            theta,
            self.eps,
            self.truncation,
            spec.expected_kind(),
            &mut rng,
        )?;
        let (value, degenerate) = match estimate(&spec, &obs, &self.domain, &self.search) {
            Ok(v) => (v, false),
            Err(Error::Degenerate { raw }) => (self.domain.clamp(raw), true),
            Err(e) => return Err(e),
        };
        let d = value - theta;
        Ok(BayesReplicate {
            sq_err: d * d,
            sq_err_fisher: d * d * f.fisher_info(self.eps)?,
            degenerate,
        })
    }
}

/// Index-ordered reduction of Bayes replications.
pub fn summarize_bayes(
    estimator: &str,
    seed: u64,
    mean_info: f64,
    bound: f64,
    outcomes: &[BayesReplicate],
) -> BayesRiskReport {
    let n = outcomes.len();
    let nf = n as f64;
    let mut s = [0.0f64; 2];
    let mut ss = [0.0f64; 2];
    let mut degenerate_count = 0usize;
    for o in outcomes {
        let a = o.sq_err * mean_info;
        s[0] += a;
        ss[0] += a * a;
        s[1] += o.sq_err_fisher;
        ss[1] += o.sq_err_fisher * o.sq_err_fisher;
        if o.degenerate {
            degenerate_count += 1;
        }
    }
    let stats = |sum: f64, sum_sq: f64| {
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / nf).sqrt())
    };
    let (mean, se) = stats(s[0], ss[0]);
    let (mean_fisher, se_fisher) = stats(s[1], ss[1]);
    BayesRiskReport {
        estimator: estimator.to_string(),
        bayes_risk_normalized: mean,
        std_err: se,
        risk_fisher_normalized: mean_fisher,
        std_err_fisher: se_fisher,
        bound,
        reps: n,
        degenerate_count,
        seed,
    }
}

/// Serial Bayes risk experiment with the Van Trees bound attached.
pub fn bayes_risk_experiment(
    exp: &BayesExperiment,
    reps: usize,
    seed: u64,
) -> Result<BayesRiskReport> {
    if reps < 100 {
        return Err(Error::invalid(format!(
            "risk experiments need at least 100 replications, got {reps}"
        )));
    }
    let bound = van_trees_bound(&exp.prior, exp.eps)?;
    let mut outcomes = Vec::with_capacity(reps);
    for rep in 0..reps as u64 {
        outcomes.push(exp.replicate(seed, rep)?);
    }
    Ok(summarize_bayes(
        exp.estimator.id(),
        seed,
        bound.mean_info,
        bound.raw,
        &outcomes,
    ))
}
