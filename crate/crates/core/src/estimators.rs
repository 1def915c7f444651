//! Shift estimators over sequence observations: the weighted contrast
//! function and its maximizer, plug-in ratio estimators for the local
//! model, and the linearized diagnostics with their closed-form risks.
//!
//! For a full-model observation `(x_k, x_k*)` the contrast is
//!
//! ```text
//! L(tau) = sum_k h_k ( x_k cos(2 pi k tau) + x_k* sin(2 pi k tau) )^2,
//! ```
//!
//! a trigonometric polynomial whose global maximizer over the parameter
//! interval defines the adaptive estimator. The maximizer is located by an
//! exhaustive grid scan (at least 16 samples per shortest contrast period)
//! followed by golden-section refinement inside the bracketing cell.

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::signal::{omega, ObservationKind, ParamDomain, SequenceObservation, SignalSpectrum};
use crate::weights::WeightSequence;

/// Controls for the grid-then-refine search.
///
/// The effective grid never drops below `16 * K_h` points (the contrast has
/// frequencies up to `2 K_h` cycles per unit, so this keeps at least eight
/// samples per shortest period); `grid_points` only ever raises it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub grid_points: usize,
    pub refine_tol: f64,
    pub refine_max_iter: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_points: 1024,
            refine_tol: 1e-10,
            refine_max_iter: 200,
        }
    }
}

/// An estimator together with everything it is allowed to know.
///
/// Kinds that carry a [`SignalSpectrum`] or read the simulated true shift
/// are oracles; feasible estimators see only the observation and a weight
/// sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    /// Maximum likelihood with the signal known (full model).
    OracleMl { signal: SignalSpectrum },
    /// Maximizer of the weighted contrast (full model).
    AdaptiveContrast { weights: WeightSequence },
    /// Linearized root of the contrast equation around zero (full model).
    LinearizedFull { weights: WeightSequence },
    /// Least squares with the signal known (local model).
    LocalKnown { signal: SignalSpectrum },
    /// Plug-in ratio with squared weights and biased denominator (local model).
    LocalNaive { weights: WeightSequence },
    /// Plug-in ratio with the unbiased denominator correction (local model).
    LocalCorrected { weights: WeightSequence },
    /// Exact linearization around the true shift; diagnostic only (full model).
    LinearizedOracle {
        weights: WeightSequence,
        signal: SignalSpectrum,
    },
}

impl EstimatorSpec {
    /// True for kinds that read the signal or the simulated true shift.
    pub fn is_oracle(&self) -> bool {
        matches!(
            self,
            EstimatorSpec::OracleMl { .. }
                | EstimatorSpec::LocalKnown { .. }
                | EstimatorSpec::LinearizedOracle { .. }
        )
    }

    /// Stable identifier used in reports and CSV output.
    pub fn id(&self) -> &'static str {
        match self {
            EstimatorSpec::OracleMl { .. } => "oracle_ml",
            EstimatorSpec::AdaptiveContrast { .. } => "adaptive_contrast",
            EstimatorSpec::LinearizedFull { .. } => "linearized_full",
            EstimatorSpec::LocalKnown { .. } => "local_known",
            EstimatorSpec::LocalNaive { .. } => "local_naive",
            EstimatorSpec::LocalCorrected { .. } => "local_corrected",
            EstimatorSpec::LinearizedOracle { .. } => "linearized_oracle",
        }
    }

    /// Observation model this estimator consumes.
    pub fn expected_kind(&self) -> ObservationKind {
        match self {
            EstimatorSpec::LocalKnown { .. }
            | EstimatorSpec::LocalNaive { .. }
            | EstimatorSpec::LocalCorrected { .. } => ObservationKind::Local,
            _ => ObservationKind::Full,
        }
    }

    /// Replaces the signal in oracle kinds (used when the signal is drawn
    /// from a prior per replication); non-oracle kinds are unchanged.
    pub fn with_signal(&self, signal: SignalSpectrum) -> EstimatorSpec {
        match self {
            EstimatorSpec::OracleMl { .. } => EstimatorSpec::OracleMl { signal },
            EstimatorSpec::LocalKnown { .. } => EstimatorSpec::LocalKnown { signal },
            EstimatorSpec::LinearizedOracle { weights, .. } => EstimatorSpec::LinearizedOracle {
                weights: weights.clone(),
                signal,
            },
            other => other.clone(),
        }
    }

    /// Largest frequency index the estimator actually uses.
    pub fn frequency_support(&self) -> usize {
        match self {
            EstimatorSpec::OracleMl { signal } | EstimatorSpec::LocalKnown { signal } => {
                nonzero_support_signal(signal)
            }
            EstimatorSpec::AdaptiveContrast { weights }
            | EstimatorSpec::LinearizedFull { weights }
            | EstimatorSpec::LocalNaive { weights }
            | EstimatorSpec::LocalCorrected { weights } => nonzero_support_weights(weights),
            EstimatorSpec::LinearizedOracle { weights, signal } => {
                nonzero_support_weights(weights).max(nonzero_support_signal(signal))
            }
        }
    }
}

fn nonzero_support_weights(w: &WeightSequence) -> usize {
    w.values()
        .iter()
        .rposition(|v| *v != 0.0)
        .map_or(0, |i| i + 1)
}

fn nonzero_support_signal(f: &SignalSpectrum) -> usize {
    f.coeffs()
        .iter()
        .rposition(|v| *v != 0.0)
        .map_or(0, |i| i + 1)
}

fn require_kind(obs: &SequenceObservation, kind: ObservationKind) -> Result<()> {
    if obs.kind != kind {
        return Err(Error::invalid(format!(
            "estimator expects a {kind:?} observation, got {:?}",
            obs.kind
        )));
    }
    Ok(())
}

fn require_coverage(obs: &SequenceObservation, support: usize) -> Result<()> {
    if obs.truncation() < support {
        return Err(Error::invalid(format!(
            "observation truncation {} does not cover frequency support {support}",
            obs.truncation()
        )));
    }
    Ok(())
}

/// The weighted contrast `L(tau) = sum_k h_k y_k(tau)^2` with
/// `y_k(tau) = x_k cos(2 pi k tau) + x_k* sin(2 pi k tau)`.
pub fn contrast(obs: &SequenceObservation, h: &WeightSequence, tau: f64) -> Result<f64> {
    require_kind(obs, ObservationKind::Full)?;
    require_coverage(obs, nonzero_support_weights(h))?;
    Ok(contrast_unchecked(obs, h, tau))
}

fn contrast_unchecked(obs: &SequenceObservation, h: &WeightSequence, tau: f64) -> f64 {
    let mut sum = 0.0;
    let len = obs.truncation().min(h.support());
    for k in 1..=len {
        let hk = h.get(k);
        if hk == 0.0 {
            continue;
        }
        let (a, b) = obs.pairs[k - 1];
        let phase = omega(k) * tau;
        let y = a * phase.cos() + b * phase.sin();
        sum += hk * y * y;
    }
    sum
}

/// Derivative of the contrast in `tau`, via the doubled-angle identity
/// `dL/dtau = sum_k h_k (2 pi k) [ 2 x_k x_k* cos(4 pi k tau)
///                                - (x_k^2 - x_k*^2) sin(4 pi k tau) ]`.
pub fn contrast_derivative(
    obs: &SequenceObservation,
    h: &WeightSequence,
    tau: f64,
) -> Result<f64> {
    require_kind(obs, ObservationKind::Full)?;
    require_coverage(obs, nonzero_support_weights(h))?;
    let mut sum = 0.0;
    let len = obs.truncation().min(h.support());
    for k in 1..=len {
        let hk = h.get(k);
        if hk == 0.0 {
            continue;
        }
        let (a, b) = obs.pairs[k - 1];
        let phase = 2.0 * omega(k) * tau;
        sum += hk * omega(k) * (2.0 * a * b * phase.cos() - (a * a - b * b) * phase.sin());
    }
    Ok(sum)
}

/// Golden-section maximization on `[a, b]`; returns the located argmax.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while b - a > tol && iter < max_iter {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iter += 1;
    }
    if f1 > f2 {
        x1
    } else {
        x2
    }
}

/// Exhaustive grid scan over the domain followed by golden-section
/// refinement in the bracketing cell. Grid ties break toward the smallest
/// `tau`.
fn grid_refine_argmax(
    objective: impl Fn(f64) -> f64,
    domain: &ParamDomain,
    opts: &SearchOptions,
    frequency_support: usize,
) -> f64 {
    let n = opts.grid_points.max(16 * frequency_support).max(64);
    let (lo, hi) = (-domain.tau0(), domain.tau0());
    let step = (hi - lo) / (n - 1) as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n {
        let v = objective(lo + step * i as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let refined = golden_max(&objective, a, b, opts.refine_tol, opts.refine_max_iter);
    let grid_point = lo + step * best_i as f64;
    if objective(refined) >= best_v {
        refined
    } else {
        grid_point
    }
}

fn ratio_estimate(num: f64, den: f64, domain: &ParamDomain) -> Result<f64> {
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Degenerate { raw: num / den });
    }
    Ok(domain.clamp(num / den))
}

/// Applies an estimator to an observation. Search-based and ratio
/// estimators are clamped to the parameter domain; the linearized oracle is
/// returned unclamped so its exact risk identity stays intact.
pub fn estimate(
    spec: &EstimatorSpec,
    obs: &SequenceObservation,
    domain: &ParamDomain,
    opts: &SearchOptions,
) -> Result<f64> {
    require_kind(obs, spec.expected_kind())?;
    require_coverage(obs, spec.frequency_support())?;
    match spec {
        EstimatorSpec::AdaptiveContrast { weights } => {
            let obj = |tau: f64| contrast_unchecked(obs, weights, tau);
            Ok(domain.clamp(grid_refine_argmax(
                obj,
                domain,
                opts,
                nonzero_support_weights(weights),
            )))
        }
        EstimatorSpec::OracleMl { signal } => {
            let len = obs.truncation().min(signal.support());
            let obj = |tau: f64| {
                let mut sum = 0.0;
                for k in 1..=len {
                    let fk = signal.coeff(k);
                    if fk == 0.0 {
                        continue;
                    }
                    let (a, b) = obs.pairs[k - 1];
                    let phase = omega(k) * tau;
                    sum += fk * (a * phase.cos() + b * phase.sin());
                }
                sum
            };
            Ok(domain.clamp(grid_refine_argmax(
                obj,
                domain,
                opts,
                nonzero_support_signal(signal),
            )))
        }
        EstimatorSpec::LinearizedFull { weights } => {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 1..=obs.truncation().min(weights.support()) {
                let hk = weights.get(k);
                if hk == 0.0 {
                    continue;
                }
                let (a, b) = obs.pairs[k - 1];
                num += omega(k) * hk * a * b;
                den += omega(k) * omega(k) * hk * (a * a - b * b);
            }
            ratio_estimate(num, den, domain)
        }
        EstimatorSpec::LocalKnown { signal } => {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 1..=obs.truncation().min(signal.support()) {
                let fk = signal.coeff(k);
                let (_, b) = obs.pairs[k - 1];
                num += omega(k) * fk * b;
                den += omega(k) * omega(k) * fk * fk;
            }
            ratio_estimate(num, den, domain)
        }
        EstimatorSpec::LocalNaive { weights } => {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 1..=obs.truncation().min(weights.support()) {
                let hk = weights.get(k);
                if hk == 0.0 {
                    continue;
                }
                let (a, b) = obs.pairs[k - 1];
                num += omega(k) * hk * a * b;
                den += omega(k) * omega(k) * hk * hk * a * a;
            }
            ratio_estimate(num, den, domain)
        }
        EstimatorSpec::LocalCorrected { weights } => {
            let eps2 = obs.eps * obs.eps;
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 1..=obs.truncation().min(weights.support()) {
                let hk = weights.get(k);
                if hk == 0.0 {
                    continue;
                }
                let (a, b) = obs.pairs[k - 1];
                num += omega(k) * hk * a * b;
                den += omega(k) * omega(k) * hk * (a * a - eps2);
            }
            ratio_estimate(num, den, domain)
        }
        EstimatorSpec::LinearizedOracle { weights, signal } => {
            linearized_oracle(obs, weights, signal)
        }
    }
}

/// Root of the contrast equation linearized at the true shift:
/// `tau_hat = theta + L0(theta) / E[L1(theta)]`, where the noise terms are
/// reconstructed from the observation by rotating at the true shift. A
/// diagnostic with an exact (non-asymptotic) risk formula, see
/// [`closed_form_risk_linearized`]. Not clamped.
pub fn linearized_oracle(
    obs: &SequenceObservation,
    h: &WeightSequence,
    f: &SignalSpectrum,
) -> Result<f64> {
    require_kind(obs, ObservationKind::Full)?;
    if !(obs.eps > 0.0) {
        return Err(Error::invalid(
            "linearized oracle needs eps > 0 (the noise rotation is undefined at eps = 0)",
        ));
    }
    let theta = obs
        .theta_true
        .ok_or_else(|| Error::invalid("linearized oracle needs the simulated true shift"))?;
    let support = nonzero_support_weights(h).max(nonzero_support_signal(f));
    require_coverage(obs, support)?;

    let eps = obs.eps;
    let mut l0 = 0.0;
    let mut el1 = 0.0;
    for k in 1..=obs.truncation().min(h.support()) {
        let hk = h.get(k);
        if hk == 0.0 {
            continue;
        }
        let fk = f.coeff(k);
        let (a, b) = obs.pairs[k - 1];
        let phase = omega(k) * theta;
        let (sin, cos) = (phase.sin(), phase.cos());
        let xi = (a * cos + b * sin - fk) / eps;
        let xi_star = (b * cos - a * sin) / eps;
        l0 += hk * omega(k) * (eps * fk * xi_star + eps * eps * xi_star * xi);
        el1 += hk * omega(k) * omega(k) * fk * fk;
    }
    if !(el1 > 0.0) {
        return Err(Error::Degenerate {
            raw: theta + l0 / el1,
        });
    }
    Ok(theta + l0 / el1)
}

/// Exact normalized risk of the linearized oracle:
/// `||f'||^2 sum h_k^2 (2 pi k)^2 (f_k^2 + eps^2) / (sum h_k (2 pi k)^2 f_k^2)^2`.
/// Holds for every `eps > 0`, not just asymptotically.
pub fn closed_form_risk_linearized(
    f: &SignalSpectrum,
    h: &WeightSequence,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let len = f.support().max(h.support());
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for k in 1..=len {
        let w2 = omega(k) * omega(k);
        let hk = h.get(k);
        let fk = f.coeff(k);
        numerator += hk * hk * w2 * (fk * fk + eps * eps);
        denominator += hk * w2 * fk * fk;
    }
    if !(denominator > 0.0) {
        return Err(Error::Degenerate { raw: f64::NAN });
    }
    Ok(f.norms().deriv_sq * numerator / (denominator * denominator))
}

/// Relative integrated squared error of the linear derivative estimator
/// with weights `h`: exactly `R[f, h] / ||f'||^2`.
pub fn derivative_mise(f: &SignalSpectrum, h: &WeightSequence, eps: f64) -> Result<f64> {
    let deriv_sq = f.norms().deriv_sq;
    if !(deriv_sq > 0.0) {
        return Err(Error::Degenerate { raw: f64::NAN });
    }
    Ok(crate::weights::risk_functional(f, h, eps) / deriv_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use crate::signal::simulate;
    use crate::weights::WeightSequence;
    use crate::weights::{default_gamma, solve_bandwidth};
    use crate::signal::SobolevBall;
    use alloc::vec;
    use alloc::vec::Vec;
    use core::f64::consts::PI;

    fn spectrum(coeffs: &[f64]) -> SignalSpectrum {
        SignalSpectrum::new(coeffs.to_vec()).unwrap()
    }

    fn domain() -> ParamDomain {
        ParamDomain::new(0.2).unwrap()
    }

    fn full_obs(f: &SignalSpectrum, theta: f64, eps: f64, k: usize, seed: u64) -> SequenceObservation {
        let mut rng = RandomStream::replication(seed, 0);
        simulate(f, theta, eps, k, ObservationKind::Full, &mut rng).unwrap()
    }

    #[test]
    fn contrast_noiseless_single_mode() {
        let f = spectrum(&[1.0]);
        let obs = full_obs(&f, 0.1, 0.0, 1, 0);
        let h = WeightSequence::custom(vec![1.0]).unwrap();
        for i in 0..40 {
            let tau = -0.2 + 0.01 * i as f64;
            let expect = (2.0 * PI * (tau - 0.1)).cos().powi(2);
            assert!((contrast(&obs, &h, tau).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn contrast_is_nonnegative_and_rejects_local_observations() {
        let f = spectrum(&[0.5, 0.2]);
        let obs = full_obs(&f, 0.03, 0.1, 2, 1);
        let h = WeightSequence::custom(vec![0.7, 0.4]).unwrap();
        for i in 0..50 {
            let tau = -0.25 + 0.01 * i as f64;
            assert!(contrast(&obs, &h, tau).unwrap() >= 0.0);
        }
        let mut rng = RandomStream::replication(1, 1);
        let local = simulate(&f, 0.03, 0.1, 2, ObservationKind::Local, &mut rng).unwrap();
        assert!(contrast(&local, &h, 0.0).is_err());
    }

    #[test]
    fn contrast_periodicity() {
        let f = spectrum(&[0.5, 0.3]);
        let obs = full_obs(&f, 0.05, 0.08, 2, 2);
        // Only even frequencies weighted: half period.
        let even = WeightSequence::custom(vec![0.0, 1.0]).unwrap();
        // Generic weights: full period.
        let both = WeightSequence::custom(vec![1.0, 1.0]).unwrap();
        for i in 0..25 {
            let tau = -0.12 + 0.01 * i as f64;
            let e0 = contrast(&obs, &even, tau).unwrap();
            let e1 = contrast(&obs, &even, tau + 0.5).unwrap();
            assert!((e0 - e1).abs() < 1e-12);
            let b0 = contrast(&obs, &both, tau).unwrap();
            let b1 = contrast(&obs, &both, tau + 1.0).unwrap();
            assert!((b0 - b1).abs() < 1e-12);
        }
    }

    #[test]
    fn contrast_equals_quadratic_form_in_projected_coordinates() {
        let f = spectrum(&[0.5, 0.3, 0.1]);
        let obs = full_obs(&f, -0.07, 0.1, 3, 3);
        let h = WeightSequence::custom(vec![0.9, 0.5, 0.2]).unwrap();
        for i in 0..30 {
            let tau = -0.2 + 0.013 * i as f64;
            let mut quad = 0.0;
            for k in 1..=3 {
                let (a, b) = obs.pairs[k - 1];
                let y = a * (omega(k) * tau).cos() + b * (omega(k) * tau).sin();
                quad += h.get(k) * y * y;
            }
            assert!((contrast(&obs, &h, tau).unwrap() - quad).abs() <= 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let f = spectrum(&[0.8, 0.3, 0.1, 0.05]);
        let h = WeightSequence::custom(vec![1.0, 0.7, 0.4, 0.2]).unwrap();
        let mut rng = RandomStream::from_seed(7);
        for trial in 0..100 {
            let obs = full_obs(&f, 0.04, 0.1, 4, 100 + trial);
            let tau = 0.4 * rng.uniform() - 0.2;
            let d = contrast_derivative(&obs, &h, tau).unwrap();
            let step = 1e-6;
            let fd = (contrast(&obs, &h, tau + step).unwrap()
                - contrast(&obs, &h, tau - step).unwrap())
                / (2.0 * step);
            let scale = d.abs().max(fd.abs()).max(1e-6);
            assert!((d - fd).abs() <= 1e-6 * scale, "trial {trial}: {d} vs {fd}");
        }
    }

    #[test]
    fn derivative_vanishes_at_refined_argmax() {
        let f = spectrum(&[1.0, 0.4]);
        let h = WeightSequence::custom(vec![1.0, 0.8]).unwrap();
        let obs = full_obs(&f, 0.06, 0.05, 2, 8);
        let spec = EstimatorSpec::AdaptiveContrast { weights: h.clone() };
        let opts = SearchOptions::default();
        let theta_hat = estimate(&spec, &obs, &domain(), &opts).unwrap();
        // First-order condition, to within the curvature times the
        // refinement tolerance.
        let curvature_bound: f64 = (1..=2)
            .map(|k| {
                let (a, b) = obs.pairs[k - 1];
                4.0 * h.get(k) * omega(k) * omega(k) * (a * a + b * b)
            })
            .sum();
        let d = contrast_derivative(&obs, &h, theta_hat).unwrap();
        assert!(d.abs() <= curvature_bound * 1e-6);
    }

    #[test]
    fn derivative_exactly_zero_at_true_shift_without_noise() {
        let f = spectrum(&[1.0]);
        let h = WeightSequence::custom(vec![1.0]).unwrap();
        let obs = full_obs(&f, 0.07, 0.0, 1, 0);
        let d = contrast_derivative(&obs, &h, 0.07).unwrap();
        assert!(d.abs() < 1e-14);
    }

    #[test]
    fn noiseless_recovery_by_contrast_maximization() {
        let f = spectrum(&[1.0, 0.5, 0.25]);
        let h = WeightSequence::projection(3, 3).unwrap();
        let opts = SearchOptions::default();
        for theta in [-0.18, -0.044, 0.0, 0.091, 0.19] {
            let obs = full_obs(&f, theta, 0.0, 3, 0);
            let spec = EstimatorSpec::AdaptiveContrast { weights: h.clone() };
            let got = estimate(&spec, &obs, &domain(), &opts).unwrap();
            assert!((got - theta).abs() <= 1e-8, "theta = {theta}, got {got}");
        }
    }

    #[test]
    fn noiseless_local_estimators_are_exact() {
        let f = spectrum(&[1.0, 0.5]);
        let h = WeightSequence::projection(2, 2).unwrap();
        let theta = 0.04;
        let mut rng = RandomStream::from_seed(0);
        let obs = simulate(&f, theta, 0.0, 2, ObservationKind::Local, &mut rng).unwrap();
        for spec in [
            EstimatorSpec::LocalKnown { signal: f.clone() },
            EstimatorSpec::LocalNaive { weights: h.clone() },
            EstimatorSpec::LocalCorrected { weights: h.clone() },
        ] {
            let got = estimate(&spec, &obs, &domain(), &SearchOptions::default()).unwrap();
            assert!((got - theta).abs() < 1e-12, "{}", spec.id());
        }
    }

    #[test]
    fn corrected_denominator_can_degenerate() {
        // Noise level far above the signal: the unbiased denominator
        // correction goes negative for this draw.
        let f = spectrum(&[0.01]);
        let h = WeightSequence::projection(1, 1).unwrap();
        let obs = SequenceObservation {
            kind: ObservationKind::Local,
            eps: 0.1,
            pairs: vec![(0.001, 0.002)],
            theta_true: None,
        };
        let spec = EstimatorSpec::LocalCorrected { weights: h };
        match estimate(&spec, &obs, &domain(), &SearchOptions::default()) {
            Err(Error::Degenerate { raw }) => assert!(raw.is_finite() || raw.is_nan()),
            other => panic!("expected degenerate, got {other:?}"),
        }
        let _ = f;
    }

    #[test]
    fn oracle_flags_and_expected_kinds() {
        let f = spectrum(&[1.0]);
        let h = WeightSequence::projection(1, 1).unwrap();
        let specs = [
            (EstimatorSpec::OracleMl { signal: f.clone() }, true, ObservationKind::Full),
            (EstimatorSpec::AdaptiveContrast { weights: h.clone() }, false, ObservationKind::Full),
            (EstimatorSpec::LinearizedFull { weights: h.clone() }, false, ObservationKind::Full),
            (EstimatorSpec::LocalKnown { signal: f.clone() }, true, ObservationKind::Local),
            (EstimatorSpec::LocalNaive { weights: h.clone() }, false, ObservationKind::Local),
            (EstimatorSpec::LocalCorrected { weights: h.clone() }, false, ObservationKind::Local),
            (
                EstimatorSpec::LinearizedOracle { weights: h.clone(), signal: f.clone() },
                true,
                ObservationKind::Full,
            ),
        ];
        for (spec, oracle, kind) in specs {
            assert_eq!(spec.is_oracle(), oracle, "{}", spec.id());
            assert_eq!(spec.expected_kind(), kind, "{}", spec.id());
        }
    }

    #[test]
    fn non_oracle_estimates_ignore_the_stored_shift() {
        let f = spectrum(&[1.0, 0.3]);
        let h = WeightSequence::projection(2, 2).unwrap();
        let obs = full_obs(&f, 0.05, 0.08, 2, 21);
        let stripped = obs.clone().without_theta();
        for spec in [
            EstimatorSpec::AdaptiveContrast { weights: h.clone() },
            EstimatorSpec::LinearizedFull { weights: h.clone() },
        ] {
            let a = estimate(&spec, &obs, &domain(), &SearchOptions::default()).unwrap();
            let b = estimate(&spec, &stripped, &domain(), &SearchOptions::default()).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // The linearized oracle, by contrast, requires it.
        let spec = EstimatorSpec::LinearizedOracle { weights: h, signal: f };
        assert!(estimate(&spec, &stripped, &domain(), &SearchOptions::default()).is_err());
    }

    #[test]
    fn contrast_argmax_is_shift_equivariant() {
        // Rotating an observation by delta (inverse frequency rotation)
        // shifts the contrast in tau by exactly delta, so the argmax moves
        // by delta whenever both stay inside the domain.
        let f = spectrum(&[1.0, 0.4]);
        let h = WeightSequence::custom(vec![1.0, 0.6]).unwrap();
        let obs = full_obs(&f, 0.02, 0.05, 2, 33);
        let delta = 0.05;
        let rotated = SequenceObservation {
            kind: ObservationKind::Full,
            eps: obs.eps,
            pairs: obs
                .pairs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let d = omega(i + 1) * delta;
                    (a * d.cos() - b * d.sin(), b * d.cos() + a * d.sin())
                })
                .collect(),
            theta_true: None,
        };
        let spec = EstimatorSpec::AdaptiveContrast { weights: h };
        let opts = SearchOptions::default();
        let base = estimate(&spec, &obs, &domain(), &opts).unwrap();
        let moved = estimate(&spec, &rotated, &domain(), &opts).unwrap();
        assert!(base.abs() < 0.14 && moved.abs() < 0.2 - 1e-6, "not interior");
        assert!((moved - (base + delta)).abs() < 1e-7, "{moved} vs {}", base + delta);
    }

    #[test]
    fn search_does_not_miss_the_global_maximum() {
        let f = spectrum(&[0.6, 0.4, 0.3, 0.2]);
        let h = WeightSequence::custom(vec![1.0, 0.8, 0.5, 0.3]).unwrap();
        let opts = SearchOptions::default();
        for seed in 0..20 {
            let obs = full_obs(&f, 0.08, 0.3, 4, 400 + seed);
            let spec = EstimatorSpec::AdaptiveContrast { weights: h.clone() };
            let got = estimate(&spec, &obs, &domain(), &opts).unwrap();
            let got_value = contrast(&obs, &h, got).unwrap();
            // Verification grid ten times denser than the search grid.
            let n = 10 * 1024;
            let mut best = f64::NEG_INFINITY;
            for i in 0..n {
                let tau = -0.2 + 0.4 * i as f64 / (n - 1) as f64;
                best = best.max(contrast(&obs, &h, tau).unwrap());
            }
            assert!(got_value >= best - 1e-9, "seed {seed}: {got_value} < {best}");
        }
    }

    #[test]
    fn linearized_full_approaches_the_contrast_maximizer_quadratically() {
        // Paired means over a common noise stream at eps and 2 eps; the
        // discrepancy between the linearized root and the full maximizer
        // scales like eps^2.
        let f = spectrum(&[1.0, 0.3]);
        let h = WeightSequence::custom(vec![0.9, 0.5]).unwrap();
        let opts = SearchOptions {
            refine_tol: 1e-12,
            ..SearchOptions::default()
        };
        let mut mean_diff = [0.0f64; 2];
        let reps = 400u64;
        for (j, eps) in [1e-3, 2e-3].into_iter().enumerate() {
            let theta = eps / 2.0;
            for rep in 0..reps {
                let mut rng = RandomStream::replication(5150, rep);
                let obs = simulate(&f, theta, eps, 2, ObservationKind::Full, &mut rng).unwrap();
                let lin = estimate(
                    &EstimatorSpec::LinearizedFull { weights: h.clone() },
                    &obs,
                    &domain(),
                    &opts,
                )
                .unwrap();
                let adc = estimate(
                    &EstimatorSpec::AdaptiveContrast { weights: h.clone() },
                    &obs,
                    &domain(),
                    &opts,
                )
                .unwrap();
                mean_diff[j] += (lin - adc).abs();
            }
            mean_diff[j] /= reps as f64;
        }
        // The gap is second order: bounded by C eps^2 and shrinking
        // strictly faster than linearly in eps.
        assert!(mean_diff[0] <= 100.0 * 1e-6, "gap at eps=1e-3: {}", mean_diff[0]);
        assert!(mean_diff[0] > 1e-9, "gap below search resolution");
        let ratio = mean_diff[1] / mean_diff[0];
        assert!(ratio > 2.5, "scaling ratio {ratio} not superlinear");
    }

    #[test]
    fn linearized_oracle_with_injected_zero_noise_returns_theta() {
        let f = spectrum(&[1.0, 0.4]);
        let h = WeightSequence::custom(vec![1.0, 0.7]).unwrap();
        let theta = 0.09;
        let mut rng = RandomStream::from_seed(0);
        // eps > 0 but the realized noise is zero: build the noiseless means.
        let mut obs = simulate(&f, theta, 0.0, 2, ObservationKind::Full, &mut rng).unwrap();
        obs.eps = 0.05;
        let got = linearized_oracle(&obs, &h, &f).unwrap();
        assert!((got - theta).abs() < 1e-13);
    }

    #[test]
    fn linearized_oracle_contract_errors() {
        let f = spectrum(&[1.0]);
        let h = WeightSequence::projection(1, 1).unwrap();
        let mut rng = RandomStream::from_seed(4);
        let noiseless = simulate(&f, 0.02, 0.0, 1, ObservationKind::Full, &mut rng).unwrap();
        assert!(linearized_oracle(&noiseless, &h, &f).is_err());

        let obs = full_obs(&f, 0.02, 0.1, 1, 4).without_theta();
        assert!(linearized_oracle(&obs, &h, &f).is_err());

        let zero = spectrum(&[0.0]);
        let obs = full_obs(&zero, 0.02, 0.1, 1, 4);
        assert!(matches!(
            linearized_oracle(&obs, &h, &zero),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn linearized_oracle_is_unbiased_and_matches_closed_form_risk() {
        let f = spectrum(&[0.7, 0.25, 0.1]);
        let h = WeightSequence::custom(vec![1.0, 0.8, 0.4]).unwrap();
        let (theta, eps) = (0.03, 0.08);
        let reps = 20_000u64;
        let info = f.fisher_info(eps).unwrap();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut err_sum = 0.0;
        for rep in 0..reps {
            let mut rng = RandomStream::replication(606, rep);
            let obs = simulate(&f, theta, eps, 3, ObservationKind::Full, &mut rng).unwrap();
            let tau = linearized_oracle(&obs, &h, &f).unwrap();
            err_sum += tau - theta;
            let z = (tau - theta) * (tau - theta) * info;
            sum += z;
            sum_sq += z * z;
        }
        let n = reps as f64;
        let mc = sum / n;
        let se = ((sum_sq / n - mc * mc) / n).sqrt();
        let exact = closed_form_risk_linearized(&f, &h, eps).unwrap();
        assert!((mc - exact).abs() <= 3.0 * se, "mc {mc}, exact {exact}, se {se}");

        // Mean-zero error: |mean| within 3 standard errors.
        let mean_err = err_sum / n;
        let se_mean = (exact / info / n).sqrt();
        assert!(mean_err.abs() <= 3.0 * se_mean);
    }

    #[test]
    fn closed_form_risk_single_mode_value() {
        let f = spectrum(&[1.0]);
        let h = WeightSequence::projection(1, 1).unwrap();
        let risk = closed_form_risk_linearized(&f, &h, 0.1).unwrap();
        assert!((risk - 1.01).abs() < 1e-12);
    }

    #[test]
    fn closed_form_risk_equals_one_plus_second_order_for_all_pass_weights() {
        let f = spectrum(&[1.0, 0.5, 0.25]);
        let h = WeightSequence::projection(3, 3).unwrap();
        for eps in [0.3, 0.05, 1e-3] {
            let closed = closed_form_risk_linearized(&f, &h, eps).unwrap();
            let predicted =
                1.0 + crate::weights::risk_functional(&f, &h, eps) / f.norms().deriv_sq;
            assert!((closed - predicted).abs() <= 1e-12 * predicted);
        }
    }

    #[test]
    fn closed_form_risk_approaches_expansion_as_weights_cover_the_signal() {
        // Corrected weights at shrinking noise levels: once the all-pass
        // head covers the signal support the expansion becomes exact.
        let f = spectrum(&[1.0, 0.3, 0.1]);
        let ball = SobolevBall::new(2.0, 1.0).unwrap();
        let mut gaps = Vec::new();
        for eps in [1e-3, 1e-5, 3e-7] {
            let sol = solve_bandwidth(&ball, eps, 1e-10).unwrap();
            let gamma = default_gamma(eps).unwrap();
            let k_max = sol.bandwidth.ceil() as usize;
            let h = WeightSequence::corrected(&ball, sol.bandwidth, gamma, k_max).unwrap();
            let closed = closed_form_risk_linearized(&f, &h, eps).unwrap();
            let predicted =
                1.0 + crate::weights::risk_functional(&f, &h, eps) / f.norms().deriv_sq;
            gaps.push((closed - predicted).abs());
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps = {gaps:?}");
        assert!(gaps[2] < 1e-12);
    }

    #[test]
    fn derivative_mise_identity() {
        let f = spectrum(&[0.6, 0.2]);
        let zero = WeightSequence::custom(vec![0.0, 0.0]).unwrap();
        assert!((derivative_mise(&f, &zero, 0.1).unwrap() - 1.0).abs() < 1e-14);

        let z = spectrum(&[0.0]);
        assert!(derivative_mise(&z, &zero, 0.1).is_err());

        let h = WeightSequence::custom(vec![0.8, 0.5]).unwrap();
        let got = derivative_mise(&f, &h, 0.07).unwrap();
        let expect = crate::weights::risk_functional(&f, &h, 0.07) / f.norms().deriv_sq;
        assert_eq!(got, expect);
    }

    #[test]
    fn derivative_estimator_ise_matches_parseval_sum() {
        // One realization: integrate the squared error of the linear
        // derivative estimator on a dense time grid and compare with the
        // coefficient-space sum.
        let f = spectrum(&[0.9, 0.4, 0.15]);
        let h = WeightSequence::custom(vec![0.9, 0.6, 0.3]).unwrap();
        let eps = 0.1;
        let mut rng = RandomStream::from_seed(77);
        let xi: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();

        let coeff_err: Vec<f64> = (1..=3)
            .map(|k| h.get(k) * (f.coeff(k) + eps * xi[k - 1]) - f.coeff(k))
            .collect();
        let parseval: f64 = coeff_err
            .iter()
            .enumerate()
            .map(|(i, e)| omega(i + 1) * omega(i + 1) * e * e)
            .sum();

        let n = 1 << 14;
        let step = 1.0 / n as f64;
        let mut quad = 0.0;
        for i in 0..n {
            let u = -0.5 + (i as f64 + 0.5) * step;
            let diff: f64 = (1..=3)
                .map(|k| {
                    -(2.0f64.sqrt()) * omega(k) * (omega(k) * u).sin() * coeff_err[k - 1]
                })
                .sum();
            quad += diff * diff * step;
        }
        assert!((quad - parseval).abs() <= 1e-9 * parseval.max(1.0));
    }
}
