//! Weight sequences for linear filtering of the coefficient estimates, the
//! bandwidth equation that calibrates them to a Sobolev ellipsoid, and the
//! second-order risk functional they control.
//!
//! The central object is
//!
//! ```text
//! R[f, h] = sum_k (2 pi k)^2 [ (1 - h_k)^2 f_k^2 + eps^2 h_k^2 ],
//! ```
//!
//! the exact second-order term of the normalized shift-estimation risk and,
//! at the same time, the relative integrated squared error of the linear
//! derivative estimator with weights `h`. Over a Sobolev ellipsoid the
//! functional has a saddle point `(s, q)` where `q` are the minimax weights
//! `q_k = [1 - (k/W)^{beta-1}]_+` and `s_k^2 = eps^2 q_k / (1 - q_k)`; the
//! bandwidth `W` solves the ellipsoid constraint equation implemented by
//! [`solve_bandwidth`].

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::signal::{omega, SignalSpectrum, SobolevBall};

/// Provenance of a weight sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// Indicator weights `h_k = 1{k <= cutoff}`.
    Projection { cutoff: usize },
    /// Minimax-linear shrinkage `q_k = [1 - (k/W)^{beta-1}]_+`.
    Pinsker { beta: f64, bandwidth: f64 },
    /// Pinsker weights with the head `k <= floor(gamma W)` raised to 1.
    Corrected { beta: f64, bandwidth: f64, gamma: f64 },
    /// Caller-supplied weights; `clipped` records whether any entry had to
    /// be projected onto `[0, 1]`.
    Custom { clipped: bool },
}

/// A finite weight sequence `h_1..h_K` with `0 <= h_k <= 1`; entries beyond
/// the stored support are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    values: Vec<f64>,
    kind: WeightKind,
}

impl WeightSequence {
    /// Projection weights `1{k <= cutoff}` on support `k_max`.
    pub fn projection(cutoff: usize, k_max: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::invalid("projection cutoff must be at least 1"));
        }
        if cutoff > k_max {
            return Err(Error::invalid(format!(
                "projection cutoff {cutoff} exceeds the support bound {k_max}"
            )));
        }
        let values = (1..=k_max).map(|k| if k <= cutoff { 1.0 } else { 0.0 }).collect();
        Ok(WeightSequence {
            values,
            kind: WeightKind::Projection { cutoff },
        })
    }

    /// Pinsker weights for the given ball and bandwidth on support `k_max`.
    /// Requires `k_max >= ceil(W)` so that no nonzero weight is clipped.
    pub fn pinsker(ball: &SobolevBall, bandwidth: f64, k_max: usize) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        if (k_max as f64) < bandwidth.ceil() {
            return Err(Error::invalid(format!(
                "support bound {k_max} would clip the weight support ceil(W) = {}",
                bandwidth.ceil()
            )));
        }
        let beta = ball.beta();
        let values = (1..=k_max)
            .map(|k| (1.0 - (k as f64 / bandwidth).powf(beta - 1.0)).max(0.0))
            .collect();
        Ok(WeightSequence {
            values,
            kind: WeightKind::Pinsker {
                beta,
                bandwidth,
            },
        })
    }

    /// Corrected weights: all-pass on `k <= floor(gamma W)`, Pinsker beyond.
    pub fn corrected(
        ball: &SobolevBall,
        bandwidth: f64,
        gamma: f64,
        k_max: usize,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid(format!(
                "gamma = {gamma} must lie strictly inside (0, 1)"
            )));
        }
        let mut w = Self::pinsker(ball, bandwidth, k_max)?;
        let head = (gamma * bandwidth).floor() as usize;
        for k in 1..=head.min(k_max) {
            w.values[k - 1] = 1.0;
        }
        w.kind = WeightKind::Corrected {
            beta: ball.beta(),
            bandwidth,
            gamma,
        };
        Ok(w)
    }

    /// Caller-supplied weights, projected onto `[0, 1]` entrywise. The
    /// returned kind records whether any entry was clipped.
    pub fn custom(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("weight sequence must be non-empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        let mut clipped = false;
        let values = values
            .into_iter()
            .map(|v| {
                if (0.0..=1.0).contains(&v) {
                    v
                } else {
                    clipped = true;
                    v.clamp(0.0, 1.0)
                }
            })
            .collect();
        Ok(WeightSequence {
            values,
            kind: WeightKind::Custom { clipped },
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// Weight `h_k` for 1-based `k`; zero beyond the support.
    pub fn get(&self, k: usize) -> f64 {
        if k >= 1 {
            self.values.get(k - 1).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }

    /// Stored support bound `K_h`.
    pub fn support(&self) -> usize {
        self.values.len()
    }

    /// `||h'||^2 = sum h_k^2 (2 pi k)^2`.
    pub fn deriv_norm_sq(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let w = omega(i + 1);
                h * h * w * w
            })
            .sum()
    }
}

/// Left-hand side of the bandwidth equation:
/// `G(W) = eps^2 sum_k [(W/k)^{beta-1} - 1]_+ (2 pi k)^{2 beta}`.
/// The sum is finite (terms vanish for `k >= W`), continuous and
/// nondecreasing in `W`, and `G(1) = 0`.
pub fn bandwidth_constraint(ball: &SobolevBall, eps: f64, w: f64) -> f64 {
    let beta = ball.beta();
    let mut sum = 0.0;
    let mut k = 1usize;
    while (k as f64) < w {
        let term = (w / k as f64).powf(beta - 1.0) - 1.0;
        sum += term * omega(k).powf(2.0 * beta);
        k += 1;
    }
    eps * eps * sum
}

/// Output of [`solve_bandwidth`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthSolution {
    pub bandwidth: f64,
    /// `G(W) - L` at the returned bandwidth.
    pub residual: f64,
    pub iterations: usize,
}

const SOLVER_MAX_ITER: usize = 200;

/// Solves `G(W) = L` for the Pinsker bandwidth by bracket doubling followed
/// by bisection, to relative tolerance `tol` on the residual.
pub fn solve_bandwidth(ball: &SobolevBall, eps: f64, tol: f64) -> Result<BandwidthSolution> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    let target = ball.radius();
    let g = |w: f64| bandwidth_constraint(ball, eps, w);

    let mut iterations = 0usize;
    let mut lo = 1.0;
    let mut hi = 2.0;
    while g(hi) < target {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations >= SOLVER_MAX_ITER {
            return Err(Error::SolverFailure {
                lower: lo,
                upper: hi,
                iterations,
            });
        }
    }

    while iterations < SOLVER_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let val = g(mid);
        iterations += 1;
        if (val - target).abs() <= tol * target {
            return Ok(BandwidthSolution {
                bandwidth: mid,
                residual: val - target,
                iterations,
            });
        }
        if val < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            // Interval exhausted at machine precision; accept if the
            // residual meets the tolerance, otherwise report the bracket.
            let val = g(hi);
            if (val - target).abs() <= tol * target {
                return Ok(BandwidthSolution {
                    bandwidth: hi,
                    residual: val - target,
                    iterations,
                });
            }
            break;
        }
    }
    Err(Error::SolverFailure {
        lower: lo,
        upper: hi,
        iterations,
    })
}

/// Small-noise closed form for the bandwidth:
/// `(L (beta+2)(2 beta+1) / (eps^2 (2 pi)^{2 beta} (beta-1)))^{1/(2 beta+1)}`.
pub fn bandwidth_asymptotic(ball: &SobolevBall, eps: f64) -> f64 {
    let beta = ball.beta();
    let num = ball.radius() * (beta + 2.0) * (2.0 * beta + 1.0);
    let den = eps * eps * (2.0 * PI).powf(2.0 * beta) * (beta - 1.0);
    (num / den).powf(1.0 / (2.0 * beta + 1.0))
}

/// Default all-pass head fraction `gamma = 1 / ln(eps^{-2})`; defined only
/// for `eps < e^{-1/2}` (so that `gamma < 1`), otherwise the caller must
/// supply an explicit gamma.
pub fn default_gamma(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let log = (1.0 / (eps * eps)).ln();
    if log <= 1.0 {
        return Err(Error::invalid(format!(
            "default gamma = 1/ln(eps^-2) needs eps < e^(-1/2); got eps = {eps}, supply gamma explicitly"
        )));
    }
    Ok(1.0 / log)
}

/// How prior variances are derived from a weight sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceMode {
    /// Saddle variances `s_k^2 = eps^2 h_k / (1 - h_k)`, zero where
    /// `h_k = 0`. Unit weights are admissible only on the all-pass head of
    /// corrected weights (where the convention is "no prior", variance 0).
    Saddle,
    /// Truncated variances: zero on `k <= floor(gamma W)` and
    /// `(1 - gamma) s_k^2` beyond.
    Truncated { gamma: f64, bandwidth: f64 },
}

/// Per-coefficient Gaussian prior variances associated with a weight
/// sequence.
pub fn prior_variances(
    weights: &WeightSequence,
    eps: f64,
    mode: VarianceMode,
) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let corrected_head = match weights.kind() {
        WeightKind::Corrected {
            bandwidth, gamma, ..
        } => (gamma * bandwidth).floor() as usize,
        _ => 0,
    };
    let truncated_head = match mode {
        VarianceMode::Truncated { gamma, bandwidth } => {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::invalid(format!(
                    "gamma = {gamma} must lie strictly inside (0, 1)"
                )));
            }
            (gamma * bandwidth).floor() as usize
        }
        VarianceMode::Saddle => 0,
    };
    let scale = match mode {
        VarianceMode::Saddle => 1.0,
        VarianceMode::Truncated { gamma, .. } => 1.0 - gamma,
    };

    let mut out = Vec::with_capacity(weights.support());
    for k in 1..=weights.support() {
        if matches!(mode, VarianceMode::Truncated { .. }) && k <= truncated_head {
            out.push(0.0);
            continue;
        }
        let h = weights.get(k);
        if h == 0.0 {
            out.push(0.0);
        } else if h >= 1.0 {
            if k <= corrected_head {
                // All-pass head of corrected weights: no prior is placed on
                // these coefficients.
                out.push(0.0);
            } else {
                return Err(Error::SingularVariance { index: k });
            }
        } else {
            out.push(scale * eps * eps * h / (1.0 - h));
        }
    }
    Ok(out)
}

/// Inverse map from prior variances to shrinkage weights:
/// `lambda_k = sigma_k^2 / (eps^2 + sigma_k^2)`.
pub fn shrinkage_from_variances(sigma2: &[f64], eps: f64) -> Vec<f64> {
    sigma2
        .iter()
        .map(|s2| s2 / (eps * eps + s2))
        .collect()
}

/// The second-order risk functional
/// `R[f, h] = sum_k (2 pi k)^2 [(1 - h_k)^2 f_k^2 + eps^2 h_k^2]`,
/// summed over `k <= max(K_f, K_h)`.
pub fn risk_functional(f: &SignalSpectrum, h: &WeightSequence, eps: f64) -> f64 {
    let len = f.support().max(h.support());
    let mut sum = 0.0;
    for k in 1..=len {
        let w2 = {
            let w = omega(k);
            w * w
        };
        let hk = h.get(k);
        let fk = f.coeff(k);
        sum += w2 * ((1.0 - hk) * (1.0 - hk) * fk * fk + eps * eps * hk * hk);
    }
    sum
}

/// The minimax second-order value over a Sobolev ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxValue {
    /// `r = eps^2 sum_k (2 pi k)^2 q_k` at the solved bandwidth.
    pub exact: f64,
    /// Small-noise closed form `C(beta, L) eps^{(4 beta - 4)/(2 beta + 1)}`.
    pub asymptotic: f64,
    /// The constant `C(beta, L)`.
    pub constant: f64,
}

/// Computes the exact and asymptotic minimax second-order values.
pub fn minimax_value(ball: &SobolevBall, eps: f64, tol: f64) -> Result<MinimaxValue> {
    let solution = solve_bandwidth(ball, eps, tol)?;
    let w = solution.bandwidth;
    let q = WeightSequence::pinsker(ball, w, w.ceil() as usize)?;
    let exact = eps
        * eps
        * q.values()
            .iter()
            .enumerate()
            .map(|(i, qk)| {
                let om = omega(i + 1);
                om * om * qk
            })
            .sum::<f64>();

    let beta = ball.beta();
    let constant = (1.0 / 3.0)
        * ((beta - 1.0) / (2.0 * PI * (beta + 2.0))).powf((2.0 * beta - 2.0) / (2.0 * beta + 1.0))
        * (ball.radius() * (2.0 * beta + 1.0)).powf(3.0 / (2.0 * beta + 1.0));
    let asymptotic = constant * eps.powf((4.0 * beta - 4.0) / (2.0 * beta + 1.0));
    Ok(MinimaxValue {
        exact,
        asymptotic,
        constant,
    })
}

/// Constants of the weight-sequence regularity conditions: `rho1` scales the
/// derivative-norm lower bound, `c1` caps the fourth-moment sum. Neither has
/// a canonical numeric value; defaults used by the front end are conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionBParams {
    pub rho1: f64,
    pub c1: f64,
}

impl AssumptionBParams {
    pub fn new(rho1: f64, c1: f64) -> Result<Self> {
        if !(rho1 > 0.0 && c1 > 0.0) {
            return Err(Error::invalid("rho1 and c1 must both be positive"));
        }
        Ok(AssumptionBParams { rho1, c1 })
    }
}

/// Report of the weight-sequence checks for a given noise level and signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    /// `h_1 = 1` and every weight lies in `[0, 1]`.
    pub b0: bool,
    /// `||h'|| >= rho1 ln^2(eps^{-2}) max_k h_k (2 pi k)`.
    pub b1: bool,
    /// `eps^2 sum_k h_k (2 pi k)^4 <= c1`.
    pub b2: bool,
    /// Finite-noise surrogate of the bias-domination condition:
    /// `[sum (1-h_k)(2 pi k)^2 f_k^2]^2 / sum (1-h_k)^2 (2 pi k)^2 f_k^2`,
    /// with the convention `0/0 = 0`. Reported, never asserted.
    pub c_ratio: f64,
}

/// Evaluates the weight-sequence conditions at finite noise level.
pub fn check_assumptions(
    h: &WeightSequence,
    eps: f64,
    params: &AssumptionBParams,
    f: &SignalSpectrum,
) -> AssumptionReport {
    let b0 = h.get(1) == 1.0 && h.values().iter().all(|v| (0.0..=1.0).contains(v));

    let log_sq = {
        let l = (1.0 / (eps * eps)).ln();
        l * l
    };
    let max_h_omega = h
        .values()
        .iter()
        .enumerate()
        .map(|(i, hk)| hk * omega(i + 1))
        .fold(0.0, f64::max);
    let b1 = h.deriv_norm_sq().sqrt() >= params.rho1 * log_sq * max_h_omega;

    let fourth_sum: f64 = h
        .values()
        .iter()
        .enumerate()
        .map(|(i, hk)| hk * omega(i + 1).powi(4))
        .sum();
    let b2 = eps * eps * fourth_sum <= params.c1;

    let len = f.support().max(h.support());
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 1..=len {
        let w2 = omega(k) * omega(k);
        let one_minus = 1.0 - h.get(k);
        let fk2 = f.coeff(k) * f.coeff(k);
        num += one_minus * w2 * fk2;
        den += one_minus * one_minus * w2 * fk2;
    }
    let c_ratio = if den == 0.0 { 0.0 } else { num * num / den };

    AssumptionReport {
        b0,
        b1,
        b2,
        c_ratio,
    }
}
