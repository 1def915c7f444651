//! Signals, function classes, Fisher information and the sequence-model
//! simulators.
//!
//! A signal is a symmetric 1-periodic function represented by finitely many
//! Fourier cosine coefficients `f_k`,
//!
//! ```text
//! f(t) = sqrt(2) * sum_{k=1..K_f} f_k cos(2 pi k t).
//! ```
//!
//! Observing `f(t - theta)` in white noise of level `eps` is equivalent to
//! observing, per frequency `k`, the independent Gaussian pair
//!
//! ```text
//! x_k  = f_k cos(2 pi k theta) + eps xi_k,
//! x_k* = f_k sin(2 pi k theta) + eps xi_k*        (full model)
//! ```
//!
//! or, after linearization around theta = 0,
//!
//! ```text
//! X_k  = f_k + eps xi_k,
//! X_k* = theta (2 pi k) f_k + eps xi_k*           (local model).
//! ```

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Angular frequency `2 pi k` of the 1-based coefficient index `k`.
#[inline]
pub fn omega(k: usize) -> f64 {
    2.0 * PI * k as f64
}

/// Finite vector of Fourier cosine coefficients of a symmetric 1-periodic
/// signal. Trailing zeros are kept as given: the support bound is exactly
/// the length the constructor received.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpectrum {
    coeffs: Vec<f64>,
}

/// Squared sequence norms of a spectrum: `sq = sum f_k^2`,
/// `deriv_sq = sum (2 pi k)^2 f_k^2`, `second_deriv_sq = sum (2 pi k)^4 f_k^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub sq: f64,
    pub deriv_sq: f64,
    pub second_deriv_sq: f64,
}

impl SignalSpectrum {
    /// Builds a spectrum from the coefficients `f_1..f_K`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("signal spectrum must have at least one coefficient"));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "signal coefficient {} is not finite",
                i + 1
            )));
        }
        Ok(SignalSpectrum { coeffs })
    }

    /// Signal whose ellipsoid mass `(2 pi k)^{2 beta} f_k^2` follows the
    /// (unnormalized) profile `ellipsoid_weights`, scaled so the smoothness
    /// constraint `sum (2 pi k)^{2 beta} f_k^2 = L` holds with equality.
    pub fn on_sobolev_boundary(ball: &SobolevBall, ellipsoid_weights: &[f64]) -> Result<Self> {
        if ellipsoid_weights.is_empty() {
            return Err(Error::invalid("boundary signal needs at least one weight"));
        }
        let total: f64 = ellipsoid_weights.iter().sum();
        if !(total > 0.0) || ellipsoid_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(
                "ellipsoid weights must be nonnegative with a positive sum",
            ));
        }
        let coeffs = ellipsoid_weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let k = i + 1;
                (ball.radius() * w / total).sqrt() / omega(k).powf(ball.beta())
            })
            .collect();
        SignalSpectrum::new(coeffs)
    }

    /// Support bound `K_f`.
    pub fn support(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient `f_k` for 1-based `k`; zero beyond the support.
    pub fn coeff(&self, k: usize) -> f64 {
        if k >= 1 {
            self.coeffs.get(k - 1).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }

    /// Evaluates the signal at `t`; symmetric in `t` and 1-periodic.
    pub fn eval(&self, t: f64) -> f64 {
        if !t.is_finite() {
            return f64::NAN;
        }
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, f)| f * (omega(i + 1) * t).cos())
            .sum();
        core::f64::consts::SQRT_2 * sum
    }

    /// Squared norms of the spectrum and its first two derivatives.
    pub fn norms(&self) -> Norms {
        let mut n = Norms {
            sq: 0.0,
            deriv_sq: 0.0,
            second_deriv_sq: 0.0,
        };
        for (i, f) in self.coeffs.iter().enumerate() {
            let w2 = omega(i + 1) * omega(i + 1);
            let f2 = f * f;
            n.sq += f2;
            n.deriv_sq += w2 * f2;
            n.second_deriv_sq += w2 * w2 * f2;
        }
        n
    }

    /// Fisher information about the shift when the signal is known:
    /// `eps^{-2} sum (2 pi k)^2 f_k^2`. Shares the summation path of
    /// [`SignalSpectrum::norms`], so `fisher_info * eps^2 == norms().deriv_sq`
    /// exactly.
    pub fn fisher_info(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::invalid(format!(
                "fisher information requires eps > 0, got {eps}"
            )));
        }
        Ok(self.norms().deriv_sq / (eps * eps))
    }
}

/// The shift parameter set `|theta| <= tau0` with `0 < tau0 < 1/4`; the
/// strict quarter-period bound keeps the shift identifiable for symmetric
/// 1-periodic signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDomain {
    tau0: f64,
}

impl ParamDomain {
    pub fn new(tau0: f64) -> Result<Self> {
        if !(tau0 > 0.0 && tau0 < 0.25) {
            return Err(Error::invalid(format!(
                "tau0 = {tau0} violates the identifiability constraint 0 < tau0 < 1/4"
            )));
        }
        Ok(ParamDomain { tau0 })
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta.abs() <= self.tau0
    }

    /// Clamps a value into `[-tau0, tau0]`; non-finite values map to the
    /// domain center so downstream averages stay defined.
    pub fn clamp(&self, x: f64) -> f64 {
        if x.is_nan() {
            0.0
        } else {
            x.clamp(-self.tau0, self.tau0)
        }
    }
}

/// Parameters of the signal class: `f_1^2 >= rho` and
/// `sum (2 pi k)^4 f_k^2 <= c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassParams {
    rho: f64,
    c0: f64,
}

impl ClassParams {
    pub fn new(rho: f64, c0: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        let floor = (2.0 * PI) * (2.0 * PI) * rho;
        if !(c0 >= floor) {
            return Err(Error::invalid(format!(
                "c0 = {c0} must be at least (2 pi)^2 rho = {floor}, otherwise the class is empty"
            )));
        }
        Ok(ClassParams { rho, c0 })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Class membership check: `f_1^2 >= rho` and `||f''||^2 <= c0`.
    pub fn contains(&self, f: &SignalSpectrum) -> bool {
        let f1 = f.coeff(1);
        f1 * f1 >= self.rho && f.norms().second_deriv_sq <= self.c0
    }
}

/// Sobolev ellipsoid `sum (2 pi k)^{2 beta} f_k^2 <= L` with `beta > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevBall {
    beta: f64,
    l: f64,
}

impl SobolevBall {
    pub fn new(beta: f64, l: f64) -> Result<Self> {
        if !(beta > 1.0) {
            return Err(Error::invalid(format!("beta must exceed 1, got {beta}")));
        }
        if !(l > 0.0) {
            return Err(Error::invalid(format!("L must be positive, got {l}")));
        }
        Ok(SobolevBall { beta, l })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The ellipsoid radius `L`.
    pub fn radius(&self) -> f64 {
        self.l
    }

    /// Ellipsoid seminorm `sum (2 pi k)^{2 beta} v_k^2` of a coefficient
    /// vector.
    pub fn seminorm_sq(&self, coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, v)| omega(i + 1).powf(2.0 * self.beta) * v * v)
            .sum()
    }
}

/// Vicinity membership: with `v = f - fbar` (zero-padded coefficientwise),
/// requires `sum v_k^2 <= delta^2` and `v` inside the Sobolev ball. Both
/// bounds are non-strict.
pub fn check_vicinity(
    f: &SignalSpectrum,
    fbar: &SignalSpectrum,
    delta: f64,
    ball: &SobolevBall,
) -> bool {
    if !(delta > 0.0) {
        return false;
    }
    let len = f.support().max(fbar.support());
    let mut l2 = 0.0;
    let mut sob = 0.0;
    for k in 1..=len {
        let v = f.coeff(k) - fbar.coeff(k);
        l2 += v * v;
        sob += omega(k).powf(2.0 * ball.beta()) * v * v;
    }
    l2 <= delta * delta && sob <= ball.radius()
}

/// Which sequence model an observation was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationKind {
    /// Pairs `(x_k, x_k*)` of the full rotation model.
    Full,
    /// Pairs `(X_k, X_k*)` of the local (linearized) model.
    Local,
}

/// A realized set of observation pairs for `k = 1..=K`.
///
/// `theta_true` is carried for oracle diagnostics only; estimators that are
/// not flagged as oracles never read it.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceObservation {
    pub kind: ObservationKind,
    pub eps: f64,
    pub pairs: Vec<(f64, f64)>,
    pub theta_true: Option<f64>,
}

impl SequenceObservation {
    /// Truncation index `K`.
    pub fn truncation(&self) -> usize {
        self.pairs.len()
    }

    /// Drops the oracle diagnostic field.
    pub fn without_theta(mut self) -> Self {
        self.theta_true = None;
        self
    }
}

/// Draws one observation of the chosen model.
///
/// With `eps = 0` the observation is the noiseless mean and no random
/// draws are consumed. Otherwise the stream is consumed in coefficient
/// order, two standard normals per index.
pub fn simulate(
    f: &SignalSpectrum,
    theta: f64,
    eps: f64,
    truncation: usize,
    kind: ObservationKind,
    rng: &mut RandomStream,
) -> Result<SequenceObservation> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
    }
    if truncation < f.support() {
        return Err(Error::invalid(format!(
            "truncation K = {truncation} must cover the signal support K_f = {}",
            f.support()
        )));
    }
    if !theta.is_finite() {
        return Err(Error::invalid("theta must be finite"));
    }
    if kind == ObservationKind::Full && theta.abs() > 0.25 {
        return Err(Error::invalid(format!(
            "|theta| = {} exceeds the identifiable range 1/4 of the full model",
            theta.abs()
        )));
    }

    let mut pairs = Vec::with_capacity(truncation);
    for k in 1..=truncation {
        let fk = f.coeff(k);
        let (mean_a, mean_b) = match kind {
            ObservationKind::Full => {
                let phase = omega(k) * theta;
                (fk * phase.cos(), fk * phase.sin())
            }
            ObservationKind::Local => (fk, theta * omega(k) * fk),
        };
        if eps == 0.0 {
            pairs.push((mean_a, mean_b));
        } else {
            let xi = rng.standard_normal();
            let xi_star = rng.standard_normal();
            pairs.push((mean_a + eps * xi, mean_b + eps * xi_star));
        }
    }
    Ok(SequenceObservation {
        kind,
        eps,
        pairs,
        theta_true: Some(theta),
    })
}
