//! Two-asset market model and the martingale drift correction.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpreadError};
use crate::laws::MixingLaw;
use crate::series::{circle_mgf, SeriesOptions};

/// Which dynamics drive the log prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `X = mu + beta Y + sqrt(Y) A N`, some `beta_i != 0`.
    MeanVariance,
    /// `beta = 0`.
    Variance,
    /// `X = mu + sqrt(R) A U` with `U` uniform on the unit circle.
    Elliptical,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::MeanVariance => "mean-variance",
            Mode::Variance => "variance",
            Mode::Elliptical => "elliptical",
        })
    }
}

/// Market inputs. `a` is the square root of the Gaussian covariance,
/// row `i` loading asset `i`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub s1_0: f64,
    pub s2_0: f64,
    pub r: f64,
    pub delta: [f64; 2],
    pub beta: [f64; 2],
    pub a: [[f64; 2]; 2],
    pub law: MixingLaw,
    pub elliptical: bool,
    /// Raw log-return locations for the elliptical model, bypassing the
    /// martingale normalization.
    pub mu_override: Option<[f64; 2]>,
}

impl ModelSpec {
    /// Mean-variance (or variance, when `beta = 0`) model with `delta = 0`.
    pub fn mixture(s1_0: f64, s2_0: f64, r: f64, beta: [f64; 2], a: [[f64; 2]; 2], law: MixingLaw) -> Self {
        Self {
            s1_0,
            s2_0,
            r,
            delta: [0.0; 2],
            beta,
            a,
            law,
            elliptical: false,
            mu_override: None,
        }
    }

    pub fn elliptical(s1_0: f64, s2_0: f64, r: f64, a: [[f64; 2]; 2], law: MixingLaw) -> Self {
        Self {
            elliptical: true,
            ..Self::mixture(s1_0, s2_0, r, [0.0; 2], a, law)
        }
    }

    pub fn sigma2(&self, i: usize) -> f64 {
        row_norm2(&self.a, i)
    }

    pub fn mode(&self) -> Mode {
        if self.elliptical {
            Mode::Elliptical
        } else if self.beta.iter().any(|b| *b != 0.0) {
            Mode::MeanVariance
        } else {
            Mode::Variance
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s1_0", self.s1_0), ("s2_0", self.s2_0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpreadError::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !self.r.is_finite() {
            return Err(SpreadError::invalid("r", "must be finite"));
        }
        let all = self
            .delta
            .iter()
            .chain(self.beta.iter())
            .chain(self.a.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(SpreadError::invalid("model", "delta, beta and a must be finite"));
        }
        for i in 0..2 {
            if self.sigma2(i) <= 0.0 {
                return Err(SpreadError::invalid(
                    &format!("a{}", i + 1),
                    "row of the mixing matrix must be non-zero (sigma^2 > 0)",
                ));
            }
        }
        if self.elliptical && (self.beta != [0.0; 2] || self.delta != [0.0; 2]) {
            return Err(SpreadError::invalid(
                "beta/delta",
                "must be zero in elliptical mode",
            ));
        }
        if !self.elliptical && self.mu_override.is_some() {
            return Err(SpreadError::invalid(
                "mu_override",
                "only supported in elliptical mode",
            ));
        }
        Ok(())
    }
}

pub(crate) fn row_norm2(a: &[[f64; 2]; 2], i: usize) -> f64 {
    a[i][0] * a[i][0] + a[i][1] * a[i][1]
}

/// A European call on `S1(T) - S2(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadContract {
    pub strike: f64,
    /// Only used for discounting and the `r T` drift; the mixing law must
    /// already describe `Y_T`.
    #[serde(default = "unit_maturity")]
    pub maturity: f64,
}

fn unit_maturity() -> f64 {
    1.0
}

impl SpreadContract {
    pub fn new(strike: f64) -> Self {
        Self {
            strike,
            maturity: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike.is_finite() && self.strike >= 0.0) {
            return Err(SpreadError::invalid("strike", format!("must be >= 0, got {}", self.strike)));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(SpreadError::invalid("maturity", "must be positive"));
        }
        Ok(())
    }
}

/// Log-price parameters after the drift correction. `mu` already contains
/// `ln S_i(0)`, so `X_i` is the log of the terminal price.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub mu: [f64; 2],
    pub omega: [f64; 2],
    pub beta: [f64; 2],
    pub a: [[f64; 2]; 2],
    pub law: MixingLaw,
    pub r: f64,
    pub maturity: f64,
    pub mode: Mode,
}

impl EffectiveModel {
    pub fn sigma2(&self, i: usize) -> f64 {
        row_norm2(&self.a, i)
    }

    pub fn discount(&self) -> f64 {
        (-self.r * self.maturity).exp()
    }
}

/// `omega = -delta - ln phi_Y(beta + sigma^2 / 2)`, using the exact mgf.
pub fn martingale_drift(law: &MixingLaw, delta: f64, beta: f64, sigma2: f64) -> Result<f64> {
    let arg = beta + 0.5 * sigma2;
    let bound = law.mgf_domain_bound();
    if arg >= bound {
        return Err(SpreadError::domain(bound, "beta + sigma^2/2", arg));
    }
    Ok(-delta - law.mgf(arg).ln())
}

/// Elliptical analogue: `omega = -ln E[exp(sigma sqrt(R) U_1)]`.
pub fn elliptical_drift(law: &MixingLaw, sigma2: f64, opts: SeriesOptions) -> Result<f64> {
    Ok(-circle_mgf(law, sigma2, opts)?.ln())
}

/// Effective model at the unit horizon.
pub fn build_effective(spec: &ModelSpec) -> Result<EffectiveModel> {
    build_effective_at(spec, 1.0)
}

/// Effective model for maturity `T`; the law in `spec` must be that of `Y_T`.
pub fn build_effective_at(spec: &ModelSpec, maturity: f64) -> Result<EffectiveModel> {
    spec.validate()?;
    let mode = spec.mode();
    let s0 = [spec.s1_0, spec.s2_0];
    let mut mu = [0.0; 2];
    let mut omega = [0.0; 2];
    for i in 0..2 {
        let sigma2 = spec.sigma2(i);
        match (mode, spec.mu_override) {
            (Mode::Elliptical, Some(raw)) => {
                mu[i] = raw[i] + s0[i].ln();
            }
            (Mode::Elliptical, None) => {
                omega[i] = elliptical_drift(&spec.law, sigma2, SeriesOptions::default())?;
                mu[i] = spec.r * maturity + omega[i] + s0[i].ln();
            }
            _ => {
                omega[i] = martingale_drift(&spec.law, spec.delta[i], spec.beta[i], sigma2)?;
                mu[i] = spec.delta[i] + spec.r * maturity + omega[i] + s0[i].ln();
            }
        }
    }
    Ok(EffectiveModel {
        mu,
        omega,
        beta: spec.beta,
        a: spec.a,
        law: spec.law.clone(),
        r: spec.r,
        maturity,
        mode,
    })
}
