//! Mixing distributions for the Gaussian scale: the `Y` of a normal
//! mean-variance mixture or the radial `R` of an elliptical law.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma, InverseGaussian};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpreadError};
use crate::quadrature::{integrate_positive_half_line, Integral, QuadOptions};
use crate::special::{ln_factorial, ln_gamma};

/// Default number of raw moments kept in a law's [`MomentTable`].
pub const DEFAULT_K_MAX: usize = 8;

/// Which moment generating function feeds the matching systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MgfKind {
    Exact,
    /// Fourth-order Taylor polynomial in the raw moments, defined for every
    /// real argument.
    #[default]
    Truncated,
}

impl fmt::Display for MgfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MgfKind::Exact => f.write_str("exact"),
            MgfKind::Truncated => f.write_str("truncated"),
        }
    }
}

/// Parameter convention for the inverse Gaussian law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IgParameterization {
    /// `IG(mean, shape)`: mgf `exp((λ/μ)(1 - sqrt(1 - 2μ²s/λ)))`.
    #[default]
    MeanShape,
    /// `IG(δ, γ)`: mgf `exp(δγ(1 - sqrt(1 - 2s/γ²)))`.
    DeltaGamma,
}

impl fmt::Display for IgParameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IgParameterization::MeanShape => f.write_str("mean-shape"),
            IgParameterization::DeltaGamma => f.write_str("delta-gamma"),
        }
    }
}

/// Raw moments `E[Y^k]` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    values: Vec<f64>,
}

impl MomentTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 5 {
            return Err(SpreadError::invalid(
                "moments",
                format!("need E[Y^k] for k = 0..=4 at least, got {}", values.len()),
            ));
        }
        if values[0] != 1.0 {
            return Err(SpreadError::invalid("moments", "E[Y^0] must be 1"));
        }
        for (k, v) in values.iter().enumerate().skip(1) {
            if v.is_nan() || *v <= 0.0 {
                return Err(SpreadError::invalid(
                    "moments",
                    format!("E[Y^{k}] = {v} is not positive"),
                ));
            }
        }
        for j in 1..values.len() - 1 {
            let (lo, mid, hi) = (values[j - 1], values[j], values[j + 1]);
            if hi.is_finite() && mid * mid > lo * hi * (1.0 + 1e-12) {
                return Err(SpreadError::invalid(
                    "moments",
                    format!("sequence is not log-convex at k = {j}"),
                ));
            }
        }
        Ok(Self { values })
    }

    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type SamplerFn = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// A user-supplied law. All five capabilities are mandatory.
#[derive(Clone)]
pub struct CustomLaw {
    name: String,
    mgf: ScalarFn,
    bound: f64,
    density: ScalarFn,
    sampler: SamplerFn,
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw")
            .field("name", &self.name)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

/// Builder for [`CustomLaw`]; `build` rejects partially specified laws.
#[derive(Default)]
pub struct CustomLawBuilder {
    name: String,
    mgf: Option<ScalarFn>,
    bound: Option<f64>,
    moments: Option<Vec<f64>>,
    density: Option<ScalarFn>,
    sampler: Option<SamplerFn>,
}

impl CustomLawBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn mgf(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.mgf = Some(Arc::new(f));
        self
    }

    pub fn domain_bound(mut self, d: f64) -> Self {
        self.bound = Some(d);
        self
    }

    pub fn raw_moments(mut self, m: Vec<f64>) -> Self {
        self.moments = Some(m);
        self
    }

    pub fn density(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.density = Some(Arc::new(f));
        self
    }

    pub fn sampler(mut self, f: impl Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static) -> Self {
        self.sampler = Some(Arc::new(f));
        self
    }

    pub fn build(self) -> Result<MixingLaw> {
        let missing = [
            ("mgf", self.mgf.is_none()),
            ("domain_bound", self.bound.is_none()),
            ("raw_moments", self.moments.is_none()),
            ("density", self.density.is_none()),
            ("sampler", self.sampler.is_none()),
        ];
        if let Some((field, _)) = missing.iter().find(|(_, m)| *m) {
            return Err(SpreadError::invalid(
                field,
                format!("custom law '{}' is missing this capability", self.name),
            ));
        }
        let bound = self.bound.unwrap();
        if bound.is_nan() || bound <= 0.0 {
            return Err(SpreadError::invalid("domain_bound", "must be positive"));
        }
        let table = MomentTable::new(self.moments.unwrap())?;
        let custom = CustomLaw {
            name: self.name,
            mgf: self.mgf.unwrap(),
            bound,
            density: self.density.unwrap(),
            sampler: self.sampler.unwrap(),
        };
        Ok(MixingLaw {
            family: LawFamily::Custom(Arc::new(custom)),
            moments: table,
            sampler: Sampler::Custom,
        })
    }
}

#[derive(Debug, Clone)]
pub enum LawFamily {
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    InverseGaussian {
        p1: f64,
        p2: f64,
        parameterization: IgParameterization,
    },
    /// Point mass; useful as the `R ≡ const` radial law.
    Degenerate {
        value: f64,
    },
    Custom(Arc<CustomLaw>),
}

#[derive(Debug, Clone)]
enum Sampler {
    Exponential,
    Gamma(Gamma<f64>),
    InverseGaussian(InverseGaussian<f64>),
    Degenerate,
    Custom,
}

/// Distribution of the non-negative mixing variable. Immutable once built.
#[derive(Debug, Clone)]
pub struct MixingLaw {
    family: LawFamily,
    moments: MomentTable,
    sampler: Sampler,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SpreadError::invalid(field, format!("must be a positive finite number, got {v}")))
    }
}

impl MixingLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Self::finish(LawFamily::Exponential { rate }, Sampler::Exponential)
    }

    /// Gamma with the given shape and scale (mean `shape * scale`).
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        let g = Gamma::new(shape, scale).map_err(|e| SpreadError::invalid("gamma", e.to_string()))?;
        Self::finish(LawFamily::Gamma { shape, scale }, Sampler::Gamma(g))
    }

    pub fn inverse_gaussian(p1: f64, p2: f64, parameterization: IgParameterization) -> Result<Self> {
        positive("p1", p1)?;
        positive("p2", p2)?;
        let family = LawFamily::InverseGaussian {
            p1,
            p2,
            parameterization,
        };
        let (mean, shape) = ig_mean_shape(p1, p2, parameterization);
        let ig = InverseGaussian::new(mean, shape)
            .map_err(|e| SpreadError::invalid("inverse_gaussian", format!("{e:?}")))?;
        Self::finish(family, Sampler::InverseGaussian(ig))
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        positive("value", value)?;
        Self::finish(LawFamily::Degenerate { value }, Sampler::Degenerate)
    }

    /// Chi-squared with two degrees of freedom, the radial law that turns
    /// the elliptical model into the bivariate Gaussian one.
    pub fn chi_squared_2() -> Self {
        Self::exponential(0.5).expect("valid rate")
    }

    fn finish(family: LawFamily, sampler: Sampler) -> Result<Self> {
        let mut law = MixingLaw {
            family,
            moments: MomentTable {
                values: vec![1.0; 1],
            },
            sampler,
        };
        let values = (0..=DEFAULT_K_MAX)
            .map(|k| law.closed_form_ln_moment(k).map(f64::exp))
            .collect::<Result<Vec<_>>>()?;
        law.moments = MomentTable::new(values)?;
        Ok(law)
    }

    pub fn family(&self) -> &LawFamily {
        &self.family
    }

    pub fn moment_table(&self) -> &MomentTable {
        &self.moments
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.family, LawFamily::Degenerate { .. })
    }

    /// Short human-readable description including parameter conventions.
    pub fn describe(&self) -> String {
        match &self.family {
            LawFamily::Exponential { rate } => format!("Exp(rate={rate})"),
            LawFamily::Gamma { shape, scale } => format!("Gamma(shape={shape}, scale={scale})"),
            LawFamily::InverseGaussian {
                p1,
                p2,
                parameterization,
            } => format!("IG({p1}, {p2}) [{parameterization}]"),
            LawFamily::Degenerate { value } => format!("Degenerate({value})"),
            LawFamily::Custom(c) => format!("Custom({})", c.name),
        }
    }

    /// Supremum `D` of the arguments where the mgf is finite.
    pub fn mgf_domain_bound(&self) -> f64 {
        match &self.family {
            LawFamily::Exponential { rate } => *rate,
            LawFamily::Gamma { scale, .. } => 1.0 / scale,
            LawFamily::InverseGaussian {
                p1,
                p2,
                parameterization,
            } => {
                let (mu, lambda) = ig_mean_shape(*p1, *p2, *parameterization);
                lambda / (2.0 * mu * mu)
            }
            LawFamily::Degenerate { .. } => f64::INFINITY,
            LawFamily::Custom(c) => c.bound,
        }
    }

    /// `E[e^{sY}]`, or `+inf` when `s >= D`.
    pub fn mgf(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        if s >= self.mgf_domain_bound() {
            return f64::INFINITY;
        }
        match &self.family {
            LawFamily::Exponential { rate } => rate / (rate - s),
            LawFamily::Gamma { shape, scale } => (1.0 - scale * s).powf(-shape),
            LawFamily::InverseGaussian {
                p1,
                p2,
                parameterization,
            } => {
                let (mu, lambda) = ig_mean_shape(*p1, *p2, *parameterization);
                ((lambda / mu) * (1.0 - (1.0 - 2.0 * mu * mu * s / lambda).sqrt())).exp()
            }
            LawFamily::Degenerate { value } => (s * value).exp(),
            LawFamily::Custom(c) => (c.mgf)(s),
        }
    }

    /// `d/ds E[e^{sY}]`.
    pub fn mgf_derivative(&self, s: f64) -> f64 {
        if s >= self.mgf_domain_bound() {
            return f64::INFINITY;
        }
        match &self.family {
            LawFamily::Exponential { rate } => rate / ((rate - s) * (rate - s)),
            LawFamily::Gamma { shape, scale } => shape * scale * (1.0 - scale * s).powf(-shape - 1.0),
            LawFamily::InverseGaussian {
                p1,
                p2,
                parameterization,
            } => {
                let (mu, lambda) = ig_mean_shape(*p1, *p2, *parameterization);
                self.mgf(s) * mu / (1.0 - 2.0 * mu * mu * s / lambda).sqrt()
            }
            LawFamily::Degenerate { value } => value * (s * value).exp(),
            LawFamily::Custom(c) => {
                let h = 1e-6 * (1.0 + s.abs());
                let hi = (s + h).min(s + 0.5 * (c.bound - s));
                let lo = s - (hi - s);
                ((c.mgf)(hi) - (c.mgf)(lo)) / (hi - lo)
            }
        }
    }

    /// Fourth-order Taylor polynomial of the mgf in the raw moments.
    pub fn truncated_mgf(&self, s: f64) -> Result<f64> {
        let m = self.first_four_moments()?;
        Ok(1.0 + s * (m[0] + s * (m[1] / 2.0 + s * (m[2] / 6.0 + s * m[3] / 24.0))))
    }

    pub fn truncated_mgf_derivative(&self, s: f64) -> Result<f64> {
        let m = self.first_four_moments()?;
        Ok(m[0] + s * (m[1] + s * (m[2] / 2.0 + s * m[3] / 6.0)))
    }

    fn first_four_moments(&self) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (k, slot) in out.iter_mut().enumerate() {
            let v = self.moments.get(k + 1).unwrap_or(f64::INFINITY);
            if !v.is_finite() {
                return Err(SpreadError::MomentsUnavailable {
                    order: k + 1,
                    reason: "moments unavailable".into(),
                });
            }
            *slot = v;
        }
        Ok(out)
    }

    /// Mgf of the requested kind. Exact returns `+inf` outside the domain.
    pub fn eval_mgf(&self, kind: MgfKind, s: f64) -> f64 {
        match kind {
            MgfKind::Exact => self.mgf(s),
            MgfKind::Truncated => self.truncated_mgf(s).unwrap_or(f64::NAN),
        }
    }

    pub fn eval_mgf_derivative(&self, kind: MgfKind, s: f64) -> f64 {
        match kind {
            MgfKind::Exact => self.mgf_derivative(s),
            MgfKind::Truncated => self.truncated_mgf_derivative(s).unwrap_or(f64::NAN),
        }
    }

    /// `E[Y^k]`.
    pub fn raw_moment(&self, k: usize) -> Result<f64> {
        self.ln_raw_moment(k).map(f64::exp)
    }

    /// `ln E[Y^k]`; closed forms for built-in families, table lookup for
    /// custom laws.
    pub fn ln_raw_moment(&self, k: usize) -> Result<f64> {
        if let LawFamily::Custom(_) = self.family {
            return match self.moments.get(k) {
                Some(v) if v.is_finite() => Ok(v.ln()),
                Some(_) => Err(SpreadError::MomentsUnavailable {
                    order: k,
                    reason: "moment is infinite".into(),
                }),
                None => Err(SpreadError::MomentsUnavailable {
                    order: k,
                    reason: format!("moment table stops at k = {}", self.moments.k_max()),
                }),
            };
        }
        self.closed_form_ln_moment(k)
    }

    fn closed_form_ln_moment(&self, k: usize) -> Result<f64> {
        let kf = k as f64;
        Ok(match &self.family {
            LawFamily::Exponential { rate } => ln_factorial(k) - kf * rate.ln(),
            LawFamily::Gamma { shape, scale } => {
                kf * scale.ln() + ln_gamma(shape + kf) - ln_gamma(*shape)
            }
            LawFamily::InverseGaussian {
                p1,
                p2,
                parameterization,
            } => {
                let (mu, lambda) = ig_mean_shape(*p1, *p2, *parameterization);
                ig_ln_moment(mu, lambda, k)
            }
            LawFamily::Degenerate { value } => kf * value.ln(),
            LawFamily::Custom(_) => unreachable!("custom moments come from the table"),
        })
    }

    pub fn mean(&self) -> f64 {
        self.moments.get(1).unwrap_or(1.0)
    }

    /// Density `f_Y(y)`; zero for `y <= 0` and for the point-mass law.
    pub fn density(&self, y: f64) -> f64 {
        match &self.family {
            LawFamily::Custom(c) if y > 0.0 && y.is_finite() => (c.density)(y),
            _ => self.ln_density(y).exp(),
        }
    }

    /// `ln f_Y(y)`, `-inf` off the support.
    pub fn ln_density(&self, y: f64) -> f64 {
        if y <= 0.0 || !y.is_finite() {
            return f64::NEG_INFINITY;
        }
        match &self.family {
            LawFamily::Exponential { rate } => rate.ln() - rate * y,
            LawFamily::Gamma { shape, scale } => {
                (shape - 1.0) * y.ln() - y / scale - ln_gamma(*shape) - shape * scale.ln()
            }
            LawFamily::InverseGaussian {
                p1,
                p2,
                parameterization,
            } => {
                let (mu, lambda) = ig_mean_shape(*p1, *p2, *parameterization);
                let d = y - mu;
                0.5 * (lambda / (2.0 * std::f64::consts::PI * y * y * y)).ln()
                    - lambda * d * d / (2.0 * mu * mu * y)
            }
            LawFamily::Degenerate { .. } => f64::NEG_INFINITY,
            LawFamily::Custom(c) => (c.density)(y).ln(),
        }
    }

    /// One draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match (&self.sampler, &self.family) {
            (Sampler::Exponential, LawFamily::Exponential { rate }) => {
                // Inverse CDF on (0, 1].
                let u: f64 = 1.0 - rng.random::<f64>();
                -u.ln() / rate
            }
            (Sampler::Gamma(g), _) => g.sample(rng),
            (Sampler::InverseGaussian(ig), _) => ig.sample(rng),
            (Sampler::Degenerate, LawFamily::Degenerate { value }) => *value,
            (Sampler::Custom, LawFamily::Custom(c)) => (c.sampler)(rng as &mut dyn RngCore),
            _ => unreachable!("sampler always matches its family"),
        }
    }

    pub fn sample_n<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// `E[g(Y)]`: adaptive quadrature against the density, or a point
    /// evaluation for the degenerate law.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, opts: QuadOptions) -> Result<Integral> {
        if let LawFamily::Degenerate { value } = self.family {
            return Ok(Integral {
                value: g(value),
                error: 0.0,
            });
        }
        integrate_positive_half_line(
            |y| {
                let f = self.density(y);
                if f == 0.0 {
                    0.0
                } else {
                    g(y) * f
                }
            },
            self.mean(),
            opts,
        )
    }

    /// `E[exp(ln_g(Y))]` with the exponent combined with `ln f_Y` before
    /// exponentiating, so large `ln_g` against a thin tail does not overflow.
    pub fn expect_exp<G: Fn(f64) -> f64>(&self, ln_g: G, opts: QuadOptions) -> Result<Integral> {
        if let LawFamily::Degenerate { value } = self.family {
            return Ok(Integral {
                value: ln_g(value).exp(),
                error: 0.0,
            });
        }
        integrate_positive_half_line(
            |y| {
                let lf = self.ln_density(y);
                if lf == f64::NEG_INFINITY {
                    0.0
                } else {
                    (ln_g(y) + lf).exp()
                }
            },
            self.mean(),
            opts,
        )
    }
}

/// Converts either IG convention to `(mean, shape)`.
pub fn ig_mean_shape(p1: f64, p2: f64, p: IgParameterization) -> (f64, f64) {
    match p {
        IgParameterization::MeanShape => (p1, p2),
        // delta = p1, gamma = p2
        IgParameterization::DeltaGamma => (p1 / p2, p1 * p1),
    }
}

// E[Y^k] = mu^k sum_{i<k} (k-1+i)! / (i! (k-1-i)!) (mu / 2λ)^i
fn ig_ln_moment(mu: f64, lambda: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let ratio = (mu / (2.0 * lambda)).ln();
    let terms: Vec<f64> = (0..k)
        .map(|i| {
            ln_factorial(k - 1 + i) - ln_factorial(i) - ln_factorial(k - 1 - i) + i as f64 * ratio
        })
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    k as f64 * mu.ln() + max + sum.ln()
}

/// Serializable description of a law, as used in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawSpec {
    pub family: String,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameterization: Option<IgParameterization>,
}

impl LawSpec {
    pub fn to_law(&self) -> Result<MixingLaw> {
        let want = |n: usize| -> Result<()> {
            if self.params.len() == n {
                Ok(())
            } else {
                Err(SpreadError::invalid(
                    "law.params",
                    format!("{} expects {n} parameter(s), got {}", self.family, self.params.len()),
                ))
            }
        };
        match self.family.to_ascii_lowercase().as_str() {
            "exponential" | "exp" => {
                want(1)?;
                MixingLaw::exponential(self.params[0])
            }
            "gamma" => {
                want(2)?;
                MixingLaw::gamma(self.params[0], self.params[1])
            }
            "inverse_gaussian" | "inversegaussian" | "ig" => {
                want(2)?;
                MixingLaw::inverse_gaussian(
                    self.params[0],
                    self.params[1],
                    self.parameterization.unwrap_or_default(),
                )
            }
            "degenerate" | "constant" => {
                want(1)?;
                MixingLaw::degenerate(self.params[0])
            }
            "chi_squared_2" | "chi2" => {
                want(0)?;
                Ok(MixingLaw::chi_squared_2())
            }
            other => Err(SpreadError::invalid(
                "law.family",
                format!("unknown family '{other}'"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp1() -> MixingLaw {
        MixingLaw::exponential(1.0).unwrap()
    }
    fn gamma21() -> MixingLaw {
        MixingLaw::gamma(2.0, 1.0).unwrap()
    }
    fn ig() -> MixingLaw {
        MixingLaw::inverse_gaussian(1.0 / 2f64.sqrt(), 1.0, IgParameterization::MeanShape).unwrap()
    }

    #[test]
    fn mgf_examples() {
        assert_eq!(exp1().mgf(0.0), 1.0);
        assert!((exp1().mgf(0.5) - 2.0).abs() < 1e-15);
        assert!((gamma21().mgf(0.5) - 4.0).abs() < 1e-14);
        assert_eq!(exp1().mgf(1.0), f64::INFINITY);
        assert_eq!(exp1().mgf(3.0), f64::INFINITY);
    }

    #[test]
    fn domain_bounds() {
        assert_eq!(exp1().mgf_domain_bound(), 1.0);
        assert_eq!(gamma21().mgf_domain_bound(), 1.0);
        assert!((ig().mgf_domain_bound() - 1.0).abs() < 1e-15);
        let dg = MixingLaw::inverse_gaussian(1.0 / 2f64.sqrt(), 1.0, IgParameterization::DeltaGamma)
            .unwrap();
        assert!((dg.mgf_domain_bound() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn delta_gamma_matches_its_closed_form() {
        let (delta, gamma) = (0.8, 1.3);
        let law = MixingLaw::inverse_gaussian(delta, gamma, IgParameterization::DeltaGamma).unwrap();
        let s = 0.3;
        let expected = (delta * gamma * (1.0 - (1.0 - 2.0 * s / (gamma * gamma)).sqrt())).exp();
        assert!((law.mgf(s) - expected).abs() < 1e-14);
    }

    #[test]
    fn truncated_mgf_examples() {
        assert_eq!(exp1().truncated_mgf(0.0).unwrap(), 1.0);
        assert!((exp1().truncated_mgf(0.1).unwrap() - 1.1111).abs() < 1e-14);
        // Gamma(2,1): Lagrange remainder E[Y^5 e^{ξY}] s^5 / 120. For s < 0
        // the factor e^{ξY} <= 1; for s = 0.1 it is below 2.
        let g = gamma21();
        let m5 = g.raw_moment(5).unwrap();
        for (s, factor) in [(-0.1f64, 1.0), (0.1, 2.0)] {
            let bound = factor * s.abs().powi(5) * m5 / 120.0;
            let diff = (g.truncated_mgf(s).unwrap() - g.mgf(s)).abs();
            assert!(diff <= bound, "s={s}: {diff} > {bound}");
        }
        // Defined beyond the domain bound.
        assert!(exp1().truncated_mgf(5.0).unwrap().is_finite());
    }

    #[test]
    fn raw_moment_examples() {
        assert!((exp1().raw_moment(3).unwrap() - 6.0).abs() < 1e-12);
        assert!((gamma21().raw_moment(2).unwrap() - 6.0).abs() < 1e-12);
        assert!((ig().raw_moment(1).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        // Var = mu^3 / lambda
        let mu = 1.0 / 2f64.sqrt();
        assert!((ig().raw_moment(2).unwrap() - (mu * mu + mu.powi(3))).abs() < 1e-14);
    }

    #[test]
    fn ig_moments_match_quadrature() {
        let law = ig();
        for k in 1..=6 {
            let q = law
                .expect(|y| y.powi(k as i32), QuadOptions::with_rel_tol(1e-12))
                .unwrap();
            let m = law.raw_moment(k).unwrap();
            assert!(((q.value - m) / m).abs() < 1e-9, "k={k}: {} vs {m}", q.value);
        }
    }

    #[test]
    fn densities() {
        assert!((exp1().density(0.5) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((gamma21().density(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(exp1().density(0.0), 0.0);
        assert_eq!(exp1().density(-1.0), 0.0);
        for law in [exp1(), gamma21(), ig(), MixingLaw::gamma(0.5, 2.0).unwrap()] {
            let total = law.expect(|_| 1.0, QuadOptions::with_rel_tol(1e-12)).unwrap();
            assert!((total.value - 1.0).abs() < 1e-10, "{}: {}", law.describe(), total.value);
        }
    }

    #[test]
    fn mgf_derivatives_match_finite_differences() {
        for law in [exp1(), gamma21(), ig()] {
            for s in [-0.5, 0.0, 0.3, 0.7] {
                let h = 1e-6;
                let fd = (law.mgf(s + h) - law.mgf(s - h)) / (2.0 * h);
                let an = law.mgf_derivative(s);
                assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{} s={s}", law.describe());
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = exp1().sample_n(&mut ChaCha8Rng::seed_from_u64(7), 100);
        let b = exp1().sample_n(&mut ChaCha8Rng::seed_from_u64(7), 100);
        assert_eq!(a, b);
    }

    #[test]
    fn sample_means_within_clt_bounds() {
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = exp1().sample_n(&mut rng, n).iter().sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 3.0 / (n as f64).sqrt());
        let m = gamma21().sample_n(&mut rng, n).iter().sum::<f64>() / n as f64;
        assert!((m - 2.0).abs() < 3.0 * 2f64.sqrt() / 1e3);
    }

    #[test]
    fn custom_law_requires_every_capability() {
        let partial = CustomLawBuilder::new("half")
            .mgf(|s| 1.0 / (1.0 - s))
            .domain_bound(1.0)
            .build();
        assert!(matches!(partial, Err(SpreadError::InvalidInput { .. })));

        let full = CustomLawBuilder::new("exp-copy")
            .mgf(|s| 1.0 / (1.0 - s))
            .domain_bound(1.0)
            .raw_moments((0..=8).map(|k| (1..=k).product::<usize>() as f64).collect())
            .density(|y| (-y).exp())
            .sampler(|rng| -(1.0 - rng.random::<f64>()).ln())
            .build()
            .unwrap();
        assert_eq!(full.mgf(0.0), 1.0);
        assert_eq!(full.mgf(1.5), f64::INFINITY);
        assert!((full.mgf_derivative(0.5) - 4.0).abs() < 1e-6);
        assert!((full.raw_moment(4).unwrap() - 24.0).abs() < 1e-12);
        assert!(full.raw_moment(9).is_err());
    }

    #[test]
    fn moment_table_rejects_bad_input() {
        assert!(MomentTable::new(vec![1.0, 1.0, 2.0]).is_err());
        assert!(MomentTable::new(vec![2.0, 1.0, 2.0, 6.0, 24.0]).is_err());
        // E[Y^2] < E[Y]^2 breaks log-convexity.
        assert!(MomentTable::new(vec![1.0, 2.0, 1.0, 6.0, 24.0]).is_err());
    }

    #[test]
    fn law_spec_parsing() {
        let spec = LawSpec {
            family: "ig".into(),
            params: vec![0.5, 1.0],
            parameterization: None,
        };
        let law = spec.to_law().unwrap();
        assert!(law.describe().contains("mean-shape"));
        let bad = LawSpec {
            family: "gamma".into(),
            params: vec![1.0],
            parameterization: None,
        };
        assert!(bad.to_law().is_err());
    }
}
