//! Semi-closed prices of the matched proxies and the end-to-end
//! approximation pipeline.

use serde::Serialize;

use crate::error::{Result, SpreadError};
use crate::laws::{IgParameterization, LawFamily, MgfKind, MixingLaw};
use crate::matcher::{match_e, match_mv, match_v, MatchOptions, MatchReport, ProxyParams, ProxyParamsE, ProxyParamsMV, ProxyParamsV};
use crate::model::{build_effective_at, EffectiveModel, Mode, ModelSpec, SpreadContract};
use crate::moments::{exact_moments_elliptical, exact_moments_mv, exact_moments_v, MomentSet};
use crate::quadrature::{integrate, integrate_positive_half_line, Integral, QuadOptions};
use crate::series::{circle_mgf, SeriesOptions};
use crate::special::{ln_norm_cdf, norm_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// Shift at or above the strike: the payoff is linear.
    ShiftAboveStrike,
    Integral,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::ShiftAboveStrike => "shift-above-strike",
            Branch::Integral => "integral",
        })
    }
}

/// Price of a proxy at one strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormulaPrice {
    /// `max(raw_price, 0)`.
    pub price: f64,
    pub raw_price: f64,
    pub floored: bool,
    pub branch: Branch,
    pub quadrature_error_estimate: f64,
}

impl FormulaPrice {
    fn new(raw_price: f64, branch: Branch, quadrature_error_estimate: f64) -> Self {
        Self {
            price: raw_price.max(0.0),
            raw_price,
            floored: raw_price < 0.0,
            branch,
            quadrature_error_estimate,
        }
    }
}

/// `E[g(Y)]` by adaptive quadrature at relative tolerance `tol`.
pub fn mixture_expectation<G: Fn(f64) -> f64>(g: G, law: &MixingLaw, tol: f64) -> Result<Integral> {
    law.expect(g, QuadOptions::with_rel_tol(tol))
}

fn check_strike(strike: f64) -> Result<()> {
    if !strike.is_finite() {
        return Err(SpreadError::invalid("strike", "must be finite"));
    }
    Ok(())
}

/// Mean-variance proxy price. `r` is the total discount exponent
/// (rate times maturity).
pub fn price_mv(
    p: &ProxyParamsMV,
    law: &MixingLaw,
    strike: f64,
    r: f64,
    kind: MgfKind,
    tol: f64,
) -> Result<FormulaPrice> {
    check_strike(strike)?;
    if !(p.a > 0.0) {
        return Err(SpreadError::invalid("a", "must be positive"));
    }
    let a2 = p.a * p.a;
    let s = a2 / 2.0 + p.b;
    let bound = law.mgf_domain_bound();
    let disc = (-r).exp();
    if p.d >= strike {
        if kind == MgfKind::Exact && s >= bound {
            return Err(SpreadError::domain(bound, "phi(a^2/2+b)", s));
        }
        let v = disc * ((p.c).exp() * law.eval_mgf(kind, s) + p.d - strike);
        return Ok(FormulaPrice::new(v, Branch::ShiftAboveStrike, 0.0));
    }
    if s >= bound {
        return Err(SpreadError::domain(bound, "E[e^{(a^2/2+b)Y}]", s));
    }
    let l = (strike - p.d).ln();
    let opts = QuadOptions::with_rel_tol(tol);
    let first = law.expect_exp(
        |y| s * y + p.c + ln_norm_cdf(-(l - (a2 + p.b) * y - p.c) / (p.a * y.sqrt())),
        opts,
    )?;
    let second = law.expect(|y| norm_cdf(-(l - p.b * y - p.c) / (p.a * y.sqrt())), opts)?;
    let w = p.d - strike;
    let v = disc * (first.value + w * second.value);
    let err = disc * (first.error + w.abs() * second.error);
    Ok(FormulaPrice::new(v, Branch::Integral, err))
}

/// Variance proxy price with constant drift `b`.
pub fn price_v(
    p: &ProxyParamsV,
    law: &MixingLaw,
    strike: f64,
    r: f64,
    kind: MgfKind,
    tol: f64,
) -> Result<FormulaPrice> {
    check_strike(strike)?;
    if !(p.a > 0.0) {
        return Err(SpreadError::invalid("a", "must be positive"));
    }
    let a2 = p.a * p.a;
    let s = a2 / 2.0;
    let bound = law.mgf_domain_bound();
    let disc = (-r).exp();
    if p.c >= strike {
        if kind == MgfKind::Exact && s >= bound {
            return Err(SpreadError::domain(bound, "phi(a^2/2)", s));
        }
        let v = disc * (p.b.exp() * law.eval_mgf(kind, s) + p.c - strike);
        return Ok(FormulaPrice::new(v, Branch::ShiftAboveStrike, 0.0));
    }
    if s >= bound {
        return Err(SpreadError::domain(bound, "E[e^{a^2 Y/2}]", s));
    }
    let l = (strike - p.c).ln();
    let opts = QuadOptions::with_rel_tol(tol);
    let first = law.expect_exp(
        |y| s * y + p.b + ln_norm_cdf(-(l - a2 * y - p.b) / (p.a * y.sqrt())),
        opts,
    )?;
    let second = law.expect(|y| norm_cdf(-(l - p.b) / (p.a * y.sqrt())), opts)?;
    let w = p.c - strike;
    let v = disc * (first.value + w * second.value);
    let err = disc * (first.error + w.abs() * second.error);
    Ok(FormulaPrice::new(v, Branch::Integral, err))
}

/// Density of `sqrt(R) U_1`:
/// `h(z) = (2/pi) int_0^inf f_R(z^2 + u^2) du`.
///
/// For the point mass `R = r0` this is the scaled arcsine density.
pub fn radial_density_h(law: &MixingLaw, z: f64, tol: f64) -> Result<f64> {
    let z2 = z * z;
    if let LawFamily::Degenerate { value } = law.family() {
        return Ok(if z2 < *value {
            1.0 / (std::f64::consts::PI * (value - z2).sqrt())
        } else {
            0.0
        });
    }
    let split = law.mean().sqrt().max(1e-3);
    let r = integrate_positive_half_line(
        |u| law.density(z2 + u * u),
        split,
        QuadOptions {
            abs_tol: 1e-16,
            ..QuadOptions::with_rel_tol(tol)
        },
    )?;
    Ok(2.0 / std::f64::consts::PI * r.value)
}

/// `int_lo^inf g(z) h(z) dz`.
fn radial_tail_integral<G: Fn(f64) -> f64>(law: &MixingLaw, lo: f64, g: G, tol: f64) -> Result<Integral> {
    let opts = QuadOptions::with_rel_tol(tol);
    if let LawFamily::Degenerate { value } = law.family() {
        // z = sqrt(r0) cos(theta) turns the arcsine law into a uniform angle.
        let rt = value.sqrt();
        if lo >= rt {
            return Ok(Integral { value: 0.0, error: 0.0 });
        }
        let top = if lo <= -rt { std::f64::consts::PI } else { (lo / rt).acos() };
        let r = integrate(|t| g(rt * t.cos()), 0.0, top, opts)?;
        return Ok(Integral {
            value: r.value / std::f64::consts::PI,
            error: r.error / std::f64::consts::PI,
        });
    }
    let inner_tol = (tol * 1e-2).max(1e-13);
    // h underflows long before g overflows; skip g where h vanishes.
    let gh = |z: f64| match radial_density_h(law, z, inner_tol) {
        Ok(0.0) => 0.0,
        Ok(hz) => g(z) * hz,
        Err(_) => f64::NAN,
    };
    let lo_pos = lo.max(0.0);
    let mut total = crate::quadrature::integrate_to_infinity(gh, lo_pos, QuadOptions { abs_tol: 1e-16, ..opts })?;
    if lo < 0.0 {
        total = total + integrate(gh, lo, 0.0, QuadOptions { abs_tol: 1e-16, ..opts })?;
    }
    Ok(total)
}

/// Elliptical proxy price, `W_e = exp(a sqrt(R) U_1 + b) + c`.
pub fn price_e(
    p: &ProxyParamsE,
    law: &MixingLaw,
    strike: f64,
    r: f64,
    tol: f64,
    series: SeriesOptions,
) -> Result<FormulaPrice> {
    check_strike(strike)?;
    if !(p.a > 0.0) {
        return Err(SpreadError::invalid("a", "must be positive"));
    }
    let disc = (-r).exp();
    if p.c >= strike {
        let v = disc * (p.b.exp() * circle_mgf(law, p.a * p.a, series)? + p.c - strike);
        return Ok(FormulaPrice::new(v, Branch::ShiftAboveStrike, 0.0));
    }
    let lo = ((strike - p.c).ln() - p.b) / p.a;
    let first = radial_tail_integral(law, lo, |z| (p.a * z + p.b).exp(), tol)?;
    let second = radial_tail_integral(law, lo, |_| 1.0, tol)?;
    let w = p.c - strike;
    let v = disc * (first.value + w * second.value);
    let err = disc * (first.error + w.abs() * second.error);
    Ok(FormulaPrice::new(v, Branch::Integral, err))
}

fn ensure_kind(matched: MgfKind, priced: MgfKind) -> Result<()> {
    if matched != priced {
        return Err(SpreadError::MgfKindMismatch { matched, priced });
    }
    Ok(())
}

/// [`price_mv`] on a match, rejecting a different mgf kind.
pub fn price_matched_mv(
    m: &MatchReport<ProxyParamsMV>,
    law: &MixingLaw,
    strike: f64,
    r: f64,
    kind: MgfKind,
    tol: f64,
) -> Result<FormulaPrice> {
    ensure_kind(m.mgf_kind, kind)?;
    price_mv(&m.params, law, strike, r, kind, tol)
}

pub fn price_matched_v(
    m: &MatchReport<ProxyParamsV>,
    law: &MixingLaw,
    strike: f64,
    r: f64,
    kind: MgfKind,
    tol: f64,
) -> Result<FormulaPrice> {
    ensure_kind(m.mgf_kind, kind)?;
    price_v(&m.params, law, strike, r, kind, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatchedProxy {
    MeanVariance(MatchReport<ProxyParamsMV>),
    Variance(MatchReport<ProxyParamsV>),
    Elliptical(MatchReport<ProxyParamsE>),
}

impl MatchedProxy {
    pub fn mode(&self) -> Mode {
        match self {
            MatchedProxy::MeanVariance(_) => Mode::MeanVariance,
            MatchedProxy::Variance(_) => Mode::Variance,
            MatchedProxy::Elliptical(_) => Mode::Elliptical,
        }
    }

    pub fn residual_norm(&self) -> f64 {
        match self {
            MatchedProxy::MeanVariance(m) => m.residual_norm,
            MatchedProxy::Variance(m) => m.residual_norm,
            MatchedProxy::Elliptical(m) => m.residual_norm,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            MatchedProxy::MeanVariance(m) => m.iterations,
            MatchedProxy::Variance(m) => m.iterations,
            MatchedProxy::Elliptical(m) => m.iterations,
        }
    }

    pub fn starts_tried(&self) -> usize {
        match self {
            MatchedProxy::MeanVariance(m) => m.starts_tried,
            MatchedProxy::Variance(m) => m.starts_tried,
            MatchedProxy::Elliptical(m) => m.starts_tried,
        }
    }

    pub fn params(&self) -> ProxyParams {
        match self {
            MatchedProxy::MeanVariance(m) => m.params.into(),
            MatchedProxy::Variance(m) => m.params.into(),
            MatchedProxy::Elliptical(m) => m.params.into(),
        }
    }

    /// Named parameter values in a fixed order.
    pub fn named_params(&self) -> Vec<(&'static str, f64)> {
        match self {
            MatchedProxy::MeanVariance(m) => {
                let p = m.params;
                vec![("a", p.a), ("b", p.b), ("c", p.c), ("d", p.d)]
            }
            MatchedProxy::Variance(m) => {
                let p = m.params;
                vec![("a", p.a), ("b", p.b), ("c", p.c)]
            }
            MatchedProxy::Elliptical(m) => {
                let p = m.params;
                vec![("a", p.a), ("b", p.b), ("c", p.c)]
            }
        }
    }

    /// The proxy shift compared against the strike.
    pub fn shift(&self) -> f64 {
        match self {
            MatchedProxy::MeanVariance(m) => m.params.d,
            MatchedProxy::Variance(m) => m.params.c,
            MatchedProxy::Elliptical(m) => m.params.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOptions {
    /// Mgf used on the proxy side of the matching system and in pricing.
    pub mgf_kind: MgfKind,
    /// Mgf used for the model's spread moments. Exact unless the model's
    /// arguments leave the domain, in which case the truncated polynomial
    /// is used.
    pub target_mgf: MgfKind,
    /// Relative quadrature tolerance.
    pub tol: f64,
    pub matching: MatchOptions,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            mgf_kind: MgfKind::Truncated,
            target_mgf: MgfKind::Exact,
            tol: 1e-9,
            matching: MatchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub law: String,
    pub ig_parameterization: Option<IgParameterization>,
    pub mgf_kind: MgfKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceReport {
    pub strike: f64,
    pub price: f64,
    pub raw_price: f64,
    pub floored: bool,
    pub branch: Branch,
    pub quadrature_error_estimate: f64,
    pub matched: MatchedProxy,
    pub moments: MomentSet,
    pub conventions: Conventions,
}

fn target_moments(f: impl Fn(MgfKind) -> Result<MomentSet>, kind: MgfKind) -> Result<MomentSet> {
    match f(kind) {
        Err(SpreadError::MgfDomain { .. }) if kind == MgfKind::Exact => f(MgfKind::Truncated),
        other => other,
    }
}

/// A model with its moments matched once, ready to price any strike at
/// the matched maturity.
#[derive(Debug, Clone)]
pub struct ApproxPricer {
    pub model: EffectiveModel,
    pub moments: MomentSet,
    pub matched: MatchedProxy,
    pub opts: ApproxOptions,
}

impl ApproxPricer {
    pub fn new(spec: &ModelSpec, maturity: f64, opts: ApproxOptions) -> Result<Self> {
        let model = build_effective_at(spec, maturity)?;
        let law = &model.law;
        let kind = opts.mgf_kind;
        let (moments, matched) = match model.mode {
            Mode::MeanVariance => {
                let m = target_moments(|k| exact_moments_mv(&model, k), opts.target_mgf)?;
                let rep = match_mv(&m, law, kind, &opts.matching)?;
                (m, MatchedProxy::MeanVariance(rep))
            }
            Mode::Variance => {
                let m = target_moments(|k| exact_moments_v(&model, k), opts.target_mgf)?;
                let rep = match_v(&m, law, kind, &opts.matching)?;
                (m, MatchedProxy::Variance(rep))
            }
            Mode::Elliptical => {
                let m = exact_moments_elliptical(&model, opts.matching.series)?;
                let rep = match_e(&m, law, &opts.matching)?;
                (m, MatchedProxy::Elliptical(rep))
            }
        };
        Ok(Self {
            model,
            moments,
            matched,
            opts,
        })
    }

    pub fn conventions(&self) -> Conventions {
        let ig = match self.model.law.family() {
            LawFamily::InverseGaussian { parameterization, .. } => Some(*parameterization),
            _ => None,
        };
        Conventions {
            law: self.model.law.describe(),
            ig_parameterization: ig,
            mgf_kind: match self.matched {
                MatchedProxy::Elliptical(_) => MgfKind::Exact,
                _ => self.opts.mgf_kind,
            },
        }
    }

    pub fn formula_price(&self, strike: f64) -> Result<FormulaPrice> {
        let law = &self.model.law;
        let r = self.model.r * self.model.maturity;
        let tol = self.opts.tol;
        let kind = self.opts.mgf_kind;
        match &self.matched {
            MatchedProxy::MeanVariance(m) => price_matched_mv(m, law, strike, r, kind, tol),
            MatchedProxy::Variance(m) => price_matched_v(m, law, strike, r, kind, tol),
            MatchedProxy::Elliptical(m) => price_e(&m.params, law, strike, r, tol, self.opts.matching.series),
        }
    }

    pub fn price(&self, strike: f64) -> Result<PriceReport> {
        let f = self.formula_price(strike)?;
        Ok(PriceReport {
            strike,
            price: f.price,
            raw_price: f.raw_price,
            floored: f.floored,
            branch: f.branch,
            quadrature_error_estimate: f.quadrature_error_estimate,
            matched: self.matched.clone(),
            moments: self.moments.clone(),
            conventions: self.conventions(),
        })
    }
}

/// Moments, matching and pricing in one call.
pub fn price_spread_approx(spec: &ModelSpec, contract: &SpreadContract, opts: &ApproxOptions) -> Result<PriceReport> {
    contract.validate()?;
    ApproxPricer::new(spec, contract.maturity, *opts)?.price(contract.strike)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_to_infinity;
    use crate::special::norm_pdf;

    fn exp1() -> MixingLaw {
        MixingLaw::exponential(1.0).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let law = exp1();
        let one = mixture_expectation(|_| 1.0, &law, 1e-9).unwrap();
        assert!((one.value - 1.0).abs() < 1e-12);
        let g = MixingLaw::gamma(2.0, 0.5).unwrap();
        let d = g.mgf_domain_bound();
        let v = mixture_expectation(|y| (d / 2.0 * y).exp(), &g, 1e-10).unwrap();
        assert!((v.value / g.mgf(d / 2.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shift_branch_is_linear() {
        let law = exp1();
        let p = ProxyParamsMV::new(0.3, 0.05, 0.1, 2.0);
        let f = price_mv(&p, &law, 1.5, 0.05, MgfKind::Exact, 1e-9).unwrap();
        let a1 = 0.1f64.exp() * law.mgf(0.045 + 0.05) + 2.0;
        assert_eq!(f.branch, Branch::ShiftAboveStrike);
        assert!((f.price - (-0.05f64).exp() * (a1 - 1.5)).abs() < 1e-14);
    }

    #[test]
    fn branches_meet_at_the_shift() {
        let law = MixingLaw::gamma(2.0, 0.5).unwrap();
        let p = ProxyParamsMV::new(0.3, -0.05, 0.1, 1.0);
        let lo = price_mv(&p, &law, 1.0 + 1e-9, 0.0, MgfKind::Exact, 1e-10).unwrap();
        let hi = price_mv(&p, &law, 1.0 - 1e-9, 0.0, MgfKind::Exact, 1e-10).unwrap();
        assert_eq!(lo.branch, Branch::Integral);
        assert!((lo.price - hi.price).abs() < 1e-6, "{} {}", lo.price, hi.price);
        let q = ProxyParamsV::new(0.3, 0.1, 1.0);
        let lo = price_v(&q, &law, 1.0 + 1e-9, 0.0, MgfKind::Exact, 1e-10).unwrap();
        let hi = price_v(&q, &law, 1.0 - 1e-9, 0.0, MgfKind::Exact, 1e-10).unwrap();
        assert!((lo.price - hi.price).abs() < 1e-6);
    }

    #[test]
    fn degenerate_mixer_gives_black_scholes_shape() {
        // Y = 1, b = 0: a shifted lognormal with log-sd a.
        let law = MixingLaw::degenerate(1.0).unwrap();
        let p = ProxyParamsV::new(0.2, 0.0, 0.0);
        let f = price_v(&p, &law, 1.0, 0.0, MgfKind::Exact, 1e-10).unwrap();
        let bs = 0.02f64.exp() * norm_cdf(0.2) - 0.5;
        assert!((f.price - bs).abs() < 1e-14);
    }

    #[test]
    fn h_examples() {
        let chi = MixingLaw::chi_squared_2();
        for z in [0.0, 0.5, 1.0, 2.0] {
            let h = radial_density_h(&chi, z, 1e-12).unwrap();
            assert!((h - norm_pdf(z)).abs() < 1e-10, "z={z}: {h}");
        }
        let one = MixingLaw::degenerate(1.0).unwrap();
        let h = radial_density_h(&one, 0.5, 1e-12).unwrap();
        assert!((h - 1.0 / (std::f64::consts::PI * 0.75f64.sqrt())).abs() < 1e-14);
        assert_eq!(radial_density_h(&one, 1.5, 1e-12).unwrap(), 0.0);
        let law = exp1();
        let total = integrate_to_infinity(|z| radial_density_h(&law, z, 1e-12).unwrap(), 0.0, QuadOptions::with_rel_tol(1e-10))
            .unwrap();
        assert!((2.0 * total.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn elliptical_gaussian_reduction() {
        let chi = MixingLaw::chi_squared_2();
        let unit = MixingLaw::degenerate(1.0).unwrap();
        let e = ProxyParamsE::new(0.25, 0.1, 0.2);
        let v = ProxyParamsV::new(0.25, 0.1, 0.2);
        for k in [0.5, 1.2, 1.6] {
            let pe = price_e(&e, &chi, k, 0.0, 1e-10, SeriesOptions::default()).unwrap();
            let pv = price_v(&v, &unit, k, 0.0, MgfKind::Exact, 1e-10).unwrap();
            assert!((pe.price - pv.price).abs() < 1e-6, "K={k}: {} {}", pe.price, pv.price);
        }
    }

    #[test]
    fn elliptical_point_mass_by_angle() {
        let unit = MixingLaw::degenerate(1.0).unwrap();
        let e = ProxyParamsE::new(0.5, 0.0, 0.0);
        let k = 1.1;
        let pe = price_e(&e, &unit, k, 0.0, 1e-11, SeriesOptions::default()).unwrap();
        let direct = integrate(
            |t| ((0.5 * t.cos()).exp() - k).max(0.0),
            0.0,
            std::f64::consts::PI,
            QuadOptions::with_rel_tol(1e-12),
        )
        .unwrap()
        .value
            / std::f64::consts::PI;
        assert!((pe.price - direct).abs() < 1e-9, "{} {direct}", pe.price);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let law = exp1();
        let rep = MatchReport {
            params: ProxyParamsMV::new(0.3, 0.0, 0.0, 0.0),
            residual_norm: 0.0,
            iterations: 0,
            starts_tried: 1,
            mgf_kind: MgfKind::Truncated,
        };
        assert!(matches!(
            price_matched_mv(&rep, &law, 1.0, 0.0, MgfKind::Exact, 1e-9),
            Err(SpreadError::MgfKindMismatch { .. })
        ));
    }
}
