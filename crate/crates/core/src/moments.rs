//! Exact moments of the terminal spread `e^{X1} - e^{X2}` and moments of
//! the shifted-exponential proxies that are matched against them.

use crate::error::{DomainViolation, Result, SpreadError};
use crate::laws::{MgfKind, MixingLaw};
use crate::matcher::{ProxyParamsE, ProxyParamsMV, ProxyParamsV};
use crate::model::{EffectiveModel, Mode};
use crate::series::{circle_mgf, SeriesOptions};
use crate::special::binomial;

/// One mgf (or circle-series) argument used while building a moment set.
#[derive(Debug, Clone, PartialEq)]
pub struct MgfArgument {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    /// `m[0]` is the first moment.
    pub m: Vec<f64>,
    pub mode: Mode,
    pub mgf_kind: MgfKind,
    pub arguments: Vec<MgfArgument>,
}

impl MomentSet {
    /// Number of moments the matching system for `mode` uses.
    pub fn order_for(mode: Mode) -> usize {
        match mode {
            Mode::MeanVariance => 4,
            Mode::Variance | Mode::Elliptical => 3,
        }
    }

    pub fn new(m: Vec<f64>, mode: Mode, mgf_kind: MgfKind) -> Result<Self> {
        let want = Self::order_for(mode);
        if m.len() != want {
            return Err(SpreadError::invalid(
                "moments",
                format!("{mode} mode needs {want} moments, got {}", m.len()),
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(SpreadError::invalid("moments", "all moments must be finite"));
        }
        Ok(Self {
            m,
            mode,
            mgf_kind,
            arguments: Vec::new(),
        })
    }

    pub fn variance(&self) -> f64 {
        self.m[1] - self.m[0] * self.m[0]
    }

    /// `E[(S - shift)^n]` from the raw moments, `n <= len`.
    pub fn shifted(&self, shift: f64, n: usize) -> f64 {
        (0..=n)
            .map(|k| {
                let raw = if k == 0 { 1.0 } else { self.m[k - 1] };
                binomial(n, k) * raw * (-shift).powi((n - k) as i32)
            })
            .sum()
    }
}

fn joint_label(i: usize, j: usize) -> String {
    let part = |c: usize, x: &str| match c {
        0 => String::new(),
        1 => x.to_string(),
        _ => format!("{c}{x}"),
    };
    let (p1, p2) = (part(i, "X1"), part(j, "X2"));
    let exp = match (p1.is_empty(), p2.is_empty()) {
        (false, false) => format!("{p1}+{p2}"),
        (false, true) => p1,
        _ => p2,
    };
    format!("E[e^{{{exp}}}]")
}

/// Argument of `phi_Y` in `E[e^{i X1 + j X2}]` for the mixture model.
fn joint_argument(model: &EffectiveModel, beta: [f64; 2], i: usize, j: usize) -> f64 {
    let (fi, fj) = (i as f64, j as f64);
    let a = &model.a;
    let v0 = fi * a[0][0] + fj * a[1][0];
    let v1 = fi * a[0][1] + fj * a[1][1];
    fi * beta[0] + fj * beta[1] + 0.5 * (v0 * v0 + v1 * v1)
}

/// `|i row1 + j row2|^2`, the circle-series argument.
fn joint_norm2(model: &EffectiveModel, i: usize, j: usize) -> f64 {
    let (fi, fj) = (i as f64, j as f64);
    let a = &model.a;
    let v0 = fi * a[0][0] + fj * a[1][0];
    let v1 = fi * a[0][1] + fj * a[1][1];
    v0 * v0 + v1 * v1
}

fn mixture_moments(
    model: &EffectiveModel,
    beta: [f64; 2],
    order: usize,
    kind: MgfKind,
    mode: Mode,
) -> Result<MomentSet> {
    if model.mode == Mode::Elliptical {
        return Err(SpreadError::invalid(
            "model",
            "elliptical models use exact_moments_elliptical",
        ));
    }
    let law = &model.law;
    let bound = law.mgf_domain_bound();
    let mut arguments = Vec::new();
    let mut violations = Vec::new();
    for n in 1..=order {
        for j in 0..=n {
            let label = joint_label(n - j, j);
            let value = joint_argument(model, beta, n - j, j);
            if kind == MgfKind::Exact && value >= bound {
                violations.push(DomainViolation {
                    label: label.clone(),
                    argument: value,
                });
            }
            arguments.push(MgfArgument { label, value });
        }
    }
    if !violations.is_empty() {
        return Err(SpreadError::MgfDomain { bound, violations });
    }
    let m = (1..=order)
        .map(|n| {
            let terms: Vec<f64> = (0..=n)
                .map(|j| {
                    let i = n - j;
                    let pref = (i as f64 * model.mu[0] + j as f64 * model.mu[1]).exp();
                    pref * law.eval_mgf(kind, joint_argument(model, beta, i, j))
                })
                .collect();
            alternating_binomial_sum(terms)
        })
        .collect();
    let mut set = MomentSet::new(m, mode, kind)?;
    set.arguments = arguments;
    Ok(set)
}

/// `sum_j C(n,j) (-1)^j t_j` as an iterated forward difference, so equal
/// terms cancel exactly.
fn alternating_binomial_sum(mut t: Vec<f64>) -> f64 {
    let n = t.len() - 1;
    for round in 0..n {
        for j in 0..n - round {
            t[j] -= t[j + 1];
        }
    }
    t[0]
}

/// `M1..M4` of `e^{X1} - e^{X2}` under the mean-variance mixture.
pub fn exact_moments_mv(model: &EffectiveModel, kind: MgfKind) -> Result<MomentSet> {
    mixture_moments(model, model.beta, 4, kind, Mode::MeanVariance)
}

/// `M1..M3` with `beta` forced to zero.
pub fn exact_moments_v(model: &EffectiveModel, kind: MgfKind) -> Result<MomentSet> {
    mixture_moments(model, [0.0; 2], 3, kind, Mode::Variance)
}

/// `M1..M3` under the elliptical model via the circle series.
pub fn exact_moments_elliptical(model: &EffectiveModel, opts: SeriesOptions) -> Result<MomentSet> {
    let law = &model.law;
    let mut arguments = Vec::new();
    let mut m = Vec::with_capacity(3);
    for n in 1..=3usize {
        let mut terms = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let i = n - j;
            let t = joint_norm2(model, i, j);
            arguments.push(MgfArgument {
                label: joint_label(i, j),
                value: t,
            });
            let pref = (i as f64 * model.mu[0] + j as f64 * model.mu[1]).exp();
            terms.push(pref * circle_mgf(law, t, opts)?);
        }
        m.push(alternating_binomial_sum(terms));
    }
    let mut set = MomentSet::new(m, Mode::Elliptical, MgfKind::Exact)?;
    set.arguments = arguments;
    Ok(set)
}

/// Moments `(n = 1..order)` of `scale * X + shift` given the power sums
/// `E[(scale X)^j]` for `j = 1..order`.
fn shifted_power_moments(powers: &[f64], shift: f64) -> Vec<f64> {
    (1..=powers.len())
        .map(|n| {
            (0..=n)
                .map(|j| {
                    let p = if j == 0 { 1.0 } else { powers[j - 1] };
                    binomial(n, j) * shift.powi((n - j) as i32) * p
                })
                .sum()
        })
        .collect()
}

/// `A1..A4` of `exp(a sqrt(Y) N + bY + c) + d`.
pub fn proxy_moments_mv(p: &ProxyParamsMV, law: &MixingLaw, kind: MgfKind) -> Result<MomentSet> {
    let args = p.mgf_arguments();
    check_domain(law, kind, &args, |j| format!("{}a^2/2+{}b", j * j, j))?;
    let powers: Vec<f64> = (1..=4)
        .map(|j| (j as f64 * p.c).exp() * law.eval_mgf(kind, args[j - 1]))
        .collect();
    let mut set = MomentSet::new(shifted_power_moments(&powers, p.d), Mode::MeanVariance, kind)?;
    set.arguments = labelled(&args);
    Ok(set)
}

/// `A1..A3` of `exp(a sqrt(Y) N + b) + c` (constant drift `b`).
pub fn proxy_moments_v(p: &ProxyParamsV, law: &MixingLaw, kind: MgfKind) -> Result<MomentSet> {
    let args = p.mgf_arguments();
    check_domain(law, kind, &args, |j| format!("{}a^2/2", j * j))?;
    let powers: Vec<f64> = (1..=3)
        .map(|j| (j as f64 * p.b).exp() * law.eval_mgf(kind, args[j - 1]))
        .collect();
    let mut set = MomentSet::new(shifted_power_moments(&powers, p.c), Mode::Variance, kind)?;
    set.arguments = labelled(&args);
    Ok(set)
}

/// `A1..A3` of `exp(a sqrt(R) U_1 + b) + c`.
pub fn proxy_moments_e(p: &ProxyParamsE, law: &MixingLaw, opts: SeriesOptions) -> Result<MomentSet> {
    let args = p.series_arguments();
    let powers = (1..=3)
        .map(|j| Ok((j as f64 * p.b).exp() * circle_mgf(law, args[j - 1], opts)?))
        .collect::<Result<Vec<f64>>>()?;
    let mut set = MomentSet::new(shifted_power_moments(&powers, p.c), Mode::Elliptical, MgfKind::Exact)?;
    set.arguments = labelled(&args);
    Ok(set)
}

fn labelled(args: &[f64]) -> Vec<MgfArgument> {
    args.iter()
        .enumerate()
        .map(|(j, v)| MgfArgument {
            label: format!("E[W0^{}]", j + 1),
            value: *v,
        })
        .collect()
}

fn check_domain(
    law: &MixingLaw,
    kind: MgfKind,
    args: &[f64],
    label: impl Fn(usize) -> String,
) -> Result<()> {
    if kind != MgfKind::Exact {
        return Ok(());
    }
    let bound = law.mgf_domain_bound();
    let violations: Vec<_> = args
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= bound)
        .map(|(j, v)| DomainViolation {
            label: label(j + 1),
            argument: *v,
        })
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(SpreadError::MgfDomain { bound, violations })
    }
}
