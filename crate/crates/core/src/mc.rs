//! Monte Carlo oracle for the exact model and for the proxy variables.
//!
//! Paths are generated in fixed-size blocks. Block `k` draws from the ChaCha8
//! stream `k` of the generator keyed by the seed, and block statistics are
//! merged in a fixed pairwise tree, so an estimate depends only on the inputs,
//! `n` and the seed, never on the thread count.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SpreadError};
use crate::laws::MixingLaw;
use crate::matcher::ProxyParams;
use crate::model::{EffectiveModel, Mode, SpreadContract};

/// Default sample: one million paths.
pub const DEFAULT_PATHS: usize = 1_000_000;
pub const MIN_PATHS: usize = 1_000;
const BLOCK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`; with antithetics a
    /// sample is the average of a mirrored pair.
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    /// Mirror the Gaussian (or angular) noise within each pair of paths.
    pub antithetic: bool,
    pub parallel: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            antithetic: false,
            parallel: true,
        }
    }
}

/// Mean and centered sum of squares, merged with Chan's update.
#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Stats {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Stats) -> Stats {
        if self.count == 0.0 {
            return o;
        }
        if o.count == 0.0 {
            return self;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        Stats {
            count,
            mean: self.mean + d * o.count / count,
            m2: self.m2 + o.m2 + d * d * self.count * o.count / count,
        }
    }

    fn estimate(&self, n: usize, seed: u64) -> McEstimate {
        let var = if self.count > 1.0 {
            self.m2 / (self.count - 1.0)
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            stderr: (var / self.count).sqrt(),
            n,
            seed,
        }
    }
}

/// One draw of the mixer and the unit noise.
#[derive(Debug, Clone, Copy)]
struct Shock {
    y: f64,
    z: [f64; 2],
}

impl Shock {
    fn mirrored(self) -> Shock {
        Shock {
            y: self.y,
            z: [-self.z[0], -self.z[1]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Noise {
    /// Independent standard normal pair.
    Gaussian,
    /// A single standard normal in `z[0]`.
    Gaussian1,
    /// `(cos t, sin t)` with a uniform angle.
    Circle,
}

fn draw(rng: &mut ChaCha8Rng, law: &MixingLaw, noise: Noise) -> Shock {
    let y = law.sample(rng);
    let z = match noise {
        Noise::Gaussian => [rng.sample(StandardNormal), rng.sample(StandardNormal)],
        Noise::Gaussian1 => [rng.sample(StandardNormal), 0.0],
        Noise::Circle => {
            let t = TAU * rng.random::<f64>();
            let (s, c) = t.sin_cos();
            [c, s]
        }
    };
    Shock { y, z }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

fn tree_reduce(mut v: Vec<Vec<Stats>>) -> Vec<Stats> {
    while v.len() > 1 {
        let mut next = Vec::with_capacity(v.len().div_ceil(2));
        let mut it = v.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()),
                None => next.push(a),
            }
        }
        v = next;
    }
    v.pop().unwrap_or_default()
}

/// Simulates `n` paths and returns per-output statistics. `eval` writes the
/// outputs of one shock into its buffer.
fn simulate<E>(
    n: usize,
    seed: u64,
    outputs: usize,
    law: &MixingLaw,
    noise: Noise,
    opts: &McOptions,
    eval: E,
) -> Result<Vec<McEstimate>>
where
    E: Fn(&Shock, &mut [f64]) + Sync,
{
    if n < MIN_PATHS {
        return Err(SpreadError::invalid("n", format!("need at least {MIN_PATHS} paths, got {n}")));
    }
    if opts.antithetic && n % 2 == 1 {
        return Err(SpreadError::invalid("n", "antithetic sampling needs an even path count"));
    }
    let samples = if opts.antithetic { n / 2 } else { n };
    let blocks = samples.div_ceil(BLOCK);
    let run_block = |k: usize| -> Vec<Stats> {
        let mut rng = block_rng(seed, k);
        let len = BLOCK.min(samples - k * BLOCK);
        let mut stats = vec![Stats::default(); outputs];
        let mut buf = vec![0.0; outputs];
        let mut mirror = vec![0.0; outputs];
        for _ in 0..len {
            let shock = draw(&mut rng, law, noise);
            eval(&shock, &mut buf);
            if opts.antithetic {
                eval(&shock.mirrored(), &mut mirror);
                for (b, m) in buf.iter_mut().zip(&mirror) {
                    *b = 0.5 * (*b + m);
                }
            }
            for (s, &x) in stats.iter_mut().zip(&buf) {
                s.push(x);
            }
        }
        stats
    };
    let per_block: Vec<Vec<Stats>> = if opts.parallel {
        (0..blocks).into_par_iter().map(run_block).collect()
    } else {
        (0..blocks).map(run_block).collect()
    };
    Ok(tree_reduce(per_block)
        .iter()
        .map(|s| s.estimate(n, seed))
        .collect())
}

fn model_noise(model: &EffectiveModel) -> Noise {
    match model.mode {
        Mode::Elliptical => Noise::Circle,
        _ => Noise::Gaussian,
    }
}

/// Terminal spread `exp(X1) - exp(X2)` for one shock.
fn spread(model: &EffectiveModel, s: &Shock) -> f64 {
    let sy = s.y.sqrt();
    let x = |i: usize| {
        let beta = if model.mode == Mode::Elliptical { 0.0 } else { model.beta[i] };
        model.mu[i] + beta * s.y + sy * (model.a[i][0] * s.z[0] + model.a[i][1] * s.z[1])
    };
    x(0).exp() - x(1).exp()
}

fn check_strikes(strikes: &[f64]) -> Result<()> {
    match strikes.iter().find(|k| !k.is_finite()) {
        Some(k) => Err(SpreadError::invalid("strike", format!("must be finite, got {k}"))),
        None => Ok(()),
    }
}

/// Discounted `E[(S1(T) - S2(T) - K)^+]` by plain Monte Carlo.
pub fn mc_spread_price(model: &EffectiveModel, contract: &SpreadContract, n: usize, seed: u64) -> Result<McEstimate> {
    contract.validate()?;
    if (contract.maturity - model.maturity).abs() > 1e-12 * model.maturity.max(1.0) {
        return Err(SpreadError::invalid(
            "maturity",
            format!("contract maturity {} differs from the model's {}", contract.maturity, model.maturity),
        ));
    }
    let mut v = mc_spread_prices(model, &[contract.strike], n, seed, &McOptions::default())?;
    Ok(v.remove(0))
}

/// Prices every strike on one shared set of paths at the model's maturity.
pub fn mc_spread_prices(
    model: &EffectiveModel,
    strikes: &[f64],
    n: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<Vec<McEstimate>> {
    check_strikes(strikes)?;
    let disc = model.discount();
    simulate(n, seed, strikes.len(), &model.law, model_noise(model), opts, |s, out| {
        let w = spread(model, s);
        for (o, k) in out.iter_mut().zip(strikes) {
            *o = disc * (w - k).max(0.0);
        }
    })
}

/// Sample raw moments `E[(S1(T) - S2(T))^k]` for `k = 1..=order`.
pub fn mc_moments(model: &EffectiveModel, order: usize, n: usize, seed: u64) -> Result<Vec<McEstimate>> {
    if !(1..=4).contains(&order) {
        return Err(SpreadError::invalid("order", format!("must be in 1..=4, got {order}")));
    }
    simulate(n, seed, order, &model.law, model_noise(model), &McOptions::default(), |s, out| {
        let w = spread(model, s);
        let mut p = 1.0;
        for o in out.iter_mut() {
            p *= w;
            *o = p;
        }
    })
}

/// The proxy variable `W` for one shock.
fn proxy_value(p: &ProxyParams, s: &Shock) -> f64 {
    let sy = s.y.sqrt();
    match p {
        ProxyParams::MeanVariance(q) => (q.a * sy * s.z[0] + q.b * s.y + q.c).exp() + q.d,
        ProxyParams::Variance(q) => (q.a * sy * s.z[0] + q.b).exp() + q.c,
        ProxyParams::Elliptical(q) => (q.a * sy * s.z[0] + q.b).exp() + q.c,
    }
}

/// `e^{-r} E[(W - K)^+]` for the proxy `W` simulated directly; `r` is the
/// total discount exponent.
pub fn mc_proxy_price(
    p: &ProxyParams,
    law: &MixingLaw,
    strike: f64,
    r: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    let mut v = mc_proxy_prices(p, law, &[strike], r, n, seed, &McOptions::default())?;
    Ok(v.remove(0))
}

pub fn mc_proxy_prices(
    p: &ProxyParams,
    law: &MixingLaw,
    strikes: &[f64],
    r: f64,
    n: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<Vec<McEstimate>> {
    check_strikes(strikes)?;
    let noise = match p {
        ProxyParams::Elliptical(_) => Noise::Circle,
        _ => Noise::Gaussian1,
    };
    let disc = (-r).exp();
    simulate(n, seed, strikes.len(), law, noise, opts, |s, out| {
        let w = proxy_value(p, s);
        for (o, k) in out.iter_mut().zip(strikes) {
            *o = disc * (w - k).max(0.0);
        }
    })
}
