//! One function per subcommand. Each writes its whole report to `out` and
//! depends only on the configuration, so repeated runs are byte-identical.

use std::io::Write;

use mixspread::mc::mc_spread_prices;
use mixspread::matcher::{match_e, match_mv, match_v};
use mixspread::model::build_effective_at;
use mixspread::moments::{
    exact_moments_elliptical, exact_moments_mv, exact_moments_v, proxy_moments_e, proxy_moments_mv, proxy_moments_v,
};
use mixspread::pricer::MatchedProxy;
use mixspread::tables::{TableDef, TableRow, TableSet};
use mixspread::{ApproxOptions, ApproxPricer, MatchOptions, McOptions, MgfKind, Mode, MomentSet, ProxyParams, SpreadError};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{num, Grid, KeyValues};

fn mc_options(cfg: &RunConfig) -> McOptions {
    McOptions { antithetic: cfg.engine.antithetic, ..McOptions::default() }
}

fn push_matched(kv: &mut KeyValues, m: &MatchedProxy) {
    for (name, v) in m.named_params() {
        kv.num(format!("proxy.{name}"), v);
    }
    kv.num("residual_norm", m.residual_norm());
    kv.text("iterations", m.iterations());
    kv.text("starts_tried", m.starts_tried());
}

fn push_moments(kv: &mut KeyValues, m: &MomentSet) {
    for (i, v) in m.m.iter().enumerate() {
        kv.num(format!("M{}", i + 1), *v);
    }
}

fn push_arguments(kv: &mut KeyValues, m: &MomentSet) {
    for a in &m.arguments {
        kv.num(format!("arg {}", a.label), a.value);
    }
}

pub fn price(cfg: &RunConfig, out: &mut impl Write) -> Result<(), CliError> {
    let spec = cfg.model_spec()?;
    let contract = cfg.contract()?;
    let pricer = ApproxPricer::new(&spec, contract.maturity, cfg.approx_options()?)?;
    let rep = pricer.price(contract.strike)?;
    let conv = &rep.conventions;

    let mut kv = KeyValues::default();
    kv.text("mode", pricer.model.mode).text("law", &conv.law);
    if let Some(ig) = conv.ig_parameterization {
        kv.text("ig_parameterization", ig);
    }
    kv.text("mgf_kind", conv.mgf_kind)
        .text("target_mgf", rep.moments.mgf_kind)
        .num("strike", contract.strike)
        .num("maturity", contract.maturity)
        .num("r", spec.r)
        .num("price", rep.price)
        .num("raw_price", rep.raw_price)
        .text("floored", rep.floored)
        .text("branch", rep.branch)
        .num("quadrature_error", rep.quadrature_error_estimate)
        .num("shift", rep.matched.shift());
    push_matched(&mut kv, &rep.matched);
    push_moments(&mut kv, &rep.moments);
    kv.num("domain_bound", pricer.model.law.mgf_domain_bound());
    push_arguments(&mut kv, &rep.moments);
    kv.write(out, cfg.output.format)
}

pub fn mc(cfg: &RunConfig, out: &mut impl Write) -> Result<(), CliError> {
    let spec = cfg.model_spec()?;
    let contract = cfg.contract()?;
    let model = build_effective_at(&spec, contract.maturity)?;
    let e = mc_spread_prices(&model, &[contract.strike], cfg.engine.n, cfg.engine.seed, &mc_options(cfg))?[0];

    let mut kv = KeyValues::default();
    kv.text("mode", model.mode)
        .num("strike", contract.strike)
        .num("maturity", contract.maturity)
        .num("price", e.mean)
        .num("stderr", e.stderr)
        .text("n", e.n)
        .text("seed", e.seed)
        .text("antithetic", cfg.engine.antithetic);
    kv.write(out, cfg.output.format)
}

/// The model's spread moments with the configured target mgf, falling back
/// to the truncated polynomial when an exact argument is out of range.
fn model_moments(cfg: &RunConfig, maturity: f64) -> Result<(Mode, f64, MomentSet), CliError> {
    let model = build_effective_at(&cfg.model_spec()?, maturity)?;
    let bound = model.law.mgf_domain_bound();
    let get = |kind: MgfKind| match model.mode {
        Mode::MeanVariance => exact_moments_mv(&model, kind),
        Mode::Variance => exact_moments_v(&model, kind),
        Mode::Elliptical => exact_moments_elliptical(&model, Default::default()),
    };
    let m = match get(cfg.engine.target_mgf) {
        Err(SpreadError::MgfDomain { .. }) if cfg.engine.target_mgf == MgfKind::Exact => get(MgfKind::Truncated)?,
        other => other?,
    };
    Ok((model.mode, bound, m))
}

pub fn moments(cfg: &RunConfig, out: &mut impl Write) -> Result<(), CliError> {
    let (mode, bound, m) = model_moments(cfg, cfg.contract.maturity)?;
    let mut kv = KeyValues::default();
    kv.text("mode", mode);
    if mode != Mode::Elliptical {
        kv.text("mgf_kind", m.mgf_kind);
    }
    push_moments(&mut kv, &m);
    kv.num("domain_bound", bound);
    push_arguments(&mut kv, &m);
    kv.write(out, cfg.output.format)
}

/// Matches the model's moments, or with a `[proxy]` section the moments of
/// that proxy, and prints the solver report.
pub fn solve(cfg: &RunConfig, out: &mut impl Write) -> Result<(), CliError> {
    let mut kv = KeyValues::default();
    let kind = cfg.engine.mgf;
    let opts = MatchOptions::default();
    let matched = match &cfg.proxy {
        Some(p) => {
            let law = cfg.law()?;
            let series = opts.series;
            let (target, matched) = match *p {
                ProxyParams::MeanVariance(q) => {
                    let t = proxy_moments_mv(&q, &law, kind)?;
                    let m = MatchedProxy::MeanVariance(match_mv(&t, &law, kind, &opts)?);
                    (t, m)
                }
                ProxyParams::Variance(q) => {
                    let t = proxy_moments_v(&q, &law, kind)?;
                    let m = MatchedProxy::Variance(match_v(&t, &law, kind, &opts)?);
                    (t, m)
                }
                ProxyParams::Elliptical(q) => {
                    let t = proxy_moments_e(&q, &law, series)?;
                    let m = MatchedProxy::Elliptical(match_e(&t, &law, &opts)?);
                    (t, m)
                }
            };
            kv.text("mode", p.mode()).text("source", "proxy");
            let input = match *p {
                ProxyParams::MeanVariance(q) => vec![("a", q.a), ("b", q.b), ("c", q.c), ("d", q.d)],
                ProxyParams::Variance(q) => vec![("a", q.a), ("b", q.b), ("c", q.c)],
                ProxyParams::Elliptical(q) => vec![("a", q.a), ("b", q.b), ("c", q.c)],
            };
            for (name, v) in input {
                kv.num(format!("input.{name}"), v);
            }
            push_moments(&mut kv, &target);
            matched
        }
        None => {
            let spec = cfg.model_spec()?;
            let pricer = ApproxPricer::new(&spec, cfg.contract.maturity, cfg.approx_options()?)?;
            kv.text("mode", pricer.model.mode).text("source", "model");
            push_moments(&mut kv, &pricer.moments);
            pricer.matched
        }
    };
    if matched.mode() != Mode::Elliptical {
        kv.text("mgf_kind", kind);
    }
    push_matched(&mut kv, &matched);
    kv.write(out, cfg.output.format)
}

pub const TABLE_COLUMNS: [&str; 13] = [
    "table",
    "s1",
    "s2",
    "strike",
    "approx_price",
    "mc_price",
    "mc_stderr",
    "abs_diff",
    "paper_approx",
    "paper_mc",
    "n",
    "seed",
    "error",
];

/// Every cell of one reference table. Engine errors are recorded in the
/// `error` column and the remaining cells still run.
pub fn table(
    cfg: &RunConfig,
    set: &TableSet,
    id: u32,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let def = set
        .get(id)
        .ok_or_else(|| CliError::Config(format!("table {id}: not defined in the table data")))?;
    let opts = cfg.approx_options()?;
    let rows: Vec<Vec<Vec<String>>> = def.rows.par_iter().map(|row| table_row(cfg, def, row, opts)).collect();
    Grid {
        header: TABLE_COLUMNS.to_vec(),
        rows: rows.into_iter().flatten().collect(),
    }
    .write(out, cfg.output.format)
}

fn table_row(cfg: &RunConfig, def: &TableDef, row: &TableRow, opts: ApproxOptions) -> Vec<Vec<String>> {
    let spec = def.spec(row);
    let approx: Vec<Result<f64, String>> = match spec.as_ref().map_err(|e| e.to_string()).and_then(|s| {
        ApproxPricer::new(s, def.maturity, opts).map_err(|e| e.to_string())
    }) {
        Ok(p) => row.strikes.iter().map(|k| p.price(*k).map(|r| r.price).map_err(|e| e.to_string())).collect(),
        Err(e) => vec![Err(e); row.strikes.len()],
    };
    let mc: Vec<Result<(f64, f64), String>> = match spec
        .and_then(|s| build_effective_at(&s, def.maturity))
        .and_then(|m| mc_spread_prices(&m, &row.strikes, cfg.engine.n, cfg.engine.seed, &mc_options(cfg)))
    {
        Ok(v) => v.into_iter().map(|e| Ok((e.mean, e.stderr))).collect(),
        Err(e) => vec![Err(e.to_string()); row.strikes.len()],
    };
    let published = |v: &[f64], j: usize| v.get(j).map(|x| num(*x)).unwrap_or_default();
    row.strikes
        .iter()
        .enumerate()
        .map(|(j, k)| {
            let a = approx[j].as_ref().ok().copied();
            let m = mc[j].as_ref().ok().copied();
            let errors: Vec<&str> = [approx[j].as_ref().err(), mc[j].as_ref().err()]
                .into_iter()
                .flatten()
                .map(String::as_str)
                .collect();
            let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
            vec![
                def.id.to_string(),
                num(row.s1),
                num(row.s2),
                num(*k),
                opt(a),
                opt(m.map(|m| m.0)),
                opt(m.map(|m| m.1)),
                opt(a.zip(m).map(|(a, m)| (a - m.0).abs())),
                published(&row.approx, j),
                published(&row.mc, j),
                cfg.engine.n.to_string(),
                cfg.engine.seed.to_string(),
                errors.join("; "),
            ]
        })
        .collect()
}
