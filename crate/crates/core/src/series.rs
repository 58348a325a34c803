//! Power series in the raw moments of the radial law.
//!
//! For `U` uniform on the unit circle, `E[U_1^{2k}] = (2k)! / (4^k (k!)^2)`
//! and odd moments vanish, so
//!
//! ```text
//! E[exp(s sqrt(R) U_1)] = sum_k s^{2k} E[R^k] / (4^k (k!)^2).
//! ```
//!
//! Everything here is expressed in `t = s^2 >= 0`.

use crate::error::{Result, SpreadError};
use crate::laws::MixingLaw;
use crate::special::ln_factorial;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Stop once the next term is below `rel_tol` times the running sum.
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_terms: 200,
        }
    }
}

impl SeriesOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

/// `E[U_1^{2k}]` for `U` uniform on the unit circle.
pub fn circle_even_moment(k: usize) -> f64 {
    (ln_factorial(2 * k) - k as f64 * 4f64.ln() - 2.0 * ln_factorial(k)).exp()
}

fn ln_coefficient(law: &MixingLaw, k: usize) -> Result<f64> {
    Ok(law.ln_raw_moment(k)? - k as f64 * 4f64.ln() - 2.0 * ln_factorial(k))
}

/// Sums `sum_k w(k) t^k E[R^k] / (4^k (k!)^2)` where `w` is a polynomial
/// weight evaluated in log space (`ln_weight(k)` may return `-inf`).
fn sum_series(
    law: &MixingLaw,
    t: f64,
    opts: SeriesOptions,
    shift: usize,
    ln_weight: impl Fn(usize) -> f64,
) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(SpreadError::invalid("series argument", format!("{t} is negative")));
    }
    let ln_t = t.ln();
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut rising = 0usize;
    let mut last = 0.0;
    for k in 0..opts.max_terms {
        let lw = ln_weight(k);
        let term = if lw == f64::NEG_INFINITY {
            0.0
        } else if t == 0.0 {
            if k == shift { lw.exp() * (ln_coefficient(law, k)?).exp() } else { 0.0 }
        } else {
            (lw + (k - shift.min(k)) as f64 * ln_t + ln_coefficient(law, k)?).exp()
        };
        if !term.is_finite() {
            return Err(SpreadError::SeriesDivergence {
                terms: k,
                last_term: term,
            });
        }
        sum += term;
        last = term;
        if k > shift && term <= opts.rel_tol * sum.abs() {
            return Ok(sum);
        }
        if t == 0.0 && k > shift {
            return Ok(sum);
        }
        if k > 20 {
            if term >= prev {
                rising += 1;
                if rising >= 3 {
                    return Err(SpreadError::SeriesDivergence {
                        terms: k + 1,
                        last_term: term,
                    });
                }
            } else {
                rising = 0;
            }
        }
        prev = term;
    }
    Err(SpreadError::SeriesDivergence {
        terms: opts.max_terms,
        last_term: last,
    })
}

/// `E[exp(sqrt(t R) U_1)]` for the circle-uniform `U`.
pub fn circle_mgf(law: &MixingLaw, t: f64, opts: SeriesOptions) -> Result<f64> {
    sum_series(law, t, opts, 0, |_| 0.0)
}

/// `d/dt` of [`circle_mgf`].
pub fn circle_mgf_derivative(law: &MixingLaw, t: f64, opts: SeriesOptions) -> Result<f64> {
    sum_series(law, t, opts, 1, |k| {
        if k == 0 {
            f64::NEG_INFINITY
        } else {
            (k as f64).ln()
        }
    })
}
