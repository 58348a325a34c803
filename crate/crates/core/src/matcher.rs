//! Moment matching: fit the shifted-exponential proxy to a target moment
//! set by damped least squares from several starting points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpreadError};
use crate::laws::{MgfKind, MixingLaw};
use crate::model::Mode;
use crate::moments::{proxy_moments_e, proxy_moments_mv, proxy_moments_v, MomentSet};
use crate::series::{circle_mgf, circle_mgf_derivative, SeriesOptions};

/// `exp(a sqrt(Y) N + bY + c) + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyParamsMV {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl ProxyParamsMV {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// `j^2 a^2 / 2 + j b` for `j = 1..4`.
    pub fn mgf_arguments(&self) -> [f64; 4] {
        let a2 = self.a * self.a;
        std::array::from_fn(|i| {
            let j = (i + 1) as f64;
            j * j * a2 / 2.0 + j * self.b
        })
    }
}

/// `exp(a sqrt(Y) N + b) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyParamsV {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ProxyParamsV {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// `j^2 a^2 / 2` for `j = 1..3`.
    pub fn mgf_arguments(&self) -> [f64; 3] {
        let a2 = self.a * self.a;
        std::array::from_fn(|i| {
            let j = (i + 1) as f64;
            j * j * a2 / 2.0
        })
    }
}

/// `exp(a sqrt(R) U_1 + b) + c` with `U` uniform on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyParamsE {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ProxyParamsE {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// `j^2 a^2` for `j = 1..3`, the circle-series arguments.
    pub fn series_arguments(&self) -> [f64; 3] {
        let a2 = self.a * self.a;
        std::array::from_fn(|i| {
            let j = (i + 1) as f64;
            j * j * a2
        })
    }
}

/// Proxy parameters of any mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ProxyParams {
    MeanVariance(ProxyParamsMV),
    Variance(ProxyParamsV),
    Elliptical(ProxyParamsE),
}

impl ProxyParams {
    pub fn mode(&self) -> Mode {
        match self {
            ProxyParams::MeanVariance(_) => Mode::MeanVariance,
            ProxyParams::Variance(_) => Mode::Variance,
            ProxyParams::Elliptical(_) => Mode::Elliptical,
        }
    }
}

impl From<ProxyParamsMV> for ProxyParams {
    fn from(p: ProxyParamsMV) -> Self {
        ProxyParams::MeanVariance(p)
    }
}

impl From<ProxyParamsV> for ProxyParams {
    fn from(p: ProxyParamsV) -> Self {
        ProxyParams::Variance(p)
    }
}

impl From<ProxyParamsE> for ProxyParams {
    fn from(p: ProxyParamsE) -> Self {
        ProxyParams::Elliptical(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport<P> {
    pub params: P,
    /// Euclidean norm of proxy moments minus target moments.
    pub residual_norm: f64,
    pub iterations: usize,
    pub starts_tried: usize,
    pub mgf_kind: MgfKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    /// Best residual above this is reported as [`SpreadError::NoSolution`].
    pub accept_residual: f64,
    /// Residual regarded as an exact root.
    pub target_residual: f64,
    pub max_iterations: usize,
    /// Exact mgf arguments must stay below `D (1 - margin)`.
    pub domain_margin: f64,
    pub series: SeriesOptions,
    pub parallel: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            accept_residual: 1e-6,
            target_residual: 1e-10,
            max_iterations: 400,
            domain_margin: 1e-6,
            series: SeriesOptions::default(),
            parallel: true,
        }
    }
}

#[derive(Clone, Copy)]
enum Kernel<'a> {
    Mixture(&'a MixingLaw, MgfKind),
    Circle(&'a MixingLaw, SeriesOptions),
}

impl Kernel<'_> {
    fn value(&self, s: f64) -> Option<(f64, f64)> {
        let (v, dv) = match *self {
            Kernel::Mixture(law, kind) => (law.eval_mgf(kind, s), law.eval_mgf_derivative(kind, s)),
            Kernel::Circle(law, opts) => (
                circle_mgf(law, s, opts).ok()?,
                circle_mgf_derivative(law, s, opts).ok()?,
            ),
        };
        (v.is_finite() && dv.is_finite()).then_some((v, dv))
    }
}

/// Residuals of the shifted form of the matching system:
/// `e^{n lc} g(arg_n) - E[(S - shift)^n]` for `n = 1..order`, scaled by
/// `scale^n`. Unknowns are `(a^2, [b,] lc, shift)`.
struct System<'a> {
    kernel: Kernel<'a>,
    mode: Mode,
    target: &'a MomentSet,
    scale: f64,
    bound: f64,
}

struct Unpacked {
    a2: f64,
    b: f64,
    lc: f64,
    shift: f64,
}

impl System<'_> {
    fn dim(&self) -> usize {
        self.target.m.len()
    }

    fn unpack(&self, x: &[f64]) -> Unpacked {
        match self.mode {
            Mode::MeanVariance => Unpacked { a2: x[0], b: x[1], lc: x[2], shift: x[3] },
            _ => Unpacked { a2: x[0], b: 0.0, lc: x[1], shift: x[2] },
        }
    }

    /// Kernel argument of equation `n` and its partial in `a^2`.
    fn argument(&self, n: f64, u: &Unpacked) -> (f64, f64) {
        match self.mode {
            Mode::MeanVariance => (n * n * u.a2 / 2.0 + n * u.b, n * n / 2.0),
            Mode::Variance => (n * n * u.a2 / 2.0, n * n / 2.0),
            Mode::Elliptical => (n * n * u.a2, n * n),
        }
    }

    fn feasible(&self, x: &[f64]) -> bool {
        let u = self.unpack(x);
        if !(u.a2 > 0.0) || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        (1..=self.dim()).all(|n| self.argument(n as f64, &u).0 <= self.bound)
    }

    fn eval(&self, x: &[f64], jac: Option<&mut Vec<f64>>) -> Option<Vec<f64>> {
        if !self.feasible(x) {
            return None;
        }
        let u = self.unpack(x);
        let k = self.dim();
        let mut r = Vec::with_capacity(k);
        let mut jrows = Vec::with_capacity(k * k);
        let mut prev_shifted = 1.0;
        for n in 1..=k {
            let nf = n as f64;
            let (arg, darg_da2) = self.argument(nf, &u);
            let (g, dg) = self.kernel.value(arg)?;
            let w = 1.0 / self.scale.powi(n as i32);
            let e = (nf * u.lc).exp();
            let shifted = self.target.shifted(u.shift, n);
            r.push(w * (e * g - shifted));
            jrows.push(w * e * dg * darg_da2);
            if self.mode == Mode::MeanVariance {
                jrows.push(w * e * dg * nf);
            }
            jrows.push(w * nf * e * g);
            jrows.push(w * nf * prev_shifted);
            prev_shifted = shifted;
        }
        if r.iter().chain(jrows.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        if let Some(j) = jac {
            *j = jrows;
        }
        Some(r)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `m x = rhs` by partial-pivot elimination.
fn solve_dense(mut m: Vec<f64>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let k = rhs.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| m[i * k + col].abs().total_cmp(&m[j * k + col].abs()))?;
        if m[piv * k + col] == 0.0 {
            return None;
        }
        if piv != col {
            for c in 0..k {
                m.swap(piv * k + c, col * k + c);
            }
            rhs.swap(piv, col);
        }
        for row in col + 1..k {
            let f = m[row * k + col] / m[col * k + col];
            for c in col..k {
                m[row * k + c] -= f * m[col * k + c];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| m[row * k + c] * x[c]).sum();
        x[row] = (rhs[row] - s) / m[row * k + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct LmOutcome {
    x: Vec<f64>,
    iterations: usize,
}

const STALL_WINDOW: usize = 30;
const STALL_RATIO: f64 = 0.5;

/// Floor applied to `a^2` so the proxy never degenerates to `a = 0`.
const A2_FLOOR: f64 = 1e-300;

/// Damped Gauss-Newton. `eval` returns residuals and the row-major
/// Jacobian, or `None` outside the feasible set; `project` clamps trial
/// points onto simple bounds.
fn levenberg_marquardt(
    x0: Vec<f64>,
    max_iter: usize,
    eval: impl Fn(&[f64]) -> Option<(Vec<f64>, Vec<f64>)>,
    project: impl Fn(&mut [f64]),
) -> Option<LmOutcome> {
    let k = x0.len();
    let mut x = x0;
    let (mut r, mut jac) = eval(&x)?;
    let mut cost = norm(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut history = Vec::with_capacity(max_iter);
    while iterations < max_iter && cost > 1e-16 {
        // Give up on a start that is creeping along a valley without a root.
        if iterations >= STALL_WINDOW && cost > STALL_RATIO * history[iterations - STALL_WINDOW] {
            break;
        }
        history.push(cost);
        iterations += 1;
        let mut jtj = vec![0.0; k * k];
        let mut jtr = vec![0.0; k];
        for (row, rv) in r.iter().enumerate() {
            let jr = &jac[row * k..(row + 1) * k];
            for i in 0..k {
                jtr[i] += jr[i] * rv;
                for j in 0..k {
                    jtj[i * k + j] += jr[i] * jr[j];
                }
            }
        }
        let mut improved = false;
        let mut small_step = false;
        while lambda < 1e16 {
            let mut m = jtj.clone();
            for i in 0..k {
                m[i * k + i] += lambda * jtj[i * k + i].max(1e-12);
            }
            let Some(step) = solve_dense(m, jtr.iter().map(|v| -v).collect()) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            project(&mut trial);
            if let Some((tr, tj)) = eval(&trial) {
                let tc = norm(&tr);
                if tc < cost {
                    small_step = step
                        .iter()
                        .zip(&x)
                        .all(|(s, v)| s.abs() <= 1e-15 * (v.abs() + 1e-15));
                    x = trial;
                    r = tr;
                    jac = tj;
                    cost = tc;
                    lambda = (lambda / 5.0).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !improved || small_step {
            break;
        }
    }
    Some(LmOutcome { x, iterations })
}

/// Variance of a lognormal whose skewness is `gamma`, `ln(1 + u)` with
/// `(u + 3) sqrt(u) = gamma`.
fn lognormal_sigma2_for_skew(gamma: f64) -> f64 {
    let gamma = gamma.abs().max(1e-3);
    let f = |u: f64| (u + 3.0) * u.sqrt() - gamma;
    let (mut lo, mut hi) = (0.0, gamma.max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (0.5 * (lo + hi)).ln_1p()
}

/// Raw moments of the unscaled kernel variable and its standardized
/// skewness and kurtosis.
struct Shape {
    g1: f64,
    var: f64,
    skew: f64,
    kurt: f64,
}

impl System<'_> {
    fn shape(&self, a2: f64, b: f64) -> Option<Shape> {
        let u = Unpacked { a2, b, lc: 0.0, shift: 0.0 };
        let mut g = [0.0; 4];
        for n in 1..=self.dim() {
            let arg = self.argument(n as f64, &u).0;
            if arg > self.bound {
                return None;
            }
            g[n - 1] = self.kernel.value(arg)?.0;
        }
        let [g1, g2, g3, g4] = g;
        let var = g2 - g1 * g1;
        if !(var > 0.0) || !(g1 > 0.0) {
            return None;
        }
        let skew = (g3 - 3.0 * g1 * g2 + 2.0 * g1.powi(3)) / var.powf(1.5);
        let kurt = (g4 - 4.0 * g1 * g3 + 6.0 * g1 * g1 * g2 - 3.0 * g1.powi(4)) / (var * var);
        Some(Shape { g1, var, skew, kurt })
    }

    /// Full unknown vector with scale and shift fitted to the target mean
    /// and variance.
    fn standardized(&self, a2: f64, b: f64, shape: &Shape) -> Vec<f64> {
        let m1 = self.target.m[0];
        let chat = (self.target.variance().max(0.0) / shape.var).sqrt().max(1e-300);
        let shift = m1 - chat * shape.g1;
        if self.mode == Mode::MeanVariance {
            vec![a2, b, chat.ln(), shift]
        } else {
            vec![a2, chat.ln(), shift]
        }
    }
}

struct Candidate {
    x: Vec<f64>,
    residual: f64,
    iterations: usize,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..n).map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Roots of the skewness equation in `a^2` (three-moment systems): scan a
/// log grid for sign changes and bisect each bracket.
fn skew_roots(sys: &System, gamma3: f64, lo: f64, hi: f64) -> Vec<f64> {
    let grid = log_grid(lo, hi, 160);
    let f = |a2: f64| sys.shape(a2, 0.0).map(|s| s.skew - gamma3);
    let vals: Vec<Option<f64>> = grid.iter().map(|&a2| f(a2)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (Some(fa), Some(fb)) = (vals[i], vals[i + 1]) else { continue };
        if fa == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        let (mut l, mut h, mut fl) = (grid[i].ln(), grid[i + 1].ln(), fa);
        for _ in 0..80 {
            let mid = 0.5 * (l + h);
            let Some(fm) = f(mid.exp()) else { break };
            if fm.signum() == fl.signum() {
                l = mid;
                fl = fm;
            } else {
                h = mid;
            }
        }
        roots.push((0.5 * (l + h)).exp());
    }
    roots
}

/// Local minimisers of the skewness/kurtosis mismatch over an
/// `(ln a^2, b)` grid, refined by a small damped Gauss-Newton solve.
fn shape_roots_2d(sys: &System, gamma: (f64, f64), lo: f64, hi: f64, b_range: (f64, f64), extra: &[(f64, f64)]) -> Vec<(f64, f64)> {
    const N: usize = 48;
    let a_grid = log_grid(lo, hi, N);
    let b_grid: Vec<f64> = (0..N)
        .map(|i| b_range.0 + (b_range.1 - b_range.0) * i as f64 / (N - 1) as f64)
        .collect();
    let wk = 1.0 / (1.0 + gamma.1.abs());
    let mismatch = |a2: f64, b: f64| -> Option<[f64; 2]> {
        let s = sys.shape(a2, b)?;
        let r = [s.skew - gamma.0, wk * (s.kurt - gamma.1)];
        r.iter().all(|v| v.is_finite()).then_some(r)
    };
    let cost: Vec<Option<f64>> = a_grid
        .iter()
        .flat_map(|&a2| b_grid.iter().map(move |&b| (a2, b)))
        .map(|(a2, b)| mismatch(a2, b).map(|r| norm(&r)))
        .collect();
    let mut minima: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..N {
        for j in 0..N {
            let Some(c) = cost[i * N + j] else { continue };
            let mut is_min = true;
            for di in -1i32..=1 {
                for dj in -1i32..=1 {
                    let (ii, jj) = (i as i32 + di, j as i32 + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= N as i32 || jj >= N as i32 {
                        continue;
                    }
                    if let Some(o) = cost[ii as usize * N + jj as usize] {
                        if o < c {
                            is_min = false;
                        }
                    }
                }
            }
            if is_min {
                minima.push((c, i, j));
            }
        }
    }
    minima.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut starts: Vec<(f64, f64)> = minima.iter().take(24).map(|&(_, i, j)| (a_grid[i], b_grid[j])).collect();
    starts.extend_from_slice(extra);

    let eval = |x: &[f64]| -> Option<(Vec<f64>, Vec<f64>)> {
        let r = mismatch(x[0].exp(), x[1])?;
        let mut jac = vec![0.0; 4];
        for v in 0..2 {
            let h = 1e-6 * (1.0 + x[v].abs());
            let (mut xp, mut xm) = ([x[0], x[1]], [x[0], x[1]]);
            xp[v] += h;
            xm[v] -= h;
            let rp = mismatch(xp[0].exp(), xp[1])?;
            let rm = mismatch(xm[0].exp(), xm[1])?;
            for row in 0..2 {
                jac[row * 2 + v] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        Some((r.to_vec(), jac))
    };
    starts
        .into_iter()
        .filter_map(|(a2, b)| {
            let out = levenberg_marquardt(vec![a2.ln(), b], 200, eval, |_| {})?;
            Some((out.x[0].exp(), out.x[1]))
        })
        .collect()
}

/// Generic driver shared by the three modes. `residual_of` recomputes the
/// reported residual through the proxy-moment functions.
fn run_match<P>(
    sys: &System,
    scale_y: f64,
    opts: &MatchOptions,
    to_params: impl Fn(&[f64]) -> P + Sync,
    residual_of: impl Fn(&P) -> Option<f64> + Sync,
) -> Result<(P, f64, usize, usize)>
where
    P: Send,
{
    let t = &sys.target;
    let m1 = t.m[0];
    let var = t.variance();
    let mv = sys.mode == Mode::MeanVariance;

    let mut seeds: Vec<Vec<f64>> = Vec::new();
    let mut direct: Vec<Candidate> = Vec::new();
    let per_a2 = match sys.mode {
        Mode::Elliptical => 1.0,
        _ => 0.5,
    };
    // Largest a^2 keeping the top-order argument inside the domain.
    let top = (sys.dim() * sys.dim()) as f64 * per_a2;
    let a2_hi = (8.0 / scale_y).min(sys.bound / top);
    let a2_lo = 1e-6 / scale_y;

    if var <= 0.0 {
        // Point-mass target: a vanishing scale reproduces it exactly.
        let a2 = 0.1 / scale_y;
        let mut x = if mv { vec![a2, 0.0, 0.0, m1] } else { vec![a2, 0.0, m1] };
        let lc = x.len() - 2;
        x[lc] = 1e-300f64.ln();
        if let Some(residual) = residual_of(&to_params(&x)) {
            direct.push(Candidate { x, residual, iterations: 0 });
        }
    } else if a2_hi > a2_lo {
        let sd = var.sqrt();
        let gamma3 = t.shifted(m1, 3) / (var * sd);
        // Constant-mixer seed: a shifted lognormal with the target skewness.
        let a2_seed = (lognormal_sigma2_for_skew(gamma3) / (per_a2 * 2.0) / scale_y).min(a2_hi);
        if mv {
            let gamma4 = t.shifted(m1, 4) / (var * var);
            let b_range = (-4.0 / scale_y, 2.0 / scale_y);
            for (a2, b) in shape_roots_2d(sys, (gamma3, gamma4), a2_lo, a2_hi, b_range, &[(a2_seed, 0.0)]) {
                if let Some(s) = sys.shape(a2, b) {
                    seeds.push(sys.standardized(a2, b, &s));
                }
            }
        } else {
            let mut roots = skew_roots(sys, gamma3, a2_lo, a2_hi);
            roots.push(a2_seed);
            for a2 in roots {
                if let Some(s) = sys.shape(a2, 0.0) {
                    seeds.push(sys.standardized(a2, 0.0, &s));
                }
            }
        }
    }
    seeds.retain(|x| sys.feasible(x));
    let starts = seeds.len() + direct.len();

    let solve = |x0: &Vec<f64>| -> Option<Candidate> {
        let out = levenberg_marquardt(
            x0.clone(),
            opts.max_iterations,
            |x| {
                let mut j = Vec::new();
                let r = sys.eval(x, Some(&mut j))?;
                Some((r, j))
            },
            |x| x[0] = x[0].max(A2_FLOOR),
        )?;
        let residual = residual_of(&to_params(&out.x))?;
        residual.is_finite().then_some(Candidate {
            x: out.x,
            residual,
            iterations: out.iterations,
        })
    };
    let mut candidates: Vec<Candidate> = if opts.parallel {
        seeds.par_iter().filter_map(solve).collect()
    } else {
        seeds.iter().filter_map(solve).collect()
    };
    candidates.extend(direct);

    // Only roots whose kernel arguments stay inside the mgf domain count: a
    // truncated series can fit the moments far outside it, but such a proxy
    // has no law behind it. Prefer exact roots, then the widest proxy. Ties
    // keep seed order.
    let domain = match sys.kernel {
        Kernel::Mixture(law, _) => law.mgf_domain_bound(),
        Kernel::Circle(..) => f64::INFINITY,
    };
    let inside = |c: &Candidate| {
        let u = sys.unpack(&c.x);
        (1..=sys.dim()).all(|n| sys.argument(n as f64, &u).0 < domain)
    };
    let rank = |c: &Candidate| c.residual <= opts.target_residual;
    let chosen = candidates
        .iter()
        .filter(|c| c.residual <= opts.accept_residual && inside(c))
        .fold(None::<&Candidate>, |best, c| match best {
            None => Some(c),
            Some(b) => {
                let (rc, rb) = (rank(c), rank(b));
                if (rc && !rb) || (rc == rb && c.x[0] > b.x[0]) {
                    Some(c)
                } else {
                    Some(b)
                }
            }
        });
    match chosen {
        Some(c) => Ok((to_params(&c.x), c.residual, c.iterations, starts)),
        None => {
            let (inside_roots, outside): (Vec<&Candidate>, Vec<&Candidate>) = candidates.iter().partition(|c| inside(c));
            let best = |v: &[&Candidate]| v.iter().map(|c| c.residual).fold(f64::INFINITY, f64::min);
            Err(SpreadError::NoSolution {
                best_residual: best(&inside_roots),
                starts,
                rejected_outside_domain: outside.iter().filter(|c| c.residual <= opts.accept_residual).count(),
            })
        }
    }
}

fn check_target(target: &MomentSet, mode: Mode) -> Result<()> {
    if target.mode != mode {
        return Err(SpreadError::invalid(
            "target",
            format!("expected {mode} moments, got {}", target.mode),
        ));
    }
    if target.m.len() != MomentSet::order_for(mode) || target.m.iter().any(|v| !v.is_finite()) {
        return Err(SpreadError::invalid("target", "malformed moment set"));
    }
    let var = target.variance();
    if var < -1e-12 * target.m[1].abs().max(1e-300) {
        return Err(SpreadError::invalid("target", format!("negative variance {var}")));
    }
    Ok(())
}

fn scale_of(target: &MomentSet) -> f64 {
    let var = target.variance();
    if var > 0.0 {
        var.sqrt()
    } else {
        target.m[0].abs().max(1.0)
    }
}

fn exact_bound(law: &MixingLaw, kind: MgfKind, margin: f64) -> f64 {
    match kind {
        MgfKind::Exact => {
            let d = law.mgf_domain_bound();
            if d.is_finite() {
                d * (1.0 - margin)
            } else {
                d
            }
        }
        MgfKind::Truncated => f64::INFINITY,
    }
}

fn moment_gap(a: &[f64], m: &[f64]) -> f64 {
    a.iter().zip(m).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Residual norm of mean-variance params against `target`, computed from
/// [`proxy_moments_mv`].
pub fn residual_mv(p: &ProxyParamsMV, target: &MomentSet, law: &MixingLaw, kind: MgfKind) -> Result<f64> {
    Ok(moment_gap(&proxy_moments_mv(p, law, kind)?.m, &target.m))
}

pub fn residual_v(p: &ProxyParamsV, target: &MomentSet, law: &MixingLaw, kind: MgfKind) -> Result<f64> {
    Ok(moment_gap(&proxy_moments_v(p, law, kind)?.m, &target.m))
}

pub fn residual_e(p: &ProxyParamsE, target: &MomentSet, law: &MixingLaw, opts: SeriesOptions) -> Result<f64> {
    Ok(moment_gap(&proxy_moments_e(p, law, opts)?.m, &target.m))
}

/// Fit `(a, b, c, d)` to the first four moments.
pub fn match_mv(
    target: &MomentSet,
    law: &MixingLaw,
    kind: MgfKind,
    opts: &MatchOptions,
) -> Result<MatchReport<ProxyParamsMV>> {
    check_target(target, Mode::MeanVariance)?;
    let sys = System {
        kernel: Kernel::Mixture(law, kind),
        mode: Mode::MeanVariance,
        target,
        scale: scale_of(target),
        bound: exact_bound(law, kind, opts.domain_margin),
    };
    let to_params = |x: &[f64]| ProxyParamsMV::new(x[0].sqrt(), x[1], x[2], x[3]);
    let (params, residual_norm, iterations, starts_tried) = run_match(
        &sys,
        law.mean(),
        opts,
        to_params,
        |p| residual_mv(p, target, law, kind).ok(),
    )?;
    Ok(MatchReport {
        params,
        residual_norm,
        iterations,
        starts_tried,
        mgf_kind: kind,
    })
}

/// Fit `(a, b, c)` to the first three moments, `b` a constant drift.
pub fn match_v(
    target: &MomentSet,
    law: &MixingLaw,
    kind: MgfKind,
    opts: &MatchOptions,
) -> Result<MatchReport<ProxyParamsV>> {
    check_target(target, Mode::Variance)?;
    let sys = System {
        kernel: Kernel::Mixture(law, kind),
        mode: Mode::Variance,
        target,
        scale: scale_of(target),
        bound: exact_bound(law, kind, opts.domain_margin),
    };
    let to_params = |x: &[f64]| ProxyParamsV::new(x[0].sqrt(), x[1], x[2]);
    let (params, residual_norm, iterations, starts_tried) = run_match(
        &sys,
        law.mean(),
        opts,
        to_params,
        |p| residual_v(p, target, law, kind).ok(),
    )?;
    Ok(MatchReport {
        params,
        residual_norm,
        iterations,
        starts_tried,
        mgf_kind: kind,
    })
}

/// Fit the circle proxy `(a, b, c)` to the first three moments.
pub fn match_e(target: &MomentSet, law: &MixingLaw, opts: &MatchOptions) -> Result<MatchReport<ProxyParamsE>> {
    check_target(target, Mode::Elliptical)?;
    let sys = System {
        kernel: Kernel::Circle(law, opts.series),
        mode: Mode::Elliptical,
        target,
        scale: scale_of(target),
        bound: f64::INFINITY,
    };
    let to_params = |x: &[f64]| ProxyParamsE::new(x[0].sqrt(), x[1], x[2]);
    let (params, residual_norm, iterations, starts_tried) = run_match(
        &sys,
        law.mean(),
        opts,
        to_params,
        |p| residual_e(p, target, law, opts.series).ok(),
    )?;
    Ok(MatchReport {
        params,
        residual_norm,
        iterations,
        starts_tried,
        mgf_kind: MgfKind::Exact,
    })
}
