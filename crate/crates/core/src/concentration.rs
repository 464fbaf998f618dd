//! Concentration bounds for sums of dependent variables and the harness that
//! checks them against simulated sup-of-partial-sums statistics.

use std::io::Write;
use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;

use crate::dgp::{self, DgpSpec, SymPareto};
use crate::erm::{loss_grad, LossSpec};
use crate::error::invalid;
use crate::{rng, stats, Error, Result};

/// Interleaved blocking of `1..=n` into `mu` blocks of length `a` followed by
/// `mu` gap blocks of length `b`. Ranges are zero-based and half-open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    pub a: usize,
    pub b: usize,
    pub mu: usize,
    pub odd_blocks: Vec<Range<usize>>,
    pub gap_blocks: Vec<Range<usize>>,
}

impl BlockPartition {
    /// All `2 mu` index ranges in time order.
    pub fn index_sets(&self) -> Vec<Range<usize>> {
        self.odd_blocks
            .iter()
            .zip(&self.gap_blocks)
            .flat_map(|(o, g)| [o.clone(), g.clone()])
            .collect()
    }
}

pub fn blocking_partition(n: usize, a: usize, b: usize) -> Result<BlockPartition> {
    if a == 0 {
        return Err(invalid("a", "block length must be at least 1"));
    }
    let block = a + b;
    if !n.is_multiple_of(block) {
        return Err(Error::NonDivisible { n, block });
    }
    let mu = n / block;
    let odd_blocks = (0..mu).map(|i| i * block..i * block + a).collect();
    let gap_blocks = (0..mu).map(|i| i * block + a..(i + 1) * block).collect();
    Ok(BlockPartition {
        a,
        b,
        mu,
        odd_blocks,
        gap_blocks,
    })
}

/// Parameters of the polynomial-tail bound for exponentially beta-mixing sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTailParams {
    pub n: usize,
    pub eta1: f64,
    pub eta2: f64,
    pub d1: f64,
    pub d2: f64,
    pub c_prime: f64,
}

impl HeavyTailParams {
    /// `d1 = 1/(1+eta2)`, `d2 = (eta2-1)/(eta2+1)`.
    pub fn with_default_exponents(n: usize, eta1: f64, eta2: f64, c_prime: f64) -> Self {
        HeavyTailParams {
            n,
            eta1,
            eta2,
            d1: 1.0 / (1.0 + eta2),
            d2: (eta2 - 1.0) / (eta2 + 1.0),
            c_prime,
        }
    }
}

/// `P(sup_{j<=N} |sum_{i<=j} W_i| >= t)` is at most
///
/// ```text
/// 2^{eta2+3} / (d2 log t)^{(1-eta2)/eta1} * N / t^{1 + d1 (eta2-1)}
///   + 8 N / t^{1 + c' d2}
///   + 2 exp(-t^{2-2 d1} (d2 log t)^{1/eta1} / (9 N))
/// ```
pub fn heavy_tail_bound(t: f64, p: &HeavyTailParams) -> Result<f64> {
    Ok(heavy_tail_terms(t, p)?.iter().sum())
}

pub fn heavy_tail_terms(t: f64, p: &HeavyTailParams) -> Result<[f64; 3]> {
    if !(t > 1.0) {
        return Err(Error::DomainError(format!("threshold t = {t} must exceed 1")));
    }
    if !(p.eta2 > 2.0) {
        return Err(invalid("eta2", format!("must exceed 2, got {}", p.eta2)));
    }
    if !(p.eta1 > 0.0) {
        return Err(invalid("eta1", format!("must be > 0, got {}", p.eta1)));
    }
    if !(0.0..=1.0).contains(&p.d1) {
        return Err(invalid("d1", format!("must lie in [0, 1], got {}", p.d1)));
    }
    if !(p.d2 >= 0.0) {
        return Err(invalid("d2", format!("must be >= 0, got {}", p.d2)));
    }
    if !(p.c_prime > 0.0) {
        return Err(invalid("c_prime", format!("must be > 0, got {}", p.c_prime)));
    }
    let dlog = p.d2 * t.ln();
    if !(dlog > 0.0) {
        return Err(Error::DomainError(format!(
            "d2 log t = {dlog} must be positive (d2 = {})",
            p.d2
        )));
    }
    let n = p.n as f64;
    let first = 2f64.powf(p.eta2 + 3.0) / dlog.powf((1.0 - p.eta2) / p.eta1) * n / t.powf(1.0 + p.d1 * (p.eta2 - 1.0));
    let second = 8.0 * n / t.powf(1.0 + p.c_prime * p.d2);
    let third = 2.0 * (-(t.powf(2.0 - 2.0 * p.d1) * dlog.powf(1.0 / p.eta1)) / (9.0 * n)).exp();
    Ok([first, second, third])
}

/// Parameters of the Bernstein-type bound for sub-Weibull mixing sums. The
/// constants `c[0..4]` are `C_1..C_4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RioParams {
    pub n: usize,
    pub eta: f64,
    pub v: f64,
    pub c: [f64; 4],
}

/// `N e^{-t^eta/C1} + e^{-t^2/(C2 N V)} + e^{-(t^2/(C3 N)) exp(t^{eta(1-eta)} / (C4 (log t)^eta))}`.
pub fn rio_bound(t: f64, p: &RioParams) -> Result<f64> {
    Ok(rio_terms(t, p)?.iter().sum())
}

pub fn rio_terms(t: f64, p: &RioParams) -> Result<[f64; 3]> {
    if !(t > 1.0) {
        return Err(Error::DomainError(format!("threshold t = {t} must exceed 1")));
    }
    if !(p.eta > 0.0 && p.eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1), got {}", p.eta)));
    }
    if p.c.iter().any(|c| !(*c > 0.0)) {
        return Err(invalid("c", "constants must be positive"));
    }
    if !(p.v > 0.0) {
        return Err(invalid("v", format!("must be > 0, got {}", p.v)));
    }
    let n = p.n as f64;
    let [c1, c2, c3, c4] = p.c;
    let first = n * (-t.powf(p.eta) / c1).exp();
    let second = (-t * t / (c2 * n * p.v)).exp();
    let inner = (t.powf(p.eta * (1.0 - p.eta)) / (c4 * t.ln().powf(p.eta))).exp();
    let third = (-(t * t / (c3 * n)) * inner).exp();
    Ok([first, second, third])
}

/// Dyadic truncation levels `1, 2, 4, ..., 2^12`.
pub fn default_m_grid() -> Vec<f64> {
    (0..=12).map(|k| 2f64.powi(k)).collect()
}

/// `ceil(10 (log n)^{1/eta1})`.
pub fn default_max_lag(n: usize, eta1: f64) -> usize {
    (10.0 * (n as f64).ln().max(0.0).powf(1.0 / eta1)).ceil() as usize
}

/// Plug-in estimate of the variance proxy
/// `V = sup_M (var(k_M(W)) + 2 sum_{j>=1} |cov(k_M(W_0), k_M(W_j))|)`,
/// where `k_M` clips to `[-M, M]`, over the truncation levels in `m_grid` and
/// lags up to `max_lag`.
pub fn estimate_v(w: &[f64], m_grid: &[f64], max_lag: usize) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::DegenerateInput("empty series".into()));
    }
    if w.len() <= 2 * max_lag {
        return Err(invalid(
            "max_lag",
            format!("series length {} must exceed twice the lag {max_lag}", w.len()),
        ));
    }
    if m_grid.is_empty() || m_grid.iter().any(|m| !(*m > 0.0)) {
        return Err(invalid("m_grid", "truncation levels must be positive"));
    }
    let n = w.len() as f64;
    let best = m_grid
        .iter()
        .map(|&m| {
            let c: Vec<f64> = w.iter().map(|v| v.clamp(-m, m)).collect();
            let mean = c.iter().sum::<f64>() / n;
            let centered: Vec<f64> = c.iter().map(|v| v - mean).collect();
            let autocov = |lag: usize| centered.iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / n;
            autocov(0) + 2.0 * (1..=max_lag).map(|k| autocov(k).abs()).sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(best)
}

/// Source of the interaction series whose partial sums are studied.
#[derive(Debug, Clone, PartialEq)]
pub enum InteractionSpec {
    /// I.i.d. symmetric Pareto variables with `P(|W| > t) = 1/(1+(scale t)^eta)`.
    IidSymPareto { eta: f64, scale: f64 },
    /// `W_i = loss'(f*(X_i) - Y_i) (f - f*)(X_i)` for `f = <theta, .>`. The
    /// noise is symmetric and independent of the centered inputs, so `E W_i = 0`.
    Process {
        dgp: DgpSpec,
        theta: Vec<f64>,
        loss: LossSpec,
    },
}

impl InteractionSpec {
    fn validate(&self) -> Result<()> {
        match self {
            InteractionSpec::IidSymPareto { eta, scale } => {
                if !(*eta > 0.0 && *scale > 0.0) {
                    return Err(invalid("interaction", "Pareto parameters must be positive"));
                }
                Ok(())
            }
            InteractionSpec::Process { dgp, theta, loss } => {
                dgp.validate()?;
                loss.validate()?;
                if theta.len() != dgp.d {
                    return Err(Error::DimensionMismatch {
                        expected: dgp.d,
                        got: theta.len(),
                    });
                }
                Ok(())
            }
        }
    }

    /// One path of length `n`, drawn from the given seed.
    pub fn path(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            InteractionSpec::IidSymPareto { eta, scale } => {
                let law = SymPareto::new(*eta, *scale);
                let mut r = rng::stream(seed, &[]);
                Ok((0..n).map(|_| r.sample::<f64, _>(law)).collect())
            }
            InteractionSpec::Process { dgp: spec, theta, loss } => {
                let sample = dgp::generate(spec, n, seed)?;
                let diff: Vec<f64> = theta.iter().zip(&spec.theta_star).map(|(a, b)| a - b).collect();
                Ok(sample
                    .rows()
                    .zip(&sample.y)
                    .map(|(x, y)| {
                        let resid = dgp::dot(x, &spec.theta_star) - y;
                        loss_grad(loss, resid) * dgp::dot(x, &diff)
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBound {
    HeavyTail(HeavyTailParams),
    Rio(RioParams),
}

impl TailBound {
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            TailBound::HeavyTail(p) => heavy_tail_bound(t, p),
            TailBound::Rio(p) => rio_bound(t, p),
        }
    }

    pub fn params(&self) -> Vec<(String, String)> {
        let kv = |k: &str, v: String| (k.to_string(), v);
        match self {
            TailBound::HeavyTail(p) => vec![
                kv("bound", "heavy_tail".into()),
                kv("n", p.n.to_string()),
                kv("eta1", p.eta1.to_string()),
                kv("eta2", p.eta2.to_string()),
                kv("d1", p.d1.to_string()),
                kv("d2", p.d2.to_string()),
                kv("c_prime", p.c_prime.to_string()),
            ],
            TailBound::Rio(p) => vec![
                kv("bound", "rio".into()),
                kv("n", p.n.to_string()),
                kv("eta", p.eta.to_string()),
                kv("v", p.v.to_string()),
                kv("c1", p.c[0].to_string()),
                kv("c2", p.c[1].to_string()),
                kv("c3", p.c[2].to_string()),
                kv("c4", p.c[3].to_string()),
            ],
        }
    }
}

/// Empirical tail of `sup_{j<=N} |sum_{i<=j} W_i|` next to an analytic bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub t_grid: Vec<f64>,
    pub empirical: Vec<f64>,
    pub std_error: Vec<f64>,
    pub bound: Vec<f64>,
    pub params: Vec<(String, String)>,
    /// Grand mean of `W` over all paths and its standard error (across paths).
    pub mean_w: f64,
    pub mean_w_se: f64,
    pub n_paths: usize,
}

impl TailReport {
    /// Grid indices where `empirical > bound + k * std_error`.
    pub fn violations(&self, k: f64) -> Vec<usize> {
        (0..self.t_grid.len())
            .filter(|&i| self.empirical[i] > self.bound[i] + k * self.std_error[i])
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=1")?;
        writeln!(w, "t,empirical,std_error,bound")?;
        for i in 0..self.t_grid.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.t_grid[i], self.empirical[i], self.std_error[i], self.bound[i]
            )?;
        }
        Ok(())
    }

    pub fn write_params<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.params {
            writeln!(w, "{k}={v}")?;
        }
        writeln!(w, "n_paths={}", self.n_paths)?;
        writeln!(w, "mean_w={}", self.mean_w)?;
        writeln!(w, "mean_w_se={}", self.mean_w_se)?;
        Ok(())
    }
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Simulates `n_paths` independent paths of length `n`, records the
/// sup-of-partial-sums statistic of each, and pairs its empirical survival
/// function on `t_grid` with `bound`.
pub fn tail_verify(
    spec: &InteractionSpec,
    n: usize,
    t_grid: &[f64],
    n_paths: usize,
    bound: &TailBound,
    seed: u64,
) -> Result<TailReport> {
    spec.validate()?;
    if n == 0 || n_paths == 0 {
        return Err(invalid("n", "need at least one path of length >= 1"));
    }
    if t_grid.iter().any(|t| !(*t > 1.0)) {
        return Err(Error::DomainError("every threshold must exceed 1".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t_grid", "thresholds must be strictly increasing"));
    }
    let bounds: Vec<f64> = t_grid.iter().map(|&t| bound.eval(t)).collect::<Result<_>>()?;
    let per_path: Vec<(f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let path = spec.path(n, rng::derive_seed(seed, &[k as u64]))?;
            let mut partial = 0.0;
            let mut sup = 0.0f64;
            for v in &path {
                partial += v;
                sup = sup.max(partial.abs());
            }
            Ok((sup, path.iter().sum::<f64>() / n as f64))
        })
        .collect::<Result<_>>()?;
    let mut sups: Vec<f64> = per_path.iter().map(|p| p.0).collect();
    let means: Vec<f64> = per_path.iter().map(|p| p.1).collect();
    sups.sort_by(f64::total_cmp);
    let m = n_paths as f64;
    let (empirical, std_error): (Vec<f64>, Vec<f64>) = t_grid
        .iter()
        .map(|&t| {
            let below = sups.partition_point(|v| *v < t);
            let p = (n_paths - below) as f64 / m;
            (p, (p * (1.0 - p) / m).sqrt())
        })
        .unzip();
    let mut params = bound.params();
    params.insert(0, ("path_length".into(), n.to_string()));
    params.insert(1, ("seed".into(), seed.to_string()));
    Ok(TailReport {
        t_grid: t_grid.to_vec(),
        empirical,
        std_error,
        bound: bounds,
        params,
        mean_w: stats::mean(&means),
        mean_w_se: stats::std_error(&means),
        n_paths,
    })
}
