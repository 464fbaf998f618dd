use std::io::Write;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::dgp::{self, DgpKind, NoiseKind};
use crate::erm::{self, LossKind};
use crate::risk::{self, StationaryCov};
use crate::{rng, stats, Error, Result};

/// One replication of one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub error: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Per-`n` summary of the L2 errors.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q95: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub rows: Vec<RateRow>,
    pub per_n: Vec<RateSummary>,
    /// OLS slope of log mean error on log n.
    pub slope: f64,
    pub slope_stderr: f64,
    /// Same fit on the per-n medians.
    pub median_slope: f64,
    pub theoretical_exponent: f64,
    pub non_converged: usize,
}

impl RateResult {
    pub fn write_rates_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=1")?;
        writeln!(w, "n,rep,seed,error,objective,iterations")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.n, r.rep, r.seed, r.error, r.objective, r.iterations
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=1")?;
        writeln!(w, "n,mean,median,q95,stderr")?;
        for s in &self.per_n {
            writeln!(w, "{},{},{},{},{}", s.n, s.mean, s.median, s.q95, s.std_error)?;
        }
        Ok(())
    }

    /// Mean over the n grid of the q95/median ratio.
    pub fn mean_tail_ratio(&self) -> f64 {
        let r: Vec<f64> = self.per_n.iter().map(|s| s.q95 / s.median).collect();
        stats::mean(&r)
    }
}

/// OLS slope of `log error` on `log n` with its standard error.
pub fn fit_loglog_slope(pairs: &[(usize, f64)]) -> Result<(f64, f64)> {
    let mut ns: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 distinct sample sizes, got {}",
            ns.len()
        )));
    }
    if let Some(&(n, e)) = pairs.iter().find(|p| !(p.1 > 0.0) || p.0 == 0) {
        return Err(Error::DegenerateInput(format!("non-positive value at n = {n}: {e}")));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = stats::mean(&xs);
    let my = stats::mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let m = pairs.len() as f64;
    let stderr = if pairs.len() > 2 {
        (ssr / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}

/// Rate exponent predicted by the theory for the configured case.
///
/// Polynomial tails give `-(1 - 1/eta2)/4 + iota`. Otherwise the rate is
/// `-1/2 + iota` under norm equivalence and `-1/4 + iota` without it. The
/// Huber loss only sees the input tails; with Gaussian inputs it attains
/// `-1/2` even for polynomial noise.
pub fn theoretical_exponent(cfg: &ExperimentConfig) -> f64 {
    let heavy_inputs = cfg.dgp.kind == DgpKind::SemiParetoAR;
    let heavy_noise = cfg.dgp.noise.kind == NoiseKind::PolyTail;
    let iota = cfg.iota;
    match cfg.loss.kind {
        LossKind::Squared if heavy_inputs || heavy_noise => -(1.0 - 1.0 / cfg.eta2) / 4.0 + iota,
        LossKind::Huber if heavy_inputs => -(1.0 - 1.0 / cfg.eta2) / 4.0 + iota,
        LossKind::Huber if heavy_noise && cfg.dgp.kind == DgpKind::GaussianAR => -0.5,
        _ if cfg.norm_equivalence => -0.5 + iota,
        _ => -0.25 + iota,
    }
}

/// Number of blocks `mu(N) = floor(N^r Q c^{1/eta1} / 4)`, at least 1.
pub fn block_count(n: usize, r: f64, q_hat: f64, mixing_c: f64, eta1: f64) -> usize {
    let mu = (n as f64).powf(r) * q_hat * mixing_c.powf(1.0 / eta1) / 4.0;
    (mu.floor() as usize).max(1)
}

fn summarize(n: usize, errors: &mut [f64]) -> RateSummary {
    let mean = stats::mean(errors);
    let std_error = stats::std_error(errors);
    errors.sort_by(f64::total_cmp);
    RateSummary {
        n,
        mean,
        median: stats::quantile_sorted(errors, 0.5),
        q95: stats::quantile_sorted(errors, 0.95),
        std_error,
    }
}

/// Monte-Carlo rate experiment over `cfg.n_grid`.
///
/// Replication `k` at size `n` uses the sub-seed `derive_seed(master, [n, k])`,
/// so the rows are identical for any thread count.
pub fn run_rates(cfg: &ExperimentConfig) -> Result<RateResult> {
    cfg.validate()?;
    let cov = risk::analytic_cov(&cfg.dgp)?;
    run_rates_with_cov(cfg, &cov)
}

pub fn run_rates_with_cov(cfg: &ExperimentConfig, cov: &StationaryCov) -> Result<RateResult> {
    let jobs: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |k| (n, k)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let seed = rng::derive_seed(cfg.master_seed, &[n as u64, rep as u64]);
            let sample = dgp::generate(&cfg.dgp, n, seed)?;
            let fit = erm::erm_fit(&sample, &cfg.loss, cfg.dgp.radius, &cfg.fit)?;
            let error = risk::l2_error(&fit.theta_hat, &cfg.dgp.theta_star, cov)?;
            Ok(RateRow {
                n,
                rep,
                seed,
                error,
                objective: fit.objective,
                iterations: fit.iterations,
                converged: fit.converged(),
            })
        })
        .collect::<Result<Vec<RateRow>>>()?;

    let per_n: Vec<RateSummary> = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let mut errs: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.error).collect();
            summarize(n, &mut errs)
        })
        .collect();
    let mean_pairs: Vec<(usize, f64)> = per_n.iter().map(|s| (s.n, s.mean)).collect();
    let median_pairs: Vec<(usize, f64)> = per_n.iter().map(|s| (s.n, s.median)).collect();
    let (slope, slope_stderr) = fit_loglog_slope(&mean_pairs)?;
    let (median_slope, _) = fit_loglog_slope(&median_pairs)?;
    Ok(RateResult {
        non_converged: rows.iter().filter(|r| !r.converged).count(),
        rows,
        per_n,
        slope,
        slope_stderr,
        median_slope,
        theoretical_exponent: theoretical_exponent(cfg),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub n: usize,
    /// Huber median error over squared median error.
    pub median_ratio: f64,
    pub q95_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub squared: RateResult,
    pub huber: RateResult,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=1")?;
        writeln!(
            w,
            "n,median_squared,median_huber,q95_squared,q95_huber,median_ratio,q95_ratio"
        )?;
        for ((r, s), h) in self.rows.iter().zip(&self.squared.per_n).zip(&self.huber.per_n) {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.n, s.median, h.median, s.q95, h.q95, r.median_ratio, r.q95_ratio
            )?;
        }
        Ok(())
    }
}

/// The pair of configs `run_huber_vs_squared` expects: `cfg` under squared
/// loss, and `cfg` under Huber loss (its own threshold if it already uses
/// Huber, otherwise three noise standard deviations).
pub fn loss_pair(cfg: &ExperimentConfig) -> (ExperimentConfig, ExperimentConfig) {
    let squared = cfg.with_loss(erm::LossSpec::SQUARED);
    let huber = match cfg.loss.kind {
        LossKind::Huber => cfg.clone(),
        LossKind::Squared => cfg.with_loss(erm::LossSpec::huber(3.0 * cfg.dgp.noise.variance().sqrt())),
    };
    (squared, huber)
}

/// Runs both configs on identical samples. They must differ only in the loss.
pub fn run_huber_vs_squared(squared: &ExperimentConfig, huber: &ExperimentConfig) -> Result<Comparison> {
    if squared.loss.kind != LossKind::Squared || huber.loss.kind != LossKind::Huber {
        return Err(crate::error::invalid(
            "loss",
            "expected a squared-loss and a Huber-loss config",
        ));
    }
    if squared.with_loss(huber.loss) != *huber {
        return Err(crate::error::invalid(
            "cfg_pair",
            "configs must differ only in the loss",
        ));
    }
    let squared = run_rates(squared)?;
    let huber = run_rates(huber)?;
    let rows = squared
        .per_n
        .iter()
        .zip(&huber.per_n)
        .map(|(s, h)| ComparisonRow {
            n: s.n,
            median_ratio: h.median / s.median,
            q95_ratio: h.q95 / s.q95,
        })
        .collect();
    Ok(Comparison { squared, huber, rows })
}
