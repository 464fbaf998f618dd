//! Monte-Carlo complexity measures of the linear l1 class
//! `H = F_R - F_R = {<t, .> : |t|_1 <= 2R}`, and closed-form bounds on them.
//!
//! Localization uses the L2(pi) ball. With a diagonal stationary covariance
//! `Sigma = diag(s_j^2)` the constraint `|<t, .>|_{L2} <= r` is the weighted
//! Euclidean ball `|diag(s) t|_2 <= r`, so every inner supremum is a linear
//! program over the intersection of an l1 ball and an ellipsoid, solved
//! exactly through its one-dimensional dual.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dgp::{self, DgpSpec, SymPareto, SymWeibull};
use crate::error::invalid;
use crate::risk::{self, StationaryCov};
use crate::{rng, stats, Result};

/// Outcome of a Monte-Carlo complexity estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_mc: usize,
    /// Localization radii at which the expected supremum was evaluated.
    pub r_grid: Vec<f64>,
    /// Number of sampled directions for small-ball estimates, otherwise 0.
    pub n_dir: usize,
    /// Set when the estimate is an upper bound on an infimum over the class.
    pub upper_bound: bool,
}

impl ComplexityEstimate {
    fn exact_zero(n_mc: usize) -> Self {
        ComplexityEstimate {
            value: 0.0,
            std_error: 0.0,
            n_mc,
            r_grid: Vec::new(),
            n_dir: 0,
            upper_bound: false,
        }
    }
}

/// `sup { <w, t> : |t|_1 <= rho, |t|_2 <= r }`.
pub fn sup_linear_l1_l2(w: &[f64], rho: f64, r: f64) -> Result<f64> {
    check_radii(rho, r)?;
    Ok(weighted_sup(w, None, rho, r))
}

/// `sup { <w, t> : |t|_1 <= rho, |diag(scales) t|_2 <= r }` for positive scales.
pub fn sup_linear_l1_weighted_l2(w: &[f64], scales: &[f64], rho: f64, r: f64) -> Result<f64> {
    check_radii(rho, r)?;
    if scales.len() != w.len() {
        return Err(crate::Error::DimensionMismatch {
            expected: w.len(),
            got: scales.len(),
        });
    }
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(invalid("scales", "must all be > 0"));
    }
    Ok(weighted_sup(w, Some(scales), rho, r))
}

fn check_radii(rho: f64, r: f64) -> Result<()> {
    if !(rho > 0.0) {
        return Err(invalid("rho", format!("must be > 0, got {rho}")));
    }
    if !(r > 0.0) {
        return Err(invalid("r", format!("must be > 0, got {r}")));
    }
    Ok(())
}

/// Minimizes the dual `g(lambda) = lambda rho + r |(|w| - lambda)_+ / s|_2` over
/// `lambda in [0, max|w|]`. `g` is convex, so bisection on the sign of `g'`
/// locates the minimizer.
fn weighted_sup(w: &[f64], scales: Option<&[f64]>, rho: f64, r: f64) -> f64 {
    let scale = |j: usize| scales.map_or(1.0, |s| s[j]);
    let wmax = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if wmax == 0.0 {
        return 0.0;
    }
    // (sum (|w|-l)_+ / s^2, |(|w|-l)_+ / s|_2)
    let parts = |lambda: f64| {
        let mut lin = 0.0;
        let mut sq = 0.0;
        for (j, v) in w.iter().enumerate() {
            let e = (v.abs() - lambda).max(0.0);
            if e > 0.0 {
                let s = scale(j);
                lin += e / (s * s);
                sq += (e / s) * (e / s);
            }
        }
        (lin, sq.sqrt())
    };
    let dual = |lambda: f64| lambda * rho + r * parts(lambda).1;
    let slope = |lambda: f64| {
        let (lin, norm) = parts(lambda);
        if norm == 0.0 {
            rho
        } else {
            rho - r * lin / norm
        }
    };
    if slope(0.0) >= 0.0 {
        return dual(0.0);
    }
    let (mut lo, mut hi) = (0.0, wmax);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    dual(lo).min(dual(hi))
}

/// `phi(r)` = mean over draws of the localized supremum at radius `r`.
struct LocalizedSup<'a> {
    draws: &'a [Vec<f64>],
    scales: &'a [f64],
    rho: f64,
}

impl LocalizedSup<'_> {
    fn values(&self, r: f64) -> Vec<f64> {
        self.draws
            .par_iter()
            .map(|w| weighted_sup(w, Some(self.scales), self.rho, r))
            .collect()
    }

    fn mean(&self, r: f64) -> f64 {
        // collect-then-sum keeps the reduction order fixed
        stats::mean(&self.values(r))
    }

    /// `lim_{r -> 0} phi(r)/r`, reached once the l1 constraint is slack.
    fn slope_at_zero(&self) -> f64 {
        let v: Vec<f64> = self
            .draws
            .iter()
            .map(|w| {
                w.iter()
                    .zip(self.scales)
                    .map(|(a, s)| (a / s) * (a / s))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        stats::mean(&v)
    }

    /// `lim_{r -> inf} phi(r) = rho * E|w|_inf`.
    fn plateau(&self) -> f64 {
        let v: Vec<f64> = self
            .draws
            .iter()
            .map(|w| self.rho * w.iter().fold(0.0f64, |m, a| m.max(a.abs())))
            .collect();
        stats::mean(&v)
    }

    /// `inf { r > 0 : phi(r) <= level * r }`, found by bisection using that
    /// `phi(r)/r` is non-increasing for a star-shaped class.
    fn infimum(&self, level: f64, probed: &mut Vec<f64>) -> f64 {
        if self.slope_at_zero() <= level {
            return 0.0;
        }
        let mut hi = self.plateau() / level;
        let mut lo = 0.0;
        if hi <= 0.0 {
            return 0.0;
        }
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            probed.push(mid);
            if self.mean(mid) <= level * mid {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

const STD_ERROR_BATCHES: usize = 10;

/// Pooled infimum plus a batch-means standard error.
fn localized_infimum(draws: &[Vec<f64>], scales: &[f64], rho: f64, level: f64) -> ComplexityEstimate {
    let pooled = LocalizedSup { draws, scales, rho };
    let mut r_grid = Vec::new();
    let value = pooled.infimum(level, &mut r_grid);
    let batch = draws.len() / STD_ERROR_BATCHES;
    let std_error = if batch >= 2 {
        let per_batch: Vec<f64> = draws
            .chunks_exact(batch)
            .take(STD_ERROR_BATCHES)
            .map(|chunk| {
                let b = LocalizedSup {
                    draws: chunk,
                    scales,
                    rho,
                };
                b.infimum(level, &mut Vec::new())
            })
            .collect();
        stats::std_error(&per_batch)
    } else {
        0.0
    };
    r_grid.sort_by(f64::total_cmp);
    ComplexityEstimate {
        value,
        std_error,
        n_mc: draws.len(),
        r_grid,
        n_dir: 0,
        upper_bound: false,
    }
}

/// Blocked Rademacher vectors `w = (1/mu) sum_i eps_i X_i` over `mu` i.i.d.
/// stationary draws, one per MC replication.
pub fn rademacher_draws(spec: &DgpSpec, mu: usize, n_mc: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = spec.d;
    (0..n_mc)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, &[0x7261_6400, k as u64]);
            let mut acc = vec![0.0; d];
            let mut x = vec![0.0; d];
            for _ in 0..mu {
                dgp::draw_stationary(spec, &mut rng, &mut x);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                for (a, v) in acc.iter_mut().zip(&x) {
                    *a += sign * v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= mu as f64);
            acc
        })
        .collect()
}

fn covariance_scales(spec: &DgpSpec, cov: Option<&StationaryCov>) -> Result<Vec<f64>> {
    let cov = match cov {
        Some(c) => c.clone(),
        None => risk::analytic_cov(spec)?,
    };
    if cov.diag.len() != spec.d {
        return Err(crate::Error::DimensionMismatch {
            expected: spec.d,
            got: cov.diag.len(),
        });
    }
    Ok(cov.sd())
}

/// Mean localized Rademacher supremum `E sup_{h in H cap rD} |(1/mu) sum eps_i h(X_i)|`
/// on a grid of radii, with common random numbers across the grid.
pub fn rademacher_sup_curve(spec: &DgpSpec, mu: usize, r_grid: &[f64], n_mc: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let scales = covariance_scales(spec, None)?;
    let draws = rademacher_draws(spec, mu, n_mc, seed);
    let rho = 2.0 * spec.radius;
    if rho == 0.0 {
        return Ok(vec![0.0; r_grid.len()]);
    }
    let phi = LocalizedSup {
        draws: &draws,
        scales: &scales,
        rho,
    };
    Ok(r_grid.iter().map(|&r| phi.mean(r)).collect())
}

/// Local Rademacher complexity `omega_mu(H, gamma)`.
///
/// `cov` overrides the analytic stationary covariance (e.g. with an MC estimate).
pub fn omega_mu_estimate(
    spec: &DgpSpec,
    mu: usize,
    gamma: f64,
    n_mc: usize,
    seed: u64,
    cov: Option<&StationaryCov>,
) -> Result<ComplexityEstimate> {
    spec.validate()?;
    if mu == 0 {
        return Err(invalid("mu", "block count must be at least 1"));
    }
    if !(gamma > 0.0) {
        return Err(invalid("gamma", format!("must be > 0, got {gamma}")));
    }
    if spec.radius == 0.0 {
        return Ok(ComplexityEstimate::exact_zero(n_mc));
    }
    let scales = covariance_scales(spec, cov)?;
    let draws = rademacher_draws(spec, mu, n_mc, seed);
    Ok(localized_infimum(&draws, &scales, 2.0 * spec.radius, gamma))
}

/// Small-ball function `Q_H(u) = inf_h P(|h| >= u |h|_{L2})`, estimated as the
/// minimum over `n_dir` random directions. The result upper-bounds `Q_H(u)`.
pub fn small_ball_estimate(spec: &DgpSpec, u: f64, n_dir: usize, n_mc: usize, seed: u64) -> Result<ComplexityEstimate> {
    spec.validate()?;
    if !(u > 0.0) {
        return Err(invalid("u", format!("must be > 0, got {u}")));
    }
    if n_dir == 0 || n_mc == 0 {
        return Err(invalid("n_mc", "need at least one direction and one draw"));
    }
    let d = spec.d;
    let cov = risk::analytic_cov(spec)?;
    let mut dir_rng = rng::stream(seed, &[0x0064_6972]);
    let directions: Vec<Vec<f64>> = (0..n_dir)
        .map(|_| {
            let g: Vec<f64> = (0..d).map(|_| dir_rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            g.iter().map(|v| v / norm).collect()
        })
        .collect();
    let thresholds: Vec<f64> = directions
        .iter()
        .map(|t| u * t.iter().zip(&cov.diag).map(|(a, s)| a * a * s).sum::<f64>().sqrt())
        .collect();
    let counts: Vec<Vec<u64>> = (0..n_mc)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, &[0x0073_6200, k as u64]);
            let mut x = vec![0.0; d];
            dgp::draw_stationary(spec, &mut rng, &mut x);
            directions
                .iter()
                .zip(&thresholds)
                .map(|(t, thr)| u64::from(dgp::dot(t, &x).abs() >= *thr))
                .collect()
        })
        .collect();
    let mut hits = vec![0u64; n_dir];
    for row in &counts {
        for (h, c) in hits.iter_mut().zip(row) {
            *h += c;
        }
    }
    let min_hits = *hits.iter().min().expect("n_dir >= 1");
    let p = min_hits as f64 / n_mc as f64;
    Ok(ComplexityEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n_mc as f64).sqrt(),
        n_mc,
        r_grid: Vec::new(),
        n_dir,
        upper_bound: true,
    })
}

fn gaussian_draws(spec: &DgpSpec, scales: &[f64], n_mc: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n_mc)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, &[0x0067_7700, k as u64]);
            scales
                .iter()
                .take(spec.d)
                .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

/// Localized Gaussian width `E sup_{h in H cap rD} G_h`, where `G` is the
/// canonical Gaussian process of the linear class: `G_t = <g, t>` with
/// `g ~ N(0, Sigma)`.
pub fn gaussian_width_estimate(spec: &DgpSpec, r: f64, n_mc: usize, seed: u64) -> Result<ComplexityEstimate> {
    spec.validate()?;
    if !(r > 0.0) {
        return Err(invalid("r", format!("must be > 0, got {r}")));
    }
    if spec.radius == 0.0 {
        return Ok(ComplexityEstimate::exact_zero(n_mc));
    }
    let scales = covariance_scales(spec, None)?;
    let draws = gaussian_draws(spec, &scales, n_mc, seed);
    let phi = LocalizedSup {
        draws: &draws,
        scales: &scales,
        rho: 2.0 * spec.radius,
    };
    let values = phi.values(r);
    Ok(ComplexityEstimate {
        value: stats::mean(&values),
        std_error: stats::std_error(&values),
        n_mc,
        r_grid: vec![r],
        n_dir: 0,
        upper_bound: false,
    })
}

/// `omega_1(H, N, zeta_1) = inf { r : E|G|_{H cap rD} <= zeta_1 r N^{eta1/(2(1+eta1))} }`.
pub fn omega_1_estimate(
    spec: &DgpSpec,
    n: usize,
    zeta1: f64,
    eta1: f64,
    n_mc: usize,
    seed: u64,
) -> Result<ComplexityEstimate> {
    spec.validate()?;
    if !(zeta1 > 0.0 && eta1 > 0.0) {
        return Err(invalid("zeta1", "zeta1 and eta1 must be > 0"));
    }
    if spec.radius == 0.0 {
        return Ok(ComplexityEstimate::exact_zero(n_mc));
    }
    let scales = covariance_scales(spec, None)?;
    let draws = gaussian_draws(spec, &scales, n_mc, seed);
    let level = zeta1 * (n as f64).powf(eta1 / (2.0 * (1.0 + eta1)));
    Ok(localized_infimum(&draws, &scales, 2.0 * spec.radius, level))
}

/// `omega_Q = max(omega_1(H, N, zeta_1), omega_mu(H, zeta_2))`.
#[allow(clippy::too_many_arguments)]
pub fn omega_q_estimate(
    spec: &DgpSpec,
    n: usize,
    mu: usize,
    zeta1: f64,
    zeta2: f64,
    eta1: f64,
    n_mc: usize,
    seed: u64,
) -> Result<ComplexityEstimate> {
    let w1 = omega_1_estimate(spec, n, zeta1, eta1, n_mc, rng::derive_seed(seed, &[1]))?;
    let w2 = omega_mu_estimate(spec, mu, zeta2, n_mc, rng::derive_seed(seed, &[2]), None)?;
    Ok(if w1.value >= w2.value { w1 } else { w2 })
}

/// Constants the closed-form bounds leave symbolic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c1: f64,
    pub c3: f64,
    pub k1: f64,
    pub c9: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            c1: 1.0,
            c3: 2.0,
            k1: 1.0,
            c9: 1.0,
        }
    }
}

/// `c3 R / sqrt(mu) * log(e d)^{1/eta}` when `mu <= c1 d`, else `0`.
pub fn theory_bound_subweibull(radius: f64, d: f64, eta: f64, mu: f64, consts: &BoundConstants) -> Result<f64> {
    if !(radius >= 0.0 && d > 0.0 && eta > 0.0 && mu > 0.0) {
        return Err(invalid("theory_bound_subweibull", "parameters must be positive"));
    }
    if mu > consts.c1 * d {
        return Ok(0.0);
    }
    Ok(consts.c3 * radius / mu.sqrt() * (std::f64::consts::E * d).ln().powf(1.0 / eta))
}

/// `C9 R / (tau q^{3/2}) * d^{1/(eta2 - iota/2) + iota/8} * N^{-1/2 + iota}`.
#[allow(clippy::too_many_arguments)]
pub fn theory_bound_pareto(
    radius: f64,
    d: f64,
    eta2: f64,
    iota: f64,
    n: f64,
    tau: f64,
    q: f64,
    c9: f64,
) -> Result<f64> {
    if !(eta2 > 2.0) {
        return Err(invalid("eta2", format!("must exceed 2, got {eta2}")));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(invalid("q", format!("must lie in (0, 1], got {q}")));
    }
    if !(radius >= 0.0 && d > 0.0 && iota >= 0.0 && n > 0.0 && tau > 0.0) {
        return Err(invalid("theory_bound_pareto", "parameters must be positive"));
    }
    let d_exp = 1.0 / (eta2 - 0.5 * iota) + iota / 8.0;
    Ok(c9 * radius / (tau * q.powf(1.5)) * d.powf(d_exp) * n.powf(-0.5 + iota))
}

/// Order-statistic bound `sqrt(2k) K1 log(e d)^{1/eta}` on
/// `E (sum_{i <= k} (w_i^*)^2)^{1/2}`.
pub fn order_statistic_bound(k: usize, d: usize, eta: f64, k1: f64) -> f64 {
    (2.0 * k as f64).sqrt() * k1 * (std::f64::consts::E * d as f64).ln().powf(1.0 / eta)
}

/// Smallest `K` with `|w|_{L_p} <= K p^{1/eta}` for all `p >= min(1, eta)`,
/// for a unit-variance symmetrized Weibull of shape `eta`, from the exact
/// absolute moments on a fine `p` grid.
pub fn sym_weibull_moment_constant(eta: f64) -> f64 {
    let w = SymWeibull::new(eta, 1.0);
    let p0 = eta.min(1.0);
    (0..=4000)
        .map(|i| p0 * (1.0 + 0.01 * i as f64).powi(2))
        .filter(|p| p.is_finite() && *p < 400.0)
        .map(|p| w.lp_norm(p) / p.powf(1.0 / eta))
        .fold(0.0, f64::max)
}

/// MC estimate of `E (sum_{i <= k} (w_i^*)^2)^{1/2}` for `k = 1..=d`, where
/// `w_1..w_d` are i.i.d. unit-variance symmetrized Weibull variables and
/// `w^*` is the non-increasing rearrangement of `|w|`.
pub fn top_k_norms_sym_weibull(d: usize, eta: f64, n_mc: usize, seed: u64) -> Vec<ComplexityEstimate> {
    let law = SymWeibull::new(eta, 1.0);
    let per_draw: Vec<Vec<f64>> = (0..n_mc)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, &[0x746f_706b, k as u64]);
            let mut w: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(law).powi(2)).collect();
            w.sort_by(|a, b| b.total_cmp(a));
            let mut acc = 0.0;
            w.iter()
                .map(|v| {
                    acc += v;
                    acc.sqrt()
                })
                .collect()
        })
        .collect();
    (0..d)
        .map(|k| {
            let col: Vec<f64> = per_draw.iter().map(|r| r[k]).collect();
            ComplexityEstimate {
                value: stats::mean(&col),
                std_error: stats::std_error(&col),
                n_mc,
                r_grid: Vec::new(),
                n_dir: 0,
                upper_bound: false,
            }
        })
        .collect()
}

/// Tail shape of the normalized Pareto block sum
/// `w_j = mu^{-1/2} sum_{i <= mu} X'_{ij}`:
/// `d_j^{eta3-2p-1} mu^{1-eta3/2} t^{eta3-2p} + d_j^{-2} t^{-p}` with
/// `p = eta3 - iota/2`.
pub fn block_mean_tail_shape(scale: f64, eta3: f64, iota: f64, mu: usize, t: f64) -> f64 {
    let p = eta3 - 0.5 * iota;
    scale.powf(eta3 - 2.0 * p - 1.0) * (mu as f64).powf(1.0 - eta3 / 2.0) * t.powf(eta3 - 2.0 * p)
        + scale.powi(-2) * t.powf(-p)
}

/// Empirical `P(|w_j| >= t)` on `t_grid` for the normalized block sum of `mu`
/// i.i.d. symmetric Pareto variables, with binomial standard errors.
pub fn block_mean_tail(eta3: f64, scale: f64, mu: usize, t_grid: &[f64], n_mc: usize, seed: u64) -> Vec<(f64, f64)> {
    let law = SymPareto::new(eta3, scale);
    let norm = (mu as f64).sqrt();
    let mut values: Vec<f64> = (0..n_mc)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, &[0x0062_6c6b, k as u64]);
            (0..mu).map(|_| rng.sample::<f64, _>(law)).sum::<f64>().abs() / norm
        })
        .collect();
    values.sort_by(f64::total_cmp);
    t_grid
        .iter()
        .map(|&t| {
            let below = values.partition_point(|v| *v < t);
            let p = (n_mc - below) as f64 / n_mc as f64;
            (p, (p * (1.0 - p) / n_mc as f64).sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::NoiseSpec;

    fn grid_sup_2d(w: &[f64], rho: f64, r: f64, n: usize) -> f64 {
        // radial parametrization of the boundary of the (star-shaped) feasible set
        (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let (c, s) = (a.cos(), a.sin());
                let scale = (rho / (c.abs() + s.abs())).min(r);
                scale * (w[0] * c + w[1] * s)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn sup_examples() {
        assert!((sup_linear_l1_l2(&[3.0, 1.0], 1.0, 10.0).unwrap() - 3.0).abs() < 1e-10);
        assert!((sup_linear_l1_l2(&[3.0, 1.0], 100.0, 1.0).unwrap() - 10f64.sqrt()).abs() < 1e-10);
        assert!((sup_linear_l1_l2(&[1.0, 1.0], 1.2, 1.0).unwrap() - 1.2).abs() < 1e-10);
        assert!((grid_sup_2d(&[1.0, 1.0], 1.2, 1.0, 100_000) - 1.2).abs() < 1e-4);
        assert_eq!(sup_linear_l1_l2(&[0.0, 0.0], 1.0, 1.0).unwrap(), 0.0);
        assert!(sup_linear_l1_l2(&[1.0], 0.0, 1.0).is_err());
        assert!(sup_linear_l1_l2(&[1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn weighted_sup_with_unit_scales_is_plain() {
        let w = [0.3, -1.2, 0.7];
        for (rho, r) in [(0.5, 2.0), (2.0, 0.5), (1.0, 1.0)] {
            let a = sup_linear_l1_l2(&w, rho, r).unwrap();
            let b = sup_linear_l1_weighted_l2(&w, &[1.0; 3], rho, r).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn weighted_sup_matches_change_of_variables_when_l1_slack() {
        // with a huge l1 radius the sup is r |w / s|_2
        let w = [1.0, 2.0];
        let s = [2.0, 0.5];
        let v = sup_linear_l1_weighted_l2(&w, &s, 1e6, 3.0).unwrap();
        let exact = 3.0 * ((0.5f64).powi(2) + 4.0f64.powi(2)).sqrt();
        assert!((v - exact).abs() < 1e-9);
        assert!(sup_linear_l1_weighted_l2(&w, &[1.0], 1.0, 1.0).is_err());
        assert!(sup_linear_l1_weighted_l2(&w, &[1.0, 0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn degenerate_class_has_zero_complexity() {
        let spec = DgpSpec::gaussian_ar(2, 0.0, NoiseSpec::gaussian(1.0), vec![0.0; 2], 0.0);
        for gamma in [0.01, 1.0] {
            assert_eq!(omega_mu_estimate(&spec, 8, gamma, 100, 1, None).unwrap().value, 0.0);
        }
        assert_eq!(gaussian_width_estimate(&spec, 1.0, 100, 1).unwrap().value, 0.0);
    }

    #[test]
    fn omega_mu_is_monotone_in_gamma() {
        let spec = DgpSpec::gaussian_ar(2, 0.0, NoiseSpec::gaussian(1.0), vec![0.0; 2], 1.0);
        let mut last = f64::INFINITY;
        for gamma in [0.02, 0.04, 0.08, 0.16, 0.32] {
            let v = omega_mu_estimate(&spec, 16, gamma, 2000, 3, None).unwrap().value;
            assert!(v <= last, "gamma {gamma}: {v} > {last}");
            last = v;
        }
        // large enough gamma certifies r -> 0
        assert_eq!(last, 0.0);
    }

    #[test]
    fn sup_curve_ratio_is_non_increasing() {
        let spec = DgpSpec::semi_pareto_ar(3.0, vec![1.0, 2.0], NoiseSpec::gaussian(1.0), vec![0.0; 2], 1.0);
        let grid: Vec<f64> = (1..40).map(|i| 0.05 * i as f64).collect();
        let phi = rademacher_sup_curve(&spec, 16, &grid, 2000, 5).unwrap();
        let ratios: Vec<f64> = phi.iter().zip(&grid).map(|(p, r)| p / r).collect();
        assert!(ratios.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(phi.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn small_ball_limits_and_monotonicity() {
        let spec = DgpSpec::gaussian_ar(3, 0.5, NoiseSpec::gaussian(1.0), vec![0.0; 3], 1.0);
        let near_zero = small_ball_estimate(&spec, 1e-9, 4, 20_000, 1).unwrap();
        assert!(near_zero.value > 0.999);
        assert!(near_zero.upper_bound);
        let mut last = 1.0;
        for u in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let v = small_ball_estimate(&spec, u, 4, 20_000, 1).unwrap().value;
            assert!(v <= last);
            last = v;
        }
        assert!(last < 1e-3);
        assert!(small_ball_estimate(&spec, 0.0, 4, 10, 1).is_err());
    }

    #[test]
    fn gaussian_width_grows_then_saturates() {
        let spec = DgpSpec::gaussian_ar(3, 0.0, NoiseSpec::gaussian(1.0), vec![0.0; 3], 0.5);
        let widths: Vec<f64> = [0.1, 0.3, 0.6, 1.0, 2.0, 10.0, 100.0]
            .iter()
            .map(|&r| gaussian_width_estimate(&spec, r, 5000, 9).unwrap().value)
            .collect();
        assert!(widths.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        // the class has l1 radius 1 so its L2 diameter is at most 1; beyond it nothing changes
        assert_eq!(widths[5], widths[6]);
    }

    #[test]
    fn subweibull_bound_examples() {
        let c = BoundConstants::default();
        let e = std::f64::consts::E;
        assert!((theory_bound_subweibull(1.0, e, 1.0, 1.0, &c).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(theory_bound_subweibull(1.0, 4.0, 1.0, 5.0, &c).unwrap(), 0.0);
        let a = theory_bound_subweibull(1.0, 100.0, 0.5, 4.0, &c).unwrap();
        let b = theory_bound_subweibull(1.0, 100.0, 0.5, 16.0, &c).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pareto_bound_examples() {
        let v = theory_bound_pareto(1.0, 16.0, 4.0, 0.0, 1e4, 1.0, 1.0, 1.0).unwrap();
        assert!((v - 0.02).abs() < 1e-12);
        let a = theory_bound_pareto(1.0, 5.0, 3.0, 0.0, 1e3, 1.0, 0.5, 1.0).unwrap();
        let b = theory_bound_pareto(1.0, 5.0, 3.0, 0.0, 4e3, 1.0, 0.5, 1.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        let one = theory_bound_pareto(1.0, 1.0, 3.0, 0.1, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        assert!(theory_bound_pareto(1.0, 1.0, 2.0, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(theory_bound_pareto(1.0, 1.0, 3.0, 0.0, 1.0, 1.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn moment_constant_bounds_every_moment() {
        for eta in [0.5, 1.0, 2.0] {
            let k = sym_weibull_moment_constant(eta);
            assert!(k.is_finite() && k > 0.0, "eta {eta}: K = {k}");
            let w = SymWeibull::new(eta, 1.0);
            for p in [eta.min(1.0), 1.5, 2.0, 3.0, 7.0, 20.0] {
                assert!(w.abs_moment(p).powf(1.0 / p) <= k * p.powf(1.0 / eta) * (1.0 + 1e-9));
                assert!((w.lp_norm(p) / w.abs_moment(p).powf(1.0 / p) - 1.0).abs() < 1e-12);
            }
        }
    }
}
