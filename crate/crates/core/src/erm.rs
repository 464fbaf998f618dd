//! Empirical risk minimization over the l1 ball `{<theta, .> : |theta|_1 <= R}`.
//!
//! The objective is `(1/n) sum_i loss(<theta, x_i> - y_i)`. It is minimized by
//! projected gradient descent with an Armijo-type backtracking step, so every
//! iterate is feasible.

use std::io::Write;

use crate::dgp::{dot, Sample};
use crate::error::invalid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Squared,
    Huber,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Huber => "huber",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "squared" => Some(LossKind::Squared),
            "huber" => Some(LossKind::Huber),
            _ => None,
        }
    }
}

/// Loss applied to the residual `f(x) - y`.
///
/// Squared loss is `t^2`. Huber loss is `t^2/2` for `|t| <= T` and
/// `T|t| - T^2/2` beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub huber_threshold: f64,
}

impl LossSpec {
    pub const SQUARED: LossSpec = LossSpec {
        kind: LossKind::Squared,
        huber_threshold: f64::INFINITY,
    };

    pub fn huber(threshold: f64) -> Self {
        LossSpec {
            kind: LossKind::Huber,
            huber_threshold: threshold,
        }
    }

    /// Huber loss with the threshold set to three noise standard deviations.
    pub fn huber_for_noise_sd(noise_sd: f64) -> Self {
        Self::huber(3.0 * noise_sd)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == LossKind::Huber && !(self.huber_threshold > 0.0 && self.huber_threshold.is_finite()) {
            return Err(invalid(
                "loss.huber_threshold",
                format!("must be a finite positive number, got {}", self.huber_threshold),
            ));
        }
        Ok(())
    }

    /// Upper bound on the second derivative.
    fn curvature(&self) -> f64 {
        match self.kind {
            LossKind::Squared => 2.0,
            LossKind::Huber => 1.0,
        }
    }

    /// `loss(t + delta) - loss(t)` computed without cancellation when both
    /// points fall on the same branch.
    fn increment(&self, t: f64, delta: f64) -> f64 {
        match self.kind {
            LossKind::Squared => delta * (2.0 * t + delta),
            LossKind::Huber => {
                let h = self.huber_threshold;
                let s = t + delta;
                if t.abs() <= h && s.abs() <= h {
                    delta * (t + 0.5 * delta)
                } else if t >= h && s >= h {
                    h * delta
                } else if t <= -h && s <= -h {
                    -h * delta
                } else {
                    loss_value(self, s) - loss_value(self, t)
                }
            }
        }
    }
}

pub fn loss_value(loss: &LossSpec, t: f64) -> f64 {
    match loss.kind {
        LossKind::Squared => t * t,
        LossKind::Huber => {
            let h = loss.huber_threshold;
            if t.abs() <= h {
                0.5 * t * t
            } else {
                h * t.abs() - 0.5 * h * h
            }
        }
    }
}

pub fn loss_grad(loss: &LossSpec, t: f64) -> f64 {
    match loss.kind {
        LossKind::Squared => 2.0 * t,
        LossKind::Huber => t.clamp(-loss.huber_threshold, loss.huber_threshold),
    }
}

/// Euclidean projection onto the l1 ball of radius `radius`.
///
/// Uses the sort-based soft-threshold: find the threshold `lambda` such that
/// `sum_i max(|v_i| - lambda, 0) = radius`. Points already in the closed ball
/// are returned unchanged.
pub fn project_l1(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0) {
        return Err(invalid("radius", format!("must be > 0, got {radius}")));
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return Ok(v.to_vec());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut lambda = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if m > candidate {
            lambda = candidate;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|&x| x.signum() * (x.abs() - lambda).max(0.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    /// `max_iter` reached with the optimality gap still above tolerance.
    NonConvergence,
    /// The line search could not make further progress in floating point.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: Vec<f64>,
    pub iterations: usize,
    /// Norm of the unit-step gradient mapping `theta - P(theta - grad)`.
    pub final_gap: f64,
    pub objective: f64,
    pub status: FitStatus,
    /// Objective after each accepted step, starting at the initial point.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn converged(&self) -> bool {
        self.status != FitStatus::NonConvergence
    }

    /// `seed,n,loss,R,objective,iterations,final_gap,theta_1..theta_d`.
    pub fn csv_header(d: usize) -> String {
        let mut h = String::from("seed,n,loss,R,objective,iterations,final_gap");
        for j in 1..=d {
            h.push_str(&format!(",theta_{j}"));
        }
        h
    }

    pub fn write_csv_row<W: Write>(&self, mut w: W, seed: u64, n: usize, loss: &LossSpec, radius: f64) -> Result<()> {
        let mut line = format!(
            "{seed},{n},{},{radius},{},{},{}",
            loss.kind.name(),
            self.objective,
            self.iterations,
            self.final_gap
        );
        for v in &self.theta_hat {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
        Ok(())
    }
}

/// Empirical risk `(1/n) sum loss(<theta, x_i> - y_i)`.
pub fn empirical_risk(sample: &Sample, loss: &LossSpec, theta: &[f64]) -> f64 {
    let total: f64 = sample
        .rows()
        .zip(&sample.y)
        .map(|(x, y)| loss_value(loss, dot(x, theta) - y))
        .sum();
    total / sample.n as f64
}

struct Problem<'a> {
    sample: &'a Sample,
    loss: LossSpec,
    radius: f64,
}

impl Problem<'_> {
    fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        self.sample
            .rows()
            .zip(&self.sample.y)
            .map(|(x, y)| dot(x, theta) - y)
            .collect()
    }

    fn gradient(&self, residuals: &[f64]) -> Vec<f64> {
        let d = self.sample.d();
        let mut g = vec![0.0; d];
        for (x, &r) in self.sample.rows().zip(residuals) {
            let lg = loss_grad(&self.loss, r);
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += lg * xj;
            }
        }
        let inv_n = 1.0 / self.sample.n as f64;
        g.iter_mut().for_each(|v| *v *= inv_n);
        g
    }

    /// Objective change from moving the residuals by `X step`.
    fn increment(&self, residuals: &[f64], step: &[f64]) -> f64 {
        let total: f64 = self
            .sample
            .rows()
            .zip(residuals)
            .map(|(x, &r)| self.loss.increment(r, dot(x, step)))
            .sum();
        total / self.sample.n as f64
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        project_l1(v, self.radius).expect("radius validated")
    }

    fn gap(&self, theta: &[f64], grad: &[f64]) -> f64 {
        let moved: Vec<f64> = theta.iter().zip(grad).map(|(t, g)| t - g).collect();
        let p = self.project(&moved);
        theta.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// Minimizes the empirical risk over the l1 ball of radius `radius`.
///
/// Returns `Err` only for invalid inputs. Hitting `max_iter` is reported
/// through [`FitStatus::NonConvergence`] with the last iterate.
pub fn erm_fit(sample: &Sample, loss: &LossSpec, radius: f64, opts: &FitOptions) -> Result<FitResult> {
    loss.validate()?;
    if sample.n == 0 || sample.y.len() != sample.n || sample.x.len() != sample.n * sample.d() {
        return Err(Error::DegenerateInput("sample is empty or malformed".into()));
    }
    if !(radius > 0.0) {
        return Err(invalid("radius", format!("must be > 0, got {radius}")));
    }
    let problem = Problem {
        sample,
        loss: *loss,
        radius,
    };
    let d = sample.d();

    // Lipschitz bound of the gradient: max curvature times mean squared row norm.
    let mean_sq: f64 = sample.x.iter().map(|v| v * v).sum::<f64>() / sample.n as f64;
    let lipschitz = (loss.curvature() * mean_sq).max(f64::MIN_POSITIVE);
    let mut step = 1.0 / lipschitz;
    let min_step = step * 1e-14;

    let mut theta = vec![0.0; d];
    let mut residuals = problem.residuals(&theta);
    let mut objective = empirical_risk(sample, loss, &theta);
    let mut trace = vec![objective];
    let mut grad = problem.gradient(&residuals);
    let mut gap = problem.gap(&theta, &grad);
    let mut iterations = 0;
    let mut status = FitStatus::Converged;

    while gap > opts.tol {
        if iterations >= opts.max_iter {
            status = FitStatus::NonConvergence;
            break;
        }
        // try a larger step first, then backtrack
        step *= 2.0;
        let accepted = loop {
            let target: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let candidate = problem.project(&target);
            let delta: Vec<f64> = candidate.iter().zip(&theta).map(|(c, t)| c - t).collect();
            let delta_sq: f64 = delta.iter().map(|v| v * v).sum();
            if delta_sq == 0.0 {
                break None;
            }
            let change = problem.increment(&residuals, &delta);
            let model = dot(&grad, &delta) + delta_sq / (2.0 * step);
            if change <= model && change <= 0.0 {
                break Some((candidate, delta, change));
            }
            step *= 0.5;
            if step < min_step {
                break None;
            }
        };
        let Some((candidate, delta, change)) = accepted else {
            status = FitStatus::Stalled;
            break;
        };
        for (x, r) in sample.rows().zip(residuals.iter_mut()) {
            *r += dot(x, &delta);
        }
        theta = candidate;
        objective += change;
        trace.push(objective);
        grad = problem.gradient(&residuals);
        gap = problem.gap(&theta, &grad);
        iterations += 1;
    }
    Ok(FitResult {
        objective: empirical_risk(sample, loss, &theta),
        theta_hat: theta,
        iterations,
        final_gap: gap,
        status,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{DgpSpec, NoiseSpec};

    fn sample_from(xs: Vec<Vec<f64>>, y: Vec<f64>) -> Sample {
        let d = xs[0].len();
        let spec = DgpSpec::gaussian_ar(d, 0.0, NoiseSpec::gaussian(1.0), vec![0.0; d], 1.0);
        Sample {
            n: y.len(),
            x: xs.concat(),
            y,
            spec,
            seed: 0,
        }
    }

    #[test]
    fn loss_values() {
        let h = LossSpec::huber(1.0);
        assert_eq!(loss_value(&h, 0.5), 0.125);
        assert_eq!(loss_value(&h, 3.0), 2.5);
        assert_eq!(loss_value(&h, -3.0), 2.5);
        assert_eq!(loss_value(&LossSpec::SQUARED, -2.0), 4.0);
    }

    #[test]
    fn loss_grads() {
        let h = LossSpec::huber(1.0);
        assert_eq!(loss_grad(&h, 0.5), 0.5);
        assert_eq!(loss_grad(&h, -3.0), -1.0);
        assert_eq!(loss_grad(&LossSpec::SQUARED, 1.5), 3.0);
        for t in [-1e6, -1.0, 0.0, 2.0, 1e9] {
            assert!(loss_grad(&h, t).abs() <= 1.0);
        }
    }

    #[test]
    fn huber_is_c1_at_threshold() {
        let h = LossSpec::huber(2.0);
        let eps = 1e-9;
        assert!((loss_value(&h, 2.0 - eps) - loss_value(&h, 2.0 + eps)).abs() < 1e-8);
        assert!((loss_grad(&h, 2.0 - eps) - loss_grad(&h, 2.0 + eps)).abs() < 1e-8);
    }

    #[test]
    fn increment_matches_difference() {
        let h = LossSpec::huber(1.0);
        for &(t, dlt) in &[(0.2, 0.3), (2.0, 0.5), (-2.0, -0.5), (0.5, 2.0), (-3.0, 5.0)] {
            for loss in [h, LossSpec::SQUARED] {
                let direct = loss_value(&loss, t + dlt) - loss_value(&loss, t);
                assert!((loss.increment(t, dlt) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_l1(&[3.0, 0.0], 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_l1(&[0.3, -0.2], 1.0).unwrap(), vec![0.3, -0.2]);
        assert_eq!(project_l1(&[2.0, 1.0], 1.0).unwrap(), vec![1.0, 0.0]);
        // boundary point is returned as is
        assert_eq!(project_l1(&[0.5, -0.5], 1.0).unwrap(), vec![0.5, -0.5]);
        assert!(project_l1(&[1.0], 0.0).is_err());
        assert!(project_l1(&[1.0], -1.0).is_err());
    }

    #[test]
    fn projection_water_filling_matches_grid() {
        // brute force over a fine grid of the 2-D ball
        let v = [2.0, 1.0];
        let steps = 2000;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for i in 0..=steps {
            let a = -1.0 + 2.0 * i as f64 / steps as f64;
            for sign in [-1.0, 1.0] {
                let b = sign * (1.0 - a.abs());
                let dist = (a - v[0]).powi(2) + (b - v[1]).powi(2);
                if dist < best.0 {
                    best = (dist, [a, b]);
                }
            }
        }
        let p = project_l1(&v, 1.0).unwrap();
        assert!((p[0] - best.1[0]).abs() < 2e-3 && (p[1] - best.1[1]).abs() < 2e-3);
    }

    #[test]
    fn exact_interpolation_in_one_dimension() {
        let s = sample_from(vec![vec![1.0], vec![2.0]], vec![1.0, 2.0]);
        let fit = erm_fit(&s, &LossSpec::SQUARED, 10.0, &FitOptions::default()).unwrap();
        assert!((fit.theta_hat[0] - 1.0).abs() < 1e-8, "{:?}", fit);
        assert_eq!(fit.status, FitStatus::Converged);
    }

    #[test]
    fn huber_matches_squared_on_quadratic_branch() {
        let xs = vec![vec![1.0, 0.2], vec![0.3, 1.0], vec![-0.5, 0.7], vec![0.9, -0.4]];
        let theta = [0.4, -0.3];
        let y: Vec<f64> = xs.iter().map(|x| dot(x, &theta)).collect();
        let s = sample_from(xs, y);
        let opts = FitOptions::default();
        let sq = erm_fit(&s, &LossSpec::SQUARED, 5.0, &opts).unwrap();
        let hu = erm_fit(&s, &LossSpec::huber(10.0), 5.0, &opts).unwrap();
        for (a, b) in sq.theta_hat.iter().zip(&hu.theta_hat) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn constrained_solution_is_on_the_boundary() {
        let xs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let s = sample_from(xs, vec![3.0, 1.0]);
        let fit = erm_fit(&s, &LossSpec::SQUARED, 1.0, &FitOptions::default()).unwrap();
        let l1: f64 = fit.theta_hat.iter().map(|v| v.abs()).sum();
        assert!((l1 - 1.0).abs() < 1e-9);
        // KKT: minimizer of (t1-3)^2 + (t2-1)^2 on the ball is (1, 0)
        assert!((fit.theta_hat[0] - 1.0).abs() < 1e-7 && fit.theta_hat[1].abs() < 1e-7);
    }

    #[test]
    fn trace_is_monotone() {
        let xs: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos()])
            .collect();
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 1.3).sin() * 3.0).collect();
        let s = sample_from(xs, y);
        for loss in [LossSpec::SQUARED, LossSpec::huber(0.5)] {
            let fit = erm_fit(&s, &loss, 0.7, &FitOptions::default()).unwrap();
            assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
            assert!(fit.final_gap >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = sample_from(vec![vec![1.0]], vec![1.0]);
        assert!(erm_fit(&s, &LossSpec::SQUARED, 0.0, &FitOptions::default()).is_err());
        assert!(erm_fit(&s, &LossSpec::huber(0.0), 1.0, &FitOptions::default()).is_err());
    }

    #[test]
    fn max_iter_is_reported() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, 1.0 + 1e-3 * i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let s = sample_from(xs, y);
        let fit = erm_fit(
            &s,
            &LossSpec::SQUARED,
            100.0,
            &FitOptions {
                tol: 1e-14,
                max_iter: 3,
            },
        )
        .unwrap();
        assert_eq!(fit.status, FitStatus::NonConvergence);
        assert_eq!(fit.iterations, 3);
    }
}
