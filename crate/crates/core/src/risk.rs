//! Stationary covariance of the input process and the L2(pi) error
//! `|f_hat - f*|_{L2} = sqrt(sum_j Sigma_jj (theta_hat_j - theta*_j)^2)` for the
//! linear class. All supported processes have independent coordinates, so
//! the covariance is diagonal.

use crate::dgp::{self, DgpKind, DgpSpec};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovSource {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryCov {
    pub diag: Vec<f64>,
    pub source: CovSource,
    pub mc_n: usize,
    /// Per-coordinate standard errors of the MC variances (empty when analytic).
    pub std_error: Vec<f64>,
}

impl StationaryCov {
    pub fn identity(d: usize) -> Self {
        StationaryCov {
            diag: vec![1.0; d],
            source: CovSource::Analytic,
            mc_n: 0,
            std_error: Vec::new(),
        }
    }

    pub fn sd(&self) -> Vec<f64> {
        self.diag.iter().map(|v| v.sqrt()).collect()
    }
}

/// Closed-form stationary variances.
pub fn analytic_cov(spec: &DgpSpec) -> Result<StationaryCov> {
    spec.validate()?;
    let diag = match spec.kind {
        DgpKind::GaussianAR | DgpKind::SubWeibullAR => {
            let v = spec.innovation_variance() / (1.0 - spec.dependence * spec.dependence);
            vec![v; spec.d]
        }
        DgpKind::SemiParetoAR => spec
            .pareto_scales
            .iter()
            .map(|&s| dgp::second_moment_sym_pareto(spec.tail, s))
            .collect::<Result<_>>()
            .map_err(|_| Error::CovarianceUnavailable)?,
    };
    Ok(StationaryCov {
        diag,
        source: CovSource::Analytic,
        mc_n: 0,
        std_error: Vec::new(),
    })
}

/// Monte-Carlo second moments from `mc_n` independent stationary draws.
pub fn monte_carlo_cov(spec: &DgpSpec, mc_n: usize, seed: u64) -> Result<StationaryCov> {
    spec.validate()?;
    if mc_n < 2 {
        return Err(crate::error::invalid("mc_n", "need at least two draws"));
    }
    let d = spec.d;
    let mut rng = rng::stream(seed, &[0x0063_6f76]);
    let mut buf = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for _ in 0..mc_n {
        dgp::draw_stationary(spec, &mut rng, &mut buf);
        for j in 0..d {
            let s = buf[j] * buf[j];
            sum[j] += s;
            sum_sq[j] += s * s;
        }
    }
    let n = mc_n as f64;
    let diag: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_error = sum_sq
        .iter()
        .zip(&diag)
        .map(|(sq, m)| ((sq / n - m * m).max(0.0) / (n - 1.0)).sqrt())
        .collect();
    Ok(StationaryCov {
        diag,
        source: CovSource::MonteCarlo,
        mc_n,
        std_error,
    })
}

/// Analytic covariance when `mc_n == 0`; otherwise the MC estimate, which is
/// used to cross-validate the closed forms.
pub fn stationary_cov(spec: &DgpSpec, mc_n: usize, seed: u64) -> Result<StationaryCov> {
    if mc_n == 0 {
        analytic_cov(spec)
    } else {
        monte_carlo_cov(spec, mc_n, seed)
    }
}

pub fn l2_error(theta_hat: &[f64], theta_star: &[f64], cov: &StationaryCov) -> Result<f64> {
    if theta_hat.len() != theta_star.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_star.len(),
            got: theta_hat.len(),
        });
    }
    if cov.diag.len() != theta_star.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_star.len(),
            got: cov.diag.len(),
        });
    }
    Ok(theta_hat
        .iter()
        .zip(theta_star)
        .zip(&cov.diag)
        .map(|((a, b), s)| s * (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::NoiseSpec;
    use proptest::prelude::*;

    fn diag(v: Vec<f64>) -> StationaryCov {
        StationaryCov {
            diag: v,
            source: CovSource::Analytic,
            mc_n: 0,
            std_error: Vec::new(),
        }
    }

    #[test]
    fn gaussian_ar_analytic() {
        let spec = DgpSpec::gaussian_ar(3, 0.5, NoiseSpec::gaussian(1.0), vec![0.0; 3], 1.0);
        let cov = analytic_cov(&spec).unwrap();
        for v in cov.diag {
            assert!((v - 4.0 / 3.0).abs() < 1e-15);
        }
        let spec = DgpSpec::gaussian_ar(1, 0.0, NoiseSpec::gaussian(1.0), vec![0.0], 1.0);
        assert_eq!(analytic_cov(&spec).unwrap().diag, vec![1.0]);
    }

    #[test]
    fn semi_pareto_analytic_matches_mc() {
        let spec = DgpSpec::semi_pareto_ar(3.0, vec![1.0], NoiseSpec::gaussian(1.0), vec![0.0], 1.0);
        let a = analytic_cov(&spec).unwrap();
        assert!((a.diag[0] - 2.418_399_152_312_290_5).abs() < 1e-12);
        let m = stationary_cov(&spec, 1_000_000, 4).unwrap();
        assert_eq!(m.source, CovSource::MonteCarlo);
        assert!((m.diag[0] / a.diag[0] - 1.0).abs() < 0.02, "{:?}", m.diag);
    }

    #[test]
    fn l2_error_examples() {
        assert_eq!(l2_error(&[1.0, 2.0], &[1.0, 2.0], &diag(vec![1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(l2_error(&[3.0, 4.0], &[0.0, 0.0], &diag(vec![1.0, 1.0])).unwrap(), 5.0);
        let e = l2_error(&[1.0, 2.0], &[0.0, 0.0], &diag(vec![4.0, 1.0])).unwrap();
        assert!((e - 8f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            l2_error(&[1.0], &[1.0, 2.0], &diag(vec![1.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn l2_error_is_a_norm(
            a in prop::collection::vec(-5.0f64..5.0, 3),
            b in prop::collection::vec(-5.0f64..5.0, 3),
            c in prop::collection::vec(-5.0f64..5.0, 3),
            s in prop::collection::vec(0.1f64..4.0, 3),
            k in -3.0f64..3.0,
        ) {
            let cov = diag(s);
            let zero = [0.0; 3];
            let n = |v: &[f64]| l2_error(v, &zero, &cov).unwrap();
            let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            prop_assert!((l2_error(&a, &b, &cov).unwrap() - n(&ab)).abs() < 1e-12);
            prop_assert!(n(&a) >= 0.0);
            let ka: Vec<f64> = a.iter().map(|x| k * x).collect();
            prop_assert!((n(&ka) - k.abs() * n(&a)).abs() < 1e-9);
            let ac = l2_error(&a, &c, &cov).unwrap();
            let ab_ = l2_error(&a, &b, &cov).unwrap();
            let bc = l2_error(&b, &c, &cov).unwrap();
            prop_assert!(ac <= ab_ + bc + 1e-12);
        }
    }
}
