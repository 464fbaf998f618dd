//! Flat `key=value` experiment configuration with dotted section prefixes.
//!
//! ```text
//! # Gaussian AR inputs, Gaussian noise
//! dgp.kind = gaussian_ar
//! dgp.d = 4
//! dgp.dependence = 0.5
//! dgp.theta_star = 0.5, -0.5, 0.25, 0
//! dgp.radius = 2
//! noise.kind = gaussian
//! noise.scale = 1
//! loss.kind = squared
//! experiment.n_grid = 256, 512, 1024
//! experiment.replications = 50
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected so a
//! typo never silently falls back to a default.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::complexity::BoundConstants;
use crate::dgp::{DgpKind, DgpSpec, NoiseKind, NoiseSpec, DEFAULT_BURN_IN};
use crate::erm::{FitOptions, LossKind, LossSpec};
use crate::{Error, Result};

/// Parameters of the concentration check (`conc-check`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConcConfig {
    /// `iid_pareto` or `process`.
    pub interaction: String,
    /// Tail exponent of the i.i.d. Pareto interaction.
    pub pareto_eta: f64,
    pub pareto_scale: f64,
    /// Parameter `theta != theta*` defining `f - f*` for process interactions.
    pub theta: Option<Vec<f64>>,
    pub n: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub n_paths: usize,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub c_prime: f64,
    pub sigma_slack: f64,
}

impl Default for ConcConfig {
    fn default() -> Self {
        ConcConfig {
            interaction: "iid_pareto".into(),
            pareto_eta: 3.0,
            pareto_scale: 1.0,
            theta: None,
            n: 1000,
            t_min: 2.0,
            t_max: 500.0,
            t_points: 20,
            n_paths: 100_000,
            d1: None,
            d2: None,
            c_prime: 1.0 / 3.0,
            sigma_slack: 3.0,
        }
    }
}

/// Monte-Carlo sizes for the `complexity` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityConfig {
    pub n_mc: usize,
    pub n_dir: usize,
    pub width_r: f64,
    pub constants: BoundConstants,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        ComplexityConfig {
            n_mc: 2000,
            n_dir: 16,
            width_r: 1.0,
            constants: BoundConstants::default(),
        }
    }
}

/// Optional acceptance window for `rates --check`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckConfig {
    pub slope_min: Option<f64>,
    pub slope_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dgp: DgpSpec,
    pub loss: LossSpec,
    pub fit: FitOptions,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub iota: f64,
    pub r_exponent: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub tau: f64,
    /// Beta-mixing rate constant `c` in `beta(b) <= exp(-c b^eta1)`.
    pub mixing_c: f64,
    /// Whether the input class satisfies L_p-L_2 norm equivalence.
    pub norm_equivalence: bool,
    pub conc: ConcConfig,
    pub complexity: ComplexityConfig,
    pub check: CheckConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        self.loss.validate()?;
        let fail = |field: &str, msg: String| Error::Config {
            line: 0,
            field: field.into(),
            msg,
        };
        if self.n_grid.is_empty() {
            return Err(fail("experiment.n_grid", "must not be empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) || self.n_grid[0] == 0 {
            return Err(fail(
                "experiment.n_grid",
                "must be strictly increasing and positive".into(),
            ));
        }
        if self.replications == 0 {
            return Err(fail("experiment.replications", "must be at least 1".into()));
        }
        if !(self.iota > 0.0 && self.iota < 0.25) {
            return Err(fail(
                "experiment.iota",
                format!("must lie in (0, 1/4), got {}", self.iota),
            ));
        }
        if !(self.r_exponent > 0.0 && self.r_exponent < 1.0) {
            return Err(fail(
                "experiment.r_exponent",
                format!("must lie in (0, 1), got {}", self.r_exponent),
            ));
        }
        if !(self.eta1 > 0.0 && self.eta2 > 0.0 && self.tau > 0.0 && self.mixing_c > 0.0) {
            return Err(fail("mixing", "eta1, eta2, tau and c must all be positive".into()));
        }
        Ok(())
    }

    pub fn with_loss(&self, loss: LossSpec) -> Self {
        ExperimentConfig { loss, ..self.clone() }
    }

    /// Upper limit `tau^2 Q / 8` on the level `tau_0` for a small-ball value `q`.
    pub fn tau0_limit(&self, q: f64) -> f64 {
        self.tau * self.tau * q / 8.0
    }

    /// Serializes back to the flat format; `parse(to_text())` is the identity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let d = &self.dgp;
        let _ = writeln!(s, "dgp.kind={}", d.kind.name());
        let _ = writeln!(s, "dgp.d={}", d.d);
        let _ = writeln!(s, "dgp.dependence={}", d.dependence);
        let _ = writeln!(s, "dgp.tail={}", d.tail);
        if !d.pareto_scales.is_empty() {
            let _ = writeln!(s, "dgp.pareto_scales={}", list(&d.pareto_scales));
        }
        let _ = writeln!(s, "dgp.theta_star={}", list(&d.theta_star));
        let _ = writeln!(s, "dgp.radius={}", d.radius);
        let _ = writeln!(s, "dgp.burn_in={}", d.burn_in);
        let _ = writeln!(s, "noise.kind={}", d.noise.kind.name());
        let _ = writeln!(s, "noise.scale={}", d.noise.scale);
        let _ = writeln!(s, "noise.tail={}", d.noise.tail);
        let _ = writeln!(s, "loss.kind={}", self.loss.kind.name());
        if self.loss.kind == LossKind::Huber {
            let _ = writeln!(s, "loss.huber_threshold={}", self.loss.huber_threshold);
        }
        let _ = writeln!(s, "fit.tol={}", self.fit.tol);
        let _ = writeln!(s, "fit.max_iter={}", self.fit.max_iter);
        let grid: Vec<String> = self.n_grid.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "experiment.n_grid={}", grid.join(","));
        let _ = writeln!(s, "experiment.replications={}", self.replications);
        let _ = writeln!(s, "experiment.master_seed={}", self.master_seed);
        let _ = writeln!(s, "experiment.iota={}", self.iota);
        let _ = writeln!(s, "experiment.r_exponent={}", self.r_exponent);
        let _ = writeln!(s, "experiment.norm_equivalence={}", self.norm_equivalence);
        let _ = writeln!(s, "mixing.eta1={}", self.eta1);
        let _ = writeln!(s, "mixing.eta2={}", self.eta2);
        let _ = writeln!(s, "mixing.c={}", self.mixing_c);
        let _ = writeln!(s, "smallball.tau={}", self.tau);
        let c = &self.conc;
        let _ = writeln!(s, "conc.interaction={}", c.interaction);
        let _ = writeln!(s, "conc.pareto_eta={}", c.pareto_eta);
        let _ = writeln!(s, "conc.pareto_scale={}", c.pareto_scale);
        if let Some(theta) = &c.theta {
            let _ = writeln!(s, "conc.theta={}", list(theta));
        }
        let _ = writeln!(s, "conc.n={}", c.n);
        let _ = writeln!(s, "conc.t_min={}", c.t_min);
        let _ = writeln!(s, "conc.t_max={}", c.t_max);
        let _ = writeln!(s, "conc.t_points={}", c.t_points);
        let _ = writeln!(s, "conc.n_paths={}", c.n_paths);
        if let Some(v) = c.d1 {
            let _ = writeln!(s, "conc.d1={v}");
        }
        if let Some(v) = c.d2 {
            let _ = writeln!(s, "conc.d2={v}");
        }
        let _ = writeln!(s, "conc.c_prime={}", c.c_prime);
        let _ = writeln!(s, "conc.sigma_slack={}", c.sigma_slack);
        let _ = writeln!(s, "complexity.n_mc={}", self.complexity.n_mc);
        let _ = writeln!(s, "complexity.n_dir={}", self.complexity.n_dir);
        let _ = writeln!(s, "complexity.width_r={}", self.complexity.width_r);
        let k = &self.complexity.constants;
        let _ = writeln!(s, "complexity.c1={}", k.c1);
        let _ = writeln!(s, "complexity.c3={}", k.c3);
        let _ = writeln!(s, "complexity.k1={}", k.k1);
        let _ = writeln!(s, "complexity.c9={}", k.c9);
        if let Some(v) = self.check.slope_min {
            let _ = writeln!(s, "check.slope_min={v}");
        }
        if let Some(v) = self.check.slope_max {
            let _ = writeln!(s, "check.slope_max={v}");
        }
        s
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    field: content.into(),
                    msg: "expected `key=value`".into(),
                });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config {
                    line,
                    field: String::new(),
                    msg: "empty key".into(),
                });
            }
            if let Some((first, _)) = map.insert(key.clone(), (line, v.trim().to_string())) {
                return Err(Error::Config {
                    line,
                    field: key,
                    msg: format!("duplicate key, first set on line {first}"),
                });
            }
        }
        Ok(Entries { map })
    }

    fn take_raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|_| Error::Config {
                line,
                field: key.into(),
                msg: format!("cannot parse `{v}`"),
            }),
        }
    }

    fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| Error::Config {
            line: 0,
            field: key.into(),
            msg: "required field is missing".into(),
        })
    }

    fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>().map_err(|_| Error::Config {
                        line,
                        field: key.into(),
                        msg: format!("cannot parse list element `{s}`"),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn take_enum<T>(&mut self, key: &str, parse: fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, v)) => parse(&v).map(Some).ok_or_else(|| Error::Config {
                line,
                field: key.into(),
                msg: format!("unknown value `{v}`"),
            }),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.0)
    }
}

/// Parses an experiment config. Diagnostics carry the offending line and key.
pub fn parse(text: &str) -> Result<ExperimentConfig> {
    let mut e = Entries::parse(text)?;

    let kind = e.take_enum("dgp.kind", DgpKind::parse)?.ok_or_else(|| Error::Config {
        line: 0,
        field: "dgp.kind".into(),
        msg: "required field is missing".into(),
    })?;
    let theta_line = e.line_of("dgp.theta_star");
    let theta_star: Vec<f64> = e.take_list("dgp.theta_star")?.ok_or_else(|| Error::Config {
        line: 0,
        field: "dgp.theta_star".into(),
        msg: "required field is missing".into(),
    })?;
    let pareto_scales: Vec<f64> = e.take_list("dgp.pareto_scales")?.unwrap_or_default();
    let d: usize = match e.take("dgp.d")? {
        Some(d) => d,
        None => theta_star.len(),
    };
    if theta_star.len() != d {
        return Err(Error::Config {
            line: theta_line,
            field: "dgp.theta_star".into(),
            msg: format!("has {} entries but dgp.d = {d}", theta_star.len()),
        });
    }
    let default_tail = match kind {
        DgpKind::SemiParetoAR => 3.0,
        _ => 2.0,
    };
    let noise_kind = e
        .take_enum("noise.kind", NoiseKind::parse)?
        .unwrap_or(NoiseKind::Gaussian);
    let noise = NoiseSpec {
        kind: noise_kind,
        scale: e.take_or("noise.scale", 1.0)?,
        tail: e.take_or("noise.tail", if noise_kind == NoiseKind::PolyTail { 3.0 } else { 2.0 })?,
    };
    let dgp = DgpSpec {
        kind,
        d,
        dependence: e.take_or("dgp.dependence", 0.0)?,
        tail: e.take_or("dgp.tail", default_tail)?,
        pareto_scales: if kind == DgpKind::SemiParetoAR && pareto_scales.is_empty() {
            vec![1.0; d]
        } else {
            pareto_scales
        },
        noise,
        theta_star,
        radius: e.require("dgp.radius")?,
        burn_in: e.take_or(
            "dgp.burn_in",
            if kind == DgpKind::SubWeibullAR {
                DEFAULT_BURN_IN
            } else {
                0
            },
        )?,
    };

    let loss_kind = e.take_enum("loss.kind", LossKind::parse)?.unwrap_or(LossKind::Squared);
    let loss = match loss_kind {
        LossKind::Squared => {
            let _ = e.take_raw("loss.huber_threshold");
            LossSpec::SQUARED
        }
        LossKind::Huber => {
            let default = 3.0 * dgp.noise.variance().sqrt();
            LossSpec::huber(e.take_or("loss.huber_threshold", default)?)
        }
    };
    let defaults = FitOptions::default();
    let fit = FitOptions {
        tol: e.take_or("fit.tol", defaults.tol)?,
        max_iter: e.take_or("fit.max_iter", defaults.max_iter)?,
    };

    let iota: f64 = e.take_or("experiment.iota", 0.05)?;
    let eta2_default = match (dgp.kind, dgp.noise.kind) {
        (DgpKind::SemiParetoAR, _) => dgp.tail,
        (_, NoiseKind::PolyTail) => dgp.noise.tail,
        _ => 3.0,
    };
    let conc_defaults = ConcConfig::default();
    let conc = ConcConfig {
        interaction: e.take_or("conc.interaction", conc_defaults.interaction)?,
        pareto_eta: e.take_or("conc.pareto_eta", conc_defaults.pareto_eta)?,
        pareto_scale: e.take_or("conc.pareto_scale", conc_defaults.pareto_scale)?,
        theta: e.take_list("conc.theta")?,
        n: e.take_or("conc.n", conc_defaults.n)?,
        t_min: e.take_or("conc.t_min", conc_defaults.t_min)?,
        t_max: e.take_or("conc.t_max", conc_defaults.t_max)?,
        t_points: e.take_or("conc.t_points", conc_defaults.t_points)?,
        n_paths: e.take_or("conc.n_paths", conc_defaults.n_paths)?,
        d1: e.take("conc.d1")?,
        d2: e.take("conc.d2")?,
        c_prime: e.take_or("conc.c_prime", conc_defaults.c_prime)?,
        sigma_slack: e.take_or("conc.sigma_slack", conc_defaults.sigma_slack)?,
    };
    if conc.interaction != "iid_pareto" && conc.interaction != "process" {
        return Err(Error::Config {
            line: 0,
            field: "conc.interaction".into(),
            msg: format!("expected `iid_pareto` or `process`, got `{}`", conc.interaction),
        });
    }
    let cx_defaults = ComplexityConfig::default();
    let complexity = ComplexityConfig {
        n_mc: e.take_or("complexity.n_mc", cx_defaults.n_mc)?,
        n_dir: e.take_or("complexity.n_dir", cx_defaults.n_dir)?,
        width_r: e.take_or("complexity.width_r", cx_defaults.width_r)?,
        constants: BoundConstants {
            c1: e.take_or("complexity.c1", cx_defaults.constants.c1)?,
            c3: e.take_or("complexity.c3", cx_defaults.constants.c3)?,
            k1: e.take_or("complexity.k1", cx_defaults.constants.k1)?,
            c9: e.take_or("complexity.c9", cx_defaults.constants.c9)?,
        },
    };

    let cfg = ExperimentConfig {
        loss,
        fit,
        n_grid: e
            .take_list("experiment.n_grid")?
            .unwrap_or_else(|| vec![256, 512, 1024, 2048]),
        replications: e.take_or("experiment.replications", 20)?,
        master_seed: e.take_or("experiment.master_seed", 0)?,
        iota,
        r_exponent: e.take_or("experiment.r_exponent", 1.0 - 2.0 * iota)?,
        norm_equivalence: e.take_or("experiment.norm_equivalence", dgp.kind == DgpKind::GaussianAR)?,
        eta1: e.take_or("mixing.eta1", 1.0)?,
        eta2: e.take_or("mixing.eta2", eta2_default)?,
        mixing_c: e.take_or("mixing.c", 1.0 / 3.0)?,
        tau: e.take_or("smallball.tau", 0.5)?,
        conc,
        complexity,
        check: CheckConfig {
            slope_min: e.take("check.slope_min")?,
            slope_max: e.take("check.slope_max")?,
        },
        dgp,
    };

    if let Some((key, (line, _))) = e.map.into_iter().next() {
        return Err(Error::Config {
            line,
            field: key,
            msg: "unknown key".into(),
        });
    }
    cfg.validate().map_err(|err| match err {
        Error::InvalidParameter { name, reason } => Error::Config {
            line: 0,
            field: name.into(),
            msg: reason,
        },
        other => other,
    })?;
    Ok(cfg)
}

pub fn load(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAUSS: &str = "\
# comment
dgp.kind = gaussian_ar
dgp.d = 4
dgp.dependence = 0.5
dgp.theta_star = 0.5, -0.5, 0.25, 0
dgp.radius = 2
noise.kind = gaussian
noise.scale = 1
loss.kind = squared
experiment.n_grid = 256, 512, 1024
experiment.replications = 5
experiment.master_seed = 42
";

    #[test]
    fn parses_and_round_trips() {
        let cfg = parse(GAUSS).unwrap();
        assert_eq!(cfg.dgp.kind, DgpKind::GaussianAR);
        assert_eq!(cfg.dgp.theta_star, vec![0.5, -0.5, 0.25, 0.0]);
        assert_eq!(cfg.n_grid, vec![256, 512, 1024]);
        assert_eq!(cfg.master_seed, 42);
        assert!((cfg.r_exponent - 0.9).abs() < 1e-15);
        assert!(cfg.norm_equivalence);
        let again = parse(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn derived_levels() {
        let mut cfg = parse(GAUSS).unwrap();
        cfg.tau = 0.5;
        assert!((cfg.tau0_limit(0.4) - 0.0125).abs() < 1e-15);
        let hu = cfg.with_loss(LossSpec::huber(2.0));
        assert_eq!(hu.loss.kind, LossKind::Huber);
        assert_eq!(hu.with_loss(LossSpec::SQUARED), cfg);
    }

    #[test]
    fn huber_threshold_defaults_to_three_noise_sd() {
        let text = GAUSS
            .replace("loss.kind = squared", "loss.kind = huber")
            .replace("noise.scale = 1", "noise.scale = 2");
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.loss.kind, LossKind::Huber);
        assert!((cfg.loss.huber_threshold - 6.0).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let text = GAUSS.replace("dgp.radius = 2", "dgp.radius = two");
        match parse(&text) {
            Err(Error::Config { line, field, .. }) => {
                assert_eq!(line, 6);
                assert_eq!(field, "dgp.radius");
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = format!("{GAUSS}dgp.radiu = 3\n");
        match parse(&text) {
            Err(Error::Config { line, field, msg }) => {
                assert_eq!((line, field.as_str(), msg.as_str()), (13, "dgp.radiu", "unknown key"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("dgp.kind gaussian_ar"),
            Err(Error::Config { line: 1, .. })
        ));
        let dup = format!("{GAUSS}dgp.d = 4\n");
        assert!(matches!(parse(&dup), Err(Error::Config { line: 13, .. })));
    }

    #[test]
    fn rejects_invalid_values() {
        let text = GAUSS.replace("256, 512, 1024", "512, 256");
        assert!(parse(&text).is_err());
        let text = GAUSS.replace("dgp.dependence = 0.5", "dgp.dependence = 1.5");
        assert!(matches!(parse(&text), Err(Error::Config { .. })));
        let text = GAUSS.replace("dgp.d = 4", "dgp.d = 3");
        assert!(matches!(parse(&text), Err(Error::Config { line: 5, .. })));
        let text = GAUSS.replace("gaussian_ar", "garch");
        assert!(matches!(parse(&text), Err(Error::Config { line: 2, .. })));
    }
}
