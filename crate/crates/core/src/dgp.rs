//! Stationary, exponentially beta-mixing data-generating processes.
//!
//! Three input processes are supported, all with a diagonal transition so that
//! coordinates evolve independently:
//!
//! - `SubWeibullAR`: `X_t = a X_{t-1} + delta_t` with symmetrized Weibull
//!   innovations of unit variance, started at zero and burnt in.
//! - `GaussianAR`: the same recursion with standard normal innovations, started
//!   exactly at the stationary law `N(0, 1/(1-a^2) I)`.
//! - `SemiParetoAR`: two independent semi-Pareto AR(1) trails per coordinate,
//!   mixed by a shared fair coin per time step into a symmetric Pareto marginal.
//!
//! Responses are linear, `Y_t = <theta*, X_t> + xi_t`, with i.i.d. noise that is
//! independent of the inputs.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::invalid;
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DgpKind {
    SubWeibullAR,
    SemiParetoAR,
    GaussianAR,
}

impl DgpKind {
    pub fn name(self) -> &'static str {
        match self {
            DgpKind::SubWeibullAR => "sub_weibull_ar",
            DgpKind::SemiParetoAR => "semi_pareto_ar",
            DgpKind::GaussianAR => "gaussian_ar",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sub_weibull_ar" => Some(DgpKind::SubWeibullAR),
            "semi_pareto_ar" => Some(DgpKind::SemiParetoAR),
            "gaussian_ar" => Some(DgpKind::GaussianAR),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Gaussian,
    SubWeibull,
    PolyTail,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::SubWeibull => "sub_weibull",
            NoiseKind::PolyTail => "poly_tail",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(NoiseKind::Gaussian),
            "sub_weibull" => Some(NoiseKind::SubWeibull),
            "poly_tail" => Some(NoiseKind::PolyTail),
            _ => None,
        }
    }
}

/// Additive response noise.
///
/// `scale` is the standard deviation for `Gaussian` and `SubWeibull`, and the
/// unit of the threshold for `PolyTail`, whose law is
/// `P(|xi| >= t) = 1 / (1 + (t/scale)^tail)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
    pub tail: f64,
}

impl NoiseSpec {
    pub fn gaussian(scale: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Gaussian,
            scale,
            tail: 2.0,
        }
    }

    pub fn sub_weibull(scale: f64, eta: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::SubWeibull,
            scale,
            tail: eta,
        }
    }

    pub fn poly_tail(scale: f64, eta4: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::PolyTail,
            scale,
            tail: eta4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(invalid("noise.scale", format!("must be > 0, got {}", self.scale)));
        }
        match self.kind {
            NoiseKind::Gaussian => Ok(()),
            NoiseKind::SubWeibull if self.tail > 0.0 => Ok(()),
            NoiseKind::SubWeibull => Err(invalid("noise.tail", "sub-Weibull shape must be > 0")),
            NoiseKind::PolyTail if self.tail > 2.0 => Ok(()),
            NoiseKind::PolyTail => Err(invalid(
                "noise.tail",
                format!("polynomial tail exponent must exceed 2, got {}", self.tail),
            )),
        }
    }

    /// Noise variance; finite for every valid spec.
    pub fn variance(&self) -> f64 {
        match self.kind {
            NoiseKind::Gaussian | NoiseKind::SubWeibull => self.scale * self.scale,
            NoiseKind::PolyTail => second_moment_sym_pareto(self.tail, 1.0 / self.scale).expect("validated tail > 2"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => self.scale * rng.sample::<f64, _>(StandardNormal),
            NoiseKind::SubWeibull => SymWeibull::new(self.tail, self.scale).sample(rng),
            NoiseKind::PolyTail => SymPareto::new(self.tail, 1.0 / self.scale).sample(rng),
        }
    }
}

/// Full description of a stationary input/response process.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub d: usize,
    /// Diagonal AR coefficient `a`, so the transition matrix is `a I`.
    pub dependence: f64,
    /// Innovation shape (sub-Weibull) or Pareto tail exponent; unused for the
    /// Gaussian process.
    pub tail: f64,
    /// Per-coordinate Pareto scale parameters, semi-Pareto process only.
    pub pareto_scales: Vec<f64>,
    pub noise: NoiseSpec,
    pub theta_star: Vec<f64>,
    pub radius: f64,
    pub burn_in: usize,
}

pub const DEFAULT_BURN_IN: usize = 1000;

impl DgpSpec {
    pub fn gaussian_ar(d: usize, dependence: f64, noise: NoiseSpec, theta_star: Vec<f64>, radius: f64) -> Self {
        DgpSpec {
            kind: DgpKind::GaussianAR,
            d,
            dependence,
            tail: 2.0,
            pareto_scales: Vec::new(),
            noise,
            theta_star,
            radius,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn sub_weibull_ar(
        d: usize,
        dependence: f64,
        eta: f64,
        noise: NoiseSpec,
        theta_star: Vec<f64>,
        radius: f64,
    ) -> Self {
        DgpSpec {
            kind: DgpKind::SubWeibullAR,
            d,
            dependence,
            tail: eta,
            pareto_scales: Vec::new(),
            noise,
            theta_star,
            radius,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn semi_pareto_ar(
        eta3: f64,
        pareto_scales: Vec<f64>,
        noise: NoiseSpec,
        theta_star: Vec<f64>,
        radius: f64,
    ) -> Self {
        DgpSpec {
            kind: DgpKind::SemiParetoAR,
            d: pareto_scales.len(),
            dependence: 0.0,
            tail: eta3,
            pareto_scales,
            noise,
            theta_star,
            radius,
            burn_in: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("dgp.d", "dimension must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dependence) {
            return Err(invalid(
                "dgp.dependence",
                format!("must lie in [0, 1), got {}", self.dependence),
            ));
        }
        if !(self.tail > 0.0) {
            return Err(invalid("dgp.tail", format!("must be > 0, got {}", self.tail)));
        }
        if self.theta_star.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: self.theta_star.len(),
            });
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(invalid("dgp.radius", format!("must be >= 0, got {}", self.radius)));
        }
        let l1: f64 = self.theta_star.iter().map(|v| v.abs()).sum();
        if l1 > self.radius * (1.0 + 1e-12) {
            return Err(invalid(
                "dgp.theta_star",
                format!("l1 norm {l1} exceeds radius {}", self.radius),
            ));
        }
        if self.kind == DgpKind::SemiParetoAR {
            if self.pareto_scales.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: self.pareto_scales.len(),
                });
            }
            if let Some(s) = self.pareto_scales.iter().find(|s| !(**s > 0.0)) {
                return Err(invalid(
                    "dgp.pareto_scales",
                    format!("every scale must be > 0, got {s}"),
                ));
            }
            if !(self.tail > 2.0) {
                return Err(invalid(
                    "dgp.tail",
                    format!("semi-Pareto tail exponent must exceed 2, got {}", self.tail),
                ));
            }
        }
        self.noise.validate()
    }

    /// Innovation variance of the AR recursions (unit by construction).
    pub fn innovation_variance(&self) -> f64 {
        1.0
    }

    /// Number of MA(infinity) terms needed for `a^k` to fall below double
    /// precision, capped by `burn_in` (and at least one term).
    fn ma_terms(&self) -> usize {
        let a = self.dependence;
        if a == 0.0 {
            return 1;
        }
        let needed = (1e-17f64.ln() / a.ln()).ceil() as usize + 1;
        needed.min(self.burn_in.max(1)).max(1)
    }
}

/// Draws a positive Pareto variate by inverting the survival function
/// `P(delta > t) = 1 / (1 + (scale t)^eta3)`.
pub fn sample_pareto_plus(u: f64, eta3: f64, scale: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidUniform(u));
    }
    if !(eta3 > 0.0) {
        return Err(invalid("eta3", format!("must be > 0, got {eta3}")));
    }
    if !(scale > 0.0) {
        return Err(invalid("scale", format!("must be > 0, got {scale}")));
    }
    Ok((1.0 / u - 1.0).powf(1.0 / eta3) / scale)
}

/// Positive Pareto law `L_+(eta, scale)`.
#[derive(Debug, Clone, Copy)]
pub struct ParetoPlus {
    eta: f64,
    scale: f64,
}

impl ParetoPlus {
    pub fn new(eta: f64, scale: f64) -> Self {
        assert!(eta > 0.0 && scale > 0.0, "Pareto parameters must be positive");
        ParetoPlus { eta, scale }
    }

    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            1.0 / (1.0 + (self.scale * t).powf(self.eta))
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }
}

impl Distribution<f64> for ParetoPlus {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        (1.0 / u - 1.0).powf(1.0 / self.eta) / self.scale
    }
}

/// Sign-symmetrized Pareto: `P(|X| > t) = 1 / (1 + (scale t)^eta)`.
#[derive(Debug, Clone, Copy)]
pub struct SymPareto(ParetoPlus);

impl SymPareto {
    pub fn new(eta: f64, scale: f64) -> Self {
        SymPareto(ParetoPlus::new(eta, scale))
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t >= 0.0 {
            1.0 - 0.5 * self.0.survival(t)
        } else {
            0.5 * self.0.survival(-t)
        }
    }
}

impl Distribution<f64> for SymPareto {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = self.0.sample(rng);
        if rng.random::<bool>() {
            v
        } else {
            -v
        }
    }
}

/// `E[X^2]` of the symmetric Pareto law with survival `1/(1+(scale t)^eta3)`.
pub fn second_moment_sym_pareto(eta3: f64, scale: f64) -> Result<f64> {
    if !(eta3 > 2.0) {
        return Err(invalid(
            "eta3",
            format!("second moment diverges for tail exponent {eta3} <= 2"),
        ));
    }
    if !(scale > 0.0) {
        return Err(invalid("scale", format!("must be > 0, got {scale}")));
    }
    Ok((2.0 / (scale * scale)) * (PI / eta3) / (2.0 * PI / eta3).sin())
}

/// Symmetric variable whose modulus is Weibull with shape `eta`, rescaled to a
/// target standard deviation.
///
/// The tail is exactly `P(|W| > t) = exp(-(t/k)^eta)` where `k` is
/// [`SymWeibull::weibull_scale`], so `W` is sub-Weibull of order `eta` with
/// constant `k`.
#[derive(Debug, Clone, Copy)]
pub struct SymWeibull {
    shape: f64,
    scale: f64,
}

impl SymWeibull {
    pub fn new(shape: f64, target_sd: f64) -> Self {
        assert!(shape > 0.0 && target_sd > 0.0, "Weibull parameters must be positive");
        let scale = target_sd / gamma(1.0 + 2.0 / shape).sqrt();
        SymWeibull { shape, scale }
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn weibull_scale(&self) -> f64 {
        self.scale
    }

    pub fn survival_abs(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            (-(t / self.scale).powf(self.shape)).exp()
        }
    }

    /// `E|W|^p = k^p Gamma(1 + p/eta)`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        self.scale.powf(p) * gamma(1.0 + p / self.shape)
    }

    /// `(E|W|^p)^{1/p}`, computed in log space so large `p` does not overflow.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.scale * (ln_gamma(1.0 + p / self.shape) / p).exp()
    }
}

impl Distribution<f64> for SymWeibull {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        let v = self.scale * (-u.ln()).powf(1.0 / self.shape);
        if rng.random::<bool>() {
            v
        } else {
            -v
        }
    }
}

pub fn sample_sym_weibull<R: Rng + ?Sized>(eta: f64, target_sd: f64, rng: &mut R) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(invalid("eta", format!("must be > 0, got {eta}")));
    }
    if !(target_sd > 0.0) {
        return Err(invalid("target_sd", format!("must be > 0, got {target_sd}")));
    }
    Ok(SymWeibull::new(eta, target_sd).sample(rng))
}

/// `n` observations from a [`DgpSpec`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub spec: DgpSpec,
    pub seed: u64,
    pub n: usize,
}

impl Sample {
    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.spec.d;
        &self.x[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.spec.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Writes `# schema=1`, `# seed=<seed>`, the header `t,x1..xd,y` and one
    /// row per observation. Floats use the shortest round-trip representation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=1")?;
        writeln!(w, "# seed={}", self.seed)?;
        let mut header = String::from("t");
        for j in 1..=self.d() {
            header.push_str(&format!(",x{j}"));
        }
        header.push_str(",y");
        writeln!(w, "{header}")?;
        for (t, (row, y)) in self.rows().zip(&self.y).enumerate() {
            let mut line = t.to_string();
            for v in row {
                line.push(',');
                line.push_str(&v.to_string());
            }
            line.push(',');
            line.push_str(&y.to_string());
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads a CSV written by [`Sample::write_csv`]. The column count must
    /// match `spec.d`.
    pub fn read_csv<R: BufRead>(r: R, spec: DgpSpec) -> Result<Sample> {
        let d = spec.d;
        let mut seed = 0u64;
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut saw_header = false;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("seed=") {
                    seed = v.trim().parse().map_err(|_| Error::Csv {
                        line: lineno,
                        msg: format!("bad seed `{v}`"),
                    })?;
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if !saw_header {
                if fields.len() != d + 2 || fields[0] != "t" || fields[d + 1] != "y" {
                    return Err(Error::Csv {
                        line: lineno,
                        msg: format!("expected header t,x1..x{d},y"),
                    });
                }
                saw_header = true;
                continue;
            }
            if fields.len() != d + 2 {
                return Err(Error::Csv {
                    line: lineno,
                    msg: format!("expected {} fields, found {}", d + 2, fields.len()),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|_| Error::Csv {
                    line: lineno,
                    msg: format!("not a number: `{s}`"),
                })
            };
            for f in &fields[1..=d] {
                x.push(parse(f)?);
            }
            y.push(parse(fields[d + 1])?);
        }
        if !saw_header {
            return Err(Error::Csv {
                line: 0,
                msg: "missing header".into(),
            });
        }
        let n = y.len();
        Ok(Sample { x, y, spec, seed, n })
    }
}

fn pareto_laws(spec: &DgpSpec) -> Vec<ParetoPlus> {
    spec.pareto_scales
        .iter()
        .map(|&s| ParetoPlus::new(spec.tail, s))
        .collect()
}

/// Generates `n` consecutive observations. The output is a pure function of
/// `(spec, n, seed)`: inputs and noise use separate sub-streams of `seed`.
pub fn generate(spec: &DgpSpec, n: usize, seed: u64) -> Result<Sample> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("n", "sample size must be at least 1"));
    }
    let mut xrng = rng::stream(seed, &[0]);
    let x = match spec.kind {
        DgpKind::GaussianAR => gaussian_ar_path(spec, n, &mut xrng),
        DgpKind::SubWeibullAR => sub_weibull_ar_path(spec, n, &mut xrng),
        DgpKind::SemiParetoAR => semi_pareto_path(spec, n, &mut xrng),
    };
    let mut nrng = rng::stream(seed, &[1]);
    let y = x
        .chunks_exact(spec.d)
        .map(|row| dot(row, &spec.theta_star) + spec.noise.sample(&mut nrng))
        .collect();
    Ok(Sample {
        x,
        y,
        spec: spec.clone(),
        seed,
        n,
    })
}

fn gaussian_ar_path(spec: &DgpSpec, n: usize, rng: &mut Stream) -> Vec<f64> {
    let a = spec.dependence;
    let sd0 = (1.0 / (1.0 - a * a)).sqrt();
    let mut state: Vec<f64> = (0..spec.d)
        .map(|_| sd0 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut out = Vec::with_capacity(n * spec.d);
    out.extend_from_slice(&state);
    for _ in 1..n {
        for v in state.iter_mut() {
            *v = a * *v + rng.sample::<f64, _>(StandardNormal);
        }
        out.extend_from_slice(&state);
    }
    out
}

fn sub_weibull_ar_path(spec: &DgpSpec, n: usize, rng: &mut Stream) -> Vec<f64> {
    let a = spec.dependence;
    let innov = SymWeibull::new(spec.tail, spec.innovation_variance().sqrt());
    let mut state = vec![0.0; spec.d];
    let mut out = Vec::with_capacity(n * spec.d);
    for step in 0..spec.burn_in + n {
        for v in state.iter_mut() {
            *v = a * *v + innov.sample(rng);
        }
        if step >= spec.burn_in {
            out.extend_from_slice(&state);
        }
    }
    out
}

/// One semi-Pareto trail step: scale up by `2^(1/eta)` and, with probability
/// one half, take the minimum with a fresh innovation.
#[inline]
fn semi_pareto_step(prev: f64, growth: f64, innov: &ParetoPlus, rng: &mut Stream) -> f64 {
    let grown = growth * prev;
    if rng.random::<bool>() {
        grown
    } else {
        grown.min(innov.sample(rng))
    }
}

fn semi_pareto_path(spec: &DgpSpec, n: usize, rng: &mut Stream) -> Vec<f64> {
    let laws = pareto_laws(spec);
    let growth = 2f64.powf(1.0 / spec.tail);
    let mut first: Vec<f64> = laws.iter().map(|l| l.sample(rng)).collect();
    let mut second: Vec<f64> = laws.iter().map(|l| l.sample(rng)).collect();
    let mut out = Vec::with_capacity(n * spec.d);
    for t in 0..n {
        if t > 0 {
            for (j, law) in laws.iter().enumerate() {
                first[j] = semi_pareto_step(first[j], growth, law, rng);
                second[j] = semi_pareto_step(second[j], growth, law, rng);
            }
        }
        let u: f64 = rng.random();
        if u <= 0.5 {
            out.extend_from_slice(&first);
        } else {
            out.extend(second.iter().map(|v| -v));
        }
    }
    out
}

/// Runs `trajectories` independent single-coordinate semi-Pareto chains and
/// returns the symmetrized value of each at time `0` and at time `horizon`.
pub fn semi_pareto_marginals(
    eta3: f64,
    scale: f64,
    horizon: usize,
    trajectories: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    use rayon::prelude::*;
    let law = ParetoPlus::new(eta3, scale);
    let growth = 2f64.powf(1.0 / eta3);
    (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, &[k as u64]);
            let mut a = law.sample(&mut rng);
            let mut b = law.sample(&mut rng);
            let mix = |a: f64, b: f64, rng: &mut Stream| if rng.random::<f64>() <= 0.5 { a } else { -b };
            let start = mix(a, b, &mut rng);
            for _ in 0..horizon {
                a = semi_pareto_step(a, growth, &law, &mut rng);
                b = semi_pareto_step(b, growth, &law, &mut rng);
            }
            (start, mix(a, b, &mut rng))
        })
        .unzip()
}

/// Fills `out` (length `spec.d`) with one draw from the stationary marginal
/// of the input process, independent of anything else drawn from `rng`.
pub fn draw_stationary<R: Rng + ?Sized>(spec: &DgpSpec, rng: &mut R, out: &mut [f64]) {
    match spec.kind {
        DgpKind::GaussianAR => {
            let sd = (1.0 / (1.0 - spec.dependence.powi(2))).sqrt();
            for v in out.iter_mut() {
                *v = sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        DgpKind::SemiParetoAR => {
            for (v, &s) in out.iter_mut().zip(&spec.pareto_scales) {
                *v = SymPareto::new(spec.tail, s).sample(rng);
            }
        }
        DgpKind::SubWeibullAR => {
            // truncated MA(infinity) representation sum_k a^k delta_k
            let innov = SymWeibull::new(spec.tail, spec.innovation_variance().sqrt());
            let terms = spec.ma_terms();
            for v in out.iter_mut() {
                let mut acc = 0.0;
                let mut w = 1.0;
                for _ in 0..terms {
                    acc += w * innov.sample(rng);
                    w *= spec.dependence;
                }
                *v = acc;
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
