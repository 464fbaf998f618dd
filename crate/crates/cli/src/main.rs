use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mixrate_core::complexity::{self, ComplexityEstimate};
use mixrate_core::concentration::{self, HeavyTailParams, InteractionSpec, TailBound};
use mixrate_core::dgp::{self, DgpKind, Sample};
use mixrate_core::erm::{self, FitResult};
use mixrate_core::experiments::{self, plot, ExperimentConfig};
use mixrate_core::{rng, Error};

#[derive(Parser)]
#[command(name = "mixrate", version, about = "ERM rates under beta-mixing and heavy tails")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `experiment.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit one sample as CSV.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
    },
    /// Fit the ERM on a sample CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Rate study over the configured n grid.
    Rates {
        #[command(flatten)]
        common: Common,
        /// Fail with status 2 unless the slope lies in [check.slope_min, check.slope_max].
        #[arg(long)]
        check: bool,
    },
    /// Huber versus squared loss on common samples.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Empirical tail of the sup of partial sums against the analytic bound.
    ConcCheck {
        #[command(flatten)]
        common: Common,
        /// Fail with status 2 if any grid point exceeds bound + k sigma.
        #[arg(long)]
        check: bool,
    },
    /// Small-ball, omega_mu, omega_1 and omega_Q estimates per n.
    Complexity {
        #[command(flatten)]
        common: Common,
    },
    /// Render summary.csv or conc.csv as a log-log SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Validation(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Plot { input, out } => plot_cmd(&input, &out),
        Command::Gen { common, n } => with_setup(&common, |cfg| gen_cmd(cfg, &common, n)),
        Command::Fit { common, data } => with_setup(&common, |cfg| fit_cmd(cfg, &common, &data)),
        Command::Rates { common, check } => with_setup(&common, |cfg| rates_cmd(cfg, &common, check)),
        Command::Compare { common } => with_setup(&common, |cfg| compare_cmd(cfg, &common)),
        Command::ConcCheck { common, check } => with_setup(&common, |cfg| conc_cmd(cfg, &common, check)),
        Command::Complexity { common } => with_setup(&common, |cfg| complexity_cmd(cfg, &common)),
    }
}

fn with_setup(common: &Common, body: impl FnOnce(&ExperimentConfig) -> CliResult + Send) -> CliResult {
    let mut cfg = experiments::load_config(&common.config)
        .map_err(|e| Failure::Validation(format!("{}: {e}", common.config.display())))?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    fs::create_dir_all(&common.out)?;
    match common.threads {
        Some(0) => Err(Failure::Validation("--threads must be at least 1".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Failure::Validation(e.to_string()))?;
            pool.install(|| body(&cfg))
        }
        None => body(&cfg),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn gen_cmd(cfg: &ExperimentConfig, common: &Common, n: usize) -> CliResult {
    let sample = dgp::generate(&cfg.dgp, n, cfg.master_seed)?;
    let path = common.out.join("sample.csv");
    let mut w = create(&path)?;
    sample.write_csv(&mut w)?;
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn fit_cmd(cfg: &ExperimentConfig, common: &Common, data: &Path) -> CliResult {
    let file = File::open(data).map_err(|e| Failure::Validation(format!("{}: {e}", data.display())))?;
    let sample = Sample::read_csv(BufReader::new(file), cfg.dgp.clone())?;
    let fit = erm::erm_fit(&sample, &cfg.loss, cfg.dgp.radius, &cfg.fit)?;
    let path = common.out.join("fit.csv");
    let mut w = create(&path)?;
    writeln!(w, "# schema=1")?;
    writeln!(w, "{}", FitResult::csv_header(sample.d()))?;
    fit.write_csv_row(&mut w, sample.seed, sample.n, &cfg.loss, cfg.dgp.radius)?;
    w.flush()?;
    println!(
        "objective={} iterations={} gap={:e} status={:?}",
        fit.objective, fit.iterations, fit.final_gap, fit.status
    );
    Ok(())
}

fn rates_cmd(cfg: &ExperimentConfig, common: &Common, check: bool) -> CliResult {
    let res = experiments::run_rates(cfg)?;
    let mut w = create(&common.out.join("rates.csv"))?;
    res.write_rates_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&common.out.join("summary.csv"))?;
    res.write_summary_csv(&mut w)?;
    w.flush()?;
    println!(
        "slope={:.4} (se {:.4}) median_slope={:.4} theory={:.4} non_converged={}",
        res.slope, res.slope_stderr, res.median_slope, res.theoretical_exponent, res.non_converged
    );
    if check {
        let lo = cfg.check.slope_min.unwrap_or(f64::NEG_INFINITY);
        let hi = cfg.check.slope_max.unwrap_or(f64::INFINITY);
        if !(lo..=hi).contains(&res.slope) {
            return Err(Failure::Check(format!("slope {} outside [{lo}, {hi}]", res.slope)));
        }
    }
    Ok(())
}

fn compare_cmd(cfg: &ExperimentConfig, common: &Common) -> CliResult {
    let (squared, huber) = experiments::loss_pair(cfg);
    let cmp = experiments::run_huber_vs_squared(&squared, &huber)?;
    let mut w = create(&common.out.join("compare.csv"))?;
    cmp.write_csv(&mut w)?;
    w.flush()?;
    for r in &cmp.rows {
        println!(
            "n={} median_ratio={:.4} q95_ratio={:.4}",
            r.n, r.median_ratio, r.q95_ratio
        );
    }
    Ok(())
}

fn conc_cmd(cfg: &ExperimentConfig, common: &Common, check: bool) -> CliResult {
    let c = &cfg.conc;
    let spec = match c.interaction.as_str() {
        "iid_pareto" => InteractionSpec::IidSymPareto {
            eta: c.pareto_eta,
            scale: c.pareto_scale,
        },
        _ => InteractionSpec::Process {
            dgp: cfg.dgp.clone(),
            theta: c
                .theta
                .clone()
                .ok_or_else(|| Failure::Validation("conc.theta is required for process interactions".into()))?,
            loss: cfg.loss,
        },
    };
    let mut params = HeavyTailParams::with_default_exponents(c.n, cfg.eta1, cfg.eta2, c.c_prime);
    if let Some(d1) = c.d1 {
        params.d1 = d1;
    }
    if let Some(d2) = c.d2 {
        params.d2 = d2;
    }
    let grid = concentration::log_grid(c.t_min, c.t_max, c.t_points);
    let report = concentration::tail_verify(
        &spec,
        c.n,
        &grid,
        c.n_paths,
        &TailBound::HeavyTail(params),
        cfg.master_seed,
    )?;
    let mut w = create(&common.out.join("conc.csv"))?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&common.out.join("conc_params.txt"))?;
    report.write_params(&mut w)?;
    w.flush()?;
    let bad = report.violations(c.sigma_slack);
    println!("grid points={} violations={}", grid.len(), bad.len());
    if check && !bad.is_empty() {
        let ts: Vec<String> = bad.iter().map(|&i| format!("{:.3}", report.t_grid[i])).collect();
        return Err(Failure::Check(format!("bound exceeded at t = {}", ts.join(", "))));
    }
    Ok(())
}

fn json_field(out: &mut String, key: &str, v: impl std::fmt::Display) {
    if out.len() > 1 {
        out.push(',');
    }
    out.push_str(&format!("\"{key}\":{v}"));
}

fn json(fields: &[(&str, String)]) -> String {
    let mut s = String::from("{");
    for (k, v) in fields {
        json_field(&mut s, k, v);
    }
    s.push('}');
    s
}

fn complexity_cmd(cfg: &ExperimentConfig, common: &Common) -> CliResult {
    let spec = &cfg.dgp;
    let cx = &cfg.complexity;
    let seed = cfg.master_seed;
    let mut w = create(&common.out.join("complexity.csv"))?;
    writeln!(w, "# schema=1")?;
    writeln!(w, "measure,param_json,value,std_error,n_mc,seed")?;
    let emit = |w: &mut BufWriter<File>, measure: &str, params: String, est: &ComplexityEstimate, s: u64| {
        writeln!(
            w,
            "{measure},\"{}\",{},{},{},{s}",
            params.replace('"', "\"\""),
            est.value,
            est.std_error,
            est.n_mc
        )
    };

    let u = 2.0 * cfg.tau;
    let sb_seed = rng::derive_seed(seed, &[1]);
    let q = complexity::small_ball_estimate(spec, u, cx.n_dir, cx.n_mc, sb_seed)?;
    emit(
        &mut w,
        "small_ball",
        json(&[
            ("u", u.to_string()),
            ("n_dir", cx.n_dir.to_string()),
            ("upper_bound", "true".into()),
        ]),
        &q,
        sb_seed,
    )?;
    let gw_seed = rng::derive_seed(seed, &[2]);
    let gw = complexity::gaussian_width_estimate(spec, cx.width_r, cx.n_mc, gw_seed)?;
    emit(
        &mut w,
        "gaussian_width",
        json(&[("r", cx.width_r.to_string())]),
        &gw,
        gw_seed,
    )?;

    let q_hat = q.value.max(1e-12);
    let gamma = cfg.tau * q_hat / 16.0;
    let zeta1 = 2.0 * cfg.tau * q_hat.powf(1.5);
    let zeta2 = 2.0 * cfg.tau * q_hat;
    for &n in &cfg.n_grid {
        let mu = experiments::block_count(n, cfg.r_exponent, q_hat, cfg.mixing_c, cfg.eta1);
        let s_mu = rng::derive_seed(seed, &[3, n as u64]);
        let om = complexity::omega_mu_estimate(spec, mu, gamma, cx.n_mc, s_mu, None)?;
        emit(
            &mut w,
            "omega_mu",
            json(&[
                ("n", n.to_string()),
                ("mu", mu.to_string()),
                ("gamma", gamma.to_string()),
            ]),
            &om,
            s_mu,
        )?;
        let s_1 = rng::derive_seed(seed, &[4, n as u64]);
        let o1 = complexity::omega_1_estimate(spec, n, zeta1, cfg.eta1, cx.n_mc, s_1)?;
        emit(
            &mut w,
            "omega_1",
            json(&[
                ("n", n.to_string()),
                ("zeta1", zeta1.to_string()),
                ("eta1", cfg.eta1.to_string()),
            ]),
            &o1,
            s_1,
        )?;
        let s_q = rng::derive_seed(seed, &[5, n as u64]);
        let oq = complexity::omega_q_estimate(spec, n, mu, zeta1, zeta2, cfg.eta1, cx.n_mc, s_q)?;
        emit(
            &mut w,
            "omega_q",
            json(&[
                ("n", n.to_string()),
                ("mu", mu.to_string()),
                ("zeta1", zeta1.to_string()),
                ("zeta2", zeta2.to_string()),
            ]),
            &oq,
            s_q,
        )?;
        let bound = match spec.kind {
            DgpKind::SemiParetoAR => complexity::theory_bound_pareto(
                spec.radius,
                spec.d as f64,
                cfg.eta2,
                cfg.iota,
                n as f64,
                cfg.tau,
                q_hat.min(1.0),
                cx.constants.c9,
            )?,
            DgpKind::SubWeibullAR => {
                complexity::theory_bound_subweibull(spec.radius, spec.d as f64, spec.tail, mu as f64, &cx.constants)?
            }
            DgpKind::GaussianAR => {
                complexity::theory_bound_subweibull(spec.radius, spec.d as f64, 2.0, mu as f64, &cx.constants)?
            }
        };
        let exact = ComplexityEstimate {
            value: bound,
            std_error: 0.0,
            n_mc: 0,
            r_grid: Vec::new(),
            n_dir: 0,
            upper_bound: false,
        };
        emit(
            &mut w,
            "theory_bound",
            json(&[
                ("n", n.to_string()),
                ("mu", mu.to_string()),
                ("kind", format!("\"{}\"", spec.kind.name())),
            ]),
            &exact,
            0,
        )?;
        println!(
            "n={n} mu={mu} omega_mu={:.5} omega_q={:.5} bound={:.5}",
            om.value, oq.value, bound
        );
    }
    w.flush()?;
    Ok(())
}

fn plot_cmd(input: &Path, out: &Path) -> CliResult {
    let text = fs::read_to_string(input).map_err(|e| Failure::Validation(format!("{}: {e}", input.display())))?;
    let header = text
        .lines()
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .unwrap_or("");
    let svg = if header.starts_with("n,mean") {
        let c = plot::read_columns(&text, &["n", "mean", "median", "q95"])?;
        let series = ["mean", "median", "q95"]
            .iter()
            .enumerate()
            .map(|(k, name)| plot::Series {
                name: (*name).into(),
                points: c[0].iter().copied().zip(c[k + 1].iter().copied()).collect(),
                dashed: false,
            })
            .collect::<Vec<_>>();
        plot::loglog_svg("L2 error against sample size", "n", "error", &series)?
    } else if header.starts_with("t,empirical") {
        let c = plot::read_columns(&text, &["t", "empirical", "bound"])?;
        let series = vec![
            plot::Series {
                name: "empirical tail".into(),
                points: c[0].iter().copied().zip(c[1].iter().copied()).collect(),
                dashed: false,
            },
            plot::Series {
                name: "bound".into(),
                points: c[0].iter().copied().zip(c[2].iter().copied()).collect(),
                dashed: true,
            },
        ];
        plot::loglog_svg("Tail of the sup of partial sums", "t", "probability", &series)?
    } else {
        return Err(Failure::Validation(format!(
            "{}: expected a summary.csv or conc.csv header",
            input.display()
        )));
    };
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, svg)?;
    println!("wrote {}", out.display());
    Ok(())
}
