mod cfgfile;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use activeirs::complexity::complexity;
use activeirs::dataset::{export_dataset, DatasetSizes, SnrPolicy};
use activeirs::harness::{run_sweep, simulate_trial, Execution, SweepSpec, SweepVariable};
use activeirs::optimize::{optimize_beta, optimize_pirs};
use activeirs::poly::{horner, solve_quartic_ferrari};
use activeirs::rng;
use activeirs::system::{draw_channels, IrsGain};
use activeirs::{
    BetaObjective, ChannelNorms, Error, NoiseLoading, PilotSchedule, PirsObjective, SystemConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "activeirs",
    version,
    about = "Active-IRS uplink channel estimation and power allocation"
)]
#[command(after_help = cfgfile::KEYS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable, applied after the file.
    #[arg(long = "override", short = 'o', value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file or directory (stdout for single-shot commands when absent).
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Base RNG seed; wins over the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one pilot round and print the closed-form and empirical errors.
    #[command(after_help = cfgfile::KEYS_HELP)]
    Simulate(Common),
    /// Minimize Sum-MSE over the power-allocation factor for one realization.
    #[command(after_help = cfgfile::KEYS_HELP)]
    OptimizeBeta(Common),
    /// Minimize Sum-MSE over the IRS power at fixed device power.
    #[command(after_help = cfgfile::KEYS_HELP)]
    OptimizePirs {
        #[command(flatten)]
        common: Common,
        /// Device transmit power [W]; defaults to beta * P_t.
        #[arg(long)]
        p_iot: Option<f64>,
    },
    /// Monte Carlo sweep written as CSV plus a JSON sidecar.
    #[command(after_help = cfgfile::KEYS_HELP)]
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Swept quantity: beta, p_irs, N, K or snr (dB).
        #[arg(long)]
        variable: String,
        /// Comma-separated grid values, or start:stop:count for an evenly spaced grid.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Also evaluate MMSE shrinkage with this diagonal loading.
        #[arg(long, value_enum)]
        mmse: Option<Loading>,
        /// Run trials on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Write a training dataset (raw f32 blobs + manifest.json).
    #[command(after_help = cfgfile::KEYS_HELP)]
    ExportDataset {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 9000)]
        train: usize,
        #[arg(long, default_value_t = 1000)]
        validate: usize,
        #[arg(long, default_value_t = 5000)]
        test: usize,
        /// Fixed SNR in dB for every sample.
        #[arg(long, conflicts_with_all = ["snr_range", "noiseless"])]
        snr_db: Option<f64>,
        /// Per-sample SNR drawn uniformly from MIN:MAX dB.
        #[arg(long, value_name = "MIN:MAX", conflicts_with = "noiseless")]
        snr_range: Option<String>,
        #[arg(long)]
        noiseless: bool,
    },
    /// Audit the β optimization: coefficients, resolvent, Ferrari branch, roots, residuals.
    #[command(after_help = cfgfile::KEYS_HELP)]
    Explain(Common),
    /// Multiply counts of the learned estimators for the configured K, N.
    #[command(after_help = cfgfile::KEYS_HELP)]
    Complexity(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Loading {
    LsErrorOnly,
    PilotNoiseRatio,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn resolve_config(c: &Common) -> CliResult<SystemConfig> {
    let mut cfg = match &c.config {
        Some(p) => cfgfile::load(p)?,
        None => SystemConfig::default(),
    };
    for kv in &c.overrides {
        cfgfile::apply_override(&mut cfg, kv)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_root() -> Option<PathBuf> {
    std::env::var_os("ACTIVEIRS_OUTPUT_DIR").map(PathBuf::from)
}

fn resolve_output(path: &Path) -> PathBuf {
    match output_root() {
        Some(root) if path.is_relative() => root.join(path),
        _ => path.to_path_buf(),
    }
}

fn emit<T: Serialize>(c: &Common, value: &T) -> CliResult<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))? + "\n";
    match &c.output {
        Some(p) => {
            let p = resolve_output(p);
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            }
            std::fs::write(&p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Realization {
    cfg: SystemConfig,
    norms: ChannelNorms,
    rho: f64,
}

fn realization(cfg: SystemConfig) -> CliResult<Realization> {
    let sched = PilotSchedule::build(&cfg)?;
    let chan = draw_channels(&cfg, &mut rng::single(cfg.seed))?;
    let irs = IrsGain::new(&cfg, &chan, sched.reference_phases())?;
    let norms = ChannelNorms::compute(&chan, &sched, &irs.theta_tilde)?;
    Ok(Realization {
        cfg,
        norms,
        rho: irs.rho,
    })
}

fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = |what: &str| Failure::Config(format!("grid {s:?}: {what}"));
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("cannot parse {t:?}")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| bad("count must be an integer"))?;
        return match n {
            0 => Err(bad("count must be positive")),
            1 => Ok(vec![a]),
            _ => Ok((0..n)
                .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect()),
        };
    }
    s.split(',').map(num).collect()
}

fn parse_range(s: &str) -> CliResult<(f64, f64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Failure::Config(format!("SNR range {s:?} is not MIN:MAX")))?;
    let p = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Failure::Config(format!("SNR range: cannot parse {t:?}")))
    };
    Ok((p(a)?, p(b)?))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = resolve_config(&c)?;
            let sched = PilotSchedule::build(&cfg)?;
            let t = simulate_trial(&cfg, &sched, Default::default(), &mut rng::single(cfg.seed))?;
            emit(
                &c,
                &json!({
                    "config": cfg,
                    "closed_form": t.closed_form,
                    "empirical": { "eps1": t.eps1(), "eps2": t.eps2(), "eps_sum": t.eps1() + t.eps2() },
                }),
            )
        }
        Command::OptimizeBeta(c) => {
            let r = realization(resolve_config(&c)?)?;
            let obj = BetaObjective::build(&r.cfg, &r.norms)?;
            let opt = optimize_beta(&obj);
            emit(
                &c,
                &json!({
                    "beta_opt": opt.argmin,
                    "eps_at_beta_opt": opt.value,
                    "eps_at_config_beta": obj.eval(r.cfg.beta).ok(),
                    "result": opt,
                    "seed": r.cfg.seed,
                }),
            )
        }
        Command::OptimizePirs { common: c, p_iot } => {
            let r = realization(resolve_config(&c)?)?;
            let p_iot = p_iot.unwrap_or(r.cfg.beta * r.cfg.p_t);
            let obj = PirsObjective::build(&r.cfg, &r.norms, p_iot)?;
            let opt = optimize_pirs(&obj);
            emit(
                &c,
                &json!({
                    "p_irs_opt": opt.argmin,
                    "eps_at_p_irs_opt": opt.value,
                    "second_derivative": opt.argmin.is_finite().then(|| obj.second_derivative(opt.argmin)),
                    "p_iot": p_iot,
                    "e": obj.e,
                    "result": opt,
                }),
            )
        }
        Command::Sweep {
            common: c,
            variable,
            grid,
            trials,
            mmse,
            serial,
        } => {
            let base = resolve_config(&c)?;
            let variable = SweepVariable::parse(&variable)?;
            let spec = SweepSpec {
                variable,
                grid: parse_grid(&grid)?,
                trials,
                base,
                mmse: mmse.map(|l| match l {
                    Loading::LsErrorOnly => NoiseLoading::LsErrorOnly,
                    Loading::PilotNoiseRatio => NoiseLoading::PilotNoiseRatio,
                }),
                execution: if serial {
                    Execution::Serial
                } else {
                    Execution::Parallel
                },
            };
            spec.validate()?;
            let name = format!(
                "sweep_{}.csv",
                serde_json::to_value(variable)
                    .unwrap()
                    .as_str()
                    .unwrap_or("x")
            );
            let path = resolve_output(c.output.as_deref().unwrap_or(Path::new(&name)));
            let result = run_sweep(&spec)?;
            let side = result.write(&path)?;
            eprintln!("wrote {} and {}", path.display(), side.display());
            Ok(())
        }
        Command::ExportDataset {
            common: c,
            train,
            validate,
            test,
            snr_db,
            snr_range,
            noiseless,
        } => {
            let cfg = resolve_config(&c)?;
            let policy = match (snr_db, snr_range, noiseless) {
                (_, _, true) => SnrPolicy::Noiseless,
                (Some(s), _, _) => SnrPolicy::Fixed { snr_db: s },
                (_, Some(r), _) => {
                    let (min_db, max_db) = parse_range(&r)?;
                    SnrPolicy::UniformRange { min_db, max_db }
                }
                _ => SnrPolicy::FromConfig,
            };
            let dir = resolve_output(c.output.as_deref().unwrap_or(Path::new("dataset")));
            let sizes = DatasetSizes {
                train,
                validate,
                test,
            };
            let m = export_dataset(&cfg, sizes, policy, &dir)?;
            eprintln!(
                "wrote {} files and manifest.json to {}",
                m.files.len(),
                dir.display()
            );
            Ok(())
        }
        Command::Explain(c) => {
            let r = realization(resolve_config(&c)?)?;
            let obj = BetaObjective::build(&r.cfg, &r.norms)?;
            let opt = optimize_beta(&obj);
            let quartic = obj.d.map(|d| {
                let sol = solve_quartic_ferrari(d);
                let coeffs = [1.0, d[3], d[2], d[1], d[0]];
                let residuals: Vec<f64> = sol
                    .roots
                    .iter()
                    .map(|z| horner(&coeffs, *z).norm())
                    .collect();
                json!({ "solution": sol, "residuals": residuals })
            });
            emit(
                &c,
                &json!({
                    "config": r.cfg,
                    "rho": r.rho,
                    "norms": r.norms,
                    "objective": obj,
                    "quartic": quartic,
                    "result": opt,
                }),
            )
        }
        Command::Complexity(c) => {
            let cfg = resolve_config(&c)?;
            emit(&c, &complexity(cfg.k as u64, cfg.n as u64)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
