//! Monte Carlo sweeps of the estimation pipeline.
//!
//! Each grid point draws fresh channels per trial from the stream
//! `(Sweep, seed, point, trial)`, runs pilots → LS estimates, and evaluates
//! the closed forms on the same realization. Trials are stored and then
//! reduced in index order, so serial and parallel runs agree bit for bit.
//!
//! # SNR convention
//!
//! `SNR = β P_t γ_ub / σ_b²`, the device's received power on the direct
//! link over the BS noise power, with `σ_i² = σ_b²`.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimators::{
    ls_cascaded, ls_direct, mmse_apply_cascaded, mmse_apply_direct, mmse_weights_cascaded,
    mmse_weights_direct, CascadedEstimate, DirectEstimate, MmseWeights, NoiseLoading,
};
use crate::mse::{breakdown, BetaObjective, ChannelNorms, MseBreakdown};
use crate::optimize::optimize_beta;
use crate::pilot::{transmit_four_blocks, PilotSchedule, ReceivedFrame, TransmitOptions};
use crate::rng::{self, Domain};
use crate::system::{draw_channels, ChannelRealization, IrsGain, LinkGains};

pub const CSV_HEADER: &str =
    "x,eps1_mc,eps1_cf,eps2_mc,eps2_cf,eps_sum_mc,eps_sum_cf,stderr_sum,beta_opt";

/// Realizations used to estimate the average LS error that feeds the MMSE
/// weights of a grid point.
const CALIBRATION_DRAWS: u64 = 256;

/// `(σ_i², σ_b²)` for a target SNR in dB.
pub fn snr_to_noise(cfg: &SystemConfig, snr_db: f64) -> Result<(f64, f64)> {
    if !snr_db.is_finite() {
        return Err(Error::Domain {
            name: "snr_dB",
            value: snr_db,
            expected: "finite",
        });
    }
    let gains = LinkGains::from_config(cfg)?;
    let sigma_b2 = cfg.beta * cfg.p_t * gains.ub / 10f64.powf(snr_db / 10.0);
    Ok((sigma_b2, sigma_b2))
}

/// Everything one pilot round produces.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub channel: ChannelRealization,
    pub irs: IrsGain,
    pub frame: ReceivedFrame,
    pub direct: DirectEstimate,
    pub cascaded: CascadedEstimate,
    pub closed_form: MseBreakdown,
}

impl TrialOutcome {
    /// `‖ĥ − h‖² / 4N`
    pub fn eps1(&self) -> f64 {
        self.direct.squared_error.unwrap_or(f64::NAN) / (4.0 * self.channel.n() as f64)
    }

    /// `‖Ĥ − H_biu‖² / 4N`
    pub fn eps2(&self) -> f64 {
        self.cascaded.squared_error.unwrap_or(f64::NAN) / (4.0 * self.channel.n() as f64)
    }
}

/// Draw a channel, transmit the pilots and form both LS estimates.
pub fn simulate_trial<R: rand::Rng + ?Sized>(
    cfg: &SystemConfig,
    sched: &PilotSchedule,
    opts: TransmitOptions,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let channel = draw_channels(cfg, rng)?;
    let irs = IrsGain::new(cfg, &channel, sched.reference_phases())?;
    let frame = transmit_four_blocks(cfg, &channel, &irs, sched, opts, rng)?;
    let direct = ls_direct(&frame.ytilde1, &sched.x, cfg.beta, cfg.p_t)?.with_truth(&channel.h);
    let cascaded =
        ls_cascaded(&frame.ytilde2, sched, irs.rho, cfg.beta, cfg.p_t)?.with_truth(&channel.h_biu);
    let norms = ChannelNorms::compute(&channel, sched, &irs.theta_tilde)?;
    let closed_form = breakdown(cfg, irs.rho, norms)?;
    Ok(TrialOutcome {
        channel,
        irs,
        frame,
        direct,
        cascaded,
        closed_form,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    Beta,
    /// IRS power with the device power held at `β P_t` of the base config.
    PIrs,
    N,
    K,
    /// SNR in dB; see the module docs for the definition.
    Snr,
}

impl SweepVariable {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "beta" => Ok(SweepVariable::Beta),
            "p_irs" | "p-irs" | "pirs" => Ok(SweepVariable::PIrs),
            "n" => Ok(SweepVariable::N),
            "k" => Ok(SweepVariable::K),
            "snr" => Ok(SweepVariable::Snr),
            _ => Err(Error::Config(format!(
                "unknown sweep variable {s:?}; expected beta, p_irs, N, K or snr"
            ))),
        }
    }

    /// The base configuration moved to grid value `x`.
    pub fn apply(self, base: &SystemConfig, x: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        let as_count = |x: f64| -> Result<usize> {
            if x >= 1.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::Config(format!(
                    "grid value {x} is not a positive integer"
                )))
            }
        };
        match self {
            SweepVariable::Beta => cfg.beta = x,
            SweepVariable::PIrs => {
                if !(x > 0.0) {
                    return Err(Error::Config(format!("P_IRS = {x} must be positive")));
                }
                let p_iot = base.beta * base.p_t;
                cfg.p_t = p_iot + x;
                cfg.beta = p_iot / cfg.p_t;
            }
            SweepVariable::N => {
                cfg.n = as_count(x)?;
                cfg.q = None;
            }
            SweepVariable::K => cfg.k = as_count(x)?,
            SweepVariable::Snr => {
                let (si, sb) = snr_to_noise(base, x)?;
                cfg.sigma_i2 = si;
                cfg.sigma_b2 = sb;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub base: SystemConfig,
    /// Also run MMSE shrinkage with this loading.
    #[serde(default)]
    pub mmse: Option<NoiseLoading>,
    #[serde(default)]
    pub execution: Execution,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.base.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct TrialRecord {
    eps1_mc: f64,
    eps2_mc: f64,
    eps1_cf: f64,
    eps2_cf: f64,
    beta_opt: Option<f64>,
    mmse: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub eps1_mc: f64,
    pub eps1_cf: f64,
    pub eps2_mc: f64,
    pub eps2_cf: f64,
    pub eps_sum_mc: f64,
    pub eps_sum_cf: f64,
    pub stderr_eps1: f64,
    pub stderr_eps2: f64,
    pub stderr_sum: f64,
    /// Median over trials of the per-realization optimum.
    pub beta_opt: Option<f64>,
    pub mmse_eps1: Option<f64>,
    pub mmse_eps2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub version: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` wins when set.
    pub timestamp: u64,
    pub spec: SweepSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

pub fn version_string() -> String {
    format!("activeirs-v{}", env!("CARGO_PKG_VERSION"))
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn stderr(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn calibrate_mmse(
    cfg: &SystemConfig,
    sched: &PilotSchedule,
    seed: u64,
    point: u64,
    loading: NoiseLoading,
) -> Result<(MmseWeights, MmseWeights)> {
    let (mut e1, mut e2) = (0.0, 0.0);
    for i in 0..CALIBRATION_DRAWS {
        let mut r = rng::stream(Domain::Calibration, seed, point, i);
        let chan = draw_channels(cfg, &mut r)?;
        let irs = IrsGain::new(cfg, &chan, sched.reference_phases())?;
        let cf = breakdown(
            cfg,
            irs.rho,
            ChannelNorms::compute(&chan, sched, &irs.theta_tilde)?,
        )?;
        e1 += cf.eps1;
        e2 += cf.eps2;
    }
    let d = CALIBRATION_DRAWS as f64;
    Ok((
        mmse_weights_direct(cfg, e1 / d, loading)?,
        mmse_weights_cascaded(cfg, e2 / d, loading)?,
    ))
}

fn run_point(spec: &SweepSpec, point: usize, x: f64) -> Result<SweepRow> {
    let cfg = spec.variable.apply(&spec.base, x)?;
    let sched = PilotSchedule::build(&cfg)?;
    let seed = spec.base.seed;
    let want_beta_opt = spec.variable != SweepVariable::PIrs && cfg.pilot_len() == cfg.n;
    let weights = spec
        .mmse
        .map(|l| calibrate_mmse(&cfg, &sched, seed, point as u64, l))
        .transpose()?;

    let trial = |t: usize| -> Result<TrialRecord> {
        let mut r = rng::stream(Domain::Sweep, seed, point as u64, t as u64);
        let out = simulate_trial(&cfg, &sched, TransmitOptions::default(), &mut r)?;
        let beta_opt = if want_beta_opt {
            let obj = BetaObjective::build(&cfg, &out.closed_form.norms)?;
            Some(optimize_beta(&obj).argmin).filter(|b| b.is_finite())
        } else {
            None
        };
        let mmse = match &weights {
            Some((wd, wc)) => {
                let n4 = 4.0 * cfg.n as f64;
                let d = mmse_apply_direct(wd, &out.direct)?.with_truth(&out.channel.h);
                let c = mmse_apply_cascaded(wc, &out.cascaded)?.with_truth(&out.channel.h_biu);
                Some((
                    d.squared_error.unwrap_or(f64::NAN) / n4,
                    c.squared_error.unwrap_or(f64::NAN) / n4,
                ))
            }
            None => None,
        };
        Ok(TrialRecord {
            eps1_mc: out.eps1(),
            eps2_mc: out.eps2(),
            eps1_cf: out.closed_form.eps1,
            eps2_cf: out.closed_form.eps2,
            beta_opt,
            mmse,
        })
    };
    let records: Vec<TrialRecord> = match spec.execution {
        Execution::Serial => (0..spec.trials).map(trial).collect::<Result<_>>()?,
        Execution::Parallel => (0..spec.trials)
            .into_par_iter()
            .map(trial)
            .collect::<Result<_>>()?,
    };

    let col = |f: fn(&TrialRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let e1 = col(|r| r.eps1_mc);
    let e2 = col(|r| r.eps2_mc);
    let sum = col(|r| r.eps1_mc + r.eps2_mc);
    let e1_cf = mean(&col(|r| r.eps1_cf));
    let e2_cf = mean(&col(|r| r.eps2_cf));
    let mmse = weights.as_ref().map(|_| {
        (
            mean(&col(|r| r.mmse.map_or(f64::NAN, |m| m.0))),
            mean(&col(|r| r.mmse.map_or(f64::NAN, |m| m.1))),
        )
    });
    Ok(SweepRow {
        x,
        eps1_mc: mean(&e1),
        eps1_cf: e1_cf,
        eps2_mc: mean(&e2),
        eps2_cf: e2_cf,
        eps_sum_mc: mean(&sum),
        eps_sum_cf: e1_cf + e2_cf,
        stderr_eps1: stderr(&e1),
        stderr_eps2: stderr(&e2),
        stderr_sum: stderr(&sum),
        beta_opt: median(records.iter().filter_map(|r| r.beta_opt).collect()),
        mmse_eps1: mmse.map(|m| m.0),
        mmse_eps2: mmse.map(|m| m.1),
    })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = spec
        .grid
        .iter()
        .enumerate()
        .map(|(i, &x)| run_point(spec, i, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows,
        metadata: SweepMetadata {
            version: version_string(),
            timestamp: timestamp(),
            spec: spec.clone(),
        },
    })
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let beta = r.beta_opt.map(|b| format!("{b:e}")).unwrap_or_default();
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                r.x,
                r.eps1_mc,
                r.eps1_cf,
                r.eps2_mc,
                r.eps2_cf,
                r.eps_sum_mc,
                r.eps_sum_cf,
                r.stderr_sum,
                beta
            ));
        }
        out
    }

    /// Sidecar path: the CSV path with a `.json` extension.
    pub fn sidecar_path(csv: &Path) -> PathBuf {
        csv.with_extension("json")
    }

    /// Write the CSV and its JSON sidecar; returns the sidecar path.
    pub fn write(&self, csv: &Path) -> Result<PathBuf> {
        if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(csv, self.to_csv()).map_err(|e| Error::io(csv, e))?;
        let side = Self::sidecar_path(csv);
        let mut f = std::fs::File::create(&side).map_err(|e| Error::io(&side, e))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n").map_err(|e| Error::io(&side, e))?;
        Ok(side)
    }
}
