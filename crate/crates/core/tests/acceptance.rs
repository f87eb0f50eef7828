//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use activeirs::harness::{run_sweep, simulate_trial, Execution, SweepSpec, SweepVariable};
use activeirs::linalg::{fro2, norm2};
use activeirs::mse::{breakdown, sum_mse_single_fraction};
use activeirs::optimize::{grid_search, optimize_beta, optimize_pirs};
use activeirs::poly::{horner, solve_cubic_cardano, solve_quartic_ferrari};
use activeirs::rng::{self, SimRng};
use activeirs::system::{draw_channels, IrsGain};
use activeirs::{
    BetaObjective, ChannelNorms, PilotSchedule, PirsObjective, SystemConfig, TransmitOptions, C64,
};
use nalgebra::DMatrix;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario(r: &mut SimRng) -> SystemConfig {
    const KS: [usize; 4] = [1, 4, 8, 16];
    const NS: [usize; 4] = [4, 8, 16, 64];
    let log_uniform = |r: &mut SimRng, lo: f64, hi: f64| 10f64.powf(r.random_range(lo..hi));
    SystemConfig {
        k: KS[r.random_range(0..KS.len())],
        n: NS[r.random_range(0..NS.len())],
        p_t: log_uniform(r, -1.0, 1.0),
        beta: r.random_range(0.01..0.99),
        sigma_i2: log_uniform(r, -14.0, -10.0),
        sigma_b2: log_uniform(r, -14.0, -10.0),
        ..SystemConfig::default()
    }
}

fn norms_for(cfg: &SystemConfig, r: &mut SimRng) -> ChannelNorms {
    let sched = PilotSchedule::build(cfg).unwrap();
    let chan = draw_channels(cfg, r).unwrap();
    ChannelNorms::compute(&chan, &sched, &sched.reference_phases()).unwrap()
}

fn closed_form_vs_monte_carlo() -> Outcome {
    let start = Instant::now();
    let spec = SweepSpec {
        variable: SweepVariable::Snr,
        grid: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        trials: 100_000,
        base: SystemConfig {
            k: 8,
            n: 16,
            seed: 2024,
            ..SystemConfig::default()
        },
        mmse: None,
        execution: Execution::Parallel,
    };
    let rows = run_sweep(&spec).map_err(|e| e.to_string())?.rows;
    let elapsed = start.elapsed();
    let worst = rows
        .iter()
        .flat_map(|r| [r.eps1_mc / r.eps1_cf - 1.0, r.eps2_mc / r.eps2_cf - 1.0])
        .fold(0.0f64, |m, d| m.max(d.abs()));
    check(
        worst < 0.02 && elapsed < Duration::from_secs(120),
        format!(
            "max relative gap {:.3}% over 5 SNR points, {:.1} s",
            100.0 * worst,
            elapsed.as_secs_f64()
        ),
    )
}

fn noiseless_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let mut r = rng::single(seed);
        let cfg = scenario(&mut r);
        let sched = PilotSchedule::build(&cfg).unwrap();
        let t = simulate_trial(&cfg, &sched, TransmitOptions::noiseless(), &mut r)
            .map_err(|e| e.to_string())?;
        let d = (norm2(&(&t.direct.h_hat - &t.channel.h)) / norm2(&t.channel.h)).sqrt();
        let c = (fro2(&(&t.cascaded.h_hat - &t.channel.h_biu)) / fro2(&t.channel.h_biu)).sqrt();
        worst = worst.max(d).max(c);
    }
    check(
        worst < 1e-10,
        format!("max relative error {worst:.2e} over 100 realizations"),
    )
}

fn companion_roots(monic_low_first: &[f64]) -> Vec<C64> {
    let n = monic_low_first.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for (i, c) in monic_low_first.iter().enumerate() {
        m[(i, n - 1)] = -c;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

fn matching_error(mut got: Vec<C64>, want: &[C64]) -> f64 {
    let mut worst = 0.0f64;
    for w in want {
        let (i, e) = got
            .iter()
            .map(|g| (g - w).norm())
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        worst = worst.max(e);
        got.swap_remove(i);
    }
    worst
}

fn quartic_optimizer() -> Outcome {
    let mut r = rng::single(31);
    let mut worst_gap = 0.0f64;
    let mut worst_residual = 0.0f64;
    for _ in 0..100 {
        let cfg = scenario(&mut r);
        let norms = norms_for(&cfg, &mut r);
        let obj = BetaObjective::build(&cfg, &norms).unwrap();
        let opt = optimize_beta(&obj);
        let (grid_arg, _) = grid_search(|b| obj.eval(b).ok(), 1e-9, 1.0 - 1e-9, 100_000).unwrap();
        worst_gap = worst_gap.max((opt.argmin - grid_arg).abs());
        if let Some(d) = obj.d {
            let bound = 1e-8 * d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let coeffs = [1.0, d[3], d[2], d[1], d[0]];
            for z in solve_quartic_ferrari(d).roots {
                worst_residual = worst_residual.max(horner(&coeffs, z).norm() / bound);
            }
        }
    }
    let mut oracle_gap = 0.0f64;
    for _ in 0..1000 {
        let d: [f64; 4] = std::array::from_fn(|_| r.random_range(-10.0..10.0));
        let q = solve_quartic_ferrari(d).roots.to_vec();
        oracle_gap = oracle_gap.max(matching_error(q, &companion_roots(&d)));
        let coeffs = [1.0, d[3], d[2], d[1], d[0]];
        let bound = 1e-8 * d.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for z in solve_quartic_ferrari(d).roots {
            worst_residual = worst_residual.max(horner(&coeffs, z).norm() / bound);
        }
        let c = [d[0], d[1], d[2]];
        let cubic = solve_cubic_cardano(c[2], c[1], c[0]).roots.to_vec();
        oracle_gap = oracle_gap.max(matching_error(cubic, &companion_roots(&c)));
    }
    check(
        worst_gap < 1e-3 && worst_residual < 1.0 && oracle_gap < 1e-6,
        format!(
            "max |β_opt - grid| {worst_gap:.2e}, max residual/bound {worst_residual:.2e}, companion gap {oracle_gap:.2e}"
        ),
    )
}

fn pirs_optimum() -> Outcome {
    let mut r = rng::single(41);
    let mut worst = 0.0f64;
    let mut convex = true;
    for _ in 0..100 {
        let cfg = scenario(&mut r);
        let norms = norms_for(&cfg, &mut r);
        let obj = PirsObjective::build(&cfg, &norms, cfg.beta * cfg.p_t).unwrap();
        let opt = optimize_pirs(&obj);
        // Geometric grid over 1 nW .. 1 kW.
        let (lo, hi, pts) = (-9.0f64, 3.0f64, 300_000);
        let (arg, _) = grid_search(|u| obj.eval(10f64.powf(u)).ok(), lo, hi, pts).unwrap();
        let grid_arg = 10f64.powf(arg);
        worst = worst.max((opt.argmin / grid_arg - 1.0).abs());
        let p = opt.argmin;
        let v = opt.value;
        convex &= obj.second_derivative(p) > 0.0
            && obj.eval(p * 0.99).unwrap() > v
            && obj.eval(p * 1.01).unwrap() > v;
    }
    check(
        worst < 1e-3 && convex,
        format!("max relative gap {worst:.2e}, locally convex at every optimum: {convex}"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median over seeds of (β_opt, Sum-MSE at the base β) for one size.
fn trend_point(k: usize, n: usize, seeds: &[u64]) -> (f64, f64) {
    let cfg = SystemConfig {
        k,
        n,
        ..SystemConfig::default()
    };
    let sched = PilotSchedule::build(&cfg).unwrap();
    let (mut betas, mut sums) = (Vec::new(), Vec::new());
    for &s in seeds {
        let chan = draw_channels(&cfg, &mut rng::single(s)).unwrap();
        let irs = IrsGain::new(&cfg, &chan, sched.reference_phases()).unwrap();
        let norms = ChannelNorms::compute(&chan, &sched, &irs.theta_tilde).unwrap();
        betas.push(optimize_beta(&BetaObjective::build(&cfg, &norms).unwrap()).argmin);
        sums.push(breakdown(&cfg, irs.rho, norms).unwrap().eps_sum);
    }
    (median(betas), median(sums))
}

fn trends() -> Outcome {
    let seeds: Vec<u64> = (0..11).collect();
    let (b_k8, s_k8) = trend_point(8, 16, &seeds);
    let (b_k16, s_k16) = trend_point(16, 16, &seeds);
    let (b_n64, s_n64) = trend_point(8, 64, &seeds);
    let beta_k = b_k16 <= b_k8;
    let beta_n = b_n64 <= b_k8;
    let sum_k = s_k16 > s_k8;
    let sum_n = s_n64 < s_k8;
    check(
        beta_k && beta_n && sum_k && sum_n,
        format!(
            "β_opt K 8→16: {b_k8:.6}→{b_k16:.6} [{}]; β_opt N 16→64: {b_k8:.6}→{b_n64:.6} [{}]; \
             Sum-MSE K 8→16: {s_k8:.3e}→{s_k16:.3e} [{}]; Sum-MSE N 16→64: {s_k8:.3e}→{s_n64:.3e} [{}]",
            ok(beta_k),
            ok(beta_n),
            ok(sum_k),
            ok(sum_n)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "violated"
    }
}

fn consistency_chain() -> Outcome {
    let mut r = rng::single(51);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let cfg = scenario(&mut r);
        let sched = PilotSchedule::build(&cfg).unwrap();
        let chan = draw_channels(&cfg, &mut r).unwrap();
        let irs = IrsGain::new(&cfg, &chan, sched.reference_phases()).unwrap();
        let norms = ChannelNorms::compute(&chan, &sched, &irs.theta_tilde).unwrap();
        let separate = breakdown(&cfg, irs.rho, norms).unwrap().eps_sum;
        let single = sum_mse_single_fraction(&cfg, irs.rho, &norms).unwrap();
        let rational = BetaObjective::build(&cfg, &norms)
            .unwrap()
            .eval(cfg.beta)
            .unwrap();
        let pirs = PirsObjective::build(&cfg, &norms, cfg.beta * cfg.p_t)
            .unwrap()
            .eval((1.0 - cfg.beta) * cfg.p_t)
            .unwrap();
        for v in [single, rational, pirs] {
            worst = worst.max((v / separate - 1.0).abs());
        }
    }
    check(
        worst < 1e-9,
        format!("max relative disagreement {worst:.2e} over 100 points"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = SweepSpec {
        variable: SweepVariable::Beta,
        grid: vec![0.2, 0.5, 0.8],
        trials: 200,
        base: SystemConfig {
            k: 8,
            n: 16,
            seed: 7,
            ..SystemConfig::default()
        },
        mmse: None,
        execution: Execution::Parallel,
    };
    let mut bytes = Vec::new();
    for (i, exec) in [Execution::Parallel, Execution::Parallel, Execution::Serial]
        .into_iter()
        .enumerate()
    {
        let path = dir.path().join(format!("run{i}.csv"));
        let s = SweepSpec {
            execution: exec,
            ..spec.clone()
        };
        run_sweep(&s)
            .and_then(|res| res.write(&path))
            .map_err(|e| e.to_string())?;
        bytes.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    check(
        bytes[0] == bytes[1] && bytes[0] == bytes[2],
        format!(
            "{} CSV bytes, repeated and serial runs identical: {}",
            bytes[0].len(),
            bytes.windows(2).all(|w| w[0] == w[1])
        ),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("closed-form vs Monte Carlo", closed_form_vs_monte_carlo),
        ("noiseless exactness", noiseless_exactness),
        ("quartic optimizer", quartic_optimizer),
        ("P_IRS optimum", pirs_optimum),
        ("trend reproduction", trends),
        ("objective consistency chain", consistency_chain),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
