use std::path::{Path, PathBuf};

use bmos::rates::{Method, RateModel, SigmaPair};
use bmos::tvdenoise::{
    build_psi, make_difference_operator, settle_iteration, solve_tv, solve_tv_stopping, tv_sigmas,
    GroundTruth, TvMethod, TvOutput, TvProblem,
};

use crate::config::{ExperimentConfig, MethodName, MetricName};
use crate::error::CliError;
use crate::files::{fmt_f64, read_column, write_column, write_trace, TraceTable};

pub const U_GT_FILE: &str = "u_gt.txt";
pub const SIGNAL_FILE: &str = "signal.txt";
pub const U_FINAL_FILE: &str = "u_final.txt";

const VARIANT_METHODS: [MethodName; 2] = [MethodName::Bpr, MethodName::Bdr];
const VARIANT_METRICS: [MetricName; 3] = [MetricName::Newton, MetricName::Agd, MetricName::Gd];

fn ground_truth(cfg: &ExperimentConfig) -> Result<GroundTruth, CliError> {
    let p = &cfg.problem;
    Ok(GroundTruth::generate(p.m, p.segments, (p.level_lo, p.level_hi), p.noise_sigma, p.seed)?)
}

fn build_problem(cfg: &ExperimentConfig, signal: Vec<f64>) -> Result<TvProblem, CliError> {
    let phi = make_difference_operator(signal.len(), cfg.problem.stencil)?;
    Ok(TvProblem::new(signal, phi, cfg.problem.mu, cfg.problem.theta)?)
}

fn report_path(cfg: &ExperimentConfig, out: &Path, stem: &str) -> PathBuf {
    out.join(format!("{stem}.{}", cfg.output.format.as_str()))
}

/// Writes the clean signal and its noisy observation.
pub fn generate(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let gt = ground_truth(cfg)?;
    let s = gt.observe()?;
    write_column(&out.join(U_GT_FILE), &gt.u_gt)?;
    write_column(&out.join(SIGNAL_FILE), &s)?;
    println!("wrote {} samples to {} and {}", s.len(), U_GT_FILE, SIGNAL_FILE);
    Ok(())
}

fn read_sized(path: &Path, m: usize) -> Result<Vec<f64>, CliError> {
    let v = read_column(path)?;
    if v.len() != m {
        return Err(CliError::Config {
            key: "problem.m".into(),
            message: format!("{} holds {} values, config expects {m}", path.display(), v.len()),
        });
    }
    Ok(v)
}

/// Runs the configured method and metric on a signal file.
///
/// The ground truth defaults to `u_gt.txt` next to the outputs when that file exists.
pub fn denoise(
    cfg: &ExperimentConfig,
    out: &Path,
    signal: Option<&Path>,
    truth: Option<&Path>,
) -> Result<(), CliError> {
    let m = cfg.problem.m;
    let signal_path = signal.map_or_else(|| out.join(SIGNAL_FILE), Path::to_path_buf);
    let s = read_sized(&signal_path, m)?;
    let truth_path = truth
        .map(Path::to_path_buf)
        .or_else(|| Some(out.join(U_GT_FILE)).filter(|p| p.exists()));
    let u_gt = truth_path.as_deref().map(|p| read_sized(p, m)).transpose()?;

    let problem = build_problem(cfg, s)?;
    let metric = build_psi(&problem, cfg.psi_design(cfg.solver.metric)?)?;
    log::info!("denoise: m={m} method={} metric={}", cfg.solver.method.as_str(), cfg.solver.metric.as_str());
    let run = solve_tv_stopping(
        &problem,
        &metric,
        cfg.tv_method()?,
        cfg.solver.iterations,
        cfg.solver.stop_tolerance,
        u_gt.as_deref(),
    )?;

    write_trace(
        &out.join(&cfg.output.trace),
        cfg.output.format,
        &[TraceTable { variant: None, records: &run.trace }],
    )?;
    write_column(&out.join(U_FINAL_FILE), &run.u)?;
    let last = run.trace.last().expect("trace has a t=0 row");
    match last.error {
        Some(e) => println!("{} iterations, final error {}", last.t, fmt_f64(e)),
        None => println!("{} iterations, final z change {}", last.t, fmt_f64(last.z_change)),
    }
    Ok(())
}

struct Variant {
    name: String,
    method: Method,
    tv: TvMethod,
    metric: MetricName,
}

fn variants(cfg: &ExperimentConfig) -> Result<Vec<Variant>, CliError> {
    let alpha = cfg.require_alpha()?;
    cfg.require_kappa()?;
    let mut v = Vec::new();
    for method in VARIANT_METHODS {
        for metric in VARIANT_METRICS {
            let (m, tv) = match method {
                MethodName::Bdr => (Method::DouglasRachford, TvMethod::Bdr { alpha }),
                _ => (Method::PeacemanRachford, TvMethod::Bpr),
            };
            v.push(Variant { name: format!("{}-{}", method.as_str(), metric.as_str()), method: m, tv, metric });
        }
    }
    Ok(v)
}

/// Runs `f` once per variant on its own thread, results in variant order.
fn run_all<T: Send>(
    vars: &[Variant],
    f: impl Fn(&Variant) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = vars.iter().map(|v| scope.spawn(|| f(v))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("variant thread panicked"))
            .collect()
    })
}

/// The six {bpr, bdr} × {newton, agd, gd} variants on one generated dataset.
pub fn compare(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let vars = variants(cfg)?;
    let gt = ground_truth(cfg)?;
    let problem = build_problem(cfg, gt.observe()?)?;
    let runs: Vec<TvOutput> = run_all(&vars, |v| {
        let metric = build_psi(&problem, cfg.psi_design(v.metric)?)?;
        log::info!("compare: starting {}", v.name);
        Ok(solve_tv(&problem, &metric, v.tv, cfg.solver.iterations, Some(&gt.u_gt))?)
    })?;

    let tables: Vec<TraceTable> = vars
        .iter()
        .zip(&runs)
        .map(|(v, r)| TraceTable { variant: Some(&v.name), records: &r.trace })
        .collect();
    write_trace(&report_path(cfg, out, "compare"), cfg.output.format, &tables)?;

    println!("{:<12} {:>24} {:>8}", "variant", "final error", "t(1%)");
    for (v, r) in vars.iter().zip(&runs) {
        let e: Vec<f64> = r.trace.iter().filter_map(|x| x.error).collect();
        println!("{:<12} {:>24} {:>8}", v.name, fmt_f64(*e.last().unwrap_or(&f64::NAN)), settle_iteration(&e, 0.01));
    }
    Ok(())
}

struct RateRow {
    full: SigmaPair,
    data: SigmaPair,
    reg: SigmaPair,
    model: f64,
    certified: f64,
    measured_mean: f64,
    measured_max: f64,
}

/// Predicted factors per variant next to the contraction of a short live run.
///
/// `G1` is the data term, `G2` the regularizer. `model` uses the regularizer's
/// quadratic model, `certified` its guaranteed pair `(0, σ_UB)`. The measured
/// rate is taken on successive dual changes in the metric norm.
pub fn rates(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let vars = variants(cfg)?;
    let t = cfg.solver.rate_iterations;
    if t < 2 {
        return Err(CliError::Config { key: "solver.rate_iterations".into(), message: "must be at least 2".into() });
    }
    let gt = ground_truth(cfg)?;
    let problem = build_problem(cfg, gt.observe()?)?;
    let rows = run_all(&vars, |v| {
        let metric = build_psi(&problem, cfg.psi_design(v.metric)?)?;
        let s = tv_sigmas(&problem, &metric)?;
        let alpha = cfg.solver.alpha;
        let model = RateModel::new(s.data, s.regularizer, alpha).factor(v.method)?;
        let worst = SigmaPair::new(0.0, s.regularizer.ub())?;
        let certified = RateModel::new(s.data, worst, alpha).factor(v.method)?;
        let run = solve_tv(&problem, &metric, v.tv, t, None)?;
        let d: Vec<f64> = run.trace[1..].iter().map(|r| r.z_change_metric).collect();
        let measured_mean = (d[d.len() - 1] / d[0]).powf(1.0 / (d.len() - 1) as f64);
        let measured_max = d.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        Ok(RateRow { full: s.full, data: s.data, reg: s.regularizer, model, certified, measured_mean, measured_max })
    })?;

    let sep = cfg.output.format.delimiter().to_string();
    let header = [
        "variant", "sigma_lb_1", "sigma_ub_1", "eta_1", "sigma_lb_2", "sigma_ub_2", "eta_2",
        "range_ratio", "model_factor", "certified_factor", "measured_mean", "measured_max",
        "within_certified",
    ];
    let mut text = header.join(&sep) + "\n";
    for (v, r) in vars.iter().zip(&rows) {
        let within = r.measured_mean <= r.certified + 1e-9;
        let fields = [
            v.name.clone(),
            fmt_f64(r.data.lb()),
            fmt_f64(r.data.ub()),
            fmt_f64(bmos::rates::eta(r.data)),
            fmt_f64(r.reg.lb()),
            fmt_f64(r.reg.ub()),
            fmt_f64(bmos::rates::eta(r.reg)),
            fmt_f64(r.full.range_ratio()),
            fmt_f64(r.model),
            fmt_f64(r.certified),
            fmt_f64(r.measured_mean),
            fmt_f64(r.measured_max),
            within.to_string(),
        ];
        text += &(fields.join(&sep) + "\n");
        println!(
            "{:<12} ratio {:>12.6} certified {:.6} measured {:.6} (max {:.6})",
            v.name,
            r.full.range_ratio(),
            r.certified,
            r.measured_mean,
            r.measured_max
        );
        if !within {
            log::warn!("{}: measured contraction {} above certified factor {}", v.name, r.measured_mean, r.certified);
        }
    }
    let path = report_path(cfg, out, "rates");
    std::fs::write(&path, text).map_err(CliError::io(&path))
}
