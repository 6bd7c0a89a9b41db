//! Experiment configuration: a flat `key = value` file with three sections.
//!
//! ```text
//! [problem]   m, segments, level_lo, level_hi, noise_sigma, seed, stencil, mu, theta
//! [solver]    method, metric, kappa, alpha, iterations, stop_tolerance, rate_iterations
//! [output]    trace, format
//! ```
//!
//! `#` starts a comment. Missing keys take the built-in defaults, except
//! `kappa` and `alpha`, which are absent unless written. `kappa` is required
//! when `metric = gd` and `alpha` when `method = bdr`.

use std::fmt::Write as _;
use std::str::FromStr;

use bmos::tvdenoise::{PsiDesign, Stencil, TvMethod};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodName {
    Bpr,
    Bdr,
    Bfb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricName {
    Newton,
    Agd,
    Gd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Tsv,
}

impl TraceFormat {
    pub fn delimiter(self) -> char {
        match self {
            TraceFormat::Csv => ',',
            TraceFormat::Tsv => '\t',
        }
    }
}

macro_rules! names {
    ($ty:ty { $($v:ident = $s:literal),+ }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$v => $s),+ }
            }
        }
        impl FromStr for $ty {
            type Err = ();
            fn from_str(s: &str) -> Result<Self, ()> {
                match s { $($s => Ok(Self::$v),)+ _ => Err(()) }
            }
        }
    };
}

names!(MethodName { Bpr = "bpr", Bdr = "bdr", Bfb = "bfb" });
names!(MetricName { Newton = "newton", Agd = "agd", Gd = "gd" });
names!(TraceFormat { Csv = "csv", Tsv = "tsv" });

fn stencil_name(s: Stencil) -> &'static str {
    match s {
        Stencil::Central => "central",
        Stencil::Forward => "forward",
    }
}

fn parse_stencil(s: &str) -> Result<Stencil, ()> {
    match s {
        "central" => Ok(Stencil::Central),
        "forward" => Ok(Stencil::Forward),
        _ => Err(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSection {
    pub m: usize,
    pub segments: usize,
    pub level_lo: f64,
    pub level_hi: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub stencil: Stencil,
    pub mu: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub method: MethodName,
    pub metric: MetricName,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub iterations: usize,
    pub stop_tolerance: f64,
    /// length of the short run behind the measured contraction in `rates`
    pub rate_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub trace: String,
    pub format: TraceFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemSection {
                m: 2000,
                segments: 10,
                level_lo: -3.0,
                level_hi: 3.0,
                noise_sigma: 0.5,
                seed: 42,
                stencil: Stencil::Central,
                mu: 2.0,
                theta: 1.0,
            },
            solver: SolverSection {
                method: MethodName::Bpr,
                metric: MetricName::Newton,
                kappa: Some(0.01),
                alpha: Some(0.5),
                iterations: 1000,
                stop_tolerance: 0.0,
                rate_iterations: 60,
            },
            output: OutputSection {
                trace: "trace.csv".into(),
                format: TraceFormat::Csv,
            },
        }
    }
}

fn bad(key: &str, value: &str, reason: &str) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: format!("invalid value {value:?}: {reason}"),
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, "not a number"))
}

fn pick<T: FromStr>(key: &str, value: &str, allowed: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, &format!("expected one of {allowed}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = ExperimentConfig::default();
        c.solver.kappa = None;
        c.solver.alpha = None;
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !matches!(section.as_str(), "problem" | "solver" | "output") {
                    return Err(CliError::Config {
                        key: format!("[{section}]"),
                        message: format!("unknown section on line {}", n + 1),
                    });
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config {
                    key: line.to_string(),
                    message: format!("expected key = value on line {}", n + 1),
                });
            };
            c.set(&section, key.trim(), value.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<(), CliError> {
        let p = &mut self.problem;
        let s = &mut self.solver;
        let o = &mut self.output;
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        let k = full.as_str();
        match (section, key) {
            ("problem", "m") => p.m = num(k, v)?,
            ("problem", "segments") => p.segments = num(k, v)?,
            ("problem", "level_lo") => p.level_lo = num(k, v)?,
            ("problem", "level_hi") => p.level_hi = num(k, v)?,
            ("problem", "noise_sigma") => p.noise_sigma = num(k, v)?,
            ("problem", "seed") => p.seed = num(k, v)?,
            ("problem", "stencil") => {
                p.stencil = parse_stencil(v).map_err(|_| bad(k, v, "expected central or forward"))?
            }
            ("problem", "mu") => p.mu = num(k, v)?,
            ("problem", "theta") => p.theta = num(k, v)?,
            ("solver", "method") => s.method = pick(k, v, "bpr, bdr, bfb")?,
            ("solver", "metric") => s.metric = pick(k, v, "newton, agd, gd")?,
            ("solver", "kappa") => s.kappa = Some(num(k, v)?),
            ("solver", "alpha") => s.alpha = Some(num(k, v)?),
            ("solver", "iterations") => s.iterations = num(k, v)?,
            ("solver", "stop_tolerance") => s.stop_tolerance = num(k, v)?,
            ("solver", "rate_iterations") => s.rate_iterations = num(k, v)?,
            ("output", "trace") => o.trace = v.to_string(),
            ("output", "format") => o.format = pick(k, v, "csv, tsv")?,
            _ => return Err(CliError::Config { key: full, message: "unknown key".into() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.solver;
        if s.metric == MetricName::Gd && s.kappa.is_none() {
            return Err(CliError::Config { key: "solver.kappa".into(), message: "required when metric = gd".into() });
        }
        if s.method == MethodName::Bdr && s.alpha.is_none() {
            return Err(CliError::Config { key: "solver.alpha".into(), message: "required when method = bdr".into() });
        }
        let p = &self.problem;
        if !(p.level_lo < p.level_hi) {
            return Err(CliError::Config { key: "problem.level_hi".into(), message: "must exceed level_lo".into() });
        }
        Ok(())
    }

    /// Text form that [`ExperimentConfig::parse`] maps back to `self`.
    pub fn to_text(&self) -> String {
        let (p, s, o) = (&self.problem, &self.solver, &self.output);
        let mut t = String::new();
        let _ = writeln!(t, "[problem]");
        let _ = writeln!(t, "m = {}", p.m);
        let _ = writeln!(t, "segments = {}", p.segments);
        let _ = writeln!(t, "level_lo = {:?}", p.level_lo);
        let _ = writeln!(t, "level_hi = {:?}", p.level_hi);
        let _ = writeln!(t, "noise_sigma = {:?}", p.noise_sigma);
        let _ = writeln!(t, "seed = {}", p.seed);
        let _ = writeln!(t, "stencil = {}", stencil_name(p.stencil));
        let _ = writeln!(t, "mu = {:?}", p.mu);
        let _ = writeln!(t, "theta = {:?}", p.theta);
        let _ = writeln!(t, "\n[solver]");
        let _ = writeln!(t, "method = {}", s.method.as_str());
        let _ = writeln!(t, "metric = {}", s.metric.as_str());
        if let Some(k) = s.kappa {
            let _ = writeln!(t, "kappa = {k:?}");
        }
        if let Some(a) = s.alpha {
            let _ = writeln!(t, "alpha = {a:?}");
        }
        let _ = writeln!(t, "iterations = {}", s.iterations);
        let _ = writeln!(t, "stop_tolerance = {:?}", s.stop_tolerance);
        let _ = writeln!(t, "rate_iterations = {}", s.rate_iterations);
        let _ = writeln!(t, "\n[output]");
        let _ = writeln!(t, "trace = {}", o.trace);
        let _ = writeln!(t, "format = {}", o.format.as_str());
        t
    }

    pub fn tv_method(&self) -> Result<TvMethod, CliError> {
        Ok(match self.solver.method {
            MethodName::Bpr => TvMethod::Bpr,
            MethodName::Bfb => TvMethod::Bfb,
            MethodName::Bdr => TvMethod::Bdr { alpha: self.require_alpha()? },
        })
    }

    pub fn psi_design(&self, metric: MetricName) -> Result<PsiDesign, CliError> {
        Ok(match metric {
            MetricName::Newton => PsiDesign::Newton,
            MetricName::Agd => PsiDesign::Agd,
            MetricName::Gd => PsiDesign::Gd { kappa: self.require_kappa()? },
        })
    }

    pub fn require_kappa(&self) -> Result<f64, CliError> {
        self.solver.kappa.ok_or_else(|| CliError::Config {
            key: "solver.kappa".into(),
            message: "required for the gd metric".into(),
        })
    }

    pub fn require_alpha(&self) -> Result<f64, CliError> {
        self.solver.alpha.ok_or_else(|| CliError::Config {
            key: "solver.alpha".into(),
            message: "required for bdr".into(),
        })
    }
}
