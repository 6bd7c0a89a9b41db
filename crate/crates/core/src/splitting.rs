//! Bregman Peaceman-Rachford, Douglas-Rachford and forward-backward drivers.

use crate::metric::QuadraticMetric;
use crate::operators::{check_alpha, d_forward, d_resolvent, ConvexOracle};
use crate::vector::{check_len, distance, reflect};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Averaging weight, Douglas-Rachford only.
    pub alpha: Option<f64>,
    /// Stop once `‖zᵗ⁺¹ − zᵗ‖ ≤ stop_tolerance`; 0 runs all iterations.
    pub stop_tolerance: f64,
    pub record_trace: bool,
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 1000,
            alpha: None,
            stop_tolerance: 0.0,
            record_trace: true,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn with_iterations(max_iterations: usize) -> Self {
        SolverConfig {
            max_iterations,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    /// `‖zᵗ − zᵗ⁻¹‖₂`, zero at `t = 0`.
    pub z_change: f64,
    pub distance: Option<f64>,
    pub iterate: Option<Vec<f64>>,
}

/// One record per iterate, starting with the initial point at `t = 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn distances(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.distance).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    /// Last resolvent output `w`.
    pub w: Vec<f64>,
    /// Last fixed-point variable (`z`, or `w` for forward-backward).
    pub z: Vec<f64>,
    pub iterations: usize,
    pub trace: Trace,
}

/// `‖zᵗ − z*‖₂` for each stored iterate.
pub fn attach_reference(trace: &Trace, z_star: &[f64]) -> Result<Trace> {
    with_distance(trace, z_star, |d| Ok(distance(d.0, d.1)))
}

/// `‖zᵗ − z*‖_Ψ` for each stored iterate.
pub fn attach_reference_in(trace: &Trace, z_star: &[f64], metric: &QuadraticMetric) -> Result<Trace> {
    with_distance(trace, z_star, |(a, b)| metric.norm(&crate::vector::sub(a, b)))
}

fn with_distance(
    trace: &Trace,
    z_star: &[f64],
    dist: impl Fn((&[f64], &[f64])) -> Result<f64>,
) -> Result<Trace> {
    let mut out = trace.clone();
    for r in &mut out.records {
        let it = r.iterate.as_ref().ok_or(Error::MissingIterates)?;
        check_len(z_star, it.len())?;
        r.distance = Some(dist((it, z_star))?);
    }
    Ok(out)
}

fn check_dims(
    g1: &(impl ConvexOracle + ?Sized),
    g2: &(impl ConvexOracle + ?Sized),
    metric: &QuadraticMetric,
    z0: &[f64],
) -> Result<()> {
    let n = metric.order();
    for d in [g1.dimension(), g2.dimension()] {
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, found: d });
        }
    }
    check_len(z0, n)
}

/// Runs `z ← step(z)`; `step` returns the new `z` and the resolvent output.
fn drive(
    z0: &[f64],
    config: &SolverConfig,
    mut step: impl FnMut(&[f64]) -> Result<(Vec<f64>, Vec<f64>)>,
) -> Result<SolverOutput> {
    if config.max_iterations == 0 {
        return Err(Error::EmptyRun);
    }
    let mut trace = Trace::default();
    let push = |trace: &mut Trace, t: usize, change: f64, z: &[f64]| {
        if config.record_trace {
            trace.records.push(TraceRecord {
                t,
                z_change: change,
                distance: None,
                iterate: config.record_iterates.then(|| z.to_vec()),
            });
        }
    };
    push(&mut trace, 0, 0.0, z0);
    let mut z = z0.to_vec();
    let mut w = z0.to_vec();
    let mut iterations = 0;
    for t in 1..=config.max_iterations {
        let (z_new, w_new) = step(&z)?;
        let change = distance(&z_new, &z);
        z = z_new;
        w = w_new;
        iterations = t;
        push(&mut trace, t, change, &z);
        if config.stop_tolerance > 0.0 && change <= config.stop_tolerance {
            log::debug!("stopped at t={t}, change {change:e}");
            break;
        }
    }
    Ok(SolverOutput {
        w,
        z,
        iterations,
        trace,
    })
}

/// `w = R₁z, x = 2w − z, y = R₂x, z⁺ = 2y − x`.
pub fn solve_peaceman_rachford(
    g1: &(impl ConvexOracle + ?Sized),
    g2: &(impl ConvexOracle + ?Sized),
    metric: &QuadraticMetric,
    z0: &[f64],
    config: &SolverConfig,
) -> Result<SolverOutput> {
    check_dims(g1, g2, metric, z0)?;
    drive(z0, config, |z| {
        let w = d_resolvent(g1, metric, z)?;
        let x = reflect(&w, z);
        let y = d_resolvent(g2, metric, &x)?;
        Ok((reflect(&y, &x), w))
    })
}

/// As Peaceman-Rachford but `z⁺ = z + 2α(y − w)`.
pub fn solve_douglas_rachford(
    g1: &(impl ConvexOracle + ?Sized),
    g2: &(impl ConvexOracle + ?Sized),
    metric: &QuadraticMetric,
    z0: &[f64],
    config: &SolverConfig,
) -> Result<SolverOutput> {
    let alpha = config.alpha.ok_or(Error::MissingAlpha)?;
    check_alpha(alpha)?;
    check_dims(g1, g2, metric, z0)?;
    drive(z0, config, |z| {
        let w = d_resolvent(g1, metric, z)?;
        let x = reflect(&w, z);
        let y = d_resolvent(g2, metric, &x)?;
        let z_new = z
            .iter()
            .zip(y.iter().zip(&w))
            .map(|(zi, (yi, wi))| zi + 2.0 * alpha * (yi - wi))
            .collect();
        Ok((z_new, w))
    })
}

/// `w⁺ = R₂F₁(w)`.
pub fn solve_forward_backward(
    g1: &(impl ConvexOracle + ?Sized),
    g2: &(impl ConvexOracle + ?Sized),
    metric: &QuadraticMetric,
    w0: &[f64],
    config: &SolverConfig,
) -> Result<SolverOutput> {
    check_dims(g1, g2, metric, w0)?;
    drive(w0, config, |w| {
        let f = d_forward(g1, metric, w)?;
        let w_new = d_resolvent(g2, metric, &f)?;
        Ok((w_new.clone(), w_new))
    })
}
