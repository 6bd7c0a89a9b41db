//! 1-D total-variation denoising through its dual.
//!
//! Primal: `min_u ½‖s − u‖² + μ(θ/2‖Φu‖² + ‖Φu‖₁)`. The splitting runs on the
//! transformed dual variable `z̃`; each iteration does a closed-form `u`-update,
//! a reflection, a soft-threshold `v`-update and the P-R / D-R / F-B recombination.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::linalg::{extreme_generalized_eigenvalues, BandedOperator, SpdFactorization, SymMatrix};
use crate::metric::{design_agd, design_gd, design_newton, QuadraticMetric};
use crate::operators::{check_alpha, soft_threshold};
use crate::rates::SigmaPair;
use crate::vector::{check_len, distance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// `[Φu]_i = u_{i−1} − u_{i+1}`
    Central,
    /// `[Φu]_i = u_i − u_{i+1}`
    #[default]
    Forward,
}

pub fn make_difference_operator(m: usize, stencil: Stencil) -> Result<BandedOperator> {
    if m < 2 {
        return Err(Error::DimensionTooSmall(m));
    }
    let taps = match stencil {
        Stencil::Central => vec![(-1, 1.0), (1, -1.0)],
        Stencil::Forward => vec![(0, 1.0), (1, -1.0)],
    };
    BandedOperator::new(m, taps)
}

#[derive(Debug, Clone)]
pub struct TvProblem {
    s: Vec<f64>,
    phi: BandedOperator,
    mu: f64,
    theta: f64,
}

impl TvProblem {
    pub fn new(s: Vec<f64>, phi: BandedOperator, mu: f64, theta: f64) -> Result<Self> {
        check_len(&s, phi.order())?;
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter { name: "mu", value: mu });
        }
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidParameter { name: "theta", value: theta });
        }
        Ok(TvProblem { s, phi, mu, theta })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn signal(&self) -> &[f64] {
        &self.s
    }

    pub fn phi(&self) -> &BandedOperator {
        &self.phi
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `(1/(μθ)) I + ΦΦᵀ`, the Hessian of the smooth dual model.
    pub fn dual_hessian(&self) -> SymMatrix {
        let mut h = self.phi.gram_outer();
        h.add_diagonal(1.0 / (self.mu * self.theta));
        h
    }

    pub fn objective(&self, u: &[f64]) -> Result<f64> {
        check_len(u, self.len())?;
        let d = self.phi.mul(u);
        let fit = 0.5 * distance(&self.s, u).powi(2);
        let reg: f64 = d.iter().map(|x| 0.5 * self.theta * x * x + x.abs()).sum();
        Ok(fit + self.mu * reg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiDesign {
    Newton,
    Agd,
    Gd { kappa: f64 },
}

pub fn build_psi(problem: &TvProblem, design: PsiDesign) -> Result<QuadraticMetric> {
    match design {
        PsiDesign::Newton => design_newton(&problem.dual_hessian()),
        PsiDesign::Agd => design_agd(&problem.dual_hessian()),
        PsiDesign::Gd { kappa } => design_gd(problem.len(), kappa),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TvMethod {
    Bpr,
    Bdr { alpha: f64 },
    /// Forward step on the data term, backward step on the regularizer.
    Bfb,
}

enum USystem {
    /// factor of `I + ΦᵀΨ⁻¹Φ` (Ψ diagonal)
    Direct(SpdFactorization),
    /// factor of `Ψ + ΦΦᵀ`, applied through `(I + ΦᵀΨ⁻¹Φ)⁻¹ = I − Φᵀ(Ψ + ΦΦᵀ)⁻¹Φ`
    Woodbury(SpdFactorization),
}

/// Factorizations reused across iterations of one problem/metric pair.
pub struct TvKernel<'a> {
    problem: &'a TvProblem,
    metric: &'a QuadraticMetric,
    u_sys: USystem,
    /// factor of `I + μθΨ` when Ψ is not diagonal
    v_sys: Option<SpdFactorization>,
}

impl<'a> TvKernel<'a> {
    pub fn new(problem: &'a TvProblem, metric: &'a QuadraticMetric) -> Result<Self> {
        let m = problem.len();
        if metric.order() != m {
            return Err(Error::DimensionMismatch { expected: m, found: metric.order() });
        }
        let phi = &problem.phi;
        let (u_sys, v_sys) = if let Some(d) = metric.diagonal() {
            let w: Vec<f64> = match metric.kappa() {
                Some(k) => vec![k; m],
                None => d.iter().map(|p| 1.0 / p).collect(),
            };
            let mut a = phi.gram_inner_weighted(&w)?;
            a.add_diagonal(1.0);
            (USystem::Direct(a.factorize()?), None)
        } else {
            let psi = metric.psi();
            let w = SymMatrix::combine(1.0, &psi, 1.0, &phi.gram_outer())?;
            let mut v = psi.scaled(problem.mu * problem.theta);
            v.add_diagonal(1.0);
            (USystem::Woodbury(w.factorize()?), Some(v.factorize()?))
        };
        Ok(TvKernel { problem, metric, u_sys, v_sys })
    }

    /// `u = (I + ΦᵀΨ⁻¹Φ)⁻¹ (s + ΦᵀΨ⁻¹z̃)`.
    pub fn update_u(&self, z_tilde: &[f64]) -> Result<Vec<f64>> {
        check_len(z_tilde, self.problem.len())?;
        let phi = &self.problem.phi;
        let mut r = phi.mul_t(&self.metric.psi_solve(z_tilde));
        for (ri, si) in r.iter_mut().zip(&self.problem.s) {
            *ri += si;
        }
        Ok(match &self.u_sys {
            USystem::Direct(f) => f.solve_unchecked(&r),
            USystem::Woodbury(f) => {
                let c = phi.mul_t(&f.solve_unchecked(&phi.mul(&r)));
                r.iter().zip(&c).map(|(a, b)| a - b).collect()
            }
        })
    }

    /// `v = −(I + μθΨ)⁻¹ Ψ soft(Ψ⁻¹x̃, μ)`, zeroed where `|Ψ⁻¹x̃| ≤ μ`.
    ///
    /// Exact prox of the regularizer when Ψ is diagonal.
    pub fn update_v(&self, x_tilde: &[f64]) -> Result<Vec<f64>> {
        check_len(x_tilde, self.problem.len())?;
        let (mu, mt) = (self.problem.mu, self.problem.mu * self.problem.theta);
        let a = self.metric.psi_solve(x_tilde);
        let soft: Vec<f64> = a.iter().map(|&ai| soft_threshold(ai, mu)).collect();
        if let Some(k) = self.metric.kappa() {
            return Ok(soft.iter().map(|r| -r / (k + mt)).collect());
        }
        if let Some(d) = self.metric.diagonal() {
            return Ok(soft
                .iter()
                .zip(&d)
                .map(|(r, p)| -(p * r) / (1.0 + mt * p))
                .collect());
        }
        let f = self.v_sys.as_ref().expect("general metric has a v factor");
        let mut v = f.solve_unchecked(&self.metric.psi_mul(&soft));
        for (vi, ai) in v.iter_mut().zip(&a) {
            *vi = if ai.abs() <= mu { 0.0 } else { -*vi };
        }
        Ok(v)
    }
}

pub fn update_u(problem: &TvProblem, metric: &QuadraticMetric, z_tilde: &[f64]) -> Result<Vec<f64>> {
    TvKernel::new(problem, metric)?.update_u(z_tilde)
}

pub fn update_v(problem: &TvProblem, metric: &QuadraticMetric, x_tilde: &[f64]) -> Result<Vec<f64>> {
    TvKernel::new(problem, metric)?.update_v(x_tilde)
}

/// Norm of `(u − s) + ΦᵀΨ⁻¹(Φu − z̃)`, the gradient of the u-subproblem.
pub fn u_update_residual(
    problem: &TvProblem,
    metric: &QuadraticMetric,
    z_tilde: &[f64],
    u: &[f64],
) -> Result<f64> {
    check_len(z_tilde, problem.len())?;
    check_len(u, problem.len())?;
    let d: Vec<f64> = problem.phi.mul(u).iter().zip(z_tilde).map(|(a, b)| a - b).collect();
    let g = problem.phi.mul_t(&metric.grad_d_inv(&d)?);
    Ok(u.iter()
        .zip(&problem.s)
        .zip(&g)
        .map(|((ui, si), gi)| (ui - si + gi).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Largest per-element violation of `0 ∈ μ(θv + ∂|v|) + ψ⁻¹(v + x̃)` for diagonal Ψ.
pub fn v_update_residual(
    problem: &TvProblem,
    metric: &QuadraticMetric,
    x_tilde: &[f64],
    v: &[f64],
) -> Result<f64> {
    let d = metric
        .diagonal()
        .ok_or(Error::Unsupported("per-element residual needs a diagonal metric"))?;
    check_len(x_tilde, problem.len())?;
    check_len(v, problem.len())?;
    let (mu, th) = (problem.mu, problem.theta);
    Ok(v.iter()
        .zip(x_tilde)
        .zip(&d)
        .map(|((&vi, &xi), &p)| {
            let g = mu * th * vi + (vi + xi) / p;
            if vi != 0.0 {
                (g + mu * vi.signum()).abs()
            } else {
                (g.abs() - mu).max(0.0)
            }
        })
        .fold(0.0, f64::max))
}

/// Exact minimizer of `μ(θ/2‖v‖² + ‖v‖₁) + ½⟨Ψ⁻¹(v + x̃), v + x̃⟩` by coordinate descent.
///
/// Forms Ψ⁻¹ densely, so only for small `m`.
pub fn coupled_v_prox(problem: &TvProblem, metric: &QuadraticMetric, x_tilde: &[f64]) -> Result<Vec<f64>> {
    let m = problem.len();
    check_len(x_tilde, m)?;
    let (mu, mt) = (problem.mu, problem.mu * problem.theta);
    let mut q = vec![vec![0.0; m]; m];
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        let col = metric.grad_d_inv(&e)?;
        for i in 0..m {
            q[i][j] = col[i];
        }
    }
    let lin = metric.grad_d_inv(x_tilde)?;
    let mut v = vec![0.0; m];
    for sweep in 0..200_000 {
        let mut delta: f64 = 0.0;
        for i in 0..m {
            let off: f64 = (0..m).filter(|&j| j != i).map(|j| q[i][j] * v[j]).sum();
            let c = lin[i] + off;
            let new = -soft_threshold(c, mu) / (q[i][i] + mt);
            delta = delta.max((new - v[i]).abs());
            v[i] = new;
        }
        if delta <= 1e-15 {
            log::debug!("coupled prox converged after {sweep} sweeps");
            return Ok(v);
        }
    }
    Err(Error::NoConvergence { iterations: 200_000 })
}

/// Max-abs gap between [`update_v`] and [`coupled_v_prox`]. Zero for diagonal Ψ.
pub fn v_update_deviation(problem: &TvProblem, metric: &QuadraticMetric, x_tilde: &[f64]) -> Result<f64> {
    let a = update_v(problem, metric, x_tilde)?;
    let b = coupled_v_prox(problem, metric, x_tilde)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvRecord {
    pub t: usize,
    /// `½‖u_GT − uᵗ‖²` when ground truth was supplied.
    pub error: Option<f64>,
    /// `‖z̃ᵗ − z̃ᵗ⁻¹‖₂`
    pub z_change: f64,
    /// `‖z̃ᵗ − z̃ᵗ⁻¹‖_{Ψ⁻¹}`, the metric norm of the underlying dual iterate.
    pub z_change_metric: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TvOutput {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub z_tilde: Vec<f64>,
    /// `t = 0` holds the observation itself (`u⁰ = s`), then one row per iteration.
    pub trace: Vec<TvRecord>,
}

pub fn squared_error(u_gt: &[f64], u: &[f64]) -> f64 {
    0.5 * distance(u_gt, u).powi(2)
}

/// Runs `iterations` steps from `z̃⁰ = 0`.
pub fn solve_tv(
    problem: &TvProblem,
    metric: &QuadraticMetric,
    method: TvMethod,
    iterations: usize,
    ground_truth: Option<&[f64]>,
) -> Result<TvOutput> {
    solve_tv_stopping(problem, metric, method, iterations, 0.0, ground_truth)
}

/// As [`solve_tv`], stopping early once `‖z̃ᵗ − z̃ᵗ⁻¹‖₂ ≤ stop_tolerance` (when positive).
pub fn solve_tv_stopping(
    problem: &TvProblem,
    metric: &QuadraticMetric,
    method: TvMethod,
    iterations: usize,
    stop_tolerance: f64,
    ground_truth: Option<&[f64]>,
) -> Result<TvOutput> {
    if !(stop_tolerance >= 0.0) {
        return Err(Error::InvalidParameter { name: "stop_tolerance", value: stop_tolerance });
    }
    if iterations == 0 {
        return Err(Error::EmptyRun);
    }
    if let TvMethod::Bdr { alpha } = method {
        check_alpha(alpha)?;
    }
    if let Some(gt) = ground_truth {
        check_len(gt, problem.len())?;
    }
    let kernel = TvKernel::new(problem, metric)?;
    let phi = &problem.phi;
    let m = problem.len();
    let start = Instant::now();
    let err = |u: &[f64]| ground_truth.map(|gt| squared_error(gt, u));

    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(TvRecord {
        t: 0,
        error: err(&problem.s),
        z_change: 0.0,
        z_change_metric: 0.0,
        seconds: 0.0,
    });
    let mut z = vec![0.0; m];
    let mut u = problem.s.clone();
    let mut v = vec![0.0; m];
    for t in 1..=iterations {
        let z_new: Vec<f64> = match method {
            TvMethod::Bpr | TvMethod::Bdr { .. } => {
                u = kernel.update_u(&z)?;
                let pu = phi.mul(&u);
                let x: Vec<f64> = z.iter().zip(&pu).map(|(zi, p)| zi - 2.0 * p).collect();
                v = kernel.update_v(&x)?;
                match method {
                    TvMethod::Bdr { alpha } => z
                        .iter()
                        .zip(pu.iter().zip(&v))
                        .map(|(zi, (p, vi))| zi - 2.0 * alpha * (p - vi))
                        .collect(),
                    _ => x.iter().zip(&v).map(|(xi, vi)| xi + 2.0 * vi).collect(),
                }
            }
            TvMethod::Bfb => {
                u = phi.mul_t(&metric.psi_solve(&z));
                for (ui, si) in u.iter_mut().zip(&problem.s) {
                    *ui += si;
                }
                let pu = phi.mul(&u);
                let x: Vec<f64> = z.iter().zip(&pu).map(|(zi, p)| zi - p).collect();
                v = kernel.update_v(&x)?;
                x.iter().zip(&v).map(|(xi, vi)| xi + vi).collect()
            }
        };
        let dz = crate::vector::sub(&z_new, &z);
        let z_change = crate::vector::norm2(&dz);
        let z_change_metric = crate::vector::dot(&dz, &metric.psi_solve(&dz)).max(0.0).sqrt();
        z = z_new;
        if !z_change.is_finite() {
            return Err(Error::ProxDiverged);
        }
        trace.push(TvRecord {
            t,
            error: err(&u),
            z_change,
            z_change_metric,
            seconds: start.elapsed().as_secs_f64(),
        });
        if z_change <= stop_tolerance {
            break;
        }
    }
    Ok(TvOutput { u, v, z_tilde: z, trace })
}

/// First `t` after which every error stays within `rel · E_final` of the final error.
pub fn settle_iteration(errors: &[f64], rel: f64) -> usize {
    let Some(&last) = errors.last() else { return 0 };
    let tol = rel * last.abs();
    errors
        .iter()
        .rposition(|e| (e - last).abs() > tol)
        .map_or(0, |i| i + 1)
}

/// σ pairs of the dual pieces against Ψ: the data term `ΦΦᵀ`, the
/// regularizer's quadratic model `(1/(μθ)) I`, and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvSigmas {
    pub data: SigmaPair,
    pub regularizer: SigmaPair,
    pub full: SigmaPair,
}

pub fn tv_sigmas(problem: &TvProblem, metric: &QuadraticMetric) -> Result<TvSigmas> {
    let psi = metric.psi();
    let pair = |a: &SymMatrix| -> Result<SigmaPair> {
        let (lo, hi) = extreme_generalized_eigenvalues(a, &psi)?;
        let lo = lo.max(0.0);
        SigmaPair::new(lo, hi.max(lo))
    };
    let reg = SymMatrix::scaled_identity(problem.len(), 1.0 / (problem.mu * problem.theta));
    Ok(TvSigmas {
        data: pair(&problem.phi.gram_outer())?,
        regularizer: pair(&reg)?,
        full: pair(&problem.dual_hessian())?,
    })
}

/// Piecewise-constant signal with `segments` blocks, cut points and levels drawn from `seed`.
pub fn generate_piecewise_signal(
    m: usize,
    segments: usize,
    level_range: (f64, f64),
    seed: u64,
) -> Result<Vec<f64>> {
    if segments > m {
        return Err(Error::SegmentsExceedLength { segments, m });
    }
    if segments == 0 {
        return Err(Error::InvalidParameter { name: "segments", value: 0.0 });
    }
    let (lo, hi) = level_range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter { name: "level_range", value: hi - lo });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts: Vec<usize> = rand::seq::index::sample(&mut rng, m - 1, segments - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    cuts.push(m);

    let mut out = Vec::with_capacity(m);
    let mut prev = f64::NAN;
    let mut begin = 0;
    for end in cuts {
        let mut level = rng.random_range(lo..hi);
        while level == prev {
            level = rng.random_range(lo..hi);
        }
        out.resize(out.len() + (end - begin), level);
        prev = level;
        begin = end;
    }
    Ok(out)
}

/// `u_gt + e` with `e ~ N(0, sigma²)` i.i.d.
pub fn add_noise(u_gt: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter { name: "sigma", value: sigma });
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| Error::InvalidParameter { name: "sigma", value: sigma })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(u_gt.iter().map(|u| u + normal.sample(&mut rng)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub u_gt: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

// keeps the noise stream apart from the signal stream under one user seed
const NOISE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

impl GroundTruth {
    pub fn generate(
        m: usize,
        segments: usize,
        level_range: (f64, f64),
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        Ok(GroundTruth {
            u_gt: generate_piecewise_signal(m, segments, level_range, seed)?,
            noise_sigma,
            seed,
        })
    }

    /// The noisy observation `s`.
    pub fn observe(&self) -> Result<Vec<f64>> {
        add_noise(&self.u_gt, self.noise_sigma, self.seed ^ NOISE_SALT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn problem(s: Vec<f64>, stencil: Stencil) -> TvProblem {
        let m = s.len();
        TvProblem::new(s, make_difference_operator(m, stencil).unwrap(), 2.0, 1.0).unwrap()
    }

    fn designs() -> [PsiDesign; 3] {
        [PsiDesign::Newton, PsiDesign::Agd, PsiDesign::Gd { kappa: 0.01 }]
    }

    #[test]
    fn stencil_examples() {
        let c = make_difference_operator(3, Stencil::Central).unwrap();
        assert_eq!(c.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![-2.0, -2.0, 2.0]);
        let f = make_difference_operator(3, Stencil::Forward).unwrap();
        assert_eq!(f.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![-1.0, -1.0, 3.0]);
        assert_eq!(f.apply(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(make_difference_operator(1, Stencil::Forward), Err(Error::DimensionTooSmall(1)));
    }

    #[test]
    fn central_stencil_annihilates_alternating_pattern() {
        let c = make_difference_operator(5, Stencil::Central).unwrap();
        // u = (1, 0, 1, 0, 1): neighbors of every entry sum symmetrically
        assert_eq!(c.apply(&[1.0, 0.0, 1.0, 0.0, 1.0]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn problem_validation() {
        let phi = make_difference_operator(3, Stencil::Forward).unwrap();
        assert!(TvProblem::new(vec![0.0; 3], phi.clone(), 0.0, 1.0).is_err());
        assert!(TvProblem::new(vec![0.0; 3], phi.clone(), 1.0, -1.0).is_err());
        assert!(TvProblem::new(vec![0.0; 2], phi, 1.0, 1.0).is_err());
    }

    #[test]
    fn psi_designs() {
        let p = problem(vec![0.0; 4], Stencil::Central);
        let gd = build_psi(&p, PsiDesign::Gd { kappa: 0.01 }).unwrap();
        assert_eq!(gd.psi().to_dense(), SymMatrix::scaled_identity(4, 100.0).to_dense());
        let nt = build_psi(&p, PsiDesign::Newton).unwrap();
        let d = p.phi().to_dense();
        for i in 0..4 {
            for j in 0..4 {
                let mut e: f64 = (0..4).map(|l| d[i][l] * d[j][l]).sum();
                if i == j {
                    e += 0.5;
                }
                assert_eq!(nt.psi().get(i, j), e);
            }
        }
        let agd = build_psi(&p, PsiDesign::Agd).unwrap();
        assert_eq!(agd.diagonal().unwrap(), nt.psi().diagonal());
    }

    #[test]
    fn u_update_zero_coupling() {
        let s = vec![0.5, -1.0, 2.0, 0.25];
        let p = problem(s.clone(), Stencil::Forward);
        for d in designs() {
            let m = build_psi(&p, d).unwrap();
            let u = update_u(&p, &m, &[0.0; 4]).unwrap();
            // (I + ΦᵀΨ⁻¹Φ) u = s
            let back: Vec<f64> = {
                let g = p.phi().mul_t(&m.grad_d_inv(&p.phi().mul(&u)).unwrap());
                u.iter().zip(&g).map(|(a, b)| a + b).collect()
            };
            assert!(distance(&back, &s) < 1e-12);
        }
        let zero_phi = BandedOperator::new(4, vec![]).unwrap();
        let p = TvProblem::new(s.clone(), zero_phi, 2.0, 1.0).unwrap();
        let m = design_gd(4, 1.0).unwrap();
        assert_eq!(update_u(&p, &m, &[3.0, 1.0, -2.0, 0.0]).unwrap(), s);
    }

    #[test]
    fn u_update_residual_is_tiny() {
        let s: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin() * 2.0).collect();
        let z: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).cos()).collect();
        for stencil in [Stencil::Central, Stencil::Forward] {
            let p = problem(s.clone(), stencil);
            for d in designs() {
                let m = build_psi(&p, d).unwrap();
                let u = update_u(&p, &m, &z).unwrap();
                let r = u_update_residual(&p, &m, &z, &u).unwrap();
                assert!(r <= 1e-8 * (1.0 + crate::vector::norm2(&s)), "{d:?}: {r}");
            }
        }
    }

    #[test]
    fn v_update_scalar_example() {
        let p = problem(vec![0.0; 2], Stencil::Forward);
        let m = design_gd(2, 1.0).unwrap();
        let v = update_v(&p, &m, &[-6.0, 0.0]).unwrap();
        assert!((v[0] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(v[1], 0.0);
        assert_eq!(update_v(&p, &m, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn v_update_diagonal_residual() {
        let x: Vec<f64> = (0..10).map(|i| 4.0 * (i as f64 * 0.9).sin()).collect();
        let p = problem(vec![0.0; 10], Stencil::Central);
        for d in [PsiDesign::Agd, PsiDesign::Gd { kappa: 0.5 }] {
            let m = build_psi(&p, d).unwrap();
            let v = update_v(&p, &m, &x).unwrap();
            assert!(v_update_residual(&p, &m, &x, &v).unwrap() <= 1e-8);
            assert!(v_update_deviation(&p, &m, &x).unwrap() <= 1e-10);
        }
        let nt = build_psi(&p, PsiDesign::Newton).unwrap();
        assert!(v_update_residual(&p, &nt, &x, &[0.0; 10]).is_err());
    }

    #[test]
    fn empty_run_and_alpha() {
        let p = problem(vec![1.0; 4], Stencil::Forward);
        let m = build_psi(&p, PsiDesign::Agd).unwrap();
        assert_eq!(solve_tv(&p, &m, TvMethod::Bpr, 0, None).unwrap_err(), Error::EmptyRun);
        assert_eq!(
            solve_tv(&p, &m, TvMethod::Bdr { alpha: 1.5 }, 5, None).unwrap_err(),
            Error::AlphaOutOfRange(1.5)
        );
    }

    #[test]
    fn early_stop() {
        let p = problem(vec![1.0, 0.5, 0.0, 0.5, 1.0], Stencil::Forward);
        let m = build_psi(&p, PsiDesign::Agd).unwrap();
        let out = solve_tv_stopping(&p, &m, TvMethod::Bpr, 5000, 1e-6, None).unwrap();
        let last = out.trace.last().unwrap();
        assert!(out.trace.len() < 5001 && last.z_change <= 1e-6);
        assert!(out.trace[..out.trace.len() - 1].iter().skip(1).all(|r| r.z_change > 1e-6));
        assert!(solve_tv_stopping(&p, &m, TvMethod::Bpr, 5, -1.0, None).is_err());
    }

    #[test]
    fn trace_starts_at_observation() {
        let gt = vec![1.0, 1.0, -1.0, -1.0];
        let s = vec![1.2, 0.9, -1.1, -0.7];
        let p = problem(s.clone(), Stencil::Forward);
        let m = build_psi(&p, PsiDesign::Newton).unwrap();
        let out = solve_tv(&p, &m, TvMethod::Bpr, 3, Some(&gt)).unwrap();
        assert_eq!(out.trace.len(), 4);
        assert_eq!(out.trace[0].error, Some(squared_error(&gt, &s)));
        assert!(out.trace.windows(2).all(|w| w[1].t == w[0].t + 1));
    }

    #[test]
    fn bpr_and_bdr_share_fixed_point() {
        let s: Vec<f64> = (0..16).map(|i| if i < 8 { 1.0 } else { -1.0 } + 0.2 * (i as f64).sin()).collect();
        let p = problem(s, Stencil::Forward);
        for d in [PsiDesign::Agd, PsiDesign::Gd { kappa: 0.1 }] {
            let m = build_psi(&p, d).unwrap();
            let a = solve_tv(&p, &m, TvMethod::Bpr, 4000, None).unwrap();
            let b = solve_tv(&p, &m, TvMethod::Bdr { alpha: 0.5 }, 4000, None).unwrap();
            let c = solve_tv(&p, &m, TvMethod::Bfb, 4000, None).unwrap();
            assert!(distance(&a.u, &b.u) < 1e-6, "{d:?}");
            assert!(distance(&a.u, &c.u) < 1e-6, "{d:?}");
            let pu = p.phi().mul(&a.u);
            assert!(distance(&pu, &a.v) < 1e-6);
        }
    }

    #[test]
    fn settle_iteration_examples() {
        assert_eq!(settle_iteration(&[10.0, 5.0, 1.02, 1.0], 0.05), 2);
        assert_eq!(settle_iteration(&[1.0, 1.0], 0.01), 0);
        assert_eq!(settle_iteration(&[], 0.01), 0);
        assert_eq!(settle_iteration(&[3.0, 1.0, 2.0, 1.0], 0.01), 3);
    }

    #[test]
    fn signal_examples() {
        let one = generate_piecewise_signal(50, 1, (-3.0, 3.0), 9).unwrap();
        assert!(one.iter().all(|&x| x == one[0]));
        let a = generate_piecewise_signal(2000, 10, (-3.0, 3.0), 42).unwrap();
        let b = generate_piecewise_signal(2000, 10, (-3.0, 3.0), 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2000);
        let runs = 1 + a.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(runs, 10);
        assert!(a.iter().all(|&x| (-3.0..3.0).contains(&x)));
        assert_eq!(
            generate_piecewise_signal(5, 6, (0.0, 1.0), 1),
            Err(Error::SegmentsExceedLength { segments: 6, m: 5 })
        );
        let full = generate_piecewise_signal(6, 6, (0.0, 1.0), 3).unwrap();
        assert_eq!(1 + full.windows(2).filter(|w| w[0] != w[1]).count(), 6);
    }

    #[test]
    fn noise_examples() {
        let u = generate_piecewise_signal(100, 4, (-3.0, 3.0), 1).unwrap();
        assert_eq!(add_noise(&u, 0.0, 5).unwrap(), u);
        assert_eq!(add_noise(&u, 0.5, 5).unwrap(), add_noise(&u, 0.5, 5).unwrap());
        assert!(add_noise(&u, -1.0, 5).is_err());

        let zero = vec![0.0; 100_000];
        let e = add_noise(&zero, 0.5, 77).unwrap();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let var = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (e.len() - 1) as f64;
        assert!((var - 0.25).abs() <= 0.05 * 0.25, "{var}");
    }

    #[test]
    fn ground_truth_observation_is_seeded() {
        let g = GroundTruth::generate(300, 5, (-3.0, 3.0), 0.5, 42).unwrap();
        assert_eq!(g.observe().unwrap(), g.observe().unwrap());
        let quiet = GroundTruth { noise_sigma: 0.0, ..g.clone() };
        assert_eq!(quiet.observe().unwrap(), g.u_gt);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn u_update_optimal_on_random_inputs(seed in any::<u64>(), m in 2usize..20, which in 0usize..3, central in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let z: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = problem(s.clone(), if central { Stencil::Central } else { Stencil::Forward });
            let metric = build_psi(&p, designs()[which]).unwrap();
            let u = update_u(&p, &metric, &z).unwrap();
            prop_assert!(u_update_residual(&p, &metric, &z, &u).unwrap() <= 1e-8 * (1.0 + crate::vector::norm2(&s)));
        }

        #[test]
        fn v_update_optimal_on_random_inputs(seed in any::<u64>(), m in 2usize..20, agd in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-50.0..50.0)).collect();
            let p = problem(vec![0.0; m], Stencil::Central);
            let metric = build_psi(&p, if agd { PsiDesign::Agd } else { PsiDesign::Gd { kappa: 0.01 } }).unwrap();
            let v = update_v(&p, &metric, &x).unwrap();
            prop_assert!(v_update_residual(&p, &metric, &x, &v).unwrap() <= 1e-8);
        }
    }
}
