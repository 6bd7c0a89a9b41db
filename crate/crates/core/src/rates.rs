//! Contraction factors for the splitting operators.
//!
//! For quadratic `G` with Hessian `A` and metric Ψ, `Ψ⁻¹A` is self-adjoint in the
//! Ψ inner product, so the extreme eigenvalues of the pencil `(A, Ψ)` are its exact
//! Lipschitz and strong-monotonicity constants in `‖·‖_Ψ`. The bounds below are
//! stated in that norm. In plain L2 they only follow when Ψ is a multiple of I.

use crate::linalg::extreme_generalized_eigenvalues;
use crate::metric::QuadraticMetric;
use crate::operators::ConvexOracle;
use crate::{Error, Result};

const RADICAND_TOL: f64 = 1e-12;

/// `0 ≤ σ_LB ≤ σ_UB < ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPair {
    lb: f64,
    ub: f64,
}

impl SigmaPair {
    pub fn new(lb: f64, ub: f64) -> Result<Self> {
        if lb >= 0.0 && lb <= ub && ub.is_finite() {
            Ok(SigmaPair { lb, ub })
        } else {
            Err(Error::InvalidSigmaPair { lb, ub })
        }
    }

    pub fn lb(&self) -> f64 {
        self.lb
    }

    pub fn ub(&self) -> f64 {
        self.ub
    }

    /// `σ_UB / σ_LB`, infinite when `σ_LB = 0`.
    pub fn range_ratio(&self) -> f64 {
        self.ub / self.lb
    }
}

/// Extreme eigenvalues of the pencil `(A, Ψ)` for the oracle's quadratic model.
pub fn estimate_sigma(
    oracle: &(impl ConvexOracle + ?Sized),
    metric: &QuadraticMetric,
) -> Result<SigmaPair> {
    let model = oracle.quadratic_model().ok_or(Error::NoQuadraticModel)?;
    let (lo, hi) = extreme_generalized_eigenvalues(&model.hessian, &metric.psi())?;
    let lo = lo.max(0.0);
    SigmaPair::new(lo, hi.max(lo))
}

fn clamped_sqrt(r: f64, what: &str) -> f64 {
    if r < -RADICAND_TOL {
        log::warn!("{what} radicand {r} below zero, clamped");
    }
    r.max(0.0).sqrt()
}

/// Cayley contraction `η = √(1 − 4σ_LB/(1+σ_UB)²)`.
///
/// `σ_LB ≤ σ_UB` forces `4σ_LB ≤ (1+σ_UB)²`, so the radicand is non-negative up to rounding.
pub fn eta(s: SigmaPair) -> f64 {
    let d = 1.0 + s.ub;
    clamped_sqrt(1.0 - 4.0 * s.lb / (d * d), "eta")
}

/// Forward-step Lipschitz constant `ν = √(1 − 2σ_LB + σ_UB²)`.
pub fn nu(s: SigmaPair) -> f64 {
    clamped_sqrt(1.0 - 2.0 * s.lb + s.ub * s.ub, "nu")
}

/// Forward-backward factor `ν₁ / (1 + σ_LB,2)`.
pub fn lambda_fb(s1: SigmaPair, s2: SigmaPair) -> f64 {
    nu(s1) / (1.0 + s2.lb)
}

/// `σ_UB ≤ 1` and `σ_LB ≥ ½σ_UB²`, i.e. `ν ≤ 1`.
pub fn is_forward_step_nonexpansive(s: SigmaPair) -> bool {
    s.ub <= 1.0 && s.lb >= 0.5 * s.ub * s.ub
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    PeacemanRachford,
    DouglasRachford,
    ForwardBackward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub sigma: [SigmaPair; 2],
    pub eta: [f64; 2],
    pub nu: [f64; 2],
    pub lambda: f64,
    pub alpha: Option<f64>,
}

impl RateModel {
    pub fn new(s1: SigmaPair, s2: SigmaPair, alpha: Option<f64>) -> Self {
        RateModel {
            sigma: [s1, s2],
            eta: [eta(s1), eta(s2)],
            nu: [nu(s1), nu(s2)],
            lambda: lambda_fb(s1, s2),
            alpha,
        }
    }

    /// Per-iteration factor for `method`.
    pub fn factor(&self, method: Method) -> Result<f64> {
        let prod = self.eta[0] * self.eta[1];
        Ok(match method {
            Method::PeacemanRachford => prod,
            Method::DouglasRachford => {
                let a = self.alpha.ok_or(Error::MissingAlpha)?;
                1.0 - a + a * prod
            }
            Method::ForwardBackward => self.lambda,
        })
    }
}

/// `factor^t · initial_distance`.
pub fn predict_bounds(model: &RateModel, method: Method, t: u32, initial_distance: f64) -> Result<f64> {
    let f = model.factor(method)?;
    Ok(f.powi(t as i32) * initial_distance)
}
