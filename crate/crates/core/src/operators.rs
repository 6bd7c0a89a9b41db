//! Convex-function oracles and the D-resolvent, D-Cayley, D-forward and
//! averaged operators built on them.

use crate::linalg::SymMatrix;
use crate::metric::QuadraticMetric;
use crate::vector::{check_len, reflect};
use crate::{Error, Result};

/// `G(w) = ½⟨Aw, w⟩ + ⟨b, w⟩ + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub hessian: SymMatrix,
    pub linear: Vec<f64>,
    pub constant: f64,
}

/// A convex function reachable through its Bregman prox.
pub trait ConvexOracle: Sync {
    fn dimension(&self) -> usize;

    /// `argmin_w G(w) + B_D(w ∥ z)`.
    fn bregman_prox(&self, z: &[f64], metric: &QuadraticMetric) -> Result<Vec<f64>>;

    fn subgradient(&self, _w: &[f64]) -> Result<Vec<f64>> {
        Err(Error::NoSubgradient)
    }

    fn quadratic_model(&self) -> Option<&QuadraticModel> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticOracle {
    model: QuadraticModel,
}

impl QuadraticOracle {
    pub fn new(hessian: SymMatrix, linear: Vec<f64>, constant: f64) -> Result<Self> {
        check_len(&linear, hessian.order())?;
        Ok(QuadraticOracle {
            model: QuadraticModel {
                hessian,
                linear,
                constant,
            },
        })
    }

    /// `G ≡ 0`.
    pub fn zero(n: usize) -> Self {
        QuadraticOracle {
            model: QuadraticModel {
                hessian: SymMatrix::zeros(n, 0),
                linear: vec![0.0; n],
                constant: 0.0,
            },
        }
    }

    pub fn value(&self, w: &[f64]) -> Result<f64> {
        let m = &self.model;
        let aw = m.hessian.matvec(w)?;
        Ok(0.5 * crate::vector::dot(&aw, w) + crate::vector::dot(&m.linear, w) + m.constant)
    }

    pub fn model(&self) -> &QuadraticModel {
        &self.model
    }
}

impl ConvexOracle for QuadraticOracle {
    fn dimension(&self) -> usize {
        self.model.linear.len()
    }

    /// Solves `(Ψ + A) w = Ψz − b`; for Ψ = I/κ the scaled form `(I + κA) w = z − κb`.
    fn bregman_prox(&self, z: &[f64], metric: &QuadraticMetric) -> Result<Vec<f64>> {
        let n = self.dimension();
        check_len(z, n)?;
        if metric.order() != n {
            return Err(Error::DimensionMismatch { expected: n, found: metric.order() });
        }
        let a = &self.model.hessian;
        let b = &self.model.linear;
        if let Some(k) = metric.kappa() {
            let lhs = SymMatrix::from_fn(n, a.bandwidth(), |i, j| {
                let d = if i == j { 1.0 } else { 0.0 };
                d + k * a.get(i, j)
            });
            let rhs: Vec<f64> = z.iter().zip(b).map(|(zi, bi)| zi - k * bi).collect();
            return lhs.factorize()?.solve(&rhs);
        }
        let lhs = SymMatrix::combine(1.0, &metric.psi(), 1.0, a)?;
        let rhs: Vec<f64> = metric
            .psi_mul(z)
            .iter()
            .zip(b)
            .map(|(p, bi)| p - bi)
            .collect();
        lhs.factorize()?.solve(&rhs)
    }

    fn subgradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        let aw = self.model.hessian.matvec(w)?;
        Ok(crate::vector::add(&aw, &self.model.linear))
    }

    fn quadratic_model(&self) -> Option<&QuadraticModel> {
        Some(&self.model)
    }
}

/// `G(w) = l1·‖w‖₁ + (l2/2)·‖w‖²`. Prox is closed form for diagonal Ψ only.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticNetOracle {
    n: usize,
    l1: f64,
    l2: f64,
}

impl ElasticNetOracle {
    pub fn new(n: usize, l1: f64, l2: f64) -> Result<Self> {
        if !(l1 >= 0.0) {
            return Err(Error::InvalidParameter { name: "l1", value: l1 });
        }
        if !(l2 >= 0.0) {
            return Err(Error::InvalidParameter { name: "l2", value: l2 });
        }
        Ok(ElasticNetOracle { n, l1, l2 })
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        w.iter().map(|x| self.l1 * x.abs() + 0.5 * self.l2 * x * x).sum()
    }
}

pub(crate) fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

impl ConvexOracle for ElasticNetOracle {
    fn dimension(&self) -> usize {
        self.n
    }

    fn bregman_prox(&self, z: &[f64], metric: &QuadraticMetric) -> Result<Vec<f64>> {
        check_len(z, self.n)?;
        let psi = metric
            .diagonal()
            .ok_or(Error::Unsupported("elastic-net prox needs a diagonal metric"))?;
        check_len(&psi, self.n)?;
        Ok(z.iter()
            .zip(&psi)
            .map(|(zi, p)| soft_threshold(p * zi, self.l1) / (p + self.l2))
            .collect())
    }

    /// Takes 0 from `[-l1, l1]` at the kink.
    fn subgradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(w, self.n)?;
        Ok(w.iter()
            .map(|&x| {
                let s = if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                self.l1 * s + self.l2 * x
            })
            .collect())
    }
}

fn check_pair(oracle: &(impl ConvexOracle + ?Sized), metric: &QuadraticMetric, z: &[f64]) -> Result<()> {
    let n = oracle.dimension();
    if metric.order() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: metric.order(),
        });
    }
    check_len(z, n)
}

/// `R = (∇D + ∂G)⁻¹ ∇D`.
pub fn d_resolvent(
    oracle: &(impl ConvexOracle + ?Sized),
    metric: &QuadraticMetric,
    z: &[f64],
) -> Result<Vec<f64>> {
    check_pair(oracle, metric, z)?;
    let w = oracle.bregman_prox(z, metric)?;
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::ProxDiverged);
    }
    Ok(w)
}

/// `C = 2R − I`.
pub fn d_cayley(
    oracle: &(impl ConvexOracle + ?Sized),
    metric: &QuadraticMetric,
    z: &[f64],
) -> Result<Vec<f64>> {
    let w = d_resolvent(oracle, metric, z)?;
    Ok(reflect(&w, z))
}

/// `F = I − ∇D⁻¹∂G`.
pub fn d_forward(
    oracle: &(impl ConvexOracle + ?Sized),
    metric: &QuadraticMetric,
    w: &[f64],
) -> Result<Vec<f64>> {
    check_pair(oracle, metric, w)?;
    let g = oracle.subgradient(w)?;
    let step = metric.grad_d_inv(&g)?;
    Ok(crate::vector::sub(w, &step))
}

/// `(1−α) z + α·op(z)`.
pub fn averaged(
    op: impl FnOnce(&[f64]) -> Result<Vec<f64>>,
    alpha: f64,
    z: &[f64],
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let j = op(z)?;
    check_len(&j, z.len())?;
    Ok(z.iter().zip(&j).map(|(a, b)| (1.0 - alpha) * a + alpha * b).collect())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}
