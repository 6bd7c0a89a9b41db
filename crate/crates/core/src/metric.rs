//! Quadratic Bregman generators `D(w) = ½⟨Ψw, w⟩`.
//!
//! For these, `B_D(w ∥ z) = ½⟨Ψ(w−z), w−z⟩`, `∇D = Ψ` and `∇D⁻¹ = Ψ⁻¹`.
//! Ψ is fixed for the life of the metric.

use crate::linalg::{SpdFactorization, SymMatrix};
use crate::vector::check_len;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Design {
    Newton,
    Agd,
    Gd { kappa: f64 },
}

#[derive(Debug, Clone)]
enum Repr {
    /// Ψ = I/κ
    Scalar(f64),
    Diagonal(Vec<f64>),
    General {
        psi: SymMatrix,
        factor: SpdFactorization,
    },
}

#[derive(Debug, Clone)]
pub struct QuadraticMetric {
    n: usize,
    design: Design,
    repr: Repr,
}

/// Ψ = hessian.
pub fn design_newton(hessian: &SymMatrix) -> Result<QuadraticMetric> {
    let n = hessian.order();
    if hessian.bandwidth() == 0 {
        let d = hessian.diagonal();
        if let Some((index, &value)) = d.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::NotPositiveDefinite { row: index, pivot: value });
        }
        return Ok(QuadraticMetric {
            n,
            design: Design::Newton,
            repr: Repr::Diagonal(d),
        });
    }
    let factor = hessian.factorize()?;
    Ok(QuadraticMetric {
        n,
        design: Design::Newton,
        repr: Repr::General {
            psi: hessian.clone(),
            factor,
        },
    })
}

/// Ψ = Diag(hessian).
pub fn design_agd(hessian: &SymMatrix) -> Result<QuadraticMetric> {
    let d = hessian.diagonal();
    if let Some((index, &value)) = d.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveDiagonal { index, value });
    }
    Ok(QuadraticMetric {
        n: hessian.order(),
        design: Design::Agd,
        repr: Repr::Diagonal(d),
    })
}

/// Ψ = I/κ on `n` coordinates.
pub fn design_gd(n: usize, kappa: f64) -> Result<QuadraticMetric> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter { name: "kappa", value: kappa });
    }
    Ok(QuadraticMetric {
        n,
        design: Design::Gd { kappa },
        repr: Repr::Scalar(kappa),
    })
}

/// `hessian + εI`, with ε defaulting to `1e-8 · max diagonal`.
pub fn majorize(hessian: &SymMatrix, eps: Option<f64>) -> SymMatrix {
    let eps = eps.unwrap_or_else(|| {
        1e-8 * hessian
            .diagonal()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    });
    let mut m = hessian.clone();
    m.add_diagonal(eps);
    m
}

impl QuadraticMetric {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn design(&self) -> Design {
        self.design
    }

    /// κ for the scalar design.
    pub fn kappa(&self) -> Option<f64> {
        match self.repr {
            Repr::Scalar(k) => Some(k),
            _ => None,
        }
    }

    /// Diagonal of Ψ when Ψ is diagonal (scalar designs included).
    pub fn diagonal(&self) -> Option<Vec<f64>> {
        match &self.repr {
            Repr::Scalar(k) => Some(vec![1.0 / k; self.n]),
            Repr::Diagonal(d) => Some(d.clone()),
            Repr::General { .. } => None,
        }
    }

    /// Ψ materialized as a banded matrix.
    pub fn psi(&self) -> SymMatrix {
        match &self.repr {
            Repr::Scalar(k) => SymMatrix::scaled_identity(self.n, 1.0 / k),
            Repr::Diagonal(d) => SymMatrix::from_diagonal(d),
            Repr::General { psi, .. } => psi.clone(),
        }
    }

    pub fn bregman(&self, w: &[f64], z: &[f64]) -> Result<f64> {
        check_len(w, self.n)?;
        check_len(z, self.n)?;
        let d = crate::vector::sub(w, z);
        Ok(self.potential_unchecked(&d))
    }

    /// `D(w) = ½⟨Ψw, w⟩`.
    pub fn potential(&self, w: &[f64]) -> Result<f64> {
        check_len(w, self.n)?;
        Ok(self.potential_unchecked(w))
    }

    fn potential_unchecked(&self, d: &[f64]) -> f64 {
        match &self.repr {
            Repr::Scalar(k) => 0.5 * crate::vector::dot(d, d) / k,
            Repr::Diagonal(p) => 0.5 * d.iter().zip(p).map(|(x, p)| p * x * x).sum::<f64>(),
            Repr::General { factor, .. } => {
                let y = factor.upper_mul(d);
                0.5 * crate::vector::dot(&y, &y)
            }
        }
    }

    /// `‖x‖_Ψ = √⟨Ψx, x⟩`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        Ok((2.0 * self.potential(x)?).sqrt())
    }

    pub fn grad_d(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(w, self.n)?;
        Ok(self.psi_mul(w))
    }

    pub fn grad_d_inv(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(w, self.n)?;
        Ok(self.psi_solve(w))
    }

    pub(crate) fn psi_mul(&self, w: &[f64]) -> Vec<f64> {
        match &self.repr {
            Repr::Scalar(k) => w.iter().map(|x| x / k).collect(),
            Repr::Diagonal(p) => w.iter().zip(p).map(|(x, p)| p * x).collect(),
            Repr::General { psi, .. } => psi.mul(w),
        }
    }

    pub(crate) fn psi_solve(&self, w: &[f64]) -> Vec<f64> {
        match &self.repr {
            Repr::Scalar(k) => w.iter().map(|x| k * x).collect(),
            Repr::Diagonal(p) => w.iter().zip(p).map(|(x, p)| x / p).collect(),
            Repr::General { factor, .. } => factor.solve_unchecked(w),
        }
    }
}
