//! Banded symmetric storage, banded Cholesky and difference stencils.
//!
//! Dense matrices are just banded ones with `bandwidth = order - 1`.

use crate::vector::check_len;
use crate::{Error, Result};

/// Cap on combined power and bisection steps in [`extreme_generalized_eigenvalues`].
pub const DEFAULT_EIGEN_CAP: usize = 10_000;

const POWER_STEPS: usize = 40;

/// Symmetric matrix stored as its lower band.
///
/// Row `i` holds columns `i - bandwidth ..= i`; entries left of column 0 are padding.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bw = bandwidth.min(n.saturating_sub(1));
        SymMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n, 0);
        m.data.iter_mut().for_each(|x| *x = c);
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix {
            n: d.len(),
            bw: 0,
            data: d.to_vec(),
        }
    }

    /// Builds from full rows. The input must be square and exactly symmetric.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut bw = 0;
        for (i, row) in rows.iter().enumerate() {
            check_len(row, n)?;
            for j in 0..i {
                if row[j] != rows[j][i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                if row[j] != 0.0 {
                    bw = bw.max(i - j);
                }
            }
        }
        Ok(Self::from_fn(n, bw, |i, j| rows[i][j]))
    }

    /// Fills the lower band from `f(i, j)` with `j <= i`.
    pub fn from_fn(n: usize, bandwidth: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n, bandwidth);
        for i in 0..n {
            for j in i.saturating_sub(m.bw)..=i {
                let k = m.idx(i, j);
                m.data[k] = f(i, j);
            }
        }
        m
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + self.bw - (i - j)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    ///
    /// # Panics
    /// If `|i - j|` exceeds the bandwidth.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.idx(i, i)]).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.n)?;
        Ok(self.mul(x))
    }

    pub(crate) fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let j0 = i.saturating_sub(self.bw);
            let off = self.bw - (i - j0);
            let mut acc = row[self.bw] * x[i];
            for j in j0..i {
                let a = row[off + j - j0];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// `alpha * a + beta * b`, widened to the larger bandwidth.
    pub fn combine(alpha: f64, a: &SymMatrix, beta: f64, b: &SymMatrix) -> Result<SymMatrix> {
        if a.n != b.n {
            return Err(Error::DimensionMismatch {
                expected: a.n,
                found: b.n,
            });
        }
        let bw = a.bw.max(b.bw);
        Ok(Self::from_fn(a.n, bw, |i, j| {
            alpha * a.get(i, j) + beta * b.get(i, j)
        }))
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|x| *x *= c);
        m
    }

    pub fn add_diagonal(&mut self, c: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += c;
        }
    }

    pub fn factorize(&self) -> Result<SpdFactorization> {
        spd_factorize(self)
    }
}

/// Banded Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    l: SymMatrix,
}

pub fn spd_factorize(a: &SymMatrix) -> Result<SpdFactorization> {
    let n = a.n;
    let bw = a.bw;
    let mut l = SymMatrix::zeros(n, bw);
    for i in 0..n {
        let k0 = i.saturating_sub(bw);
        for j in k0..=i {
            let mut s = a.data[a.idx(i, j)];
            for k in k0.max(j.saturating_sub(bw))..j {
                s -= l.data[l.idx(i, k)] * l.data[l.idx(j, k)];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                }
                let idx = l.idx(i, i);
                l.data[idx] = s.sqrt();
            } else {
                let idx = l.idx(i, j);
                l.data[idx] = s / l.data[l.idx(j, j)];
            }
        }
    }
    Ok(SpdFactorization { l })
}

impl SpdFactorization {
    pub fn order(&self) -> usize {
        self.l.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(b, self.l.n)?;
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        Ok(x)
    }

    pub(crate) fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// In place `x <- L⁻¹ x`.
    pub(crate) fn forward(&self, x: &mut [f64]) {
        let l = &self.l;
        for i in 0..l.n {
            let mut s = x[i];
            for k in i.saturating_sub(l.bw)..i {
                s -= l.data[l.idx(i, k)] * x[k];
            }
            x[i] = s / l.data[l.idx(i, i)];
        }
    }

    /// In place `x <- L⁻ᵀ x`.
    pub(crate) fn backward(&self, x: &mut [f64]) {
        let l = &self.l;
        for i in (0..l.n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + l.bw + 1).min(l.n) {
                s -= l.data[l.idx(k, i)] * x[k];
            }
            x[i] = s / l.data[l.idx(i, i)];
        }
    }

    /// `Lᵀ x`, so that `xᵀ A x = ‖Lᵀ x‖²`.
    pub(crate) fn upper_mul(&self, x: &[f64]) -> Vec<f64> {
        let l = &self.l;
        (0..l.n)
            .map(|i| {
                (i..(i + l.bw + 1).min(l.n))
                    .map(|k| l.data[l.idx(k, i)] * x[k])
                    .sum()
            })
            .collect()
    }
}

/// Shift-invariant stencil `[Φu]_i = Σ c_k u_{i+k}`, zero padded at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    n: usize,
    stencil: Vec<(isize, f64)>,
}

impl BandedOperator {
    pub fn new(n: usize, stencil: Vec<(isize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionTooSmall(n));
        }
        Ok(BandedOperator { n, stencil })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn stencil(&self) -> &[(isize, f64)] {
        &self.stencil
    }

    #[inline]
    fn shifted(&self, i: usize, k: isize) -> Option<usize> {
        let j = i as isize + k;
        (j >= 0 && (j as usize) < self.n).then_some(j as usize)
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(u, self.n)?;
        Ok(self.mul(u))
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(v, self.n)?;
        Ok(self.mul_t(v))
    }

    pub(crate) fn mul(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.stencil
                    .iter()
                    .filter_map(|&(k, c)| self.shifted(i, k).map(|j| c * u[j]))
                    .sum()
            })
            .collect()
    }

    pub(crate) fn mul_t(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            for &(k, c) in &self.stencil {
                if let Some(j) = self.shifted(i, k) {
                    out[j] += c * vi;
                }
            }
        }
        out
    }

    fn spread(&self) -> usize {
        let lo = self.stencil.iter().map(|s| s.0).min().unwrap_or(0);
        let hi = self.stencil.iter().map(|s| s.0).max().unwrap_or(0);
        (hi - lo) as usize
    }

    /// `Φ Φᵀ`.
    pub fn gram_outer(&self) -> SymMatrix {
        let mut g = SymMatrix::zeros(self.n, self.spread());
        // column l of Φ holds c_k at row l - k
        for l in 0..self.n {
            for &(k1, c1) in &self.stencil {
                let Some(i) = self.shifted(l, -k1) else { continue };
                for &(k2, c2) in &self.stencil {
                    let Some(j) = self.shifted(l, -k2) else { continue };
                    if i >= j {
                        let idx = g.idx(i, j);
                        g.data[idx] += c1 * c2;
                    }
                }
            }
        }
        g
    }

    /// `Φᵀ W Φ` for diagonal weights `W`.
    pub fn gram_inner_weighted(&self, w: &[f64]) -> Result<SymMatrix> {
        check_len(w, self.n)?;
        let mut g = SymMatrix::zeros(self.n, self.spread());
        for (l, &wl) in w.iter().enumerate() {
            for &(k1, c1) in &self.stencil {
                let Some(i) = self.shifted(l, k1) else { continue };
                for &(k2, c2) in &self.stencil {
                    let Some(j) = self.shifted(l, k2) else { continue };
                    if i >= j {
                        let idx = g.idx(i, j);
                        g.data[idx] += c1 * wl * c2;
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for &(k, c) in &self.stencil {
                if let Some(j) = self.shifted(i, k) {
                    row[j] += c;
                }
            }
        }
        d
    }
}

fn is_pd(m: &SymMatrix) -> bool {
    spd_factorize(m).is_ok()
}

/// Smallest and largest `λ` with `A v = λ B v`.
///
/// `B` must be SPD and `A` positive semidefinite.
pub fn extreme_generalized_eigenvalues(a: &SymMatrix, b: &SymMatrix) -> Result<(f64, f64)> {
    extreme_generalized_eigenvalues_capped(a, b, DEFAULT_EIGEN_CAP)
}

/// Power iteration on `L⁻¹ A L⁻ᵀ` seeds brackets for both extremes, which are
/// then refined by bisection on whether `σB - A` (or `A - σB`) admits a Cholesky factor.
pub fn extreme_generalized_eigenvalues_capped(
    a: &SymMatrix,
    b: &SymMatrix,
    cap: usize,
) -> Result<(f64, f64)> {
    let n = b.order();
    if a.order() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.order(),
        });
    }
    let fb = spd_factorize(b)?;
    if a.diagonal().iter().all(|&d| d == 0.0) {
        return Ok((0.0, 0.0));
    }

    let pencil = |x: &[f64]| {
        let mut y = x.to_vec();
        fb.backward(&mut y);
        let mut y = a.mul(&y);
        fb.forward(&mut y);
        y
    };
    let mut steps = 0usize;
    let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (1.3 * i as f64 + 0.7).sin()).collect();

    let (_, r_max) = power(&pencil, &start, 0.0, POWER_STEPS);
    steps += POWER_STEPS;
    let scale = r_max.abs().max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;

    // upper extreme: σB - A is PD exactly when σ > λ_max
    let above_max = |s: f64| SymMatrix::combine(s, b, -1.0, a).map(|m| is_pd(&m));
    let (lo, hi) = bracket(r_max, scale, &above_max, &mut steps, cap)?;
    let l_max = bisect(lo, hi, tol, &above_max, &mut steps, cap)?;

    // lower extreme: A - σB is PD exactly when σ < λ_min
    let shift = l_max * (1.0 + 1e-3) + tol;
    let (v, _) = power(&pencil, &start, shift, POWER_STEPS);
    steps += POWER_STEPS;
    let r_min = crate::vector::dot(&v, &pencil(&v));
    let below_min = |s: f64| SymMatrix::combine(1.0, a, -s, b).map(|m| !is_pd(&m));
    let (lo, hi) = bracket(r_min, scale, &below_min, &mut steps, cap)?;
    let mut l_min = bisect(lo, hi, tol, &below_min, &mut steps, cap)?;
    if l_min < 0.0 && l_min >= -4.0 * tol {
        l_min = 0.0;
    }
    log::debug!("generalized extremes ({l_min}, {l_max}) after {steps} steps");
    Ok((l_min, l_max))
}

/// Power iteration on `shift·I - C` (or `C` when `shift == 0`).
/// Returns the final unit vector and its Rayleigh quotient for `C`.
fn power(c: &impl Fn(&[f64]) -> Vec<f64>, start: &[f64], shift: f64, steps: usize) -> (Vec<f64>, f64) {
    let norm = crate::vector::norm2(start);
    let mut x: Vec<f64> = start.iter().map(|v| v / norm).collect();
    for _ in 0..steps {
        let cx = c(&x);
        let y: Vec<f64> = if shift == 0.0 {
            cx
        } else {
            x.iter().zip(&cx).map(|(xi, ci)| shift * xi - ci).collect()
        };
        let ny = crate::vector::norm2(&y);
        if ny == 0.0 || !ny.is_finite() {
            break;
        }
        x = y.iter().map(|v| v / ny).collect();
    }
    let rq = crate::vector::dot(&x, &c(&x));
    (x, rq)
}

/// Finds `lo < hi` around `guess` with `pred(lo) == false` and `pred(hi) == true`,
/// where `pred` is monotone false-then-true.
fn bracket(
    guess: f64,
    scale: f64,
    pred: &impl Fn(f64) -> Result<bool>,
    steps: &mut usize,
    cap: usize,
) -> Result<(f64, f64)> {
    let mut gap = 1e-6 * scale;
    let (mut lo, mut hi) = (guess, guess);
    while pred(lo)? {
        lo -= gap;
        gap *= 4.0;
        tick(steps, cap)?;
    }
    gap = 1e-6 * scale;
    while !pred(hi)? {
        hi += gap;
        gap *= 4.0;
        tick(steps, cap)?;
    }
    Ok((lo, hi))
}

fn bisect(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    pred: &impl Fn(f64) -> Result<bool>,
    steps: &mut usize,
    cap: usize,
) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        tick(steps, cap)?;
    }
    Ok(0.5 * (lo + hi))
}

fn tick(steps: &mut usize, cap: usize) -> Result<()> {
    *steps += 1;
    if *steps > cap {
        return Err(Error::NoConvergence { iterations: cap });
    }
    Ok(())
}
