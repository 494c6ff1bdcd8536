//! Spectral radius of nonnegative matrices.
//!
//! The primary route is power iteration on `M + I` with Collatz-Wielandt
//! bounds, which bracket the Perron root for any positive iterate. When the
//! bracket fails to close (reducible or nearly nilpotent matrices) the
//! companion form falls back to bisection on its characteristic polynomial
//! and general matrices fall back to a Schur decomposition.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quantizer::ExpansionProfile;

pub const MAX_ITERATIONS: usize = 1_000_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Companion matrix with ones on the superdiagonal and bottom row
/// `(w̄_n, ..., w̄_1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix {
    /// `w_bar[i]` is `w̄_{i+1}`.
    w_bar: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMethod {
    Exact,
    PowerIteration,
    Bisection,
    Schur,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub rho: f64,
    pub method: SpectralMethod,
    pub iterations: usize,
}

impl HMatrix {
    pub fn new(w_bar: Vec<f64>) -> Result<Self> {
        if w_bar.is_empty() {
            return Err(Error::InvalidArgument("H needs at least one rate".into()));
        }
        if w_bar.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "H rates must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { w_bar })
    }

    pub fn from_profile(profile: &ExpansionProfile) -> Result<Self> {
        Self::new(profile.w_bar.clone())
    }

    pub fn order(&self) -> usize {
        self.w_bar.len()
    }

    /// `(w̄_1, ..., w̄_n)`.
    pub fn w_bar(&self) -> &[f64] {
        &self.w_bar
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.order();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            m[(i, i + 1)] = 1.0;
        }
        for (j, w) in self.w_bar.iter().rev().enumerate() {
            m[(n - 1, j)] = *w;
        }
        m
    }

    /// `H * x` without forming the matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order();
        let mut y = Vec::with_capacity(n);
        y.extend_from_slice(&x[1..]);
        y.push(self.bottom_dot(x));
        y
    }

    /// Bottom row times `x`: `Σ_i w̄_i x_{n-i}` with `x` ordered oldest first.
    pub fn bottom_dot(&self, x: &[f64]) -> f64 {
        let n = self.order();
        self.w_bar
            .iter()
            .enumerate()
            .map(|(i, w)| w * x[n - 1 - i])
            .sum()
    }

    /// `z^n - Σ_i w̄_i z^{n-i}` by Horner's rule.
    pub fn characteristic(&self, z: f64) -> f64 {
        self.w_bar.iter().fold(1.0, |acc, w| acc * z - w)
    }
}

pub fn spectral_radius(h: &HMatrix, tol: f64) -> Result<f64> {
    spectral_radius_detailed(h, tol).map(|e| e.rho)
}

pub fn spectral_radius_detailed(h: &HMatrix, tol: f64) -> Result<SpectralEstimate> {
    check_tol(tol)?;
    if h.order() == 1 {
        return Ok(SpectralEstimate {
            rho: h.w_bar[0],
            method: SpectralMethod::Exact,
            iterations: 0,
        });
    }
    if h.w_bar.iter().all(|w| *w == 0.0) {
        return Ok(SpectralEstimate {
            rho: 0.0,
            method: SpectralMethod::Exact,
            iterations: 0,
        });
    }
    let n = h.order();
    let power = shifted_power_iteration(n, tol, |x| {
        let mut y = h.apply(x);
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += xi);
        y
    });
    if let Some((rho, iterations)) = power {
        return Ok(SpectralEstimate {
            rho,
            method: SpectralMethod::PowerIteration,
            iterations,
        });
    }
    let (rho, iterations) = companion_bisection(h, tol)?;
    Ok(SpectralEstimate {
        rho,
        method: SpectralMethod::Bisection,
        iterations,
    })
}

/// Spectral radius of an arbitrary square nonnegative matrix.
pub fn matrix_spectral_radius(m: &DMatrix<f64>, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidArgument(
            "matrix must be square and nonempty".into(),
        ));
    }
    if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("matrix must be nonnegative".into()));
    }
    if m.nrows() == 1 {
        return Ok(m[(0, 0)]);
    }
    if m.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let n = m.nrows();
    let power = shifted_power_iteration(n, tol, |x| {
        let v = nalgebra::DVector::from_column_slice(x);
        let y = m * &v + &v;
        y.as_slice().to_vec()
    });
    if let Some((rho, _)) = power {
        return Ok(rho);
    }
    let rho = m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(rho)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

/// Power iteration on `M + I` given its action. Returns `rho(M)` once the
/// Collatz-Wielandt bracket `[min (Ax)_i/x_i, max (Ax)_i/x_i] - 1` has
/// relative width at most `tol`.
fn shifted_power_iteration(
    n: usize,
    tol: f64,
    apply_shifted: impl Fn(&[f64]) -> Vec<f64>,
) -> Option<(f64, usize)> {
    let mut x = vec![1.0; n];
    for iteration in 1..=MAX_ITERATIONS {
        let y = apply_shifted(&x);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (yi, xi) in y.iter().zip(&x) {
            let ratio = yi / xi;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let (lo, hi) = (lo - 1.0, hi - 1.0);
        if lo > 0.0 && hi - lo <= tol * lo {
            return Some((0.5 * (lo + hi), iteration));
        }
        let top = y.iter().copied().fold(0.0, f64::max);
        if !(top > 0.0) || !top.is_finite() {
            return None;
        }
        x = y.into_iter().map(|v| v / top).collect();
        if x.iter().any(|v| *v < 1e-280) {
            return None;
        }
    }
    None
}

/// Largest positive root of the characteristic polynomial of `h`.
fn companion_bisection(h: &HMatrix, tol: f64) -> Result<(f64, usize)> {
    let total: f64 = h.w_bar.iter().sum();
    let mut lo = 0.0_f64;
    let mut hi = total.max(1.0);
    for iteration in 1..=4096 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok((mid, iteration));
        }
        if h.characteristic(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if lo > 0.0 && hi - lo <= tol * lo {
            return Ok((0.5 * (lo + hi), iteration));
        }
    }
    Err(Error::NoConvergence { iterations: 4096 })
}
