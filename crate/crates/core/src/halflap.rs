//! The Neumann half-Laplacian I: spectral form, harmonic (Dirichlet-to-Neumann)
//! extension, the singular kernel ν and the fractional semi-norms.
//!
//! With λ_k = (kπ)², `I(Σ c_k φ_k) = −Σ c_k λ_k^{1/2} φ_k`, so I∘I = −Δ and
//! ∫_Ω I(u) dx = 0 for every u.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{Grid, NodalField, SineField, SpectralField};

/// λ_k^{1/2} = kπ.
#[inline]
pub fn sqrt_eigenvalue(k: usize) -> f64 {
    k as f64 * PI
}

/// λ_k = (kπ)².
#[inline]
pub fn eigenvalue(k: usize) -> f64 {
    let r = sqrt_eigenvalue(k);
    r * r
}

pub fn apply_i(u: &SpectralField) -> SpectralField {
    SpectralField::from_vec_unchecked(
        u.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| -sqrt_eigenvalue(k) * c)
            .collect(),
    )
}

/// ∂_x I(u) as a sine series: s_k = λ_k c_k.
pub fn apply_dx_i(u: &SpectralField) -> SineField {
    SineField::from_vec_unchecked(
        u.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| eigenvalue(k) * c)
            .collect(),
    )
}

/// ∂_x u as a sine series: ∂_x φ_k = −kπ ψ_k.
pub fn dx(u: &SpectralField) -> SineField {
    SineField::from_vec_unchecked(
        u.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| -sqrt_eigenvalue(k) * c)
            .collect(),
    )
}

/// ∂_x of a sine series, back in the cosine basis: ∂_x ψ_k = kπ φ_k.
pub fn dx_sine(s: &SineField) -> SpectralField {
    SpectralField::from_vec_unchecked(
        s.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| sqrt_eigenvalue(k) * c)
            .collect(),
    )
}

/// Tolerance on the mean of the right-hand side of −I(u) = g.
pub fn mean_tolerance(g: &SpectralField) -> f64 {
    1e-10 * (1.0 + g.l2_norm())
}

/// Zero-mean solution of −I(u) = g. Fails when ∫g ≠ 0.
pub fn inverse_i(g: &SpectralField) -> Result<SpectralField> {
    let tol = mean_tolerance(g);
    if g.mean().abs() > tol {
        return Err(Error::NonzeroMean {
            mean: g.mean(),
            tol,
        });
    }
    Ok(inverse_i_unchecked(g))
}

fn inverse_i_unchecked(g: &SpectralField) -> SpectralField {
    SpectralField::from_vec_unchecked(
        g.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| if k == 0 { 0.0 } else { c / sqrt_eigenvalue(k) })
            .collect(),
    )
}

/// Unique solution of −I(v) + ∫v = g.
pub fn inverse_i_shifted(g: &SpectralField) -> SpectralField {
    let mut v = inverse_i_unchecked(g).into_coeffs();
    v[0] = g.mean();
    SpectralField::from_vec_unchecked(v)
}

/// ν(x,y) = (π/2) [1/(1 − cos π(x−y)) + 1/(1 − cos π(x+y))].
pub fn kernel_nu(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("kernel evaluated outside Ω at ({x}, {y})")));
    }
    let a = one_minus_cos(PI * (x - y));
    let b = one_minus_cos(PI * (x + y));
    if a == 0.0 || b == 0.0 {
        return Err(Error::Domain(format!("kernel is singular at ({x}, {y})")));
    }
    Ok(0.5 * PI * (1.0 / a + 1.0 / b))
}

// 1 − cos θ without cancellation.
fn one_minus_cos(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    2.0 * s * s
}

/// Double midpoint quadrature of (1/2)∬ (u(x)−u(y))² ν(x,y) dx dy on the
/// grid the nodal field lives on. Diagonal cells are skipped, which costs an
/// O(1/M) error (the integrand is bounded there).
pub fn quadratic_form_kernel(u: &NodalField) -> f64 {
    let m = u.len();
    let v = u.values();
    // x_i − x_j = (i−j)/M and x_i + x_j = (i+j+1)/M, so ν only needs
    // 1 − cos(π d / M) for integer d in 1..2M.
    let inv: Vec<f64> = (0..2 * m)
        .map(|d| {
            if d == 0 {
                0.0
            } else {
                1.0 / one_minus_cos(PI * d as f64 / m as f64)
            }
        })
        .collect();
    let mut total = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in (i + 1)..m {
            let du = v[i] - v[j];
            row += du * du * (inv[j - i] + inv[i + j + 1]);
        }
        total += row;
    }
    // Pairs i<j counted once, which absorbs the factor 1/2.
    0.5 * PI * total / (m * m) as f64
}

/// Coefficients of the harmonic extension v(·, y) = Σ c_k φ_k e^{−kπy}.
pub fn harmonic_extension(u: &SpectralField, y: f64) -> Result<SpectralField> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("extension height must be ≥ 0, got {y}")));
    }
    Ok(SpectralField::from_vec_unchecked(
        u.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| c * (-sqrt_eigenvalue(k) * y).exp())
            .collect(),
    ))
}

/// Supported semi-norm orders s.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Half,
    One,
    ThreeHalves,
    Two,
}

impl Order {
    pub fn from_f64(s: f64) -> Result<Self> {
        match s {
            0.5 => Ok(Order::Half),
            1.0 => Ok(Order::One),
            1.5 => Ok(Order::ThreeHalves),
            2.0 => Ok(Order::Two),
            _ => Err(Error::Config(format!(
                "semi-norm order {s} not supported (use 0.5, 1, 1.5 or 2)"
            ))),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Order::Half => 0.5,
            Order::One => 1.0,
            Order::ThreeHalves => 1.5,
            Order::Two => 2.0,
        }
    }

    /// λ_k^s
    fn weight(self, k: usize) -> f64 {
        let r = sqrt_eigenvalue(k);
        match self {
            Order::Half => r,
            Order::One => r * r,
            Order::ThreeHalves => r * r * r,
            Order::Two => r * r * r * r,
        }
    }
}

/// Squared homogeneous semi-norm Σ_{k≥1} c_k² λ_k^s.
pub fn seminorm(u: &SpectralField, s: Order) -> f64 {
    u.coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * c * s.weight(k))
        .sum()
}

/// Nodal grid helper for kernel studies: samples a spectral field.
pub fn sample_on(u: &SpectralField, m: usize) -> Result<NodalField> {
    let grid = Grid::new(m)?;
    NodalField::new(crate::spectral::to_nodal(u, &grid).values().to_vec())
}
