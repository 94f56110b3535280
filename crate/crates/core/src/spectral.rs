//! Discretization of Ω = (0,1): midpoint collocation grid, the Neumann cosine
//! basis φ_0 = 1, φ_k = √2 cos(kπx), the sine basis ψ_k = √2 sin(kπx), and the
//! quadrature transforms between nodal and modal representations.
//!
//! On M midpoints the discrete cosine (resp. sine) family is exactly
//! orthonormal for k, l < M, so projections of band-limited data with
//! N ≤ M/2 modes are exact to roundoff, including quadratic products.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Midpoint nodes x_j = (2j+1)/(2M) with weight 1/M.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("grid needs at least one node".into()));
        }
        let nodes = (0..m)
            .map(|j| (2 * j + 1) as f64 / (2 * m) as f64)
            .collect();
        Ok(Grid { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.nodes.len() as f64
    }

    /// Midpoint rule for ∫_Ω v dx.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.weight()
    }
}

/// Coefficients c_0..c_{N-1} in the cosine basis. c_0 is the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("spectral field needs at least one mode".into()));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("coefficient {k} is not finite")));
        }
        Ok(SpectralField { coeffs })
    }

    pub fn zeros(modes: usize) -> Self {
        SpectralField {
            coeffs: vec![0.0; modes.max(1)],
        }
    }

    pub fn constant(value: f64, modes: usize) -> Self {
        let mut f = Self::zeros(modes);
        f.coeffs[0] = value;
        f
    }

    /// The single basis function φ_k embedded in `modes` modes.
    pub fn basis(k: usize, modes: usize) -> Self {
        let mut f = Self::zeros(modes.max(k + 1));
        f.coeffs[k] = 1.0;
        f
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        SpectralField { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    /// Truncate or zero-pad to `modes` modes.
    pub fn resized(&self, modes: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(modes.max(1), 0.0);
        SpectralField { coeffs }
    }

    pub fn scaled(&self, a: f64) -> Self {
        SpectralField {
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    /// Coefficientwise sum; the result has the larger mode count.
    pub fn plus(&self, other: &SpectralField) -> Self {
        let n = self.modes().max(other.modes());
        let mut out = self.resized(n);
        for (o, c) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o += c;
        }
        out
    }

    pub fn minus(&self, other: &SpectralField) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    /// L² distance via Parseval.
    pub fn l2_distance(&self, other: &SpectralField) -> f64 {
        self.minus(other)
            .coeffs
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Pointwise evaluation at an arbitrary x.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * cosine_basis(k, x))
            .sum()
    }
}

/// Nodal samples u(x_j) on a [`Grid`] of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("nodal field needs at least one value".into()));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("nodal value {j} is not finite")));
        }
        Ok(NodalField { values })
    }

    /// Samples `f` at the grid nodes.
    pub fn sample(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Coefficients in ψ_k = √2 sin(kπx). Index 0 is kept (always zero) so that
/// `coeffs()[k]` is s_k. Every such function vanishes at x = 0 and x = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SineField {
    coeffs: Vec<f64>,
}

impl SineField {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("sine field needs at least one slot".into()));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("sine coefficient {k} is not finite")));
        }
        coeffs[0] = 0.0;
        Ok(SineField { coeffs })
    }

    pub fn zeros(modes: usize) -> Self {
        SineField {
            coeffs: vec![0.0; modes.max(1)],
        }
    }

    pub(crate) fn from_vec_unchecked(mut coeffs: Vec<f64>) -> Self {
        coeffs[0] = 0.0;
        SineField { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, s)| s * sine_basis(k, x))
            .sum()
    }
}

pub fn cosine_basis(k: usize, x: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        SQRT_2 * (k as f64 * PI * x).cos()
    }
}

pub fn sine_basis(k: usize, x: f64) -> f64 {
    SQRT_2 * (k as f64 * PI * x).sin()
}

/// A grid together with N modes and cached basis tables. This is the
/// workhorse for every transform in the solver.
#[derive(Debug, Clone)]
pub struct SpectralSpace {
    grid: Grid,
    modes: usize,
    // Row-major [j * modes + k].
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl SpectralSpace {
    /// Requires N ≤ M/2 so products of two band-limited fields are resolved.
    pub fn new(nodes: usize, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Config("mode count must be positive".into()));
        }
        if nodes < 2 * modes {
            return Err(Error::Config(format!(
                "need at least 2N = {} collocation nodes, got M = {nodes}",
                2 * modes
            )));
        }
        let grid = Grid::new(nodes)?;
        // φ_k(x_j) depends on k(2j+1) mod 4M only; tabulating one period keeps
        // the values exactly symmetric.
        let period = 4 * nodes;
        let step = PI / (2 * nodes) as f64;
        let ctab: Vec<f64> = (0..period).map(|i| (i as f64 * step).cos()).collect();
        let stab: Vec<f64> = (0..period).map(|i| (i as f64 * step).sin()).collect();
        let mut cos = vec![0.0; nodes * modes];
        let mut sin = vec![0.0; nodes * modes];
        for j in 0..nodes {
            for k in 0..modes {
                let idx = (k * (2 * j + 1)) % period;
                cos[j * modes + k] = if k == 0 { 1.0 } else { SQRT_2 * ctab[idx] };
                sin[j * modes + k] = if k == 0 { 0.0 } else { SQRT_2 * stab[idx] };
            }
        }
        Ok(SpectralSpace {
            grid,
            modes,
            cos,
            sin,
        })
    }

    /// The default dealiased space with M = 2N.
    pub fn dealiased(modes: usize) -> Result<Self> {
        Self::new(2 * modes, modes)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub(crate) fn cos_row(&self, j: usize) -> &[f64] {
        &self.cos[j * self.modes..(j + 1) * self.modes]
    }

    pub(crate) fn sin_row(&self, j: usize) -> &[f64] {
        &self.sin[j * self.modes..(j + 1) * self.modes]
    }

    fn check_nodal(&self, len: usize) -> Result<()> {
        if len != self.nodes() {
            return Err(Error::Config(format!(
                "nodal field has {len} values but the grid has {} nodes",
                self.nodes()
            )));
        }
        Ok(())
    }

    /// c_k = (1/M) Σ_j u(x_j) φ_k(x_j).
    pub fn to_spectral(&self, u: &NodalField) -> Result<SpectralField> {
        self.check_nodal(u.len())?;
        Ok(SpectralField::from_vec_unchecked(
            self.project(u.values(), &self.cos),
        ))
    }

    /// u(x_j) = Σ_k c_k φ_k(x_j); extra modes beyond N are rejected.
    pub fn to_nodal(&self, c: &SpectralField) -> Result<NodalField> {
        if c.modes() > self.modes {
            return Err(Error::Config(format!(
                "field has {} modes, space holds {}",
                c.modes(),
                self.modes
            )));
        }
        Ok(NodalField {
            values: self.synthesize(c.coeffs(), &self.cos),
        })
    }

    pub fn nodal_to_sine(&self, q: &NodalField) -> Result<SineField> {
        self.check_nodal(q.len())?;
        Ok(SineField::from_vec_unchecked(
            self.project(q.values(), &self.sin),
        ))
    }

    pub fn sine_to_nodal(&self, s: &SineField) -> Result<NodalField> {
        if s.modes() > self.modes {
            return Err(Error::Config(format!(
                "sine field has {} modes, space holds {}",
                s.modes(),
                self.modes
            )));
        }
        Ok(NodalField {
            values: self.synthesize(s.coeffs(), &self.sin),
        })
    }

    /// Raw synthesis into a preallocated buffer (hot path of the solver).
    pub(crate) fn synthesize_into(&self, coeffs: &[f64], table: Table, out: &mut [f64]) {
        let tab = match table {
            Table::Cos => &self.cos,
            Table::Sin => &self.sin,
        };
        let n = coeffs.len().min(self.modes);
        for (j, o) in out.iter_mut().enumerate() {
            let row = &tab[j * self.modes..j * self.modes + n];
            *o = row.iter().zip(coeffs).map(|(b, c)| b * c).sum();
        }
    }

    pub(crate) fn project_into(&self, values: &[f64], table: Table, out: &mut [f64]) {
        let tab = match table {
            Table::Cos => &self.cos,
            Table::Sin => &self.sin,
        };
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, v) in values.iter().enumerate() {
            let row = &tab[j * self.modes..(j + 1) * self.modes];
            for (o, b) in out.iter_mut().zip(row) {
                *o += v * b;
            }
        }
        let w = self.grid.weight();
        out.iter_mut().for_each(|o| *o *= w);
    }

    fn synthesize(&self, coeffs: &[f64], tab: &[f64]) -> Vec<f64> {
        let n = coeffs.len();
        (0..self.nodes())
            .map(|j| {
                tab[j * self.modes..j * self.modes + n]
                    .iter()
                    .zip(coeffs)
                    .map(|(b, c)| b * c)
                    .sum()
            })
            .collect()
    }

    fn project(&self, values: &[f64], tab: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.modes];
        for (j, v) in values.iter().enumerate() {
            let row = &tab[j * self.modes..(j + 1) * self.modes];
            for (o, b) in out.iter_mut().zip(row) {
                *o += v * b;
            }
        }
        let w = self.grid.weight();
        out.iter_mut().for_each(|o| *o *= w);
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Table {
    Cos,
    Sin,
}

/// Projects nodal data onto `modes` cosine modes; requires M ≥ 2N.
pub fn to_spectral(u: &NodalField, modes: usize) -> Result<SpectralField> {
    SpectralSpace::new(u.len(), modes)?.to_spectral(u)
}

/// Evaluates `c` at every node of `grid` (any grid size).
pub fn to_nodal(c: &SpectralField, grid: &Grid) -> NodalField {
    NodalField {
        values: grid.nodes().iter().map(|&x| c.evaluate(x)).collect(),
    }
}

pub fn nodal_to_sine(q: &NodalField, modes: usize) -> Result<SineField> {
    SpectralSpace::new(q.len(), modes)?.nodal_to_sine(q)
}

pub fn sine_to_nodal(s: &SineField, grid: &Grid) -> NodalField {
    NodalField {
        values: grid.nodes().iter().map(|&x| s.evaluate(x)).collect(),
    }
}
