//! Pseudospectral solver for the nonlocal degenerate parabolic equation
//!
//! ```text
//! u_t + (uⁿ I(u)_x)_x = 0   on Ω = (0,1),   u_x = uⁿ I(u)_x = 0 on ∂Ω
//! ```
//!
//! where `I` is the square root of the Neumann Laplacian (I∘I = −Δ). Fields
//! live in the cosine basis φ_k = √2 cos(kπx), fluxes in the sine basis, so
//! zero-flux boundary conditions and mass conservation are structural.
//!
//! Time stepping is backward Euler with a regularized mobility (either
//! `u₊ⁿ + ε` or the Bertozzi–Pugh family `f_δ`); each step is a Galerkin
//! solve done by damped Newton. Each step records the conserved mass together
//! with the energy and entropy ledgers (see [`StepReport`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod error;
pub mod evolution;
pub mod halflap;
pub mod mobility;
pub mod params;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod stationary;

pub use error::{Error, Result};
pub use evolution::{StepReport, Trajectory};
pub use halflap::Order;
pub use mobility::{EntropySpec, MobilityKind};
pub use params::ModelParams;
pub use spectral::{Grid, NodalField, SineField, SpectralField, SpectralSpace};
