use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::{EntropySpec, MobilityKind};

/// Model and discretization parameters for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Mobility exponent, n ≥ 1.
    pub n: f64,
    pub eps: f64,
    pub delta: f64,
    /// Time step.
    pub tau: f64,
    /// Cosine modes N.
    pub modes: usize,
    /// Collocation nodes M ≥ 2N.
    pub nodes: usize,
    /// Horizon T.
    pub horizon: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub mobility: MobilityKind,
    /// Keep every `stride`-th state in the trajectory (initial and final are always kept).
    pub stride: usize,
    /// Record ∫G(u) each step. With n ≥ 2 a non-positive node aborts the run.
    pub track_entropy: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n: 3.0,
            eps: 1e-3,
            delta: 0.0,
            tau: 1e-5,
            modes: 64,
            nodes: 128,
            horizon: 1e-2,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            mobility: MobilityKind::PowerEps,
            stride: 1,
            track_entropy: true,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 1.0) || !self.n.is_finite() {
            return Err(Error::Config(format!("n must be ≥ 1, got {}", self.n)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be ≥ 0, got {}", self.horizon)));
        }
        if self.modes == 0 {
            return Err(Error::Config("modes must be positive".into()));
        }
        if self.nodes < 2 * self.modes {
            return Err(Error::Config(format!(
                "nodes must be ≥ 2·modes = {}, got {}",
                2 * self.modes,
                self.nodes
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config("newton_tol must be positive".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        if self.eps < 0.0 || self.delta < 0.0 {
            return Err(Error::Config("eps and delta must be non-negative".into()));
        }
        match self.mobility {
            MobilityKind::PowerEps => {
                if !(self.eps > 0.0) {
                    return Err(Error::Config("power_eps mobility needs eps > 0".into()));
                }
                if self.delta != 0.0 {
                    return Err(Error::Config("power_eps mobility needs delta = 0".into()));
                }
            }
            MobilityKind::BertozziPugh => {
                if !(self.delta > 0.0) {
                    return Err(Error::Config("bertozzi_pugh mobility needs delta > 0".into()));
                }
                if self.eps != 0.0 {
                    return Err(Error::Config("bertozzi_pugh mobility needs eps = 0".into()));
                }
            }
            MobilityKind::Constant => {}
        }
        Ok(())
    }

    pub fn entropy_spec(&self) -> EntropySpec {
        match self.mobility {
            MobilityKind::PowerEps => EntropySpec::power(self.n, self.eps),
            MobilityKind::BertozziPugh => EntropySpec::bertozzi_pugh(self.n, self.delta),
            MobilityKind::Constant => EntropySpec::Constant,
        }
    }

    /// Number of steps of size τ covering [0, T].
    pub fn steps(&self) -> usize {
        (self.horizon / self.tau).round() as usize
    }

    /// Parameters with a different ε, everything else shared.
    pub fn with_eps(&self, eps: f64) -> Self {
        ModelParams {
            eps,
            delta: 0.0,
            mobility: MobilityKind::PowerEps,
            ..self.clone()
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        ModelParams {
            delta,
            eps: 0.0,
            mobility: MobilityKind::BertozziPugh,
            ..self.clone()
        }
    }
}
