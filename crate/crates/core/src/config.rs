//! JSON run configuration and initial-condition presets.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mobility::MobilityKind;
use crate::params::ModelParams;
use crate::spectral::{Grid, NodalField, SpectralField, SpectralSpace};

/// Initial data u0.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant(f64),
    /// θ + a cos(πx)
    CosineBump { theta: f64, a: f64 },
    /// θ + a max(0, cos πx)^p
    FloorBump { theta: f64, a: f64, p: f64 },
    /// Two columns `x u` on the exact midpoint grid.
    File(PathBuf),
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::CosineBump { theta: 1.2, a: 1.0 }
    }
}

impl InitialCondition {
    /// Lower bound of the preset over Ω; `None` for file data.
    pub fn lower_bound(&self) -> Option<f64> {
        match *self {
            InitialCondition::Constant(c) => Some(c),
            InitialCondition::CosineBump { theta, a } => Some(theta - a.abs()),
            InitialCondition::FloorBump { theta, a, .. } => Some(theta + a.min(0.0)),
            InitialCondition::File(_) => None,
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<NodalField> {
        match self {
            InitialCondition::Constant(c) => NodalField::sample(grid, |_| *c),
            InitialCondition::CosineBump { theta, a } => {
                NodalField::sample(grid, |x| theta + a * (PI * x).cos())
            }
            InitialCondition::FloorBump { theta, a, p } => {
                NodalField::sample(grid, |x| theta + a * (PI * x).cos().max(0.0).powf(*p))
            }
            InitialCondition::File(path) => load_ic_file(path, grid),
        }
    }

    /// Samples on the M-node grid and projects onto N modes.
    pub fn to_spectral(&self, params: &ModelParams) -> Result<SpectralField> {
        let space = SpectralSpace::new(params.nodes, params.modes)?;
        space.to_spectral(&self.sample(space.grid())?)
    }
}

/// Reads `x u` pairs; the abscissae must be the midpoints of `grid`.
pub fn load_ic_file(path: &Path, grid: &Grid) -> Result<NodalField> {
    let values = read_ic_file(path)?;
    if values.len() != grid.len() {
        return Err(Error::Config(format!(
            "{}: {} rows, grid has {} nodes",
            path.display(),
            values.len(),
            grid.len()
        )));
    }
    for (j, ((x, _), node)) in values.iter().zip(grid.nodes()).enumerate() {
        if (x - node).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "{}: row {j} has x = {x}, expected midpoint {node}",
                path.display()
            )));
        }
    }
    NodalField::new(values.into_iter().map(|(_, u)| u).collect())
}

/// Loads an IC file whose row count defines the grid.
pub fn load_ic_file_any(path: &Path) -> Result<NodalField> {
    let rows = read_ic_file(path)?;
    if rows.is_empty() {
        return Err(Error::Config(format!("{}: no data rows", path.display())));
    }
    load_ic_file(path, &Grid::new(rows.len())?)
}

fn read_ic_file(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|s| s.parse().ok()).collect();
        match parsed.as_deref() {
            Some([x, u]) => rows.push((*x, *u)),
            _ => {
                return Err(Error::Parse(format!(
                    "{}:{}: expected two numbers, got {line:?}",
                    path.display(),
                    line_no + 1
                )))
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Solve,
    OperatorCheck,
    Sweep,
    Norms,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outputs {
    pub report_csv: Option<PathBuf>,
    pub snapshots: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub ic: InitialCondition,
    pub outputs: Outputs,
    pub mode: Mode,
    pub e_prime: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: Option<f64>,
    eps: Option<f64>,
    delta: Option<f64>,
    tau: Option<f64>,
    #[serde(alias = "N")]
    modes: Option<usize>,
    #[serde(alias = "M")]
    nodes: Option<usize>,
    #[serde(alias = "T")]
    horizon: Option<f64>,
    newton_tol: Option<f64>,
    newton_max_iter: Option<usize>,
    mobility: Option<MobilityKind>,
    ic: Option<InitialCondition>,
    report_csv: Option<PathBuf>,
    snapshots: Option<PathBuf>,
    stride: Option<usize>,
    mode: Option<Mode>,
    #[serde(rename = "E_prime", alias = "e_prime")]
    e_prime: Option<f64>,
    track_entropy: Option<bool>,
}

/// Parses and validates a flat JSON configuration. Unspecified fields take
/// the defaults n = 3, ε = 1e−3, τ = 1e−5, N = 64, M = 2N, T = 1e−2,
/// newton_tol = 1e−10; giving δ > 0 without a mobility selects the δ-scheme.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
    let defaults = ModelParams::default();

    let mobility = match (raw.mobility, raw.delta) {
        (Some(m), _) => m,
        (None, Some(d)) if d > 0.0 => MobilityKind::BertozziPugh,
        _ => MobilityKind::PowerEps,
    };
    let eps = match (raw.eps, mobility) {
        (Some(e), _) => e,
        (None, MobilityKind::PowerEps) => defaults.eps,
        (None, _) => 0.0,
    };
    let modes = raw.modes.unwrap_or(defaults.modes);
    let params = ModelParams {
        n: raw.n.unwrap_or(defaults.n),
        eps,
        delta: raw.delta.unwrap_or(0.0),
        tau: raw.tau.unwrap_or(defaults.tau),
        modes,
        nodes: raw.nodes.unwrap_or(2 * modes),
        horizon: raw.horizon.unwrap_or(defaults.horizon),
        newton_tol: raw.newton_tol.unwrap_or(defaults.newton_tol),
        newton_max_iter: raw.newton_max_iter.unwrap_or(defaults.newton_max_iter),
        mobility,
        stride: raw.stride.unwrap_or(defaults.stride),
        track_entropy: raw.track_entropy.unwrap_or(defaults.track_entropy),
    };
    params.validate().map_err(|e| match e {
        Error::Config(msg) => Error::Parse(format!("config: {msg}")),
        other => other,
    })?;

    let ic = raw.ic.unwrap_or_default();
    if let InitialCondition::FloorBump { p, .. } = ic {
        if !(p > 0.0) {
            return Err(Error::Parse(format!("config: ic.floor_bump.p must be positive, got {p}")));
        }
    }
    if params.track_entropy && params.n >= 2.0 {
        if let Some(lb) = ic.lower_bound() {
            if !(lb > 0.0) {
                return Err(Error::Parse(format!(
                    "config: ic must be strictly positive for entropy tracking with n = {} (lower bound {lb})",
                    params.n
                )));
            }
        }
    }
    if let Some(e) = raw.e_prime {
        if !(e > 0.0) {
            return Err(Error::Parse(format!("config: E_prime must be positive, got {e}")));
        }
    }
    Ok(RunConfig {
        params,
        ic,
        outputs: Outputs {
            report_csv: raw.report_csv,
            snapshots: raw.snapshots,
        },
        mode: raw.mode.unwrap_or_default(),
        e_prime: raw.e_prime,
    })
}

impl RunConfig {
    /// Initial state, checking file data against the entropy positivity requirement.
    pub fn initial_state(&self) -> Result<SpectralField> {
        let space = SpectralSpace::new(self.params.nodes, self.params.modes)?;
        let nodal = self.ic.sample(space.grid())?;
        if self.params.track_entropy && self.params.n >= 2.0 {
            if let Some((node, &value)) = nodal.values().iter().enumerate().find(|(_, &v)| v <= 0.0) {
                return Err(Error::EntropyDomain { node, value });
            }
        }
        space.to_spectral(&nodal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c = parse_config("{}").unwrap();
        assert_eq!(c.params, ModelParams::default());
        assert_eq!(c.mode, Mode::Solve);
        assert_eq!(c.ic, InitialCondition::CosineBump { theta: 1.2, a: 1.0 });
    }

    #[test]
    fn delta_selects_bertozzi_pugh() {
        let c = parse_config(r#"{"n": 1.5, "delta": 0.01}"#).unwrap();
        assert_eq!(c.params.mobility, MobilityKind::BertozziPugh);
        assert_eq!(c.params.eps, 0.0);
        assert_eq!(c.params.delta, 0.01);
    }

    #[test]
    fn non_positive_ic_rejected_with_entropy_tracking() {
        let e = parse_config(r#"{"n": 3, "ic": {"constant": -1}}"#).unwrap_err();
        assert!(matches!(e, Error::Parse(_)));
        assert!(e.to_string().contains("ic"));
        // allowed when tracking is off
        parse_config(r#"{"n": 3, "ic": {"constant": -1}, "track_entropy": false}"#).unwrap();
        // and for n < 2
        parse_config(r#"{"n": 1.5, "ic": {"cosine_bump": {"theta": 1.0, "a": 1.0}}}"#).unwrap();
        assert!(parse_config(r#"{"ic": {"cosine_bump": {"theta": 1.0, "a": 1.0}}}"#).is_err());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config(r#"{"epsilon": 0.1}"#).unwrap_err();
        assert!(e.to_string().contains("epsilon"), "{e}");
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let e = parse_config(r#"{"modes": 64, "nodes": 100}"#).unwrap_err();
        assert!(e.to_string().contains("nodes"));
        let e = parse_config(r#"{"tau": -1}"#).unwrap_err();
        assert!(e.to_string().contains("tau"));
        let e = parse_config(r#"{"E_prime": 0}"#).unwrap_err();
        assert!(e.to_string().contains("E_prime"));
    }

    #[test]
    fn presets_project_as_expected() {
        let c = parse_config(r#"{"modes": 8, "ic": {"cosine_bump": {"theta": 2.0, "a": 0.5}}}"#).unwrap();
        let u0 = c.initial_state().unwrap();
        assert!((u0.coeffs()[0] - 2.0).abs() < 1e-14);
        assert!((u0.coeffs()[1] - 0.5 / std::f64::consts::SQRT_2).abs() < 1e-14);

        let c = parse_config(r#"{"modes": 16, "n": 1.5, "ic": {"floor_bump": {"theta": 0.0, "a": 1.0, "p": 2}}}"#)
            .unwrap();
        let u0 = c.initial_state().unwrap();
        // ∫ max(0,cos πx)² dx = 1/4
        assert!((u0.mean() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ic_file_round_trip_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ic.txt");
        let grid = Grid::new(8).unwrap();
        let body: String = grid
            .nodes()
            .iter()
            .map(|x| format!("{x:.17e} {:.17e}\n", 1.0 + x))
            .collect();
        std::fs::write(&path, body).unwrap();
        let u = load_ic_file(&path, &grid).unwrap();
        assert!((u.values()[3] - (1.0 + grid.nodes()[3])).abs() < 1e-15);
        assert!(load_ic_file(&path, &Grid::new(16).unwrap()).is_err());

        std::fs::write(&path, "0.1 1.0\n0.6 2.0\n").unwrap();
        assert!(matches!(load_ic_file(&path, &Grid::new(2).unwrap()), Err(Error::Config(_))));
        let missing = dir.path().join("nope.txt");
        assert!(matches!(load_ic_file_any(&missing), Err(Error::Io { .. })));
    }
}
