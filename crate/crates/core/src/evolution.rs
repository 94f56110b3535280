//! Backward-Euler time stepping with per-step diagnostics, plus ε- and
//! δ-continuation studies.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::halflap::{apply_i, seminorm, Order};
use crate::mobility::{entropy_integral, EntropySpec, MobilityKind};
use crate::params::ModelParams;
use crate::spectral::{SpectralField, SpectralSpace};
use crate::stationary::{StationaryProblem, StepSolver};

/// How many times a failing step may halve its local time step.
pub const MAX_HALVINGS: u32 = 5;

/// Consecutive clamped steps tolerated for the δ-mobility before the run fails.
pub const MAX_CLAMPED_STEPS: usize = 20;

/// Diagnostics of one accepted step (or of the initial state).
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub t: f64,
    pub mass: f64,
    /// ‖u‖²_{Ḣ^{1/2}}
    pub energy_half: f64,
    /// Σ 2τ ∫ f(u)(∂_x I u)²
    pub dissipation_cum: f64,
    /// ∫ G(u); NaN when not tracked, +∞ where G is infinite.
    pub entropy: f64,
    /// Σ τ ‖u‖²_{Ḣ^{3/2}}
    pub h32_cum: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub newton_iters: usize,
    /// ∫ |f(u) ∂_x I(u)|
    pub flux_l1: f64,
    /// Local τ halvings needed for this step.
    pub halvings: u32,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: SpectralField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ModelParams,
    pub initial: StepReport,
    /// One report per accepted step, times strictly increasing.
    pub reports: Vec<StepReport>,
    /// Every `stride`-th state; the initial and last states are always kept.
    pub snapshots: Vec<Snapshot>,
    pub final_state: SpectralField,
}

impl Trajectory {
    /// A trajectory with no steps, holding `u0` as its final state. Diagnostics
    /// that were never computed are NaN.
    pub fn empty(params: &ModelParams, u0: &SpectralField) -> Self {
        let initial = StepReport {
            t: 0.0,
            mass: u0.mean(),
            energy_half: f64::NAN,
            dissipation_cum: 0.0,
            entropy: f64::NAN,
            h32_cum: 0.0,
            min_u: f64::NAN,
            max_u: f64::NAN,
            newton_iters: 0,
            flux_l1: f64::NAN,
            halvings: 0,
            clamped: false,
        };
        Trajectory {
            params: params.clone(),
            initial,
            reports: vec![],
            snapshots: vec![],
            final_state: u0.clone(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.t).collect()
    }

    pub fn steps(&self) -> usize {
        self.reports.len()
    }

    /// Largest relative mass drift over the run.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.initial.mass;
        self.reports
            .iter()
            .map(|r| (r.mass - m0).abs() / (1.0 + m0.abs()))
            .fold(0.0, f64::max)
    }

    /// max_t [E(t) + D_cum(t) − E(0)]
    pub fn energy_excess(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.energy_half + r.dissipation_cum - self.initial.energy_half)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max_t [∫G(u(t)) + Σ τ‖u‖²_{3/2} − ∫G(u_0)]
    pub fn entropy_excess(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.entropy + r.h32_cum - self.initial.entropy)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_u(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.min_u)
            .fold(self.initial.min_u, f64::min)
    }
}

/// A run that stopped early: what was computed, and why it stopped.
#[derive(Debug)]
pub struct AbortedRun {
    pub partial: Trajectory,
    pub cause: Error,
}

impl std::fmt::Display for AbortedRun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "run aborted after {} steps: {}",
            self.partial.steps(),
            self.cause
        )
    }
}

struct Diagnostics<'a> {
    space: &'a SpectralSpace,
    spec: EntropySpec,
    track_entropy: bool,
}

impl Diagnostics<'_> {
    fn report(&self, u: &SpectralField, t: f64) -> Result<StepReport> {
        let nodal = self.space.to_nodal(u)?;
        let dxi = self
            .space
            .sine_to_nodal(&crate::halflap::apply_dx_i(u))?;
        let flux_l1 = nodal
            .values()
            .iter()
            .zip(dxi.values())
            .map(|(&v, d)| (self.spec.f(v) * d).abs())
            .sum::<f64>()
            * self.space.grid().weight();
        let positivity_required = self.spec.exponent().is_some_and(|n| n >= 2.0);
        if self.track_entropy && positivity_required {
            if let Some((node, &value)) = nodal.values().iter().enumerate().find(|(_, &v)| v <= 0.0) {
                return Err(Error::EntropyDomain { node, value });
            }
        }
        let entropy = if self.track_entropy {
            match entropy_integral(&nodal, &self.spec) {
                Ok(e) => e,
                Err(err @ Error::EntropyDomain { .. }) => {
                    if positivity_required {
                        return Err(err);
                    }
                    f64::INFINITY
                }
                Err(e) => return Err(e),
            }
        } else {
            f64::NAN
        };
        Ok(StepReport {
            t,
            mass: u.mean(),
            energy_half: seminorm(u, Order::Half),
            dissipation_cum: 0.0,
            entropy,
            h32_cum: 0.0,
            min_u: nodal.min(),
            max_u: nodal.max(),
            newton_iters: 0,
            flux_l1,
            halvings: 0,
            clamped: false,
        })
    }
}

struct Advance {
    u: SpectralField,
    dissipation: f64,
    h32: f64,
    iters: usize,
    halvings: u32,
    clamped: bool,
}

fn advance(
    solver: &StepSolver,
    params: &ModelParams,
    u: &SpectralField,
) -> Result<Advance> {
    let mut last_err = None;
    for halvings in 0..=MAX_HALVINGS {
        let substeps = 1usize << halvings;
        let tau = params.tau / substeps as f64;
        let sub = ModelParams {
            tau,
            ..params.clone()
        };
        let mut state = u.clone();
        let mut acc = Advance {
            u: u.clone(),
            dissipation: 0.0,
            h32: 0.0,
            iters: 0,
            halvings,
            clamped: false,
        };
        let mut ok = true;
        for _ in 0..substeps {
            let prob = StationaryProblem::new(state.clone(), &sub)?;
            match solver.solve(&prob, &state) {
                Ok(sol) => {
                    acc.dissipation += 2.0 * tau * sol.dissipation;
                    acc.h32 += tau * seminorm(&sol.u, Order::ThreeHalves);
                    acc.iters += sol.newton_iters;
                    acc.clamped |= sol.clamped;
                    state = sol.u;
                }
                Err(e @ Error::StepFailure(_)) => {
                    last_err = Some(e);
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok {
            acc.u = state;
            return Ok(acc);
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Runs T/τ implicit steps from `u0`.
///
/// A failing step is retried as 2, 4, … 32 substeps covering the same
/// interval. If that still fails the run stops and the partial trajectory
/// is returned inside the error.
pub fn run(params: &ModelParams, u0: &SpectralField) -> std::result::Result<Trajectory, Box<AbortedRun>> {
    run_inner(params, u0).map_err(|(partial, cause)| {
        Box::new(AbortedRun {
            partial: *partial,
            cause,
        })
    })
}

type Partial = (Box<Trajectory>, Error);

fn run_inner(params: &ModelParams, u0: &SpectralField) -> std::result::Result<Trajectory, Partial> {
    let fail = |e: Error| (Box::new(Trajectory::empty(params, u0)), e);
    params.validate().map_err(fail)?;
    if u0.modes() > params.modes {
        return Err(fail(Error::Config(format!(
            "initial state has {} modes, params allow {}",
            u0.modes(),
            params.modes
        ))));
    }
    let u0 = u0.resized(params.modes);
    let solver = StepSolver::for_params(params).map_err(fail)?;
    let diag = Diagnostics {
        space: solver.space(),
        spec: params.entropy_spec(),
        track_entropy: params.track_entropy,
    };
    let initial = diag.report(&u0, 0.0).map_err(fail)?;

    let mut traj = Trajectory {
        params: params.clone(),
        initial,
        reports: Vec::with_capacity(params.steps()),
        snapshots: vec![Snapshot {
            t: 0.0,
            state: u0.clone(),
        }],
        final_state: u0.clone(),
    };
    let mut u = u0;
    let mut dissipation_cum = 0.0;
    let mut h32_cum = 0.0;
    let mut clamped_run = 0usize;
    let steps = params.steps();

    for step in 1..=steps {
        let t = step as f64 * params.tau;
        let adv = match advance(&solver, params, &u) {
            Ok(a) => a,
            Err(e) => return Err(finish_partial(traj, u, e)),
        };
        clamped_run = if adv.clamped { clamped_run + 1 } else { 0 };
        u = adv.u;
        dissipation_cum += adv.dissipation;
        h32_cum += adv.h32;
        let mut rep = match diag.report(&u, t) {
            Ok(r) => r,
            Err(e) => return Err(finish_partial(traj, u, e)),
        };
        rep.dissipation_cum = dissipation_cum;
        rep.h32_cum = h32_cum;
        rep.newton_iters = adv.iters;
        rep.halvings = adv.halvings;
        rep.clamped = adv.clamped;
        traj.reports.push(rep);
        if step % params.stride == 0 && step != steps {
            traj.snapshots.push(Snapshot {
                t,
                state: u.clone(),
            });
        }
        if clamped_run > MAX_CLAMPED_STEPS {
            let e = Error::Domain(format!(
                "iterate negative for {clamped_run} consecutive steps under the δ-mobility"
            ));
            return Err(finish_partial(traj, u, e));
        }
    }
    if steps > 0 {
        traj.snapshots.push(Snapshot {
            t: traj.reports.last().map_or(0.0, |r| r.t),
            state: u.clone(),
        });
    }
    traj.final_state = u;
    Ok(traj)
}

fn finish_partial(mut traj: Trajectory, u: SpectralField, e: Error) -> Partial {
    traj.final_state = u;
    (Box::new(traj), e)
}

/// Runs with the δ-mobility f_δ from the lifted data u0 + δ. Requires
/// 1 ≤ n < 2 and δ > 0. The projected u0 may dip below zero by truncation
/// error; anything below −δ/2 is rejected.
pub fn run_bertozzi_pugh(
    params: &ModelParams,
    u0: &SpectralField,
) -> std::result::Result<Trajectory, Box<AbortedRun>> {
    let reject = |e: Error| {
        Box::new(AbortedRun {
            partial: Trajectory::empty(params, u0),
            cause: e,
        })
    };
    if !(params.n >= 1.0 && params.n < 2.0) {
        return Err(reject(Error::Config(format!(
            "δ-scheme needs 1 ≤ n < 2, got {}",
            params.n
        ))));
    }
    if params.mobility != MobilityKind::BertozziPugh || !(params.delta > 0.0) {
        return Err(reject(Error::Config(
            "δ-scheme needs bertozzi_pugh mobility with delta > 0".into(),
        )));
    }
    let space = SpectralSpace::new(params.nodes, params.modes).map_err(reject)?;
    let nodal = space.to_nodal(&u0.resized(params.modes)).map_err(reject)?;
    if nodal.min() < -0.5 * params.delta {
        return Err(reject(Error::Domain(format!(
            "initial data must be non-negative, min is {}",
            nodal.min()
        ))));
    }
    run(params, &lift(u0, params.delta))
}

/// u0 + δ
pub fn lift(u0: &SpectralField, delta: f64) -> SpectralField {
    u0.plus(&SpectralField::constant(delta, 1))
}

/// Result of a continuation study: one trajectory per schedule entry and the
/// L² distances between consecutive final states.
#[derive(Debug, Clone)]
pub struct Continuation {
    pub schedule: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub distances: Vec<f64>,
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Config("empty continuation schedule".into()));
    }
    if schedule.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Config("schedule entries must be positive".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("schedule must be strictly decreasing".into()));
    }
    Ok(())
}

fn collect_study(
    schedule: &[f64],
    runs: Vec<std::result::Result<Trajectory, Box<AbortedRun>>>,
) -> std::result::Result<Continuation, Box<AbortedRun>> {
    let trajectories = runs.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
    let distances = trajectories
        .windows(2)
        .map(|w| w[0].final_state.l2_distance(&w[1].final_state))
        .collect();
    Ok(Continuation {
        schedule: schedule.to_vec(),
        trajectories,
        distances,
    })
}

/// One ε-regularized run per schedule entry, in parallel.
pub fn continuation_eps(
    params: &ModelParams,
    u0: &SpectralField,
    schedule: &[f64],
) -> std::result::Result<Continuation, Box<AbortedRun>> {
    check_schedule(schedule).map_err(|e| {
        Box::new(AbortedRun {
            partial: Trajectory::empty(params, u0),
            cause: e,
        })
    })?;
    let runs = schedule
        .par_iter()
        .map(|&eps| run(&params.with_eps(eps), u0))
        .collect();
    collect_study(schedule, runs)
}

/// One δ-scheme run per schedule entry, in parallel.
pub fn continuation_delta(
    params: &ModelParams,
    u0: &SpectralField,
    schedule: &[f64],
) -> std::result::Result<Continuation, Box<AbortedRun>> {
    check_schedule(schedule).map_err(|e| {
        Box::new(AbortedRun {
            partial: Trajectory::empty(params, u0),
            cause: e,
        })
    })?;
    let runs = schedule
        .par_iter()
        .map(|&delta| run_bertozzi_pugh(&params.with_delta(delta), u0))
        .collect();
    collect_study(schedule, runs)
}

/// Fluid pressure p = −(E′/4) I(u).
pub fn pressure(u: &SpectralField, e_prime: f64) -> Result<SpectralField> {
    if !(e_prime > 0.0) {
        return Err(Error::Config(format!("E' must be positive, got {e_prime}")));
    }
    Ok(apply_i(u).scaled(-0.25 * e_prime))
}
