//! One backward-Euler step: find u in the Galerkin cosine space with
//!
//! ```text
//! u + τ ∂_x( f(u) ∂_x I(u) ) = g,    ∂_x u = ∂_x I(u) = 0 on ∂Ω.
//! ```
//!
//! The flux f(u)·∂_xI(u) is formed nodally on the dealiased grid and
//! projected onto sines; ∂_x ψ_k = kπ φ_k brings it back to cosines. The
//! k = 0 row carries no flux, so ∫u = ∫g holds to the accuracy of the solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::halflap::{eigenvalue, sqrt_eigenvalue};
use crate::mobility::EntropySpec;
use crate::params::ModelParams;
use crate::spectral::{SpectralField, SpectralSpace, Table};

/// Smallest line-search step before Newton is declared stalled.
const MIN_DAMPING: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone)]
pub struct StationaryProblem {
    pub g: SpectralField,
    pub tau: f64,
    pub spec: EntropySpec,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl StationaryProblem {
    pub fn new(g: SpectralField, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if g.modes() > params.modes {
            return Err(Error::Config(format!(
                "right-hand side has {} modes, params allow {}",
                g.modes(),
                params.modes
            )));
        }
        Ok(StationaryProblem {
            g: g.resized(params.modes),
            tau: params.tau,
            spec: params.entropy_spec(),
            newton_tol: params.newton_tol,
            newton_max_iter: params.newton_max_iter,
        })
    }

    /// Stopping threshold newton_tol·(1 + ‖g‖).
    pub fn target(&self) -> f64 {
        self.newton_tol * (1.0 + self.g.l2_norm())
    }
}

#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub u: SpectralField,
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// Nodal quadrature of f(u)(∂_x I u)².
    pub dissipation: f64,
    /// Some node was negative and got clamped before evaluating f_δ.
    pub clamped: bool,
    /// Newton stalled and the fixed-point iteration finished the solve.
    pub used_fallback: bool,
}

/// How the Newton Jacobian is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Exact derivative of the discrete residual.
    #[default]
    Analytic,
    /// Forward differences, column step 1e−7·(1 + ‖u‖).
    FiniteDifference,
}

/// Nodal quantities of a state: u(x_j), ∂_xI(u)(x_j) and f(u(x_j)).
struct NodalState {
    u: Vec<f64>,
    dxi: Vec<f64>,
    mobility: Vec<f64>,
    clamped: bool,
}

/// Galerkin residual and Newton machinery on a fixed spectral space.
#[derive(Debug, Clone)]
pub struct StepSolver {
    space: SpectralSpace,
    jacobian: JacobianMode,
    // M×N basis matrices for Jacobian assembly.
    phi: DMatrix<f64>,
    psi: DMatrix<f64>,
}

impl StepSolver {
    pub fn new(space: SpectralSpace) -> Self {
        let (m, n) = (space.nodes(), space.modes());
        let phi = DMatrix::from_fn(m, n, |j, k| space.cos_row(j)[k]);
        let psi = DMatrix::from_fn(m, n, |j, k| space.sin_row(j)[k]);
        StepSolver {
            space,
            jacobian: JacobianMode::Analytic,
            phi,
            psi,
        }
    }

    pub fn for_params(params: &ModelParams) -> Result<Self> {
        Ok(Self::new(SpectralSpace::new(params.nodes, params.modes)?))
    }

    pub fn with_jacobian(mut self, mode: JacobianMode) -> Self {
        self.jacobian = mode;
        self
    }

    pub fn space(&self) -> &SpectralSpace {
        &self.space
    }

    fn nodal_state(&self, coeffs: &[f64], spec: &EntropySpec) -> NodalState {
        let m = self.space.nodes();
        let mut u = vec![0.0; m];
        let mut dxi = vec![0.0; m];
        self.space.synthesize_into(coeffs, Table::Cos, &mut u);
        let s: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| eigenvalue(k) * c)
            .collect();
        self.space.synthesize_into(&s, Table::Sin, &mut dxi);
        let clamped = matches!(spec, EntropySpec::BertozziPugh { .. }) && u.iter().any(|&v| v < 0.0);
        let mobility = u.iter().map(|&v| spec.f(v)).collect();
        NodalState {
            u,
            dxi,
            mobility,
            clamped,
        }
    }

    fn residual_coeffs(&self, coeffs: &[f64], prob: &StationaryProblem) -> Vec<f64> {
        let st = self.nodal_state(coeffs, &prob.spec);
        let flux: Vec<f64> = st.mobility.iter().zip(&st.dxi).map(|(f, d)| f * d).collect();
        let mut q = vec![0.0; self.space.modes()];
        self.space.project_into(&flux, Table::Sin, &mut q);
        let g = prob.g.coeffs();
        (0..self.space.modes())
            .map(|k| {
                let gk = g.get(k).copied().unwrap_or(0.0);
                if k == 0 {
                    coeffs[0] - gk
                } else {
                    coeffs[k] - gk + prob.tau * sqrt_eigenvalue(k) * q[k]
                }
            })
            .collect()
    }

    /// Residual coefficients (u_k − g_k) + τ λ_k^{1/2} q_k(u).
    pub fn residual(&self, u: &SpectralField, prob: &StationaryProblem) -> Result<SpectralField> {
        if u.modes() > self.space.modes() {
            return Err(Error::Config(format!(
                "iterate has {} modes, space holds {}",
                u.modes(),
                self.space.modes()
            )));
        }
        let u = u.resized(self.space.modes());
        Ok(SpectralField::from_vec_unchecked(
            self.residual_coeffs(u.coeffs(), prob),
        ))
    }

    /// Jacobian of the residual at `u` in the configured mode.
    pub fn jacobian(&self, u: &SpectralField, prob: &StationaryProblem) -> DMatrix<f64> {
        let u = u.resized(self.space.modes());
        match self.jacobian {
            JacobianMode::Analytic => self.analytic_jacobian(u.coeffs(), prob),
            JacobianMode::FiniteDifference => self.fd_jacobian(u.coeffs(), prob),
        }
    }

    fn analytic_jacobian(&self, coeffs: &[f64], prob: &StationaryProblem) -> DMatrix<f64> {
        let (m, n) = (self.space.nodes(), self.space.modes());
        let st = self.nodal_state(coeffs, &prob.spec);
        // ∂F_j/∂u_l = f'(U_j) D_j φ_l(x_j) + f(U_j) λ_l ψ_l(x_j)
        let mut a = DMatrix::zeros(m, n);
        for l in 0..n {
            let lam = eigenvalue(l);
            for j in 0..m {
                a[(j, l)] = prob.spec.f_prime(st.u[j]) * st.dxi[j] * self.phi[(j, l)]
                    + st.mobility[j] * lam * self.psi[(j, l)];
            }
        }
        let mut jac = self.psi.tr_mul(&a);
        let w = self.space.grid().weight();
        for k in 0..n {
            let scale = prob.tau * sqrt_eigenvalue(k) * w;
            for l in 0..n {
                jac[(k, l)] *= scale;
            }
            jac[(k, k)] += 1.0;
        }
        jac
    }

    fn fd_jacobian(&self, coeffs: &[f64], prob: &StationaryProblem) -> DMatrix<f64> {
        let n = self.space.modes();
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        let h = 1e-7 * (1.0 + norm);
        let base = self.residual_coeffs(coeffs, prob);
        let mut jac = DMatrix::zeros(n, n);
        let mut shifted = coeffs.to_vec();
        for l in 0..n {
            shifted[l] = coeffs[l] + h;
            let r = self.residual_coeffs(&shifted, prob);
            for k in 0..n {
                jac[(k, l)] = (r[k] - base[k]) / h;
            }
            shifted[l] = coeffs[l];
        }
        jac
    }

    /// Damped Newton with backtracking; falls back to a preconditioned
    /// fixed-point iteration when the line search cannot reduce the residual.
    pub fn solve(&self, prob: &StationaryProblem, u_init: &SpectralField) -> Result<StationarySolution> {
        let n = self.space.modes();
        let target = prob.target();
        let mut u = u_init.resized(n).into_coeffs();
        if u.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("initial iterate is not finite".into()));
        }
        let mut r = self.residual_coeffs(&u, prob);
        let mut rnorm = norm(&r);
        let mut history = vec![rnorm];
        let mut iters = 0;
        let mut stalled = false;

        while rnorm > target && iters < prob.newton_max_iter {
            let jac = self.jacobian(&SpectralField::from_vec_unchecked(u.clone()), prob);
            let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
            let Some(step) = jac.lu().solve(&rhs) else {
                stalled = true;
                break;
            };
            iters += 1;
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha >= MIN_DAMPING {
                let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
                let rt = self.residual_coeffs(&trial, prob);
                let tn = norm(&rt);
                if tn.is_finite() && tn < rnorm {
                    u = trial;
                    r = rt;
                    rnorm = tn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            history.push(rnorm);
            if !accepted {
                stalled = true;
                break;
            }
        }

        let mut used_fallback = false;
        if rnorm > target && stalled {
            used_fallback = true;
            let remaining = prob.newton_max_iter.saturating_sub(iters).max(1);
            let (uf, rf, used) = self.fixed_point(prob, u, r, remaining, &mut history);
            u = uf;
            rnorm = norm(&rf);
            iters += used;
        }

        if !(rnorm <= target) {
            return Err(Error::step_failure(
                SpectralField::from_vec_unchecked(u),
                history,
            ));
        }

        let st = self.nodal_state(&u, &prob.spec);
        let dissipation = st
            .mobility
            .iter()
            .zip(&st.dxi)
            .map(|(f, d)| f * d * d)
            .sum::<f64>()
            * self.space.grid().weight();
        Ok(StationarySolution {
            u: SpectralField::from_vec_unchecked(u),
            residual_norm: rnorm,
            newton_iters: iters,
            dissipation,
            clamped: st.clamped,
            used_fallback,
        })
    }

    // u ← u − ω P⁻¹ r with P_k = 1 + τ λ_k^{3/2} f̄, f̄ the mean mobility.
    fn fixed_point(
        &self,
        prob: &StationaryProblem,
        mut u: Vec<f64>,
        mut r: Vec<f64>,
        max_iter: usize,
        history: &mut Vec<f64>,
    ) -> (Vec<f64>, Vec<f64>, usize) {
        let target = prob.target();
        let mut rnorm = norm(&r);
        let mut omega: f64 = 1.0;
        let mut used = 0;
        while rnorm > target && used < max_iter && omega > 1e-8 {
            let st = self.nodal_state(&u, &prob.spec);
            let fbar = st.mobility.iter().sum::<f64>() * self.space.grid().weight();
            let trial: Vec<f64> = u
                .iter()
                .zip(&r)
                .enumerate()
                .map(|(k, (a, rk))| {
                    let p = 1.0 + prob.tau * eigenvalue(k) * sqrt_eigenvalue(k) * fbar;
                    a - omega * rk / p
                })
                .collect();
            let rt = self.residual_coeffs(&trial, prob);
            let tn = norm(&rt);
            used += 1;
            if tn.is_finite() && tn < rnorm {
                u = trial;
                r = rt;
                rnorm = tn;
                omega = (omega * 1.5).min(1.0);
            } else {
                omega *= 0.5;
            }
            history.push(rnorm);
        }
        (u, r, used)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Residual on the default dealiased space for `params`.
pub fn residual(u: &SpectralField, prob: &StationaryProblem, params: &ModelParams) -> Result<SpectralField> {
    StepSolver::for_params(params)?.residual(u, prob)
}

/// One implicit step on the space described by `params`.
pub fn solve_step(
    prob: &StationaryProblem,
    u_init: &SpectralField,
    params: &ModelParams,
) -> Result<StationarySolution> {
    StepSolver::for_params(params)?.solve(prob, u_init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halflap::{apply_dx_i, dx_sine, seminorm, Order};
    use crate::mobility::MobilityKind;
    use std::f64::consts::PI;

    fn constant_params(modes: usize, tau: f64) -> ModelParams {
        ModelParams {
            modes,
            nodes: 2 * modes,
            tau,
            mobility: MobilityKind::Constant,
            ..Default::default()
        }
    }

    #[test]
    fn residual_at_g_is_pure_flux() {
        let p = ModelParams {
            modes: 16,
            nodes: 32,
            tau: 1e-3,
            ..Default::default()
        };
        let g = SpectralField::new(vec![1.5, 0.3, -0.1, 0.05]).unwrap();
        let prob = StationaryProblem::new(g.clone(), &p).unwrap();
        let r = residual(&g, &prob, &p).unwrap();
        assert_eq!(r.coeffs()[0], 0.0);
        assert!(r.coeffs()[1].abs() > 0.0);
    }

    #[test]
    fn constant_mobility_residual_is_diagonal() {
        // ∂_x(∂_x I φ_k) = λ_k^{3/2} φ_k
        let p = constant_params(8, 0.01);
        let g = SpectralField::new(vec![0.2, -0.4, 0.7, 0.0, 0.1]).unwrap();
        let u = SpectralField::new(vec![0.3, 0.1, -0.2, 0.5, 0.0, 0.9]).unwrap();
        let prob = StationaryProblem::new(g.clone(), &p).unwrap();
        let r = residual(&u, &prob, &p).unwrap();
        // independent composition: dx_sine(apply_dx_i(u))
        let lap = dx_sine(&apply_dx_i(&u.resized(8)));
        for k in 0..8 {
            let uk = u.resized(8).coeffs()[k];
            let gk = g.resized(8).coeffs()[k];
            let want = (1.0 + 0.01 * (k as f64 * PI).powi(3)) * uk - gk;
            let composed = uk - gk + 0.01 * lap.coeffs()[k];
            assert!((r.coeffs()[k] - want).abs() < 1e-10 * want.abs().max(1.0), "k={k}");
            assert!((composed - want).abs() < 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn equal_constants_have_zero_residual() {
        let p = ModelParams {
            modes: 8,
            nodes: 16,
            ..Default::default()
        };
        let g = SpectralField::constant(0.7, 8);
        let prob = StationaryProblem::new(g.clone(), &p).unwrap();
        let r = residual(&g, &prob, &p).unwrap();
        assert!(r.coeffs().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_step_takes_one_newton_iteration() {
        let p = constant_params(8, 1.0);
        let g = SpectralField::basis(1, 8);
        let prob = StationaryProblem::new(g.clone(), &p).unwrap();
        let sol = solve_step(&prob, &g, &p).unwrap();
        assert_eq!(sol.newton_iters, 1);
        let want = 1.0 / (1.0 + PI.powi(3));
        assert!((sol.u.coeffs()[1] - want).abs() < 1e-14);
        for (k, c) in sol.u.coeffs().iter().enumerate() {
            if k != 1 {
                assert!(c.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_data_is_a_fixed_point() {
        let p = ModelParams {
            modes: 16,
            nodes: 32,
            ..Default::default()
        };
        let g = SpectralField::constant(1.3, 16);
        let prob = StationaryProblem::new(g.clone(), &p).unwrap();
        let sol = solve_step(&prob, &g, &p).unwrap();
        assert_eq!(sol.newton_iters, 0);
        assert_eq!(sol.u, g);
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        for spec_params in [
            ModelParams {
                modes: 12,
                nodes: 24,
                tau: 1e-3,
                ..Default::default()
            },
            ModelParams {
                modes: 12,
                nodes: 24,
                tau: 1e-3,
                n: 1.5,
                ..Default::default()
            }
            .with_delta(0.05),
        ] {
            let g = SpectralField::new(vec![1.2, 0.4, -0.1, 0.05, 0.02]).unwrap();
            let prob = StationaryProblem::new(g.clone(), &spec_params).unwrap();
            let solver = StepSolver::for_params(&spec_params).unwrap();
            let fd = solver
                .clone()
                .with_jacobian(JacobianMode::FiniteDifference)
                .jacobian(&g, &prob);
            let an = solver.jacobian(&g, &prob);
            let scale = an.abs().max();
            assert!((fd - &an).abs().max() < 1e-5 * scale);
        }
    }

    #[test]
    fn nonlinear_step_conserves_mass_and_energy() {
        let p = ModelParams {
            n: 3.0,
            eps: 1e-3,
            tau: 1e-4,
            modes: 64,
            nodes: 128,
            ..Default::default()
        };
        let g = SpectralField::new(vec![1.5, std::f64::consts::FRAC_1_SQRT_2]).unwrap();
        let prob = StationaryProblem::new(g.clone(), &p).unwrap();
        let sol = solve_step(&prob, &g, &p).unwrap();
        assert!((sol.u.mean() - 1.5).abs() <= 1e-13);
        assert!(sol.residual_norm <= prob.target());
        let lhs = seminorm(&sol.u, Order::Half) + 2.0 * p.tau * sol.dissipation;
        let rhs = seminorm(&g, Order::Half) + 10.0 * p.newton_tol * (1.0 + g.l2_norm().powi(2));
        assert!(lhs <= rhs, "lhs={lhs} rhs={rhs}");
        assert!(sol.dissipation >= 0.0);

        // Two half steps land close to one full step (first-order splitting error).
        let half = ModelParams { tau: 0.5e-4, ..p.clone() };
        let prob_a = StationaryProblem::new(g.clone(), &half).unwrap();
        let mid = solve_step(&prob_a, &g, &half).unwrap().u;
        let prob_b = StationaryProblem::new(mid.clone(), &half).unwrap();
        let two = solve_step(&prob_b, &mid, &half).unwrap().u;
        assert!((two.mean() - 1.5).abs() <= 1e-13);
        let gap = two.l2_distance(&sol.u);
        let change = sol.u.l2_distance(&g);
        assert!(gap < 0.1 * change, "gap={gap} change={change}");
    }

    #[test]
    fn even_data_stays_even() {
        let p = ModelParams {
            tau: 1e-3,
            modes: 32,
            nodes: 64,
            ..Default::default()
        };
        let mut c = vec![0.0; 32];
        c[0] = 1.4;
        c[2] = 0.3;
        c[4] = -0.1;
        let g = SpectralField::new(c).unwrap();
        let prob = StationaryProblem::new(g.clone(), &p).unwrap();
        let sol = solve_step(&prob, &g, &p).unwrap();
        for (k, v) in sol.u.coeffs().iter().enumerate() {
            if k % 2 == 1 {
                assert!(v.abs() < 1e-10, "k={k} v={v}");
            }
        }
    }

    #[test]
    fn fixed_point_fallback_converges_on_its_own() {
        let p = ModelParams {
            tau: 1e-5,
            modes: 16,
            nodes: 32,
            newton_max_iter: 500,
            ..Default::default()
        };
        let g = SpectralField::new(vec![1.2, 0.5]).unwrap();
        let prob = StationaryProblem::new(g.clone(), &p).unwrap();
        let solver = StepSolver::for_params(&p).unwrap();
        let r = solver.residual_coeffs(g.resized(16).coeffs(), &prob);
        let mut hist = vec![];
        let (u, rf, _) = solver.fixed_point(&prob, g.resized(16).into_coeffs(), r, 500, &mut hist);
        assert!(norm(&rf) <= prob.target(), "{}", norm(&rf));
        let newton = solver.solve(&prob, &g).unwrap();
        let diff: f64 = u.iter().zip(newton.u.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-9);
    }

    #[test]
    fn exhausted_iterations_report_failure() {
        let p = ModelParams {
            tau: 1.0,
            modes: 16,
            nodes: 32,
            newton_max_iter: 1,
            ..Default::default()
        };
        let g = SpectralField::new(vec![1.2, 0.9, 0.3]).unwrap();
        let prob = StationaryProblem::new(g.clone(), &p).unwrap();
        match solve_step(&prob, &g, &p) {
            Err(Error::StepFailure(f)) => assert!(!f.residual_history.is_empty()),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
