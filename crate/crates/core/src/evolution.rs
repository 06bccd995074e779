//! Implicit Euler time stepping for `u_t + A u = B(u)` on either mesh.
//!
//! Each step solves `M (w - u) / dt + A w - M f(w) = 0` in the lumped weak
//! sense. The solver is damped Newton on the regularized Jacobian; when the
//! Jacobian is not positive definite or the line search stalls it falls back
//! to the fixed-point map `w^{k+1} = S(u + dt f(w^k))`, where each application
//! of `S` minimizes a strictly convex energy.

use std::io::Write;

use serde::Serialize;

use crate::banded::SymBand;
use crate::error::{Error, Result};
use crate::mesh::{Field, MeshId};
use crate::norms::{energy_raw, lp_norm_raw};
use crate::operators::{accumulate_jacobian, accumulate_operator, dual_norm, extend, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub dt: f64,
    /// Absolute tolerance on the dual norm of the step residual.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub mu: f64,
    /// Halvings tried per Newton iteration before the iteration counts as failed.
    pub max_halvings: usize,
    /// Failed damping rounds tolerated before switching to the fixed-point map.
    pub fallback_after: usize,
    pub fixed_point_fallback: bool,
    /// Store every `stride`-th state (first and last are always stored).
    pub stride: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt: 0.05,
            newton_tol: 1e-10,
            max_newton: 50,
            mu: 1e-8,
            max_halvings: 10,
            fallback_after: 3,
            fixed_point_fallback: true,
            stride: 10,
        }
    }
}

impl StepControl {
    pub fn from_problem(model: &Model) -> Self {
        let cfg = model.problem();
        Self {
            dt: cfg.dt,
            newton_tol: cfg.newton_tol,
            max_newton: cfg.max_newton,
            mu: cfg.mu,
            ..Self::default()
        }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.newton_tol > 0.0) || self.stride == 0 {
            return Err(Error::InvalidParameter(format!(
                "step control needs dt > 0, newton_tol > 0, stride >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: Field,
    pub iterations: usize,
    pub residual: f64,
    pub used_fallback: bool,
}

struct StepSystem<'a> {
    model: &'a Model,
    prev: &'a [f64],
    dt: f64,
}

impl StepSystem<'_> {
    fn mass(&self) -> &[f64] {
        self.model.mesh().mass()
    }

    /// Full step residual `M (w - u) / dt + A w - M f(w)`.
    fn residual(&self, w: &[f64]) -> Vec<f64> {
        let f = self.model.nonlinearity();
        let mut r: Vec<f64> = self
            .mass()
            .iter()
            .zip(w.iter().zip(self.prev))
            .map(|(m, (wi, ui))| m * ((wi - ui) / self.dt - f.eval(*wi)))
            .collect();
        accumulate_operator(self.model, w, &mut r);
        r
    }

    /// Gradient of the convex step energy with frozen forcing.
    fn frozen_residual(&self, w: &[f64], forcing: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self
            .mass()
            .iter()
            .zip(w.iter().zip(self.prev))
            .zip(forcing)
            .map(|((m, (wi, ui)), fi)| m * (wi - ui) / self.dt - fi)
            .collect();
        accumulate_operator(self.model, w, &mut r);
        r
    }

    fn frozen_energy(&self, w: &[f64], forcing: &[f64]) -> f64 {
        let kinetic: f64 = self
            .mass()
            .iter()
            .zip(w.iter().zip(self.prev))
            .map(|(m, (wi, ui))| m * (wi - ui) * (wi - ui))
            .sum::<f64>()
            / (2.0 * self.dt);
        let work: f64 = forcing.iter().zip(w).map(|(f, wi)| f * wi).sum();
        kinetic + energy_raw(self.model, w) / self.model.p() - work
    }

    fn jacobian(&self, w: &[f64], mu: f64, with_reaction: bool) -> SymBand {
        let mesh = self.model.mesh();
        let mut jac = SymBand::zeros(mesh.node_count(), mesh.bandwidth());
        let f = self.model.nonlinearity();
        for (i, (m, wi)) in self.mass().iter().zip(w).enumerate() {
            let reaction = if with_reaction {
                f.derivative(*wi)
            } else {
                0.0
            };
            jac.add(i, i, m * (1.0 / self.dt - reaction));
        }
        accumulate_jacobian(self.model, w, mu, &mut jac);
        jac
    }

    /// Residual norms below this level are indistinguishable from rounding.
    fn rounding_floor(&self, w: &[f64]) -> f64 {
        let mass = self.mass();
        let size: Vec<f64> = w
            .iter()
            .zip(self.prev)
            .map(|(a, b)| a.abs() + b.abs())
            .collect();
        let mut op = vec![0.0; w.len()];
        accumulate_operator(self.model, w, &mut op);
        let scale = lp_norm_raw(mass, &size, 2.0) / self.dt + dual_norm(&op, mass);
        1e-13 * scale
    }
}

enum NewtonEnd {
    Converged { iterations: usize, residual: f64 },
    Stalled { iterations: usize },
}

fn newton(sys: &StepSystem, w: &mut Vec<f64>, ctrl: &StepControl) -> NewtonEnd {
    let mass = sys.mass();
    let mut r = sys.residual(w);
    let mut rn = dual_norm(&r, mass);
    let mut failed_rounds = 0;
    for it in 0..=ctrl.max_newton {
        let tol = ctrl.newton_tol.max(sys.rounding_floor(w));
        if rn <= tol {
            return NewtonEnd::Converged {
                iterations: it,
                residual: rn,
            };
        }
        if it == ctrl.max_newton {
            break;
        }
        let Ok(chol) = sys.jacobian(w, ctrl.mu, true).cholesky() else {
            return NewtonEnd::Stalled { iterations: it };
        };
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = chol.solve(&neg);
        let mut lambda = 1.0;
        let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        let mut accepted = false;
        for _ in 0..=ctrl.max_halvings {
            let trial: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + lambda * b).collect();
            let rt = sys.residual(&trial);
            let nt = dual_norm(&rt, mass);
            if nt.is_finite() && best.as_ref().is_none_or(|b| nt < b.2) {
                best = Some((trial, rt, nt));
            }
            if nt <= (1.0 - 1e-4 * lambda) * rn {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            failed_rounds += 1;
            if failed_rounds >= ctrl.fallback_after {
                return NewtonEnd::Stalled { iterations: it + 1 };
            }
        }
        match best {
            Some((trial, rt, nt)) if nt < rn => {
                *w = trial;
                r = rt;
                rn = nt;
            }
            _ => return NewtonEnd::Stalled { iterations: it + 1 },
        }
    }
    NewtonEnd::Stalled {
        iterations: ctrl.max_newton,
    }
}

/// Minimize the convex step energy with frozen forcing by Newton with an
/// Armijo line search on the energy.
fn solve_frozen(
    sys: &StepSystem,
    w: &mut Vec<f64>,
    forcing: &[f64],
    ctrl: &StepControl,
    tol: f64,
) -> usize {
    let mass = sys.mass();
    let max_iter = 4 * ctrl.max_newton.max(25);
    for it in 0..max_iter {
        let r = sys.frozen_residual(w, forcing);
        if dual_norm(&r, mass) <= tol.max(sys.rounding_floor(w)) {
            return it;
        }
        let chol = sys
            .jacobian(w, ctrl.mu.max(1e-12), false)
            .cholesky()
            .expect("frozen step Jacobian is positive definite");
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = chol.solve(&neg);
        let slope: f64 = r.iter().zip(&d).map(|(a, b)| a * b).sum();
        let e0 = sys.frozen_energy(w, forcing);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + lambda * b).collect();
            let e = sys.frozen_energy(&trial, forcing);
            if e <= e0 + 1e-4 * lambda * slope || lambda < 1e-12 {
                *w = trial;
                break;
            }
            lambda *= 0.5;
        }
    }
    max_iter
}

fn fixed_point(sys: &StepSystem, w: &mut Vec<f64>, ctrl: &StepControl) -> (usize, f64, bool) {
    let mass = sys.mass();
    let f = sys.model.nonlinearity();
    let mut total = 0;
    let max_outer = 20 * ctrl.max_newton.max(10);
    let mut rn = f64::INFINITY;
    for _ in 0..max_outer {
        let forcing: Vec<f64> = mass
            .iter()
            .zip(w.iter())
            .map(|(m, v)| m * f.eval(*v))
            .collect();
        total += 1 + solve_frozen(sys, w, &forcing, ctrl, 0.1 * ctrl.newton_tol);
        rn = dual_norm(&sys.residual(w), mass);
        if rn <= ctrl.newton_tol.max(sys.rounding_floor(w)) {
            return (total, rn, true);
        }
    }
    (total, rn, false)
}

/// One implicit Euler step from `u`.
pub fn step_implicit(model: &Model, u: &Field, ctrl: &StepControl) -> Result<StepOutcome> {
    ctrl.validate()?;
    model.mesh().check(u)?;
    let sys = StepSystem {
        model,
        prev: u.values(),
        dt: ctrl.dt,
    };
    let mut w = u.values().to_vec();
    let newton_iters = match newton(&sys, &mut w, ctrl) {
        NewtonEnd::Converged {
            iterations,
            residual,
        } => {
            return Ok(StepOutcome {
                state: Field::from_raw(u.mesh_id(), w),
                iterations,
                residual,
                used_fallback: false,
            })
        }
        NewtonEnd::Stalled { iterations } => iterations,
    };
    if ctrl.fixed_point_fallback {
        let (iters, residual, ok) = fixed_point(&sys, &mut w, ctrl);
        if ok && w.iter().all(|v| v.is_finite()) {
            return Ok(StepOutcome {
                state: Field::from_raw(u.mesh_id(), w),
                iterations: newton_iters + iters,
                residual,
                used_fallback: true,
            });
        }
        return Err(Error::NonlinearSolveFailure {
            time: f64::NAN,
            iterations: newton_iters + iters,
            residual,
        });
    }
    Err(Error::NonlinearSolveFailure {
        time: f64::NAN,
        iterations: newton_iters,
        residual: dual_norm(&sys.residual(&w), sys.mass()),
    })
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLog {
    pub t: f64,
    /// Scaled `L^2` norm.
    pub l2: f64,
    pub e_norm: f64,
    pub newton_iters: usize,
    pub residual: f64,
    /// `<B(u), u>` in the scaled pairing.
    pub forcing: f64,
}

#[derive(Debug, Clone)]
pub struct StoredState {
    pub step: usize,
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    problem: String,
    mesh: MeshId,
    p: f64,
    lipschitz: f64,
    dt: f64,
    logs: Vec<StepLog>,
    states: Vec<StoredState>,
}

impl TrajectoryRecord {
    pub fn problem(&self) -> &str {
        &self.problem
    }
    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    /// Step actually used (the horizon is split into equal steps).
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn logs(&self) -> &[StepLog] {
        &self.logs
    }
    pub fn states(&self) -> &[StoredState] {
        &self.states
    }
    pub fn final_state(&self) -> &Field {
        &self
            .states
            .last()
            .expect("a record stores its last state")
            .field
    }
    pub fn final_time(&self) -> f64 {
        self.logs.last().map_or(0.0, |l| l.t)
    }

    /// For every step, `(|u_{k+1}|^2 - |u_k|^2) / (2 dt) + <A u_{k+1}, u_{k+1}> - <B(u_{k+1}), u_{k+1}>`.
    /// Implicit Euler makes this non-positive up to the solver residual.
    pub fn energy_inequality_defects(&self) -> Vec<f64> {
        self.logs
            .windows(2)
            .map(|w| {
                let dt = w[1].t - w[0].t;
                (w[1].l2 * w[1].l2 - w[0].l2 * w[0].l2) / (2.0 * dt) + w[1].e_norm.powf(self.p)
                    - w[1].forcing
            })
            .collect()
    }

    /// Per-step log as CSV with header `t,l2_scaled,e_norm,newton_iters,residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "l2_scaled", "e_norm", "newton_iters", "residual"])?;
        for l in &self.logs {
            w.write_record([
                format!("{:?}", l.t),
                format!("{:?}", l.l2),
                format!("{:?}", l.e_norm),
                l.newton_iters.to_string(),
                format!("{:?}", l.residual),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn log_for(model: &Model, t: f64, u: &[f64], iters: usize, residual: f64) -> StepLog {
    let mass = model.mesh().mass();
    let f = model.nonlinearity();
    StepLog {
        t,
        l2: lp_norm_raw(mass, u, 2.0),
        e_norm: energy_raw(model, u).powf(1.0 / model.p()),
        newton_iters: iters,
        residual,
        forcing: mass.iter().zip(u).map(|(m, v)| m * f.eval(*v) * v).sum(),
    }
}

fn step_count(t_end: f64, dt: f64) -> usize {
    ((t_end / dt).round() as usize).max(1)
}

/// Integrate from `u0` to `t_end` with equal steps close to `ctrl.dt`.
pub fn solve_trajectory(
    model: &Model,
    u0: &Field,
    t_end: f64,
    ctrl: &StepControl,
) -> Result<TrajectoryRecord> {
    ctrl.validate()?;
    model.mesh().check(u0)?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {t_end} must be positive"
        )));
    }
    let n = step_count(t_end, ctrl.dt);
    let dt = t_end / n as f64;
    let step_ctrl = ctrl.with_dt(dt);
    let mut logs = Vec::with_capacity(n + 1);
    let mut states = vec![StoredState {
        step: 0,
        t: 0.0,
        field: u0.clone(),
    }];
    logs.push(log_for(model, 0.0, u0.values(), 0, 0.0));
    let mut u = u0.clone();
    for k in 1..=n {
        let t = k as f64 * dt;
        let out = step_implicit(model, &u, &step_ctrl).map_err(|e| match e {
            Error::NonlinearSolveFailure {
                iterations,
                residual,
                ..
            } => Error::NonlinearSolveFailure {
                time: t,
                iterations,
                residual,
            },
            other => other,
        })?;
        u = out.state;
        logs.push(log_for(model, t, u.values(), out.iterations, out.residual));
        if k % ctrl.stride == 0 || k == n {
            states.push(StoredState {
                step: k,
                t,
                field: u.clone(),
            });
        }
    }
    Ok(TrajectoryRecord {
        problem: model.problem().name.clone(),
        mesh: model.mesh().id(),
        p: model.p(),
        lipschitz: model.nonlinearity().lipschitz,
        dt,
        logs,
        states,
    })
}

/// Co-evolution of a thin trajectory and a limit trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub times: Vec<f64>,
    /// `|||u_eps(t) - E u(t)|||_2^2`
    pub gaps: Vec<f64>,
    pub initial_gap: f64,
    /// `max |a - E a_bar|` over the thin nodes.
    pub weight_gap: f64,
    pub horizon_max: f64,
    /// `max_t gap(t) / (initial_gap + weight_gap)`; absent when the denominator vanishes.
    pub m_tilde: Option<f64>,
    #[serde(skip)]
    pub final_thin: Option<Field>,
    #[serde(skip)]
    pub final_limit: Option<Field>,
}

/// Evolve `u0_thin` on the thin model and `u0_limit` on the limit model with
/// identical steps, recording the squared distance between the thin state
/// and the extension of the limit state.
pub fn trajectory_gap(
    thin_model: &Model,
    limit_model: &Model,
    u0_thin: &Field,
    u0_limit: &Field,
    horizon: f64,
    ctrl: &StepControl,
) -> Result<GapReport> {
    ctrl.validate()?;
    let thin = thin_model.mesh().as_thin().ok_or(Error::MeshMismatch)?;
    let limit = limit_model.mesh().as_limit().ok_or(Error::MeshMismatch)?;
    thin_model.mesh().check(u0_thin)?;
    limit_model.mesh().check(u0_limit)?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be positive"
        )));
    }
    let gap = |ut: &Field, ul: &Field| -> Result<f64> {
        let d = ut.sub(&extend(limit, thin, ul)?)?;
        Ok(lp_norm_raw(thin.mass(), d.values(), 2.0).powi(2))
    };
    let n = step_count(horizon, ctrl.dt);
    let dt = horizon / n as f64;
    let step_ctrl = ctrl.with_dt(dt);
    let initial_gap = gap(u0_thin, u0_limit)?;
    let mut times = vec![0.0];
    let mut gaps = vec![initial_gap];
    let mut ut = u0_thin.clone();
    let mut ul = u0_limit.clone();
    for k in 1..=n {
        let t = k as f64 * dt;
        let stamp = |e: Error| match e {
            Error::NonlinearSolveFailure {
                iterations,
                residual,
                ..
            } => Error::NonlinearSolveFailure {
                time: t,
                iterations,
                residual,
            },
            other => other,
        };
        ut = step_implicit(thin_model, &ut, &step_ctrl)
            .map_err(stamp)?
            .state;
        ul = step_implicit(limit_model, &ul, &step_ctrl)
            .map_err(stamp)?
            .state;
        times.push(t);
        gaps.push(gap(&ut, &ul)?);
    }
    let weight_gap = crate::operators::weight_gap_inf(thin, &thin_model.problem().weight);
    let horizon_max = gaps.iter().copied().fold(0.0, f64::max);
    let denom = initial_gap + weight_gap;
    Ok(GapReport {
        times,
        gaps,
        initial_gap,
        weight_gap,
        horizon_max,
        m_tilde: (denom > 0.0).then(|| horizon_max / denom),
        final_thin: Some(ut),
        final_limit: Some(ul),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::l2_norm;
    use crate::problem::{
        builtin_problem, validate_config, NonlinearityF, NonlinearityRule, ProblemConfig,
    };

    fn small(name: &str, eps: f64) -> Model {
        let cfg = ProblemConfig {
            nx: 16,
            nz: 4,
            ..builtin_problem(name).unwrap().with_epsilon(eps)
        };
        Model::from_problem(&validate_config(&cfg).unwrap()).unwrap()
    }

    #[test]
    fn zero_is_a_fixed_point() {
        for name in ["flat", "bump", "paper-generic"] {
            for eps in [0.0, 0.2] {
                let m = small(name, eps);
                let out =
                    step_implicit(&m, &Field::zeros(m.mesh()), &StepControl::from_problem(&m))
                        .unwrap();
                assert!(out.state.values().iter().all(|&v| v == 0.0), "{name} {eps}");
            }
        }
    }

    #[test]
    fn step_without_forcing_is_nonexpansive() {
        let cfg = ProblemConfig {
            nx: 16,
            nz: 4,
            nonlinearity: NonlinearityF::new(NonlinearityRule::Zero, 1.0),
            ..builtin_problem("bump").unwrap().with_epsilon(0.2)
        };
        let m = Model::from_problem(&validate_config(&cfg).unwrap()).unwrap();
        let mut u = Field::from_fn(m.mesh(), |x, y| 2.0 * (3.0 * x).sin() + 20.0 * y);
        for dt in [1e-3, 0.05, 1.0, 50.0] {
            let ctrl = StepControl::from_problem(&m).with_dt(dt);
            let next = step_implicit(&m, &u, &ctrl).unwrap();
            assert!(l2_norm(m.mesh(), &next.state).unwrap() <= l2_norm(m.mesh(), &u).unwrap());
            u = next.state;
        }
    }

    #[test]
    fn step_residual_meets_tolerance() {
        let m = small("flat", 0.1);
        let u = Field::from_fn(m.mesh(), |x, _| 1.5 * (-x * x).exp());
        let ctrl = StepControl::from_problem(&m);
        let out = step_implicit(&m, &u, &ctrl).unwrap();
        assert!(out.residual <= ctrl.newton_tol);
        assert!(!out.used_fallback);
    }

    #[test]
    fn fixed_point_fallback_agrees_with_newton() {
        let m = small("paper-generic", 0.2);
        let u = Field::from_fn(m.mesh(), |x, y| (x).cos() + 3.0 * y);
        let ctrl = StepControl::from_problem(&m);
        let newton = step_implicit(&m, &u, &ctrl).unwrap();
        // Forcing the fallback: no Newton iterations allowed.
        let forced = StepControl {
            max_newton: 0,
            ..ctrl
        };
        let fp = step_implicit(&m, &u, &forced).unwrap();
        assert!(fp.used_fallback);
        let diff = fp.state.sub(&newton.state).unwrap();
        assert!(l2_norm(m.mesh(), &diff).unwrap() < 1e-9);
        let none = StepControl {
            max_newton: 0,
            fixed_point_fallback: false,
            ..ctrl
        };
        assert!(matches!(
            step_implicit(&m, &u, &none),
            Err(Error::NonlinearSolveFailure { .. })
        ));
    }

    #[test]
    fn zero_trajectory_stays_zero_and_stores_stride() {
        let m = small("flat", 0.0);
        let ctrl = StepControl::from_problem(&m);
        let rec = solve_trajectory(&m, &Field::zeros(m.mesh()), 1.0, &ctrl).unwrap();
        assert_eq!(rec.logs().len(), 21);
        assert!(rec.logs().iter().all(|l| l.l2 == 0.0 && l.e_norm == 0.0));
        let steps: Vec<usize> = rec.states().iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 10, 20]);
        assert!(rec.logs().windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn discrete_energy_inequality_holds() {
        let m = small("bump", 0.2);
        let u0 = Field::from_fn(m.mesh(), |x, y| 2.0 * (2.0 * x).sin() + 10.0 * y);
        let rec = solve_trajectory(&m, &u0, 2.0, &StepControl::from_problem(&m)).unwrap();
        for d in rec.energy_inequality_defects() {
            assert!(d <= 1e-8, "defect {d}");
        }
    }

    #[test]
    fn csv_has_header_and_one_row_per_step() {
        let m = small("flat", 0.0);
        let rec = solve_trajectory(
            &m,
            &Field::constant(m.mesh(), 0.5),
            0.2,
            &StepControl::from_problem(&m),
        )
        .unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,l2_scaled,e_norm,newton_iters,residual");
        assert_eq!(lines.len(), 1 + rec.logs().len());
    }

    #[test]
    fn gap_starts_at_initial_data_gap() {
        let thin = small("flat", 0.2);
        let limit = small("flat", 0.0);
        let ul = Field::from_fn(limit.mesh(), |x, _| (-x * x).exp());
        let ut = Field::from_fn(thin.mesh(), |x, y| (-x * x).exp() + y);
        let ctrl = StepControl::from_problem(&thin);
        let rep = trajectory_gap(&thin, &limit, &ut, &ul, 0.5, &ctrl).unwrap();
        let lt = thin.mesh().as_thin().unwrap();
        let ll = limit.mesh().as_limit().unwrap();
        let d = ut.sub(&extend(ll, lt, &ul).unwrap()).unwrap();
        assert_eq!(rep.gaps[0], lp_norm_raw(lt.mass(), d.values(), 2.0).powi(2));
        assert_eq!(rep.initial_gap, rep.gaps[0]);
        assert_eq!(rep.times.len(), rep.gaps.len());
        assert!(rep.m_tilde.is_some());
    }
}
