//! Absorbing-ball entry, finite attractor proxies, Hausdorff semidistance and
//! the ε-sweep.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{embedding_ensemble, limit_member, thin_member};
use crate::error::{Error, Result};
use crate::evolution::{solve_trajectory, trajectory_gap, StepControl, TrajectoryRecord};
use crate::mesh::{Field, LimitMesh, Mesh, MeshId};
use crate::norms::{
    dissipation_constants, e_norm, l2_norm, lp_norm_raw, measure_embedding_c, DissipationConstants,
    EtaPolicy,
};
use crate::operators::{average_project, extend, weight_gap_inf, Model};
use crate::problem::ValidatedProblem;

/// First logged time from which `|||u|||_2^2 / 2 <= beta` holds for the rest of the record.
pub fn detect_absorption(traj: &TrajectoryRecord, consts: &DissipationConstants) -> Result<f64> {
    let logs = traj.logs();
    let inside = |l2: f64| 0.5 * l2 * l2 <= consts.beta;
    let last = logs.last().ok_or(Error::NoAbsorption {
        last: f64::NAN,
        bound: consts.beta,
    })?;
    if !inside(last.l2) {
        return Err(Error::NoAbsorption {
            last: 0.5 * last.l2 * last.l2,
            bound: consts.beta,
        });
    }
    let first_inside = logs
        .iter()
        .rposition(|l| !inside(l.l2))
        .map_or(0, |k| k + 1);
    Ok(logs[first_inside].t)
}

/// Final states of an ensemble after the transient.
#[derive(Debug, Clone)]
pub struct AttractorSample {
    pub problem: String,
    pub epsilon: f64,
    pub mesh: MeshId,
    pub points: Vec<Field>,
    pub cutoff: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Absorbing-ball entry time of each member.
    pub entry_times: Vec<f64>,
    /// Scaled `L^2` norm of each point.
    pub l2: Vec<f64>,
    pub e_norms: Vec<f64>,
}

impl AttractorSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_entry_time(&self) -> f64 {
        self.entry_times.iter().copied().fold(0.0, f64::max)
    }

    /// Whether every point lies in `|||u|||_2 <= l2_bound` and `||u||_E <= e_bound`, up to a relative slack.
    pub fn within(&self, l2_bound: f64, e_bound: f64, slack: f64) -> bool {
        self.l2.iter().all(|&v| v <= l2_bound * (1.0 + slack))
            && self.e_norms.iter().all(|&v| v <= e_bound * (1.0 + slack))
    }
}

/// Transient cutoff `max(2T, horizon / 2)`.
pub fn transient_cutoff(consts: &DissipationConstants, horizon: f64) -> f64 {
    (2.0 * consts.t_absorb).max(0.5 * horizon)
}

/// Radius of the ball that initial ensembles are drawn from, `2 sqrt(2 beta)`.
pub fn initial_ball(consts: &DissipationConstants) -> f64 {
    2.0 * consts.l2_radius()
}

/// Evolve the given initial fields to `max(horizon, 2T)` and keep the final states.
pub fn sample_attractor_from(
    model: &Model,
    initial: &[Field],
    consts: &DissipationConstants,
    horizon: f64,
    seed: u64,
    ctrl: &StepControl,
) -> Result<AttractorSample> {
    if initial.is_empty() {
        return Err(Error::EmptySample);
    }
    let horizon = horizon.max(2.0 * consts.t_absorb);
    let runs: Vec<(Field, f64)> = initial
        .par_iter()
        .map(|u0| {
            let rec = solve_trajectory(model, u0, horizon, ctrl)?;
            let entry = detect_absorption(&rec, consts)?;
            Ok((rec.final_state().clone(), entry))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(runs.len());
    let mut entry_times = Vec::with_capacity(runs.len());
    for (u, t) in runs {
        points.push(u);
        entry_times.push(t);
    }
    let l2 = points
        .iter()
        .map(|u| l2_norm(model.mesh(), u))
        .collect::<Result<_>>()?;
    let e_norms = points
        .iter()
        .map(|u| e_norm(model, u))
        .collect::<Result<_>>()?;
    Ok(AttractorSample {
        problem: model.problem().name.clone(),
        epsilon: model.problem().epsilon,
        mesh: model.mesh().id(),
        points,
        cutoff: transient_cutoff(consts, horizon),
        horizon,
        seed,
        entry_times,
        l2,
        e_norms,
    })
}

/// Ensemble settings for [`sample_attractor`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleControl {
    pub members: usize,
    pub seed: u64,
    /// Final time; `None` means `10 T`.
    pub horizon: Option<f64>,
    /// Add zero-mean transverse noise to thin members.
    pub y_noise: bool,
}

impl Default for EnsembleControl {
    fn default() -> Self {
        Self {
            members: 32,
            seed: 0,
            horizon: None,
            y_noise: true,
        }
    }
}

impl EnsembleControl {
    pub fn horizon_for(&self, consts: &DissipationConstants) -> f64 {
        self.horizon.unwrap_or(10.0 * consts.t_absorb)
    }
}

/// Limit mesh sharing the x grid and profile of `model`'s mesh.
fn companion_limit(model: &Model) -> Result<LimitMesh> {
    match model.mesh() {
        Mesh::Limit(l) => Ok(l.clone()),
        Mesh::Thin(_) => {
            let lim = model.problem().with_epsilon(0.0)?;
            crate::mesh::build_limit_mesh(&lim, model.mesh().nx())
        }
    }
}

/// Seeded ensemble inside the `2 sqrt(2 beta)` ball, evolved past the transient.
pub fn sample_attractor(
    model: &Model,
    consts: &DissipationConstants,
    ens: &EnsembleControl,
    ctrl: &StepControl,
) -> Result<AttractorSample> {
    if ens.members == 0 {
        return Err(Error::EmptySample);
    }
    let limit = companion_limit(model)?;
    let ball = initial_ball(consts);
    let initial: Vec<Field> = (0..ens.members)
        .map(|k| match model.mesh() {
            Mesh::Limit(l) => Ok(limit_member(l, ens.seed, k, ball)),
            Mesh::Thin(t) => thin_member(t, &limit, ens.seed, k, ball, ens.y_noise),
        })
        .collect::<Result<_>>()?;
    sample_attractor_from(
        model,
        &initial,
        consts,
        ens.horizon_for(consts),
        ens.seed,
        ctrl,
    )
}

/// `max_{a in A} min_{b in B} |||a - b|||_2` on `mesh`.
pub fn hausdorff_semidistance(mesh: &Mesh, a: &[Field], b: &[Field]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    for u in a.iter().chain(b) {
        mesh.check(u)?;
    }
    let mass = mesh.mass();
    let dist = |x: &Field, y: &Field| -> f64 {
        let d: Vec<f64> = x
            .values()
            .iter()
            .zip(y.values())
            .map(|(p, q)| p - q)
            .collect();
        lp_norm_raw(mass, &d, 2.0)
    };
    Ok(a.par_iter()
        .map(|x| b.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max))
}

/// Quantities of the two-term split behind upper semicontinuity, evaluated at time `t`.
///
/// For each sample point `xi`,
/// `|||xi - E a||| <= |||xi - S_eps(t) xi||| + |||S_eps(t) xi - E S_0(t) M xi||| + ||S_0(t) M xi - a||`,
/// so `lhs <= invariance_defect + trajectory_term + limit_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorollaryCheck {
    pub t: f64,
    /// `dist(A_eps, E A_0)`
    pub lhs: f64,
    /// `max |||xi - S_eps(t) xi|||`; zero for an exactly invariant sample.
    pub invariance_defect: f64,
    /// `max |||S_eps(t) xi - E S_0(t) M xi|||`
    pub trajectory_term: f64,
    /// `dist(S_0(t) M A_eps, A_0)`
    pub limit_term: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub weight_gap_inf: f64,
    /// Largest `|||u_eps(t) - E u(t)|||_2^2` over members and `t <= T`.
    pub traj_gap_max: Option<f64>,
    pub semidistance: Option<f64>,
    pub beta_entry_max: Option<f64>,
    /// Largest ratio `gap / (initial gap + weight gap)` over members.
    pub m_tilde: Option<f64>,
    pub corollary: Option<CorollaryCheck>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub problem: String,
    pub seed: u64,
    pub members: usize,
    pub horizon: f64,
    pub constants: DissipationConstants,
    pub limit_beta_entry_max: f64,
    pub eps: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

/// Relative slack allowed on monotone-trend checks.
pub const TREND_SLACK: f64 = 0.1;

impl SweepReport {
    fn column(&self, f: impl Fn(&SweepRow) -> Option<f64>) -> Option<Vec<f64>> {
        self.rows.iter().map(f).collect()
    }

    /// Semidistances do not grow by more than `slack` (relative) as ε decreases.
    pub fn semidistance_nonincreasing(&self, slack: f64) -> bool {
        self.column(|r| r.semidistance)
            .is_some_and(|v| v.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack)))
    }

    pub fn traj_gap_decreasing(&self) -> bool {
        self.column(|r| r.traj_gap_max)
            .is_some_and(|v| v.windows(2).all(|w| w[1] < w[0]))
    }

    pub fn weight_gap_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].weight_gap_inf < w[0].weight_gap_inf)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// One row per ε: `eps,weight_gap_inf,traj_gap_max,semidistance,beta_entry_max`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "eps",
            "weight_gap_inf",
            "traj_gap_max",
            "semidistance",
            "beta_entry_max",
        ])?;
        for r in &self.rows {
            w.write_record([
                format!("{:?}", r.eps),
                format!("{:?}", r.weight_gap_inf),
                cell(r.traj_gap_max),
                cell(r.semidistance),
                cell(r.beta_entry_max),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Strictly decreasing values in `(0, 1)`.
    pub eps_list: Vec<f64>,
    pub ensemble: EnsembleControl,
    /// Random fields added to the coercivity ensemble of each model.
    pub embedding_samples: usize,
    /// Overrides the step control derived from the problem.
    pub step: Option<StepControl>,
}

impl SweepConfig {
    pub fn new(eps_list: Vec<f64>) -> Self {
        Self {
            eps_list,
            ensemble: EnsembleControl::default(),
            embedding_samples: 16,
            step: None,
        }
    }
}

/// Coercivity constant measured on each model, minimized over all of them.
pub fn common_embedding_c(models: &[&Model], seed: u64, n_random: usize) -> Result<f64> {
    let mut c = f64::INFINITY;
    for m in models {
        c = c.min(measure_embedding_c(
            m,
            &embedding_ensemble(m, seed, n_random)?,
        )?);
    }
    Ok(c)
}

struct EpsOutcome {
    traj_gap_max: f64,
    semidistance: f64,
    beta_entry_max: f64,
    m_tilde: Option<f64>,
    corollary: CorollaryCheck,
}

fn run_eps(
    thin_model: &Model,
    limit_model: &Model,
    limit_sample: &AttractorSample,
    consts: &DissipationConstants,
    cfg: &SweepConfig,
    ctrl: &StepControl,
) -> Result<EpsOutcome> {
    let thin = thin_model.mesh().as_thin().ok_or(Error::MeshMismatch)?;
    let limit = limit_model.mesh().as_limit().ok_or(Error::MeshMismatch)?;
    let sample = sample_attractor(thin_model, consts, &cfg.ensemble, ctrl)?;
    let embedded: Vec<Field> = limit_sample
        .points
        .iter()
        .map(|u| extend(limit, thin, u))
        .collect::<Result<_>>()?;
    let semidistance = hausdorff_semidistance(thin_model.mesh(), &sample.points, &embedded)?;

    let t = consts.t_absorb;
    let gaps = sample
        .points
        .par_iter()
        .map(|xi| {
            let mxi = average_project(thin, limit, xi)?;
            trajectory_gap(thin_model, limit_model, xi, &mxi, t, ctrl)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut traj_gap_max: f64 = 0.0;
    let mut m_tilde: Option<f64> = None;
    let mut invariance_defect: f64 = 0.0;
    let mut trajectory_term: f64 = 0.0;
    let mut evolved_limit = Vec::with_capacity(gaps.len());
    for (xi, g) in sample.points.iter().zip(gaps) {
        traj_gap_max = traj_gap_max.max(g.horizon_max);
        if let Some(m) = g.m_tilde {
            m_tilde = Some(m_tilde.map_or(m, |b| b.max(m)));
        }
        let final_thin = g.final_thin.expect("gap runs keep final states");
        invariance_defect =
            invariance_defect.max(l2_norm(thin_model.mesh(), &xi.sub(&final_thin)?)?);
        trajectory_term = trajectory_term.max(g.gaps.last().copied().unwrap_or(0.0).sqrt());
        evolved_limit.push(g.final_limit.expect("gap runs keep final states"));
    }
    let limit_term =
        hausdorff_semidistance(limit_model.mesh(), &evolved_limit, &limit_sample.points)?;
    let rhs = invariance_defect + trajectory_term + limit_term;
    Ok(EpsOutcome {
        traj_gap_max,
        semidistance,
        beta_entry_max: sample.max_entry_time(),
        m_tilde,
        corollary: CorollaryCheck {
            t,
            lhs: semidistance,
            invariance_defect,
            trajectory_term,
            limit_term,
            holds: semidistance <= rhs * (1.0 + 1e-9) + 1e-12,
        },
    })
}

/// Sample the limit attractor once, then for every ε sample the thin
/// attractor, measure its semidistance to the embedded limit sample, and
/// co-evolve each thin sample point with its column average up to `T`.
///
/// Failures for individual ε values are recorded in their rows.
pub fn eps_sweep(base: &ValidatedProblem, cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.eps_list.is_empty() {
        return Err(Error::InvalidParameter("empty ε list".into()));
    }
    if cfg.eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0))
        || cfg.eps_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidParameter(format!(
            "ε list must be strictly decreasing in (0, 1): {:?}",
            cfg.eps_list
        )));
    }
    let limit_model = Model::from_problem(&base.with_epsilon(0.0)?)?;
    let thin_models = cfg
        .eps_list
        .iter()
        .map(|&e| Model::from_problem(&base.with_epsilon(e)?))
        .collect::<Result<Vec<_>>>()?;

    let mut all: Vec<&Model> = vec![&limit_model];
    all.extend(thin_models.iter());
    let c = common_embedding_c(&all, cfg.ensemble.seed, cfg.embedding_samples)?;
    let consts = dissipation_constants(
        base.p,
        limit_model.nonlinearity().lipschitz,
        c,
        EtaPolicy::HalfCoercivity,
    )?;
    let ctrl = cfg
        .step
        .unwrap_or_else(|| StepControl::from_problem(&limit_model));
    let limit_sample = sample_attractor(&limit_model, &consts, &cfg.ensemble, &ctrl)?;

    let rows = thin_models
        .par_iter()
        .zip(cfg.eps_list.par_iter())
        .map(|(model, &eps)| {
            let thin = model.mesh().as_thin().expect("ε > 0 gives a thin mesh");
            let weight_gap = weight_gap_inf(thin, &base.weight);
            match run_eps(model, &limit_model, &limit_sample, &consts, cfg, &ctrl) {
                Ok(o) => SweepRow {
                    eps,
                    weight_gap_inf: weight_gap,
                    traj_gap_max: Some(o.traj_gap_max),
                    semidistance: Some(o.semidistance),
                    beta_entry_max: Some(o.beta_entry_max),
                    m_tilde: o.m_tilde,
                    corollary: Some(o.corollary),
                    error: None,
                },
                Err(e) => SweepRow {
                    eps,
                    weight_gap_inf: weight_gap,
                    traj_gap_max: None,
                    semidistance: None,
                    beta_entry_max: None,
                    m_tilde: None,
                    corollary: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    Ok(SweepReport {
        problem: base.name.clone(),
        seed: cfg.ensemble.seed,
        members: cfg.ensemble.members,
        horizon: limit_sample.horizon,
        constants: consts,
        limit_beta_entry_max: limit_sample.max_entry_time(),
        eps: cfg.eps_list.clone(),
        rows,
    })
}
