use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use anyhow::Context;
use chrono::Utc;
use clap::Args;
use serde::Serialize;

use thinlab_core::ensemble::{embedding_ensemble, limit_member, thin_member};
use thinlab_core::{
    attractor, build_limit_mesh, builtin_problem, detect_absorption, dissipation_constants,
    eps_sweep, measure_embedding_c, read_checkpoint, solve_trajectory, validate_config,
    write_checkpoint, write_field_csv, DissipationConstants, EtaPolicy, Field, Mesh, Model,
    ProblemConfig, StepControl, SweepConfig, ValidatedProblem,
};

use crate::manifest::RunDir;
use crate::Failure;

/// Random fields added to the coercivity ensemble.
const EMBEDDING_SAMPLES: usize = 16;
const BOUND_TOLERANCE: f64 = 0.05;

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Problem configuration file (`key = value` lines).
    #[arg(long, conflicts_with = "problem")]
    pub config: Option<PathBuf>,
    /// Builtin problem used when no config file is given.
    #[arg(long, default_value = "flat")]
    pub problem: String,
    /// Override epsilon; 0 selects the limit problem.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Override the ensemble seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for ensemble and sweep parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Base directory for run directories.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

impl CommonArgs {
    fn load(&self) -> Result<ProblemConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                ProblemConfig::from_text(&text)?
            }
            None => builtin_problem(&self.problem)?,
        };
        if let Some(eps) = self.eps {
            cfg.epsilon = eps;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn validated(&self) -> Result<ValidatedProblem, Failure> {
        Ok(validate_config(&self.load()?)?)
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write a run directory with a manifest.
    #[arg(long)]
    pub record: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Final time; defaults to twice the absorbing time.
    #[arg(long)]
    pub tend: Option<f64>,
    /// Initial state checkpoint; defaults to member 0 of the seeded ensemble.
    #[arg(long)]
    pub u0: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated, strictly decreasing epsilon values.
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
    pub eps_list: Vec<f64>,
    /// Sampling horizon; defaults to ten absorbing times.
    #[arg(long)]
    pub tend: Option<f64>,
    /// Ensemble size; defaults to `ensemble_size` from the config.
    #[arg(long)]
    pub members: Option<usize>,
}

pub fn validate(args: &ValidateArgs) -> Result<u8, Failure> {
    let started = Utc::now();
    let problem = args.common.validated()?;
    let tail = thinlab_core::problem::weight_tail_proxy(&problem);
    println!(
        "ok: problem `{}` (p = {}, eps = {}, {} mesh)",
        problem.name,
        problem.p,
        problem.epsilon,
        if problem.is_limit() { "limit" } else { "thin" }
    );
    println!(
        "weight tail proxy: total {:.4e}, outer shell {:.4e}",
        tail.total, tail.shell
    );
    if args.record {
        let run = RunDir::create(
            &args.common.out,
            "validate",
            started,
            problem.seed,
            args.common.workers,
            problem.to_text(),
        )?;
        let path = run.finish()?;
        println!("run directory: {}", path.display());
    }
    Ok(0)
}

fn measured_constants(model: &Model, seed: u64) -> Result<DissipationConstants, Failure> {
    let ens = embedding_ensemble(model, seed, EMBEDDING_SAMPLES)?;
    let c = measure_embedding_c(model, &ens)?;
    Ok(dissipation_constants(
        model.p(),
        model.nonlinearity().lipschitz,
        c,
        EtaPolicy::HalfCoercivity,
    )?)
}

fn default_initial(
    problem: &ValidatedProblem,
    model: &Model,
    consts: &DissipationConstants,
) -> Result<Field, Failure> {
    let ball = attractor::initial_ball(consts);
    let limit = build_limit_mesh(&problem.with_epsilon(0.0)?, problem.nx)?;
    Ok(match model.mesh() {
        Mesh::Limit(l) => limit_member(l, problem.seed, 0, ball),
        Mesh::Thin(t) => thin_member(t, &limit, problem.seed, 0, ball, true)?,
    })
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    constants: &'a DissipationConstants,
    t_end: f64,
    dt: f64,
    steps: usize,
    entry_time: Option<f64>,
    final_l2: f64,
    final_e_norm: f64,
}

pub fn solve(args: &SolveArgs) -> Result<u8, Failure> {
    let started = Utc::now();
    let problem = args.common.validated()?;
    let model = Model::from_problem(&problem)?;
    let consts = measured_constants(&model, problem.seed)?;
    let u0 = match &args.u0 {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_checkpoint(BufReader::new(file))?.into_field(model.mesh())?
        }
        None => default_initial(&problem, &model, &consts)?,
    };
    let t_end = args.tend.unwrap_or(2.0 * consts.t_absorb);
    let ctrl = StepControl::from_problem(&model);
    let rec = solve_trajectory(&model, &u0, t_end, &ctrl)?;

    let mut run = RunDir::create(
        &args.common.out,
        "solve",
        started,
        problem.seed,
        args.common.workers,
        problem.to_text(),
    )?;
    rec.write_csv(BufWriter::new(
        File::create(run.output("trajectory.csv")).context("creating trajectory.csv")?,
    ))?;
    write_checkpoint(
        BufWriter::new(File::create(run.output("final.thl")).context("creating final.thl")?),
        model.mesh(),
        model.p(),
        rec.final_state(),
    )?;
    write_field_csv(
        BufWriter::new(File::create(run.output("final.csv")).context("creating final.csv")?),
        model.mesh(),
        rec.final_state(),
    )?;

    let entry = detect_absorption(&rec, &consts).ok();
    let bound_ok = rec
        .logs()
        .iter()
        .filter(|l| l.t > rec.dt() * (1.0 + 1e-9))
        .all(|l| 0.5 * l.l2 * l.l2 <= (1.0 + BOUND_TOLERANCE) * consts.l2_half_square_bound(l.t));
    run.assertion("l2_bound", bound_ok);
    if t_end >= consts.t_absorb {
        run.assertion(
            "absorbed_by_T",
            entry.is_some_and(|t| t <= (1.0 + BOUND_TOLERANCE) * consts.t_absorb),
        );
    }
    let last = rec.logs().last().expect("trajectory has logs");
    let summary = SolveSummary {
        constants: &consts,
        t_end,
        dt: rec.dt(),
        steps: rec.logs().len() - 1,
        entry_time: entry,
        final_l2: last.l2,
        final_e_norm: last.e_norm,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?;
    run.write_text("summary.json", &text)?;
    run.output("summary.json");

    println!(
        "beta = {:.6}, T = {:.6}, c = {:.6}",
        consts.beta, consts.t_absorb, consts.c
    );
    match entry {
        Some(t) => println!("entry time = {t:.6}"),
        None => println!("entry time = none (not absorbed by t = {t_end})"),
    }
    let passed = run.all_passed();
    let path = run.finish()?;
    println!("run directory: {}", path.display());
    Ok(if passed { 0 } else { 4 })
}

pub fn sweep(args: &SweepArgs) -> Result<u8, Failure> {
    let started = Utc::now();
    let problem = args.common.validated()?;
    let mut cfg = SweepConfig::new(args.eps_list.clone());
    cfg.ensemble.seed = problem.seed;
    cfg.ensemble.members = args.members.unwrap_or(problem.ensemble_size);
    cfg.ensemble.horizon = args.tend;
    cfg.embedding_samples = EMBEDDING_SAMPLES;
    let report = eps_sweep(&problem, &cfg)?;

    let mut run = RunDir::create(
        &args.common.out,
        "sweep",
        started,
        problem.seed,
        args.common.workers,
        problem.to_text(),
    )?;
    report.write_json(BufWriter::new(
        File::create(run.output("sweep.json")).context("creating sweep.json")?,
    ))?;
    report.write_csv(BufWriter::new(
        File::create(run.output("sweep.csv")).context("creating sweep.csv")?,
    ))?;

    for row in report.failures() {
        eprintln!(
            "eps {}: {}",
            row.eps,
            row.error.as_deref().unwrap_or("failed")
        );
    }
    run.assertion("all_eps_succeeded", report.failures().next().is_none());
    run.assertion(
        "semidistance_nonincreasing",
        report.semidistance_nonincreasing(attractor::TREND_SLACK),
    );
    run.assertion(
        "two_term_split",
        report
            .rows
            .iter()
            .all(|r| r.corollary.is_none_or(|c| c.holds)),
    );

    println!("eps,semidistance,traj_gap_max");
    for r in &report.rows {
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4e}"));
        println!(
            "{},{},{}",
            r.eps,
            cell(r.semidistance),
            cell(r.traj_gap_max)
        );
    }
    let passed = run.all_passed();
    let path = run.finish()?;
    println!("run directory: {}", path.display());
    Ok(if passed { 0 } else { 4 })
}
