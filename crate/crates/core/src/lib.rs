//! Numerical laboratory for quasilinear parabolic problems
//! `u_t - div(|grad u|^{p-2} grad u) + a |u|^{p-2} u = f(u)` on thin planar
//! domains `0 < y < eps g(x)` and their one-dimensional limit.
//!
//! The crate builds terrain-following meshes, assembles the p-Laplacian and
//! its Jacobian, integrates with implicit Euler, evaluates the constants of
//! the absorbing-ball estimates, and compares attractor samples across `eps`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod banded;
pub mod checkpoint;
pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod mesh;
pub mod norms;
pub mod operators;
pub mod problem;

pub use attractor::{
    detect_absorption, eps_sweep, hausdorff_semidistance, sample_attractor, sample_attractor_from,
    AttractorSample, CorollaryCheck, EnsembleControl, SweepConfig, SweepReport, SweepRow,
};
pub use checkpoint::{read_checkpoint, write_checkpoint, write_field_csv, Checkpoint};
pub use error::{Error, HypothesisViolation, Result};
pub use evolution::{
    solve_trajectory, step_implicit, trajectory_gap, GapReport, StepControl, StepLog, StepOutcome,
    TrajectoryRecord,
};
pub use mesh::{
    build_limit_mesh, build_thin_mesh, Field, LimitMesh, Mesh, MeshId, MeshKind, ThinMesh,
};
pub use norms::{
    dissipation_constants, e_norm, l2_norm, max_window_bound, measure_embedding_c, scaled_lp_norm,
    time_integrated_energy, uniform_gronwall_constants, DissipationConstants, EtaPolicy,
    UniformGronwallConstants, WindowEnergy,
};
pub use operators::{
    apply_a, apply_a_limit, apply_a_thin, average_project, extend, nemitskii, tartar_constant,
    tartar_gap, weight_gap_inf, z_derivative, DualField, Model,
};
pub use problem::{
    builtin_problem, validate_config, NonlinearityF, NonlinearityRule, ProblemConfig, ProfileG,
    ValidatedProblem, WeightA, BUILTIN_PROBLEMS,
};
