//! Fixtures shared by the benchmarks.

use thinlab_core::{builtin_problem, validate_config, Field, Model, ProblemConfig};

/// Model for builtin `name` at `eps` on an `nx` by `nz` grid.
pub fn model(name: &str, eps: f64, nx: usize, nz: usize) -> Model {
    let cfg = ProblemConfig {
        nx,
        nz,
        ..builtin_problem(name)
            .expect("builtin problem")
            .with_epsilon(eps)
    };
    Model::from_problem(&validate_config(&cfg).expect("builtin problems are valid"))
        .expect("mesh builds")
}

/// A smooth field with transverse variation, away from the degenerate set `grad u = 0`.
pub fn smooth_field(model: &Model) -> Field {
    Field::from_fn(model.mesh(), |x, y| {
        (1.3 * x).sin() + 0.5 * (-x * x).exp() + 3.0 * y
    })
}

/// `n` distinct shifted copies of the smooth field.
pub fn cloud(model: &Model, n: usize) -> Vec<Field> {
    (0..n)
        .map(|k| {
            let s = k as f64 / n as f64;
            Field::from_fn(model.mesh(), |x, y| (1.3 * x + s).sin() * (1.0 + s) + y)
        })
        .collect()
}
