//! Seeded initial data.
//!
//! Member `k` of an ensemble draws, from its own ChaCha stream, a smoothed
//! random x-profile and a radius factor, then (thin meshes only) transverse
//! noise with zero column average. The limit member and the thin member with
//! the same seed and index therefore satisfy `M_eps(thin) = limit` exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{Field, LimitMesh, Mesh, ThinMesh};
use crate::norms::lp_norm_raw;
use crate::operators::{extend, Model};

/// Share of the ball radius used by the smallest and largest members.
const RADIUS_RANGE: (f64, f64) = (0.1, 0.9);
/// Transverse noise relative to the profile, in the scaled `L^2` norm.
const Y_NOISE_RATIO: f64 = 0.3;

fn member_rng(seed: u64, k: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Uniform nodal values in `[-1, 1]` followed by one `(1, 2, 1) / 4` smoothing pass.
fn smoothed_profile(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (0..n)
        .map(|i| {
            let l = raw[i.saturating_sub(1)];
            let r = raw[(i + 1).min(n - 1)];
            0.25 * (l + 2.0 * raw[i] + r)
        })
        .collect()
}

fn scale_to(values: &mut [f64], mass: &[f64], radius: f64) {
    let norm = lp_norm_raw(mass, values, 2.0);
    if norm > 0.0 {
        let s = radius / norm;
        values.iter_mut().for_each(|v| *v *= s);
    }
}

fn profile_and_radius(seed: u64, k: usize, limit: &LimitMesh, ball: f64) -> (ChaCha8Rng, Vec<f64>) {
    let mut rng = member_rng(seed, k);
    let mut profile = smoothed_profile(&mut rng, limit.node_count());
    let radius = ball * rng.gen_range(RADIUS_RANGE.0..RADIUS_RANGE.1);
    scale_to(&mut profile, limit.mass(), radius);
    (rng, profile)
}

/// Member `k` on the limit mesh, with scaled `L^2` norm below `ball`.
pub fn limit_member(limit: &LimitMesh, seed: u64, k: usize, ball: f64) -> Field {
    let (_, profile) = profile_and_radius(seed, k, limit, ball);
    Field::from_raw(limit.id(), profile)
}

/// Member `k` on the thin mesh. Its column average is the limit member `k`;
/// with `y_noise == false` it is exactly the extension of that member.
pub fn thin_member(
    thin: &ThinMesh,
    limit: &LimitMesh,
    seed: u64,
    k: usize,
    ball: f64,
    y_noise: bool,
) -> Result<Field> {
    let (mut rng, profile) = profile_and_radius(seed, k, limit, ball);
    let base = Field::from_raw(limit.id(), profile);
    let mut lifted = extend(limit, thin, &base)?;
    if !y_noise {
        return Ok(lifted);
    }
    let tau = thin.z_weights();
    let nz = thin.nz();
    let mut noise = vec![0.0; thin.node_count()];
    for i in 0..=thin.nx() {
        let column: Vec<f64> = (0..=nz).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean: f64 = column.iter().zip(tau).map(|(v, t)| v * t).sum();
        for j in 0..=nz {
            noise[thin.node(i, j)] = column[j] - mean;
        }
    }
    let target = Y_NOISE_RATIO * lp_norm_raw(limit.mass(), base.values(), 2.0);
    scale_to(&mut noise, thin.mass(), target);
    for (v, n) in lifted.values_mut().iter_mut().zip(&noise) {
        *v += n;
    }
    Ok(lifted)
}

/// Initial fields for an ensemble on `mesh`, inside the scaled `L^2` ball of radius `ball`.
/// Thin members need the companion limit mesh to share profiles.
pub fn initial_ensemble(
    mesh: &Mesh,
    limit: &LimitMesh,
    seed: u64,
    n: usize,
    ball: f64,
    y_noise: bool,
) -> Result<Vec<Field>> {
    (0..n)
        .map(|k| match mesh {
            Mesh::Limit(l) => Ok(limit_member(l, seed, k, ball)),
            Mesh::Thin(t) => thin_member(t, limit, seed, k, ball, y_noise),
        })
        .collect()
}

/// Fields used to measure the coercivity constant: the constant field, the
/// profile `a^{-1/(p-2)}` that makes the weighted Hölder step sharp, its
/// square, and smoothed random fields.
pub fn embedding_ensemble(model: &Model, seed: u64, n_random: usize) -> Result<Vec<Field>> {
    let mesh = model.mesh();
    let p = model.p();
    let extremal: Vec<f64> = model
        .node_weight()
        .iter()
        .map(|a| a.powf(-1.0 / (p - 2.0)))
        .collect();
    let mut out = vec![
        Field::constant(mesh, 1.0),
        Field::new(mesh, extremal.clone())?,
        Field::new(mesh, extremal.iter().map(|v| v * v).collect())?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        out.push(Field::new(
            mesh,
            smoothed_profile(&mut rng, mesh.node_count()),
        )?);
    }
    if out.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(out)
}
