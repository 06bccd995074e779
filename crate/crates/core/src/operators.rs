//! Discrete p-Laplacian operators in weak form, the Nemitskii operator of the
//! nonlinearity, and the transfer operators between the thin and limit meshes.
//!
//! The operator acting on a field `u` is the residual vector
//!
//! ```text
//! r_i = sum_e |e| |grad u|^{p-2} grad u . grad phi_i  +  m_i a_i |u_i|^{p-2} u_i
//! ```
//!
//! where `|e|` is the scaled element measure and `m_i` the lumped mass of the
//! mesh. Gradients of piecewise-linear fields are constant per element, so the
//! first term is exact; the zeroth-order term uses nodal quadrature with the
//! weight sampled at nodes (`a(x, y)` on the thin mesh, `a(x, 0)` on the limit mesh).

use std::sync::Arc;

use crate::banded::SymBand;
use crate::error::{Error, Result};
use crate::mesh::{Field, LimitMesh, Mesh, MeshId, MeshKind, ThinMesh};
use crate::norms::scaled_lp_norm;
use crate::problem::{NonlinearityF, ValidatedProblem, WeightA};

/// A mesh bound to the data of one problem: exponent, nodal weight and nonlinearity.
#[derive(Debug, Clone)]
pub struct Model {
    mesh: Arc<Mesh>,
    problem: ValidatedProblem,
    weight: Vec<f64>,
}

impl Model {
    /// Discretize `problem` at its configured resolution.
    pub fn from_problem(problem: &ValidatedProblem) -> Result<Self> {
        Self::new(problem, Arc::new(Mesh::for_problem(problem)?))
    }

    pub fn new(problem: &ValidatedProblem, mesh: Arc<Mesh>) -> Result<Self> {
        if mesh.epsilon() != problem.epsilon {
            return Err(Error::InvalidParameter(format!(
                "mesh epsilon {} does not match problem epsilon {}",
                mesh.epsilon(),
                problem.epsilon
            )));
        }
        let weight = nodal_weight(&mesh, &problem.weight);
        Ok(Self {
            mesh,
            problem: problem.clone(),
            weight,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }
    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }
    pub fn problem(&self) -> &ValidatedProblem {
        &self.problem
    }
    pub fn p(&self) -> f64 {
        self.problem.p
    }
    pub fn nonlinearity(&self) -> &NonlinearityF {
        &self.problem.nonlinearity
    }
    /// `a` at the nodes.
    pub fn node_weight(&self) -> &[f64] {
        &self.weight
    }

    /// The same model at the next refinement level.
    pub fn refine(&self) -> Result<Self> {
        Self::new(&self.problem, Arc::new(self.mesh.refine()))
    }
}

fn nodal_weight(mesh: &Mesh, weight: &WeightA) -> Vec<f64> {
    match mesh {
        Mesh::Thin(m) => m.coords().iter().map(|&[x, y]| weight.eval(x, y)).collect(),
        Mesh::Limit(m) => m.x_nodes().iter().map(|&x| weight.trace(x)).collect(),
    }
}

/// A functional `v -> sum_i r_i v_i`, already in scaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    mesh: MeshId,
    values: Vec<f64>,
}

impl DualField {
    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Duality pairing with a field on the same mesh.
    pub fn pair(&self, v: &Field) -> Result<f64> {
        if v.mesh_id() != self.mesh {
            return Err(Error::MeshMismatch);
        }
        Ok(self.values.iter().zip(v.values()).map(|(r, v)| r * v).sum())
    }

    /// Dual norm with respect to the lumped scaled `L^2` product, `sqrt(sum r_i^2 / m_i)`.
    pub fn dual_norm(&self, mesh: &Mesh) -> Result<f64> {
        if mesh.id() != self.mesh {
            return Err(Error::MeshMismatch);
        }
        Ok(dual_norm(&self.values, mesh.mass()))
    }
}

pub(crate) fn dual_norm(r: &[f64], mass: &[f64]) -> f64 {
    r.iter()
        .zip(mass)
        .map(|(r, m)| r * r / m)
        .sum::<f64>()
        .sqrt()
}

#[inline]
fn signed_pow(u: f64, p: f64) -> f64 {
    // |u|^{p-2} u
    u.abs().powf(p - 2.0) * u
}

/// Accumulate the operator residual of `u` into `out`.
pub(crate) fn accumulate_operator(model: &Model, u: &[f64], out: &mut [f64]) {
    let p = model.p();
    let half = 0.5 * (p - 2.0);
    for e in model.mesh.elements() {
        let g = e.gradient(u);
        let s = (g[0] * g[0] + g[1] * g[1]).powf(half);
        let flux = [s * g[0], s * g[1]];
        for k in 0..e.arity {
            let gk = e.grads[k];
            out[e.nodes[k]] += e.measure * (flux[0] * gk[0] + flux[1] * gk[1]);
        }
    }
    for ((o, (&m, &a)), &ui) in out
        .iter_mut()
        .zip(model.mesh.mass().iter().zip(&model.weight))
        .zip(u)
    {
        *o += m * a * signed_pow(ui, p);
    }
}

/// Add the Jacobian of the operator at `u` to `jac`, with the degenerate
/// factor shifted to `(|grad u|^2 + mu^2)^{(p-2)/2}`.
pub(crate) fn accumulate_jacobian(model: &Model, u: &[f64], mu: f64, jac: &mut SymBand) {
    let p = model.p();
    let half = 0.5 * (p - 2.0);
    let mu2 = mu * mu;
    for e in model.mesh.elements() {
        let g = e.gradient(u);
        let q = g[0] * g[0] + g[1] * g[1] + mu2;
        let s = q.powf(half);
        let c = if q > 0.0 { (p - 2.0) / q } else { 0.0 };
        let d = [
            [s * (1.0 + c * g[0] * g[0]), s * c * g[0] * g[1]],
            [s * c * g[0] * g[1], s * (1.0 + c * g[1] * g[1])],
        ];
        for a in 0..e.arity {
            let ga = e.grads[a];
            let dga = [
                d[0][0] * ga[0] + d[0][1] * ga[1],
                d[1][0] * ga[0] + d[1][1] * ga[1],
            ];
            for b in 0..=a {
                let gb = e.grads[b];
                let v = e.measure * (dga[0] * gb[0] + dga[1] * gb[1]);
                jac.add(e.nodes[a], e.nodes[b], v);
            }
        }
    }
    for (i, ((&m, &a), &ui)) in model
        .mesh
        .mass()
        .iter()
        .zip(&model.weight)
        .zip(u)
        .enumerate()
    {
        jac.add(i, i, m * a * (p - 1.0) * (ui * ui + mu2).powf(half));
    }
}

/// The operator on whichever mesh the model carries.
pub fn apply_a(model: &Model, u: &Field) -> Result<DualField> {
    model.mesh.check(u)?;
    let mut out = vec![0.0; u.len()];
    accumulate_operator(model, u.values(), &mut out);
    Ok(DualField {
        mesh: u.mesh_id(),
        values: out,
    })
}

/// The thin-domain operator; fails on a limit model.
pub fn apply_a_thin(model: &Model, u: &Field) -> Result<DualField> {
    if model.mesh.kind() != MeshKind::Thin {
        return Err(Error::MeshMismatch);
    }
    apply_a(model, u)
}

/// The limit operator with measure `g dx` and trace weight; fails on a thin model.
pub fn apply_a_limit(model: &Model, u: &Field) -> Result<DualField> {
    if model.mesh.kind() != MeshKind::Limit {
        return Err(Error::MeshMismatch);
    }
    apply_a(model, u)
}

/// Pointwise `f(u_i)`.
pub fn nemitskii(u: &Field, f: &NonlinearityF) -> Field {
    Field::from_raw(u.mesh_id(), u.values().iter().map(|&s| f.eval(s)).collect())
}

fn check_shared_grid(thin: &ThinMesh, limit: &LimitMesh) -> Result<()> {
    if thin.nx() == limit.nx() && thin.x_max() == limit.x_max() && thin.profile() == limit.profile()
    {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

fn expect_on(id: MeshId, u: &Field) -> Result<()> {
    if u.mesh_id() == id {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

/// Column average over `0 < y < eps g(x_i)` by the trapezoid rule in `z`.
///
/// The average is taken relative to the bottom value of the column so that a
/// constant column reproduces its value bit for bit.
pub fn average_project(thin: &ThinMesh, limit: &LimitMesh, u: &Field) -> Result<Field> {
    check_shared_grid(thin, limit)?;
    expect_on(thin.id(), u)?;
    let tau = thin.z_weights();
    let v = u.values();
    let values = (0..=thin.nx())
        .map(|i| {
            let base = v[thin.node(i, 0)];
            let shift: f64 = (0..=thin.nz())
                .map(|j| tau[j] * (v[thin.node(i, j)] - base))
                .sum();
            base + shift
        })
        .collect();
    Ok(Field::from_raw(limit.id(), values))
}

/// Lift a limit field to the thin mesh, constant along each column.
pub fn extend(limit: &LimitMesh, thin: &ThinMesh, u: &Field) -> Result<Field> {
    check_shared_grid(thin, limit)?;
    expect_on(limit.id(), u)?;
    let mut values = Vec::with_capacity(thin.node_count());
    for &ui in u.values() {
        values.extend(std::iter::repeat_n(ui, thin.nz() + 1));
    }
    Ok(Field::from_raw(thin.id(), values))
}

/// Difference quotients of `u` along each column, `(u_{i,j+1} - u_{i,j}) / dz`.
pub fn z_derivative(thin: &ThinMesh, u: &Field) -> Result<Vec<f64>> {
    expect_on(thin.id(), u)?;
    let nz = thin.nz() as f64;
    let v = u.values();
    let mut out = Vec::with_capacity((thin.nx() + 1) * thin.nz());
    for i in 0..=thin.nx() {
        for j in 0..thin.nz() {
            out.push((v[thin.node(i, j + 1)] - v[thin.node(i, j)]) * nz);
        }
    }
    Ok(out)
}

/// Strong-monotonicity constant for `p >= 2`: `2^{2-p}`.
pub fn tartar_constant(p: f64) -> f64 {
    2f64.powf(2.0 - p)
}

/// `<A u - A v, u - v>` together with `2^{2-p} |||u - v|||_{L^p}^p`.
pub fn tartar_gap(model: &Model, u: &Field, v: &Field) -> Result<(f64, f64)> {
    let au = apply_a(model, u)?;
    let av = apply_a(model, v)?;
    let diff = u.sub(v)?;
    let pairing = au
        .values
        .iter()
        .zip(&av.values)
        .zip(diff.values())
        .map(|((a, b), d)| (a - b) * d)
        .sum();
    let p = model.p();
    let lower = tartar_constant(p) * scaled_lp_norm(model.mesh(), &diff, p)?.powf(p);
    Ok((pairing, lower))
}

/// `max |a(x, y) - a(x, 0)|` over the thin-mesh nodes.
pub fn weight_gap_inf(thin: &ThinMesh, weight: &WeightA) -> f64 {
    thin.coords()
        .iter()
        .map(|&[x, y]| (weight.eval(x, y) - weight.trace(x)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_limit_mesh, build_thin_mesh};
    use crate::problem::{builtin_problem, validate_config, ProblemConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_problem(eps: f64, x_max: f64) -> ValidatedProblem {
        validate_config(&ProblemConfig {
            x_max,
            weight: WeightA::constant(1.0),
            tail_tol: f64::INFINITY,
            ..builtin_problem("flat").unwrap().with_epsilon(eps)
        })
        .unwrap()
    }

    fn model(problem: &ValidatedProblem, nx: usize, nz: usize) -> Model {
        let mesh = if problem.is_limit() {
            Mesh::Limit(build_limit_mesh(problem, nx).unwrap())
        } else {
            Mesh::Thin(build_thin_mesh(problem, nx, nz).unwrap())
        };
        Model::new(problem, Arc::new(mesh)).unwrap()
    }

    #[test]
    fn operator_vanishes_at_zero() {
        for eps in [0.0, 0.1] {
            let m = model(&unit_problem(eps, 1.0), 4, 2);
            let r = apply_a(&m, &Field::zeros(m.mesh())).unwrap();
            assert!(r.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn unit_field_gives_lumped_mass() {
        for eps in [0.0, 0.1] {
            let m = model(&unit_problem(eps, 1.0), 4, 2);
            let r = apply_a(&m, &Field::constant(m.mesh(), 1.0)).unwrap();
            for (ri, mi) in r.values().iter().zip(m.mesh().mass()) {
                assert_relative_eq!(*ri, *mi, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn limit_operator_matches_hand_assembly() {
        // Two elements on [-1, 1], h = 1, g = 1, a = 1, p = 3.
        let m = model(&unit_problem(0.0, 1.0), 2, 0);
        let u = [0.5, -1.0, 2.0];
        let field = Field::new(m.mesh(), u.to_vec()).unwrap();
        let r = apply_a_limit(&m, &field).unwrap();
        let flux = |d: f64| d.abs() * d;
        let (d0, d1) = (u[1] - u[0], u[2] - u[1]);
        let mass = [0.5, 1.0, 0.5];
        let expected = [
            -flux(d0) + mass[0] * u[0].abs() * u[0],
            flux(d0) - flux(d1) + mass[1] * u[1].abs() * u[1],
            flux(d1) + mass[2] * u[2].abs() * u[2],
        ];
        for (a, b) in r.values().iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
        assert!(apply_a_thin(&m, &field).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let problem = validate_config(&builtin_problem("bump").unwrap().with_epsilon(0.3)).unwrap();
        let m = model(&problem, 6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..m.mesh().node_count())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let n = u.len();
        let mut jac = SymBand::zeros(n, m.mesh().bandwidth());
        accumulate_jacobian(&m, &u, 0.0, &mut jac);
        let h = 1e-6;
        for j in 0..n {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let mut rp = vec![0.0; n];
            let mut rm = vec![0.0; n];
            accumulate_operator(&m, &up, &mut rp);
            accumulate_operator(&m, &um, &mut rm);
            for i in 0..n {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                assert!(
                    (fd - jac.get(i, j)).abs() < 1e-5 * (1.0 + fd.abs()),
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn average_of_linear_in_y_is_half_height() {
        let p = unit_problem(0.1, 1.0);
        let thin = build_thin_mesh(&p, 4, 2).unwrap();
        let limit = build_limit_mesh(&p, 4).unwrap();
        let u = Field::from_fn(&Mesh::Thin(thin.clone()), |_, y| y);
        let avg = average_project(&thin, &limit, &u).unwrap();
        for v in avg.values() {
            assert_relative_eq!(*v, 0.05, epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_inverts_extension_exactly() {
        let p = validate_config(&builtin_problem("bump").unwrap().with_epsilon(0.2)).unwrap();
        let thin = build_thin_mesh(&p, 16, 5).unwrap();
        let limit = build_limit_mesh(&p, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..17).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let u = Field::new(&Mesh::Limit(limit.clone()), values).unwrap();
        let e = extend(&limit, &thin, &u).unwrap();
        assert_eq!(average_project(&thin, &limit, &e).unwrap(), u);
        assert!(z_derivative(&thin, &e).unwrap().iter().all(|&d| d == 0.0));
        let zero = Field::zeros(&Mesh::Limit(limit.clone()));
        assert!(extend(&limit, &thin, &zero)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn transfer_rejects_foreign_grids() {
        let p = unit_problem(0.1, 1.0);
        let thin = build_thin_mesh(&p, 4, 2).unwrap();
        let limit = build_limit_mesh(&p, 8).unwrap();
        let u = Field::zeros(&Mesh::Thin(thin.clone()));
        assert!(matches!(
            average_project(&thin, &limit, &u),
            Err(Error::MeshMismatch)
        ));
    }

    #[test]
    fn nemitskii_is_pointwise() {
        let p = unit_problem(0.0, 1.0);
        let mesh = Mesh::Limit(build_limit_mesh(&p, 4).unwrap());
        let f = p.nonlinearity;
        assert!(nemitskii(&Field::zeros(&mesh), &f)
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let b = nemitskii(&Field::constant(&mesh, 10.0), &f);
        assert!(b.values().iter().all(|&v| v == 10f64.tanh()));
    }

    #[test]
    fn tartar_gap_at_equal_arguments() {
        let m = model(&unit_problem(0.1, 1.0), 4, 2);
        let u = Field::from_fn(m.mesh(), |x, y| x * x - y);
        assert_eq!(tartar_gap(&m, &u, &u).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn radial_weight_gap_is_top_height_squared() {
        let p = validate_config(&builtin_problem("flat").unwrap().with_epsilon(0.2)).unwrap();
        let thin = build_thin_mesh(&p, 8, 4).unwrap();
        assert_relative_eq!(weight_gap_inf(&thin, &p.weight), 0.04, epsilon = 1e-15);
        assert_eq!(weight_gap_inf(&thin, &p.weight.trace_extended()), 0.0);
    }
}
