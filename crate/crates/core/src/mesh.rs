//! Terrain-following discretizations of the truncated thin domain
//! `{(x, y) : |x| <= x_max, 0 < y < eps g(x)}` and of the limit interval.
//!
//! Both meshes carry piecewise-linear elements with precomputed basis
//! gradients and scaled measures, plus lumped nodal masses:
//!
//! * thin mesh: triangles, element measure `area / eps`, nodal mass
//!   `w_x(i) g(x_i) w_z(j)` (tensor trapezoid rule in the reference
//!   coordinates `(x, z)`, which is the physical nodal quadrature divided by `eps`);
//! * limit mesh: segments, element measure `h (g_i + g_{i+1}) / 2`, nodal mass
//!   `w_x(i) g(x_i)`.
//!
//! With these choices the column sums of the thin masses are exactly the limit
//! masses and the thin element measures of one x-cell sum to the limit element
//! measure, so y-independent fields carry identical discrete energies on both.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{ProfileG, ProfileRule, ValidatedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MeshKind {
    Thin,
    Limit,
}

/// Identity of a mesh: kind, resolution and the bit patterns of the data the
/// geometry depends on. Fields remember the id of the mesh they live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MeshId {
    pub kind: MeshKind,
    pub nx: usize,
    pub nz: usize,
    eps_bits: u64,
    x_max_bits: u64,
    profile_bits: u64,
}

fn profile_fingerprint(profile: &ProfileG) -> u64 {
    let words: [f64; 3] = match profile.rule {
        ProfileRule::Constant { value } => [value, 0.0, 0.0],
        ProfileRule::Bump {
            base,
            amplitude,
            width,
        } => [base, amplitude, width],
    };
    words.iter().fold(0xcbf2_9ce4_8422_2325u64, |acc, w| {
        (acc ^ w.to_bits()).wrapping_mul(0x0100_0000_01b3)
    })
}

/// One piecewise-linear element: a triangle (3 nodes) or a segment (2 nodes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub nodes: [usize; 3],
    pub arity: usize,
    /// Gradients of the nodal basis functions, constant on the element.
    pub grads: [[f64; 2]; 3],
    /// Scaled measure: `area / eps` on the thin mesh, `int g dx` on the limit mesh.
    pub measure: f64,
}

impl Element {
    #[inline]
    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.arity]
    }

    /// Gradient of the interpolant of `values` on this element.
    #[inline]
    pub fn gradient(&self, values: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..self.arity {
            let v = values[self.nodes[k]];
            g[0] += v * self.grads[k][0];
            g[1] += v * self.grads[k][1];
        }
        g
    }
}

fn uniform_nodes(x_max: f64, nx: usize) -> Vec<f64> {
    (0..=nx)
        .map(|i| -x_max + 2.0 * x_max * i as f64 / nx as f64)
        .collect()
}

/// Trapezoid weights of a uniform grid with `n` cells and spacing `h`.
fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    (0..=n)
        .map(|i| if i == 0 || i == n { 0.5 * h } else { h })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ThinMesh {
    id: MeshId,
    epsilon: f64,
    x_max: f64,
    nx: usize,
    nz: usize,
    profile: ProfileG,
    x: Vec<f64>,
    /// Column heights `eps g(x_i)`.
    heights: Vec<f64>,
    coords: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    elements: Vec<Element>,
    mass: Vec<f64>,
    /// Trapezoid weights in `z`, summing to one.
    z_weights: Vec<f64>,
}

impl ThinMesh {
    fn build(epsilon: f64, x_max: f64, profile: ProfileG, nx: usize, nz: usize) -> Result<Self> {
        if nx < 2 || nz < 2 {
            return Err(Error::InvalidParameter(format!(
                "thin mesh needs nx >= 2 and nz >= 2 (got {nx}, {nz})"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thin mesh needs epsilon > 0 (got {epsilon})"
            )));
        }
        let x = uniform_nodes(x_max, nx);
        let heights: Vec<f64> = x.iter().map(|&xi| epsilon * profile.eval(xi)).collect();
        let stride = nz + 1;
        let mut coords = Vec::with_capacity((nx + 1) * stride);
        for i in 0..=nx {
            for j in 0..=nz {
                let z = j as f64 / nz as f64;
                coords.push([x[i], heights[i] * z]);
            }
        }

        let node = |i: usize, j: usize| i * stride + j;
        let mut triangles = Vec::with_capacity(2 * nx * nz);
        for i in 0..nx {
            for j in 0..nz {
                triangles.push([node(i, j), node(i + 1, j), node(i + 1, j + 1)]);
                triangles.push([node(i, j), node(i + 1, j + 1), node(i, j + 1)]);
            }
        }

        let mut elements = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let [p0, p1, p2] = tri.map(|n| coords[n]);
            let area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            if !(area2 > 0.0) {
                return Err(Error::DegenerateMesh(format!(
                    "triangle {t} has signed area {}",
                    0.5 * area2
                )));
            }
            let grads = [
                [(p1[1] - p2[1]) / area2, (p2[0] - p1[0]) / area2],
                [(p2[1] - p0[1]) / area2, (p0[0] - p2[0]) / area2],
                [(p0[1] - p1[1]) / area2, (p1[0] - p0[0]) / area2],
            ];
            elements.push(Element {
                nodes: *tri,
                arity: 3,
                grads,
                measure: 0.5 * area2 / epsilon,
            });
        }

        let h = 2.0 * x_max / nx as f64;
        let wx = trapezoid_weights(nx, h);
        let z_weights = trapezoid_weights(nz, 1.0 / nz as f64);
        let mut mass = Vec::with_capacity(coords.len());
        for i in 0..=nx {
            let column = wx[i] * profile.eval(x[i]);
            for wz in &z_weights {
                mass.push(column * wz);
            }
        }

        let id = MeshId {
            kind: MeshKind::Thin,
            nx,
            nz,
            eps_bits: epsilon.to_bits(),
            x_max_bits: x_max.to_bits(),
            profile_bits: profile_fingerprint(&profile),
        };
        Ok(Self {
            id,
            epsilon,
            x_max,
            nx,
            nz,
            profile,
            x,
            heights,
            coords,
            triangles,
            elements,
            mass,
            z_weights,
        })
    }

    pub fn id(&self) -> MeshId {
        self.id
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn profile(&self) -> &ProfileG {
        &self.profile
    }
    pub fn x_nodes(&self) -> &[f64] {
        &self.x
    }
    pub fn heights(&self) -> &[f64] {
        &self.heights
    }
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }
    /// Lumped masses under the scaled measure.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
    pub fn z_weights(&self) -> &[f64] {
        &self.z_weights
    }
    pub fn node_count(&self) -> usize {
        self.coords.len()
    }
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * (self.nz + 1) + j
    }
    /// Largest index distance between two nodes sharing an element.
    pub fn bandwidth(&self) -> usize {
        self.nz + 2
    }

    /// Nested refinement with both resolutions doubled.
    pub fn refine(&self) -> ThinMesh {
        Self::build(
            self.epsilon,
            self.x_max,
            self.profile,
            2 * self.nx,
            2 * self.nz,
        )
        .expect("refining a valid mesh cannot fail")
    }

    /// Physical area of each element, for diagnostics.
    pub fn element_areas(&self) -> impl Iterator<Item = f64> + '_ {
        self.elements.iter().map(|e| e.measure * self.epsilon)
    }
}

#[derive(Debug, Clone)]
pub struct LimitMesh {
    id: MeshId,
    x_max: f64,
    nx: usize,
    profile: ProfileG,
    x: Vec<f64>,
    g: Vec<f64>,
    elements: Vec<Element>,
    mass: Vec<f64>,
}

impl LimitMesh {
    fn build(x_max: f64, profile: ProfileG, nx: usize) -> Result<Self> {
        if nx < 2 {
            return Err(Error::InvalidParameter(format!(
                "limit mesh needs nx >= 2 (got {nx})"
            )));
        }
        let x = uniform_nodes(x_max, nx);
        let g: Vec<f64> = x.iter().map(|&xi| profile.eval(xi)).collect();
        let h = 2.0 * x_max / nx as f64;
        let elements = (0..nx)
            .map(|i| Element {
                nodes: [i, i + 1, 0],
                arity: 2,
                grads: [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]],
                measure: 0.5 * h * (g[i] + g[i + 1]),
            })
            .collect();
        let mass = trapezoid_weights(nx, h)
            .iter()
            .zip(&g)
            .map(|(w, gi)| w * gi)
            .collect();
        let id = MeshId {
            kind: MeshKind::Limit,
            nx,
            nz: 0,
            eps_bits: 0,
            x_max_bits: x_max.to_bits(),
            profile_bits: profile_fingerprint(&profile),
        };
        Ok(Self {
            id,
            x_max,
            nx,
            profile,
            x,
            g,
            elements,
            mass,
        })
    }

    pub fn id(&self) -> MeshId {
        self.id
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn profile(&self) -> &ProfileG {
        &self.profile
    }
    pub fn x_nodes(&self) -> &[f64] {
        &self.x
    }
    pub fn g_nodes(&self) -> &[f64] {
        &self.g
    }
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }
    /// Lumped masses for the measure `g dx`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
    pub fn node_count(&self) -> usize {
        self.x.len()
    }
    pub fn bandwidth(&self) -> usize {
        1
    }

    pub fn refine(&self) -> LimitMesh {
        Self::build(self.x_max, self.profile, 2 * self.nx)
            .expect("refining a valid mesh cannot fail")
    }
}

/// Terrain-following mesh of the truncated thin domain.
pub fn build_thin_mesh(problem: &ValidatedProblem, nx: usize, nz: usize) -> Result<ThinMesh> {
    ThinMesh::build(problem.epsilon, problem.x_max, problem.profile, nx, nz)
}

/// Uniform mesh of the truncated limit interval with `g`-weighted masses.
pub fn build_limit_mesh(problem: &ValidatedProblem, nx: usize) -> Result<LimitMesh> {
    LimitMesh::build(problem.x_max, problem.profile, nx)
}

/// Either discretization. Most numerical kernels are written once against this.
#[derive(Debug, Clone)]
pub enum Mesh {
    Thin(ThinMesh),
    Limit(LimitMesh),
}

impl Mesh {
    /// Build the mesh matching the problem's `epsilon` (zero selects the limit mesh)
    /// at the configured resolution.
    pub fn for_problem(problem: &ValidatedProblem) -> Result<Mesh> {
        if problem.is_limit() {
            build_limit_mesh(problem, problem.nx).map(Mesh::Limit)
        } else {
            build_thin_mesh(problem, problem.nx, problem.nz).map(Mesh::Thin)
        }
    }

    pub fn id(&self) -> MeshId {
        match self {
            Mesh::Thin(m) => m.id(),
            Mesh::Limit(m) => m.id(),
        }
    }
    pub fn kind(&self) -> MeshKind {
        self.id().kind
    }
    pub fn epsilon(&self) -> f64 {
        match self {
            Mesh::Thin(m) => m.epsilon(),
            Mesh::Limit(_) => 0.0,
        }
    }
    pub fn node_count(&self) -> usize {
        match self {
            Mesh::Thin(m) => m.node_count(),
            Mesh::Limit(m) => m.node_count(),
        }
    }
    pub fn elements(&self) -> &[Element] {
        match self {
            Mesh::Thin(m) => m.elements(),
            Mesh::Limit(m) => m.elements(),
        }
    }
    pub fn mass(&self) -> &[f64] {
        match self {
            Mesh::Thin(m) => m.mass(),
            Mesh::Limit(m) => m.mass(),
        }
    }
    pub fn bandwidth(&self) -> usize {
        match self {
            Mesh::Thin(m) => m.bandwidth(),
            Mesh::Limit(m) => m.bandwidth(),
        }
    }
    pub fn nx(&self) -> usize {
        match self {
            Mesh::Thin(m) => m.nx(),
            Mesh::Limit(m) => m.nx(),
        }
    }
    pub fn nz(&self) -> usize {
        match self {
            Mesh::Thin(m) => m.nz(),
            Mesh::Limit(_) => 0,
        }
    }
    pub fn x_max(&self) -> f64 {
        match self {
            Mesh::Thin(m) => m.x_max(),
            Mesh::Limit(m) => m.x_max(),
        }
    }
    /// Physical node coordinates; the limit mesh reports `y = 0`.
    pub fn node_coords(&self) -> Vec<[f64; 2]> {
        match self {
            Mesh::Thin(m) => m.coords().to_vec(),
            Mesh::Limit(m) => m.x_nodes().iter().map(|&x| [x, 0.0]).collect(),
        }
    }
    pub fn total_mass(&self) -> f64 {
        self.mass().iter().sum()
    }

    pub fn refine(&self) -> Mesh {
        match self {
            Mesh::Thin(m) => Mesh::Thin(m.refine()),
            Mesh::Limit(m) => Mesh::Limit(m.refine()),
        }
    }

    pub fn as_thin(&self) -> Option<&ThinMesh> {
        match self {
            Mesh::Thin(m) => Some(m),
            Mesh::Limit(_) => None,
        }
    }

    pub fn as_limit(&self) -> Option<&LimitMesh> {
        match self {
            Mesh::Limit(m) => Some(m),
            Mesh::Thin(_) => None,
        }
    }

    /// Interpolate a field from this mesh onto its refinement. Values are taken
    /// in the reference coordinates `(x, z)`, linear along the element edges.
    pub fn prolong(&self, fine: &Mesh, u: &Field) -> Result<Field> {
        self.check(u)?;
        let values = match (self, fine) {
            (Mesh::Limit(c), Mesh::Limit(f)) if f.nx == 2 * c.nx => {
                let mut out = vec![0.0; f.node_count()];
                for (i, v) in out.iter_mut().enumerate() {
                    *v = if i % 2 == 0 {
                        u.values[i / 2]
                    } else {
                        0.5 * (u.values[i / 2] + u.values[i / 2 + 1])
                    };
                }
                out
            }
            (Mesh::Thin(c), Mesh::Thin(f)) if f.nx == 2 * c.nx && f.nz == 2 * c.nz => {
                let mut out = vec![0.0; f.node_count()];
                for fi in 0..=f.nx {
                    for fj in 0..=f.nz {
                        let (i, j) = (fi / 2, fj / 2);
                        let at = |di: usize, dj: usize| u.values[c.node(i + di, j + dj)];
                        out[f.node(fi, fj)] = match (fi % 2, fj % 2) {
                            (0, 0) => at(0, 0),
                            (1, 0) => 0.5 * (at(0, 0) + at(1, 0)),
                            (0, 1) => 0.5 * (at(0, 0) + at(0, 1)),
                            _ => 0.5 * (at(0, 0) + at(1, 1)),
                        };
                    }
                }
                out
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "prolongation target is not the refinement of this mesh".into(),
                ))
            }
        };
        Field::new(fine, values)
    }

    pub(crate) fn check(&self, u: &Field) -> Result<()> {
        if u.mesh == self.id() && u.values.len() == self.node_count() {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }
}

impl From<ThinMesh> for Mesh {
    fn from(m: ThinMesh) -> Self {
        Mesh::Thin(m)
    }
}

impl From<LimitMesh> for Mesh {
    fn from(m: LimitMesh) -> Self {
        Mesh::Limit(m)
    }
}

/// Nodal coefficient vector of a piecewise-linear function on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: MeshId,
    values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::MeshMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "field value at node {i} is not finite"
            )));
        }
        Ok(Self {
            mesh: mesh.id(),
            values,
        })
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            mesh: mesh.id(),
            values: vec![0.0; mesh.node_count()],
        }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self {
            mesh: mesh.id(),
            values: vec![c; mesh.node_count()],
        }
    }

    /// Nodal interpolant of `f(x, y)`.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            mesh: mesh.id(),
            values: mesh.node_coords().iter().map(|&[x, y]| f(x, y)).collect(),
        }
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn from_raw(mesh: MeshId, values: Vec<f64>) -> Self {
        Self { mesh, values }
    }

    /// `self - other`, both on the same mesh.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        if self.mesh != other.mesh {
            return Err(Error::MeshMismatch);
        }
        Ok(Field::from_raw(
            self.mesh,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field::from_raw(self.mesh, self.values.iter().map(|v| v * s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin_problem, validate_config, ProblemConfig};
    use approx::assert_relative_eq;

    fn problem(name: &str, eps: f64, x_max: f64) -> ValidatedProblem {
        validate_config(&ProblemConfig {
            x_max,
            tail_tol: f64::INFINITY,
            ..builtin_problem(name).unwrap().with_epsilon(eps)
        })
        .unwrap()
    }

    #[test]
    fn small_flat_rectangle() {
        let m = build_thin_mesh(&problem("flat", 0.1, 1.0), 4, 2).unwrap();
        assert_eq!(m.node_count(), 15);
        assert_eq!(m.elements().len(), 16);
        assert_relative_eq!(m.mass().iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(
            m.elements().iter().map(|e| e.measure).sum::<f64>(),
            2.0,
            epsilon = 1e-14
        );
        for i in 0..=4 {
            assert_eq!(m.coords()[m.node(i, 2)][1], 0.1);
        }
        assert!(m.element_areas().all(|a| a > 0.0));
    }

    #[test]
    fn top_boundary_follows_profile() {
        let m = build_thin_mesh(&problem("bump", 0.2, 4.0), 32, 4).unwrap();
        for i in 0..=32 {
            let [x, y] = m.coords()[m.node(i, 4)];
            assert_eq!(y, 0.2 * (1.0 + 0.5 * (-(x * x)).exp()));
        }
    }

    #[test]
    fn flat_mesh_has_constant_jacobians() {
        let m = build_thin_mesh(&problem("flat", 0.3, 2.0), 8, 3).unwrap();
        let first = m.elements()[0].measure;
        assert!(m
            .elements()
            .iter()
            .all(|e| (e.measure - first).abs() < 1e-14));
    }

    #[test]
    fn limit_mesh_masses() {
        let m = build_limit_mesh(&problem("flat", 0.0, 1.0), 4).unwrap();
        assert_eq!(m.node_count(), 5);
        assert_relative_eq!(m.mass().iter().sum::<f64>(), 2.0, epsilon = 1e-15);
        assert!(build_limit_mesh(&problem("flat", 0.0, 1.0), 1).is_err());
    }

    #[test]
    fn bump_limit_mass_converges() {
        // 2 + 0.5 * sqrt(pi) * erf(1), with erf(1) from a high-order reference.
        let erf1 = 0.842_700_792_949_714_9_f64;
        let exact = 2.0 + 0.5 * std::f64::consts::PI.sqrt() * erf1;
        let p = problem("bump", 0.0, 1.0);
        let mut prev = f64::INFINITY;
        for nx in [8, 16, 32, 64, 128] {
            let err = (build_limit_mesh(&p, nx).unwrap().mass().iter().sum::<f64>() - exact).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn thin_mass_is_independent_of_epsilon() {
        for name in ["flat", "bump", "paper-generic"] {
            let masses: Vec<f64> = [0.4, 0.1, 0.01]
                .iter()
                .map(|&e| {
                    build_thin_mesh(&problem(name, e, 4.0), 16, 4)
                        .unwrap()
                        .mass()
                        .iter()
                        .sum()
                })
                .collect();
            for m in &masses[1..] {
                assert_relative_eq!(*m, masses[0], max_relative = 1e-13);
            }
            let limit: f64 = build_limit_mesh(&problem(name, 0.0, 4.0), 16)
                .unwrap()
                .mass()
                .iter()
                .sum();
            assert_relative_eq!(limit, masses[0], max_relative = 1e-13);
        }
    }

    #[test]
    fn refinement_is_nested() {
        let m = build_thin_mesh(&problem("bump", 0.2, 4.0), 4, 2).unwrap();
        let r = m.refine();
        assert_eq!((r.nx(), r.nz()), (8, 4));
        for i in 0..=4 {
            for j in 0..=2 {
                assert_eq!(m.coords()[m.node(i, j)], r.coords()[r.node(2 * i, 2 * j)]);
            }
        }
        let rr = r.refine();
        let direct = ThinMesh::build(0.2, 4.0, *m.profile(), 16, 8).unwrap();
        assert_eq!(rr.coords(), direct.coords());
        assert_eq!(rr.id(), direct.id());
        let mf = problem("flat", 0.2, 4.0);
        let flat = build_thin_mesh(&mf, 4, 2).unwrap();
        assert_relative_eq!(
            flat.refine().mass().iter().sum::<f64>(),
            flat.mass().iter().sum::<f64>(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn inverted_elements_are_rejected() {
        let upside_down = crate::problem::ProfileG::constant(-1.0);
        assert!(matches!(
            ThinMesh::build(0.1, 1.0, upside_down, 4, 2),
            Err(Error::DegenerateMesh(_))
        ));
    }

    #[test]
    fn field_invariants() {
        let m = Mesh::Thin(build_thin_mesh(&problem("flat", 0.1, 1.0), 4, 2).unwrap());
        assert!(Field::new(&m, vec![0.0; 14]).is_err());
        let mut v = vec![0.0; 15];
        v[3] = f64::NAN;
        assert!(Field::new(&m, v).is_err());
        let l = Mesh::Limit(build_limit_mesh(&problem("flat", 0.0, 1.0), 4).unwrap());
        assert!(matches!(
            l.check(&Field::zeros(&m)),
            Err(Error::MeshMismatch)
        ));
    }

    #[test]
    fn prolongation_reproduces_linear_functions() {
        let m = Mesh::Thin(build_thin_mesh(&problem("flat", 0.1, 1.0), 4, 2).unwrap());
        let f = m.refine();
        let u = Field::from_fn(&m, |x, y| 2.0 * x - 3.0 * y + 1.0);
        let pu = m.prolong(&f, &u).unwrap();
        let exact = Field::from_fn(&f, |x, y| 2.0 * x - 3.0 * y + 1.0);
        for (a, b) in pu.values().iter().zip(exact.values()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-13);
        }
    }
}
