//! Scaled norms, the energy norm, and the explicit constants of the
//! absorbing-ball estimates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::TrajectoryRecord;
use crate::mesh::{Field, Mesh};
use crate::operators::Model;

/// `(sum_i m_i |u_i|^q)^{1/q}` with the lumped masses of the mesh: the
/// `rho_eps`-scaled norm on a thin mesh, the `g dx` norm on a limit mesh.
pub fn scaled_lp_norm(mesh: &Mesh, u: &Field, q: f64) -> Result<f64> {
    mesh.check(u)?;
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("norm exponent {q} < 1")));
    }
    Ok(lp_norm_raw(mesh.mass(), u.values(), q))
}

pub(crate) fn lp_norm_raw(mass: &[f64], u: &[f64], q: f64) -> f64 {
    if q == 2.0 {
        return mass
            .iter()
            .zip(u)
            .map(|(m, v)| m * v * v)
            .sum::<f64>()
            .sqrt();
    }
    mass.iter()
        .zip(u)
        .map(|(m, v)| m * v.abs().powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// Scaled `L^2` norm.
pub fn l2_norm(mesh: &Mesh, u: &Field) -> Result<f64> {
    scaled_lp_norm(mesh, u, 2.0)
}

/// `p`-th power of the energy norm: `sum_e |e| |grad u|^p + sum_i m_i a_i |u_i|^p`.
pub(crate) fn energy_raw(model: &Model, u: &[f64]) -> f64 {
    let p = model.p();
    let grad: f64 = model
        .mesh()
        .elements()
        .iter()
        .map(|e| {
            let g = e.gradient(u);
            e.measure * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * p)
        })
        .sum();
    let mass: f64 = model
        .mesh()
        .mass()
        .iter()
        .zip(model.node_weight())
        .zip(u)
        .map(|((m, a), v)| m * a * v.abs().powf(p))
        .sum();
    grad + mass
}

/// Energy norm `[eps^{-1} int (|grad u|^p + a |u|^p)]^{1/p}` (thin) or its
/// `g`-weighted limit analogue.
pub fn e_norm(model: &Model, u: &Field) -> Result<f64> {
    model.mesh().check(u)?;
    Ok(energy_raw(model, u.values()).powf(1.0 / model.p()))
}

/// Safety factor applied to the measured coercivity constant.
pub const EMBEDDING_MARGIN: f64 = 0.9;

/// `0.9 * min <A u, u> / |||u|||_2^p` over the nonzero members of the ensemble.
pub fn measure_embedding_c(model: &Model, ensemble: &[Field]) -> Result<f64> {
    let p = model.p();
    let mut best = f64::INFINITY;
    for u in ensemble {
        let l2 = l2_norm(model.mesh(), u)?;
        if l2 == 0.0 {
            continue;
        }
        let ratio = energy_raw(model, u.values()) / l2.powf(p);
        best = best.min(ratio);
    }
    if best.is_finite() {
        Ok(EMBEDDING_MARGIN * best)
    } else {
        Err(Error::EmptyEnsemble)
    }
}

/// How the Young parameter `eta` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum EtaPolicy {
    /// `eta^theta / theta = c / 2`, so `gamma = c / 2`.
    HalfCoercivity,
    Explicit {
        eta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationConstants {
    pub p: f64,
    pub lipschitz: f64,
    pub c: f64,
    pub theta: f64,
    pub theta_prime: f64,
    pub eta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Bound on `|||u|||_2^2 / 2` after the absorbing time.
    pub beta: f64,
    /// Absorbing time.
    #[serde(rename = "T")]
    pub t_absorb: f64,
}

impl DissipationConstants {
    /// Time-dependent bound `(delta / gamma)^{2/p} + [gamma (p - 2) t / 2]^{-2/(p-2)}`
    /// on `|||u(t)|||_2^2 / 2`.
    pub fn l2_half_square_bound(&self, t: f64) -> f64 {
        let p = self.p;
        (self.delta / self.gamma).powf(2.0 / p)
            + (0.5 * self.gamma * (p - 2.0) * t).powf(-2.0 / (p - 2.0))
    }

    /// Radius of the absorbing ball in the scaled `L^2` norm, `sqrt(2 beta)`.
    pub fn l2_radius(&self) -> f64 {
        (2.0 * self.beta).sqrt()
    }
}

pub fn dissipation_constants(
    p: f64,
    lipschitz: f64,
    c: f64,
    policy: EtaPolicy,
) -> Result<DissipationConstants> {
    if !(p > 2.0) {
        return Err(Error::InvalidExponent(p));
    }
    if !(lipschitz > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need L > 0 and c > 0 (got L = {lipschitz}, c = {c})"
        )));
    }
    let theta = p / 2.0;
    let theta_prime = p / (p - 2.0);
    let eta = match policy {
        EtaPolicy::HalfCoercivity => (theta * c / 2.0).powf(1.0 / theta),
        EtaPolicy::Explicit { eta } => eta,
    };
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} must be positive"
        )));
    }
    let gamma = c - eta.powf(theta) / theta;
    if !(gamma > 0.0) {
        return Err(Error::ChooseSmallerEta { eta, gamma });
    }
    let delta = (lipschitz / eta).powf(theta_prime) / theta_prime;
    let beta = (delta / gamma).powf(2.0 / p) + 1.0;
    let t_absorb = 2.0 / (gamma * (p - 2.0));
    Ok(DissipationConstants {
        p,
        lipschitz,
        c,
        theta,
        theta_prime,
        eta,
        gamma,
        delta,
        beta,
        t_absorb,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformGronwallConstants {
    #[serde(rename = "R")]
    pub r: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub beta2: f64,
    pub beta1: f64,
}

pub fn uniform_gronwall_constants(
    p: f64,
    lipschitz: f64,
    r: f64,
    a3: f64,
) -> Result<UniformGronwallConstants> {
    if !(p > 2.0) {
        return Err(Error::InvalidExponent(p));
    }
    if !(r > 0.0) || !(a3 >= 0.0) || !(lipschitz >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need R > 0, a3 >= 0, L >= 0 (got R = {r}, a3 = {a3}, L = {lipschitz})"
        )));
    }
    let theta = p / 2.0;
    let theta_prime = p / (p - 2.0);
    let a1 = r * p / (2.0 * theta);
    let a2 = r * p / (2.0 * theta_prime) * lipschitz.powf(2.0 * theta_prime);
    let beta2 = (a3 / r + a2) * a1.exp();
    Ok(UniformGronwallConstants {
        r,
        a1,
        a2,
        a3,
        beta2,
        beta1: beta2.powf(1.0 / p),
    })
}

/// Windowed energy integral and the bound obtained by integrating the
/// `L^2` energy identity over the same window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowEnergy {
    /// `int_t^{t+R} ||u(s)||_E^p ds`
    pub integral: f64,
    /// `|||u(t)|||_2^2 / 2 + L int_t^{t+R} |||u(s)|||_2^2 ds`
    pub analytic_bound: f64,
}

/// Energy integral over `[t, t + R]` from the per-step logs.
///
/// Time integrals use the right-endpoint rule on the logged grid, the
/// quadrature under which the implicit Euler energy inequality holds exactly.
pub fn time_integrated_energy(traj: &TrajectoryRecord, t: f64, r: f64) -> Result<WindowEnergy> {
    let logs = traj.logs();
    let (first, last) = match (logs.first(), logs.last()) {
        (Some(f), Some(l)) => (f.t, l.t),
        _ => {
            return Err(Error::WindowOutOfRange {
                start: t,
                end: t + r,
            })
        }
    };
    let slack = 1e-9 * (1.0 + last.abs());
    if !(r >= 0.0) || t < first - slack || t + r > last + slack {
        return Err(Error::WindowOutOfRange {
            start: t,
            end: t + r,
        });
    }
    let start = logs.partition_point(|l| l.t < t - slack);
    let end = logs.partition_point(|l| l.t <= t + r + slack);
    let p = traj.p();
    let lipschitz = traj.lipschitz();
    let mut integral = 0.0;
    let mut l2_integral = 0.0;
    for k in (start + 1)..end {
        let dt = logs[k].t - logs[k - 1].t;
        integral += dt * logs[k].e_norm.powf(p);
        l2_integral += dt * logs[k].l2 * logs[k].l2;
    }
    Ok(WindowEnergy {
        integral,
        analytic_bound: 0.5 * logs[start].l2 * logs[start].l2 + lipschitz * l2_integral,
    })
}

/// Largest window bound `a3` over all windows `[t_k, t_k + R]` inside the record.
pub fn max_window_bound(traj: &TrajectoryRecord, r: f64) -> Result<f64> {
    let logs = traj.logs();
    let last = logs.last().map(|l| l.t).unwrap_or(0.0);
    let slack = 1e-9 * (1.0 + last.abs());
    let mut best: Option<f64> = None;
    for log in logs {
        if log.t + r > last + slack {
            break;
        }
        let w = time_integrated_energy(traj, log.t, r)?;
        best = Some(best.map_or(w.analytic_bound, |b: f64| b.max(w.analytic_bound)));
    }
    best.ok_or(Error::WindowOutOfRange {
        start: logs.first().map(|l| l.t).unwrap_or(0.0),
        end: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_limit_mesh, build_thin_mesh};
    use crate::operators::{apply_a, extend};
    use crate::problem::{
        builtin_problem, validate_config, ProblemConfig, ValidatedProblem, WeightA,
    };
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn unit(eps: f64) -> ValidatedProblem {
        validate_config(&ProblemConfig {
            x_max: 1.0,
            weight: WeightA::constant(1.0),
            tail_tol: f64::INFINITY,
            ..builtin_problem("flat").unwrap().with_epsilon(eps)
        })
        .unwrap()
    }

    #[test]
    fn unit_field_norms_are_independent_of_epsilon() {
        for eps in [0.4, 0.1, 0.01] {
            let p = unit(eps);
            let mesh = Mesh::Thin(build_thin_mesh(&p, 4, 2).unwrap());
            let one = Field::constant(&mesh, 1.0);
            assert_relative_eq!(l2_norm(&mesh, &one).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
            assert_eq!(l2_norm(&mesh, &Field::zeros(&mesh)).unwrap(), 0.0);
            let model = Model::new(&p, Arc::new(mesh)).unwrap();
            assert_relative_eq!(e_norm(&model, &one).unwrap().powi(3), 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn thin_norm_of_extension_equals_limit_norm() {
        let pt = validate_config(&builtin_problem("bump").unwrap().with_epsilon(0.2)).unwrap();
        let thin = build_thin_mesh(&pt, 32, 4).unwrap();
        let limit = build_limit_mesh(&pt, 32).unwrap();
        let lm = Mesh::Limit(limit.clone());
        let v = Field::from_fn(&lm, |x, _| (x * 1.3).sin() + 0.2);
        let ev = extend(&limit, &thin, &v).unwrap();
        let tm = Mesh::Thin(thin);
        for q in [1.0, 2.0, 3.0, 4.5] {
            assert_relative_eq!(
                scaled_lp_norm(&tm, &ev, q).unwrap(),
                scaled_lp_norm(&lm, &v, q).unwrap(),
                max_relative = 1e-13
            );
        }
        assert!(scaled_lp_norm(&lm, &v, 0.5).is_err());
    }

    #[test]
    fn energy_norm_equals_pairing() {
        let p =
            validate_config(&builtin_problem("paper-generic").unwrap().with_epsilon(0.3)).unwrap();
        let model = Model::from_problem(&p).unwrap();
        let u = Field::from_fn(model.mesh(), |x, y| (2.0 * x).cos() + 5.0 * y * x);
        let pairing = apply_a(&model, &u).unwrap().pair(&u).unwrap();
        assert_relative_eq!(
            e_norm(&model, &u).unwrap().powf(3.0),
            pairing,
            max_relative = 1e-12
        );
        assert_eq!(e_norm(&model, &Field::zeros(model.mesh())).unwrap(), 0.0);
    }

    #[test]
    fn embedding_constant_of_unit_field() {
        let p = unit(0.1);
        let model =
            Model::new(&p, Arc::new(Mesh::Thin(build_thin_mesh(&p, 4, 2).unwrap()))).unwrap();
        let one = Field::constant(model.mesh(), 1.0);
        let c = measure_embedding_c(&model, std::slice::from_ref(&one)).unwrap();
        assert_relative_eq!(c, 0.9 * 2f64.powf(-0.5), epsilon = 1e-13);
        let bumpy = Field::from_fn(model.mesh(), |x, _| x);
        let c2 = measure_embedding_c(&model, &[one, bumpy]).unwrap();
        assert!(c2 <= c);
        assert!(matches!(
            measure_embedding_c(&model, &[]),
            Err(Error::EmptyEnsemble)
        ));
        assert!(matches!(
            measure_embedding_c(&model, &[Field::zeros(model.mesh())]),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn dissipation_constants_by_hand() {
        let k = dissipation_constants(3.0, 1.0, 1.0, EtaPolicy::Explicit { eta: 1.0 }).unwrap();
        assert_relative_eq!(k.theta, 1.5);
        assert_relative_eq!(k.theta_prime, 3.0);
        assert_relative_eq!(k.gamma, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(k.delta, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(k.beta, 2.0, epsilon = 1e-15);
        assert_relative_eq!(k.t_absorb, 6.0, epsilon = 1e-14);
        // The time-dependent bound reaches beta exactly at T.
        assert_relative_eq!(k.l2_half_square_bound(k.t_absorb), k.beta, epsilon = 1e-14);
    }

    #[test]
    fn eta_too_large_is_rejected() {
        assert!(matches!(
            dissipation_constants(3.0, 1.0, 1.0, EtaPolicy::Explicit { eta: 2.0 }),
            Err(Error::ChooseSmallerEta { .. })
        ));
        assert!(matches!(
            dissipation_constants(2.0, 1.0, 1.0, EtaPolicy::HalfCoercivity),
            Err(Error::InvalidExponent(_))
        ));
    }

    #[test]
    fn half_coercivity_policy() {
        let k = dissipation_constants(3.0, 1.0, 0.8, EtaPolicy::HalfCoercivity).unwrap();
        assert_relative_eq!(k.gamma, 0.4, epsilon = 1e-14);
        assert_eq!(k.gamma, k.c - k.eta.powf(k.theta) / k.theta);
        assert_eq!(k.beta, (k.delta / k.gamma).powf(2.0 / k.p) + 1.0);
    }

    #[test]
    fn doubling_lipschitz_scales_delta_only() {
        let pol = EtaPolicy::Explicit { eta: 0.5 };
        let a = dissipation_constants(3.0, 1.0, 1.0, pol).unwrap();
        let b = dissipation_constants(3.0, 2.0, 1.0, pol).unwrap();
        assert_relative_eq!(
            b.delta,
            a.delta * 2f64.powf(a.theta_prime),
            max_relative = 1e-14
        );
        assert_eq!(a.gamma, b.gamma);
        assert_eq!(a.t_absorb, b.t_absorb);
    }

    #[test]
    fn uniform_gronwall_by_hand() {
        let k = uniform_gronwall_constants(3.0, 1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(k.a1, 1.0, epsilon = 1e-15);
        assert_relative_eq!(k.a2, 0.5, epsilon = 1e-15);
        assert_relative_eq!(k.beta2, 2.5 * std::f64::consts::E, epsilon = 1e-12);
        assert_relative_eq!(k.beta1, 1.894_14, epsilon = 1e-5);
        assert_relative_eq!(k.beta1.powf(3.0), k.beta2, max_relative = 1e-14);
        let zero = uniform_gronwall_constants(3.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(zero.beta2, 0.0);
        let more = uniform_gronwall_constants(3.0, 1.0, 1.0, 2.5).unwrap();
        assert!(more.beta2 > k.beta2);
        assert!(uniform_gronwall_constants(2.0, 1.0, 1.0, 1.0).is_err());
    }
}
