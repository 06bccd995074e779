//! Continuous problem data: the height profile `g`, the confining weight `a`,
//! the Lipschitz nonlinearity `f`, the exponent `p` and the truncation box,
//! together with the discretization and solver parameters used downstream.
//!
//! Function rules come from a small named registry with numeric parameters.
//! A [`ProblemConfig`] only becomes usable through [`validate_config`], which
//! collects every violated hypothesis instead of stopping at the first one.

use std::fmt::Write as _;
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, HypothesisViolation, Result};

/// Spatial dimension of the limit domain. The thin domain lives one dimension up.
pub const LIMIT_DIMENSION: usize = 1;

/// Height profile rule `x -> g(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ProfileRule {
    /// `g(x) = value`
    Constant { value: f64 },
    /// `g(x) = base + amplitude * exp(-(x / width)^2)`
    Bump {
        base: f64,
        amplitude: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileG {
    pub rule: ProfileRule,
    /// Declared lower bound.
    pub alpha1: f64,
    /// Declared upper bound.
    pub alpha2: f64,
}

impl ProfileG {
    pub fn constant(value: f64) -> Self {
        Self {
            rule: ProfileRule::Constant { value },
            alpha1: value,
            alpha2: value,
        }
    }

    /// Bump profile with bounds declared from its range over the real line.
    pub fn bump(base: f64, amplitude: f64, width: f64) -> Self {
        let (lo, hi) = if amplitude >= 0.0 {
            (base, base + amplitude)
        } else {
            (base + amplitude, base)
        };
        Self {
            rule: ProfileRule::Bump {
                base,
                amplitude,
                width,
            },
            alpha1: lo,
            alpha2: hi,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.rule {
            ProfileRule::Constant { value } => value,
            ProfileRule::Bump {
                base,
                amplitude,
                width,
            } => base + amplitude * (-(x / width).powi(2)).exp(),
        }
    }
}

/// Weight rule `(x, y) -> a(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WeightRule {
    /// `a(x, y) = value`
    Constant { value: f64 },
    /// `a(x, y) = 1 + k (x^2 + y^2)`
    Radial { k: f64 },
    /// `a(x, y) = 1 + k x^2`, independent of the transverse variable.
    Axial { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightA {
    pub rule: WeightRule,
}

impl WeightA {
    pub fn constant(value: f64) -> Self {
        Self {
            rule: WeightRule::Constant { value },
        }
    }

    pub fn radial(k: f64) -> Self {
        Self {
            rule: WeightRule::Radial { k },
        }
    }

    pub fn axial(k: f64) -> Self {
        Self {
            rule: WeightRule::Axial { k },
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.rule {
            WeightRule::Constant { value } => value,
            WeightRule::Radial { k } => 1.0 + k * (x * x + y * y),
            WeightRule::Axial { k } => 1.0 + k * x * x,
        }
    }

    /// The trace `a(x, 0)` used by the limit problem.
    #[inline]
    pub fn trace(&self, x: f64) -> f64 {
        self.eval(x, 0.0)
    }

    /// The same weight with the transverse dependence removed, `(x, y) -> a(x, 0)`.
    pub fn trace_extended(&self) -> Self {
        match self.rule {
            WeightRule::Radial { k } => Self::axial(k),
            _ => *self,
        }
    }
}

/// Scalar nonlinearity rule. The evaluated function is `amplitude * base(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityRule {
    Zero,
    Linear,
    Tanh,
    Sin,
    /// `clamp(s, -1, 1)`
    Clip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearityF {
    pub rule: NonlinearityRule,
    pub amplitude: f64,
    /// Declared global Lipschitz constant `L`.
    pub lipschitz: f64,
}

impl NonlinearityF {
    pub fn new(rule: NonlinearityRule, lipschitz: f64) -> Self {
        let amplitude = if rule == NonlinearityRule::Zero {
            0.0
        } else {
            lipschitz
        };
        Self {
            rule,
            amplitude,
            lipschitz,
        }
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        let base = match self.rule {
            NonlinearityRule::Zero => return 0.0,
            NonlinearityRule::Linear => s,
            NonlinearityRule::Tanh => s.tanh(),
            NonlinearityRule::Sin => s.sin(),
            NonlinearityRule::Clip => s.clamp(-1.0, 1.0),
        };
        self.amplitude * base
    }

    /// Derivative, used only to build Newton Jacobians.
    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        let base = match self.rule {
            NonlinearityRule::Zero => return 0.0,
            NonlinearityRule::Linear => 1.0,
            NonlinearityRule::Tanh => {
                let c = s.cosh();
                1.0 / (c * c)
            }
            NonlinearityRule::Sin => s.cos(),
            NonlinearityRule::Clip => {
                if s.abs() < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        self.amplitude * base
    }
}

/// Full description of one problem instance. `epsilon == 0` selects the
/// limit problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemConfig {
    pub name: String,
    pub p: f64,
    pub epsilon: f64,
    pub profile: ProfileG,
    pub weight: WeightA,
    pub nonlinearity: NonlinearityF,
    /// Half-width of the truncation interval `[-x_max, x_max]`.
    pub x_max: f64,
    pub nx: usize,
    pub nz: usize,
    pub dt: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Jacobian regularization of the degenerate diffusion factor.
    pub mu: f64,
    /// Bound on the outer-shell contribution of `a^{-2/(p-2)}`.
    pub tail_tol: f64,
    pub strict_paper_hypotheses: bool,
    pub seed: u64,
    pub ensemble_size: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            p: 3.0,
            epsilon: 0.1,
            profile: ProfileG::constant(1.0),
            weight: WeightA::radial(1.0),
            nonlinearity: NonlinearityF::new(NonlinearityRule::Tanh, 1.0),
            x_max: 4.0,
            nx: 64,
            nz: 8,
            dt: 0.05,
            newton_tol: 1e-10,
            max_newton: 50,
            mu: 1e-8,
            tail_tol: 1e-2,
            strict_paper_hypotheses: false,
            seed: 0,
            ensemble_size: 16,
        }
    }
}

impl ProblemConfig {
    pub fn is_limit(&self) -> bool {
        self.epsilon == 0.0
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    /// Parse the `key = value` text format. Unknown keys are errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ProblemConfig::default();
        let mut profile_kind = String::from("constant");
        let mut profile_value = 1.0;
        let mut profile_base = 1.0;
        let mut profile_amp = 0.5;
        let mut profile_width = 1.0;
        let mut weight_kind = String::from("radial");
        let mut weight_param = 1.0;
        let mut nl_kind = String::from("tanh");
        let mut lipschitz = 1.0;
        let mut amplitude: Option<f64> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::ConfigParse(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| {
                    Error::ConfigParse(format!("line {}: `{key}` expects a number", lineno + 1))
                })
            };
            let int = || -> Result<usize> {
                value.parse::<usize>().map_err(|_| {
                    Error::ConfigParse(format!("line {}: `{key}` expects an integer", lineno + 1))
                })
            };
            match key {
                "name" => cfg.name = value.to_string(),
                "p" => cfg.p = num()?,
                "epsilon" => cfg.epsilon = num()?,
                "x_max" => cfg.x_max = num()?,
                "nx" => cfg.nx = int()?,
                "nz" => cfg.nz = int()?,
                "dt" => cfg.dt = num()?,
                "newton_tol" => cfg.newton_tol = num()?,
                "max_newton" => cfg.max_newton = int()?,
                "mu" => cfg.mu = num()?,
                "tail_tol" => cfg.tail_tol = num()?,
                "seed" => {
                    cfg.seed = value.parse::<u64>().map_err(|_| {
                        Error::ConfigParse(format!("line {}: `seed` expects a u64", lineno + 1))
                    })?
                }
                "ensemble_size" => cfg.ensemble_size = int()?,
                "strict_paper_hypotheses" => {
                    cfg.strict_paper_hypotheses = value.parse::<bool>().map_err(|_| {
                        Error::ConfigParse(format!(
                            "line {}: `strict_paper_hypotheses` expects true/false",
                            lineno + 1
                        ))
                    })?
                }
                "profile" => profile_kind = value.to_string(),
                "profile.value" => profile_value = num()?,
                "profile.base" => profile_base = num()?,
                "profile.amplitude" => profile_amp = num()?,
                "profile.width" => profile_width = num()?,
                "weight" => weight_kind = value.to_string(),
                "weight.value" | "weight.k" => weight_param = num()?,
                "nonlinearity" => nl_kind = value.to_string(),
                "nonlinearity.lipschitz" => lipschitz = num()?,
                "nonlinearity.amplitude" => amplitude = Some(num()?),
                other => {
                    return Err(Error::ConfigParse(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }

        cfg.profile = match profile_kind.as_str() {
            "constant" => ProfileG::constant(profile_value),
            "bump" => ProfileG::bump(profile_base, profile_amp, profile_width),
            other => {
                return Err(Error::ConfigParse(format!(
                    "unknown profile rule `{other}`"
                )))
            }
        };
        cfg.weight = match weight_kind.as_str() {
            "constant" => WeightA::constant(weight_param),
            "radial" => WeightA::radial(weight_param),
            "axial" => WeightA::axial(weight_param),
            other => return Err(Error::ConfigParse(format!("unknown weight rule `{other}`"))),
        };
        let rule = match nl_kind.as_str() {
            "zero" => NonlinearityRule::Zero,
            "linear" => NonlinearityRule::Linear,
            "tanh" => NonlinearityRule::Tanh,
            "sin" => NonlinearityRule::Sin,
            "clip" => NonlinearityRule::Clip,
            other => {
                return Err(Error::ConfigParse(format!(
                    "unknown nonlinearity rule `{other}`"
                )))
            }
        };
        cfg.nonlinearity = NonlinearityF::new(rule, lipschitz);
        if let Some(a) = amplitude {
            cfg.nonlinearity.amplitude = a;
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# thinlab problem configuration");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "p = {:?}", self.p);
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        match self.profile.rule {
            ProfileRule::Constant { value } => {
                let _ = writeln!(s, "profile = constant");
                let _ = writeln!(s, "profile.value = {value:?}");
            }
            ProfileRule::Bump {
                base,
                amplitude,
                width,
            } => {
                let _ = writeln!(s, "profile = bump");
                let _ = writeln!(s, "profile.base = {base:?}");
                let _ = writeln!(s, "profile.amplitude = {amplitude:?}");
                let _ = writeln!(s, "profile.width = {width:?}");
            }
        }
        match self.weight.rule {
            WeightRule::Constant { value } => {
                let _ = writeln!(s, "weight = constant");
                let _ = writeln!(s, "weight.value = {value:?}");
            }
            WeightRule::Radial { k } => {
                let _ = writeln!(s, "weight = radial");
                let _ = writeln!(s, "weight.k = {k:?}");
            }
            WeightRule::Axial { k } => {
                let _ = writeln!(s, "weight = axial");
                let _ = writeln!(s, "weight.k = {k:?}");
            }
        }
        let nl = match self.nonlinearity.rule {
            NonlinearityRule::Zero => "zero",
            NonlinearityRule::Linear => "linear",
            NonlinearityRule::Tanh => "tanh",
            NonlinearityRule::Sin => "sin",
            NonlinearityRule::Clip => "clip",
        };
        let _ = writeln!(s, "nonlinearity = {nl}");
        let _ = writeln!(
            s,
            "nonlinearity.lipschitz = {:?}",
            self.nonlinearity.lipschitz
        );
        let _ = writeln!(
            s,
            "nonlinearity.amplitude = {:?}",
            self.nonlinearity.amplitude
        );
        let _ = writeln!(s, "x_max = {:?}", self.x_max);
        let _ = writeln!(s, "nx = {}", self.nx);
        let _ = writeln!(s, "nz = {}", self.nz);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "newton_tol = {:?}", self.newton_tol);
        let _ = writeln!(s, "max_newton = {}", self.max_newton);
        let _ = writeln!(s, "mu = {:?}", self.mu);
        let _ = writeln!(s, "tail_tol = {:?}", self.tail_tol);
        let _ = writeln!(
            s,
            "strict_paper_hypotheses = {}",
            self.strict_paper_hypotheses
        );
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "ensemble_size = {}", self.ensemble_size);
        s
    }
}

/// A configuration that passed [`validate_config`]. Immutable.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedProblem(ProblemConfig);

impl ValidatedProblem {
    pub fn config(&self) -> &ProblemConfig {
        &self.0
    }

    /// Re-validate with a different thinness parameter.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        validate_config(&self.0.with_epsilon(epsilon))
    }

    /// Re-validate with a different weight.
    pub fn with_weight(&self, weight: WeightA) -> Result<Self> {
        validate_config(&ProblemConfig {
            weight,
            ..self.0.clone()
        })
    }

    pub fn into_inner(self) -> ProblemConfig {
        self.0
    }
}

impl Deref for ValidatedProblem {
    type Target = ProblemConfig;
    fn deref(&self) -> &ProblemConfig {
        &self.0
    }
}

const PROFILE_SAMPLES: usize = 2001;
const WEIGHT_SAMPLES_X: usize = 401;
const WEIGHT_SAMPLES_Y: usize = 21;
const LIPSCHITZ_PAIRS: usize = 1000;
const LIPSCHITZ_RANGE: f64 = 10.0;

/// Integral of `a^{-2/(p-2)}` over the truncated domain and its outer-shell part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailProxy {
    pub total: f64,
    /// Contribution of `0.9 x_max <= |x| <= x_max`.
    pub shell: f64,
}

/// Midpoint-rule proxy for the integrability of `a^{-2/(p-2)}`.
///
/// For `epsilon > 0` the integral runs over the truncated thin domain under
/// the scaled measure `dx dy / epsilon`; for the limit problem it runs over
/// the interval with measure `g dx` and the trace weight.
pub fn weight_tail_proxy(cfg: &ProblemConfig) -> TailProxy {
    let q = 2.0 / (cfg.p - 2.0);
    let nx = 4000;
    let nz = 16;
    let h = 2.0 * cfg.x_max / nx as f64;
    let mut total = 0.0;
    let mut shell = 0.0;
    for i in 0..nx {
        let x = -cfg.x_max + (i as f64 + 0.5) * h;
        let g = cfg.profile.eval(x);
        let column = if cfg.is_limit() {
            g * cfg.weight.trace(x).powf(-q)
        } else {
            let height = cfg.epsilon * g;
            let mut acc = 0.0;
            for j in 0..nz {
                let y = (j as f64 + 0.5) / nz as f64 * height;
                acc += cfg.weight.eval(x, y).powf(-q);
            }
            acc * g / nz as f64
        };
        total += column * h;
        if x.abs() >= 0.9 * cfg.x_max {
            shell += column * h;
        }
    }
    TailProxy { total, shell }
}

/// Check every hypothesis on the problem data and return the complete list
/// of violations, or a validated handle when there are none.
pub fn validate_config(cfg: &ProblemConfig) -> Result<ValidatedProblem> {
    let mut out = Vec::new();
    let mut violate = |name: &str, location: String, value: f64| {
        out.push(HypothesisViolation {
            name: name.to_string(),
            location,
            value,
        })
    };

    if !(cfg.p > 2.0) || !cfg.p.is_finite() {
        violate("p > 2", "p".into(), cfg.p);
    }
    if cfg.strict_paper_hypotheses && !(cfg.p < LIMIT_DIMENSION as f64) {
        violate("p < n", format!("n = {LIMIT_DIMENSION}"), cfg.p);
    }
    if !(0.0..1.0).contains(&cfg.epsilon) {
        violate("0 <= epsilon < 1", "epsilon".into(), cfg.epsilon);
    }
    if !(cfg.x_max > 0.0) || !cfg.x_max.is_finite() {
        violate("x_max > 0", "x_max".into(), cfg.x_max);
    }
    if cfg.nx < 2 {
        violate("nx >= 2", "nx".into(), cfg.nx as f64);
    }
    if !cfg.is_limit() && cfg.nz < 2 {
        violate("nz >= 2", "nz".into(), cfg.nz as f64);
    }
    if !(cfg.dt > 0.0) {
        violate("dt > 0", "dt".into(), cfg.dt);
    }
    if !(cfg.newton_tol > 0.0) {
        violate("newton_tol > 0", "newton_tol".into(), cfg.newton_tol);
    }
    if !(cfg.mu >= 0.0) {
        violate("mu >= 0", "mu".into(), cfg.mu);
    }

    let profile = &cfg.profile;
    if !(profile.alpha1 > 0.0) {
        violate("alpha1 > 0", "alpha1".into(), profile.alpha1);
    }
    let x_max = if cfg.x_max > 0.0 { cfg.x_max } else { 1.0 };
    for k in 0..PROFILE_SAMPLES {
        let x = -x_max + 2.0 * x_max * k as f64 / (PROFILE_SAMPLES - 1) as f64;
        let g = profile.eval(x);
        if !(g >= profile.alpha1 && g <= profile.alpha2) {
            violate("alpha1 <= g <= alpha2", format!("x = {x}"), g);
            break;
        }
    }

    let height = if cfg.is_limit() {
        0.0
    } else {
        cfg.epsilon.clamp(0.0, 1.0) * profile.alpha2
    };
    'weight: for i in 0..WEIGHT_SAMPLES_X {
        let x = -x_max + 2.0 * x_max * i as f64 / (WEIGHT_SAMPLES_X - 1) as f64;
        for j in 0..WEIGHT_SAMPLES_Y {
            let y = height * j as f64 / (WEIGHT_SAMPLES_Y - 1) as f64;
            let a = cfg.weight.eval(x, y);
            if !(a >= 1.0) {
                violate("a >= 1", format!("(x, y) = ({x}, {y})"), a);
                break 'weight;
            }
        }
    }

    if cfg.p > 2.0 && cfg.x_max > 0.0 {
        let tail = weight_tail_proxy(cfg);
        if !tail.total.is_finite() || !(tail.shell <= cfg.tail_tol) {
            violate(
                "a^(-2/(p-2)) integrable (tail below tail_tol)",
                format!("0.9 x_max <= |x| <= x_max, tail_tol = {}", cfg.tail_tol),
                tail.shell,
            );
        }
    }

    let f = &cfg.nonlinearity;
    let f0 = f.eval(0.0);
    if f0 != 0.0 {
        violate("f(0) = 0", "s = 0".into(), f0);
    }
    if !(f.lipschitz > 0.0) {
        violate("L > 0", "lipschitz".into(), f.lipschitz);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
        for _ in 0..LIPSCHITZ_PAIRS {
            let s: f64 = rng.gen_range(-LIPSCHITZ_RANGE..LIPSCHITZ_RANGE);
            let t: f64 = rng.gen_range(-LIPSCHITZ_RANGE..LIPSCHITZ_RANGE);
            let lhs = (f.eval(s) - f.eval(t)).abs();
            let rhs = f.lipschitz * (s - t).abs();
            if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
                violate(
                    "|f(s) - f(t)| <= L |s - t|",
                    format!("(s, t) = ({s}, {t})"),
                    lhs / (s - t).abs(),
                );
                break;
            }
        }
    }

    if out.is_empty() {
        Ok(ValidatedProblem(cfg.clone()))
    } else {
        Err(Error::Hypotheses(out))
    }
}

pub const BUILTIN_PROBLEMS: [&str; 3] = ["flat", "bump", "paper-generic"];

/// Ready-to-run configurations from the builtin registry.
pub fn builtin_problem(name: &str) -> Result<ProblemConfig> {
    let base = ProblemConfig {
        name: name.to_string(),
        ..ProblemConfig::default()
    };
    match name {
        "flat" => Ok(base),
        "bump" => Ok(ProblemConfig {
            profile: ProfileG::bump(1.0, 0.5, 1.0),
            ..base
        }),
        "paper-generic" => Ok(ProblemConfig {
            profile: ProfileG::bump(1.0, 0.25, 2.0),
            nonlinearity: NonlinearityF::new(NonlinearityRule::Sin, 1.0),
            ..base
        }),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(err: Error) -> Vec<String> {
        match err {
            Error::Hypotheses(v) => v.into_iter().map(|h| h.name).collect(),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn sin_nonlinearity_with_radial_weight_is_valid() {
        let cfg = ProblemConfig {
            nonlinearity: NonlinearityF::new(NonlinearityRule::Sin, 1.0),
            ..ProblemConfig::default()
        };
        assert!(validate_config(&cfg).is_ok());
    }

    #[test]
    fn weight_below_one_is_rejected() {
        let cfg = ProblemConfig {
            weight: WeightA::constant(0.5),
            tail_tol: f64::INFINITY,
            ..ProblemConfig::default()
        };
        assert!(names(validate_config(&cfg).unwrap_err()).contains(&"a >= 1".to_string()));
    }

    #[test]
    fn p_equal_two_is_rejected() {
        let cfg = ProblemConfig {
            p: 2.0,
            ..ProblemConfig::default()
        };
        assert_eq!(names(validate_config(&cfg).unwrap_err()), vec!["p > 2"]);
    }

    #[test]
    fn all_violations_are_reported_together() {
        let cfg = ProblemConfig {
            p: 1.5,
            epsilon: 1.5,
            weight: WeightA::constant(0.5),
            ..ProblemConfig::default()
        };
        let n = names(validate_config(&cfg).unwrap_err());
        assert!(n.contains(&"p > 2".to_string()));
        assert!(n.contains(&"0 <= epsilon < 1".to_string()));
        assert!(n.contains(&"a >= 1".to_string()));
    }

    #[test]
    fn strict_mode_refuses_one_dimensional_limit() {
        let cfg = ProblemConfig {
            strict_paper_hypotheses: true,
            ..ProblemConfig::default()
        };
        assert_eq!(names(validate_config(&cfg).unwrap_err()), vec!["p < n"]);
    }

    #[test]
    fn understated_lipschitz_constant_is_caught() {
        let mut cfg = ProblemConfig::default();
        cfg.nonlinearity = NonlinearityF {
            rule: NonlinearityRule::Tanh,
            amplitude: 3.0,
            lipschitz: 1.0,
        };
        assert_eq!(
            names(validate_config(&cfg).unwrap_err()),
            vec!["|f(s) - f(t)| <= L |s - t|"]
        );
    }

    #[test]
    fn profile_outside_declared_bounds_is_caught() {
        let mut cfg = ProblemConfig::default();
        cfg.profile.alpha2 = 0.9;
        assert_eq!(
            names(validate_config(&cfg).unwrap_err()),
            vec!["alpha1 <= g <= alpha2"]
        );
    }

    #[test]
    fn constant_weight_fails_tail_check_by_default() {
        let cfg = ProblemConfig {
            weight: WeightA::constant(1.0),
            ..ProblemConfig::default()
        };
        assert_eq!(names(validate_config(&cfg).unwrap_err()).len(), 1);
    }

    #[test]
    fn builtin_registry() {
        let flat = builtin_problem("flat").unwrap();
        assert_eq!((flat.profile.alpha1, flat.profile.alpha2), (1.0, 1.0));
        let bump = builtin_problem("bump").unwrap();
        assert_eq!((bump.profile.alpha1, bump.profile.alpha2), (1.0, 1.5));
        assert!(matches!(
            builtin_problem("nonexistent"),
            Err(Error::UnknownProblem(_))
        ));
        for name in BUILTIN_PROBLEMS {
            let cfg = builtin_problem(name).unwrap();
            assert!(validate_config(&cfg).is_ok(), "{name}");
            assert!(
                validate_config(&cfg.with_epsilon(0.0)).is_ok(),
                "{name} limit"
            );
        }
    }

    #[test]
    fn validation_is_idempotent() {
        let cfg = builtin_problem("bump").unwrap();
        let a = validate_config(&cfg).unwrap();
        let b = validate_config(a.config()).unwrap();
        assert_eq!(a, b);
        let bad = ProblemConfig { p: 2.0, ..cfg };
        let e1 = format!("{}", validate_config(&bad).unwrap_err());
        let e2 = format!("{}", validate_config(&bad).unwrap_err());
        assert_eq!(e1, e2);
    }

    #[test]
    fn tail_proxy_decreases_with_truncation() {
        for name in BUILTIN_PROBLEMS {
            for eps in [0.0, 0.1] {
                let mut prev = f64::INFINITY;
                for x_max in [2.0, 4.0, 8.0, 16.0] {
                    let cfg = ProblemConfig {
                        x_max,
                        ..builtin_problem(name).unwrap().with_epsilon(eps)
                    };
                    let tail = weight_tail_proxy(&cfg);
                    assert!(tail.total.is_finite());
                    assert!(tail.shell < prev, "{name} eps={eps} x_max={x_max}");
                    prev = tail.shell;
                }
            }
        }
    }

    #[test]
    fn text_format_roundtrip_and_comments() {
        let cfg = builtin_problem("paper-generic").unwrap();
        let parsed = ProblemConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(parsed, cfg);

        let text =
            "# comment\nname = x  # trailing\np = 3.5\nprofile = bump\nprofile.amplitude = 0.5\n";
        let c = ProblemConfig::from_text(text).unwrap();
        assert_eq!(c.p, 3.5);
        assert_eq!(c.profile.alpha2, 1.5);
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        for text in ["p 3", "p = three", "bogus = 1", "weight = cubic"] {
            assert!(matches!(
                ProblemConfig::from_text(text),
                Err(Error::ConfigParse(_))
            ));
        }
    }
}
