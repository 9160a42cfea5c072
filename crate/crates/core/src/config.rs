//! Run configuration: one flat JSON object with dotted keys.
//!
//! ```json
//! {
//!   "domain.kind": "ellipse",
//!   "domain.semi_x": 1.5,
//!   "domain.semi_y": 1.0,
//!   "problem.p": 3.0,
//!   "grid.h": 0.0078125,
//!   "diagnostics.ball_threshold": 0.02
//! }
//! ```
//!
//! Unknown keys are rejected. Solver keys that are absent fall back to
//! [`SolverConfig::for_domain`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DomainSpec, Vec2};
use crate::solver::{Dirichlet, ProblemSpec, Scheme, SolverConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
}

fn skip<T>(v: &Option<T>) -> bool {
    v.is_none()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "domain.kind")]
    pub domain_kind: String,
    #[serde(rename = "domain.center_x", default, skip_serializing_if = "skip")]
    pub center_x: Option<f64>,
    #[serde(rename = "domain.center_y", default, skip_serializing_if = "skip")]
    pub center_y: Option<f64>,
    #[serde(rename = "domain.radius", default, skip_serializing_if = "skip")]
    pub radius: Option<f64>,
    #[serde(rename = "domain.inner_radius", default, skip_serializing_if = "skip")]
    pub inner_radius: Option<f64>,
    #[serde(rename = "domain.outer_radius", default, skip_serializing_if = "skip")]
    pub outer_radius: Option<f64>,
    #[serde(rename = "domain.semi_x", default, skip_serializing_if = "skip")]
    pub semi_x: Option<f64>,
    #[serde(rename = "domain.semi_y", default, skip_serializing_if = "skip")]
    pub semi_y: Option<f64>,
    #[serde(rename = "domain.half_length", default, skip_serializing_if = "skip")]
    pub half_length: Option<f64>,

    #[serde(rename = "problem.p")]
    pub p: f64,
    #[serde(rename = "problem.n", default, skip_serializing_if = "skip")]
    pub n: Option<usize>,
    #[serde(rename = "problem.rhs", default, skip_serializing_if = "skip")]
    pub rhs: Option<f64>,
    #[serde(rename = "problem.dirichlet.constant", default, skip_serializing_if = "skip")]
    pub dirichlet_constant: Option<f64>,
    #[serde(rename = "problem.dirichlet.cos", default, skip_serializing_if = "skip")]
    pub dirichlet_cos: Option<Vec<f64>>,
    #[serde(rename = "problem.dirichlet.sin", default, skip_serializing_if = "skip")]
    pub dirichlet_sin: Option<Vec<f64>>,
    #[serde(rename = "problem.neumann_target", default, skip_serializing_if = "skip")]
    pub neumann_target: Option<f64>,

    #[serde(rename = "grid.h")]
    pub h: f64,

    #[serde(rename = "solver.epsilon", default, skip_serializing_if = "skip")]
    pub epsilon: Option<f64>,
    #[serde(rename = "solver.directions", default, skip_serializing_if = "skip")]
    pub directions: Option<usize>,
    #[serde(rename = "solver.damping", default, skip_serializing_if = "skip")]
    pub damping: Option<f64>,
    #[serde(rename = "solver.tolerance", default, skip_serializing_if = "skip")]
    pub tolerance: Option<f64>,
    #[serde(rename = "solver.max_iterations", default, skip_serializing_if = "skip")]
    pub max_iterations: Option<usize>,
    #[serde(rename = "solver.scheme", default, skip_serializing_if = "skip")]
    pub scheme: Option<Scheme>,
    #[serde(rename = "solver.moment_correction", default, skip_serializing_if = "skip")]
    pub moment_correction: Option<bool>,
    #[serde(rename = "solver.policy_refresh", default, skip_serializing_if = "skip")]
    pub policy_refresh: Option<usize>,

    #[serde(rename = "diagnostics.symmetry", default, skip_serializing_if = "skip")]
    pub diag_symmetry: Option<bool>,
    #[serde(rename = "diagnostics.viscosity", default, skip_serializing_if = "skip")]
    pub diag_viscosity: Option<bool>,
    #[serde(rename = "diagnostics.pucci", default, skip_serializing_if = "skip")]
    pub diag_pucci: Option<bool>,
    #[serde(rename = "diagnostics.p_function", default, skip_serializing_if = "skip")]
    pub diag_p_function: Option<bool>,
    #[serde(rename = "diagnostics.residual", default, skip_serializing_if = "skip")]
    pub diag_residual: Option<bool>,
    /// Assert the ball test: the Neumann constancy score must stay below this.
    #[serde(rename = "diagnostics.ball_threshold", default, skip_serializing_if = "skip")]
    pub ball_threshold: Option<f64>,

    #[serde(rename = "output.dir", default, skip_serializing_if = "skip")]
    pub output_dir: Option<String>,
}

/// Which diagnostics to run, with the thresholds that decide pass/fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub symmetry: bool,
    pub viscosity: bool,
    pub pucci: bool,
    pub p_function: bool,
    pub residual: bool,
    pub ball_threshold: Option<f64>,
}

impl Default for Selection {
    fn default() -> Self {
        Selection { symmetry: true, viscosity: false, pucci: true, p_function: false, residual: true, ball_threshold: None }
    }
}

impl Selection {
    pub const NAMES: [&'static str; 5] = ["symmetry", "viscosity", "pucci", "p-function", "residual"];

    /// Parses a comma-separated list of [`Selection::NAMES`].
    pub fn parse_list(list: &str) -> Result<Self, String> {
        let mut s = Selection { symmetry: false, viscosity: false, pucci: false, p_function: false, residual: false, ball_threshold: None };
        for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "symmetry" => s.symmetry = true,
                "viscosity" => s.viscosity = true,
                "pucci" => s.pucci = true,
                "p-function" => s.p_function = true,
                "residual" => s.residual = true,
                other => return Err(format!("unknown diagnostic {other:?}; valid: {}", Self::NAMES.join(", "))),
            }
        }
        Ok(s)
    }
}

/// 1-based line of the first occurrence of `"key"` in `text`, else 1.
fn line_of(text: &str, key: &str) -> usize {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map_or(1, |i| i + 1)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Invalid { line: e.line().max(1), msg: e.to_string() })?;
        cfg.check(text)?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Semantic checks; errors point at the offending key's line in `text`.
    fn check(&self, text: &str) -> Result<(), ConfigError> {
        let fail = |key: &str, msg: String| Err(ConfigError::Invalid { line: line_of(text, key), msg: format!("{key}: {msg}") });
        let allowed: &[&str] = match self.domain_kind.as_str() {
            "disk" => &["domain.radius"],
            "annulus" => &["domain.inner_radius", "domain.outer_radius"],
            "ellipse" => &["domain.semi_x", "domain.semi_y"],
            "stadium" => &["domain.half_length", "domain.radius"],
            other => return fail("domain.kind", format!("unknown kind {other:?}; valid: disk, annulus, ellipse, stadium")),
        };
        let shape = [
            ("domain.radius", self.radius),
            ("domain.inner_radius", self.inner_radius),
            ("domain.outer_radius", self.outer_radius),
            ("domain.semi_x", self.semi_x),
            ("domain.semi_y", self.semi_y),
            ("domain.half_length", self.half_length),
        ];
        if let Some((key, _)) = shape.iter().find(|(k, v)| v.is_some() && !allowed.contains(k)) {
            return fail(key, format!("not a parameter of a {}", self.domain_kind));
        }
        if let Some((key, _)) = shape.iter().find(|(k, v)| v.is_none() && allowed.contains(k)) {
            return fail("domain.kind", format!("a {} needs {key}", self.domain_kind));
        }
        if let Err(e) = self.domain_unchecked().validate() {
            return fail("domain.kind", e.to_string());
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return fail("problem.p", format!("the solver needs 1 < p < ∞, got {}", self.p));
        }
        if self.n.is_some_and(|n| n != 2) {
            return fail("problem.n", "only n = 2 is supported".into());
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return fail("grid.h", format!("must be positive, got {}", self.h));
        }
        let positive = [("solver.epsilon", self.epsilon), ("solver.tolerance", self.tolerance), ("diagnostics.ball_threshold", self.ball_threshold)];
        for (key, v) in positive {
            if v.is_some_and(|v| !(v.is_finite() && v > 0.0)) {
                return fail(key, "must be positive".into());
            }
        }
        if self.damping.is_some_and(|w| !(w > 0.0 && w <= 1.0)) {
            return fail("solver.damping", "must lie in (0, 1]".into());
        }
        if self.max_iterations == Some(0) {
            return fail("solver.max_iterations", "must be at least 1".into());
        }
        if self.policy_refresh == Some(0) {
            return fail("solver.policy_refresh", "must be at least 1".into());
        }
        let domain = self.domain_unchecked();
        let grid = crate::solver::grid_for(&domain, self.h, self.solver_config().epsilon);
        match grid {
            Ok(g) => {
                if let Err(e) = self.solver_config().validate(&g) {
                    let key = if self.directions.is_some() { "solver.directions" } else { "solver.epsilon" };
                    return fail(key, e.to_string());
                }
            }
            Err(e) => return fail("grid.h", e.to_string()),
        }
        Ok(())
    }

    fn domain_unchecked(&self) -> DomainSpec {
        let center = Vec2::new(self.center_x.unwrap_or(0.0), self.center_y.unwrap_or(0.0));
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        match self.domain_kind.as_str() {
            "disk" => DomainSpec::Disk { center, radius: v(self.radius) },
            "annulus" => DomainSpec::Annulus { center, inner_radius: v(self.inner_radius), outer_radius: v(self.outer_radius) },
            "ellipse" => DomainSpec::Ellipse { center, semi_x: v(self.semi_x), semi_y: v(self.semi_y) },
            _ => DomainSpec::Stadium { center, half_length: v(self.half_length), radius: v(self.radius) },
        }
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain_unchecked()
    }

    pub fn problem(&self) -> ProblemSpec {
        let fourier = self.dirichlet_cos.is_some() || self.dirichlet_sin.is_some();
        let dirichlet = match (self.dirichlet_constant, fourier) {
            (_, true) => Dirichlet::Fourier {
                constant: self.dirichlet_constant.unwrap_or(0.0),
                cos: self.dirichlet_cos.clone().unwrap_or_default(),
                sin: self.dirichlet_sin.clone().unwrap_or_default(),
            },
            (Some(value), false) if value != 0.0 => Dirichlet::Constant { value },
            _ => Dirichlet::Zero,
        };
        ProblemSpec { p: self.p, n: self.n.unwrap_or(2), rhs: self.rhs.unwrap_or(1.0), dirichlet, neumann_target: self.neumann_target }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut c = SolverConfig::for_domain(&self.domain_unchecked(), self.h, self.p);
        if let Some(eps) = self.epsilon {
            c = c.with_epsilon(eps);
        }
        if let Some(m) = self.directions {
            c.directions = m;
        }
        if let Some(w) = self.damping {
            c.damping = w;
        }
        if let Some(t) = self.tolerance {
            c.tolerance = t;
        }
        if let Some(k) = self.max_iterations {
            c.max_iterations = k;
        }
        if let Some(s) = self.scheme {
            c.scheme = s;
        }
        if let Some(b) = self.moment_correction {
            c.moment_correction = b;
        }
        if let Some(k) = self.policy_refresh {
            c.policy_refresh = k;
        }
        c
    }

    pub fn selection(&self) -> Selection {
        let d = Selection::default();
        Selection {
            symmetry: self.diag_symmetry.unwrap_or(d.symmetry),
            viscosity: self.diag_viscosity.unwrap_or(d.viscosity),
            pucci: self.diag_pucci.unwrap_or(d.pucci),
            p_function: self.diag_p_function.unwrap_or(d.p_function),
            residual: self.diag_residual.unwrap_or(d.residual),
            ball_threshold: self.ball_threshold,
        }
    }
}
