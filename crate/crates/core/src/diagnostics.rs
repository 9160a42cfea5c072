//! Evidence extracted from grid fields: viscosity and Pucci checks on
//! fitted jets, boundary normal derivatives and their constancy, the
//! boundary form of the equation, moving-plane comparisons and P-functions.
//!
//! Everything here is read-only and deterministic; parallel loops collect
//! in node order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::GridField;
use crate::geometry::{BoundarySample, DomainSpec, GeometryError, Hyperplane, NodeTag, Vec2};
use crate::operator::{default_grad_floor, f_lower, f_upper, pucci, Exponent, Jet, OperatorError, PParams, SymMatrix};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("score undefined: {0}")]
    UndefinedScore(String),
    #[error("unsupported P-function variant: {0}")]
    Variant(String),
    #[error("invalid diagnostics input: {0}")]
    Input(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Least-squares quadratic fit on the nodes of a discrete disk.
#[derive(Debug, Clone)]
pub struct JetFitter {
    offsets: Vec<(isize, isize)>,
    /// Rows of the pseudo-inverse, one per offset, in the monomial basis
    /// `1, x, y, x²/2, xy, y²/2` of grid units.
    pinv: Vec<[f64; 6]>,
}

impl JetFitter {
    pub fn new(radius_nodes: usize) -> Self {
        let r = radius_nodes as isize;
        let mut offsets = Vec::new();
        for dj in -r..=r {
            for di in -r..=r {
                if di * di + dj * dj <= r * r {
                    offsets.push((di, dj));
                }
            }
        }
        let basis = |(di, dj): (isize, isize)| {
            let (x, y) = (di as f64, dj as f64);
            [1.0, x, y, 0.5 * x * x, x * y, 0.5 * y * y]
        };
        let mut normal = [[0.0; 6]; 6];
        for &o in &offsets {
            let b = basis(o);
            for a in 0..6 {
                for c in 0..6 {
                    normal[a][c] += b[a] * b[c];
                }
            }
        }
        let inv = invert6(normal);
        let pinv = offsets
            .iter()
            .map(|&o| {
                let b = basis(o);
                let mut row = [0.0; 6];
                for (a, r) in row.iter_mut().enumerate() {
                    *r = (0..6).map(|c| inv[a][c] * b[c]).sum();
                }
                row
            })
            .collect();
        JetFitter { offsets, pinv }
    }

    pub fn radius_nodes(&self) -> usize {
        self.offsets.iter().map(|o| o.0.unsigned_abs()).max().unwrap_or(0)
    }

    /// Fitted `(value, jet)` at node `(i, j)`, or `None` when the patch leaves
    /// the grid or touches a node outside the domain.
    pub fn fit(&self, field: &GridField, i: usize, j: usize) -> Option<(f64, Jet)> {
        let r = self.radius_nodes();
        if !field.patch_inside(i, j, r) && !self.patch_ok(field, i, j) {
            return None;
        }
        let h = field.grid.h;
        let mut c = [0.0; 6];
        for (&(di, dj), row) in self.offsets.iter().zip(&self.pinv) {
            let v = field.at((i as isize + di) as usize, (j as isize + dj) as usize);
            for (ck, rk) in c.iter_mut().zip(row) {
                *ck += rk * v;
            }
        }
        let jet = Jet::new2([c[1] / h, c[2] / h], SymMatrix::new2(c[3] / (h * h), c[4] / (h * h), c[5] / (h * h)));
        Some((c[0], jet))
    }

    fn patch_ok(&self, field: &GridField, i: usize, j: usize) -> bool {
        let (nx, ny) = (field.grid.nx as isize, field.grid.ny as isize);
        self.offsets.iter().all(|&(di, dj)| {
            let (a, b) = (i as isize + di, j as isize + dj);
            a >= 0 && b >= 0 && a < nx && b < ny && field.tag(a as usize, b as usize).inside()
        })
    }

    fn patch(&self) -> &[(isize, isize)] {
        &self.offsets
    }
}

fn invert6(mut a: [[f64; 6]; 6]) -> [[f64; 6]; 6] {
    let mut inv = [[0.0; 6]; 6];
    for (k, row) in inv.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    for col in 0..6 {
        let piv = (col..6).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for c in 0..6 {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for r in 0..6 {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for c in 0..6 {
                    a[r][c] -= f * a[col][c];
                    inv[r][c] -= f * inv[col][c];
                }
            }
        }
    }
    inv
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscosityConfig {
    /// Pass threshold `τ` on violations.
    pub tau: f64,
    /// Gradients at or below this norm are treated as zero.
    pub grad_floor: f64,
    /// Hessian perturbations `δ`, in the same units as the Hessian.
    pub deltas: Vec<f64>,
    /// Slack allowed when deciding that a test function touches.
    pub contact_tol: f64,
    pub patch_radius_nodes: usize,
}

impl ViscosityConfig {
    /// `τ = 10h`, `δ ∈ {0, h, 4h}`, patch radius `3h`, contact slack `h³`.
    pub fn for_grid(h: f64) -> Self {
        ViscosityConfig {
            tau: 10.0 * h,
            grad_floor: default_grad_floor(h),
            deltas: vec![0.0, h, 4.0 * h],
            contact_tol: h * h * h,
            patch_radius_nodes: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeViolation {
    pub node: usize,
    pub point: Vec2,
    pub violation: f64,
    pub jet: Jet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscosityReport {
    pub tolerance: f64,
    /// Per node: worst `max(0, F_*)` over test functions touching from above.
    pub sub_violation: Vec<Option<f64>>,
    /// Per node: worst `max(0, -F^*)` over test functions touching from below.
    pub super_violation: Vec<Option<f64>>,
    pub worst_sub: Option<NodeViolation>,
    pub worst_super: Option<NodeViolation>,
    pub checked: usize,
    /// Interior nodes whose fitting patch left the grid or the domain.
    pub skipped: usize,
    /// Checked nodes where no probe touched.
    pub untouched: usize,
    pub violating_nodes: usize,
}

impl ViscosityReport {
    pub fn passes(&self) -> bool {
        self.violating_nodes == 0
    }

    pub fn max_violation(&self) -> f64 {
        let s = self.worst_sub.map_or(0.0, |v| v.violation);
        let t = self.worst_super.map_or(0.0, |v| v.violation);
        s.max(t)
    }
}

fn quadratic_at(jet: &Jet, d: Vec2) -> f64 {
    jet.q[0] * d.x + jet.q[1] * d.y + 0.5 * jet.x.quad_form(&[d.x, d.y])
}

/// Perturbed-jet viscosity test at every `Interior` node.
pub fn viscosity_check(field: &GridField, params: &PParams, config: &ViscosityConfig) -> ViscosityReport {
    let fitter = JetFitter::new(config.patch_radius_nodes);
    let grid = field.grid;
    let h = grid.h;
    type NodeOutcome = Option<(Option<(f64, Jet)>, Option<(f64, Jet)>)>;
    let outcomes: Vec<(bool, NodeOutcome)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if field.tags[idx] != NodeTag::Interior {
                return (false, None);
            }
            let (i, j) = grid.coords(idx);
            let Some((_, jet)) = fitter.fit(field, i, j) else {
                return (true, None);
            };
            let u0 = field.values[idx];
            let probe = |x: &SymMatrix| {
                let tj = Jet { q: jet.q, x: *x };
                // φ - u over the patch, normalised so that it vanishes at the node
                fitter
                    .patch()
                    .iter()
                    .map(|&(di, dj)| {
                        let d = Vec2::new(di as f64 * h, dj as f64 * h);
                        let u = field.at((i as isize + di) as usize, (j as isize + dj) as usize);
                        quadratic_at(&tj, d) - (u - u0)
                    })
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            };
            let degenerate = jet.gradient_norm() <= config.grad_floor;
            let eval_jet = |x: SymMatrix| {
                if degenerate {
                    Jet { q: [0.0; 3], x }
                } else {
                    Jet { q: jet.q, x }
                }
            };
            let mut sub: Option<(f64, Jet)> = None;
            let mut sup: Option<(f64, Jet)> = None;
            for &delta in &config.deltas {
                let above = jet.x.shift(delta);
                if probe(&above).0 >= -config.contact_tol {
                    let tj = eval_jet(above);
                    let v = f_lower(params, &tj).max(0.0);
                    if sub.is_none_or(|(w, _)| v > w) {
                        sub = Some((v, tj));
                    }
                }
                let below = jet.x.shift(-delta);
                if probe(&below).1 <= config.contact_tol {
                    let tj = eval_jet(below);
                    let v = (-f_upper(params, &tj)).max(0.0);
                    if sup.is_none_or(|(w, _)| v > w) {
                        sup = Some((v, tj));
                    }
                }
            }
            (true, Some((sub, sup)))
        })
        .collect();

    let mut report = ViscosityReport {
        tolerance: config.tau,
        sub_violation: vec![None; grid.len()],
        super_violation: vec![None; grid.len()],
        worst_sub: None,
        worst_super: None,
        checked: 0,
        skipped: 0,
        untouched: 0,
        violating_nodes: 0,
    };
    let better = |cur: &Option<NodeViolation>, v: f64| cur.is_none_or(|c| v > c.violation);
    for (idx, (candidate, outcome)) in outcomes.into_iter().enumerate() {
        if !candidate {
            continue;
        }
        let Some((sub, sup)) = outcome else {
            report.skipped += 1;
            continue;
        };
        report.checked += 1;
        if sub.is_none() && sup.is_none() {
            report.untouched += 1;
        }
        let point = grid.node_at(idx);
        let mut violating = false;
        if let Some((v, jet)) = sub {
            report.sub_violation[idx] = Some(v);
            violating |= v > config.tau;
            if better(&report.worst_sub, v) {
                report.worst_sub = Some(NodeViolation { node: idx, point, violation: v, jet });
            }
        }
        if let Some((v, jet)) = sup {
            report.super_violation[idx] = Some(v);
            violating |= v > config.tau;
            if better(&report.worst_super, v) {
                report.worst_super = Some(NodeViolation { node: idx, point, violation: v, jet });
            }
        }
        if violating {
            report.violating_nodes += 1;
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PucciReport {
    pub k: f64,
    pub tau: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub checked: usize,
    pub violating_nodes: usize,
    /// Most negative `M⁺(X) + K`.
    pub worst_plus: f64,
    /// Most positive `M⁻(X) - K`.
    pub worst_minus: f64,
}

impl PucciReport {
    pub fn violation_fraction(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.violating_nodes as f64 / self.checked as f64
        }
    }
}

/// Checks `M⁺(X) + K ≥ -τ` and `M⁻(X) - K ≤ τ` on fitted Hessians with the
/// ellipticity constants of `params`.
pub fn pucci_check(field: &GridField, params: &PParams, k: f64, tau: f64) -> Result<PucciReport, DiagnosticsError> {
    let (lambda, big_lambda) = params.ellipticity();
    pucci(&SymMatrix::zero(2), lambda, big_lambda)?;
    let fitter = JetFitter::new(3);
    let grid = field.grid;
    let results: Vec<Option<(f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if field.tags[idx] != NodeTag::Interior {
                return None;
            }
            let (i, j) = grid.coords(idx);
            let (_, jet) = fitter.fit(field, i, j)?;
            let m = pucci(&jet.x, lambda, big_lambda).ok()?;
            Some((m.plus + k, m.minus - k))
        })
        .collect();
    let mut report = PucciReport {
        k,
        tau,
        lambda,
        big_lambda,
        checked: 0,
        violating_nodes: 0,
        worst_plus: f64::INFINITY,
        worst_minus: f64::NEG_INFINITY,
    };
    for (plus, minus) in results.into_iter().flatten() {
        report.checked += 1;
        report.worst_plus = report.worst_plus.min(plus);
        report.worst_minus = report.worst_minus.max(minus);
        if plus < -tau || minus > tau {
            report.violating_nodes += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannSample {
    pub point: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
    pub component: usize,
    pub s: f64,
    pub u_nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannTrace {
    pub spacing: f64,
    pub samples: Vec<NeumannSample>,
    /// Boundary points whose probes left the grid.
    pub dropped: usize,
}

impl NeumannTrace {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.u_nu).collect()
    }

    /// Mean `u_ν` per boundary component, in component order.
    pub fn component_means(&self) -> Vec<f64> {
        let count = self.samples.iter().map(|s| s.component + 1).max().unwrap_or(0);
        (0..count)
            .map(|c| {
                let v: Vec<f64> = self.samples.iter().filter(|s| s.component == c).map(|s| s.u_nu).collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            })
            .collect()
    }
}

/// Outward normal derivatives at `m` boundary samples from the second-order
/// one-sided difference `(-3u(y) + 4u(y - tν) - u(y - 2tν)) / (-2t)`, with
/// `u(y) = g(y)` and bilinear interpolation inside.
pub fn neumann_trace(
    field: &GridField,
    domain: &DomainSpec,
    m: usize,
    spacing: f64,
    g: &dyn Fn(Vec2) -> f64,
) -> Result<NeumannTrace, DiagnosticsError> {
    if !(spacing > 0.0) {
        return Err(DiagnosticsError::Input(format!("probe spacing must be positive, got {spacing}")));
    }
    let probes = domain.boundary_probe(m)?;
    let mut samples = Vec::with_capacity(probes.len());
    let mut dropped = 0;
    for b in probes {
        let y = b.point;
        let t = spacing;
        let (Some(u1), Some(u2)) = (field.bilinear(y - b.normal * t), field.bilinear(y - b.normal * (2.0 * t))) else {
            dropped += 1;
            continue;
        };
        let u_nu = (-3.0 * g(y) + 4.0 * u1 - u2) / (-2.0 * t);
        samples.push(NeumannSample { point: y, normal: b.normal, curvature: b.curvature, component: b.component, s: b.s, u_nu });
    }
    Ok(NeumannTrace { spacing, samples, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    /// `(max - min) / |mean|`.
    pub spread: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn constancy_score(values: &[f64]) -> Result<Score, DiagnosticsError> {
    if values.len() < 8 {
        return Err(DiagnosticsError::UndefinedScore(format!("need at least 8 values, got {}", values.len())));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(mean.abs() > 1e-12 * scale.max(1e-300)) || !mean.is_finite() {
        return Err(DiagnosticsError::UndefinedScore(format!("mean {mean:e} is too close to zero")));
    }
    Ok(Score { spread: (max - min) / mean.abs(), mean, min, max })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentitySample {
    pub point: Vec2,
    pub curvature: f64,
    pub u_nu: f64,
    pub u_nunu: f64,
    pub residual: f64,
}

/// Bicubic where its stencil is inside the domain, bilinear otherwise.
fn interp_smooth(field: &GridField, p: Vec2) -> Option<f64> {
    field.bicubic(p).or_else(|| field.bilinear(p))
}

/// Residual of `((p-1)/p) u_νν + ((n-1)/p) κ u_ν + 1` at `m` boundary
/// samples, with `u_ν` as in [`neumann_trace`] and `u_νν` from the
/// one-sided difference `(u(y) - 2u(y - tν) + u(y - 2tν)) / t²`. Probe values
/// are bicubic interpolants where the stencil allows.
pub fn boundary_identity(
    field: &GridField,
    domain: &DomainSpec,
    params: &PParams,
    m: usize,
    spacing: f64,
    g: &dyn Fn(Vec2) -> f64,
) -> Result<Vec<IdentitySample>, DiagnosticsError> {
    let probes = domain.boundary_probe(m)?;
    let lead = params.trace_coeff() + params.direction_coeff();
    let curv = (params.n as f64 - 1.0) * params.trace_coeff();
    let t = spacing;
    let mut out = Vec::with_capacity(probes.len());
    for b in probes {
        let y = b.point;
        let (Some(u1), Some(u2)) = (interp_smooth(field, y - b.normal * t), interp_smooth(field, y - b.normal * (2.0 * t))) else {
            continue;
        };
        let u0 = g(y);
        let u_nu = (-3.0 * u0 + 4.0 * u1 - u2) / (-2.0 * t);
        let u_nunu = (u0 - 2.0 * u1 + u2) / (t * t);
        let residual = lead * u_nunu + curv * b.curvature * u_nu + 1.0;
        out.push(IdentitySample { point: y, curvature: b.curvature, u_nu, u_nunu, residual });
    }
    Ok(out)
}

/// Second-order boundary quantities at one boundary sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerQuantities {
    pub u_nu: f64,
    pub u_nunu: f64,
    pub u_nutau: f64,
    pub u_tautau: f64,
    /// Second arclength derivative of the boundary data.
    pub u_ss: f64,
    /// `u_ττ - (u_ss + κ u_ν)`.
    pub tangential_defect: f64,
}

impl CornerQuantities {
    /// `u_ηη` for `η = a ν + b τ` (normalised internally).
    pub fn u_eta_eta(&self, a: f64, b: f64) -> f64 {
        let r2 = a * a + b * b;
        (a * a * self.u_nunu + 2.0 * a * b * self.u_nutau + b * b * self.u_tautau) / r2
    }
}

/// One-sided differences at spacing `t` along the inward normal of `at`,
/// combined with central tangential differences. The tangential second
/// derivative is extrapolated linearly from the rows at depths `t` and `2t`.
pub fn corner_quantities(
    field: &GridField,
    at: &BoundarySample,
    spacing: f64,
    g: &dyn Fn(Vec2) -> f64,
    domain: &DomainSpec,
) -> Result<CornerQuantities, DiagnosticsError> {
    let t = spacing;
    let (y, nu, tau) = (at.point, at.normal, at.tangent());
    let sample = |depth: f64, along: f64| {
        interp_smooth(field, y - nu * depth + tau * along)
            .ok_or_else(|| DiagnosticsError::Input(format!("probe near ({:.4}, {:.4}) leaves the grid", y.x, y.y)))
    };
    let u0 = g(y);
    let (u1, u2) = (sample(t, 0.0)?, sample(2.0 * t, 0.0)?);
    let u_nu = (-3.0 * u0 + 4.0 * u1 - u2) / (-2.0 * t);
    let u_nunu = (u0 - 2.0 * u1 + u2) / (t * t);
    let row = |depth: f64| -> Result<(f64, f64), DiagnosticsError> {
        let (plus, mid, minus) = (sample(depth, t)?, sample(depth, 0.0)?, sample(depth, -t)?);
        Ok(((plus - 2.0 * mid + minus) / (t * t), (plus - minus) / (2.0 * t)))
    };
    let (tt1, d1) = row(t)?;
    let (tt2, d2) = row(2.0 * t)?;
    let u_tautau = 2.0 * tt1 - tt2;
    // boundary data along the curve through y, one step either way
    let gp = g(domain.project(y + tau * t).point);
    let gm = g(domain.project(y - tau * t).point);
    let d0 = (gp - gm) / (2.0 * t);
    let u_ss = (gp - 2.0 * u0 + gm) / (t * t);
    // d/ds of the tangential derivative along the inward normal, sign-flipped
    let u_nutau = -(-3.0 * d0 + 4.0 * d1 - d2) / (2.0 * t);
    Ok(CornerQuantities {
        u_nu,
        u_nunu,
        u_nutau,
        u_tautau,
        u_ss,
        tangential_defect: u_tautau - (u_ss + at.curvature * u_nu),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneMinimum {
    pub direction: Vec2,
    pub offset: f64,
    /// `min w` over the reflected cap, `None` when the cap has no nodes.
    pub min_w: Option<f64>,
    pub argmin: Option<Vec2>,
    pub cap_nodes: usize,
}

/// For each offset `λ`, the minimum of `w(x) = u(x) - u(x^λ)` over nodes `x`
/// on the near side `e·x < λ` whose mirror image `x^λ` lies in the cap
/// `{e·x > λ} ∩ Ω`. The mirror value is interpolated bilinearly; mirror
/// points whose interpolation cell touches a node outside the domain are
/// left out.
pub fn moving_plane(field: &GridField, domain: &DomainSpec, direction: Vec2, offsets: &[f64]) -> Result<Vec<PlaneMinimum>, DiagnosticsError> {
    let grid = field.grid;
    let mut out = Vec::with_capacity(offsets.len());
    for &offset in offsets {
        let plane = Hyperplane::new(direction, offset)?;
        let mut best: Option<(f64, Vec2)> = None;
        let mut cap_nodes = 0;
        for idx in 0..grid.len() {
            if !field.tags[idx].inside() {
                continue;
            }
            let x = grid.node_at(idx);
            if plane.side(x) >= 0.0 {
                continue;
            }
            let xr = plane.reflect(x);
            if domain.sdf(xr) >= 0.0 {
                continue;
            }
            let Some((i, j, _, _)) = grid.locate(xr) else { continue };
            let cell_inside = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
                .iter()
                .all(|&(a, b)| a < grid.nx && b < grid.ny && field.tag(a, b).inside());
            if !cell_inside {
                continue;
            }
            let Some(ur) = field.bilinear(xr) else { continue };
            cap_nodes += 1;
            let w = field.values[idx] - ur;
            if best.is_none_or(|(b, _)| w < b) {
                best = Some((w, x));
            }
        }
        out.push(PlaneMinimum {
            direction: plane.direction(),
            offset,
            min_w: best.map(|b| b.0),
            argmin: best.map(|b| b.1),
            cap_nodes,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PVariant {
    /// `|∇u|² + (4/n) u`, constant for the ball solution at `p = 2`.
    Laplacian,
    /// `|∇u|² + 2u`.
    Infinity,
}

impl PVariant {
    pub fn for_params(params: &PParams) -> Result<Self, DiagnosticsError> {
        match params.p {
            Exponent::Infinity => Ok(PVariant::Infinity),
            Exponent::Finite(p) if p == 2.0 => Ok(PVariant::Laplacian),
            other => Err(DiagnosticsError::Variant(format!("no P-function for {other:?}"))),
        }
    }

    pub fn eval(self, n: usize, u: f64, grad_sq: f64) -> f64 {
        match self {
            PVariant::Laplacian => grad_sq + 4.0 / n as f64 * u,
            PVariant::Infinity => grad_sq + 2.0 * u,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PFunctionField {
    pub variant: PVariant,
    /// `None` on nodes without a centred 3x3 stencil inside the domain.
    pub values: Vec<Option<f64>>,
    pub score: Option<Score>,
}

/// Nodewise P-function from central differences.
pub fn p_function(field: &GridField, params: &PParams) -> Result<PFunctionField, DiagnosticsError> {
    let variant = PVariant::for_params(params)?;
    let grid = field.grid;
    let h = grid.h;
    let values: Vec<Option<f64>> = (0..grid.len())
        .map(|idx| {
            let (i, j) = grid.coords(idx);
            if !field.patch_inside(i, j, 1) {
                return None;
            }
            let ux = (field.at(i + 1, j) - field.at(i - 1, j)) / (2.0 * h);
            let uy = (field.at(i, j + 1) - field.at(i, j - 1)) / (2.0 * h);
            Some(variant.eval(params.n, field.values[idx], ux * ux + uy * uy))
        })
        .collect();
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let score = constancy_score(&present).ok();
    Ok(PFunctionField { variant, values, score })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryConfig {
    pub samples: usize,
    pub spacing: f64,
    pub identity_spacing: f64,
    pub plane_directions: Vec<Vec2>,
    /// Offsets as fractions of the inscribed radius.
    pub plane_offsets: Vec<f64>,
}

impl SymmetryConfig {
    pub fn for_grid(h: f64) -> Self {
        let diag = std::f64::consts::FRAC_1_SQRT_2;
        SymmetryConfig {
            samples: 256,
            spacing: 2.0 * h,
            identity_spacing: 3.0 * h,
            plane_directions: vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(diag, diag),
                Vec2::new(0.0, 1.0),
                Vec2::new(-diag, diag),
                Vec2::new(-1.0, 0.0),
                Vec2::new(-diag, -diag),
                Vec2::new(0.0, -1.0),
                Vec2::new(diag, -diag),
            ],
            plane_offsets: vec![0.0, 0.15, 0.3, 0.45, 0.6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub trace: NeumannTrace,
    pub score: Option<Score>,
    pub component_means: Vec<f64>,
    pub identity: Vec<IdentitySample>,
    pub identity_max: f64,
    pub planes: Vec<PlaneMinimum>,
}

impl SymmetryReport {
    pub fn min_plane_w(&self) -> Option<f64> {
        self.planes.iter().filter_map(|p| p.min_w).reduce(f64::min)
    }
}

/// Neumann constancy, boundary identity and moving-plane minima in one pass.
pub fn symmetry_report(
    field: &GridField,
    domain: &DomainSpec,
    params: &PParams,
    config: &SymmetryConfig,
    g: &dyn Fn(Vec2) -> f64,
) -> Result<SymmetryReport, DiagnosticsError> {
    let trace = neumann_trace(field, domain, config.samples, config.spacing, g)?;
    let score = constancy_score(&trace.values()).ok();
    let identity = boundary_identity(field, domain, params, config.samples, config.identity_spacing, g)?;
    let identity_max = identity.iter().map(|s| s.residual.abs()).fold(0.0, f64::max);
    let r = domain.inscribed_radius();
    let c = domain.center();
    let mut planes = Vec::new();
    for &e in &config.plane_directions {
        let e = e.normalized();
        let offsets: Vec<f64> = config.plane_offsets.iter().map(|f| e.dot(c) + f * r).collect();
        planes.extend(moving_plane(field, domain, e, &offsets)?);
    }
    Ok(SymmetryReport { component_means: trace.component_means(), trace, score, identity, identity_max, planes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify_grid, Grid};
    use crate::oracles::{InfinityAnnulus, RadialSolution};

    fn sampled(domain: &DomainSpec, h: f64, f: impl Fn(Vec2) -> f64) -> GridField {
        let grid = Grid::covering(domain, h, 4.0 * h).unwrap();
        let class = classify_grid(domain, &grid, 2.0 * h).unwrap();
        GridField::from_fn(grid, class.tags, f)
    }

    #[test]
    fn jet_fit_is_exact_on_quadratics() {
        let f = |p: Vec2| 0.3 + 0.7 * p.x - 0.2 * p.y + 1.5 * p.x * p.x - 0.4 * p.x * p.y + 0.25 * p.y * p.y;
        let u = sampled(&DomainSpec::disk(1.0), 0.05, f);
        let (i, j) = (u.grid.nx / 2 + 3, u.grid.ny / 2 - 2);
        let x = u.grid.node(i, j);
        let (c, jet) = JetFitter::new(3).fit(&u, i, j).unwrap();
        assert!((c - f(x)).abs() < 1e-12);
        assert!((jet.q[0] - (0.7 + 3.0 * x.x - 0.4 * x.y)).abs() < 1e-10);
        assert!((jet.q[1] - (-0.2 - 0.4 * x.x + 0.5 * x.y)).abs() < 1e-10);
        assert!((jet.x.get(0, 0) - 3.0).abs() < 1e-8);
        assert!((jet.x.get(0, 1) + 0.4).abs() < 1e-8);
        assert!((jet.x.get(1, 1) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn radial_oracle_passes_viscosity_check() {
        let h = 1.0 / 64.0;
        let v = RadialSolution::new(3.0, 2, 1.0).unwrap();
        let u = sampled(&DomainSpec::disk(1.0), h, v.field(Vec2::default()));
        let report = viscosity_check(&u, &PParams::new(3.0, 2).unwrap(), &ViscosityConfig::for_grid(h));
        assert!(report.checked > 1000);
        assert_eq!(report.violating_nodes, 0, "{:?} {:?}", report.worst_sub, report.worst_super);
    }

    #[test]
    fn annulus_field_separates_infinity_from_two() {
        let h = 1.0 / 64.0;
        let ann = InfinityAnnulus::new(1.0, 2.0).unwrap();
        let domain = DomainSpec::annulus(1.0, 2.0);
        let u = sampled(&domain, h, ann.field(Vec2::default()));
        let cfg = ViscosityConfig::for_grid(h);
        let inf = viscosity_check(&u, &PParams::infinity(2).unwrap(), &cfg);
        assert_eq!(inf.violating_nodes, 0, "{:?} {:?}", inf.worst_sub, inf.worst_super);
        // probes touch on the critical circle too
        let r0 = ann.critical_radius();
        let near = (0..u.grid.len())
            .filter(|&k| inf.sub_violation[k].is_some() && ((u.grid.node_at(k).norm() - r0).abs() < h))
            .count();
        assert!(near > 0);
        let two = viscosity_check(&u, &PParams::new(2.0, 2).unwrap(), &cfg);
        assert!(two.max_violation() >= 0.2, "{}", two.max_violation());
    }

    #[test]
    fn pucci_check_examples() {
        let h = 1.0 / 32.0;
        let v = RadialSolution::new(4.0, 2, 1.0).unwrap();
        let u = sampled(&DomainSpec::disk(1.0), h, v.field(Vec2::default()));
        let params = PParams::new(4.0, 2).unwrap();
        let ok = pucci_check(&u, &params, 1.0, 10.0 * h).unwrap();
        assert!(ok.checked > 100);
        assert_eq!(ok.violating_nodes, 0);
        let bad = pucci_check(&u, &params, 0.0, 10.0 * h).unwrap();
        assert_eq!(bad.violating_nodes, bad.checked);
    }

    #[test]
    fn neumann_trace_examples() {
        let h = 1.0 / 64.0;
        let disk = DomainSpec::disk(1.0);
        let v = RadialSolution::new(2.0, 2, 1.0).unwrap();
        let u = sampled(&disk, h, v.field(Vec2::default()));
        let tr = neumann_trace(&u, &disk, 64, 2.0 * h, &|_| 0.0).unwrap();
        assert_eq!(tr.samples.len(), 64);
        assert!(tr.samples.iter().all(|s| (s.u_nu + 1.0).abs() < 5e-3));

        let lin = sampled(&disk, h, |p| p.x);
        let tr = neumann_trace(&lin, &disk, 64, 2.0 * h, &|p| p.x).unwrap();
        assert!(tr.samples.iter().all(|s| (s.u_nu - s.normal.x).abs() < 1e-10));

        let ann = InfinityAnnulus::new(1.0, 2.0).unwrap();
        let domain = DomainSpec::annulus(1.0, 2.0);
        let u = sampled(&domain, h, ann.field(Vec2::default()));
        let tr = neumann_trace(&u, &domain, 96, 2.0 * h, &|_| 0.0).unwrap();
        let means = tr.component_means();
        assert_eq!(means.len(), 2);
        for m in means {
            assert!((m.abs() - 0.5).abs() < 5e-3, "{m}");
        }
    }

    #[test]
    fn constancy_score_examples() {
        let s = constancy_score(&[2.0; 8]).unwrap();
        assert_eq!(s.spread, 0.0);
        assert!(constancy_score(&[1.0; 7]).is_err());
        assert!(constancy_score(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]).is_err());
    }

    #[test]
    fn identity_vanishes_on_radial_oracle() {
        let h = 1.0 / 64.0;
        let disk = DomainSpec::disk(1.0);
        for p in [1.5, 2.0, 4.0] {
            let v = RadialSolution::new(p, 2, 1.0).unwrap();
            let u = sampled(&disk, h, v.field(Vec2::default()));
            let res = boundary_identity(&u, &disk, &PParams::new(p, 2).unwrap(), 32, 3.0 * h, &|_| 0.0).unwrap();
            assert!(res.iter().all(|s| s.residual.abs() < 1e-3), "p={p}");
        }
    }

    #[test]
    fn corner_quantities_on_radial_oracle() {
        let h = 1.0 / 128.0;
        let disk = DomainSpec::disk(1.0);
        let v = RadialSolution::new(3.0, 2, 1.0).unwrap();
        let u = sampled(&disk, h, v.field(Vec2::default()));
        let at = disk.boundary_probe(16).unwrap()[3];
        let cq = corner_quantities(&u, &at, 3.0 * h, &|_| 0.0, &disk).unwrap();
        assert!(cq.u_nutau.abs() < 1e-3);
        assert!((cq.u_tautau + 1.0).abs() < 1e-3);
        assert!(cq.tangential_defect.abs() < 1e-3);
        assert_eq!(cq.u_eta_eta(1.0, 0.0), cq.u_nunu);
        assert!((cq.u_eta_eta(0.0, 1.0) - cq.u_tautau).abs() < 1e-15);
    }

    #[test]
    fn moving_plane_on_symmetric_field() {
        let h = 1.0 / 64.0;
        let disk = DomainSpec::disk(1.0);
        let v = RadialSolution::new(2.0, 2, 1.0).unwrap();
        let u = sampled(&disk, h, v.field(Vec2::default()));
        let mins = moving_plane(&u, &disk, Vec2::new(1.0, 1.0), &[0.0, 0.3]).unwrap();
        assert!(mins[0].min_w.unwrap().abs() < 1e-12);
        assert!(mins[1].min_w.unwrap() >= -1e-6);
        assert!(mins[1].cap_nodes > 0);
        let empty = moving_plane(&u, &disk, Vec2::new(1.0, 0.0), &[5.0]).unwrap();
        assert!(empty[0].min_w.is_none());
    }

    #[test]
    fn p_function_is_constant_on_oracles() {
        let h = 1.0 / 64.0;
        let disk = DomainSpec::disk(1.0);
        let v = RadialSolution::new(2.0, 2, 1.0).unwrap();
        let u = sampled(&disk, h, v.field(Vec2::default()));
        let pf = p_function(&u, &PParams::new(2.0, 2).unwrap()).unwrap();
        let s = pf.score.unwrap();
        assert!((s.mean - 1.0).abs() < 1e-10 && s.spread < 1e-10);
        assert!(p_function(&u, &PParams::new(3.0, 2).unwrap()).is_err());

        let ann = InfinityAnnulus::new(1.0, 2.0).unwrap();
        assert_eq!(PVariant::Infinity.eval(2, ann.value(1.3).unwrap(), ann.derivative(1.3).unwrap().powi(2)), 0.25);
    }
}
