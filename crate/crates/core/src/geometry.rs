//! Analytic planar domains: signed distance, projection onto the boundary,
//! outward normals, curvature, boundary sampling, grid classification and
//! hyperplane reflections.
//!
//! Sign conventions: the signed distance is negative inside the domain, the
//! normal points out of the domain and curvature is positive on convex parts
//! of the boundary (so the inner circle of an annulus has negative curvature).

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid shape parameter: {0}")]
    Parameter(String),
    #[error("grid does not cover the domain: {0}")]
    Coverage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise rotation by a right angle.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// An analytic domain in the plane. Lengths are in grid units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { center: Vec2, radius: f64 },
    Annulus { center: Vec2, inner_radius: f64, outer_radius: f64 },
    /// Axis-aligned ellipse with semi-axes along x and y.
    Ellipse { center: Vec2, semi_x: f64, semi_y: f64 },
    /// Segment from `center - (half_length, 0)` to `center + (half_length, 0)`
    /// thickened by `radius`.
    Stadium { center: Vec2, half_length: f64, radius: f64 },
}

/// Closest boundary point together with the local boundary geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub point: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
    /// Connected component of the boundary (0 = outer, 1 = annulus inner circle).
    pub component: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
    /// Arclength, accumulated over components in sampling order.
    pub s: f64,
    pub component: usize,
}

impl BoundarySample {
    /// Unit tangent, counter-clockwise with respect to the outward normal.
    pub fn tangent(&self) -> Vec2 {
        self.normal.perp()
    }
}

const PROJECTION_TOL: f64 = 1e-12;
const PROJECTION_MAX_ITER: usize = 100;

impl DomainSpec {
    pub fn disk(radius: f64) -> Self {
        DomainSpec::Disk { center: Vec2::default(), radius }
    }

    pub fn annulus(inner_radius: f64, outer_radius: f64) -> Self {
        DomainSpec::Annulus { center: Vec2::default(), inner_radius, outer_radius }
    }

    pub fn ellipse(semi_x: f64, semi_y: f64) -> Self {
        DomainSpec::Ellipse { center: Vec2::default(), semi_x, semi_y }
    }

    pub fn stadium(half_length: f64, radius: f64) -> Self {
        DomainSpec::Stadium { center: Vec2::default(), half_length, radius }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DomainSpec::Disk { .. } => "disk",
            DomainSpec::Annulus { .. } => "annulus",
            DomainSpec::Ellipse { .. } => "ellipse",
            DomainSpec::Stadium { .. } => "stadium",
        }
    }

    pub fn center(&self) -> Vec2 {
        match *self {
            DomainSpec::Disk { center, .. }
            | DomainSpec::Annulus { center, .. }
            | DomainSpec::Ellipse { center, .. }
            | DomainSpec::Stadium { center, .. } => center,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(GeometryError::Parameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let c = self.center();
        if !(c.x.is_finite() && c.y.is_finite()) {
            return Err(GeometryError::Parameter("center must be finite".into()));
        }
        match *self {
            DomainSpec::Disk { radius, .. } => positive("radius", radius),
            DomainSpec::Annulus { inner_radius, outer_radius, .. } => {
                positive("inner_radius", inner_radius)?;
                positive("outer_radius", outer_radius)?;
                if inner_radius >= outer_radius {
                    return Err(GeometryError::Parameter(format!(
                        "annulus needs inner_radius < outer_radius, got {inner_radius} >= {outer_radius}"
                    )));
                }
                Ok(())
            }
            DomainSpec::Ellipse { semi_x, semi_y, .. } => {
                positive("semi_x", semi_x)?;
                positive("semi_y", semi_y)
            }
            DomainSpec::Stadium { half_length, radius, .. } => {
                positive("radius", radius)?;
                if half_length.is_finite() && half_length >= 0.0 {
                    Ok(())
                } else {
                    Err(GeometryError::Parameter(format!("half_length must be >= 0, got {half_length}")))
                }
            }
        }
    }

    /// Half extents of the axis-aligned bounding box about the center.
    pub fn half_extents(&self) -> Vec2 {
        match *self {
            DomainSpec::Disk { radius, .. } => Vec2::new(radius, radius),
            DomainSpec::Annulus { outer_radius, .. } => Vec2::new(outer_radius, outer_radius),
            DomainSpec::Ellipse { semi_x, semi_y, .. } => Vec2::new(semi_x, semi_y),
            DomainSpec::Stadium { half_length, radius, .. } => Vec2::new(half_length + radius, radius),
        }
    }

    /// Radius of the largest disk contained in the domain.
    pub fn inscribed_radius(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius, .. } => radius,
            DomainSpec::Annulus { inner_radius, outer_radius, .. } => 0.5 * (outer_radius - inner_radius),
            DomainSpec::Ellipse { semi_x, semi_y, .. } => semi_x.min(semi_y),
            DomainSpec::Stadium { radius, .. } => radius,
        }
    }

    pub fn component_count(&self) -> usize {
        match self {
            DomainSpec::Annulus { .. } => 2,
            _ => 1,
        }
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.sdf(x) < 0.0
    }

    /// Signed distance to the boundary.
    pub fn sdf(&self, x: Vec2) -> f64 {
        match *self {
            DomainSpec::Disk { center, radius } => (x - center).norm() - radius,
            DomainSpec::Annulus { center, inner_radius, outer_radius } => {
                let r = (x - center).norm();
                (r - outer_radius).max(inner_radius - r)
            }
            DomainSpec::Stadium { center, half_length, radius } => {
                let d = x - center;
                let sx = d.x.clamp(-half_length, half_length);
                Vec2::new(d.x - sx, d.y).norm() - radius
            }
            DomainSpec::Ellipse { center, semi_x, semi_y } => {
                let d = x - center;
                let (closest, _) = ellipse_closest(semi_x, semi_y, d);
                let dist = (d - closest).norm();
                let level = (d.x / semi_x).powi(2) + (d.y / semi_y).powi(2) - 1.0;
                if level < 0.0 {
                    -dist
                } else {
                    dist
                }
            }
        }
    }

    /// Nearest boundary point with its normal and curvature.
    pub fn project(&self, x: Vec2) -> BoundaryPoint {
        match *self {
            DomainSpec::Disk { center, radius } => {
                let dir = radial_direction(x - center);
                BoundaryPoint { point: center + dir * radius, normal: dir, curvature: 1.0 / radius, component: 0 }
            }
            DomainSpec::Annulus { center, inner_radius, outer_radius } => {
                let d = x - center;
                let dir = radial_direction(d);
                if d.norm() >= 0.5 * (inner_radius + outer_radius) {
                    BoundaryPoint {
                        point: center + dir * outer_radius,
                        normal: dir,
                        curvature: 1.0 / outer_radius,
                        component: 0,
                    }
                } else {
                    BoundaryPoint {
                        point: center + dir * inner_radius,
                        normal: -dir,
                        curvature: -1.0 / inner_radius,
                        component: 1,
                    }
                }
            }
            DomainSpec::Stadium { center, half_length, radius } => {
                let d = x - center;
                let spine = Vec2::new(d.x.clamp(-half_length, half_length), 0.0);
                let offset = d - spine;
                let dir = if offset.norm() > 0.0 {
                    offset.normalized()
                } else if d.y >= 0.0 {
                    Vec2::new(0.0, 1.0)
                } else {
                    Vec2::new(0.0, -1.0)
                };
                let on_cap = d.x.abs() > half_length;
                BoundaryPoint {
                    point: center + spine + dir * radius,
                    normal: dir,
                    curvature: if on_cap { 1.0 / radius } else { 0.0 },
                    component: 0,
                }
            }
            DomainSpec::Ellipse { center, semi_x, semi_y } => {
                let (closest, _) = ellipse_closest(semi_x, semi_y, x - center);
                let (normal, curvature) = ellipse_frame(semi_x, semi_y, closest);
                BoundaryPoint { point: center + closest, normal, curvature, component: 0 }
            }
        }
    }

    /// Total boundary length, summed over components.
    pub fn perimeter(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius, .. } => 2.0 * PI * radius,
            DomainSpec::Annulus { inner_radius, outer_radius, .. } => 2.0 * PI * (inner_radius + outer_radius),
            DomainSpec::Stadium { half_length, radius, .. } => 4.0 * half_length + 2.0 * PI * radius,
            DomainSpec::Ellipse { semi_x, semi_y, .. } => EllipseArc::new(semi_x, semi_y).total,
        }
    }

    /// `m` boundary samples spaced uniformly in arclength on every component.
    pub fn boundary_probe(&self, m: usize) -> Result<Vec<BoundarySample>, GeometryError> {
        self.validate()?;
        if m < 4 {
            return Err(GeometryError::Parameter(format!("need at least 4 boundary samples, got {m}")));
        }
        let samples = match *self {
            DomainSpec::Disk { center, radius } => circle_samples(center, radius, m, false, 0.0, 0),
            DomainSpec::Annulus { center, inner_radius, outer_radius } => {
                let m_outer = ((m as f64) * outer_radius / (inner_radius + outer_radius)).round() as usize;
                let m_outer = m_outer.clamp(1, m - 1);
                let mut out = circle_samples(center, outer_radius, m_outer, false, 0.0, 0);
                out.extend(circle_samples(center, inner_radius, m - m_outer, true, 2.0 * PI * outer_radius, 1));
                out
            }
            DomainSpec::Stadium { center, half_length, radius } => (0..m)
                .map(|k| {
                    let s = self.perimeter() * k as f64 / m as f64;
                    stadium_at(center, half_length, radius, s)
                })
                .collect(),
            DomainSpec::Ellipse { center, semi_x, semi_y } => {
                let arc = EllipseArc::new(semi_x, semi_y);
                (0..m)
                    .map(|k| {
                        let s = arc.total * k as f64 / m as f64;
                        let t = arc.parameter_at(s);
                        let local = Vec2::new(semi_x * t.cos(), semi_y * t.sin());
                        let (normal, curvature) = ellipse_frame(semi_x, semi_y, local);
                        BoundarySample { point: center + local, normal, curvature, s, component: 0 }
                    })
                    .collect()
            }
        };
        Ok(samples)
    }
}

fn radial_direction(d: Vec2) -> Vec2 {
    let r = d.norm();
    if r > 0.0 {
        d * (1.0 / r)
    } else {
        Vec2::new(1.0, 0.0)
    }
}

fn circle_samples(center: Vec2, radius: f64, m: usize, inner: bool, s0: f64, component: usize) -> Vec<BoundarySample> {
    (0..m)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / m as f64;
            let dir = unit_at_angle(theta);
            BoundarySample {
                point: center + dir * radius,
                normal: if inner { -dir } else { dir },
                curvature: if inner { -1.0 / radius } else { 1.0 / radius },
                s: s0 + radius * theta,
                component,
            }
        })
        .collect()
}

/// Unit vector at angle `theta`, exact on the coordinate axes.
pub fn unit_at_angle(theta: f64) -> Vec2 {
    let quarter = theta / (0.5 * PI);
    if quarter.fract() == 0.0 {
        match (quarter as i64).rem_euclid(4) {
            0 => Vec2::new(1.0, 0.0),
            1 => Vec2::new(0.0, 1.0),
            2 => Vec2::new(-1.0, 0.0),
            _ => Vec2::new(0.0, -1.0),
        }
    } else {
        Vec2::new(theta.cos(), theta.sin())
    }
}

/// Stadium boundary traversed counter-clockwise from its rightmost point.
fn stadium_at(center: Vec2, half_length: f64, radius: f64, s: f64) -> BoundarySample {
    let quarter = 0.5 * PI * radius;
    let flat = 2.0 * half_length;
    let cap = |c: Vec2, angle: f64| {
        let dir = unit_at_angle(angle);
        (c + dir * radius, dir, 1.0 / radius)
    };
    let right = center + Vec2::new(half_length, 0.0);
    let left = center - Vec2::new(half_length, 0.0);
    let (point, normal, curvature) = if s < quarter {
        cap(right, s / radius)
    } else if s < quarter + flat {
        let x = half_length - (s - quarter);
        (center + Vec2::new(x, radius), Vec2::new(0.0, 1.0), 0.0)
    } else if s < 3.0 * quarter + flat {
        cap(left, 0.5 * PI + (s - quarter - flat) / radius)
    } else if s < 3.0 * quarter + 2.0 * flat {
        let x = -half_length + (s - 3.0 * quarter - flat);
        (center + Vec2::new(x, -radius), Vec2::new(0.0, -1.0), 0.0)
    } else {
        cap(right, 1.5 * PI + (s - 3.0 * quarter - 2.0 * flat) / radius)
    };
    BoundarySample { point, normal, curvature, s, component: 0 }
}

/// Outward unit normal and curvature at a point of the centered ellipse.
fn ellipse_frame(a: f64, b: f64, p: Vec2) -> (Vec2, f64) {
    let normal = Vec2::new(p.x / (a * a), p.y / (b * b)).normalized();
    let (cos_t, sin_t) = (p.x / a, p.y / b);
    let curvature = a * b / (a * a * sin_t * sin_t + b * b * cos_t * cos_t).powf(1.5);
    (normal, curvature)
}

/// Closest point of the centered ellipse `x²/a² + y²/b² = 1` to `q`.
///
/// Works in the first quadrant with the longer axis along x and finds the
/// root of the secular equation by Newton steps safeguarded with bisection.
/// Returns the point and the iteration count.
pub(crate) fn ellipse_closest(a: f64, b: f64, q: Vec2) -> (Vec2, usize) {
    if a < b {
        let (p, it) = ellipse_closest(b, a, Vec2::new(q.y, q.x));
        return (Vec2::new(p.y, p.x), it);
    }
    let (x0, y0) = (q.x.abs(), q.y.abs());
    let (px, py, iterations) = if y0 > 0.0 {
        if x0 > 0.0 {
            let ax = a * x0;
            let by = b * y0;
            let secular = |t: f64| {
                let r0 = ax / (t + a * a);
                let r1 = by / (t + b * b);
                let f = r0 * r0 + r1 * r1 - 1.0;
                let df = -2.0 * (r0 * r0 / (t + a * a) + r1 * r1 / (t + b * b));
                (f, df)
            };
            let mut lo = -b * b + by;
            let mut hi = -b * b + (ax * ax + by * by).sqrt();
            let mut t = lo.max(-a * a + ax);
            let mut iterations = 0;
            for _ in 0..PROJECTION_MAX_ITER {
                iterations += 1;
                let (f, df) = secular(t);
                if f > 0.0 {
                    lo = lo.max(t);
                } else {
                    hi = hi.min(t);
                }
                let mut next = t - f / df;
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                let done = (next - t).abs() <= 1e-3 * PROJECTION_TOL * (1.0 + t.abs()) || hi - lo <= f64::EPSILON * (1.0 + t.abs());
                t = next;
                if done {
                    break;
                }
            }
            (a * a * x0 / (t + a * a), b * b * y0 / (t + b * b), iterations)
        } else {
            (0.0, b, 0)
        }
    } else {
        let focal = (a * a - b * b) / a;
        if x0 < focal {
            let px = a * a * x0 / (a * a - b * b);
            let py = b * (1.0 - (px / a).powi(2)).max(0.0).sqrt();
            (px, py, 0)
        } else {
            (a, 0.0, 0)
        }
    };
    (Vec2::new(px.copysign(q.x), py.copysign(q.y)), iterations)
}

/// Arclength table for a centered ellipse parametrized by `(a cos t, b sin t)`.
struct EllipseArc {
    a: f64,
    b: f64,
    cumulative: Vec<f64>,
    total: f64,
}

const ARC_PANELS: usize = 256;

// 8-point Gauss–Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

impl EllipseArc {
    fn new(a: f64, b: f64) -> Self {
        let width = 2.0 * PI / ARC_PANELS as f64;
        let mut cumulative = Vec::with_capacity(ARC_PANELS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..ARC_PANELS {
            let t0 = k as f64 * width;
            acc += gauss(|t| speed(a, b, t), t0, t0 + width);
            cumulative.push(acc);
        }
        EllipseArc { a, b, total: acc, cumulative }
    }

    fn length_to(&self, t: f64) -> f64 {
        let width = 2.0 * PI / ARC_PANELS as f64;
        let k = ((t / width).floor() as usize).min(ARC_PANELS - 1);
        let t0 = k as f64 * width;
        self.cumulative[k] + gauss(|u| speed(self.a, self.b, u), t0, t)
    }

    fn parameter_at(&self, s: f64) -> f64 {
        let mut t = 2.0 * PI * s / self.total;
        for _ in 0..PROJECTION_MAX_ITER {
            let step = (self.length_to(t) - s) / speed(self.a, self.b, t);
            t -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        t
    }
}

fn speed(a: f64, b: f64, t: f64) -> f64 {
    (a * t.sin()).hypot(b * t.cos())
}

fn gauss(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    GL_NODES.iter().zip(GL_WEIGHTS.iter()).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Uniform grid. Node `(i, j)` sits at `origin + h·(i, j)`; storage is
/// row-major with `i` fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Vec2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(origin: Vec2, h: f64, nx: usize, ny: usize) -> Result<Self, GeometryError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(GeometryError::Parameter(format!("grid spacing must be positive, got {h}")));
        }
        if nx < 3 || ny < 3 {
            return Err(GeometryError::Parameter(format!("grid needs at least 3x3 nodes, got {nx}x{ny}")));
        }
        Ok(Grid { origin, h, nx, ny })
    }

    /// Grid symmetric about the domain center covering its bounding box plus `margin`.
    pub fn covering(domain: &DomainSpec, h: f64, margin: f64) -> Result<Self, GeometryError> {
        domain.validate()?;
        let half = domain.half_extents();
        let kx = ((half.x + margin) / h).ceil() as usize;
        let ky = ((half.y + margin) / h).ceil() as usize;
        let c = domain.center();
        Grid::new(Vec2::new(c.x - kx as f64 * h, c.y - ky as f64 * h), h, 2 * kx + 1, 2 * ky + 1)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.origin.x + i as f64 * self.h, self.origin.y + j as f64 * self.h)
    }

    pub fn node_at(&self, idx: usize) -> Vec2 {
        let (i, j) = self.coords(idx);
        self.node(i, j)
    }

    pub fn upper(&self) -> Vec2 {
        self.node(self.nx - 1, self.ny - 1)
    }

    /// Cell containing `p` and the fractional position inside it.
    pub fn locate(&self, p: Vec2) -> Option<(usize, usize, f64, f64)> {
        let gx = (p.x - self.origin.x) / self.h;
        let gy = (p.y - self.origin.y) / self.h;
        if !(gx >= 0.0 && gy >= 0.0 && gx <= (self.nx - 1) as f64 && gy <= (self.ny - 1) as f64) {
            return None;
        }
        let i = (gx.floor() as usize).min(self.nx - 2);
        let j = (gy.floor() as usize).min(self.ny - 2);
        Some((i, j, gx - i as f64, gy - j as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeTag {
    /// At least `ε` inside the domain.
    Interior,
    /// Inside the domain but closer than `ε` to the boundary.
    Band,
    Exterior,
}

impl NodeTag {
    pub fn inside(self) -> bool {
        self != NodeTag::Exterior
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub tags: Vec<NodeTag>,
    pub signed_distance: Vec<f64>,
    /// Nearest boundary point for band nodes.
    pub band_projection: Vec<Option<Vec2>>,
    pub epsilon: f64,
}

impl Classification {
    pub fn count(&self, tag: NodeTag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }
}

pub fn classify_grid(domain: &DomainSpec, grid: &Grid, epsilon: f64) -> Result<Classification, GeometryError> {
    domain.validate()?;
    if epsilon < 2.0 * grid.h * (1.0 - 1e-12) {
        return Err(GeometryError::Parameter(format!("epsilon {epsilon} must be at least 2h = {}", 2.0 * grid.h)));
    }
    let c = domain.center();
    let half = domain.half_extents();
    let lo = grid.origin;
    let hi = grid.upper();
    let slack = 1e-9 * grid.h;
    if c.x - half.x - epsilon < lo.x - slack
        || c.y - half.y - epsilon < lo.y - slack
        || c.x + half.x + epsilon > hi.x + slack
        || c.y + half.y + epsilon > hi.y + slack
    {
        return Err(GeometryError::Coverage(format!(
            "domain bounding box widened by epsilon={epsilon} exceeds grid box [{}, {}]x[{}, {}]",
            lo.x, hi.x, lo.y, hi.y
        )));
    }
    let mut tags = Vec::with_capacity(grid.len());
    let mut signed_distance = Vec::with_capacity(grid.len());
    let mut band_projection = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let x = grid.node_at(idx);
        let sd = domain.sdf(x);
        let tag = if sd <= -epsilon {
            NodeTag::Interior
        } else if sd < 0.0 {
            NodeTag::Band
        } else {
            NodeTag::Exterior
        };
        band_projection.push((tag == NodeTag::Band).then(|| domain.project(x).point));
        tags.push(tag);
        signed_distance.push(sd);
    }
    Ok(Classification { tags, signed_distance, band_projection, epsilon })
}

/// The line `{x : direction·x = offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    direction: Vec2,
    offset: f64,
}

impl Hyperplane {
    /// Normalizes `direction`; fails for a zero or non-finite direction.
    pub fn new(direction: Vec2, offset: f64) -> Result<Self, GeometryError> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) || !offset.is_finite() {
            return Err(GeometryError::Parameter("hyperplane needs a nonzero finite direction".into()));
        }
        Ok(Hyperplane { direction: direction * (1.0 / n), offset })
    }

    pub fn direction(&self) -> Vec2 {
        self.direction
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance of `x` from the plane, positive on the `direction` side.
    pub fn side(&self, x: Vec2) -> f64 {
        self.direction.dot(x) - self.offset
    }

    pub fn reflect(&self, x: Vec2) -> Vec2 {
        x - self.direction * (2.0 * self.side(x))
    }
}

pub fn reflect(x: Vec2, plane: &Hyperplane) -> Vec2 {
    plane.reflect(x)
}
