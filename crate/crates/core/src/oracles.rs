//! Closed-form reference solutions and brute-force references.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::Vec2;
use crate::operator::{f_value, Envelopes, Jet, PParams, SymMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("argument outside the domain of the solution: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

fn check_pn(p: f64, n: usize) -> Result<(), OracleError> {
    if !(p.is_finite() && p > 1.0) || n < 2 {
        return Err(OracleError::Parameter(format!("need p in (1, inf) and n >= 2, got p={p}, n={n}")));
    }
    Ok(())
}

/// Radial solution of `-Δ_p^N v = 1` in the ball of radius `R` with zero
/// boundary values: `v(r) = p/(2(p+n-2)) (R² - r²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSolution {
    pub p: f64,
    pub n: usize,
    pub radius: f64,
}

impl RadialSolution {
    pub fn new(p: f64, n: usize, radius: f64) -> Result<Self, OracleError> {
        check_pn(p, n)?;
        if !(radius > 0.0) {
            return Err(OracleError::Parameter(format!("radius must be positive, got {radius}")));
        }
        Ok(RadialSolution { p, n, radius })
    }

    /// `p / (p + n - 2)`, minus the Hessian eigenvalue of `v`.
    pub fn curvature_coeff(&self) -> f64 {
        self.p / (self.p + self.n as f64 - 2.0)
    }

    fn check(&self, r: f64) -> Result<(), OracleError> {
        if !(0.0..=self.radius).contains(&r) {
            return Err(OracleError::Domain(format!("r={r} outside [0, {}]", self.radius)));
        }
        Ok(())
    }

    pub fn value(&self, r: f64) -> Result<f64, OracleError> {
        self.check(r)?;
        Ok(self.value_unchecked(r))
    }

    /// The same quadratic, continued outside the ball.
    pub fn value_unchecked(&self, r: f64) -> f64 {
        0.5 * self.curvature_coeff() * (self.radius * self.radius - r * r)
    }

    pub fn derivative(&self, r: f64) -> Result<f64, OracleError> {
        self.check(r)?;
        Ok(-self.curvature_coeff() * r)
    }

    pub fn second_derivative(&self, r: f64) -> Result<f64, OracleError> {
        self.check(r)?;
        Ok(-self.curvature_coeff())
    }

    /// Residual of `-((p-1)/p) v'' - ((n-1)/(p r)) v' - 1` at `r > 0`.
    pub fn ode_residual(&self, r: f64) -> Result<f64, OracleError> {
        let (p, n) = (self.p, self.n as f64);
        Ok(-(p - 1.0) / p * self.second_derivative(r)? - (n - 1.0) / (p * r) * self.derivative(r)? - 1.0)
    }

    /// Planar field `v(|x - center|)`, continued outside the ball.
    pub fn field(&self, center: Vec2) -> impl Fn(Vec2) -> f64 + '_ {
        move |x| self.value_unchecked((x - center).norm())
    }
}

pub fn radial_ball(p: f64, n: usize, radius: f64, r: f64) -> Result<f64, OracleError> {
    RadialSolution::new(p, n, radius)?.value(r)
}

/// Hopf constant `a = R p / (p + n - 2)`, equal to `|v'(R)|`.
pub fn hopf_constant(p: f64, n: usize, radius: f64) -> Result<f64, OracleError> {
    check_pn(p, n)?;
    if !(radius > 0.0) {
        return Err(OracleError::Parameter(format!("radius must be positive, got {radius}")));
    }
    Ok(radius * p / (p + n as f64 - 2.0))
}

/// Solution of `-u'' = 1`, `u(a) = u(b) = 0` on the annulus `a ≤ r ≤ b`,
/// the `p = ∞` torsion function. Written as a shifted parabola so that
/// `|u'|² + 2u` is constant by exact cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfinityAnnulus {
    pub inner: f64,
    pub outer: f64,
}

impl InfinityAnnulus {
    pub fn new(inner: f64, outer: f64) -> Result<Self, OracleError> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(OracleError::Parameter(format!("need 0 < a < b, got a={inner}, b={outer}")));
        }
        Ok(InfinityAnnulus { inner, outer })
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.outer - self.inner)
    }

    pub fn critical_radius(&self) -> f64 {
        0.5 * (self.inner + self.outer)
    }

    fn check(&self, r: f64) -> Result<(), OracleError> {
        if !(self.inner..=self.outer).contains(&r) {
            return Err(OracleError::Domain(format!("r={r} outside [{}, {}]", self.inner, self.outer)));
        }
        Ok(())
    }

    pub fn value_unchecked(&self, r: f64) -> f64 {
        let d = r - self.critical_radius();
        0.5 * self.half_width() * self.half_width() - 0.5 * d * d
    }

    pub fn value(&self, r: f64) -> Result<f64, OracleError> {
        self.check(r)?;
        Ok(self.value_unchecked(r))
    }

    pub fn derivative(&self, r: f64) -> Result<f64, OracleError> {
        self.check(r)?;
        Ok(self.critical_radius() - r)
    }

    /// `|u'|² + 2u`.
    pub fn p_function(&self, r: f64) -> Result<f64, OracleError> {
        Ok(self.derivative(r)?.powi(2) + 2.0 * self.value(r)?)
    }

    pub fn field(&self, center: Vec2) -> impl Fn(Vec2) -> f64 + '_ {
        move |x| self.value_unchecked((x - center).norm())
    }
}

pub fn infty_annulus(a: f64, b: f64, r: f64) -> Result<f64, OracleError> {
    InfinityAnnulus::new(a, b)?.value(r)
}

/// Radius of the only ball carrying constant Neumann data `c` at `p = 1`:
/// `R = (1 - n) c`.
pub fn p1_ball_radius(n: usize, c: f64) -> Result<f64, OracleError> {
    if n < 2 {
        return Err(OracleError::Parameter(format!("n must be >= 2, got {n}")));
    }
    if !(c < 0.0) {
        return Err(OracleError::Parameter(format!("Neumann value must be negative, got {c}")));
    }
    Ok((1.0 - n as f64) * c)
}

/// Weights of the mean-value scheme
/// `u(x) = β·mean_{∂B_ε(x)} u + (α/2)(max + min)_{∂B_ε(x)} u + s·ε²·f(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DppWeights {
    pub alpha: f64,
    pub beta: f64,
    pub source_coeff: f64,
}

/// Weights matching the `ε²` term of the sphere-mean and max/min-midpoint
/// expansions
///
/// ```text
/// mean - u ≈ ε²/(2n) Δu,    (max + min)/2 - u ≈ (ε²/2) Δ_∞^N u,
/// ```
///
/// against `Δ_p^N = (1/p)Δ + ((p-2)/p)Δ_∞^N`. This gives
/// `α = (p-2)/(n+p-2)`, `β = n/(n+p-2)` and the scheme's defect
/// `(ε²/2)·p/(n+p-2)·Δ_p^N u`, hence `s = p/(2(n+p-2))`.
pub fn dpp_weights(p: f64, n: usize) -> Result<DppWeights, OracleError> {
    check_pn(p, n)?;
    let denom = n as f64 + p - 2.0;
    Ok(DppWeights { alpha: (p - 2.0) / denom, beta: n as f64 / denom, source_coeff: p / (2.0 * denom) })
}

/// Unit directions `2πk/m`, built so that the set is invariant under the
/// symmetries of the square whenever `m` is a multiple of 8.
pub fn circle_directions(m: usize) -> Vec<Vec2> {
    if m.is_multiple_of(8) {
        let eighth = m / 8;
        let mut first: Vec<Vec2> = (0..=eighth)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        first[0] = Vec2::new(1.0, 0.0);
        first[eighth] = Vec2::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
        let mut dirs = Vec::with_capacity(m);
        for k in 0..m {
            let quadrant = k / (2 * eighth);
            let r = k % (2 * eighth);
            let base = if r <= eighth {
                first[r]
            } else {
                let v = first[2 * eighth - r];
                Vec2::new(v.y, v.x)
            };
            dirs.push(match quadrant {
                0 => base,
                1 => Vec2::new(-base.y, base.x),
                2 => Vec2::new(-base.x, -base.y),
                _ => Vec2::new(base.y, -base.x),
            });
        }
        dirs
    } else {
        (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                Vec2::new(t.cos(), t.sin())
            })
            .collect()
    }
}

/// The continuum mean-value operator (without source) applied to a function,
/// sampling `m` points on the circle of radius `eps` about `x`.
pub fn dpp_average(u: impl Fn(Vec2) -> f64, x: Vec2, eps: f64, m: usize, w: &DppWeights) -> f64 {
    let mut sum = 0.0;
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for d in circle_directions(m) {
        let v = u(x + d * eps);
        sum += v;
        hi = hi.max(v);
        lo = lo.min(v);
    }
    w.beta * sum / m as f64 + 0.5 * w.alpha * (hi + lo)
}

/// Directions spread over the unit sphere of dimension `n`: equally spaced
/// angles for `n = 2`, a Fibonacci lattice for `n = 3`.
pub fn sphere_directions(n: usize, m: usize) -> Vec<[f64; 3]> {
    if n == 2 {
        circle_directions(m).into_iter().map(|d| [d.x, d.y, 0.0]).collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..m)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                let r = (1.0 - z * z).sqrt();
                let t = golden * k as f64;
                [r * t.cos(), r * t.sin(), z]
            })
            .collect()
    }
}

fn f_along(params: &PParams, x: &SymMatrix, d: [f64; 3]) -> f64 {
    f_value(params, &Jet { q: d, x: *x }).expect("unit direction")
}

/// Infimum and supremum of `F(a, X)` over `m` sampled unit directions.
pub fn envelope_sweep(params: &PParams, x: &SymMatrix, m: usize) -> Envelopes {
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for d in sphere_directions(x.dim(), m) {
        let f = f_along(params, x, d);
        lower = lower.min(f);
        upper = upper.max(f);
    }
    Envelopes { lower, upper }
}

/// Brute-force envelopes: a sweep over `m ≥ 64` directions, followed in the
/// plane by golden-section refinement of the best sampled angle within one
/// sampling interval on each side.
pub fn envelope_bruteforce(params: &PParams, x: &SymMatrix, m: usize) -> Result<Envelopes, OracleError> {
    if m < 64 {
        return Err(OracleError::Parameter(format!("need at least 64 directions, got {m}")));
    }
    if x.dim() != 2 {
        return Ok(envelope_sweep(params, x, m));
    }
    let step = 2.0 * PI / m as f64;
    let along = |t: f64| f_along(params, x, [t.cos(), t.sin(), 0.0]);
    let (mut k_lo, mut k_hi) = (0, 0);
    let (mut lower, mut upper) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..m {
        let f = along(step * k as f64);
        if f < lower {
            lower = f;
            k_lo = k;
        }
        if f > upper {
            upper = f;
            k_hi = k;
        }
    }
    let t_lo = step * k_lo as f64;
    let t_hi = step * k_hi as f64;
    lower = lower.min(golden_min(&along, t_lo - step, t_lo + step));
    upper = upper.max(-golden_min(&|t| -along(t), t_hi - step, t_hi + step));
    Ok(Envelopes { lower, upper })
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::envelopes;

    #[test]
    fn radial_examples() {
        assert_eq!(radial_ball(2.0, 2, 1.0, 0.0).unwrap(), 0.5);
        assert_eq!(radial_ball(3.0, 3, 2.0, 2.0).unwrap(), 0.0);
        assert!((radial_ball(4.0, 2, 1.0, 0.5).unwrap() - 0.375).abs() < 1e-15);
        assert!(radial_ball(2.0, 2, 1.0, 1.5).is_err());
    }

    #[test]
    fn radial_solves_the_ode() {
        for &(p, n, radius) in &[(1.5, 2, 1.0), (2.0, 2, 1.0), (3.0, 3, 2.0), (7.5, 2, 0.4)] {
            let sol = RadialSolution::new(p, n, radius).unwrap();
            assert_eq!(sol.value(radius).unwrap(), 0.0);
            assert_eq!(sol.derivative(0.0).unwrap(), 0.0);
            for k in 1..=1000 {
                let r = radius * k as f64 / 1000.0;
                assert!(sol.ode_residual(r).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hopf_examples() {
        assert_eq!(hopf_constant(2.0, 2, 1.0).unwrap(), 1.0);
        assert_eq!(hopf_constant(3.0, 3, 2.0).unwrap(), 1.5);
        for &(p, n, radius) in &[(2.0, 2, 1.0), (3.0, 3, 2.0), (1.5, 2, 0.7)] {
            let sol = RadialSolution::new(p, n, radius).unwrap();
            let slope = sol.derivative(radius).unwrap().abs();
            assert!((slope - hopf_constant(p, n, radius).unwrap()).abs() < 1e-15);
        }
    }

    /// Independent route for the annulus: integrate `u'' = -1` by Simpson
    /// quadrature of the shooting slope.
    fn shooting_annulus(a: f64, b: f64, r: f64) -> (f64, f64) {
        // u(r) = s (r - a) - (r - a)²/2 with s fixed by u(b) = 0
        let s = 0.5 * (b - a);
        let n = 2000;
        let h = (r - a) / n as f64;
        let slope = |t: f64| s - (t - a);
        let mut integral = slope(a) + slope(r);
        for k in 1..n {
            integral += if k % 2 == 1 { 4.0 } else { 2.0 } * slope(a + k as f64 * h);
        }
        (integral * h / 3.0, slope(r))
    }

    #[test]
    fn infinity_annulus_examples() {
        let sol = InfinityAnnulus::new(1.0, 2.0).unwrap();
        let (v, _) = shooting_annulus(1.0, 2.0, 1.5);
        assert!((sol.value(1.5).unwrap() - v).abs() < 1e-12);
        assert!((sol.value(1.5).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(sol.value(1.0).unwrap(), 0.0);
        assert_eq!(sol.derivative(1.0).unwrap().abs(), 0.5);
        assert_eq!(sol.derivative(2.0).unwrap().abs(), 0.5);
        let (v2, s2) = shooting_annulus(1.0, 2.0, 2.0);
        assert!(v2.abs() < 1e-12 && (s2 + 0.5).abs() < 1e-12);
        let values: Vec<f64> = (0..=1000).map(|k| sol.p_function(1.0 + k as f64 / 1000.0).unwrap()).collect();
        let spread = values.iter().cloned().fold(f64::MIN, f64::max) - values.iter().cloned().fold(f64::MAX, f64::min);
        assert_eq!(spread, 0.0);
        assert_eq!(values[0], 0.25);
        assert!(infty_annulus(1.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn p1_radius_examples() {
        assert_eq!(p1_ball_radius(2, -0.5).unwrap(), 0.5);
        assert_eq!(p1_ball_radius(3, -1.0).unwrap(), 2.0);
        assert!(p1_ball_radius(2, 0.0).is_err());
        // Solving R p/(p+n-2) = -c for R and letting p -> 1.
        for &(n, c) in &[(2usize, -0.5), (3, -1.0)] {
            let p = 1.0 + 1e-9;
            let radius = -c * (p + n as f64 - 2.0) / p;
            assert!((radius - p1_ball_radius(n, c).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn dpp_weight_examples() {
        let w = dpp_weights(2.0, 2).unwrap();
        assert_eq!((w.alpha, w.beta, w.source_coeff), (0.0, 1.0, 0.5));
        let w = dpp_weights(4.0, 2).unwrap();
        assert_eq!((w.alpha, w.beta, w.source_coeff), (0.5, 0.5, 0.5));
        for &p in &[1.2, 1.5, 1.99, 2.0, 2.01, 3.0, 10.0] {
            let w = dpp_weights(p, 2).unwrap();
            assert!((w.alpha + w.beta - 1.0).abs() < 1e-15);
            assert!(w.beta > 0.0);
            assert_eq!(w.alpha < 0.0, p < 2.0);
        }
    }

    /// Sphere mean of a smooth function by Taylor expansion: for the
    /// non-polynomial test function the scheme defect must scale like ε².
    #[test]
    fn dpp_expansion_matches_operator() {
        let u = |x: Vec2| (0.7 * x.x + 0.2).sin() + 0.3 * x.y * x.y + 0.5 * x.x * x.y;
        let x0 = Vec2::new(0.1, -0.2);
        for &p in &[2.0, 3.0, 4.0, 1.5] {
            let w = dpp_weights(p, 2).unwrap();
            // exact Δ_p^N at x0 from analytic derivatives
            let ux = 0.7 * (0.7 * x0.x + 0.2).cos() + 0.5 * x0.y;
            let uy = 0.6 * x0.y + 0.5 * x0.x;
            let uxx = -0.49 * (0.7 * x0.x + 0.2).sin();
            let lap_p = {
                let x = SymMatrix::new2(uxx, 0.5, 0.6);
                -(f_value(&PParams::new(p, 2).unwrap(), &Jet::new2([ux, uy], x)).unwrap() + 1.0)
            };
            let mut prev = None;
            for &eps in &[0.04, 0.02, 0.01] {
                let defect = dpp_average(u, x0, eps, 4096, &w) - u(x0);
                let predicted = 0.5 * eps * eps * p / (2.0 + p - 2.0) * lap_p;
                let err = (defect - predicted).abs() / (eps * eps);
                if let Some(e) = prev {
                    assert!(err < 0.6 * e + 1e-9, "p={p} eps={eps} err={err} prev={e}");
                }
                prev = Some(err);
            }
        }
    }

    #[test]
    fn dpp_is_exact_on_the_radial_solution() {
        for &p in &[2.0, 3.0, 4.0] {
            let w = dpp_weights(p, 2).unwrap();
            let sol = RadialSolution::new(p, 2, 1.0).unwrap();
            let v = sol.field(Vec2::default());
            for &eps in &[0.1, 0.05, 0.025] {
                let mut worst: f64 = 0.0;
                for k in 0..40 {
                    let x = Vec2::new(0.02 * k as f64 - 0.4, 0.013 * k as f64 - 0.2);
                    let next = dpp_average(&v, x, eps, 64, &w) + w.source_coeff * eps * eps;
                    worst = worst.max((next - v(x)).abs());
                }
                assert!(worst < eps.powi(3), "p={p} eps={eps} worst={worst}");
            }
        }
    }

    #[test]
    fn directions_have_square_symmetry() {
        let d = circle_directions(32);
        for k in 0..32 {
            let r = d[(k + 8) % 32];
            assert_eq!((r.x, r.y), (-d[k].y, d[k].x));
            let m = d[(32 - k) % 32];
            assert_eq!((m.x, m.y), (d[k].x, -d[k].y));
            assert!((d[k].norm() - 1.0).abs() < 1e-15);
            let t = 2.0 * PI * k as f64 / 32.0;
            assert!((d[k].x - t.cos()).abs() < 1e-15 && (d[k].y - t.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn bruteforce_examples() {
        let p4 = PParams::new(4.0, 2).unwrap();
        let e = envelope_bruteforce(&p4, &SymMatrix::diag(&[1.0, -1.0]), 720).unwrap();
        assert!((e.lower + 1.5).abs() < 1e-5 && (e.upper + 0.5).abs() < 1e-5);
        let iso = SymMatrix::identity(2).scale(0.7);
        let e = envelope_bruteforce(&p4, &iso, 64).unwrap();
        let expected = -(0.7 * 3.0 / 4.0 + 0.7 / 4.0) - 1.0;
        assert!((e.lower - expected).abs() < 1e-14 && (e.upper - expected).abs() < 1e-14);
        let p2 = PParams::new(2.0, 2).unwrap();
        let x = SymMatrix::new2(0.3, -1.2, 2.0);
        let e = envelope_bruteforce(&p2, &x, 64).unwrap();
        assert!((e.lower + 2.3 / 2.0 + 1.0).abs() < 1e-14 && (e.upper - e.lower).abs() < 1e-14);
        assert!(envelope_bruteforce(&p2, &x, 32).is_err());
    }

    #[test]
    fn sweep_converges_quadratically() {
        let params = PParams::new(3.0, 2).unwrap();
        let x = SymMatrix::new2(1.0, 0.37, -0.8);
        let exact = envelopes(&params, &x);
        // worst case over rotations of the sampling lattice is ~ C/m²
        for &m in &[64usize, 128, 256, 512] {
            let e = envelope_sweep(&params, &x, m);
            let err = (e.lower - exact.lower).abs().max((e.upper - exact.upper).abs());
            let bound = 0.5 * (x.eigenvalues().max() - x.eigenvalues().min()) * (PI / m as f64).powi(2);
            assert!(err <= bound * 1.0001 + 1e-15, "m={m} err={err} bound={bound}");
        }
        let x3 = SymMatrix::new3(1.0, 0.2, -0.4, -0.5, 0.3, 0.8);
        let p3 = PParams::new(3.0, 3).unwrap();
        let e = envelope_sweep(&p3, &x3, 4000);
        let exact = envelopes(&p3, &x3);
        assert!(e.lower >= exact.lower - 1e-12 && e.upper <= exact.upper + 1e-12);
        assert!((e.lower - exact.lower).abs() < 1e-2 && (e.upper - exact.upper).abs() < 1e-2);
    }
}
