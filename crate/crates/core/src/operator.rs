//! The normalized p-Laplacian as a viscosity operator.
//!
//! The torsion equation `-Δ_p^N u = 1` is written as `F(∇u, ∇²u) = 0` with
//!
//! ```text
//! F(q, X) = -((p-2)/p) <X q, q>/|q|² - (1/p) tr X - 1,   q ≠ 0.
//! ```
//!
//! At `q = 0` the operator is discontinuous and only its lower and upper
//! semicontinuous envelopes are meaningful; they depend on the Hessian
//! spectrum and switch branches at `p = 2`.
//!
//! Note on the gradient-direction coefficient: it is `(p-2)/p`, matching
//! `Δ_p^N = (1/p)Δ_1^N + ((p-1)/p)Δ_∞^N`. A coefficient of `(p-2)/2` would be
//! inconsistent with both that identity and the envelope formulas.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::GridField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("gradient vanishes; use the semicontinuous envelopes")]
    DegenerateGradient,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Exponent of the operator. The limits `1` and `∞` are only meaningful
/// for the oracle and checker paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    One,
    Finite(f64),
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PParams {
    pub p: Exponent,
    pub n: usize,
}

impl PParams {
    pub fn new(p: f64, n: usize) -> Result<Self, OperatorError> {
        if !(p.is_finite() && p > 1.0) {
            return Err(OperatorError::Parameter(format!("p must lie in (1, inf), got {p}")));
        }
        Self::check_dim(n)?;
        Ok(PParams { p: Exponent::Finite(p), n })
    }

    pub fn infinity(n: usize) -> Result<Self, OperatorError> {
        Self::check_dim(n)?;
        Ok(PParams { p: Exponent::Infinity, n })
    }

    pub fn one(n: usize) -> Result<Self, OperatorError> {
        Self::check_dim(n)?;
        Ok(PParams { p: Exponent::One, n })
    }

    fn check_dim(n: usize) -> Result<(), OperatorError> {
        if (2..=3).contains(&n) {
            Ok(())
        } else {
            Err(OperatorError::Parameter(format!("dimension must be 2 or 3, got {n}")))
        }
    }

    /// The finite exponent, or an error for the symbolic limits.
    pub fn finite(&self) -> Result<f64, OperatorError> {
        match self.p {
            Exponent::Finite(p) => Ok(p),
            other => Err(OperatorError::Parameter(format!("a finite exponent is required, got {other:?}"))),
        }
    }

    /// Weight of `tr X` in `Δ_p^N`.
    pub fn trace_coeff(&self) -> f64 {
        match self.p {
            Exponent::One => 1.0,
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    /// Weight of `<X q̂, q̂>` in `Δ_p^N`.
    pub fn direction_coeff(&self) -> f64 {
        match self.p {
            Exponent::One => -1.0,
            Exponent::Finite(p) => (p - 2.0) / p,
            Exponent::Infinity => 1.0,
        }
    }

    /// Smallest and largest eigenvalue of the coefficient matrix,
    /// `min/max{1/p, (p-1)/p}`.
    pub fn ellipticity(&self) -> (f64, f64) {
        let a = self.trace_coeff();
        let b = a + self.direction_coeff();
        (a.min(b), a.max(b))
    }

    /// True on the branch `p ≥ 2`, where the gradient direction carries the
    /// larger coefficient.
    pub fn degenerate_above_two(&self) -> bool {
        self.direction_coeff() >= 0.0
    }
}

/// Symmetric matrix of order 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    a: [[f64; 3]; 3],
}

/// Eigenvalues in ascending order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    values: [f64; 3],
    n: usize,
}

impl Spectrum {
    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.n]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.n - 1]
    }

    pub fn sum(&self) -> f64 {
        self.as_slice().iter().sum()
    }
}

impl SymMatrix {
    pub fn new2(a11: f64, a12: f64, a22: f64) -> Self {
        SymMatrix { n: 2, a: [[a11, a12, 0.0], [a12, a22, 0.0], [0.0, 0.0, 0.0]] }
    }

    pub fn new3(a11: f64, a12: f64, a13: f64, a22: f64, a23: f64, a33: f64) -> Self {
        SymMatrix { n: 3, a: [[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]] }
    }

    pub fn diag(d: &[f64]) -> Self {
        assert!((2..=3).contains(&d.len()), "order must be 2 or 3");
        let mut a = [[0.0; 3]; 3];
        for (k, v) in d.iter().enumerate() {
            a[k][k] = *v;
        }
        SymMatrix { n: d.len(), a }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn zero(n: usize) -> Self {
        Self::diag(&vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|k| self.a[k][k]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.a.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.a[i][j] += other.a[i][j];
            }
        }
        out
    }

    /// `X + s·I`.
    pub fn shift(&self, s: f64) -> Self {
        let mut out = *self;
        for k in 0..self.n {
            out.a[k][k] += s;
        }
        out
    }

    /// `<X q, q>`.
    pub fn quad_form(&self, q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += q[i] * self.a[i][j] * q[j];
            }
        }
        acc
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn determinant(&self) -> f64 {
        let a = &self.a;
        if self.n == 2 {
            a[0][0] * a[1][1] - a[0][1] * a[1][0]
        } else {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
    }

    /// Ascending eigenvalues: closed form for order 2, cyclic Jacobi for order 3.
    pub fn eigenvalues(&self) -> Spectrum {
        let mut values = [0.0; 3];
        if self.n == 2 {
            let (a, b, d) = (self.a[0][0], self.a[0][1], self.a[1][1]);
            let mean = 0.5 * (a + d);
            let radius = (0.5 * (a - d)).hypot(b);
            values[0] = mean - radius;
            values[1] = mean + radius;
        } else {
            let ev = jacobi3(self.a);
            values = ev;
            values.sort_by(f64::total_cmp);
        }
        Spectrum { values, n: self.n }
    }
}

fn jacobi3(mut a: [[f64; 3]; 3]) -> [f64; 3] {
    for _sweep in 0..50 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        let scale = a[0][0].abs() + a[1][1].abs() + a[2][2].abs();
        if off == 0.0 || off <= 1e-18 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    [a[0][0], a[1][1], a[2][2]]
}

pub fn sym_eigs(x: &SymMatrix) -> Spectrum {
    x.eigenvalues()
}

/// First and second derivatives of a test function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub q: [f64; 3],
    pub x: SymMatrix,
}

impl Jet {
    pub fn new2(q: [f64; 2], x: SymMatrix) -> Self {
        Jet { q: [q[0], q[1], 0.0], x }
    }

    pub fn gradient(&self) -> &[f64] {
        &self.q[..self.x.dim()]
    }

    pub fn gradient_norm(&self) -> f64 {
        self.gradient().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `F(q, X)` for `q ≠ 0`.
pub fn f_value(params: &PParams, jet: &Jet) -> Result<f64, OperatorError> {
    let q2: f64 = jet.gradient().iter().map(|v| v * v).sum();
    if q2 == 0.0 || !q2.is_finite() {
        return Err(OperatorError::DegenerateGradient);
    }
    Ok(-params.direction_coeff() * jet.x.quad_form(jet.gradient()) / q2 - params.trace_coeff() * jet.x.trace() - 1.0)
}

/// Lower and upper semicontinuous envelopes of `F` at `q = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelopes {
    pub lower: f64,
    pub upper: f64,
}

pub fn envelopes(params: &PParams, x: &SymMatrix) -> Envelopes {
    let spec = x.eigenvalues();
    let (lo, hi) = (spec.min(), spec.max());
    let sum = spec.sum();
    let t = params.trace_coeff();
    // <X a, a>/|a|² ranges over [λ_1, λ_n]; the sign of the direction
    // coefficient decides which end produces the infimum.
    let w = params.direction_coeff();
    let at_lo = -w * lo - t * sum - 1.0;
    let at_hi = -w * hi - t * sum - 1.0;
    Envelopes { lower: at_lo.min(at_hi), upper: at_lo.max(at_hi) }
}

/// Envelopes written out branch by branch in eigenvalue form. Only for
/// finite exponents; kept separate from [`envelopes`] so the two can be
/// checked against each other.
pub fn envelopes_branchwise(p: f64, x: &SymMatrix) -> Envelopes {
    let spec = x.eigenvalues();
    let ev = spec.as_slice();
    let n = ev.len();
    let lead = (p - 1.0) / p;
    let rest = 1.0 / p;
    let with_first = -lead * ev[0] - rest * ev[1..].iter().sum::<f64>() - 1.0;
    let with_last = -lead * ev[n - 1] - rest * ev[..n - 1].iter().sum::<f64>() - 1.0;
    if p <= 2.0 {
        Envelopes { lower: with_first, upper: with_last }
    } else {
        Envelopes { lower: with_last, upper: with_first }
    }
}

/// Lower envelope `F_*(q, X)`: `F` away from `q = 0`, the envelope at it.
pub fn f_lower(params: &PParams, jet: &Jet) -> f64 {
    f_value(params, jet).unwrap_or_else(|_| envelopes(params, &jet.x).lower)
}

/// Upper envelope `F^*(q, X)`.
pub fn f_upper(params: &PParams, jet: &Jet) -> f64 {
    f_value(params, jet).unwrap_or_else(|_| envelopes(params, &jet.x).upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pucci {
    pub minus: f64,
    pub plus: f64,
}

/// Extremal Pucci operators with ellipticity constants `lambda ≤ big_lambda`.
pub fn pucci(x: &SymMatrix, lambda: f64, big_lambda: f64) -> Result<Pucci, OperatorError> {
    if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
        return Err(OperatorError::Parameter(format!(
            "need 0 < lambda <= Lambda, got lambda={lambda}, Lambda={big_lambda}"
        )));
    }
    let spec = x.eigenvalues();
    let pos: f64 = spec.as_slice().iter().filter(|e| **e > 0.0).sum();
    let neg: f64 = spec.as_slice().iter().filter(|e| **e < 0.0).sum();
    Ok(Pucci { minus: lambda * pos + big_lambda * neg, plus: big_lambda * pos + lambda * neg })
}

/// Default gradient floor for classical evaluation on a grid of spacing `h`.
pub fn default_grad_floor(h: f64) -> f64 {
    0.1 * h.sqrt()
}

/// Classical finite-difference values of `Δ_p^N u` on a grid.
#[derive(Debug, Clone)]
pub struct OperatorField {
    /// `None` where the node is masked.
    pub values: Vec<Option<f64>>,
    /// Nodes whose 3x3 stencil is not entirely inside the domain.
    pub stencil_masked: usize,
    /// Evaluable nodes masked because `|∇u| ≤ grad_floor`.
    pub gradient_masked: usize,
}

impl OperatorField {
    pub fn evaluated(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn masked_fraction(&self) -> f64 {
        let candidates = self.evaluated() + self.gradient_masked;
        if candidates == 0 {
            0.0
        } else {
            self.gradient_masked as f64 / candidates as f64
        }
    }
}

/// Central-difference gradient and Hessian at an interior node.
pub fn central_jet(field: &GridField, i: usize, j: usize) -> Jet {
    let h = field.grid.h;
    let u = |a: isize, b: isize| field.at((i as isize + a) as usize, (j as isize + b) as usize);
    let c = u(0, 0);
    let ux = (u(1, 0) - u(-1, 0)) / (2.0 * h);
    let uy = (u(0, 1) - u(0, -1)) / (2.0 * h);
    let uxx = (u(1, 0) - 2.0 * c + u(-1, 0)) / (h * h);
    let uyy = (u(0, 1) - 2.0 * c + u(0, -1)) / (h * h);
    let uxy = (u(1, 1) - u(1, -1) - u(-1, 1) + u(-1, -1)) / (4.0 * h * h);
    Jet::new2([ux, uy], SymMatrix::new2(uxx, uxy, uyy))
}

/// `Δ_p^N u = (1/p) tr ∇²u + ((p-2)/p) <∇²u ∇u, ∇u>/|∇u|²` at every node
/// whose 3x3 stencil lies inside the domain and whose gradient exceeds
/// `grad_floor`.
pub fn classical_field_eval(field: &GridField, params: &PParams, grad_floor: f64) -> OperatorField {
    let grid = field.grid;
    let mut values = vec![None; grid.len()];
    let mut stencil_masked = 0;
    let mut gradient_masked = 0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !field.tag(i, j).inside() {
                continue;
            }
            if !field.patch_inside(i, j, 1) {
                stencil_masked += 1;
                continue;
            }
            let jet = central_jet(field, i, j);
            if jet.gradient_norm() <= grad_floor {
                gradient_masked += 1;
                continue;
            }
            // Δ_p^N u = -(F + 1)
            values[grid.index(i, j)] = Some(-(f_value(params, &jet).expect("nonzero gradient") + 1.0));
        }
    }
    OperatorField { values, stencil_masked, gradient_masked }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify_grid, DomainSpec, Grid, Vec2};
    use proptest::prelude::*;

    const TIGHT: f64 = 1e-12;

    fn p(p: f64) -> PParams {
        PParams::new(p, 2).unwrap()
    }

    #[test]
    fn eigen_examples() {
        assert_eq!(SymMatrix::diag(&[2.0, -1.0]).eigenvalues().as_slice(), &[-1.0, 2.0]);
        assert_eq!(SymMatrix::new2(0.0, 1.0, 0.0).eigenvalues().as_slice(), &[-1.0, 1.0]);
    }

    /// Real roots of the characteristic cubic by the trigonometric formula.
    fn cubic_roots(m: &SymMatrix) -> [f64; 3] {
        let a = |i, j| m.get(i, j);
        let c2 = -m.trace();
        let c1 = a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2) - a(0, 1).powi(2) - a(0, 2).powi(2) - a(1, 2).powi(2);
        let c0 = -m.determinant();
        let shift = -c2 / 3.0;
        let pp = c1 - c2 * c2 / 3.0;
        let qq = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
        let mut r = if pp.abs() < 1e-300 {
            [shift; 3]
        } else {
            let amp = 2.0 * (-pp / 3.0).sqrt();
            let arg = (3.0 * qq / (pp * amp)).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            [0, 1, 2].map(|k| shift + amp * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
        };
        r.sort_by(f64::total_cmp);
        r
    }

    proptest! {
        #[test]
        fn jacobi_matches_cubic_formula(v in proptest::array::uniform6(-3.0f64..3.0)) {
            let m = SymMatrix::new3(v[0], v[1], v[2], v[3], v[4], v[5]);
            let ev = m.eigenvalues();
            let roots = cubic_roots(&m);
            for (e, r) in ev.as_slice().iter().zip(roots) {
                prop_assert!((e - r).abs() <= 1e-7 * (1.0 + m.frobenius()));
                prop_assert!(m.shift(-e).determinant().abs() <= 1e-10 * m.frobenius().max(1.0).powi(3));
            }
        }

        #[test]
        fn envelope_forms_agree(pv in 1.01f64..12.0, a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let x = SymMatrix::new2(a, b, c);
            let e1 = envelopes(&p(pv), &x);
            let e2 = envelopes_branchwise(pv, &x);
            prop_assert!((e1.lower - e2.lower).abs() < TIGHT && (e1.upper - e2.upper).abs() < TIGHT);
        }

        #[test]
        fn envelopes_bracket_every_direction(pv in 1.01f64..12.0, a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, th in 0.0f64..6.3) {
            let x = SymMatrix::new2(a, b, c);
            let env = envelopes(&p(pv), &x);
            let f = f_value(&p(pv), &Jet::new2([th.cos(), th.sin()], x)).unwrap();
            prop_assert!(env.lower - TIGHT <= f && f <= env.upper + TIGHT);
        }

        #[test]
        fn degenerate_ellipticity(pv in 1.01f64..12.0, v in proptest::array::uniform3(-3.0f64..3.0),
                                  g in proptest::array::uniform2(-2.0f64..2.0), th in 0.0f64..6.3) {
            // Y = X + G Gᵀ with G Gᵀ ⪰ 0
            let x = SymMatrix::new2(v[0], v[1], v[2]);
            let y = x.add(&SymMatrix::new2(g[0] * g[0], g[0] * g[1], g[1] * g[1]));
            let params = p(pv);
            let q = [th.cos(), th.sin()];
            prop_assert!(f_value(&params, &Jet::new2(q, x)).unwrap() >= f_value(&params, &Jet::new2(q, y)).unwrap() - TIGHT);
            let (ex, ey) = (envelopes(&params, &x), envelopes(&params, &y));
            prop_assert!(ex.lower >= ey.lower - TIGHT && ex.upper >= ey.upper - TIGHT);
        }

        #[test]
        fn pucci_sandwich(pv in 1.01f64..12.0, v in proptest::array::uniform3(-3.0f64..3.0), th in 0.0f64..6.3) {
            let params = p(pv);
            let x = SymMatrix::new2(v[0], v[1], v[2]);
            let (lo, hi) = params.ellipticity();
            let m = pucci(&x, lo, hi).unwrap();
            prop_assert!(m.minus <= m.plus + TIGHT);
            let f = f_value(&params, &Jet::new2([th.cos(), th.sin()], x)).unwrap();
            prop_assert!(-m.plus - 1.0 <= f + TIGHT && f <= -m.minus - 1.0 + TIGHT);
        }
    }

    #[test]
    fn f_value_examples() {
        let x = SymMatrix::diag(&[2.0, 0.0]);
        assert!((f_value(&p(4.0), &Jet::new2([1.0, 0.0], x)).unwrap() + 2.5).abs() < TIGHT);
        assert!((f_value(&p(4.0), &Jet::new2([0.0, 1.0], x)).unwrap() + 1.5).abs() < TIGHT);
        let q = [0.6, 0.8];
        assert!(f_value(&p(2.0), &Jet::new2(q, SymMatrix::diag(&[-1.0, -1.0]))).unwrap().abs() < TIGHT);
        assert_eq!(f_value(&p(3.0), &Jet::new2([0.0, 0.0], x)), Err(OperatorError::DegenerateGradient));
    }

    #[test]
    fn envelope_examples() {
        let e = envelopes(&p(2.0), &SymMatrix::identity(2));
        assert_eq!((e.lower, e.upper), (-2.0, -2.0));
        let e = envelopes(&p(4.0), &SymMatrix::diag(&[1.0, -1.0]));
        assert!((e.lower + 1.5).abs() < TIGHT && (e.upper + 0.5).abs() < TIGHT);
        let inf = PParams::infinity(2).unwrap();
        let x = SymMatrix::diag(&[-1.0, 0.0]);
        let e = envelopes(&inf, &x);
        assert_eq!((e.lower, e.upper), (-1.0, 0.0));
    }

    #[test]
    fn branches_swap_across_two() {
        // p and 3 - p have swapped coefficient pairs only in the sense of the
        // branch formulas: the p ≤ 2 lower envelope uses λ_1, the p ≥ 2 one λ_n.
        let x = SymMatrix::diag(&[-2.0, 3.0]);
        let below = envelopes_branchwise(1.5, &x);
        let above = envelopes_branchwise(3.0, &x);
        assert!((below.lower - (-(0.5 / 1.5) * -2.0 - (1.0 / 1.5) * 3.0 - 1.0)).abs() < TIGHT);
        assert!((above.lower - (-(2.0 / 3.0) * 3.0 - (1.0 / 3.0) * -2.0 - 1.0)).abs() < TIGHT);
        let at_two = envelopes_branchwise(2.0, &x);
        assert!((at_two.lower - at_two.upper).abs() < TIGHT);
        assert!((at_two.lower - (-x.trace() / 2.0 - 1.0)).abs() < TIGHT);
    }

    #[test]
    fn pucci_examples() {
        let m = pucci(&SymMatrix::diag(&[2.0, -1.0]), 0.25, 0.75).unwrap();
        assert!((m.plus - 1.25).abs() < TIGHT && (m.minus + 0.25).abs() < TIGHT);
        assert_eq!(pucci(&SymMatrix::zero(2), 0.25, 0.75).unwrap(), Pucci { minus: 0.0, plus: 0.0 });
        let m = pucci(&SymMatrix::identity(2), 0.5, 0.5).unwrap();
        assert_eq!((m.minus, m.plus), (1.0, 1.0));
        assert!(pucci(&SymMatrix::identity(2), 0.0, 0.5).is_err());
        assert_eq!(p(4.0).ellipticity(), (0.25, 0.75));
        assert_eq!(p(1.5).ellipticity(), (1.0 / 3.0, 2.0 / 3.0));
    }

    fn disk_field(f: impl Fn(Vec2) -> f64) -> GridField {
        let dom = DomainSpec::disk(1.0);
        let grid = Grid::covering(&dom, 1.0 / 32.0, 0.2).unwrap();
        let class = classify_grid(&dom, &grid, 3.0 / 32.0).unwrap();
        GridField::from_fn(grid, class.tags, f)
    }

    #[test]
    fn classical_eval_on_quadratics() {
        let field = disk_field(|x| 0.5 * (1.0 - x.dot(x)));
        let out = classical_field_eval(&field, &p(2.0), default_grad_floor(field.grid.h));
        assert!(out.evaluated() > 2000);
        for v in out.values.iter().flatten() {
            assert!((v + 1.0).abs() < 1e-10);
        }
        let field = disk_field(|x| 0.5 * x.x * x.x);
        let out = classical_field_eval(&field, &p(2.0), 1e-9);
        for (idx, v) in out.values.iter().enumerate() {
            if let Some(v) = v {
                assert!((v - 0.5).abs() < 1e-10);
                assert!(field.grid.node_at(idx).x.abs() > 1e-12);
            }
        }
        let field = disk_field(|x| 0.25 * x.dot(x));
        let out = classical_field_eval(&field, &p(4.0), 1e-9);
        assert!(out.values.iter().flatten().all(|v| (v - 0.5).abs() < 1e-10));
        assert_eq!(out.gradient_masked, 1);
    }
}
