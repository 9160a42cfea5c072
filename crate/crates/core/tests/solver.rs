//! Solver runs against closed forms and against each other.

use plaplace::diagnostics::neumann_trace;
use plaplace::oracles::{hopf_constant, RadialSolution};
use plaplace::solver::*;
use plaplace::{DomainSpec, GridField, NodeTag, Vec2};

const ORIGIN: Vec2 = Vec2 { x: 0.0, y: 0.0 };

fn run(domain: &DomainSpec, h: f64, p: f64, tweak: impl Fn(&mut SolverConfig)) -> (GridField, ConvergenceReport) {
    let mut cfg = SolverConfig::for_domain(domain, h, p);
    tweak(&mut cfg);
    let grid = grid_for(domain, h, cfg.epsilon).unwrap();
    let out = solve(&ProblemSpec::torsion(p), domain, &grid, &cfg).unwrap();
    assert!(out.1.converged, "{:?}", out.1);
    out
}

fn sup_diff_inside(a: &GridField, b: &GridField) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .zip(&a.tags)
        .filter(|(_, t)| t.inside())
        .map(|((x, y), _)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn sup_error(field: &GridField, p: f64) -> f64 {
    let rs = RadialSolution::new(p, 2, 1.0).unwrap();
    let exact = GridField::from_fn(field.grid, field.tags.clone(), rs.field(ORIGIN));
    sup_diff_inside(field, &exact)
}

/// Radial two-point problem `((p-1)/p) u'' + ((n-1)/(p r)) u' = -1` on
/// `[a, b]` with zero end values, by RK4 shooting. The equation is linear for
/// radial profiles, so the end value is affine in the initial slope and two
/// shots pin it down. Returns `(u'(a), u'(b))`.
fn shoot_annulus(p: f64, n: f64, a: f64, b: f64) -> (f64, f64) {
    let rhs = |r: f64, y: [f64; 2]| [y[1], -(1.0 + (n - 1.0) / (p * r) * y[1]) * p / (p - 1.0)];
    let integrate = |slope: f64| {
        let steps = 20_000;
        let dr = (b - a) / steps as f64;
        let mut y = [0.0, slope];
        for k in 0..steps {
            let r = a + k as f64 * dr;
            let k1 = rhs(r, y);
            let k2 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k1[0], y[1] + dr / 2.0 * k1[1]]);
            let k3 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k2[0], y[1] + dr / 2.0 * k2[1]]);
            let k4 = rhs(r + dr, [y[0] + dr * k3[0], y[1] + dr * k3[1]]);
            for i in 0..2 {
                y[i] += dr / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        y
    };
    let (e0, e1) = (integrate(0.0), integrate(1.0));
    let slope = -e0[0] / (e1[0] - e0[0]);
    let end = integrate(slope);
    assert!(end[0].abs() < 1e-10);
    (slope, end[1])
}

#[test]
fn shooting_oracle_matches_the_logarithmic_solution() {
    // p = 2: u = -r²/2 + A ln r + 1/2 with A = 3/(2 ln 2) on [1, 2]
    let a_coef = 1.5 / 2f64.ln();
    let (inner, outer) = shoot_annulus(2.0, 2.0, 1.0, 2.0);
    assert!((inner - (-1.0 + a_coef)).abs() < 1e-9);
    assert!((outer - (-2.0 + a_coef / 2.0)).abs() < 1e-9);
}

#[test]
fn disk_center_values() {
    let d = DomainSpec::disk(1.0);
    let h = 1.0 / 64.0;
    let (u, _) = run(&d, h, 2.0, |c| *c = c.clone().with_epsilon(3.0 * h));
    assert!((u.bilinear(ORIGIN).unwrap() - 0.5).abs() <= 0.01);
    let (u, _) = run(&d, h, 4.0, |_| {});
    assert!((u.bilinear(ORIGIN).unwrap() - 0.5).abs() <= 0.015);
}

#[test]
fn annulus_neumann_values_differ_between_circles() {
    let d = DomainSpec::annulus(1.0, 2.0);
    let h = 1.0 / 64.0;
    let (u, _) = run(&d, h, 2.0, |_| {});
    let trace = neumann_trace(&u, &d, 256, 2.0 * h, &|_| 0.0).unwrap();
    let mean_where = |inner: bool| {
        let v: Vec<f64> = trace.samples.iter().filter(|s| (s.curvature < 0.0) == inner).map(|s| s.u_nu).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (slope_a, slope_b) = shoot_annulus(2.0, 2.0, 1.0, 2.0);
    // outward normal on the inner circle points to the center
    let (inner, outer) = (mean_where(true), mean_where(false));
    assert!((inner - -slope_a).abs() < 0.03, "inner {inner} vs {}", -slope_a);
    assert!((outer - slope_b).abs() < 0.03, "outer {outer} vs {slope_b}");
    assert!((inner.abs() - outer.abs()).abs() > 0.05);
}

#[test]
fn positivity_and_discrete_hopf() {
    let d = DomainSpec::disk(1.0);
    let h = 1.0 / 64.0;
    for p in [1.5, 3.0] {
        let (u, _) = run(&d, h, p, |_| {});
        for (v, t) in u.values.iter().zip(&u.tags) {
            if *t == NodeTag::Interior {
                assert!(*v > 0.0);
            }
        }
        let a = hopf_constant(p, 2, d.inscribed_radius()).unwrap();
        for s in d.boundary_probe(128).unwrap() {
            let inner = u.bilinear(s.point - s.normal * (2.0 * h)).unwrap();
            assert!((0.0 - inner) / (2.0 * h) <= -0.5 * a, "p={p} at {:?}", s.point);
        }
    }
}

#[test]
fn residual_decreases_under_refinement() {
    let d = DomainSpec::disk(1.0);
    let mut prev = f64::INFINITY;
    for k in [32.0, 64.0, 128.0] {
        let (_, rep) = run(&d, 1.0 / k, 2.0, |_| {});
        if k == 64.0 {
            assert!(rep.residual <= 0.05, "{rep:?}");
            assert!(rep.masked_fraction < 0.05);
        }
        assert!(rep.residual < prev, "{rep:?}");
        prev = rep.residual;
    }
}

#[test]
fn policy_iteration_agrees_with_the_mean_value_scheme() {
    let d = DomainSpec::disk(1.0);
    let h = 1.0 / 64.0;
    let (a, _) = run(&d, h, 3.0, |_| {});
    let (b, rep) = run(&d, h, 3.0, |c| c.scheme = Scheme::PolicyIteration);
    assert_eq!(rep.scheme, Scheme::PolicyIteration);
    assert!(sup_diff_inside(&a, &b) <= 2e-2);

    let (lin, _) = run(&d, h, 2.0, |c| c.scheme = Scheme::PolicyIteration);
    assert!(sup_error(&lin, 2.0) <= 1e-2);

    let e = DomainSpec::ellipse(1.5, 1.0);
    let (a, _) = run(&e, h, 4.0, |_| {});
    let (b, _) = run(&e, h, 4.0, |c| c.scheme = Scheme::PolicyIteration);
    assert!(sup_diff_inside(&a, &b) <= 3e-2);
}

#[test]
fn solves_are_deterministic() {
    let d = DomainSpec::ellipse(1.5, 1.0);
    let (a, _) = run(&d, 1.0 / 32.0, 3.0, |_| {});
    let (b, _) = run(&d, 1.0 / 32.0, 3.0, |_| {});
    assert_eq!(a.values, b.values);
}
