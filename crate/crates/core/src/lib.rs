//! Numerical laboratory for the torsion problem `-Δ_p^N u = 1`, `u = 0` on
//! `∂Ω`, of the normalized (game-theoretic) p-Laplacian in the plane, and
//! for the overdetermined problem that adds constant Neumann data.
//!
//! Modules, bottom-up:
//!
//! - [`field`]: nodal values on a grid with inside/outside tags;
//! - [`geometry`]: analytic domains, boundary sampling, grids, reflections;
//! - [`operator`]: the viscosity operator, its envelopes, Pucci operators;
//! - [`oracles`]: closed-form and brute-force references;
//! - [`solver`]: mean-value (dynamic programming) and frozen-direction solvers;
//! - [`diagnostics`]: viscosity, Pucci, Neumann, moving-plane and P-function checks;
//! - [`checkpoint`], [`report`]: solution files, SVG heatmaps, CSV traces;
//! - [`config`]: flat dotted-key run configurations;
//! - [`experiments`]: the reproducible experiment suite behind the CLI;
//! - [`pipeline`]: solve → checkpoint → diagnose.

pub mod field;
pub mod geometry;
pub mod operator;
pub mod oracles;
pub mod solver;
pub mod diagnostics;
pub mod checkpoint;
pub mod report;
pub mod config;
pub mod experiments;
pub mod pipeline;

pub use field::GridField;
pub use geometry::{DomainSpec, Grid, Hyperplane, NodeTag, Vec2};
pub use operator::{Jet, PParams, SymMatrix};
