//! The ten acceptance criteria, one verdict line each.
//!
//! The disk study (criteria 1–3) is solved once and shared. Runs without
//! the libtest harness so the verdict lines are always printed.

use std::process::ExitCode;
use std::time::Instant;

use plaplace::experiments::{
    annulus_infinity, comparison, convergence_checks, envelope_table, hopf_checks, moving_plane, pucci_sandwich, radial_study,
    symmetry_family, Outcome, DEFAULT_SEED, RADIAL_HS, RADIAL_PS,
};

fn disk_study() -> Outcome {
    let start = Instant::now();
    let runs = radial_study(&RADIAL_PS, &RADIAL_HS).expect("disk study runs");
    let mut out = Outcome::new("radial-convergence + hopf");
    convergence_checks(&runs, &mut out);
    hopf_checks(&runs, &mut out);
    out.wall_time_s = start.elapsed().as_secs_f64();
    out
}

fn main() -> ExitCode {
    let outcomes = vec![
        disk_study(),
        envelope_table(DEFAULT_SEED).0,
        pucci_sandwich(DEFAULT_SEED),
        symmetry_family().expect("symmetry family runs"),
        annulus_infinity().expect("annulus runs"),
        comparison(DEFAULT_SEED).expect("comparison runs"),
        moving_plane().expect("moving plane runs"),
    ];
    for o in &outcomes {
        print!("{}", o.table());
    }

    let mut failed = Vec::new();
    println!();
    for k in 1..=10u8 {
        let checks: Vec<_> = outcomes.iter().flat_map(|o| &o.checks).filter(|c| c.criterion == k).collect();
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        let worst = checks.iter().find(|c| !c.pass).or(checks.first());
        let detail = worst.map_or("no checks ran".to_string(), |c| format!("{} = {:.4e} ({})", c.label, c.value, c.bound));
        println!("criterion {k:>2}: {}  [{} checks; {detail}]", if pass { "PASS" } else { "FAIL" }, checks.len());
        if !pass {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
