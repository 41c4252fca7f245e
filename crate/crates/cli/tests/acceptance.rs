//! Acceptance criteria 1-8. Prints one pass/fail line per criterion and
//! exits non-zero if any check fails. `FINSLER_SEED` overrides the seed.

use std::process::ExitCode;
use std::time::Instant;

use finsler_cli::suites::{self, Check};

const CRITERIA: [&str; 8] = [
    "tensor identities",
    "geodesics, exponential map, curvature, Jacobi fields",
    "distance: shooting vs oracle, asymmetry, reverse duality",
    "cut-time positivity and Inj+ anchors",
    "cut-locus disjointness and tubular neighbourhood",
    "backward-sphere curvature bound",
    "C1 counterexample vs smooth ellipse",
    "ordering, separating points, hessian anchors",
];

fn main() -> ExitCode {
    let seed = std::env::var("FINSLER_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(7);
    let start = Instant::now();
    let reports = suites::run("all", seed).expect("the all suite exists");
    let checks: Vec<&Check> = reports.iter().flat_map(|r| &r.checks).collect();
    let mut all_pass = true;
    for (i, title) in CRITERIA.iter().enumerate() {
        let n = i as u8 + 1;
        let group: Vec<&&Check> = checks.iter().filter(|c| c.criterion == Some(n)).collect();
        let failed: Vec<&&Check> = group.iter().copied().filter(|c| !c.pass).collect();
        let pass = !group.is_empty() && failed.is_empty();
        all_pass &= pass;
        println!(
            "criterion {n}: {} - {title} ({}/{} checks)",
            if pass { "PASS" } else { "FAIL" },
            group.len() - failed.len(),
            group.len()
        );
        for c in failed {
            println!("    failed: {} (measured {:.3e}, bound {:.1e}, margin {:.3e})", c.name, c.measured, c.tolerance, c.margin);
        }
    }
    let extra: Vec<&&Check> = checks.iter().filter(|c| c.criterion.is_none()).collect();
    let extra_failed: Vec<&&Check> = extra.iter().copied().filter(|c| !c.pass).collect();
    println!("supplementary invariants: {}/{} checks pass", extra.len() - extra_failed.len(), extra.len());
    for c in &extra_failed {
        println!("    failed: {} (measured {:.3e}, bound {:.1e})", c.name, c.measured, c.tolerance);
    }
    let timings: Vec<String> = reports.iter().map(|r| format!("{} {:.1}s", r.suite, r.seconds)).collect();
    println!("seed {seed}; {}; total {:.1}s", timings.join(", "), start.elapsed().as_secs_f64());
    if all_pass && extra_failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
