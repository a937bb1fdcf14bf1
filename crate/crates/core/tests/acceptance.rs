//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use selfsim_spectrum::asympt::{classify, geometric_check};
use selfsim_spectrum::oracle::green_spectrum;
use selfsim_spectrum::presets::table;
use selfsim_spectrum::verify::{equivalence_suite, inertia_suite, lemma_suite, DEFAULT_SEED};
use selfsim_spectrum::{AtomicMeasure, DiscreteProblem, EigenList, SimilarityParams};

struct Run {
    params: SimilarityParams,
    eigs: EigenList,
    depth: usize,
    dim: usize,
    elapsed: Duration,
}

fn run_table(id: u8) -> Result<Run, String> {
    let start = Instant::now();
    let t = table(id).ok_or("missing preset")?;
    let params = SimilarityParams::validate(t.n, &t.a, &t.beta, &t.d).map_err(|e| e.to_string())?;
    let problem = DiscreteProblem::at_depth(&params, t.depth).map_err(|e| e.to_string())?;
    let eigs = problem
        .spectrum(t.pos_count, t.neg_count, 1e-10)
        .map_err(|e| e.to_string())?;
    Ok(Run {
        params,
        eigs,
        depth: t.depth,
        dim: problem.dim(),
        elapsed: start.elapsed(),
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `(label, computed, reference, tolerance)` checks, folded into one verdict.
fn checks(items: &[(&str, f64, f64, f64)]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(label, computed, reference, tol) in items {
        let dev = rel(computed, reference);
        ok &= dev <= tol;
        parts.push(format!(
            "{label}={computed:.4} (ref {reference}, dev {:.3}%)",
            100.0 * dev
        ));
    }
    (ok, parts.join(", "))
}

fn criterion_1() -> (bool, String) {
    let run = match run_table(1) {
        Ok(r) => r,
        Err(e) => return (false, e),
    };
    let l = |i| run.eigs.get(i).unwrap_or(f64::NAN);
    let c3 = 54f64.powi(3);
    let (ok, text) = checks(&[
        ("lambda1", l(1), 286.10, 1e-2),
        ("lambda2", l(2), 1377.99, 1e-2),
        ("lambda7/54^3", l(7) / c3, 271.32, 5e-3),
        ("lambda8/54^3", l(8) / c3, 1264.04, 5e-3),
    ]);
    let scale = run.depth <= 14 && run.dim <= 40 && run.elapsed < Duration::from_secs(10);
    (
        ok && scale,
        format!(
            "{text}; depth {} dim {} in {:?}",
            run.depth, run.dim, run.elapsed
        ),
    )
}

fn criterion_2() -> (bool, String) {
    let run = match run_table(2) {
        Ok(r) => r,
        Err(e) => return (false, e),
    };
    let l = |i| -run.eigs.get(i).unwrap_or(f64::NAN);
    let (ok, text) = checks(&[
        ("-lambda-1", l(-1), 369.75, 1e-2),
        ("-lambda-4/54^3", l(-4) / 54f64.powi(3), 157.20, 5e-3),
    ]);
    (
        ok && run.elapsed < Duration::from_secs(10),
        format!("{text}; in {:?}", run.elapsed),
    )
}

fn criterion_3() -> (bool, String) {
    let run = match run_table(3) {
        Ok(r) => r,
        Err(e) => return (false, e),
    };
    let l = |i| run.eigs.get(i).unwrap_or(f64::NAN);
    let c4 = 54f64.powi(4);
    let (ok, text) = checks(&[
        ("lambda1", l(1), 304.08, 1e-2),
        ("lambda5/54^4", l(5) / c4, 299.00, 5e-3),
        ("lambda6/54^4", l(6) / c4, 13764.02, 5e-3),
        ("-lambda-6/54^5", -l(-6) / 54f64.powi(5), 299.00, 5e-3),
    ]);
    (
        ok && run.elapsed < Duration::from_secs(20),
        format!("{text}; in {:?}", run.elapsed),
    )
}

fn criterion_4() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (id, predicted) in [(1, 54.0), (2, 54.0), (3, 2916.0)] {
        let run = match run_table(id) {
            Ok(r) => r,
            Err(e) => return (false, e),
        };
        let regime = classify(&run.params.structure(), run.params.d_m());
        let diags = match geometric_check(&run.eigs, &regime) {
            Ok(d) => d,
            Err(e) => return (false, format!("table {id}: {e}")),
        };
        for d in diags {
            let factor_ok = rel(d.law.ratio(), predicted) < 1e-9;
            let worst = d.final_deviation();
            ok &= factor_ok && worst <= 1e-2;
            parts.push(format!(
                "table {id} {} ratio {} final deviation {:.2e}",
                d.law.side.label(),
                d.law.ratio().round(),
                worst
            ));
        }
    }
    (ok, parts.join("; "))
}

fn criterion_5() -> (bool, String) {
    let mut cases = Vec::new();
    for &(c, w) in &[(0.5, 1.0), (0.3, 2.0), (0.8, -1.5), (0.05, 0.7)] {
        cases.push((1, c, w, 1.0 / (w * c * (1.0 - c))));
    }
    for &w in &[1.0, 3.0, -0.5] {
        cases.push((2, 0.5, w, 192.0 / w));
    }
    let mut worst: f64 = 0.0;
    for &(n, c, w, exact) in &cases {
        let mu = AtomicMeasure::new(vec![c], vec![w]).unwrap();
        let index = if w > 0.0 { 1 } else { -1 };
        let spline = DiscreteProblem::from_measure(n, mu.clone())
            .ok()
            .and_then(|p| p.pencil.eig_by_index(index, 1e-13).ok())
            .unwrap_or(f64::NAN);
        let green = green_spectrum(n, &mu)
            .ok()
            .and_then(|v| v.first().copied())
            .unwrap_or(f64::NAN);
        for v in [spline, green] {
            let dev = rel(v, exact);
            worst = if dev.is_nan() {
                f64::INFINITY
            } else {
                worst.max(dev)
            };
        }
    }
    (
        worst <= 1e-10,
        format!(
            "{} atoms, worst relative deviation {worst:.2e}",
            cases.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> (bool, String));

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("table 1 reproduction", criterion_1),
        ("table 2 reproduction", criterion_2),
        ("table 3 reproduction", criterion_3),
        ("geometric ratios", criterion_4),
        ("single-atom closed forms", criterion_5),
        ("spline and Green spectra agree", || {
            let r = equivalence_suite(DEFAULT_SEED, 50);
            (r.passed() && r.cases == 50, r.to_string())
        }),
        ("inertia counts", || {
            let r = inertia_suite(DEFAULT_SEED, 100, 20);
            (r.passed() && r.cases == 2000, r.to_string())
        }),
        ("determinant bounds", || {
            let r = lemma_suite(DEFAULT_SEED, 1000, 200);
            (r.passed() && r.cases == 1200, r.to_string())
        }),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        if !ok {
            failures += 1;
        }
        println!(
            "{} criterion {} ({name}): {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
