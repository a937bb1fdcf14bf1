use selfsim_spectrum::asympt::{classify, estimate_tau, geometric_check, RegimeKind};
use selfsim_spectrum::pencil::Side;
use selfsim_spectrum::presets::table;
use selfsim_spectrum::{DiscreteProblem, EigenList, SimilarityParams};

fn solve(id: u8) -> (SimilarityParams, EigenList) {
    let t = table(id).unwrap();
    let p = SimilarityParams::validate(t.n, &t.a, &t.beta, &t.d).unwrap();
    let eigs = DiscreteProblem::at_depth(&p, t.depth)
        .unwrap()
        .spectrum(t.pos_count, t.neg_count, 1e-10)
        .unwrap();
    (p, eigs)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a / b - 1.0).abs() <= tol
}

#[test]
fn table_one_limits() {
    let (p, eigs) = solve(1);
    let regime = classify(&p.structure(), p.d_m());
    assert_eq!(regime.kind, RegimeKind::SignPreserving);
    let report = estimate_tau(&eigs, &regime).unwrap();
    let side = report.side(Side::Positive).unwrap();
    assert!(side.converged);
    assert!(close(side.tau[0], 271.32, 5e-3), "{:?}", side.tau);
    assert!(close(side.tau[1], 1264.04, 5e-3), "{:?}", side.tau);
    assert!(report.side(Side::Negative).is_none());
    let ratios = geometric_check(&eigs, &regime).unwrap();
    assert!(ratios[0].final_deviation() < 1e-2);
}

#[test]
fn table_two_limits() {
    let (p, eigs) = solve(2);
    let regime = classify(&p.structure(), p.d_m());
    let report = estimate_tau(&eigs, &regime).unwrap();
    let side = report.side(Side::Negative).unwrap();
    assert_eq!(side.law.period, 1);
    assert!(close(side.tau[0], 157.20, 5e-3), "{:?}", side.tau);
    assert!(side.converged);
    let ratios = geometric_check(&eigs, &regime).unwrap();
    assert!(ratios.iter().all(|r| r.final_deviation() < 1e-2));
}

#[test]
fn table_three_limits_on_both_sides() {
    let (p, eigs) = solve(3);
    let regime = classify(&p.structure(), p.d_m());
    assert_eq!(regime.kind, RegimeKind::Alternating);
    let report = estimate_tau(&eigs, &regime).unwrap();
    for side in [Side::Positive, Side::Negative] {
        let s = report.side(side).unwrap();
        assert!(close(s.tau[0], 299.00, 5e-3), "{side:?} {:?}", s.tau);
        assert!(close(s.tau[1], 13764.02, 5e-3), "{side:?} {:?}", s.tau);
        assert!(s.converged);
    }
    for diag in geometric_check(&eigs, &regime).unwrap() {
        assert!((diag.law.ratio() - 2916.0).abs() < 1e-9);
        assert!(diag.final_deviation() < 1e-2);
    }
}

#[test]
fn deeper_truncations_leave_the_leading_eigenvalues_fixed() {
    let t = table(1).unwrap();
    let p = SimilarityParams::validate(t.n, &t.a, &t.beta, &t.d).unwrap();
    let at = |depth| {
        DiscreteProblem::at_depth(&p, depth)
            .unwrap()
            .spectrum(4, 0, 1e-12)
            .unwrap()
    };
    let (a, b) = (at(10), at(14));
    for (x, y) in a.positive.iter().zip(&b.positive) {
        assert!(close(*x, *y, 1e-9), "{x} vs {y}");
    }
}
