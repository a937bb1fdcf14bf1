//! Randomized property suites with fixed seeds, shared by the `verify`
//! subcommand and the test suites.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::banded::BandedSymmetricMatrix;
use crate::oracle::{
    determinant_bound_check, green_spectrum, partial_products, single_atom_eigenvalue,
    PerturbedPair,
};
use crate::pencil::{split_by_sign, Side, SymmetricPencil};
use crate::problem::DiscreteProblem;
use crate::selfsim::AtomicMeasure;

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const ORACLE_TOLERANCE: f64 = 1e-10;
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Largest observed deviation (meaning depends on the suite).
    pub worst: f64,
    pub details: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            violations: 0,
            worst: 0.0,
            details: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, ok: bool, deviation: f64, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if deviation.is_finite() {
            self.worst = self.worst.max(deviation);
        } else {
            self.worst = f64::INFINITY;
        }
        if !ok {
            self.violations += 1;
            if self.details.len() < 10 {
                self.details.push(detail());
            }
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: cases={} violations={} worst={:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.violations,
            self.worst
        )?;
        for d in &self.details {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Single-atom closed forms through the spline path and the Green path.
pub fn oracle_suite() -> SuiteReport {
    let mut report = SuiteReport::new("oracle");
    let mut cases: Vec<(usize, f64, f64, f64)> = Vec::new();
    for &(c, w) in &[
        (0.5, 1.0),
        (0.25, 2.0),
        (0.7, -0.5),
        (0.1, 3.0),
        (0.5, -1.0),
    ] {
        cases.push((1, c, w, 1.0 / (w * c * (1.0 - c))));
    }
    for &w in &[1.0, 0.5, -2.0] {
        cases.push((2, 0.5, w, 192.0 / w));
    }
    for (n, c, w, expected) in cases {
        let mu = AtomicMeasure::new(vec![c], vec![w]).expect("valid atom");
        let index = if w > 0.0 { 1 } else { -1 };
        let spline = DiscreteProblem::from_measure(n, mu.clone())
            .ok()
            .and_then(|p| p.pencil.eig_by_index(index, 1e-13).ok());
        let green = green_spectrum(n, &mu).ok().and_then(|v| v.first().copied());
        let closed = single_atom_eigenvalue(n, c, w).ok();
        for (path, value) in [("spline", spline), ("green", green), ("kernel", closed)] {
            let dev = value.map_or(f64::INFINITY, |v| rel(v, expected));
            report.record(dev <= ORACLE_TOLERANCE, dev, || {
                format!("n={n} atom=({c}, {w}) {path}: {value:?} vs {expected}")
            });
        }
    }
    report
}

/// Random measure with `atoms` interior points separated by at least `gap`.
pub fn random_measure(rng: &mut impl Rng, atoms: usize, gap: f64) -> AtomicMeasure {
    let margin = 0.02;
    let free = 1.0 - 2.0 * margin - gap * (atoms.saturating_sub(1)) as f64;
    let mut cuts: Vec<f64> = (0..atoms).map(|_| rng.random::<f64>() * free).collect();
    cuts.sort_by(f64::total_cmp);
    let positions = cuts
        .iter()
        .enumerate()
        .map(|(i, c)| margin + c + gap * i as f64)
        .collect();
    let weights = (0..atoms)
        .map(|_| {
            let mag = rng.random_range(0.2..2.0);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    AtomicMeasure::new(positions, weights).expect("positions are separated")
}

/// Spline-Galerkin spectra against Green collocation spectra.
pub fn equivalence_suite(seed: u64, measures: usize) -> SuiteReport {
    let mut report = SuiteReport::new("equivalence");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..measures {
        let n = 1 + case % 3;
        let atoms = rng.random_range(1..=30);
        let mu = random_measure(&mut rng, atoms, 0.01);
        let green = green_spectrum(n, &mu).map(|v| split_by_sign(&v, 0.0));
        let spline = DiscreteProblem::from_measure(n, mu.clone())
            .and_then(|p| p.spectrum(mu.positive_count(), mu.negative_count(), 1e-12));
        let (green, spline) = match (green, spline) {
            (Ok(g), Ok(s)) => (g, s),
            (g, s) => {
                report.record(false, f64::INFINITY, || {
                    format!(
                        "case {case}: n={n} atoms={atoms} failed: {:?} / {:?}",
                        g.err(),
                        s.err()
                    )
                });
                continue;
            }
        };
        let mut worst: f64 = 0.0;
        let mut ok = green.positive.len() == spline.positive.len()
            && green.negative.len() == spline.negative.len();
        for side in [Side::Positive, Side::Negative] {
            for (a, b) in spline.side(side).iter().zip(green.side(side)) {
                worst = worst.max(rel(*a, *b));
            }
        }
        ok &= worst <= EQUIVALENCE_TOLERANCE;
        report.record(ok, worst, || {
            format!(
                "case {case}: n={n} atoms={atoms} deviation {worst:.3e} (pos {}/{}, neg {}/{})",
                spline.positive.len(),
                green.positive.len(),
                spline.negative.len(),
                green.negative.len()
            )
        });
    }
    report
}

/// Random banded pencil with a diagonally dominant `K`.
pub fn random_pencil(rng: &mut impl Rng, dim: usize) -> SymmetricPencil {
    let bw = rng.random_range(0..=4usize.min(dim - 1));
    let mut k = BandedSymmetricMatrix::zeros(dim, bw);
    let mut m = BandedSymmetricMatrix::zeros(dim, bw);
    for i in 0..dim {
        for j in i.saturating_sub(bw)..i {
            k.set(i, j, rng.random_range(-1.0..1.0));
            m.set(i, j, rng.random_range(-1.0..1.0));
        }
        m.set(i, i, rng.random_range(-1.0..1.0));
    }
    for i in 0..dim {
        let lo = i.saturating_sub(bw);
        let hi = (i + bw).min(dim - 1);
        let off: f64 = (lo..=hi)
            .filter(|&j| j != i)
            .map(|j| k.get(i, j).abs())
            .sum();
        k.set(i, i, off + rng.random_range(0.5..2.0));
    }
    SymmetricPencil::new(k, m).expect("diagonally dominant K is positive definite")
}

/// Interval counts from inertia differences against bisection eigenvalues.
pub fn inertia_suite(seed: u64, pencils: usize, intervals: usize) -> SuiteReport {
    let mut report = SuiteReport::new("inertia");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..pencils {
        let dim = rng.random_range(1..=30);
        let pencil = random_pencil(&mut rng, dim);
        let (pos, neg) = match (
            pencil.available(Side::Positive),
            pencil.available(Side::Negative),
        ) {
            (Ok(p), Ok(n)) => (p, n),
            _ => {
                report.record(false, f64::INFINITY, || {
                    format!("pencil {case}: inertia failed")
                });
                continue;
            }
        };
        let eigs = match pencil.spectrum(pos, neg, 1e-12) {
            Ok(list) => list,
            Err(e) => {
                report.record(false, f64::INFINITY, || format!("pencil {case}: {e}"));
                continue;
            }
        };
        let all: Vec<f64> = eigs
            .positive
            .iter()
            .chain(&eigs.negative)
            .copied()
            .collect();
        let (lo_mag, hi_mag) = all.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), v| {
            (a.min(v.abs()), b.max(v.abs()))
        });
        let (lo_mag, hi_mag) = if all.is_empty() {
            (1.0, 1.0)
        } else {
            (lo_mag, hi_mag)
        };
        let span = (lo_mag.ln() - 2.0)..(hi_mag.ln() + 2.0);
        let mut drawn = 0;
        while drawn < intervals {
            let mut draw = || {
                let mag = rng.random_range(span.clone()).exp();
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            };
            let (x, y) = (draw(), draw());
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            if lo == hi {
                continue;
            }
            // endpoints too close to an eigenvalue are ambiguous at the bisection tolerance
            if all.iter().any(|v| rel(lo, *v) < 1e-9 || rel(hi, *v) < 1e-9) {
                continue;
            }
            drawn += 1;
            let expected = all.iter().filter(|&&v| v > lo && v <= hi).count();
            let counted = pencil.count_interval(lo, hi);
            let ok = counted.as_ref().is_ok_and(|&c| c == expected);
            report.record(ok, if ok { 0.0 } else { 1.0 }, || {
                format!("pencil {case} (dim {dim}): ({lo:.6e}, {hi:.6e}] counted {counted:?}, expected {expected}")
            });
        }
    }
    report
}

fn random_symmetric(rng: &mut impl Rng, dim: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

/// Random instances of the determinant bound for the pair `1 - lambda F`,
/// `1 + D - lambda F`, then random sequences of its partial products.
pub fn lemma_suite(seed: u64, instances: usize, sequences: usize) -> SuiteReport {
    let mut report = SuiteReport::new("lemmas");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..instances {
        let dim = rng.random_range(1..=10);
        let d_rank = rng.random_range(0..=dim);
        let a = DMatrix::from_fn(dim, d_rank, |_, _| rng.random_range(-1.0..1.0));
        let d = &a * a.transpose();
        let f = if rng.random_bool(0.5) {
            random_symmetric(&mut rng, dim)
        } else {
            // rank-deficient F = B S B^T
            let r = rng.random_range(1..=dim);
            let b = DMatrix::from_fn(dim, r, |_, _| rng.random_range(-1.0..1.0));
            let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(r, |_, _| {
                rng.random_range(-2.0..2.0)
            }));
            let f = &b * s * b.transpose();
            (&f + f.transpose()) * 0.5
        };
        let outcome = PerturbedPair::new(d, f).and_then(|inst| determinant_bound_check(&inst));
        match outcome {
            Ok(rec) => {
                let excess = (rec.product / rec.det - 1.0).max(0.0);
                report.record(rec.holds && rec.ordered, excess, || {
                    format!(
                        "instance {case}: product {} det {} ordered {}",
                        rec.product, rec.det, rec.ordered
                    )
                });
            }
            Err(e) => report.record(false, f64::INFINITY, || format!("instance {case}: {e}")),
        }
    }
    for case in 0..sequences {
        let dim = rng.random_range(2..=20);
        let rank = rng.random_range(1..=3.min(dim));
        let a = DMatrix::from_fn(dim, rank, |_, _| rng.random_range(-1.0..1.0));
        let d = &a * a.transpose();
        // compact surrogate: symmetric with decaying eigenvalues
        let q = random_symmetric(&mut rng, dim).qr().q();
        let spectrum = nalgebra::DVector::from_fn(dim, |i, _| {
            let sign = if i % 3 == 2 { -1.0 } else { 1.0 };
            sign * rng.random_range(0.5..1.5) / (1.0 + i as f64).powi(2)
        });
        let f = &q * DMatrix::from_diagonal(&spectrum) * q.transpose();
        let f = (&f + f.transpose()) * 0.5;
        let positive = spectrum.iter().filter(|v| **v > 0.0).count();
        match partial_products(&d, &f, positive) {
            Ok(rec) => {
                let last = rec.partials.last().copied().unwrap_or(1.0);
                let excess = (last / rec.bound - 1.0).max(0.0);
                report.record(rec.nondecreasing && rec.bounded, excess, || {
                    format!(
                        "sequence {case}: partials {:?} bound {}",
                        rec.partials, rec.bound
                    )
                });
            }
            Err(e) => report.record(false, f64::INFINITY, || format!("sequence {case}: {e}")),
        }
    }
    report
}
