use std::fmt::Write as _;
use std::io::Write;

use super::config::{Depth, Format, JobConfig};
use super::{Cli, CliError, Command, Suite};
use crate::asympt::{
    classify, estimate_tau_with, geometric_check, AsymptError, Regime, DEFAULT_CONVERGENCE,
};
use crate::pencil::{EigenList, PencilError, Side};
use crate::presets::{self, TablePreset, NORMALIZED_TOLERANCE, RAW_TOLERANCE};
use crate::problem::{DiscreteProblem, ProblemError};
use crate::selfsim::{RefineError, SimilarityParams, DEFAULT_MAX_DEPTH};
use crate::verify;

const CSV_HEADER: &str = "side,index,l,k,lambda,normalized";

pub(super) fn dispatch(
    cli: &Cli,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze => {
            let job = Job::load(cli)?;
            let text = analyze(&job.params, job.format.unwrap_or(Format::Text));
            job.emit(out, &text)
        }
        Command::Solve => {
            let job = Job::load(cli)?;
            let regime = job.regime(cli.force)?;
            let solved = job.solve(&regime)?;
            let format = job.format.unwrap_or(Format::Csv);
            if format == Format::Csv {
                note(
                    err,
                    &format!(
                        "depth={} dim={} converged={}",
                        solved.depth, solved.dim, solved.converged
                    ),
                );
            }
            job.emit(out, &solve_table(&solved, &regime, format))
        }
        Command::Asympt => {
            let job = Job::load(cli)?;
            let regime = job.regime(false)?;
            let solved = job.solve(&regime)?;
            let format = job.format.unwrap_or(Format::Text);
            if format == Format::Csv {
                note(
                    err,
                    &format!(
                        "depth={} dim={} converged={}",
                        solved.depth, solved.dim, solved.converged
                    ),
                );
            }
            let text = asympt_table(&solved, &regime, format)?;
            job.emit(out, &text)
        }
        Command::ReproduceTable { id } => {
            let preset =
                presets::table(*id).ok_or_else(|| CliError::Invalid(format!("no table {id}")))?;
            let depth = match cli.depth {
                Some(Depth::Fixed(d)) if d >= 1 => d,
                Some(Depth::Fixed(_)) => {
                    return Err(CliError::Invalid("depth must be at least 1".into()))
                }
                Some(Depth::Auto) | None => preset.depth,
            };
            let tol = cli.tol.unwrap_or(super::config::DEFAULT_REL_TOL);
            let (text, failure) =
                reproduce(&preset, depth, tol, cli.format.unwrap_or(Format::Text))?;
            write_out(out, &text)?;
            match failure {
                Some(row) => Err(CliError::Verification(format!(
                    "table {id}: first failing row {row}"
                ))),
                None => Ok(()),
            }
        }
        Command::Verify { suite } => {
            let seed = cli.seed.unwrap_or(verify::DEFAULT_SEED);
            let report = match suite {
                Suite::Oracle => verify::oracle_suite(),
                Suite::Lemmas => verify::lemma_suite(seed, 1000, 200),
                Suite::Inertia => verify::inertia_suite(seed, 100, 20),
                Suite::Equivalence => verify::equivalence_suite(seed, 50),
            };
            write_out(out, &format!("{report}\n"))?;
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "{} violations in {}",
                    report.violations, report.name
                )))
            }
        }
    }
}

fn note(err: &mut dyn Write, text: &str) {
    // progress notes are best effort
    let _ = writeln!(err, "{text}");
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Io(e.to_string()))
}

/// A config with the command-line overrides applied.
struct Job {
    params: SimilarityParams,
    depth: Depth,
    pos: usize,
    neg: usize,
    rel_tol: f64,
    auto_tol: f64,
    output: Option<String>,
    format: Option<Format>,
}

impl Job {
    fn load(cli: &Cli) -> Result<Self, CliError> {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| CliError::Invalid("--config <path> is required".into()))?;
        let mut cfg = JobConfig::load(path)?;
        if let Some(depth) = cli.depth {
            cfg.depth = depth;
        }
        if let Some(tol) = cli.tol {
            cfg.rel_tol = super::Real(tol);
        }
        let params = cfg.params()?;
        Ok(Self {
            params,
            depth: cfg.depth,
            pos: cli.pos.unwrap_or(cfg.pos_count),
            neg: cli.neg.unwrap_or(cfg.neg_count),
            rel_tol: cfg.rel_tol.0,
            auto_tol: cfg.auto_depth_tol.0,
            output: cfg.output,
            format: cli.format.or(cfg.format),
        })
    }

    fn regime(&self, force: bool) -> Result<Regime, CliError> {
        let structure = self.params.structure();
        if !structure.nondegenerate && !force {
            return Err(CliError::Degenerate(format!(
                "zeta={} has vanishing entries (use --force to solve anyway)",
                join_reals(&structure.zeta)
            )));
        }
        Ok(classify(&structure, self.params.d_m()))
    }

    fn solve(&self, regime: &Regime) -> Result<Solved, CliError> {
        solve_job(
            &self.params,
            regime,
            self.depth,
            self.pos,
            self.neg,
            self.rel_tol,
            self.auto_tol,
        )
    }

    fn emit(&self, out: &mut dyn Write, text: &str) -> Result<(), CliError> {
        match self.output.as_deref() {
            None | Some("-") => write_out(out, text),
            Some(path) => {
                std::fs::write(path, text).map_err(|e| CliError::Io(format!("{path}: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub depth: usize,
    pub dim: usize,
    pub eigs: EigenList,
    /// False when an automatic depth search hit the cap before stabilizing.
    pub converged: bool,
}

fn problem_error(e: ProblemError) -> CliError {
    match e {
        ProblemError::Pencil(p @ PencilError::IndexBeyondSpectrum { .. }) => {
            CliError::Exhausted(p.to_string())
        }
        ProblemError::Refine(r @ RefineError::DepthOverflow { .. }) => {
            CliError::Invalid(r.to_string())
        }
        other => CliError::Numerical(other.to_string()),
    }
}

fn solve_at(
    params: &SimilarityParams,
    depth: usize,
    pos: usize,
    neg: usize,
    tol: f64,
) -> Result<Solved, CliError> {
    let problem = DiscreteProblem::at_depth(params, depth).map_err(problem_error)?;
    let eigs = problem.spectrum(pos, neg, tol).map_err(problem_error)?;
    Ok(Solved {
        depth,
        dim: problem.dim(),
        eigs,
        converged: true,
    })
}

fn max_relative_change(a: &EigenList, b: &EigenList) -> f64 {
    [Side::Positive, Side::Negative]
        .into_iter()
        .flat_map(|s| a.side(s).iter().zip(b.side(s)))
        .map(|(x, y)| ((x - y) / y).abs())
        .fold(0.0, f64::max)
}

/// Spectrum at a fixed depth, or with `Depth::Auto` the first depth at which
/// every requested eigenvalue moved by less than `auto_tol` since the previous
/// depth. Depths that do not yet carry enough eigenvalues are skipped.
pub fn solve_job(
    params: &SimilarityParams,
    regime: &Regime,
    depth: Depth,
    pos: usize,
    neg: usize,
    rel_tol: f64,
    auto_tol: f64,
) -> Result<Solved, CliError> {
    let start = match depth {
        Depth::Fixed(d) => return solve_at(params, d, pos, neg, rel_tol),
        Depth::Auto => {
            let periods = [(Side::Positive, pos), (Side::Negative, neg)]
                .into_iter()
                .filter_map(|(side, count)| {
                    regime
                        .law(side)
                        .map(|law| count.saturating_sub(law.offset).div_ceil(law.period))
                })
                .max()
                .unwrap_or(0);
            (periods + 3).max(4)
        }
    };
    let mut previous: Option<Solved> = None;
    let mut last_error = None;
    for d in start..=DEFAULT_MAX_DEPTH {
        match solve_at(params, d, pos, neg, rel_tol) {
            Ok(current) => {
                if let Some(prev) = &previous {
                    if max_relative_change(&current.eigs, &prev.eigs) < auto_tol {
                        return Ok(current);
                    }
                }
                previous = Some(current);
            }
            Err(e @ CliError::Exhausted(_)) => last_error = Some(e),
            Err(e) => return Err(e),
        }
    }
    match previous {
        Some(mut last) => {
            last.converged = false;
            Ok(last)
        }
        None => Err(last_error.unwrap_or_else(|| {
            CliError::Exhausted("no depth carried the requested eigenvalues".into())
        })),
    }
}

/// Best rational `p/q` with `q <= max_den` when it matches `x` to `1e-12` relative.
pub fn rational_approx(x: f64, max_den: u64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut r = x.abs();
    for _ in 0..40 {
        let a = r.floor();
        if a > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = (a as u64).checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let approx = h1 as f64 / k1 as f64;
        if (approx - x.abs()).abs() <= 1e-12 * x.abs().max(1e-300) {
            return Some((if x < 0.0 { -h1 } else { h1 }, k1));
        }
        let frac = r - a as f64;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    (x == 0.0).then_some((0, 1))
}

/// Fractions with small denominators print exactly, everything else as a decimal.
pub fn format_real(x: f64) -> String {
    match rational_approx(x, 1000) {
        Some((p, 1)) => p.to_string(),
        Some((p, q)) => format!("{p}/{q}"),
        None => format!("{x:.6}"),
    }
}

fn join_reals(v: &[f64]) -> String {
    v.iter()
        .map(|x| format_real(*x))
        .collect::<Vec<_>>()
        .join(",")
}

fn analyze(params: &SimilarityParams, format: Format) -> String {
    let s = params.structure();
    let regime = classify(&s, params.d_m());
    let mut fields: Vec<(&str, String)> = vec![
        ("zeta", join_reals(&s.zeta)),
        ("Z+", s.z_plus.to_string()),
        ("Z-", s.z_minus.to_string()),
        ("q", format_real(s.ratio_q)),
    ];
    if let Some(law) = regime.laws().next() {
        fields.push(("ratio", format_real(law.ratio())));
    }
    fields.push(("regime", regime.kind.to_string()));
    let laws: Vec<_> = regime.laws().collect();
    if !laws.is_empty() && laws.iter().all(|l| l.period == laws[0].period) {
        fields.push(("period", laws[0].period.to_string()));
    } else {
        for law in &laws {
            let key = if law.side == Side::Positive {
                "pos_period"
            } else {
                "neg_period"
            };
            fields.push((key, law.period.to_string()));
        }
    }
    if let Some(neg) = regime.negative.filter(|l| l.offset > 0) {
        fields.push(("neg_offset", neg.offset.to_string()));
    }
    fields.push(("contraction", format!("{:.6}", s.contraction_l2)));
    match format {
        Format::Text => {
            let parts: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{}\n", parts.join(" "))
        }
        Format::Csv => {
            let mut text = String::from("field,value\n");
            for (k, v) in fields {
                let v = if v.contains(',') {
                    format!("\"{v}\"")
                } else {
                    v
                };
                let _ = writeln!(text, "{k},{v}");
            }
            text
        }
    }
}

struct Row {
    side: Side,
    index: i64,
    residue: Option<(usize, usize)>,
    lambda: f64,
    normalized: Option<f64>,
}

fn rows(solved: &Solved, regime: &Regime) -> Vec<Row> {
    let mut out = Vec::new();
    for side in [Side::Positive, Side::Negative] {
        let law = regime.law(side);
        for (i, &lambda) in solved.eigs.side(side).iter().enumerate() {
            let position = i + 1;
            let residue = law.and_then(|l| l.residue(position));
            let normalized = law
                .zip(residue)
                .map(|(l, (_, k))| side.sign() * l.normalize(lambda, k));
            out.push(Row {
                side,
                index: side.sign() as i64 * position as i64,
                residue,
                lambda,
                normalized,
            });
        }
    }
    out
}

fn solve_table(solved: &Solved, regime: &Regime, format: Format) -> String {
    let mut text = String::new();
    match format {
        Format::Csv => {
            text.push_str(CSV_HEADER);
            text.push('\n');
            for r in rows(solved, regime) {
                let (l, k) = r.residue.map_or((String::new(), String::new()), |(l, k)| {
                    (l.to_string(), k.to_string())
                });
                let normalized = r.normalized.map_or(String::new(), |v| v.to_string());
                let _ = writeln!(
                    text,
                    "{},{},{l},{k},{},{normalized}",
                    r.side.label(),
                    r.index,
                    r.lambda
                );
            }
        }
        Format::Text => {
            let _ = writeln!(
                text,
                "depth={} dim={} converged={} regime={}",
                solved.depth, solved.dim, solved.converged, regime.kind
            );
            let _ = writeln!(
                text,
                "{:<4} {:>6} {:>3} {:>3} {:>24} {:>16}",
                "side", "index", "l", "k", "lambda", "normalized"
            );
            for r in rows(solved, regime) {
                let (l, k) = r.residue.map_or(("-".into(), "-".into()), |(l, k)| {
                    (l.to_string(), k.to_string())
                });
                let normalized = r.normalized.map_or("-".into(), |v| format!("{v:.6}"));
                let _ = writeln!(
                    text,
                    "{:<4} {:>6} {:>3} {:>3} {:>24.10e} {:>16}",
                    r.side.label(),
                    r.index,
                    l,
                    k,
                    r.lambda,
                    normalized
                );
            }
        }
    }
    text
}

fn asympt_error(e: AsymptError) -> CliError {
    match e {
        AsymptError::InsufficientData { .. } => CliError::Exhausted(e.to_string()),
        AsymptError::Unsupported => CliError::Degenerate(e.to_string()),
    }
}

fn asympt_table(solved: &Solved, regime: &Regime, format: Format) -> Result<String, CliError> {
    let report =
        estimate_tau_with(&solved.eigs, regime, DEFAULT_CONVERGENCE).map_err(asympt_error)?;
    let ratios = geometric_check(&solved.eigs, regime).map_err(asympt_error)?;
    let mut text = String::new();
    match format {
        Format::Csv => {
            text.push_str("side,l,tau,residual,ratio,predicted,ratio_deviation,converged\n")
        }
        Format::Text => {
            let _ = writeln!(
                text,
                "regime={} depth={} dim={}",
                report.regime, solved.depth, solved.dim
            );
        }
    }
    for side in &report.sides {
        let diag = ratios.iter().find(|r| r.law.side == side.law.side);
        for (i, tau) in side.tau.iter().enumerate() {
            let residual = side.residuals[i].last().copied().unwrap_or(f64::NAN);
            let ratio = diag
                .and_then(|d| d.ratios[i].last().copied())
                .unwrap_or(f64::NAN);
            let deviation = diag
                .and_then(|d| d.deviations[i].last().copied())
                .unwrap_or(f64::NAN);
            let predicted = side.law.ratio();
            let label = side.law.side.label();
            let l = i + 1;
            let _ = match format {
                Format::Csv => writeln!(
                    text,
                    "{label},{l},{tau},{residual},{ratio},{predicted},{deviation},{}",
                    side.converged
                ),
                Format::Text => writeln!(
                    text,
                    "{label} l={l} tau={tau:.6} residual={residual:.3e} ratio={ratio:.6} predicted={} deviation={deviation:.3e}",
                    format_real(predicted)
                ),
            };
        }
        if format == Format::Text {
            let _ = writeln!(
                text,
                "{} converged={}",
                side.law.side.label(),
                side.converged
            );
        }
    }
    Ok(text)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Report text and the first failing row, if any.
fn reproduce(
    preset: &TablePreset,
    depth: usize,
    tol: f64,
    format: Format,
) -> Result<(String, Option<String>), CliError> {
    let params = SimilarityParams::validate(preset.n, &preset.a, &preset.beta, &preset.d)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let regime = classify(&params.structure(), params.d_m());
    let solved = solve_at(&params, depth, preset.pos_count, preset.neg_count, tol)?;
    let mut text = String::new();
    match format {
        Format::Csv => text.push_str(
            "side,index,l,k,lambda,reference_lambda,lambda_dev,normalized,reference_normalized,normalized_dev,status\n",
        ),
        Format::Text => {
            let _ = writeln!(text, "table {} depth={} dim={} regime={}", preset.id, depth, solved.dim, regime.kind);
        }
    }
    let mut failure = None;
    for row in &preset.rows {
        let law = regime.law(row.side).ok_or_else(|| {
            CliError::Numerical(format!(
                "no asymptotic law on the {} side",
                row.side.label()
            ))
        })?;
        let lambda = solved
            .eigs
            .get(row.index)
            .ok_or_else(|| CliError::Exhausted(format!("index {}", row.index)))?;
        let normalized = law.normalize(lambda, row.k);
        let raw_dev = rel(lambda.abs(), row.raw);
        let norm_dev = rel(normalized, row.normalized);
        let ok = law.residue(row.index.unsigned_abs() as usize) == Some((row.l, row.k))
            && raw_dev <= RAW_TOLERANCE
            && norm_dev <= NORMALIZED_TOLERANCE;
        let status = if ok { "PASS" } else { "FAIL" };
        let label = row.side.label();
        if !ok && failure.is_none() {
            failure = Some(format!("{label} {}", row.index));
        }
        let _ = match format {
            Format::Csv => writeln!(
                text,
                "{label},{},{},{},{lambda},{},{raw_dev},{normalized},{},{norm_dev},{status}",
                row.index, row.l, row.k, row.raw, row.normalized
            ),
            Format::Text => writeln!(
                text,
                "{label} {:>3} l={} k={} lambda={:>14.6e} ref={:>9.2e} dev={:>6.3}%  normalized={:>10.3} ref={:>9.2} dev={:>6.3}%  {status}",
                row.index,
                row.l,
                row.k,
                lambda,
                row.raw * lambda.signum(),
                100.0 * raw_dev,
                normalized,
                row.normalized,
                100.0 * norm_dev
            ),
        };
    }
    if format == Format::Text {
        let _ = match &failure {
            None => writeln!(text, "all {} rows PASS", preset.rows.len()),
            Some(row) => writeln!(text, "FAIL: first failing row {row}"),
        };
    }
    Ok((text, failure))
}
