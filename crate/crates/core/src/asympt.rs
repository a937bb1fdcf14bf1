//! Geometric eigenvalue asymptotics and estimation of the coefficients `tau_l`.
//!
//! With `q = a_m^(2n-1) d_m` and the sign counts `Z+`, `Z-` of the jumps
//! `zeta_k` (all nonzero):
//!
//! * `d_m > 0`: `lambda_{l + k Z+} ~ tau_l q^-k` on the positive side and
//!   `lambda_{-(l + k Z-)} ~ -tau_l q^-k` on the negative side;
//! * `d_m < 0`: with period `N - 1`, `lambda_{l + k(N-1)} ~ tau_l |q|^-2k` and
//!   `lambda_{-(l + Z- + k(N-1))} ~ -tau_l |q|^-(2k+1)`.
//!
//! Coefficients are reported as the deepest normalized value, together with
//! the successive relative changes of each normalized sequence.

use std::fmt;

use thiserror::Error;

use crate::pencil::{EigenList, Side};
use crate::selfsim::StructureReport;

/// Relative change between the last two periods below which a sequence
/// counts as converged.
pub const DEFAULT_CONVERGENCE: f64 = 5e-3;
/// Complete periods needed by `estimate_tau`.
pub const MIN_PERIODS_TAU: usize = 3;
/// Complete periods needed by `geometric_check`.
pub const MIN_PERIODS_RATIO: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptError {
    #[error("InsufficientData: {side} side needs {needed} eigenvalues, got {got}")]
    InsufficientData {
        side: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("regime is unsupported (some zeta_k vanish)")]
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    /// `d_m > 0`: each side grows by `1/q` per period.
    SignPreserving,
    /// `d_m < 0`: both sides have period `N - 1` and grow by `q^-2`.
    Alternating,
    /// `Z+ + Z- < N - 1`.
    Unsupported,
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeKind::SignPreserving => "sign-preserving",
            RegimeKind::Alternating => "alternating",
            RegimeKind::Unsupported => "unsupported",
        })
    }
}

/// Asymptotic law on one side of the spectrum: the eigenvalue with signed
/// index `sign * (offset + l + k * period)` behaves like
/// `sign * tau_l * base^-(step_power * k + power_offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideLaw {
    pub side: Side,
    pub period: usize,
    pub offset: usize,
    /// `|q| = a_m^(2n-1) |d_m|`
    pub base: f64,
    pub step_power: u32,
    pub power_offset: u32,
}

impl SideLaw {
    /// Predicted growth factor from one period to the next.
    pub fn ratio(&self) -> f64 {
        self.base.powi(-(self.step_power as i32))
    }

    /// `|lambda| * base^(step_power k + power_offset)`.
    pub fn normalize(&self, lambda: f64, k: usize) -> f64 {
        lambda.abs()
            * self
                .base
                .powi((self.step_power as usize * k) as i32 + self.power_offset as i32)
    }

    /// `(l, k)` of the position (one-based) `position` on this side, if it
    /// follows the law (`position > offset`).
    pub fn residue(&self, position: usize) -> Option<(usize, usize)> {
        let shifted = position.checked_sub(self.offset + 1)?;
        Some((shifted % self.period + 1, shifted / self.period))
    }

    /// One-based position for residue class `l` and step `k`.
    pub fn position(&self, l: usize, k: usize) -> usize {
        self.offset + l + k * self.period
    }

    /// Complete periods contained in `count` eigenvalues.
    pub fn periods_in(&self, count: usize) -> usize {
        count.saturating_sub(self.offset) / self.period
    }

    /// Eigenvalues needed for `periods` complete periods.
    pub fn needed_for(&self, periods: usize) -> usize {
        self.offset + periods * self.period
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    pub positive: Option<SideLaw>,
    pub negative: Option<SideLaw>,
}

impl Regime {
    pub fn law(&self, side: Side) -> Option<&SideLaw> {
        match side {
            Side::Positive => self.positive.as_ref(),
            Side::Negative => self.negative.as_ref(),
        }
    }

    pub fn laws(&self) -> impl Iterator<Item = &SideLaw> {
        self.positive.iter().chain(self.negative.iter())
    }
}

/// Asymptotic regime from the structure report and the sign of `d_m`.
pub fn classify(s: &StructureReport, d_m_sign: f64) -> Regime {
    let branches_minus_one = s.zeta.len();
    if !s.nondegenerate {
        return Regime {
            kind: RegimeKind::Unsupported,
            positive: None,
            negative: None,
        };
    }
    let base = s.ratio_q.abs();
    if d_m_sign > 0.0 {
        let law = |side, period| SideLaw {
            side,
            period,
            offset: 0,
            base,
            step_power: 1,
            power_offset: 0,
        };
        Regime {
            kind: RegimeKind::SignPreserving,
            positive: (s.z_plus > 0).then(|| law(Side::Positive, s.z_plus)),
            negative: (s.z_minus > 0).then(|| law(Side::Negative, s.z_minus)),
        }
    } else {
        Regime {
            kind: RegimeKind::Alternating,
            positive: Some(SideLaw {
                side: Side::Positive,
                period: branches_minus_one,
                offset: 0,
                base,
                step_power: 2,
                power_offset: 0,
            }),
            negative: Some(SideLaw {
                side: Side::Negative,
                period: branches_minus_one,
                offset: s.z_minus,
                base,
                step_power: 2,
                power_offset: 1,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideReport {
    pub law: SideLaw,
    /// `tau_l`, `l = 1..=period`.
    pub tau: Vec<f64>,
    /// `normalized[l-1][k]`.
    pub normalized: Vec<Vec<f64>>,
    /// `residuals[l-1][k-1] = |normalized(k) - normalized(k-1)| / normalized(k)`.
    pub residuals: Vec<Vec<f64>>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsReport {
    pub regime: RegimeKind,
    pub sides: Vec<SideReport>,
}

impl AsymptoticsReport {
    pub fn side(&self, side: Side) -> Option<&SideReport> {
        self.sides.iter().find(|s| s.law.side == side)
    }
}

fn normalized_table(values: &[f64], law: &SideLaw) -> Vec<Vec<f64>> {
    let periods = law.periods_in(values.len());
    (1..=law.period)
        .map(|l| {
            (0..periods)
                .map(|k| law.normalize(values[law.position(l, k) - 1], k))
                .collect()
        })
        .collect()
}

pub fn estimate_tau(eigs: &EigenList, regime: &Regime) -> Result<AsymptoticsReport, AsymptError> {
    estimate_tau_with(eigs, regime, DEFAULT_CONVERGENCE)
}

/// Sides without any computed eigenvalues are skipped; a side with fewer than
/// three complete periods is an error.
pub fn estimate_tau_with(
    eigs: &EigenList,
    regime: &Regime,
    threshold: f64,
) -> Result<AsymptoticsReport, AsymptError> {
    if regime.kind == RegimeKind::Unsupported {
        return Err(AsymptError::Unsupported);
    }
    let mut sides = Vec::new();
    for law in regime.laws() {
        let values = eigs.side(law.side);
        if values.is_empty() {
            continue;
        }
        let needed = law.needed_for(MIN_PERIODS_TAU);
        if values.len() < needed {
            return Err(AsymptError::InsufficientData {
                side: law.side.label(),
                needed,
                got: values.len(),
            });
        }
        let normalized = normalized_table(values, law);
        let residuals: Vec<Vec<f64>> = normalized
            .iter()
            .map(|seq| seq.windows(2).map(|w| (w[1] - w[0]).abs() / w[1]).collect())
            .collect();
        let tau = normalized.iter().map(|seq| *seq.last().unwrap()).collect();
        let converged = residuals
            .iter()
            .all(|r| r.last().is_some_and(|&v| v < threshold));
        sides.push(SideReport {
            law: *law,
            tau,
            normalized,
            residuals,
            converged,
        });
    }
    if sides.is_empty() {
        return Err(AsymptError::InsufficientData {
            side: "any",
            needed: regime
                .laws()
                .map(|l| l.needed_for(MIN_PERIODS_TAU))
                .min()
                .unwrap_or(0),
            got: 0,
        });
    }
    Ok(AsymptoticsReport {
        regime: regime.kind,
        sides,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioDiagnostics {
    pub law: SideLaw,
    /// `ratios[l-1][k] = lambda_{l+(k+1)Z} / lambda_{l+kZ}`.
    pub ratios: Vec<Vec<f64>>,
    /// `|ratio / predicted - 1|`, same layout.
    pub deviations: Vec<Vec<f64>>,
}

impl RatioDiagnostics {
    /// Largest deviation among the final ratios of each residue class.
    pub fn final_deviation(&self) -> f64 {
        self.deviations
            .iter()
            .filter_map(|d| d.last().copied())
            .fold(0.0, f64::max)
    }

    pub fn max_deviation(&self) -> f64 {
        self.deviations
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Same-residue growth ratios compared with the predicted factor.
pub fn geometric_check(
    eigs: &EigenList,
    regime: &Regime,
) -> Result<Vec<RatioDiagnostics>, AsymptError> {
    if regime.kind == RegimeKind::Unsupported {
        return Err(AsymptError::Unsupported);
    }
    let mut out = Vec::new();
    for law in regime.laws() {
        let values = eigs.side(law.side);
        if values.is_empty() {
            continue;
        }
        let needed = law.needed_for(MIN_PERIODS_RATIO);
        if values.len() < needed {
            return Err(AsymptError::InsufficientData {
                side: law.side.label(),
                needed,
                got: values.len(),
            });
        }
        let periods = law.periods_in(values.len());
        let predicted = law.ratio();
        let ratios: Vec<Vec<f64>> = (1..=law.period)
            .map(|l| {
                (0..periods - 1)
                    .map(|k| values[law.position(l, k + 1) - 1] / values[law.position(l, k) - 1])
                    .collect()
            })
            .collect();
        let deviations = ratios
            .iter()
            .map(|r| r.iter().map(|v| (v / predicted - 1.0).abs()).collect())
            .collect();
        out.push(RatioDiagnostics {
            law: *law,
            ratios,
            deviations,
        });
    }
    if out.is_empty() {
        return Err(AsymptError::InsufficientData {
            side: "any",
            needed: MIN_PERIODS_RATIO,
            got: 0,
        });
    }
    Ok(out)
}
