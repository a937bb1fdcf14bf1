//! Spectrum slicing for the symmetric pencil `K - lambda M`.
//!
//! `K` is positive definite, `M` is symmetric and may be indefinite or
//! singular. For real `lambda`, the number of negative pivots of the `LDL^T`
//! factorization of `K - lambda M` (its negative inertia index) equals the
//! number of pencil eigenvalues strictly between `0` and `lambda`. Bisection on
//! that count isolates eigenvalues by signed index: `+1, +2, ...` ascend from
//! zero, `-1, -2, ...` descend from zero.

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::banded::BandedSymmetricMatrix;
use crate::dense::{congruence_by_inverse, jacobi_eigenvalues};

/// Pivot threshold relative to the largest entry of the pivot's row.
pub const PIVOT_THRESHOLD: f64 = 1e-14;
/// Pivots below this relative size raise `InertiaResult::zero_flag`.
pub const NEAR_SINGULAR: f64 = 1e-8;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const MIN_REL_TOL: f64 = 1e-14;
/// Largest pencil handled by `dense_eigs`.
/// Narrowest certification bracket; inertia counts are unreliable below it.
pub const CERTIFY_FLOOR: f64 = 1e-8;
pub const DENSE_LIMIT: usize = 200;
/// Relative size below which a reduced eigenvalue counts as an infinite
/// pencil eigenvalue.
pub const DENSE_RANK_THRESHOLD: f64 = 1e-13;
const MAX_SHIFT_RETRIES: usize = 16;
/// Lambda magnitudes beyond this are treated as the end of the spectrum.
const LAMBDA_CEILING: f64 = 1e280;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PencilError {
    #[error("matrix dimensions differ: K is {k}, M is {m}")]
    DimensionMismatch { k: usize, m: usize },
    #[error("K is not positive definite")]
    NotPositiveDefinite,
    #[error("SingularShift: lambda = {0} is numerically an eigenvalue")]
    SingularShift(f64),
    #[error("invalid interval ({lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("index must be nonzero")]
    ZeroIndex,
    #[error("relative tolerance {0} is below {MIN_REL_TOL:e}")]
    ToleranceTooSmall(f64),
    #[error("IndexBeyondSpectrum: requested {requested_pos} positive / {requested_neg} negative, available {available_pos} / {available_neg}")]
    IndexBeyondSpectrum {
        requested_pos: usize,
        requested_neg: usize,
        available_pos: usize,
        available_neg: usize,
    },
    #[error("DimensionTooLarge: {0} exceeds the dense limit {DENSE_LIMIT}")]
    DimensionTooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Positive => "pos",
            Side::Negative => "neg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaResult {
    pub lambda: f64,
    pub neg_count: usize,
    pub zero_flag: bool,
}

/// Eigenvalues by signed index.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenList {
    /// `lambda_1 <= lambda_2 <= ...`
    pub positive: Vec<f64>,
    /// `lambda_{-1} >= lambda_{-2} >= ...`
    pub negative: Vec<f64>,
    pub rel_tol: f64,
    pub certified: bool,
}

impl EigenList {
    /// Eigenvalue with signed index (`+1` smallest positive, `-1` largest negative).
    pub fn get(&self, index: i64) -> Option<f64> {
        match index {
            0 => None,
            i if i > 0 => self.positive.get(i as usize - 1).copied(),
            i => self.negative.get(i.unsigned_abs() as usize - 1).copied(),
        }
    }

    pub fn side(&self, side: Side) -> &[f64] {
        match side {
            Side::Positive => &self.positive,
            Side::Negative => &self.negative,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SymmetricPencil {
    k: BandedSymmetricMatrix,
    m: BandedSymmetricMatrix,
    /// Upper bounds on the number of positive / negative eigenvalues.
    bound_pos: usize,
    bound_neg: usize,
}

impl SymmetricPencil {
    pub fn new(k: BandedSymmetricMatrix, m: BandedSymmetricMatrix) -> Result<Self, PencilError> {
        let dim = k.dim();
        Self::with_sign_bounds(k, m, dim, dim)
    }

    /// Pencil with known upper bounds on the positive and negative eigenvalue
    /// counts (for `M = sum w v v^T`, the numbers of positive and negative
    /// weights).
    pub fn with_sign_bounds(
        k: BandedSymmetricMatrix,
        m: BandedSymmetricMatrix,
        bound_pos: usize,
        bound_neg: usize,
    ) -> Result<Self, PencilError> {
        if k.dim() != m.dim() {
            return Err(PencilError::DimensionMismatch {
                k: k.dim(),
                m: m.dim(),
            });
        }
        let bw = k.bandwidth().max(m.bandwidth());
        let (k, m) = (k.widened(bw), m.widened(bw));
        match k.ldlt_inertia(PIVOT_THRESHOLD) {
            Ok(inertia) if inertia.negative == 0 => {}
            _ => return Err(PencilError::NotPositiveDefinite),
        }
        let dim = k.dim();
        let zero_m = m.max_abs() == 0.0;
        Ok(Self {
            bound_pos: if zero_m { 0 } else { bound_pos.min(dim) },
            bound_neg: if zero_m { 0 } else { bound_neg.min(dim) },
            k,
            m,
        })
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub fn stiffness(&self) -> &BandedSymmetricMatrix {
        &self.k
    }

    pub fn weight(&self) -> &BandedSymmetricMatrix {
        &self.m
    }

    /// Negative inertia index of `K - lambda M`.
    pub fn inertia(&self, lambda: f64) -> Result<InertiaResult, PencilError> {
        let shifted = self.k.shifted(lambda, &self.m);
        let ldlt = shifted
            .ldlt_inertia(PIVOT_THRESHOLD)
            .map_err(|_| PencilError::SingularShift(lambda))?;
        Ok(InertiaResult {
            lambda,
            neg_count: ldlt.negative,
            zero_flag: ldlt.min_relative_pivot < NEAR_SINGULAR,
        })
    }

    /// Number of eigenvalues in `(lo, hi]`.
    pub fn count_interval(&self, lo: f64, hi: f64) -> Result<usize, PencilError> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(PencilError::InvalidInterval { lo, hi });
        }
        let ind = |lambda: f64| -> Result<usize, PencilError> {
            if lambda == 0.0 {
                Ok(0)
            } else {
                Ok(self.inertia(lambda)?.neg_count)
            }
        };
        let (a, b) = (ind(lo)?, ind(hi)?);
        Ok(if lo >= 0.0 {
            b - a.min(b)
        } else if hi <= 0.0 {
            a - b.min(a)
        } else {
            a + b
        })
    }

    /// Count of eigenvalues on `side` with magnitude below `t > 0`, perturbing
    /// `t` slightly when the shift is numerically singular.
    fn side_count(&self, side: Side, t: f64, rel_tol: f64) -> Result<usize, PencilError> {
        let mut shift = t;
        for attempt in 0..MAX_SHIFT_RETRIES {
            match self.inertia(side.sign() * shift) {
                Ok(r) => return Ok(r.neg_count),
                Err(PencilError::SingularShift(_)) => {
                    let step = rel_tol * 0.125 * 2f64.powi(attempt as i32 / 2);
                    let dir = if attempt % 2 == 0 { 1.0 } else { -1.0 };
                    shift = t * (1.0 + dir * step);
                }
                Err(e) => return Err(e),
            }
        }
        Err(PencilError::SingularShift(side.sign() * t))
    }

    /// Count at a split point of `(lo, hi)`, moving off the midpoint when it is singular.
    fn split_count(
        &self,
        side: Side,
        lo: f64,
        hi: f64,
        rel_tol: f64,
    ) -> Result<Option<(f64, usize)>, PencilError> {
        for fraction in [0.5, 0.45, 0.55, 0.35, 0.65, 0.2, 0.8] {
            let split = lo + fraction * (hi - lo);
            if split <= lo || split >= hi {
                continue;
            }
            match self.side_count(side, split, rel_tol) {
                Ok(count) => return Ok(Some((split, count))),
                Err(PencilError::SingularShift(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }

    fn starting_magnitude(&self) -> f64 {
        let mk = self.k.max_abs();
        let mm = self.m.max_abs();
        if mm > 0.0 {
            mk / mm
        } else {
            1.0
        }
    }

    /// Number of eigenvalues on `side` (all of them, up to the sign bound).
    pub fn available(&self, side: Side) -> Result<usize, PencilError> {
        let bound = match side {
            Side::Positive => self.bound_pos,
            Side::Negative => self.bound_neg,
        };
        if bound == 0 {
            return Ok(0);
        }
        let mut t = self.starting_magnitude();
        let mut count = self.side_count(side, t, DEFAULT_REL_TOL)?;
        while count < bound && t < LAMBDA_CEILING {
            t *= 2.0;
            count = self.side_count(side, t, DEFAULT_REL_TOL)?;
        }
        Ok(count)
    }

    fn beyond(&self, side: Side, requested: usize) -> PencilError {
        let pos = self.available(Side::Positive).unwrap_or(0);
        let neg = self.available(Side::Negative).unwrap_or(0);
        let (requested_pos, requested_neg) = match side {
            Side::Positive => (requested, 0),
            Side::Negative => (0, requested),
        };
        PencilError::IndexBeyondSpectrum {
            requested_pos,
            requested_neg,
            available_pos: pos,
            available_neg: neg,
        }
    }

    /// Eigenvalue with signed `index` by bisection on inertia counts; the
    /// returned value is the midpoint of a bracket of relative width `rel_tol`.
    pub fn eig_by_index(&self, index: i64, rel_tol: f64) -> Result<f64, PencilError> {
        if index == 0 {
            return Err(PencilError::ZeroIndex);
        }
        if rel_tol.is_nan() || rel_tol < MIN_REL_TOL {
            return Err(PencilError::ToleranceTooSmall(rel_tol));
        }
        let side = if index > 0 {
            Side::Positive
        } else {
            Side::Negative
        };
        let wanted = index.unsigned_abs() as usize;
        let bound = match side {
            Side::Positive => self.bound_pos,
            Side::Negative => self.bound_neg,
        };
        if wanted > bound {
            return Err(self.beyond(side, wanted));
        }

        // bracket: count(lo) < wanted <= count(hi)
        let mut t = self.starting_magnitude();
        let (mut lo, mut hi);
        if self.side_count(side, t, rel_tol)? >= wanted {
            hi = t;
            lo = t * 0.5;
            while self.side_count(side, lo, rel_tol)? >= wanted {
                hi = lo;
                lo *= 0.5;
                if lo < f64::MIN_POSITIVE {
                    return Ok(side.sign() * hi);
                }
            }
        } else {
            loop {
                t *= 2.0;
                if t > LAMBDA_CEILING {
                    return Err(self.beyond(side, wanted));
                }
                if self.side_count(side, t, rel_tol)? >= wanted {
                    break;
                }
            }
            lo = t * 0.5;
            hi = t;
        }
        while hi - lo > rel_tol * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let Some((split, count)) = self.split_count(side, lo, hi, rel_tol)? else {
                // every split point is numerically singular: the bracket sits on the eigenvalue
                break;
            };
            if count >= wanted {
                hi = split;
            } else {
                lo = split;
            }
        }
        Ok(side.sign() * 0.5 * (lo + hi))
    }

    /// The first `pos_count` positive and `neg_count` negative eigenvalues.
    pub fn spectrum(
        &self,
        pos_count: usize,
        neg_count: usize,
        rel_tol: f64,
    ) -> Result<EigenList, PencilError> {
        let available_pos = if pos_count > 0 {
            self.available(Side::Positive)?
        } else {
            0
        };
        let available_neg = if neg_count > 0 {
            self.available(Side::Negative)?
        } else {
            0
        };
        if pos_count > available_pos || neg_count > available_neg {
            return Err(PencilError::IndexBeyondSpectrum {
                requested_pos: pos_count,
                requested_neg: neg_count,
                available_pos: self.available(Side::Positive)?,
                available_neg: self.available(Side::Negative)?,
            });
        }
        let indices: Vec<i64> = (1..=pos_count as i64)
            .chain((1..=neg_count as i64).map(|i| -i))
            .collect();
        let values = indices
            .par_iter()
            .map(|&i| self.eig_by_index(i, rel_tol))
            .collect::<Result<Vec<f64>, PencilError>>()?;
        let (positive, negative) = values.split_at(pos_count);
        let mut list = EigenList {
            positive: positive.to_vec(),
            negative: negative.to_vec(),
            rel_tol,
            certified: false,
        };
        list.certified = self.certify(&list)?;
        Ok(list)
    }

    /// Every listed eigenvalue lies in a bracket of relative half-width
    /// `max(4 rel_tol, CERTIFY_FLOOR)` whose inertia jump covers its multiplicity.
    fn certify(&self, list: &EigenList) -> Result<bool, PencilError> {
        let eps = (4.0 * list.rel_tol).max(CERTIFY_FLOOR);
        for (side, values) in [
            (Side::Positive, &list.positive),
            (Side::Negative, &list.negative),
        ] {
            for (k, &v) in values.iter().enumerate() {
                let t = v.abs();
                let below = self.side_count(side, t * (1.0 - eps), list.rel_tol)?;
                let above = self.side_count(side, t * (1.0 + eps), list.rel_tol)?;
                if !(below <= k && above > k) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// All finite eigenvalues in ascending order through the Cholesky
    /// reduction `L^{-1} M L^{-T}` and cyclic Jacobi.
    pub fn dense_eigs(&self) -> Result<Vec<f64>, PencilError> {
        dense_pencil_eigs(&self.k.to_dense(), &self.m.to_dense())
    }
}

/// Finite eigenvalues of the dense pencil `(K, M)` with `K` positive definite.
pub fn dense_pencil_eigs(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>, PencilError> {
    let dim = k.nrows();
    if dim > DENSE_LIMIT {
        return Err(PencilError::DimensionTooLarge(dim));
    }
    if m.nrows() != dim {
        return Err(PencilError::DimensionMismatch {
            k: dim,
            m: m.nrows(),
        });
    }
    let chol = nalgebra::Cholesky::new(k.clone()).ok_or(PencilError::NotPositiveDefinite)?;
    let reduced = congruence_by_inverse(&chol.l(), m);
    let nu = jacobi_eigenvalues(&reduced);
    let scale = nu.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut lambdas: Vec<f64> = nu
        .into_iter()
        .filter(|v| v.abs() > DENSE_RANK_THRESHOLD * scale && *v != 0.0)
        .map(|v| 1.0 / v)
        .collect();
    lambdas.sort_by(f64::total_cmp);
    Ok(lambdas)
}

/// Splits an ascending list of eigenvalues into an `EigenList`.
pub fn split_by_sign(ascending: &[f64], rel_tol: f64) -> EigenList {
    let mut positive: Vec<f64> = ascending.iter().copied().filter(|v| *v > 0.0).collect();
    let mut negative: Vec<f64> = ascending.iter().copied().filter(|v| *v < 0.0).collect();
    positive.sort_by(f64::total_cmp);
    negative.sort_by(|a, b| b.total_cmp(a));
    EigenList {
        positive,
        negative,
        rel_tol,
        certified: false,
    }
}
