//! Verification paths independent of the spline discretization: the Green
//! function of the clamped operator, collocation spectra of atomic weights,
//! and finite-dimensional checks of the determinant bounds for perturbed
//! pencils `1 + D - lambda F`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dense::{jacobi_eigenvalues, numerical_rank};
use crate::pencil::{dense_pencil_eigs, PencilError, DENSE_LIMIT};
use crate::selfsim::AtomicMeasure;

/// Source points closer than this to an end point are rejected.
pub const ENDPOINT_GUARD: f64 = 1e-12;
pub const RANK_THRESHOLD: f64 = 1e-12;
pub const PSD_TOLERANCE: f64 = 1e-12;
pub const BOUND_SLACK: f64 = 1e-9;
pub const BOUND_DIM_LIMIT: usize = 50;
pub const PARTIALS_DIM_LIMIT: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("half-order n must be at least 1")]
    InvalidOrder,
    #[error("IllConditioned: source point {0} is within {ENDPOINT_GUARD:e} of an end point")]
    IllConditioned(f64),
    #[error("point {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("SingularGram: the Green matrix of the atoms is not invertible")]
    SingularGram,
    #[error("too many atoms: {0} exceeds {DENSE_LIMIT}")]
    TooManyAtoms(usize),
    #[error("matrices must be square, symmetric and of equal size")]
    Shape,
    #[error("D is not positive semidefinite (eigenvalue {0})")]
    NotPositiveSemidefinite(f64),
    #[error("dimension {dim} exceeds the limit {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("RankMismatch: expected {rank} finite eigenvalues, got {got}")]
    RankMismatch { rank: usize, got: usize },
    #[error("InsufficientPositiveSpectrum: {count} requested, {available} available")]
    InsufficientPositiveSpectrum { count: usize, available: usize },
    #[error(transparent)]
    Pencil(#[from] PencilError),
}

/// Green function of `(-1)^n d^(2n)/dx^(2n)` with `y^(k)(0) = y^(k)(1) = 0`,
/// `k < n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreenKernel {
    n: usize,
}

/// `G(., s)` as two polynomials in `(x - s)`: `left` for `x < s`, `right`
/// for `x > s`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenPieces {
    pub source: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl GreenPieces {
    pub fn eval(&self, x: f64) -> f64 {
        let coeffs = if x < self.source {
            &self.left
        } else {
            &self.right
        };
        let t = x - self.source;
        coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// `r`-th x-derivative on the given side.
    pub fn derivative(&self, x: f64, r: usize, left_side: bool) -> f64 {
        let coeffs = if left_side { &self.left } else { &self.right };
        let t = x - self.source;
        coeffs
            .iter()
            .enumerate()
            .skip(r)
            .map(|(i, c)| c * falling(i, r) * t.powi((i - r) as i32))
            .sum()
    }
}

/// `i (i-1) ... (i-k+1)`
fn falling(i: usize, k: usize) -> f64 {
    ((i + 1 - k)..=i).map(|v| v as f64).product()
}

impl GreenKernel {
    pub fn new(n: usize) -> Result<Self, OracleError> {
        if n == 0 {
            return Err(OracleError::InvalidOrder);
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves the `4n x 4n` interface system for the source `s`: degree
    /// `2n - 1` on each side, `n` clamped conditions per end, `C^(2n-2)`
    /// matching at `s` and a jump of `(-1)^n` in the derivative of order
    /// `2n - 1`.
    pub fn pieces(&self, s: f64) -> Result<GreenPieces, OracleError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(OracleError::OutOfRange(s));
        }
        if !(ENDPOINT_GUARD..=1.0 - ENDPOINT_GUARD).contains(&s) {
            return Err(OracleError::IllConditioned(s));
        }
        let deg = 2 * self.n;
        let size = 2 * deg;
        let mut a = DMatrix::<f64>::zeros(size, size);
        let mut b = DVector::<f64>::zeros(size);
        let mut row = 0;
        // left piece at x = 0, right piece at x = 1
        for (offset, t) in [(0, -s), (deg, 1.0 - s)] {
            for k in 0..self.n {
                for i in k..deg {
                    a[(row, offset + i)] = falling(i, k) * t.powi((i - k) as i32);
                }
                row += 1;
            }
        }
        // at x = s only the coefficient of (x - s)^k survives the k-th derivative
        for k in 0..deg {
            let scale = falling(k, k);
            a[(row, k)] = -scale;
            a[(row, deg + k)] = scale;
            if k == deg - 1 {
                b[row] = if self.n.is_multiple_of(2) { 1.0 } else { -1.0 };
            }
            row += 1;
        }
        let coeffs = a.lu().solve(&b).ok_or(OracleError::IllConditioned(s))?;
        Ok(GreenPieces {
            source: s,
            left: coeffs.rows(0, deg).iter().copied().collect(),
            right: coeffs.rows(deg, deg).iter().copied().collect(),
        })
    }

    pub fn value(&self, x: f64, s: f64) -> Result<f64, OracleError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(OracleError::OutOfRange(x));
        }
        Ok(self.pieces(s)?.eval(x))
    }
}

pub fn green_value(n: usize, x: f64, s: f64) -> Result<f64, OracleError> {
    GreenKernel::new(n)?.value(x, s)
}

/// Closed form for a single atom `(c, w)`: `lambda = 1 / (w G(c, c))`.
pub fn single_atom_eigenvalue(n: usize, c: f64, w: f64) -> Result<f64, OracleError> {
    Ok(1.0 / (w * green_value(n, c, c)?))
}

/// Closed form of the kernel as a sum of positive terms: for `x <= s`,
/// `G = sum_i C(n-1, i) 2^(n-1-i) / (n+i) u^(n+i) h^(n-1-i) / (2^(4n-2) ((n-1)!)^2)`
/// with `u = 4x(1-s)` and `h = 2(s-x)`. Keeps full relative accuracy near the ends.
pub fn green_closed_form(n: usize, x: f64, s: f64) -> Result<f64, OracleError> {
    if n == 0 {
        return Err(OracleError::InvalidOrder);
    }
    for v in [x, s] {
        if !(0.0..=1.0).contains(&v) {
            return Err(OracleError::OutOfRange(v));
        }
    }
    let (x, s) = if x <= s { (x, s) } else { (s, x) };
    let u = 4.0 * x * (1.0 - s);
    let h = 2.0 * (s - x);
    let mut binom = 1.0;
    let mut sum = 0.0;
    for i in 0..n {
        sum += binom * 2f64.powi((n - 1 - i) as i32) / (n + i) as f64
            * u.powi((n + i) as i32)
            * h.powi((n - 1 - i) as i32);
        binom *= (n - 1 - i) as f64 / (i + 1) as f64;
    }
    let factorial: f64 = (1..n).map(|i| i as f64).product();
    Ok(sum / (2f64.powi(4 * n as i32 - 2) * factorial * factorial))
}

/// Green matrix `G(xi_i, xi_j)` of the atom positions.
pub fn green_gram(n: usize, mu: &AtomicMeasure) -> Result<DMatrix<f64>, OracleError> {
    let xs = mu.positions();
    let mut gram = DMatrix::zeros(xs.len(), xs.len());
    for i in 0..xs.len() {
        for j in 0..=i {
            let g = green_closed_form(n, xs[i], xs[j])?;
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    Ok(gram)
}

/// All eigenvalues of the atomic problem by collocation,
/// `y(xi_i) = lambda sum_j G(xi_i, xi_j) w_j y(xi_j)`, solved through the Cholesky factor
/// of `Gamma`. Ascending.
pub fn green_spectrum(n: usize, mu: &AtomicMeasure) -> Result<Vec<f64>, OracleError> {
    if mu.len() > DENSE_LIMIT {
        return Err(OracleError::TooManyAtoms(mu.len()));
    }
    if mu.is_empty() {
        return Ok(Vec::new());
    }
    let gram = green_gram(n, mu)?;
    // lambda solves G W v = v / lambda; with G = L L^T this is L^T W L u = u / lambda
    let l = nalgebra::Cholesky::new(gram)
        .ok_or(OracleError::SingularGram)?
        .l();
    let weights = DMatrix::from_diagonal(&DVector::from_column_slice(mu.weights()));
    let reduced = l.transpose() * weights * &l;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let nu = jacobi_eigenvalues(&reduced);
    let scale = nu.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut lambdas: Vec<f64> = nu
        .into_iter()
        .filter(|v| v.abs() > RANK_THRESHOLD * scale)
        .map(|v| 1.0 / v)
        .collect();
    lambdas.sort_by(f64::total_cmp);
    Ok(lambdas)
}

/// A finite-dimensional instance of the perturbed pencil pair
/// `1 - lambda F` and `1 + D - lambda F` with `D >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedPair {
    d: DMatrix<f64>,
    f: DMatrix<f64>,
    rank: usize,
}

fn is_symmetric(a: &DMatrix<f64>) -> bool {
    a.is_square() && (a - a.transpose()).abs().max() <= 1e-12 * a.abs().max().max(1.0)
}

impl PerturbedPair {
    pub fn new(d: DMatrix<f64>, f: DMatrix<f64>) -> Result<Self, OracleError> {
        if !is_symmetric(&d) || !is_symmetric(&f) || d.shape() != f.shape() {
            return Err(OracleError::Shape);
        }
        let d_eigs = jacobi_eigenvalues(&d);
        let floor = d_eigs.first().copied().unwrap_or(0.0);
        if floor < -PSD_TOLERANCE * d.abs().max().max(1.0) {
            return Err(OracleError::NotPositiveSemidefinite(floor));
        }
        let rank = numerical_rank(&jacobi_eigenvalues(&f), RANK_THRESHOLD);
        Ok(Self { d, f, rank })
    }

    pub fn dim(&self) -> usize {
        self.d.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    fn unperturbed_eigs(&self) -> Result<Vec<f64>, OracleError> {
        let id = DMatrix::<f64>::identity(self.dim(), self.dim());
        Ok(dense_pencil_eigs(&id, &self.f)?)
    }

    fn perturbed_eigs(&self) -> Result<Vec<f64>, OracleError> {
        let id = DMatrix::<f64>::identity(self.dim(), self.dim());
        Ok(dense_pencil_eigs(&(id + &self.d), &self.f)?)
    }

    pub fn det_one_plus_d(&self) -> f64 {
        (DMatrix::<f64>::identity(self.dim(), self.dim()) + &self.d).determinant()
    }
}

/// Positive eigenvalues ascending and negative eigenvalues descending.
fn split(eigs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut pos: Vec<f64> = eigs.iter().copied().filter(|v| *v > 0.0).collect();
    let mut neg: Vec<f64> = eigs.iter().copied().filter(|v| *v < 0.0).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(|a, b| b.total_cmp(a));
    (pos, neg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantBoundRecord {
    /// Eigenvalues of `1 - lambda F`.
    pub mu: Vec<f64>,
    /// Eigenvalues of `1 + D - lambda F`.
    pub lambda: Vec<f64>,
    pub product: f64,
    pub det: f64,
    /// `product <= det (1 + slack)`
    pub holds: bool,
    /// `lambda_k >= mu_k` on the positive side and `lambda_-k <= mu_-k` on
    /// the negative side, within the slack.
    pub ordered: bool,
}

/// Checks `prod lambda_k / mu_k <= det(1 + D)` over the `rank F` eigenvalues.
pub fn determinant_bound_check(
    inst: &PerturbedPair,
) -> Result<DeterminantBoundRecord, OracleError> {
    if inst.dim() > BOUND_DIM_LIMIT {
        return Err(OracleError::TooLarge {
            dim: inst.dim(),
            limit: BOUND_DIM_LIMIT,
        });
    }
    let mu = inst.unperturbed_eigs()?;
    let lambda = inst.perturbed_eigs()?;
    for got in [mu.len(), lambda.len()] {
        if got != inst.rank {
            return Err(OracleError::RankMismatch {
                rank: inst.rank,
                got,
            });
        }
    }
    let (mu_pos, mu_neg) = split(&mu);
    let (la_pos, la_neg) = split(&lambda);
    if mu_pos.len() != la_pos.len() {
        return Err(OracleError::RankMismatch {
            rank: mu_pos.len(),
            got: la_pos.len(),
        });
    }
    let product: f64 = la_pos
        .iter()
        .zip(&mu_pos)
        .chain(la_neg.iter().zip(&mu_neg))
        .map(|(l, m)| l / m)
        .product();
    let ordered = la_pos
        .iter()
        .zip(&mu_pos)
        .all(|(l, m)| *l >= m * (1.0 - BOUND_SLACK))
        && la_neg
            .iter()
            .zip(&mu_neg)
            .all(|(l, m)| *l <= m * (1.0 - BOUND_SLACK));
    let det = inst.det_one_plus_d();
    Ok(DeterminantBoundRecord {
        holds: product <= det * (1.0 + BOUND_SLACK),
        mu,
        lambda,
        product,
        det,
        ordered,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialProductRecord {
    /// `prod_{k <= r} lambda_k / mu_k`, `r = 1..=count`, positive eigenvalues.
    pub partials: Vec<f64>,
    pub bound: f64,
    pub nondecreasing: bool,
    pub bounded: bool,
}

/// Partial products of `lambda_k / mu_k` over the positive eigenvalues.
pub fn partial_products(
    d: &DMatrix<f64>,
    f: &DMatrix<f64>,
    count: usize,
) -> Result<PartialProductRecord, OracleError> {
    let inst = PerturbedPair::new(d.clone(), f.clone())?;
    if inst.dim() > PARTIALS_DIM_LIMIT {
        return Err(OracleError::TooLarge {
            dim: inst.dim(),
            limit: PARTIALS_DIM_LIMIT,
        });
    }
    let (mu_pos, _) = split(&inst.unperturbed_eigs()?);
    let (la_pos, _) = split(&inst.perturbed_eigs()?);
    let available = mu_pos.len().min(la_pos.len());
    if available < count {
        return Err(OracleError::InsufficientPositiveSpectrum { count, available });
    }
    let partials: Vec<f64> = la_pos
        .iter()
        .zip(&mu_pos)
        .take(count)
        .scan(1.0, |acc, (l, m)| {
            *acc *= l / m;
            Some(*acc)
        })
        .collect();
    let bound = inst.det_one_plus_d();
    let nondecreasing = partials.first().is_none_or(|&p| p >= 1.0 - BOUND_SLACK)
        && partials
            .windows(2)
            .all(|w| w[1] >= w[0] * (1.0 - BOUND_SLACK));
    let bounded = partials.iter().all(|&p| p <= bound * (1.0 + BOUND_SLACK));
    Ok(PartialProductRecord {
        partials,
        bound,
        nondecreasing,
        bounded,
    })
}
