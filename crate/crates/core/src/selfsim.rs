//! Self-similar step functions of zero spectral order.
//!
//! A parameter set `(a_k, beta_k, d_k)` defines the similarity operator
//!
//! ```text
//! G(f) = sum_k { beta_k * chi_(alpha_{k-1}, alpha_k) + d_k * f((x - alpha_{k-1}) / a_k) on branch k }
//! ```
//!
//! With exactly one nonzero `d_m`, iterating `G` from `f = 0` produces step
//! functions `P_j` whose jumps are point masses of the weight `rho = P'`.

use thiserror::Error;

/// Tolerance on `sum a_k = 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Breakpoints closer than this are merged.
pub const BREAKPOINT_MERGE: f64 = 1e-13;
/// Jumps below `JUMP_FLOOR * max|beta|` count as exact zeros.
pub const JUMP_FLOOR: f64 = 1e-14;
/// Default refinement depth cap.
pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("half-order n must be at least 1")]
    InvalidOrder,
    #[error("need at least two branches, got {0}")]
    TooFewBranches(usize),
    #[error("parameter lists differ in length: a={a}, beta={beta}, d={d}")]
    LengthMismatch { a: usize, beta: usize, d: usize },
    #[error("SumNotOne: branch lengths sum to {0}, expected 1")]
    SumNotOne(f64),
    #[error("NonPositiveLength: a_{index} = {value} must be positive")]
    NonPositiveLength { index: usize, value: f64 },
    #[error("NotZeroOrder: {0}")]
    NotZeroOrder(String),
    #[error("NotContractive: a_m * d_m^2 = {0} must be below 1")]
    NotContractive(f64),
    #[error("non-finite parameter value")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("DepthOverflow: depth {depth} exceeds the cap {cap}")]
    DepthOverflow { depth: usize, cap: usize },
}

/// Validated similarity parameters. Indices in the accessors are zero-based;
/// `m()` is reported one-based to match the usual branch numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityParams {
    n: usize,
    a: Vec<f64>,
    beta: Vec<f64>,
    d: Vec<f64>,
    m: usize,
    alpha: Vec<f64>,
}

impl SimilarityParams {
    pub fn validate(n: usize, a: &[f64], beta: &[f64], d: &[f64]) -> Result<Self, ParamError> {
        if n == 0 {
            return Err(ParamError::InvalidOrder);
        }
        if a.len() != beta.len() || a.len() != d.len() {
            return Err(ParamError::LengthMismatch {
                a: a.len(),
                beta: beta.len(),
                d: d.len(),
            });
        }
        let branches = a.len();
        if branches < 2 {
            return Err(ParamError::TooFewBranches(branches));
        }
        if a.iter().chain(beta).chain(d).any(|v| !v.is_finite()) {
            return Err(ParamError::NonFinite);
        }
        if let Some((index, &value)) = a.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(ParamError::NonPositiveLength {
                index: index + 1,
                value,
            });
        }
        let total: f64 = a.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(ParamError::SumNotOne(total));
        }
        let nonzero: Vec<usize> = (0..branches).filter(|&k| d[k] != 0.0).collect();
        if nonzero.len() != 1 {
            return Err(ParamError::NotZeroOrder(format!(
                "exactly one d_k must be nonzero, found {}",
                nonzero.len()
            )));
        }
        if beta.iter().all(|&b| b == 0.0) {
            return Err(ParamError::NotZeroOrder(
                "at least one beta_k must be nonzero".into(),
            ));
        }
        let m = nonzero[0];
        let contraction = a[m] * d[m] * d[m];
        if contraction >= 1.0 {
            return Err(ParamError::NotContractive(contraction));
        }

        let mut alpha = Vec::with_capacity(branches + 1);
        alpha.push(0.0);
        let mut acc = 0.0;
        for &len in &a[..branches - 1] {
            acc += len;
            alpha.push(acc);
        }
        alpha.push(1.0);

        Ok(Self {
            n,
            a: a.to_vec(),
            beta: beta.to_vec(),
            d: d.to_vec(),
            m: m + 1,
            alpha,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn branches(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// One-based index of the unique branch with `d_m != 0`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Partition points `alpha_0 = 0 < alpha_1 < ... < alpha_N = 1`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn a_m(&self) -> f64 {
        self.a[self.m - 1]
    }

    pub fn d_m(&self) -> f64 {
        self.d[self.m - 1]
    }

    /// Spectral ratio `a_m^(2n-1) * d_m`.
    pub fn ratio_q(&self) -> f64 {
        self.a_m().powi(2 * self.n as i32 - 1) * self.d_m()
    }

    /// `sqrt(sum a_k d_k^2)`, the Lipschitz constant of `G` in `L2`.
    pub fn contraction_l2(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.d)
            .map(|(a, d)| a * d * d)
            .sum::<f64>()
            .sqrt()
    }

    fn jump_floor(&self) -> f64 {
        JUMP_FLOOR * self.beta.iter().fold(0.0_f64, |acc, b| acc.max(b.abs()))
    }

    pub fn structure(&self) -> StructureReport {
        structure(self)
    }

    pub fn refine(&self, depth: usize) -> Result<RefinedWeight, RefineError> {
        refine_with_cap(self, depth, DEFAULT_MAX_DEPTH)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub zeta: Vec<f64>,
    pub z_plus: usize,
    pub z_minus: usize,
    pub nondegenerate: bool,
    pub ratio_q: f64,
    pub contraction_l2: f64,
}

/// First-level jump magnitudes `zeta_k` (k = 1..N-1) and their sign counts.
///
/// The rows `k = m-1` and `k = m` carry the corrections from the rescaled copy
/// on branch `m`; when `m = 1` or `m = N` the corresponding row does not exist.
pub fn structure(params: &SimilarityParams) -> StructureReport {
    let branches = params.branches();
    let m = params.m();
    let beta = params.beta();
    let d_m = params.d_m();
    // one-based accessor
    let b = |k: usize| beta[k - 1];

    let zeta: Vec<f64> = (1..branches)
        .map(|k| {
            if k + 1 == m {
                b(m) - b(m - 1) + d_m * b(1)
            } else if k == m {
                b(m + 1) - b(m) - d_m * b(branches)
            } else {
                b(k + 1) - b(k)
            }
        })
        .collect();

    let floor = params.jump_floor();
    let z_plus = zeta.iter().filter(|&&z| z > floor).count();
    let z_minus = zeta.iter().filter(|&&z| z < -floor).count();

    StructureReport {
        nondegenerate: z_plus + z_minus == branches - 1,
        zeta,
        z_plus,
        z_minus,
        ratio_q: params.ratio_q(),
        contraction_l2: params.contraction_l2(),
    }
}

/// Exact piecewise-constant representation of `P_j = G^j(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedWeight {
    pub depth: usize,
    /// Cell boundaries, `breakpoints[0] = 0`, last entry `1`.
    pub breakpoints: Vec<f64>,
    /// Value of `P_j` on each cell.
    pub values: Vec<f64>,
    jump_floor: f64,
}

impl RefinedWeight {
    pub fn cells(&self) -> usize {
        self.values.len()
    }

    /// Value at `x`, using the cell that contains `x` (right-continuous).
    pub fn value_at(&self, x: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        let cell = idx.saturating_sub(1).min(self.values.len() - 1);
        self.values[cell]
    }

    /// `L2` distance between two step functions on `[0, 1]`.
    pub fn l2_distance(&self, other: &RefinedWeight) -> f64 {
        let mut grid: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let diff = self.value_at(mid) - other.value_at(mid);
                diff * diff * (w[1] - w[0])
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn atoms(&self) -> AtomicMeasure {
        atoms(self)
    }
}

pub fn refine(params: &SimilarityParams, depth: usize) -> Result<RefinedWeight, RefineError> {
    refine_with_cap(params, depth, DEFAULT_MAX_DEPTH)
}

pub fn refine_with_cap(
    params: &SimilarityParams,
    depth: usize,
    cap: usize,
) -> Result<RefinedWeight, RefineError> {
    if depth > cap {
        return Err(RefineError::DepthOverflow { depth, cap });
    }
    let mut breakpoints = vec![0.0, 1.0];
    let mut values = vec![0.0];
    for _ in 0..depth {
        (breakpoints, values) = apply_similarity(params, &breakpoints, &values);
    }
    Ok(RefinedWeight {
        depth,
        breakpoints,
        values,
        jump_floor: params.jump_floor(),
    })
}

/// One application of `G` to a step function.
fn apply_similarity(
    params: &SimilarityParams,
    breakpoints: &[f64],
    values: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let alpha = params.alpha();
    let m = params.m() - 1;
    let mut new_breaks = Vec::with_capacity(breakpoints.len() + params.branches());
    let mut new_values = Vec::with_capacity(values.len() + params.branches());
    new_breaks.push(0.0);
    for k in 0..params.branches() {
        if k == m {
            let (start, len) = (alpha[k], params.a()[k]);
            let (beta, d) = (params.beta()[k], params.d()[k]);
            for (cell, &v) in values.iter().enumerate() {
                let right = if cell + 1 == values.len() {
                    alpha[k + 1]
                } else {
                    start + len * breakpoints[cell + 1]
                };
                new_breaks.push(right);
                new_values.push(beta + d * v);
            }
        } else {
            new_breaks.push(alpha[k + 1]);
            new_values.push(params.beta()[k]);
        }
    }
    drop_slivers(&mut new_breaks, &mut new_values);
    (new_breaks, new_values)
}

/// Removes cells narrower than `BREAKPOINT_MERGE`. The jumps on either side of
/// a removed cell add up to the single jump that replaces them.
fn drop_slivers(breaks: &mut Vec<f64>, values: &mut Vec<f64>) {
    let mut cell = 0;
    while cell < values.len() && values.len() > 1 {
        if breaks[cell + 1] - breaks[cell] < BREAKPOINT_MERGE {
            values.remove(cell);
            // keep the outer endpoints fixed at 0 and 1
            if cell + 1 == breaks.len() - 1 {
                breaks.remove(cell);
            } else {
                breaks.remove(cell + 1);
            }
        } else {
            cell += 1;
        }
    }
}

/// Finite list of interior point masses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicMeasure {
    positions: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("positions and weights differ in length")]
    LengthMismatch,
    #[error("atom positions must be strictly increasing inside (0, 1)")]
    BadPosition,
    #[error("atom weights must be finite and nonzero")]
    BadWeight,
}

impl AtomicMeasure {
    pub fn new(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self, MeasureError> {
        if positions.len() != weights.len() {
            return Err(MeasureError::LengthMismatch);
        }
        let inside = positions.iter().all(|&x| x > 0.0 && x < 1.0);
        let increasing = positions.windows(2).all(|w| w[0] < w[1]);
        if !inside || !increasing {
            return Err(MeasureError::BadPosition);
        }
        if weights.iter().any(|w| *w == 0.0 || !w.is_finite()) {
            return Err(MeasureError::BadWeight);
        }
        Ok(Self { positions, weights })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.positions
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn positive_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn negative_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w < 0.0).count()
    }

    /// Weight of the atom at `x`, if any lies within `BREAKPOINT_MERGE`.
    pub fn weight_at(&self, x: f64) -> Option<f64> {
        self.iter()
            .find(|(p, _)| (p - x).abs() < BREAKPOINT_MERGE)
            .map(|(_, w)| w)
    }

    /// The same atoms with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            positions: self.positions.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }
}

/// Interior jumps of `P_j` as point masses (`right value - left value`).
pub fn atoms(w: &RefinedWeight) -> AtomicMeasure {
    let mut positions: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let interior = w.breakpoints.len().saturating_sub(1);
    for i in 1..interior {
        let x = w.breakpoints[i];
        let jump = w.values[i] - w.values[i - 1];
        match positions.last() {
            Some(&last) if x - last < BREAKPOINT_MERGE => {
                *weights.last_mut().unwrap() += jump;
            }
            _ => {
                positions.push(x);
                weights.push(jump);
            }
        }
    }
    let (positions, weights) = positions
        .into_iter()
        .zip(weights)
        .filter(|&(x, jump)| jump.abs() >= w.jump_floor && jump != 0.0 && x > 0.0 && x < 1.0)
        .unzip();
    AtomicMeasure { positions, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> SimilarityParams {
        let third = 1.0 / 3.0;
        SimilarityParams::validate(
            2,
            &[third, third, third],
            &[0.0, 2.0 / 3.0, 1.0],
            &[0.0, 0.0, 0.5],
        )
        .unwrap()
    }

    fn table2() -> SimilarityParams {
        let third = 1.0 / 3.0;
        SimilarityParams::validate(2, &[third; 3], &[0.0, -1.0, 0.0], &[0.0, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn table1_params_validate() {
        let p = table1();
        assert_eq!(p.m(), 3);
        assert_eq!(p.branches(), 3);
        let expected = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, e) in p.alpha().iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_sum() {
        let err = SimilarityParams::validate(2, &[0.5, 0.25], &[0.0, 1.0], &[0.0, 0.5]);
        assert!(matches!(err, Err(ParamError::SumNotOne(_))));
    }

    #[test]
    fn rejects_two_scalings() {
        let third = 1.0 / 3.0;
        let err = SimilarityParams::validate(2, &[third; 3], &[0.0, 1.0, 0.0], &[0.5, 0.0, 0.5]);
        assert!(matches!(err, Err(ParamError::NotZeroOrder(_))));
    }

    #[test]
    fn rejects_all_zero_beta_and_nonpositive_length() {
        let err = SimilarityParams::validate(1, &[0.5, 0.5], &[0.0, 0.0], &[0.0, 0.5]);
        assert!(matches!(err, Err(ParamError::NotZeroOrder(_))));
        let err = SimilarityParams::validate(1, &[1.5, -0.5], &[0.0, 1.0], &[0.0, 0.5]);
        assert!(matches!(
            err,
            Err(ParamError::NonPositiveLength { index: 2, .. })
        ));
    }

    #[test]
    fn rejects_non_contraction() {
        // a_m d_m^2 = 0.5 * 4 = 2
        let err = SimilarityParams::validate(1, &[0.5, 0.5], &[0.0, 1.0], &[0.0, 2.0]);
        assert!(matches!(err, Err(ParamError::NotContractive(_))));
    }

    #[test]
    fn structure_of_published_examples() {
        let s = table1().structure();
        assert!((s.zeta[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.zeta[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!((s.z_plus, s.z_minus), (2, 0));
        assert!(s.nondegenerate);
        assert!((s.ratio_q - 1.0 / 54.0).abs() < 1e-16);

        let s = table2().structure();
        assert_eq!(s.zeta, vec![-1.0, 1.0]);
        assert_eq!((s.z_plus, s.z_minus), (1, 1));
    }

    #[test]
    fn degenerate_structure_is_flagged() {
        // m = 1: zeta_1 = beta_2 - beta_1 - d_1 beta_2 = 2 - 1 - 1 = 0
        let p = SimilarityParams::validate(1, &[0.5, 0.5], &[1.0, 2.0], &[0.5, 0.0]).unwrap();
        let s = p.structure();
        assert_eq!(s.zeta, vec![0.0]);
        assert_eq!((s.z_plus, s.z_minus), (0, 0));
        assert!(!s.nondegenerate);
    }

    #[test]
    fn refine_depths_zero_to_two() {
        let p = table1();
        let w0 = p.refine(0).unwrap();
        assert_eq!(w0.breakpoints, vec![0.0, 1.0]);
        assert_eq!(w0.values, vec![0.0]);

        let w1 = p.refine(1).unwrap();
        assert_eq!(w1.values, vec![0.0, 2.0 / 3.0, 1.0]);

        let w2 = p.refine(2).unwrap();
        let expected = [0.0, 2.0 / 3.0, 1.0, 4.0 / 3.0, 1.5];
        assert_eq!(w2.cells(), 5);
        for (v, e) in w2.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-15);
        }
        let breaks = [0.0, 1.0 / 3.0, 2.0 / 3.0, 7.0 / 9.0, 8.0 / 9.0, 1.0];
        for (b, e) in w2.breakpoints.iter().zip(breaks) {
            assert!((b - e).abs() < 1e-15);
        }
    }

    #[test]
    fn depth_cap_is_enforced() {
        let p = table1();
        assert!(matches!(
            refine_with_cap(&p, 5, 4),
            Err(RefineError::DepthOverflow { depth: 5, cap: 4 })
        ));
        assert!(p.refine(DEFAULT_MAX_DEPTH).is_ok());
        assert!(p.refine(DEFAULT_MAX_DEPTH + 1).is_err());
    }

    #[test]
    fn atoms_from_refinements() {
        let p = table1();
        let mu = p.refine(1).unwrap().atoms();
        assert_eq!(mu.len(), 2);
        assert!((mu.positions()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((mu.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((mu.weights()[1] - 1.0 / 3.0).abs() < 1e-15);

        let mu = p.refine(2).unwrap().atoms();
        let expected = [
            (1.0 / 3.0, 2.0 / 3.0),
            (2.0 / 3.0, 1.0 / 3.0),
            (7.0 / 9.0, 1.0 / 3.0),
            (8.0 / 9.0, 1.0 / 6.0),
        ];
        assert_eq!(mu.len(), 4);
        for ((x, w), (ex, ew)) in mu.iter().zip(expected) {
            assert!((x - ex).abs() < 1e-15);
            assert!((w - ew).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_beta_gives_no_atoms_at_depth_one() {
        let p = SimilarityParams::validate(1, &[0.5, 0.5], &[0.7, 0.7], &[0.0, 0.5]).unwrap();
        assert!(p.refine(1).unwrap().atoms().is_empty());
    }

    #[test]
    fn deep_refinement_stays_sorted_and_interior() {
        let p = table1();
        let w = p.refine(DEFAULT_MAX_DEPTH).unwrap();
        assert!(w
            .breakpoints
            .windows(2)
            .all(|b| b[1] - b[0] >= BREAKPOINT_MERGE));
        assert_eq!(*w.breakpoints.last().unwrap(), 1.0);
        let mu = w.atoms();
        assert!(mu.positions().iter().all(|&x| x > 0.0 && x < 1.0));
        assert!(mu.positions().windows(2).all(|x| x[0] < x[1]));
    }

    #[test]
    fn measure_constructor_checks() {
        assert!(AtomicMeasure::new(vec![0.5], vec![1.0]).is_ok());
        assert_eq!(
            AtomicMeasure::new(vec![0.5, 0.4], vec![1.0, 1.0]),
            Err(MeasureError::BadPosition)
        );
        assert_eq!(
            AtomicMeasure::new(vec![1.0], vec![1.0]),
            Err(MeasureError::BadPosition)
        );
        assert_eq!(
            AtomicMeasure::new(vec![0.5], vec![0.0]),
            Err(MeasureError::BadWeight)
        );
    }
}
