//! Conforming spline space for the clamped problem of order `2n` and the
//! assembly of the pencil matrices.
//!
//! The space consists of splines of degree `2n - 1` with simple interior knots
//! (so `C^(2n-2)` smoothness) on the open knot vector with end multiplicity
//! `2n`. Dropping the first `n` and last `n` B-splines imposes
//! `y^(k)(0) = y^(k)(1) = 0` for `k < n`, which leaves one basis function per
//! interior knot.
//!
//! With knots at the atoms of a point-mass weight, the space contains every
//! eigenfunction of the atomic problem exactly: between atoms those solve
//! `y^(2n) = 0`.

use thiserror::Error;

use crate::banded::BandedSymmetricMatrix;
use crate::quadrature::gauss_legendre;
use crate::selfsim::AtomicMeasure;

/// Minimum separation of knots from each other and from the end points.
pub const KNOT_SEPARATION: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("half-order n must be at least 1")]
    InvalidOrder,
    #[error("EmptySpace: at least one interior knot is required")]
    EmptySpace,
    #[error("KnotCollision: knots {index} and {} are not separated by more than {KNOT_SEPARATION:e}", index + 1)]
    KnotCollision { index: usize },
    #[error("knot {0} is not inside (0, 1)")]
    KnotOutOfRange(f64),
    #[error("DerivativeOrderTooHigh: order {order} exceeds the degree {degree}")]
    DerivativeOrderTooHigh { order: usize, degree: usize },
    #[error("evaluation point {0} is outside [0, 1]")]
    PointOutOfRange(f64),
    #[error("AtomOffKnot: atom at {0} is not a knot of the space")]
    AtomOffKnot(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace {
    n: usize,
    degree: usize,
    interior: Vec<f64>,
    knots: Vec<f64>,
    dim: usize,
    bandwidth: usize,
}

pub fn build_space(n: usize, interior_knots: &[f64]) -> Result<SplineSpace, SplineError> {
    if n == 0 {
        return Err(SplineError::InvalidOrder);
    }
    if interior_knots.is_empty() {
        return Err(SplineError::EmptySpace);
    }
    if let Some(&x) = interior_knots
        .iter()
        .find(|&&x| !(x > KNOT_SEPARATION && x < 1.0 - KNOT_SEPARATION))
    {
        return Err(SplineError::KnotOutOfRange(x));
    }
    if let Some(index) = interior_knots
        .windows(2)
        .position(|w| w[1] - w[0] <= KNOT_SEPARATION)
    {
        return Err(SplineError::KnotCollision { index });
    }

    let degree = 2 * n - 1;
    let mut knots = vec![0.0; degree + 1];
    knots.extend_from_slice(interior_knots);
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    let dim = interior_knots.len();
    Ok(SplineSpace {
        n,
        degree,
        interior: interior_knots.to_vec(),
        knots,
        dim,
        bandwidth: degree.min(dim - 1),
    })
}

impl SplineSpace {
    pub fn new(n: usize, interior_knots: &[f64]) -> Result<Self, SplineError> {
        build_space(n, interior_knots)
    }

    /// Space whose knots are exactly the atom positions.
    pub fn for_measure(n: usize, mu: &AtomicMeasure) -> Result<Self, SplineError> {
        build_space(n, mu.positions())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.interior
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Number of B-splines before the boundary reduction.
    fn full_count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Knot span `s` with `t[s] <= x < t[s+1]`; the last span at `x = 1`.
    fn find_span(&self, x: f64) -> usize {
        let last = self.full_count() - 1;
        if x >= self.knots[last + 1] {
            return last;
        }
        let idx = self.knots.partition_point(|&t| t <= x);
        (idx - 1).clamp(self.degree, last)
    }

    /// Derivatives `0..=order` of the reduced basis at `x`.
    /// `result[r]` lists `(basis index, value)` for the active functions.
    pub fn eval_derivatives(
        &self,
        x: f64,
        order: usize,
    ) -> Result<Vec<Vec<(usize, f64)>>, SplineError> {
        if order > self.degree {
            return Err(SplineError::DerivativeOrderTooHigh {
                order,
                degree: self.degree,
            });
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(SplineError::PointOutOfRange(x));
        }
        let span = self.find_span(x);
        Ok(self.span_derivatives(span, x, order))
    }

    /// `r`-th derivatives of the active reduced basis functions at `x`.
    /// Interior knots use the right limit, `x = 1` the left limit.
    pub fn eval_basis(&self, x: f64, r: usize) -> Result<Vec<(usize, f64)>, SplineError> {
        let mut all = self.eval_derivatives(x, r)?;
        Ok(all.swap_remove(r))
    }

    fn span_derivatives(&self, span: usize, x: f64, order: usize) -> Vec<Vec<(usize, f64)>> {
        let ders = basis_derivatives(&self.knots, self.degree, span, x, order);
        let first = span - self.degree;
        let (lo, hi) = (self.n, self.n + self.dim);
        ders.into_iter()
            .map(|row| {
                row.into_iter()
                    .enumerate()
                    .filter_map(|(j, v)| {
                        let full = first + j;
                        (lo..hi).contains(&full).then(|| (full - lo, v))
                    })
                    .collect()
            })
            .collect()
    }

    /// Nonempty knot spans as `(span index, left, right)`.
    fn spans(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (self.degree..self.full_count())
            .map(|s| (s, self.knots[s], self.knots[s + 1]))
            .filter(|(_, a, b)| b > a)
    }

    /// Index of the interior knot equal to `x` (within `KNOT_SEPARATION`).
    pub fn knot_index(&self, x: f64) -> Option<usize> {
        let idx = self.interior.partition_point(|&t| t < x);
        [idx.checked_sub(1), Some(idx)]
            .into_iter()
            .flatten()
            .find(|&i| i < self.interior.len() && (self.interior[i] - x).abs() <= KNOT_SEPARATION)
    }
}

/// Values and derivatives of the `degree + 1` B-splines active on `span`
/// (Cox–de Boor triangle with the divided-difference derivative recurrence).
fn basis_derivatives(
    knots: &[f64],
    degree: usize,
    span: usize,
    x: f64,
    order: usize,
) -> Vec<Vec<f64>> {
    let p = degree;
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; order + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
    let pi = p as isize;
    for r in 0..=pi {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=order as isize {
            let mut d = 0.0;
            let rk = r - k;
            let pk = pi - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk as usize];
            }
            let j1 = if rk >= -1 { 1 } else { -rk };
            let j2 = if r - 1 <= pk { k - 1 } else { pi - r };
            for j in j1..=j2 {
                let (ju, rkj) = (j as usize, (rk + j) as usize);
                a[s2][ju] = (a[s1][ju] - a[s1][ju - 1]) / ndu[(pk + 1) as usize][rkj];
                d += a[s2][ju] * ndu[rkj][pk as usize];
            }
            if r <= pk {
                let ku = k as usize;
                a[s2][ku] = -a[s1][ku - 1] / ndu[(pk + 1) as usize][r as usize];
                d += a[s2][ku] * ndu[r as usize][pk as usize];
            }
            ders[k as usize][r as usize] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for (k, row) in ders.iter_mut().enumerate().skip(1) {
        for v in row.iter_mut() {
            *v *= factor;
        }
        factor *= (p as f64) - k as f64;
    }
    ders
}

/// Default Gauss points per knot span for the stiffness integrand.
pub fn default_gauss_points(n: usize) -> usize {
    (2 * (n - 1) + 1).div_ceil(2) + 1
}

/// `K_ij = integral of phi_i^(n) phi_j^(n)` over `[0, 1]`.
pub fn assemble_stiffness(space: &SplineSpace) -> BandedSymmetricMatrix {
    assemble_stiffness_with_points(space, default_gauss_points(space.n))
}

pub fn assemble_stiffness_with_points(space: &SplineSpace, points: usize) -> BandedSymmetricMatrix {
    let (nodes, weights) = gauss_legendre(points);
    let mut k = BandedSymmetricMatrix::zeros(space.dim, space.bandwidth);
    for (span, a, b) in space.spans() {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&t, &w) in nodes.iter().zip(&weights) {
            let x = mid + half * t;
            let ders = space.span_derivatives(span, x, space.n);
            let row = &ders[space.n];
            for (p, &(i, vi)) in row.iter().enumerate() {
                for &(j, vj) in &row[..=p] {
                    k.add(i, j, w * half * vi * vj);
                }
            }
        }
    }
    k
}

/// `M_ij = sum over atoms of w phi_i(xi) phi_j(xi)`; every atom must be a knot.
pub fn assemble_weight(
    space: &SplineSpace,
    mu: &AtomicMeasure,
) -> Result<BandedSymmetricMatrix, SplineError> {
    let mut m = BandedSymmetricMatrix::zeros(space.dim, space.bandwidth);
    for (x, w) in mu.iter() {
        if space.knot_index(x).is_none() {
            return Err(SplineError::AtomOffKnot(x));
        }
        let values = space.eval_basis(x, 0)?;
        for (p, &(i, vi)) in values.iter().enumerate() {
            for &(j, vj) in &values[..=p] {
                m.add(i, j, w * vi * vj);
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_value(space: &SplineSpace, x: f64, r: usize, index: usize) -> f64 {
        space
            .eval_basis(x, r)
            .unwrap()
            .into_iter()
            .find(|&(i, _)| i == index)
            .map_or(0.0, |(_, v)| v)
    }

    #[test]
    fn linear_hat() {
        let s = build_space(1, &[0.5]).unwrap();
        assert_eq!((s.degree(), s.dim(), s.bandwidth()), (1, 1, 0));
        assert!((dense_value(&s, 0.5, 0, 0) - 1.0).abs() < 1e-15);
        assert!((dense_value(&s, 0.25, 1, 0) - 2.0).abs() < 1e-14);
        assert!((dense_value(&s, 0.75, 1, 0) + 2.0).abs() < 1e-14);
        assert_eq!(dense_value(&s, 0.0, 0, 0), 0.0);
        assert_eq!(dense_value(&s, 1.0, 0, 0), 0.0);
    }

    #[test]
    fn two_hats() {
        let s = build_space(1, &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert_eq!((s.dim(), s.bandwidth()), (2, 1));
    }

    #[test]
    fn cubic_single_knot_matches_closed_form() {
        // The unique C^2 cubic spline with y = y' = 0 at both ends and a knot at
        // 1/2 is proportional to x^2 (3 - 4x) on [0, 1/2] (mirrored on the right).
        let s = build_space(2, &[0.5]).unwrap();
        assert_eq!(s.dim(), 1);
        let peak = dense_value(&s, 0.5, 0, 0);
        for &x in &[0.1, 0.2, 0.3, 0.45] {
            let expect = peak * x * x * (3.0 - 4.0 * x) / 0.25;
            assert!((dense_value(&s, x, 0, 0) - expect).abs() < 1e-14);
            assert!((dense_value(&s, 1.0 - x, 0, 0) - expect).abs() < 1e-14);
        }
        assert!(peak > 0.0);
    }

    #[test]
    fn clamped_conditions_hold() {
        let knots = [0.1, 0.25, 0.3, 0.6, 0.61, 0.9];
        for n in 1..=3 {
            let s = build_space(n, &knots).unwrap();
            for x in [0.0, 1.0] {
                let ders = s.eval_derivatives(x, n - 1).unwrap();
                for row in &ders {
                    for &(_, v) in row {
                        assert!(v.abs() < 1e-9, "n={n} x={x} v={v}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_knots_and_orders() {
        assert_eq!(build_space(1, &[]), Err(SplineError::EmptySpace));
        assert_eq!(
            build_space(2, &[0.3, 0.3]),
            Err(SplineError::KnotCollision { index: 0 })
        );
        assert_eq!(
            build_space(2, &[1.0]),
            Err(SplineError::KnotOutOfRange(1.0))
        );
        let s = build_space(2, &[0.5]).unwrap();
        assert!(matches!(
            s.eval_basis(0.5, 4),
            Err(SplineError::DerivativeOrderTooHigh {
                order: 4,
                degree: 3
            })
        ));
    }

    #[test]
    fn linear_stiffness_is_classical() {
        let s = build_space(1, &[0.5]).unwrap();
        let k = assemble_stiffness(&s);
        assert!((k.get(0, 0) - 4.0).abs() < 1e-13);

        let s = build_space(1, &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let k = assemble_stiffness(&s);
        assert!((k.get(0, 0) - 6.0).abs() < 1e-12);
        assert!((k.get(1, 1) - 6.0).abs() < 1e-12);
        assert!((k.get(0, 1) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn weight_matrix_of_hats() {
        let s = build_space(1, &[0.5]).unwrap();
        let mu = AtomicMeasure::new(vec![0.5], vec![-2.5]).unwrap();
        assert!((assemble_weight(&s, &mu).unwrap().get(0, 0) + 2.5).abs() < 1e-15);

        let s = build_space(1, &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let mu =
            AtomicMeasure::new(vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let m = assemble_weight(&s, &mu).unwrap();
        assert!((m.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!(m.get(0, 1).abs() < 1e-15);

        let m = assemble_weight(&s, &AtomicMeasure::empty()).unwrap();
        assert_eq!(m.max_abs(), 0.0);
    }

    #[test]
    fn atom_off_knot_is_rejected() {
        let s = build_space(2, &[0.5]).unwrap();
        let mu = AtomicMeasure::new(vec![0.4], vec![1.0]).unwrap();
        assert_eq!(assemble_weight(&s, &mu), Err(SplineError::AtomOffKnot(0.4)));
    }
}
