//! End-to-end discretization: parameters, refinement depth, atoms, spline
//! space and the assembled pencil.

use thiserror::Error;

use crate::pencil::{EigenList, PencilError, SymmetricPencil};
use crate::selfsim::{AtomicMeasure, RefineError, SimilarityParams};
use crate::spline::{assemble_stiffness, assemble_weight, SplineError, SplineSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Pencil(#[from] PencilError),
}

/// Galerkin pencil for `(-1)^n y^(2n) = lambda rho y` with an atomic `rho`.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub measure: AtomicMeasure,
    pub space: SplineSpace,
    pub pencil: SymmetricPencil,
}

impl DiscreteProblem {
    pub fn from_measure(n: usize, measure: AtomicMeasure) -> Result<Self, ProblemError> {
        let space = SplineSpace::for_measure(n, &measure)?;
        let k = assemble_stiffness(&space);
        let m = assemble_weight(&space, &measure)?;
        let pencil = SymmetricPencil::with_sign_bounds(
            k,
            m,
            measure.positive_count(),
            measure.negative_count(),
        )?;
        Ok(Self {
            measure,
            space,
            pencil,
        })
    }

    /// Pencil of the depth-`depth` truncation `P_depth` of the self-similar function.
    pub fn at_depth(params: &SimilarityParams, depth: usize) -> Result<Self, ProblemError> {
        let measure = params.refine(depth)?.atoms();
        Self::from_measure(params.n(), measure)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn spectrum(
        &self,
        pos_count: usize,
        neg_count: usize,
        rel_tol: f64,
    ) -> Result<EigenList, ProblemError> {
        Ok(self.pencil.spectrum(pos_count, neg_count, rel_tol)?)
    }
}
