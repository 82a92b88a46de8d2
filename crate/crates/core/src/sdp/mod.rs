//! Hermitian semidefinite programs and the channel problems built on them.
//!
//! Standard form: optimize `Σ_L ⟨C_L, X_L⟩` over Hermitian blocks `X_L ⪰ 0` subject to real
//! linear constraints `Σ_L ⟨A_{L,i}, X_L⟩ (= | ≤) b_i`, with `⟨A, X⟩ = Re Tr(A X)`.

mod builders;
mod solver;

use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{cr, zeros, ComplexMatrix};

pub use builders::{
    decoder_weights, diamond_norm, diamond_norm_blocks, diamond_norm_channels, diamond_value_at,
    optimal_constant_simulator, optimal_constant_simulator_blocks, optimal_decoder, optimal_decoder_blocks,
    optimal_decoder_fidelity, optimal_discrimination, optimal_discrimination_blocks, DecoderResult, DiamondResult,
    DiscriminationResult, SimulatorResult,
};
pub use solver::solve;
pub use solver::MAX_BLOCK_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
    Unbounded,
}

/// Hermitian operator listed entry by entry (both triangles present).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseHermitian {
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl SparseHermitian {
    pub fn new(entries: Vec<(usize, usize, Complex64)>) -> Self {
        SparseHermitian { entries }
    }

    pub fn diagonal(dim: usize, value: f64) -> Self {
        SparseHermitian { entries: (0..dim).map(|i| (i, i, cr(value))).collect() }
    }

    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)].norm() > 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        SparseHermitian { entries }
    }

    pub fn to_dense(&self, dim: usize) -> ComplexMatrix {
        let mut m = zeros(dim, dim);
        for &(p, q, v) in &self.entries {
            m[(p, q)] += v;
        }
        m
    }

    /// `Re Tr(A Y)`.
    pub fn inner(&self, y: &ComplexMatrix) -> f64 {
        self.entries.iter().map(|&(p, q, v)| (v * y[(q, p)]).re).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub terms: Vec<(usize, SparseHermitian)>,
    pub bound: f64,
    pub relation: Relation,
}

/// Linear maps used to couple blocks inside matrix-valued constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearMap {
    /// `X ↦ X`.
    Identity,
    /// `X ↦ Tr_2 X` for `X` on `d1 ⊗ d2`.
    TraceSecond { d1: usize, d2: usize },
    /// `σ ↦ I_{d1} ⊗ σ` for `σ` on `d2`.
    EmbedSecond { d1: usize, d2: usize },
    /// `t ↦ t·I` for a 1×1 block.
    ScalarIdentity,
}

/// Elements of the real basis of Hermitian `dim × dim` matrices, dual to `X_pp`, `2 Re X_pq`, `2 Im X_pq`.
#[derive(Clone, Copy, Debug)]
enum BasisElement {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

fn hermitian_basis(dim: usize) -> Vec<BasisElement> {
    let mut out = Vec::with_capacity(dim * dim);
    for p in 0..dim {
        out.push(BasisElement::Diag(p));
        for q in (p + 1)..dim {
            out.push(BasisElement::Re(p, q));
            out.push(BasisElement::Im(p, q));
        }
    }
    out
}

impl BasisElement {
    fn entries(self) -> Vec<(usize, usize, Complex64)> {
        match self {
            BasisElement::Diag(p) => vec![(p, p, cr(1.0))],
            BasisElement::Re(p, q) => vec![(p, q, cr(1.0)), (q, p, cr(1.0))],
            BasisElement::Im(p, q) => vec![(p, q, Complex64::new(0.0, 1.0)), (q, p, Complex64::new(0.0, -1.0))],
        }
    }

    /// `Re Tr(A B)` for Hermitian `B`.
    fn pair(self, b: &ComplexMatrix) -> f64 {
        match self {
            BasisElement::Diag(p) => b[(p, p)].re,
            BasisElement::Re(p, q) => 2.0 * b[(p, q)].re,
            BasisElement::Im(p, q) => 2.0 * b[(p, q)].im,
        }
    }
}

/// Adjoint of `map` applied to a basis element, as sparse entries on the variable block.
fn adjoint_entries(map: LinearMap, element: BasisElement) -> Vec<(usize, usize, Complex64)> {
    let base = element.entries();
    match map {
        LinearMap::Identity => base,
        LinearMap::TraceSecond { d2, .. } => {
            let mut out = Vec::with_capacity(base.len() * d2);
            for (p, q, v) in base {
                for s in 0..d2 {
                    out.push((p * d2 + s, q * d2 + s, v));
                }
            }
            out
        }
        LinearMap::EmbedSecond { d2, .. } => {
            let mut out = Vec::new();
            for (p, q, v) in base {
                let (a1, s1) = (p / d2, p % d2);
                let (a2, s2) = (q / d2, q % d2);
                if a1 == a2 {
                    out.push((s1, s2, v));
                }
            }
            out
        }
        LinearMap::ScalarIdentity => {
            let tr: Complex64 = base.iter().filter(|(p, q, _)| p == q).map(|(_, _, v)| *v).sum();
            if tr.norm() > 0.0 {
                vec![(0, 0, tr)]
            } else {
                Vec::new()
            }
        }
    }
}

/// A Hermitian SDP in standard form.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub sense: Sense,
    pub block_dims: Vec<usize>,
    pub objective: Vec<Option<ComplexMatrix>>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        SdpProblem { sense, block_dims: Vec::new(), objective: Vec::new(), constraints: Vec::new() }
    }

    pub fn add_block(&mut self, dim: usize) -> usize {
        self.block_dims.push(dim);
        self.objective.push(None);
        self.block_dims.len() - 1
    }

    pub fn set_objective(&mut self, block: usize, c: ComplexMatrix) {
        self.objective[block] = Some(c);
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, SparseHermitian)>, relation: Relation, bound: f64) -> usize {
        self.constraints.push(Constraint { terms, bound, relation });
        self.constraints.len() - 1
    }

    /// Adds `Σ_t coeff_t · map_t(X_{block_t}) = rhs` as `dim²` real equalities.
    pub fn add_matrix_equality(
        &mut self,
        dim: usize,
        terms: &[(usize, LinearMap, f64)],
        rhs: &ComplexMatrix,
    ) -> Range<usize> {
        let start = self.constraints.len();
        for element in hermitian_basis(dim) {
            let mut cterms = Vec::with_capacity(terms.len());
            for &(block, map, coeff) in terms {
                let entries: Vec<(usize, usize, Complex64)> =
                    adjoint_entries(map, element).into_iter().map(|(p, q, v)| (p, q, v * coeff)).collect();
                if !entries.is_empty() {
                    cterms.push((block, SparseHermitian::new(entries)));
                }
            }
            self.constraints.push(Constraint { terms: cterms, bound: element.pair(rhs), relation: Relation::Eq });
        }
        start..self.constraints.len()
    }

    /// Checks block indices, dimensions and Hermiticity of every operator.
    pub fn validate(&self) -> Result<()> {
        let check = |m: &SparseHermitian, dim: usize, what: &str| -> Result<()> {
            if m.entries.iter().any(|&(p, q, _)| p >= dim || q >= dim) {
                return Err(Error::Argument(format!("{what}: entry outside block of dimension {dim}")));
            }
            let dense = m.to_dense(dim);
            let defect = crate::tensor::hermiticity_defect(&dense);
            if defect > 1e-12 {
                return Err(Error::Argument(format!("{what}: operator not Hermitian (defect {defect:.3e})")));
            }
            Ok(())
        };
        for (b, c) in self.objective.iter().enumerate() {
            if let Some(c) = c {
                if c.nrows() != self.block_dims[b] || crate::tensor::hermiticity_defect(c) > 1e-12 {
                    return Err(Error::Argument(format!("objective block {b} malformed")));
                }
            }
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !con.bound.is_finite() {
                return Err(Error::Argument(format!("constraint {i}: non-finite bound")));
            }
            for (b, m) in &con.terms {
                let dim = *self
                    .block_dims
                    .get(*b)
                    .ok_or_else(|| Error::Argument(format!("constraint {i}: unknown block {b}")))?;
                check(m, dim, &format!("constraint {i}"))?;
            }
        }
        Ok(())
    }
}

/// Hermitian matrix `Σ_k y_k A_k` for the basis used by [`SdpProblem::add_matrix_equality`].
pub fn matrix_from_multipliers(dim: usize, y: &[f64]) -> ComplexMatrix {
    let mut m = zeros(dim, dim);
    for (element, &v) in hermitian_basis(dim).into_iter().zip(y) {
        for (p, q, e) in element.entries() {
            m[(p, q)] += e * v;
        }
    }
    m
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Target relative duality gap and relative feasibility residuals.
    pub tol: f64,
    pub max_iter: usize,
}

/// Environment variable overriding the default iteration cap.
pub const MAX_ITER_ENV: &str = "CDQS_SDP_MAX_ITER";

impl Default for SolverOptions {
    fn default() -> Self {
        let max_iter = std::env::var(MAX_ITER_ENV).ok().and_then(|v| v.parse().ok()).unwrap_or(100);
        SolverOptions { tol: 1e-9, max_iter }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Objective at the returned primal point, in the problem's own sense.
    pub primal_value: f64,
    /// Dual objective: a lower bound for minimization, an upper bound for maximization.
    pub dual_value: f64,
    pub x: Vec<ComplexMatrix>,
    /// Multipliers of the constraints (of the minimization form when the sense is maximize).
    pub y: Vec<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl SdpSolution {
    pub fn relative_gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs() / (1.0 + self.primal_value.abs())
    }

    pub fn require_optimal(&self, what: &str) -> Result<()> {
        match self.status {
            SdpStatus::Optimal => Ok(()),
            s => Err(Error::Solver(format!(
                "{what}: status {s:?} after {} iterations (gap {:.3e}, residuals {:.3e}/{:.3e})",
                self.iterations,
                self.relative_gap(),
                self.primal_residual,
                self.dual_residual
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{ginibre, hermitian_part, identity, max_eigenvalue, rng_from_seed};

    #[test]
    fn max_trace_below_identity() {
        let mut p = SdpProblem::new(Sense::Maximize);
        let x = p.add_block(2);
        let s = p.add_block(2);
        p.set_objective(x, identity(2));
        p.add_matrix_equality(2, &[(x, LinearMap::Identity, 1.0), (s, LinearMap::Identity, 1.0)], &identity(2));
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_value - 2.0).abs() < 1e-7);
        assert!((sol.dual_value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn largest_eigenvalue() {
        let mut rng = rng_from_seed(42);
        for dim in [2, 3, 5] {
            let g = ginibre(dim, dim, &mut rng);
            let h = hermitian_part(&g);
            let mut p = SdpProblem::new(Sense::Maximize);
            let x = p.add_block(dim);
            p.set_objective(x, h.clone());
            p.add_constraint(vec![(x, SparseHermitian::diagonal(dim, 1.0))], Relation::Eq, 1.0);
            let sol = solve(&p, &SolverOptions::default()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            assert!((sol.primal_value - max_eigenvalue(&h)).abs() < 1e-7, "dim {dim}");
            assert!(crate::tensor::min_eigenvalue(&sol.x[0]) > -1e-8);
        }
    }

    #[test]
    fn infeasible_toy() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let x = p.add_block(2);
        p.add_constraint(vec![(x, SparseHermitian::diagonal(2, 1.0))], Relation::Eq, -1.0);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn inequality_constraints_and_lp() {
        // min x0 + 2 x1  s.t.  x0 + x1 ≥ 1 (written as -x0 - x1 ≤ -1), x ≥ 0  → 1.
        let mut p = SdpProblem::new(Sense::Minimize);
        let a = p.add_block(1);
        let b = p.add_block(1);
        p.set_objective(a, identity(1));
        p.set_objective(b, identity(1).scale(2.0));
        p.add_constraint(
            vec![(a, SparseHermitian::diagonal(1, -1.0)), (b, SparseHermitian::diagonal(1, -1.0))],
            Relation::Le,
            -1.0,
        );
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn multiplier_basis_round_trip() {
        let mut rng = rng_from_seed(8);
        let h = hermitian_part(&ginibre(3, 3, &mut rng));
        let coords: Vec<f64> = hermitian_basis(3).into_iter().map(|e| e.pair(&h)).collect();
        // pair() gives ⟨A_k, H⟩; with the basis normalization, Σ_k ⟨A_k,H⟩ A_k / ‖A_k‖² = H.
        let norms: Vec<f64> = hermitian_basis(3)
            .into_iter()
            .map(|e| match e {
                BasisElement::Diag(_) => 1.0,
                _ => 2.0,
            })
            .collect();
        let scaled: Vec<f64> = coords.iter().zip(&norms).map(|(c, n)| c / n).collect();
        assert!((matrix_from_multipliers(3, &scaled) - h).norm() < 1e-12);
    }
}
