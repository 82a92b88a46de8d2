//! Unbounded-error protocol from a perfectly private CDQS.
//!
//! Alice holds two copies each of `ρ_{Q̄M}` and `ρ_{Q̄} ⊗ ρ_M`, rotates all four by one Haar
//! unitary, measures, and feeds the outcomes to the collision tester. With probability `s` she
//! skips all that and outputs 0, which biases the 0-inputs the right way.

use serde::Serialize;

use super::ReferenceState;
use crate::error::{Error, Result};
use crate::protocol::CdqsProtocol;

/// Largest 0-input product distance accepted as perfect privacy.
const PRIVACY_TOL: f64 = 1e-8;
/// Allowed deviation of `ρ_{Q̄}` from maximally mixed.
const REFERENCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct PpRow {
    pub x: usize,
    pub y: usize,
    pub f: bool,
    /// `‖ρ_{Q̄M} − ρ_{Q̄} ⊗ ρ_M‖₂²`.
    pub l2_sq: f64,
    /// Probability of outputting `f(x, y)`.
    pub p: f64,
    pub correct_bias: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PpReport {
    pub protocol: String,
    pub eps: f64,
    /// Dimension of `Q̄ ⊗ M₀ ⊗ M₁`.
    pub d: usize,
    pub s0: f64,
    pub s: f64,
    pub rows: Vec<PpRow>,
    pub beta: f64,
    pub qubits: usize,
    pub cost: f64,
    /// Largest entry of `ρ_{Q̄} − I/d_Q` over all inputs.
    pub reference_defect: f64,
    /// Whether `ρ_{Q̄} = I/d_Q` held, so discarding `Q̄` and re-preparing it mixed is exact.
    pub reference_mixed: bool,
    /// Smallest 1-input `‖·‖₂²` and the floor `(3/2 − 2ε)²/d` it must clear.
    pub l2_min: f64,
    pub l2_floor: f64,
    pub valid: bool,
}

/// `s₀ = (3/2 − 2ε)² / (4d(d+1) + (3/2 − 2ε)²)`.
pub fn pp_threshold(eps: f64, d: usize) -> f64 {
    let a = (1.5 - 2.0 * eps).powi(2);
    let d = d as f64;
    a / (4.0 * d * (d + 1.0) + a)
}

/// Runs the reduction with correctness parameter `eps` (the declared one if `None`).
pub fn pp_reduction(p: &CdqsProtocol, eps: Option<f64>) -> Result<PpReport> {
    p.validate()?;
    let eps = eps.unwrap_or(p.declared_eps);
    if !(0.0..0.75).contains(&eps) {
        return Err(Error::Argument(format!("ε = {eps} leaves no correctness gap")));
    }
    let d = p.d_q * p.d_m0() * p.d_m1();
    let s0 = pp_threshold(eps, d);
    let s = s0 / 2.0;
    let l2_floor = (1.5 - 2.0 * eps).powi(2) / d as f64;
    let inputs = p.predicate.inputs();
    let mut rows = Vec::with_capacity(inputs * inputs);
    let mut reference_defect: f64 = 0.0;
    let mut l2_min = f64::INFINITY;
    for x in 0..inputs {
        for y in 0..inputs {
            let f = p.predicate.eval(x, y);
            let st = ReferenceState::new(&p.combined(x, y)?)?;
            reference_defect = reference_defect.max(st.reference_defect());
            let l2_sq = st.product_distance_sq2();
            let accept = 0.5 + l2_sq / (8.0 * (d as f64 + 1.0));
            let p_correct = if f {
                l2_min = l2_min.min(l2_sq);
                (1.0 - s) * accept
            } else {
                let dist = st.product_distance();
                if dist > PRIVACY_TOL {
                    return Err(Error::Precondition(format!(
                        "input ({x}, {y}) is not perfectly private: product distance {dist:.3e}"
                    )));
                }
                s + (1.0 - s) * (1.0 - accept)
            };
            rows.push(PpRow { x, y, f, l2_sq, p: p_correct, correct_bias: p_correct > 0.5 });
        }
    }
    let beta = rows.iter().map(|r| r.p - 0.5).fold(f64::INFINITY, f64::min);
    let qubits = 4 * (crate::protocol::ceil_log2(p.resource.d_r()) + crate::protocol::ceil_log2(p.d_m1()));
    let valid = beta > 0.0 && rows.iter().all(|r| r.correct_bias) && (l2_min.is_infinite() || l2_min >= l2_floor);
    Ok(PpReport {
        protocol: p.name.clone(),
        eps,
        d,
        s0,
        s,
        beta,
        qubits,
        cost: qubits as f64 + (1.0 / beta).log2(),
        reference_mixed: reference_defect <= REFERENCE_TOL,
        reference_defect,
        l2_min,
        l2_floor,
        rows,
        valid,
    })
}
