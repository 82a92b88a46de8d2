//! Communication-complexity reductions driven by CDQS protocols: one-way tomography, the PP
//! distinguisher, a two-message interactive proof and its zero-knowledge simulation.

mod l2;
mod oneway;
mod pp;
mod qip;

pub use l2::{
    haar_l2_identity_check, l2_closed_form, l2_distinguisher_exact, l2_distinguisher_probability, l2_distinguisher_run,
    l2_distinguisher_sampled, Distribution, HaarCheck,
};
pub use oneway::{
    one_way_reduction, tomography_copies, OneWayMode, OneWayOptions, OneWayReport, OneWayRow, GAP_HIGH, GAP_LOW,
    THRESHOLD,
};
pub use pp::{pp_reduction, pp_threshold, PpReport, PpRow};
pub use qip::{hvqszk_check, noisy_alice, qip2_from_cdqs, QipTranscript, ZkReport, ZkRow};

use crate::blocks::BlockChannel;
use crate::error::Result;
use crate::tensor::{frobenius_sq, identity, partial_trace_positions, trace_norm_hermitian, ComplexMatrix};

/// `ρ_{Q̄M}` from feeding half of a maximally entangled state through a sectored channel.
///
/// Sectors are orthogonal, so `ρ_{Q̄M}` and `ρ_{Q̄} ⊗ ρ_M` are both block diagonal over them.
pub(crate) struct ReferenceState {
    pub d_ref: usize,
    /// `ρ_{Q̄M}` restricted to each sector, on `Q̄ ⊗ sector`.
    pub joint: Vec<ComplexMatrix>,
    pub reference: ComplexMatrix,
    pub message: Vec<ComplexMatrix>,
}

impl ReferenceState {
    pub fn new(n: &BlockChannel) -> Result<ReferenceState> {
        let d = n.d_in;
        let mut joint = Vec::with_capacity(n.blocks.len());
        let mut message = Vec::with_capacity(n.blocks.len());
        let mut reference = ComplexMatrix::zeros(d, d);
        for b in &n.blocks {
            let j = b.choi(d).unscale(d as f64);
            let dims = [d, b.dim()];
            reference += partial_trace_positions(&j, &dims, &[0])?;
            message.push(partial_trace_positions(&j, &dims, &[1])?);
            joint.push(j);
        }
        Ok(ReferenceState { d_ref: d, joint, reference, message })
    }

    /// Largest entry of `ρ_{Q̄} − I/d`.
    pub fn reference_defect(&self) -> f64 {
        (&self.reference - identity(self.d_ref).unscale(self.d_ref as f64)).camax()
    }

    fn differences(&self) -> impl Iterator<Item = ComplexMatrix> + '_ {
        self.joint.iter().zip(&self.message).map(|(j, m)| j - self.reference.kronecker(m))
    }

    /// `‖ρ_{Q̄M} − ρ_{Q̄} ⊗ ρ_M‖₁`.
    pub fn product_distance(&self) -> f64 {
        self.differences().map(|x| trace_norm_hermitian(&x)).sum()
    }

    /// `‖ρ_{Q̄M} − ρ_{Q̄} ⊗ ρ_M‖₂²`.
    pub fn product_distance_sq2(&self) -> f64 {
        self.differences().map(|x| frobenius_sq(&x)).sum()
    }
}
