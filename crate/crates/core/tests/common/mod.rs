//! Helpers shared by the integration tests.
#![allow(dead_code)]

use cdqs_core::channel::QuantumChannel;
use cdqs_core::tensor::{ginibre, rng_from_seed, ComplexMatrix, SystemDims};

/// Random channel with at least `rank` Kraus operators (more if needed to fit an isometry).
pub fn random_channel(d_in: usize, d_out: usize, rank: usize, seed: u64) -> QuantumChannel {
    let rank = rank.max(d_in.div_ceil(d_out));
    let mut rng = rng_from_seed(seed);
    let v = ginibre(d_out * rank, d_in, &mut rng).qr().q();
    let ops = (0..rank).map(|k| ComplexMatrix::from_fn(d_out, d_in, |o, i| v[(k * d_out + o, i)])).collect();
    QuantumChannel::from_kraus(ops, SystemDims::single("A", d_in), SystemDims::single("B", d_out)).unwrap()
}

/// `Φ(ρ) = Σ_{ij} ρ_ij J_{ij}` with `J_{ij}` the `(i, j)` block of the Choi matrix.
pub fn apply_via_choi(choi: &ComplexMatrix, rho: &ComplexMatrix, d_out: usize) -> ComplexMatrix {
    let d_in = rho.nrows();
    let mut out = ComplexMatrix::zeros(d_out, d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            out += choi.view((i * d_out, j * d_out), (d_out, d_out)) * rho[(i, j)];
        }
    }
    out
}
