//! Fixtures shared by the benchmarks.

use cdqs_core::channel::{depolarizing, depolarizing_for_diamond, QuantumChannel};
use cdqs_core::protocol::CdqsProtocol;
use cdqs_core::zoo::{alice_bit, bob_bit};
use cdqs_core::Result;

/// Depolarizing channel on `d` levels at diamond distance `eps` from the identity.
pub fn noisy_identity(eps: f64, d: usize) -> Result<QuantumChannel> {
    depolarizing(depolarizing_for_diamond(eps, d), d)
}

/// The dictator operands used by AND (`d_Q` 2 and 4) or OR (qutrits), with error `eps`.
pub fn dictators(or: bool, eps: f64) -> Result<(CdqsProtocol, CdqsProtocol)> {
    let (d1, d2) = if or { (3, 3) } else { (2, 4) };
    Ok((alice_bit(d1, eps, eps)?, bob_bit(d2, eps, eps)?))
}
