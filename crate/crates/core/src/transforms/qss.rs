//! Threshold quantum secret sharing: a ((2,2)) scheme from the one-time pad with its key as the
//! second share, and a ((2,3)) scheme over qutrits from degree-one polynomials.

use crate::channel::{pauli, QuantumChannel};
use crate::error::Result;
use crate::tensor::{cr, undigits, zeros, ComplexMatrix, SystemDims};

/// An encoder into shares and a reconstructor for every authorized pair.
#[derive(Clone, Debug)]
pub struct SharingScheme {
    pub encoder: QuantumChannel,
    pub share_dims: Vec<usize>,
    /// `(share positions, channel from those shares to the secret)`.
    pub reconstructors: Vec<(Vec<usize>, QuantumChannel)>,
}

/// `ρ ↦ ¼ Σ_{a,b} X^aZ^b ρ Z^bX^a ⊗ |ab⟩⟨ab|` with share 1 the padded qubit and share 2 the key.
pub fn qss_2of2() -> Result<SharingScheme> {
    let out = SystemDims::new([("Q1", 2), ("Q2", 4)])?;
    let mut enc = Vec::with_capacity(4);
    let mut rec = Vec::with_capacity(4);
    for k in 0..4 {
        let p = pauli(k >> 1, k & 1);
        let mut e = zeros(8, 2);
        let mut r = zeros(2, 8);
        for i in 0..2 {
            for j in 0..2 {
                e[(i * 4 + k, j)] = p[(i, j)] * 0.5;
                r[(j, i * 4 + k)] = p[(i, j)].conj();
            }
        }
        enc.push(e);
        rec.push(r);
    }
    Ok(SharingScheme {
        encoder: QuantumChannel::from_kraus(enc, SystemDims::single("Q", 2), out.clone())?,
        share_dims: vec![2, 4],
        reconstructors: vec![(vec![0, 1], QuantumChannel::from_kraus(rec, out, SystemDims::single("Q", 2))?)],
    })
}

/// `|j⟩ ↦ 3^{-1/2} Σ_k |k⟩|k + j⟩|k + 2j⟩` (arithmetic mod 3).
///
/// Shares `a < b` determine `j = (s_b − s_a)/(b − a)` and the missing share `s_c = s_a + (c − a)j`;
/// the reconstructor outputs `|j⟩` and traces the copy of `s_c`, which is then maximally
/// entangled with the absent share and independent of the secret.
pub fn qss_2of3() -> Result<SharingScheme> {
    let dims = [3usize, 3, 3];
    let out = SystemDims::new([("S0", 3), ("S1", 3), ("S2", 3)])?;
    let mut v = zeros(27, 3);
    let amp = cr(1.0 / 3f64.sqrt());
    for j in 0..3 {
        for k in 0..3 {
            v[(undigits(&[k, (k + j) % 3, (k + 2 * j) % 3], &dims), j)] = amp;
        }
    }
    let encoder = QuantumChannel::from_kraus(vec![v], SystemDims::single("Q", 3), out)?;
    let mut reconstructors = Vec::with_capacity(3);
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let c = 3 - a - b;
        let inv = if (b - a) % 3 == 1 { 1 } else { 2 };
        let mut ops: Vec<ComplexMatrix> = (0..3).map(|_| zeros(3, 9)).collect();
        for sa in 0..3 {
            for sb in 0..3 {
                let j = ((sb + 3 - sa) * inv) % 3;
                let sc = (sa + (c + 3 - a) * j) % 3;
                ops[sc][(j, sa * 3 + sb)] = cr(1.0);
            }
        }
        let ins = SystemDims::new([(format!("S{a}"), 3), (format!("S{b}"), 3)])?;
        reconstructors.push((vec![a, b], QuantumChannel::from_kraus(ops, ins, SystemDims::single("Q", 3))?));
    }
    Ok(SharingScheme { encoder, share_dims: dims.to_vec(), reconstructors })
}

/// Qubit into the first two levels of a qutrit.
pub fn qubit_to_qutrit() -> QuantumChannel {
    let mut v = zeros(3, 2);
    v[(0, 0)] = cr(1.0);
    v[(1, 1)] = cr(1.0);
    QuantumChannel::from_kraus(vec![v], SystemDims::single("Q", 2), SystemDims::single("Q", 3)).expect("isometry")
}

/// Projection back onto the qubit levels; the third level is sent to `|0⟩`.
pub fn qutrit_to_qubit() -> QuantumChannel {
    let mut p = zeros(2, 3);
    p[(0, 0)] = cr(1.0);
    p[(1, 1)] = cr(1.0);
    let mut junk = zeros(2, 3);
    junk[(0, 2)] = cr(1.0);
    QuantumChannel::from_kraus(vec![p, junk], SystemDims::single("Q", 3), SystemDims::single("Q", 2)).expect("channel")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{identity_channel, replacer_channel};
    use crate::tensor::identity;

    fn choi_gap(a: &QuantumChannel, b: &QuantumChannel) -> f64 {
        (a.choi().unwrap() - b.choi().unwrap()).camax()
    }

    #[test]
    fn two_of_two_invariants() {
        let s = qss_2of2().unwrap();
        let (_, rec) = &s.reconstructors[0];
        assert!(choi_gap(&s.encoder.then(rec).unwrap(), &identity_channel(2)) < 1e-12);
        let first = s.encoder.trace_output(&[0]).unwrap();
        assert!(choi_gap(&first, &replacer_channel(2, &identity(2).unscale(2.0))) < 1e-12);
        let key = s.encoder.trace_output(&[1]).unwrap();
        assert!(choi_gap(&key, &replacer_channel(2, &identity(4).unscale(4.0))) < 1e-12);
    }

    #[test]
    fn two_of_three_invariants() {
        let s = qss_2of3().unwrap();
        let mixed = replacer_channel(3, &identity(3).unscale(3.0));
        for k in 0..3 {
            assert!(choi_gap(&s.encoder.trace_output(&[k]).unwrap(), &mixed) < 1e-10, "share {k}");
        }
        for (pair, rec) in &s.reconstructors {
            let round = s.encoder.trace_output(pair).unwrap().then(rec).unwrap();
            assert!(choi_gap(&round, &identity_channel(3)) < 1e-10, "{pair:?}");
        }
    }

    #[test]
    fn qubit_embedding_round_trips() {
        let round = qubit_to_qutrit().then(&qutrit_to_qubit()).unwrap();
        assert!(choi_gap(&round, &identity_channel(2)) < 1e-15);
    }
}
