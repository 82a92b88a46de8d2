//! Two-message interactive proof from a CDQS hiding classical strings, and the simulator for its
//! honest-verifier zero-knowledge variant.
//!
//! Alice and Bob run `copies` parallel instances on a shared random `z`; Merlin (the referee)
//! decodes, measures and returns `z'`; Alice accepts iff `z = z'`.

use serde::Serialize;

use crate::blocks::BlockChannel;
use crate::channel::{depolarizing, identity_channel, QuantumChannel};
use crate::error::{Error, Result};
use crate::protocol::{ceil_log2, certify_correctness, CdqsProtocol, CertifyOptions};
use crate::sdp::{optimal_decoder, optimal_discrimination_blocks};
use crate::tensor::{check_capacity, ket_bra, trace_norm_hermitian, zeros, ComplexMatrix};

/// Slack on the soundness comparison.
const SOUNDNESS_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct QipTranscript {
    pub protocol: String,
    pub ell: usize,
    pub copies: usize,
    /// Worst 1-input acceptance probability with the honest Merlin.
    pub completeness: f64,
    /// `1 − copies·ε̂` with `ε̂` the worst certified single-copy error.
    pub completeness_floor: f64,
    /// Worst 0-input acceptance probability over all Merlin strategies.
    pub soundness_bound: f64,
    /// `2^{−ℓ} + copies·δ` (declared `δ`).
    pub soundness_ceiling: f64,
    /// Message qubits of the parallel CDQS.
    pub t: usize,
    pub communication: usize,
    pub entanglement_qubits: usize,
    pub pass: bool,
}

/// Copies needed to hide `ell` bits, each copy hiding `log₂ d_Q`.
fn copies_for(p: &CdqsProtocol, ell: usize) -> Result<usize> {
    if !p.d_q.is_power_of_two() || p.d_q < 2 {
        return Err(Error::Argument(format!("secret dimension {} is not a power of two", p.d_q)));
    }
    let per = p.d_q.trailing_zeros() as usize;
    if ell == 0 || !ell.is_multiple_of(per) {
        return Err(Error::Argument(format!("ℓ = {ell} is not a positive multiple of {per} secret bits")));
    }
    let total = 1usize << ell;
    check_capacity("secret strings squared", total, total)?;
    Ok(ell / per)
}

/// `P[z'|z] = ⟨z'|D*N(|z⟩⟨z|)|z'⟩` for one copy with the decoder `D*` given by Choi blocks.
fn merlin_table(n: &BlockChannel, decoders: &[ComplexMatrix], d_q: usize) -> Result<Vec<Vec<f64>>> {
    let dn = n.compose_decoders(decoders, d_q)?;
    let mut table = vec![vec![0.0; d_q]; d_q];
    for (z, row) in table.iter_mut().enumerate() {
        let out = dn.apply(&ket_bra(d_q, z, z))?;
        for (zp, v) in row.iter_mut().enumerate() {
            *v = out[(zp, zp)].re.clamp(0.0, 1.0);
        }
    }
    Ok(table)
}

/// `P[z'|z]` over `copies` independent instances, strings indexed most significant copy first.
fn parallel_table(single: &[Vec<f64>], copies: usize) -> Vec<Vec<f64>> {
    let d = single.len();
    let total = d.pow(copies as u32);
    let digit = |v: usize, c: usize| (v / d.pow((copies - 1 - c) as u32)) % d;
    (0..total)
        .map(|z| (0..total).map(|zp| (0..copies).map(|c| single[digit(z, c)][digit(zp, c)]).product()).collect())
        .collect()
}

pub fn qip2_from_cdqs(p: &CdqsProtocol, ell: usize) -> Result<QipTranscript> {
    p.validate()?;
    let copies = copies_for(p, ell)?;
    let strings = 1usize << ell;
    let inputs = p.predicate.inputs();
    let mut completeness: f64 = 1.0;
    let mut worst_eps: f64 = 0.0;
    let mut soundness: f64 = 0.0;
    for x in 0..inputs {
        for y in 0..inputs {
            let n = p.combined(x, y)?;
            if p.predicate.eval(x, y) {
                let cert = certify_correctness(&n, &identity_channel(p.d_q), &CertifyOptions::default())?;
                worst_eps = worst_eps.max(cert.eps_ub);
                let table = merlin_table(&n, &cert.decoders, p.d_q)?;
                let single = (0..p.d_q).map(|z| table[z][z]).sum::<f64>() / p.d_q as f64;
                completeness = completeness.min(single.powi(copies as i32));
            } else {
                let mut par = n.clone();
                for _ in 1..copies {
                    par = par.tensor(&n)?;
                }
                let states: Vec<Vec<ComplexMatrix>> =
                    (0..strings).map(|z| par.apply(&ket_bra(strings, z, z))).collect();
                let priors = vec![1.0 / strings as f64; strings];
                let r = optimal_discrimination_blocks(&states, &priors)?;
                soundness = soundness.max(r.upper);
            }
        }
    }
    let t = copies * p.message_qubits();
    let completeness_floor = 1.0 - copies as f64 * worst_eps;
    let soundness_ceiling = 1.0 / strings as f64 + copies as f64 * p.declared_delta;
    Ok(QipTranscript {
        protocol: p.name.clone(),
        ell,
        copies,
        completeness,
        completeness_floor,
        soundness_bound: soundness,
        soundness_ceiling,
        t,
        communication: t + ell + 1,
        entanglement_qubits: copies * p.resource_qubits(),
        pass: completeness >= completeness_floor - 1e-9 && soundness <= soundness_ceiling + SOUNDNESS_SLACK,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ZkRow {
    pub x: usize,
    pub y: usize,
    /// `Pr[z = z']` with the honest Merlin.
    pub pr_equal: f64,
    /// `‖real − simulated‖₁` on the verifier's view `(z, z')`.
    pub distance: f64,
    /// `2√(1 − Pr[z = z'])`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZkReport {
    pub protocol: String,
    pub ell: usize,
    pub rows: Vec<ZkRow>,
    pub max_distance: f64,
    pub max_bound: f64,
    pub pass: bool,
}

/// Compares the verifier's view `Σ_z 2^{−ℓ}|z⟩⟨z| ⊗ Σ_{z'} P[z'|z]|z'⟩⟨z'|` with the simulator's
/// `Σ_z 2^{−ℓ}|z⟩⟨z| ⊗ |z⟩⟨z|` on every 1-input.
pub fn hvqszk_check(p: &CdqsProtocol, ell: usize) -> Result<ZkReport> {
    p.validate()?;
    let copies = copies_for(p, ell)?;
    let strings = 1usize << ell;
    let weight = 1.0 / strings as f64;
    let inputs = p.predicate.inputs();
    let mut rows = Vec::new();
    for x in 0..inputs {
        for y in 0..inputs {
            if !p.predicate.eval(x, y) {
                continue;
            }
            // The fidelity-optimal decoder; its diamond certificate is not needed here.
            let n = p.combined(x, y)?;
            let single = merlin_table(&n, &optimal_decoder(&n)?.decoders, p.d_q)?;
            let table = parallel_table(&single, copies);
            let mut real = zeros(strings * strings, strings * strings);
            let mut sim = zeros(strings * strings, strings * strings);
            let mut pr_equal = 0.0;
            for z in 0..strings {
                sim[(z * strings + z, z * strings + z)] += weight;
                pr_equal += weight * table[z][z];
                for zp in 0..strings {
                    real[(z * strings + zp, z * strings + zp)] += weight * table[z][zp];
                }
            }
            let distance = trace_norm_hermitian(&(real - sim));
            let bound = 2.0 * (1.0 - pr_equal).max(0.0).sqrt();
            rows.push(ZkRow { x, y, pr_equal, distance, bound, pass: distance <= bound + 1e-12 });
        }
    }
    let max_distance = rows.iter().map(|r| r.distance).fold(0.0, f64::max);
    let max_bound = rows.iter().map(|r| r.bound).fold(0.0, f64::max);
    Ok(ZkReport { protocol: p.name.clone(), ell, pass: rows.iter().all(|r| r.pass), rows, max_distance, max_bound })
}

/// Depolarizes Alice's message with parameter `noise`; the declared `ε` grows by the noise's
/// diamond distance from the identity.
pub fn noisy_alice(p: &CdqsProtocol, noise: f64) -> Result<CdqsProtocol> {
    let d = p.d_m0();
    let dep = depolarizing(noise, d)?;
    let alice = p
        .alice
        .iter()
        .map(|a| a.then(&dep)?.relabel_out(a.out_dims().clone()))
        .collect::<Result<Vec<QuantumChannel>>>()?;
    let dd = (d * d) as f64;
    let extra = 2.0 * noise * (dd - 1.0) / dd;
    let bits = ceil_log2(d);
    CdqsProtocol::new(
        &format!("{}+dep{noise}@{bits}q", p.name),
        p.predicate.clone(),
        p.d_q,
        p.resource.clone(),
        alice,
        p.bob.clone(),
        (p.declared_eps + extra, p.declared_delta),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::lifted_equality;

    #[test]
    fn parallel_table_is_a_product() {
        let single = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        let t = parallel_table(&single, 2);
        assert!((t[0b01][0b11] - 0.1 * 0.8).abs() < 1e-15);
        assert!((t[0b10][0b00] - 0.2 * 0.9).abs() < 1e-15);
        for row in &t {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qip_on_perfect_lifted_equality() {
        let p = lifted_equality(1).unwrap();
        let q = qip2_from_cdqs(&p, 2).unwrap();
        assert_eq!(q.copies, 2);
        assert!((q.completeness - 1.0).abs() < 1e-9, "{q:?}");
        assert!((q.soundness_bound - 0.25).abs() < 1e-6, "{q:?}");
        assert_eq!(q.communication, q.t + 3);
        assert!(q.soundness_bound < q.completeness);
        assert!(q.pass);
        assert!(qip2_from_cdqs(&p, 0).is_err());
    }

    #[test]
    fn zero_knowledge_sweep() {
        let p = lifted_equality(1).unwrap();
        let mut last = (0.0, 0.0);
        for (i, noise) in [0.0, 0.05, 0.1].into_iter().enumerate() {
            let r = hvqszk_check(&noisy_alice(&p, noise).unwrap(), 1).unwrap();
            assert!(r.pass, "{r:?}");
            if i == 0 {
                assert!(r.max_distance < 1e-9);
            }
            assert!(r.max_distance >= last.0 - 1e-12 && r.max_bound >= last.1 - 1e-12, "{r:?}");
            last = (r.max_distance, r.max_bound);
        }
    }
}
