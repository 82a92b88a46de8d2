//! Conditional disclosure of quantum secrets: protocol data, the combined referee channel and
//! the certification pipeline.

use super::cds::{ceil_log2, CdsProtocol};
use super::predicate::Predicate;
use super::report::{InputRow, VerificationReport};
use super::DEFAULT_TOL;
use crate::blocks::BlockChannel;
use crate::channel::{choi_difference, identity_channel, QuantumChannel, ResourceState, ZERO_TOL};
use crate::error::{Error, Result};
use crate::sdp::{diamond_norm, optimal_constant_simulator_blocks, optimal_decoder, optimal_decoder_blocks};
use crate::tensor::{cr, zeros, ComplexMatrix, SystemDims};

/// A one-round CDQS protocol with per-input local channels.
///
/// Alice's channel for input `x` maps `Q ⊗ L → M₀`; Bob's channel for `y` maps `R → M₁`.
#[derive(Clone, Debug)]
pub struct CdqsProtocol {
    pub name: String,
    pub predicate: Predicate,
    pub d_q: usize,
    pub resource: ResourceState,
    pub alice: Vec<QuantumChannel>,
    pub bob: Vec<QuantumChannel>,
    pub declared_eps: f64,
    pub declared_delta: f64,
}

impl CdqsProtocol {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        predicate: Predicate,
        d_q: usize,
        resource: ResourceState,
        alice: Vec<QuantumChannel>,
        bob: Vec<QuantumChannel>,
        declared: (f64, f64),
    ) -> Result<Self> {
        let p = CdqsProtocol {
            name: name.to_string(),
            predicate,
            d_q,
            resource,
            alice,
            bob,
            declared_eps: declared.0,
            declared_delta: declared.1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let inputs = self.predicate.inputs();
        if self.alice.len() != inputs || self.bob.len() != inputs {
            return Err(Error::validation(
                "channel families indexed by inputs",
                format!("{} Alice / {} Bob channels for {inputs} inputs", self.alice.len(), self.bob.len()),
            ));
        }
        let d_in_a = self.d_q * self.resource.d_l();
        for (x, a) in self.alice.iter().enumerate() {
            if a.d_in() != d_in_a || a.d_out() != self.alice[0].d_out() {
                return Err(Error::validation(
                    "alice channel dims",
                    format!("x = {x}: {}->{} but Q⊗L has dimension {d_in_a}", a.d_in(), a.d_out()),
                ));
            }
        }
        for (y, b) in self.bob.iter().enumerate() {
            if b.d_in() != self.resource.d_r() || b.d_out() != self.bob[0].d_out() {
                return Err(Error::validation(
                    "bob channel dims",
                    format!("y = {y}: {}->{} but R has dimension {}", b.d_in(), b.d_out(), self.resource.d_r()),
                ));
            }
        }
        Ok(())
    }

    pub fn d_m0(&self) -> usize {
        self.alice[0].d_out()
    }

    pub fn d_m1(&self) -> usize {
        self.bob[0].d_out()
    }

    /// Qubits of message `⌈log₂ d_M₀⌉ + ⌈log₂ d_M₁⌉`.
    pub fn message_qubits(&self) -> usize {
        ceil_log2(self.d_m0()) + ceil_log2(self.d_m1())
    }

    /// Qubits of shared resource `⌈log₂ d_L⌉ + ⌈log₂ d_R⌉`.
    pub fn resource_qubits(&self) -> usize {
        ceil_log2(self.resource.d_l()) + ceil_log2(self.resource.d_r())
    }

    pub fn secret_qubits(&self) -> usize {
        ceil_log2(self.d_q)
    }

    /// Referee channel `Q → M₀ ⊗ M₁`, `ρ ↦ (N^x ⊗ N^y)(ρ ⊗ Ψ_LR)`, split into output sectors.
    pub fn combined(&self, x: usize, y: usize) -> Result<BlockChannel> {
        combine_local(&self.alice[x], &self.bob[y], &self.resource, self.d_q)
    }
}

/// `ρ ↦ (A ⊗ B)(ρ ⊗ Ψ)` for `A: Q⊗L → M₀`, `B: R → M₁`; output index `m₀·d_M₁ + m₁`.
///
/// For a pure component `Ψ = Σ C[l,r] |l⟩|r⟩` the Kraus operators are `K_ij|q⟩ = vec(A_i^{(q)} C B_jᵀ)`
/// where `A_i^{(q)}` is the `M₀ × L` slice of `A_i` at secret index `q`.
pub fn combine_local(
    alice: &QuantumChannel,
    bob: &QuantumChannel,
    resource: &ResourceState,
    d_q: usize,
) -> Result<BlockChannel> {
    let (d_l, d_r) = (resource.d_l(), resource.d_r());
    let (d_m0, d_m1) = (alice.d_out(), bob.d_out());
    if alice.d_in() != d_q * d_l || bob.d_in() != d_r {
        return Err(Error::Argument("channel inputs do not match secret and resource".into()));
    }
    let d_out = d_m0 * d_m1;
    crate::tensor::check_capacity("combined Kraus operator", d_out, d_q)?;
    let a_ops = alice.kraus();
    let b_ops = bob.kraus();
    // Slices A_i^{(q)} and the resource rows they touch.
    let slices: Vec<Vec<(ComplexMatrix, Vec<usize>)>> = a_ops
        .iter()
        .map(|a| {
            (0..d_q)
                .map(|q| {
                    let s = a.columns(q * d_l, d_l).into_owned();
                    let cols = (0..d_l).filter(|&l| s.column(l).camax() > ZERO_TOL).collect();
                    (s, cols)
                })
                .collect()
        })
        .collect();
    let mut ops = Vec::new();
    for (w, c) in resource.components() {
        let sw = w.sqrt();
        for b in b_ops {
            let t = &c * b.transpose();
            let rows: Vec<bool> = (0..d_l).map(|l| t.row(l).camax() > ZERO_TOL).collect();
            for sl in &slices {
                if sl.iter().all(|(_, cols)| cols.iter().all(|&l| !rows[l])) {
                    continue;
                }
                let mut k = zeros(d_out, d_q);
                for (q, (s, _)) in sl.iter().enumerate() {
                    let prod = s * &t;
                    for m0 in 0..d_m0 {
                        for m1 in 0..d_m1 {
                            k[(m0 * d_m1 + m1, q)] = prod[(m0, m1)] * sw;
                        }
                    }
                }
                if k.camax() > ZERO_TOL {
                    ops.push(k);
                }
            }
        }
    }
    BlockChannel::from_kraus(&ops, d_q, d_out)
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub see_saw_rounds: usize,
    pub see_saw_min_gain: f64,
    /// Largest `d_Q × block` dimension for which the complement simulator (decoupling bound) is solved.
    pub decoupling_budget: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { see_saw_rounds: 5, see_saw_min_gain: 1e-8, decoupling_budget: 24 }
    }
}

/// Two-sided certificate on `inf_D ‖D∘N − T‖⋄`.
#[derive(Clone, Debug)]
pub struct CorrectnessCertificate {
    pub eps_ub: f64,
    pub eps_lb: f64,
    /// Entanglement fidelity of the returned decoder and the dual bound on the best one.
    pub fidelity: f64,
    pub fidelity_ub: f64,
    /// Decoder Choi matrices, one per output block of the channel.
    pub decoders: Vec<ComplexMatrix>,
    pub see_saw_rounds: usize,
    /// Dual lower bound on the complement's constant-simulator distance, when computed.
    pub complement_distance: Option<f64>,
}

fn decoder_error(
    n: &BlockChannel,
    decoders: &[ComplexMatrix],
    target: &QuantumChannel,
) -> Result<(f64, ComplexMatrix)> {
    let composed = n.compose_decoders(decoders, target.d_out())?;
    let diff = choi_difference(&composed, target)?;
    let r = diamond_norm(&diff, target.d_in(), target.d_out())?;
    Ok((r.value, r.worst_input))
}

/// Certifies how well `n` can be inverted towards `target` (the identity for quantum secrets).
///
/// Upper bound: the exact diamond distance of an optimized decoder, refined by see-saw rounds
/// against the worst-case input. Lower bound: `2(1 − F*)` from the dual bound on the optimal
/// entanglement fidelity, and `(ŝ/2)²` from the complement's simulator distance when affordable.
pub fn certify_correctness(
    n: &BlockChannel,
    target: &QuantumChannel,
    opts: &CertifyOptions,
) -> Result<CorrectnessCertificate> {
    if target.d_in() != n.d_in {
        return Err(Error::Argument("target channel must act on the secret system".into()));
    }
    let dec = optimal_decoder(n)?;
    let (fidelity, fidelity_ub) = (dec.fidelity, dec.upper);
    let mut decoders = dec.decoders;
    let (mut eps_ub, mut worst) = decoder_error(n, &decoders, target)?;
    let mut rounds = 0;
    while rounds < opts.see_saw_rounds && eps_ub > opts.see_saw_min_gain {
        rounds += 1;
        let cand = optimal_decoder_blocks(n, &worst)?;
        let (e, w) = decoder_error(n, &cand.decoders, target)?;
        if e < eps_ub - opts.see_saw_min_gain {
            eps_ub = e;
            worst = w;
            decoders = cand.decoders;
        } else {
            break;
        }
    }
    let mut eps_lb = (2.0 * (1.0 - fidelity_ub)).max(0.0);
    let mut complement_distance = None;
    if eps_ub > 1e-9 {
        let comp = n.complement()?;
        if comp.d_in * comp.max_block_dim() <= opts.decoupling_budget {
            let s = optimal_constant_simulator_blocks(&comp)?;
            complement_distance = Some(s.lower);
            eps_lb = eps_lb.max((s.lower / 2.0).powi(2));
        }
    }
    Ok(CorrectnessCertificate {
        eps_ub,
        eps_lb,
        fidelity,
        fidelity_ub,
        decoders,
        see_saw_rounds: rounds,
        complement_distance,
    })
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub tol: f64,
    pub certify: CertifyOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { tol: DEFAULT_TOL, certify: CertifyOptions::default() }
    }
}

/// Certifies one input pair: correctness on 1-inputs, security on 0-inputs.
pub fn certify_row(n: &BlockChannel, f: bool, target: &QuantumChannel, opts: &CertifyOptions) -> InputRow {
    let mut row = InputRow { f, ..Default::default() };
    if f {
        match certify_correctness(n, target, opts) {
            Ok(c) => {
                row.eps_ub = Some(c.eps_ub);
                row.eps_lb = Some(c.eps_lb);
                row.witness = Some(format!(
                    "decoder on {} blocks, fidelity {:.9}, {} see-saw rounds",
                    c.decoders.len(),
                    c.fidelity,
                    c.see_saw_rounds
                ));
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    } else {
        match optimal_constant_simulator_blocks(n) {
            Ok(s) => {
                row.delta_ub = Some(s.value);
                row.delta_lb = Some(s.lower);
                row.witness = Some(format!("constant simulator on {} blocks", s.sigma.len()));
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

fn verify_with_target(p: &CdqsProtocol, target: &QuantumChannel, opts: &VerifyOptions) -> Result<VerificationReport> {
    p.validate()?;
    let inputs = p.predicate.inputs();
    let mut rows = Vec::with_capacity(inputs * inputs);
    for x in 0..inputs {
        for y in 0..inputs {
            let f = p.predicate.eval(x, y);
            let mut row = match p.combined(x, y) {
                Ok(n) => certify_row(&n, f, target, &opts.certify),
                Err(e) if e.is_numeric() => InputRow { f, error: Some(e.to_string()), ..Default::default() },
                Err(e) => return Err(e),
            };
            row.x = x;
            row.y = y;
            rows.push(row);
        }
    }
    Ok(VerificationReport::assemble(
        &p.name,
        "cdqs",
        &p.predicate.name,
        p.predicate.n,
        rows,
        (p.declared_eps, p.declared_delta),
        opts.tol,
        p.message_qubits() as f64,
        false,
    ))
}

/// Certifies `(ε̂, δ̂)` of a CDQS protocol over every input pair.
pub fn verify_cdqs(p: &CdqsProtocol, opts: &VerifyOptions) -> Result<VerificationReport> {
    verify_with_target(p, &identity_channel(p.d_q), opts)
}

/// Completely dephasing channel in the computational basis.
pub fn dephasing_channel(d: usize) -> QuantumChannel {
    let ops = (0..d).map(|k| crate::tensor::ket_bra(d, k, k)).collect();
    QuantumChannel::from_kraus_unchecked(ops, SystemDims::single("Q", d), SystemDims::single("Q", d))
}

/// CDS protocol run on a classical secret register: Alice and Bob read `z` and `r` in the
/// computational basis and prepare their messages as basis states; the randomness becomes a
/// classically correlated resource.
pub fn embed_cds(c: &CdsProtocol) -> Result<CdqsProtocol> {
    let nz = c.secret_size;
    let nr = c.randomness_size();
    let weights: Vec<f64> = c.weights.iter().map(|&w| w as f64).collect();
    let resource = ResourceState::classically_correlated(&weights)?;
    let inputs = c.predicate.inputs();
    let mut alice = Vec::with_capacity(inputs);
    for x in 0..inputs {
        let mut ops = Vec::with_capacity(nz * nr);
        for z in 0..nz {
            for r in 0..nr {
                let mut k = zeros(c.m0_size, nz * nr);
                k[(c.m0(x, z, r), z * nr + r)] = cr(1.0);
                ops.push(k);
            }
        }
        alice.push(QuantumChannel::from_kraus(
            ops,
            SystemDims::new([("Q", nz), ("L", nr)])?,
            SystemDims::single("M0", c.m0_size),
        )?);
    }
    let mut bob = Vec::with_capacity(inputs);
    for y in 0..inputs {
        let ops = (0..nr)
            .map(|r| {
                let mut k = zeros(c.m1_size, nr);
                k[(c.m1(y, r), r)] = cr(1.0);
                k
            })
            .collect();
        bob.push(QuantumChannel::from_kraus(ops, SystemDims::single("R", nr), SystemDims::single("M1", c.m1_size))?);
    }
    CdqsProtocol::new(
        &format!("embedded-{}", c.name),
        c.predicate.clone(),
        nz,
        resource,
        alice,
        bob,
        (2.0 * c.declared_eps, c.declared_delta),
    )
}

/// Verifies an embedded classical protocol; correctness is measured against the dephasing channel,
/// so `eps_ub` equals twice the classical error probability.
pub fn verify_embedded_cds(c: &CdsProtocol, opts: &VerifyOptions) -> Result<VerificationReport> {
    let p = embed_cds(c)?;
    verify_with_target(&p, &dephasing_channel(c.secret_size), opts)
}

/// Certified instance of `¼ ε_lb² ≤ ŝ ≤ 2√ε̂` for a channel `n` and its complement.
#[derive(Clone, Debug)]
pub struct DecouplingCheck {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    pub eps_ub: f64,
    pub eps_lb: f64,
    pub mid_lb: f64,
}

pub fn decoupling_check(n: &QuantumChannel) -> Result<DecouplingCheck> {
    let blocks = BlockChannel::from_channel(n)?;
    let opts = CertifyOptions { decoupling_budget: 0, ..Default::default() };
    let cert = certify_correctness(&blocks, &identity_channel(n.d_in()), &opts)?;
    let sim = optimal_constant_simulator_blocks(&blocks.complement()?)?;
    let check = DecouplingCheck {
        lhs: 0.25 * cert.eps_lb * cert.eps_lb,
        mid: sim.value,
        rhs: 2.0 * cert.eps_ub.sqrt(),
        eps_ub: cert.eps_ub,
        eps_lb: cert.eps_lb,
        mid_lb: sim.lower,
    };
    if check.lhs > check.mid {
        return Err(Error::validation("decoupling lower inequality", format!("{} > {}", check.lhs, check.mid)));
    }
    if check.mid_lb > check.rhs {
        return Err(Error::validation("decoupling upper inequality", format!("{} > {}", check.mid_lb, check.rhs)));
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{depolarizing, replacer_channel};
    use crate::tensor::{identity, random_density, rng_from_seed};

    fn single_input(alice: QuantumChannel, d_q: usize, f: bool) -> CdqsProtocol {
        let pred = Predicate::from_fn("const", 1, |_, _| f).unwrap();
        let bob = replacer_channel(1, &identity(1));
        CdqsProtocol::new(
            "toy",
            pred,
            d_q,
            ResourceState::none(),
            vec![alice.clone(), alice],
            vec![bob.clone(), bob],
            (0.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn forwarding_protocol_is_insecure() {
        let p = single_input(identity_channel(2), 2, false);
        let r = verify_cdqs(&p, &VerifyOptions::default()).unwrap();
        for row in &r.rows {
            assert!((row.delta_ub.unwrap() - 1.5).abs() < 1e-6);
        }
        let r = verify_cdqs(&single_input(identity_channel(2), 2, true), &VerifyOptions::default()).unwrap();
        assert!(r.eps_hat < 1e-6);
    }

    #[test]
    fn fixed_message_protocol() {
        let mut rng = rng_from_seed(5);
        let sigma = random_density(2, 2, &mut rng);
        let rep = replacer_channel(2, &sigma);
        let r = verify_cdqs(&single_input(rep.clone(), 2, false), &VerifyOptions::default()).unwrap();
        assert!(r.delta_hat < 1e-6);
        let r = verify_cdqs(&single_input(rep, 2, true), &VerifyOptions::default()).unwrap();
        // A constant channel sits at diamond distance 3/2 from the qubit identity.
        assert!((r.eps_hat - 1.5).abs() < 1e-6, "{}", r.eps_hat);
        assert!(r.rows.iter().all(|row| row.eps_lb.unwrap() <= row.eps_ub.unwrap() + 1e-6));
    }

    #[test]
    fn noise_never_improves_correctness() {
        let mut last = -1.0;
        for p in [0.0, 0.1, 0.3] {
            let r =
                verify_cdqs(&single_input(depolarizing(p, 2).unwrap(), 2, true), &VerifyOptions::default()).unwrap();
            assert!(r.eps_hat >= last - 1e-9);
            assert!((r.eps_hat - 1.5 * p).abs() < 1e-6);
            last = r.eps_hat;
        }
    }

    #[test]
    fn resource_is_routed_through_both_parties() {
        // Teleport-free check: Alice forwards L, Bob forwards R, the resource is a Bell pair and
        // Q is discarded. The referee always sees Φ⁺, independent of the secret.
        let phi = crate::channel::max_entangled_vector(2);
        let res = ResourceState::pure(phi, 2, 2).unwrap();
        let ops: Vec<ComplexMatrix> = (0..2)
            .map(|q| {
                let mut k = zeros(2, 4);
                k[(0, q * 2)] = cr(1.0);
                k[(1, q * 2 + 1)] = cr(1.0);
                k
            })
            .collect();
        let alice = QuantumChannel::from_kraus(
            ops,
            SystemDims::new([("Q", 2), ("L", 2)]).unwrap(),
            SystemDims::single("M0", 2),
        )
        .unwrap();
        let bob = identity_channel(2);
        let n = combine_local(&alice, &bob, &res, 2).unwrap();
        assert!(n.trace_preservation_defect() < 1e-12);
        let out = n.to_channel().unwrap().apply(&identity(2).unscale(2.0)).unwrap();
        let expected = crate::channel::max_entangled(2).into_matrix();
        assert!((out - expected).norm() < 1e-12);
    }
}
