//! Protocol transformations: negation by complementary channels, AND/OR composition through
//! secret sharing, and error-correction amplification.

mod codes;
mod qss;

pub use codes::{
    amplification_exponent, amplify, binary_entropy, code_catalog, code_rate, noise_bound, noise_threshold,
    AmplifyParams, AmplifyResult, CodeRate, CodeSpec, PauliString, CODE_NAMES,
};
pub use qss::{qss_2of2, qss_2of3, qubit_to_qutrit, qutrit_to_qubit, SharingScheme};

use crate::channel::{canonical_kraus, QuantumChannel, ResourceState, KRAUS_CUTOFF};
use crate::error::{Error, Result};
use crate::protocol::CdqsProtocol;
use crate::tensor::{cr, eigh, identity, permutation_matrix, ComplexMatrix, ComplexVector, SystemDims};

/// Pure resource whose left share absorbs a purifying register: `Ψ_LR → |Ψ⟩_{(LP)R}`.
fn purify(res: &ResourceState) -> Result<(ResourceState, usize)> {
    match res {
        ResourceState::Pure { .. } => Ok((res.clone(), 1)),
        ResourceState::Mixed { state, d_l, d_r } => {
            let (vals, vecs) = eigh(state.matrix());
            let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > KRAUS_CUTOFF).collect();
            let d_p = keep.len();
            let mut amp = ComplexVector::zeros(d_l * d_p * d_r);
            for (p, &k) in keep.iter().enumerate() {
                let s = vals[k].sqrt();
                for l in 0..*d_l {
                    for r in 0..*d_r {
                        amp[(l * d_p + p) * d_r + r] = vecs[(l * d_r + r, k)] * s;
                    }
                }
            }
            let norm = amp.norm();
            Ok((ResourceState::pure(amp.unscale(norm), d_l * d_p, *d_r)?, d_p))
        }
    }
}

/// `A ∘ Tr_P` on `(Q L) ⊗ P`.
fn discard_purifier(a: &QuantumChannel, d_p: usize) -> Result<QuantumChannel> {
    if d_p == 1 {
        return Ok(a.clone());
    }
    let mut ops = Vec::with_capacity(a.kraus().len() * d_p);
    for k in a.kraus() {
        for p in 0..d_p {
            let bra = ComplexMatrix::from_fn(1, d_p, |_, j| cr(if j == p { 1.0 } else { 0.0 }));
            ops.push(k.kronecker(&bra));
        }
    }
    let in_dims = a.in_dims().join(&SystemDims::single("P", d_p))?;
    QuantumChannel::from_kraus(ops, in_dims, a.out_dims().clone())
}

/// Negation: every party sends the environment of its channel instead of its output.
///
/// A mixed resource is first purified with the purifying register handed to Alice, who
/// discards it; the complementary channels then carry it to the referee.
pub fn negate(p: &CdqsProtocol) -> Result<CdqsProtocol> {
    p.validate()?;
    let (resource, d_p) = purify(&p.resource)?;
    let alice = p.alice.iter().map(|a| discard_purifier(a, d_p)?.complementary()).collect::<Result<Vec<_>>>()?;
    let bob = p.bob.iter().map(QuantumChannel::complementary).collect::<Result<Vec<_>>>()?;
    CdqsProtocol::new(
        &format!("not-{}", p.name),
        p.predicate.negate(),
        p.d_q,
        resource,
        alice,
        bob,
        (2.0 * p.declared_delta.sqrt(), 2.0 * p.declared_eps.sqrt()),
    )
}

/// Alice's composite channel: encode `Q` into shares, then run each sub-protocol on its share.
///
/// `clear` shares (leading encoder outputs) are forwarded unchanged.
fn composite_alice(
    encoder: &QuantumChannel,
    clear: usize,
    parts: [&QuantumChannel; 2],
    share_dims: [usize; 2],
    l_dims: [usize; 2],
) -> Result<QuantumChannel> {
    let d_c: usize = encoder.d_out() / (share_dims[0] * share_dims[1]);
    let [s1, s2] = share_dims;
    let [l1, l2] = l_dims;
    // Systems after encoding: C S1 S2 L1 L2 -> C (S1 L1) (S2 L2).
    let perm = permutation_matrix(&[d_c, s1, s2, l1, l2], &[0, 1, 3, 2, 4]);
    let d_in = encoder.d_in() * l1 * l2;
    let mut ops = Vec::new();
    for e in encoder.kraus() {
        let pre = &perm * e.kronecker(&identity(l1 * l2));
        for a in parts[0].kraus() {
            for b in parts[1].kraus() {
                let k = identity(d_c).kronecker(&a.kronecker(b)) * &pre;
                if k.camax() > crate::channel::ZERO_TOL {
                    ops.push(k);
                }
            }
        }
    }
    let d_out = d_c * parts[0].d_out() * parts[1].d_out();
    let ops = canonical_kraus(&ops, d_in, d_out);
    let mut out = vec![("M0a", parts[0].d_out()), ("M0b", parts[1].d_out())];
    if clear > 0 {
        out.insert(0, ("C", d_c));
    }
    let in_dims = SystemDims::new([("Q", encoder.d_in()), ("L", l1 * l2)])?;
    QuantumChannel::from_kraus(ops, in_dims, SystemDims::new(out)?)
}

#[allow(clippy::too_many_arguments)]
fn compose(
    name: &str,
    predicate: crate::protocol::Predicate,
    encoder: &QuantumChannel,
    clear: usize,
    share_dims: [usize; 2],
    p1: &CdqsProtocol,
    p2: &CdqsProtocol,
    declared: (f64, f64),
) -> Result<CdqsProtocol> {
    if p1.d_q != share_dims[0] || p2.d_q != share_dims[1] {
        return Err(Error::Argument(format!(
            "shares have dimensions {share_dims:?}, sub-protocols hide {} and {}",
            p1.d_q, p2.d_q
        )));
    }
    let budget = p1.predicate.inputs() * p2.predicate.inputs();
    crate::tensor::check_capacity("composed protocol inputs", budget, budget)?;
    let (n2, l1, l2) = (p2.predicate.n, p1.resource.d_l(), p2.resource.d_l());
    let mask = (1usize << n2) - 1;
    let inputs = predicate.inputs();
    let mut alice = Vec::with_capacity(inputs);
    let mut bob = Vec::with_capacity(inputs);
    for x in 0..inputs {
        let parts = [&p1.alice[x >> n2], &p2.alice[x & mask]];
        alice.push(composite_alice(encoder, clear, parts, share_dims, [l1, l2])?);
        bob.push(p1.bob[x >> n2].tensor(&p2.bob[x & mask])?);
    }
    CdqsProtocol::new(name, predicate, encoder.d_in(), p1.resource.tensor(&p2.resource)?, alice, bob, declared)
}

/// `f₁ ∧ f₂`: a ((2,2)) sharing of the qubit secret, share `i` hidden by `pᵢ`.
/// `p1` must hide a qubit and `p2` a ququart.
pub fn and_compose(p1: &CdqsProtocol, p2: &CdqsProtocol) -> Result<CdqsProtocol> {
    let s = qss_2of2()?;
    let pred = p1.predicate.combine(&p2.predicate, "AND", |a, b| a && b)?;
    let eps = p1.declared_eps.max(p2.declared_eps);
    let delta = p1.declared_delta.max(p2.declared_delta);
    compose(&format!("and({},{})", p1.name, p2.name), pred, &s.encoder, 0, [2, 4], p1, p2, (2.0 * eps, delta))
}

/// `f₁ ∨ f₂`: a ((2,3)) qutrit sharing of the embedded qubit secret; share 0 is sent in the
/// clear, shares 1 and 2 are hidden by `p1` and `p2` (both hiding qutrits).
pub fn or_compose(p1: &CdqsProtocol, p2: &CdqsProtocol) -> Result<CdqsProtocol> {
    let s = qss_2of3()?;
    let enc = qubit_to_qutrit().then(&s.encoder)?;
    let pred = p1.predicate.combine(&p2.predicate, "OR", |a, b| a || b)?;
    let eps = p1.declared_eps.max(p2.declared_eps);
    let delta = p1.declared_delta.max(p2.declared_delta);
    compose(&format!("or({},{})", p1.name, p2.name), pred, &enc, 1, [3, 3], p1, p2, (eps, 2.0 * delta))
}
