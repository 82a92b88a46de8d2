//! Concrete protocols: linear CDS schemes, the one-time-pad lift, dictator CDQS protocols used as
//! composition inputs, f-routing examples and the named registry.

use crate::channel::{
    depolarizing, depolarizing_for_diamond, max_entangled_vector, pauli, weyl, QuantumChannel, ResourceState,
};
use crate::error::{Error, Result};
use crate::protocol::io::LoadedProtocol;
use crate::protocol::{CdqsProtocol, CdsProtocol, FRoutingProtocol, Predicate};
use crate::tensor::{basis_vector, cr, digits, identity, undigits, zeros, ComplexMatrix, SystemDims};

fn parity(v: usize) -> usize {
    (v.count_ones() & 1) as usize
}

/// Equality CDS with a one-bit secret.
///
/// Randomness `r = 2a + b` with `a ∈ {0,1}ⁿ`, `b ∈ {0,1}`; `m₀ = z ⊕ ⟨a,x⟩ ⊕ b`, `m₁ = ⟨a,y⟩ ⊕ b`.
pub fn cds_equality(n: usize) -> Result<CdsProtocol> {
    let pred = Predicate::equality(n)?;
    CdsProtocol::from_fns(
        &format!("eq-cds-n{n}"),
        pred,
        2,
        vec![1; 1 << (n + 1)],
        (2, 2),
        |x, z, r| z ^ parity((r >> 1) & x) ^ (r & 1),
        |y, r| parity((r >> 1) & y) ^ (r & 1),
        (0.0, 0.0),
    )
}

/// Inner-product CDS with a one-bit secret.
///
/// Randomness `r = 2ρ + s` with `ρ ∈ {0,1}ⁿ`; Alice sends `(α, γ) = (z ⊕ s, ⟨x,ρ⟩)` as `2α + γ`,
/// Bob sends `β = ρ ⊕ s·y`. The referee forms `⟨x,β⟩ ⊕ γ = s·⟨x,y⟩`.
pub fn cds_inner_product(n: usize) -> Result<CdsProtocol> {
    let pred = Predicate::inner_product(n)?;
    CdsProtocol::from_fns(
        &format!("ip-cds-n{n}"),
        pred,
        2,
        vec![1; 1 << (n + 1)],
        (4, 1 << n),
        |x, z, r| {
            let (rho, s) = (r >> 1, r & 1);
            2 * (z ^ s) + parity(x & rho)
        },
        |y, r| {
            let (rho, s) = (r >> 1, r & 1);
            rho ^ if s == 1 { y } else { 0 }
        },
        (0.0, 0.0),
    )
}

/// `k` independent copies of `base` hiding a `k`-digit secret (base `|Z|`, most significant first).
pub fn parallel_cds(base: &CdsProtocol, k: usize) -> Result<CdsProtocol> {
    if k == 0 {
        return Err(Error::Argument("need at least one copy".into()));
    }
    let nz = base.secret_size;
    let nr = base.randomness_size();
    let zd = vec![nz; k];
    let rd = vec![nr; k];
    let m0d = vec![base.m0_size; k];
    let m1d = vec![base.m1_size; k];
    let secret = nz.pow(k as u32);
    let weights: Vec<u64> =
        (0..nr.pow(k as u32)).map(|r| digits(r, &rd).iter().map(|&ri| base.weights[ri]).product()).collect();
    CdsProtocol::from_fns(
        &format!("{}x{k}", base.name),
        base.predicate.clone(),
        secret,
        weights,
        (base.m0_size.pow(k as u32), base.m1_size.pow(k as u32)),
        |x, z, r| {
            let (zs, rs) = (digits(z, &zd), digits(r, &rd));
            let m: Vec<usize> = zs.iter().zip(&rs).map(|(&zi, &ri)| base.m0(x, zi, ri)).collect();
            undigits(&m, &m0d)
        },
        |y, r| {
            let m: Vec<usize> = digits(r, &rd).iter().map(|&ri| base.m1(y, ri)).collect();
            undigits(&m, &m1d)
        },
        (k as f64 * base.declared_eps, k as f64 * base.declared_delta),
    )
}

/// One-time-pad lift of a CDS hiding two bits into a CDQS hiding one qubit.
///
/// The CDS randomness is shared coherently as `Σ_r √p_r |r⟩_L|r⟩_R`. Alice's Kraus operators are
/// `½ |m₀(x,k,r)⟩ ⊗ X^a Z^b ⊗ ⟨r|_L` for pad key `k = 2a + b`, so `M₀ = CDS message ⊗ padded qubit`;
/// Bob's are `|m₁(y,r)⟩⟨r|`.
pub fn cds_to_cdqs_lift(c: &CdsProtocol) -> Result<CdqsProtocol> {
    if c.secret_size != 4 {
        return Err(Error::Argument(format!(
            "the lift pads one qubit with two key bits; CDS hides |Z| = {} values",
            c.secret_size
        )));
    }
    let nr = c.randomness_size();
    let weights: Vec<f64> = c.weights.iter().map(|&w| w as f64).collect();
    let resource = ResourceState::correlated(&weights)?;
    let in_a = SystemDims::new([("Q", 2), ("L", nr)])?;
    let out_a = SystemDims::new([("C0", c.m0_size), ("Qp", 2)])?;
    let inputs = c.predicate.inputs();
    let mut alice = Vec::with_capacity(inputs);
    for x in 0..inputs {
        let mut ops = Vec::with_capacity(4 * nr);
        for k in 0..4 {
            let pad = pauli(k >> 1, k & 1);
            for r in 0..nr {
                let m0 = c.m0(x, k, r);
                let mut op = zeros(2 * c.m0_size, 2 * nr);
                for q in 0..2 {
                    for qp in 0..2 {
                        op[(m0 * 2 + qp, q * nr + r)] = pad[(qp, q)] * 0.5;
                    }
                }
                ops.push(op);
            }
        }
        alice.push(QuantumChannel::from_kraus(ops, in_a.clone(), out_a.clone())?);
    }
    let mut bob = Vec::with_capacity(inputs);
    for y in 0..inputs {
        let ops = (0..nr)
            .map(|r| {
                let mut op = zeros(c.m1_size, nr);
                op[(c.m1(y, r), r)] = cr(1.0);
                op
            })
            .collect();
        bob.push(QuantumChannel::from_kraus(ops, SystemDims::single("R", nr), SystemDims::single("C1", c.m1_size))?);
    }
    CdqsProtocol::new(
        &format!("lift-{}", c.name),
        c.predicate.clone(),
        2,
        resource,
        alice,
        bob,
        (2.0 * c.declared_eps.sqrt(), c.declared_delta),
    )
}

/// Lifts a CDS hiding two bits directly, or one bit through two parallel copies.
pub fn lift_cds(c: &CdsProtocol) -> Result<CdqsProtocol> {
    match c.secret_size {
        4 => cds_to_cdqs_lift(c),
        2 => cds_to_cdqs_lift(&parallel_cds(c, 2)?),
        z => Err(Error::Argument(format!("cannot lift a CDS hiding {z} values"))),
    }
}

/// Lifted equality CDQS: two parallel equality instances carry the pad keys.
pub fn lifted_equality(n: usize) -> Result<CdqsProtocol> {
    cds_to_cdqs_lift(&parallel_cds(&cds_equality(n)?, 2)?)
}

pub fn lifted_inner_product(n: usize) -> Result<CdqsProtocol> {
    cds_to_cdqs_lift(&parallel_cds(&cds_inner_product(n)?, 2)?)
}

/// Largest `n` accepted by [`cdqs_nonequality_via_negation`].
pub const NEGATION_MAX_N: usize = 3;

/// Non-equality CDQS: the negation of the lifted equality protocol.
pub fn cdqs_nonequality_via_negation(n: usize) -> Result<CdqsProtocol> {
    if n > NEGATION_MAX_N {
        return Err(Error::Capacity { what: "negated equality input length".into(), needed: n, cap: NEGATION_MAX_N });
    }
    let mut p = crate::transforms::negate(&lifted_equality(n)?)?;
    p.name = format!("neq-n{n}");
    Ok(p)
}

/// Depolarizing channel on `d` labelled as a message.
fn dep_on(p: f64, d: usize, input: &str, output: &str) -> Result<QuantumChannel> {
    depolarizing(p, d)?.relabel_in(SystemDims::single(input, d))?.relabel_out(SystemDims::single(output, d))
}

fn trivial_bob() -> QuantumChannel {
    QuantumChannel::from_kraus(vec![identity(1)], SystemDims::single("R", 1), SystemDims::single("M1", 1))
        .expect("1x1 identity is a channel")
}

/// Dictator CDQS for `f(x, y) = x` on a `d`-dimensional secret with injected errors.
///
/// Alice sends `Q` through a depolarizing channel at diamond distance `eps` from the identity
/// when `x = 1`, and at distance `delta` from the completely depolarizing channel when `x = 0`.
pub fn alice_bit(d: usize, eps: f64, delta: f64) -> Result<CdqsProtocol> {
    let on = dep_on(depolarizing_for_diamond(eps, d), d, "Q", "M0")?;
    let off = dep_on(1.0 - depolarizing_for_diamond(delta, d), d, "Q", "M0")?;
    CdqsProtocol::new(
        &format!("alice-bit-d{d}"),
        Predicate::alice_bit(),
        d,
        ResourceState::none(),
        vec![off, on],
        vec![trivial_bob(), trivial_bob()],
        (eps, delta),
    )
}

/// Dictator CDQS for `f(x, y) = y`: Alice pads `Q` with a shared Weyl key, Bob reveals the key
/// when `y = 1` and, when `y = 0`, leaks it with the probability that puts the referee channel at
/// distance `delta` from a constant one.
pub fn bob_bit(d: usize, eps: f64, delta: f64) -> Result<CdqsProtocol> {
    let keys = d * d;
    let resource = ResourceState::correlated(&vec![1.0; keys])?;
    let noise = depolarizing(depolarizing_for_diamond(eps, d), d)?;
    let mut a_ops = Vec::new();
    for k in 0..keys {
        let w = weyl(d, k / d, k % d);
        for n in noise.kraus() {
            let wn = &w * n;
            let mut op = zeros(d, d * keys);
            for o in 0..d {
                for q in 0..d {
                    op[(o, q * keys + k)] = wn[(o, q)];
                }
            }
            a_ops.push(op);
        }
    }
    let alice =
        QuantumChannel::from_kraus(a_ops, SystemDims::new([("Q", d), ("L", keys)])?, SystemDims::single("M0", d))?;
    let leak = delta / (2.0 * (1.0 - 1.0 / keys as f64));
    if !(0.0..=1.0).contains(&leak) {
        return Err(Error::Argument(format!("security error {delta} out of range")));
    }
    let mut off_ops = vec![identity(keys).scale(leak.sqrt())];
    for kp in 0..keys {
        for r in 0..keys {
            let mut op = zeros(keys, keys);
            op[(kp, r)] = cr(((1.0 - leak) / keys as f64).sqrt());
            off_ops.push(op);
        }
    }
    let (rin, rout) = (SystemDims::single("R", keys), SystemDims::single("M1", keys));
    let off = QuantumChannel::from_kraus(off_ops, rin.clone(), rout.clone())?;
    let on = QuantumChannel::from_kraus(vec![identity(keys)], rin, rout)?;
    CdqsProtocol::new(
        &format!("bob-bit-d{d}"),
        Predicate::bob_bit(),
        d,
        resource,
        vec![alice.clone(), alice],
        vec![off, on],
        (eps, delta),
    )
}

fn split_dims(keep: usize, send: usize) -> SystemDims {
    SystemDims::new([("keep", keep), ("send", send)]).expect("distinct labels")
}

/// `|ψ⟩ ↦ |0⟩_keep ⊗ K|ψ⟩_send` (or the mirror image) for each Kraus operator `K`.
fn place(ops: &[ComplexMatrix], d_in: usize, d: usize, send: bool) -> Vec<ComplexMatrix> {
    let zero = basis_vector(d, 0);
    ops.iter()
        .map(|k| {
            let kd = ComplexMatrix::from_fn(d, d_in, |o, i| k[(o, i)]);
            if send {
                zero.kronecker(&kd)
            } else {
                kd.kronecker(&zero)
            }
        })
        .collect()
}

/// f-routing for `f(x, y) = x`: Alice sends `Q` (through depolarizing noise `p`) when `x = 1`
/// and keeps it otherwise. Declared correctness `3p/2`.
pub fn route_x(p: f64) -> Result<FRoutingProtocol> {
    let noise = depolarizing(p, 2)?;
    let in_a = SystemDims::single("Q", 2);
    let keep = QuantumChannel::from_kraus(place(noise.kraus(), 2, 2, false), in_a.clone(), split_dims(2, 2))?;
    let send = QuantumChannel::from_kraus(place(noise.kraus(), 2, 2, true), in_a, split_dims(2, 2))?;
    let bob = QuantumChannel::from_kraus(vec![identity(1)], SystemDims::single("R", 1), split_dims(1, 1))?;
    FRoutingProtocol::new(
        "route-x",
        Predicate::alice_bit(),
        2,
        ResourceState::none(),
        vec![keep, send],
        vec![bob.clone(), bob],
        1.5 * p,
    )
}

/// f-routing for `f(x, y) = y` by teleportation over a shared EPR pair: Alice Bell-measures
/// `Q L` and sends the outcome to both sides; Bob keeps `R` when `y = 1` and sends it otherwise.
pub fn route_y(p: f64) -> Result<FRoutingProtocol> {
    let noise = depolarizing(p, 2)?;
    let phi = max_entangled_vector(2);
    let mut ops = Vec::new();
    for k in 0..4 {
        let bell = pauli(k >> 1, k & 1).kronecker(&identity(2)) * &phi;
        let tag = basis_vector(4, k).kronecker(&basis_vector(4, k));
        for n in noise.kraus() {
            let pre = n.kronecker(&identity(2));
            ops.push(&tag * (bell.adjoint() * pre));
        }
    }
    let alice = QuantumChannel::from_kraus(ops, SystemDims::new([("Q", 2), ("L", 2)])?, split_dims(4, 4))?;
    let rin = SystemDims::single("R", 2);
    let keep = QuantumChannel::from_kraus(place(&[identity(2)], 2, 2, false), rin.clone(), split_dims(2, 2))?;
    let send = QuantumChannel::from_kraus(place(&[identity(2)], 2, 2, true), rin, split_dims(2, 2))?;
    FRoutingProtocol::new(
        "route-y",
        Predicate::bob_bit(),
        2,
        ResourceState::pure(phi, 2, 2)?,
        vec![alice.clone(), alice],
        vec![send, keep],
        1.5 * p,
    )
}

/// Alice never sends `Q`; fails on every 1-input of `f(x, y) = x`.
pub fn always_keep() -> Result<FRoutingProtocol> {
    let keep =
        QuantumChannel::from_kraus(place(&[identity(2)], 2, 2, false), SystemDims::single("Q", 2), split_dims(2, 2))?;
    let bob = QuantumChannel::from_kraus(vec![identity(1)], SystemDims::single("R", 1), split_dims(1, 1))?;
    FRoutingProtocol::new(
        "always-keep",
        Predicate::alice_bit(),
        2,
        ResourceState::none(),
        vec![keep.clone(), keep],
        vec![bob.clone(), bob],
        0.0,
    )
}

/// Named protocols and a one-line description each.
pub const REGISTRY: &[(&str, &str)] = &[
    ("eq", "equality CDS, 1-bit secret, 2 bits of communication"),
    ("ip", "inner-product CDS, 1-bit secret, n+2 bits of communication"),
    ("eq_lift", "equality CDQS: one-time-pad lift of two parallel equality CDS instances"),
    ("eq_pp", "alias of eq_lift (perfectly private input for the PP reduction)"),
    ("ip_lift", "inner-product CDQS: one-time-pad lift of two parallel inner-product CDS instances"),
    ("neq", "non-equality CDQS: negation of eq_lift"),
    ("alice_bit", "dictator CDQS f(x,y) = x on a qubit (n = 1)"),
    ("bob_bit", "dictator CDQS f(x,y) = y on a qubit (n = 1)"),
    ("route_x", "f-routing for f(x,y) = x by a local swap (n = 1)"),
    ("route_y", "f-routing for f(x,y) = y by teleportation (n = 1)"),
    ("always_keep", "f-routing that never sends Q, for f(x,y) = x (n = 1)"),
];

/// Instantiates a registry entry.
pub fn named(name: &str, n: usize) -> Result<LoadedProtocol> {
    let single = |what: &str| -> Result<()> {
        if n == 1 {
            Ok(())
        } else {
            Err(Error::Argument(format!("{what} is defined for n = 1 only")))
        }
    };
    Ok(match name {
        "eq" => LoadedProtocol::Cds(cds_equality(n)?),
        "ip" => LoadedProtocol::Cds(cds_inner_product(n)?),
        "eq_lift" | "eq_pp" => LoadedProtocol::Cdqs(lifted_equality(n)?),
        "ip_lift" => LoadedProtocol::Cdqs(lifted_inner_product(n)?),
        "neq" => LoadedProtocol::Cdqs(cdqs_nonequality_via_negation(n)?),
        "alice_bit" => {
            single(name)?;
            LoadedProtocol::Cdqs(alice_bit(2, 0.0, 0.0)?)
        }
        "bob_bit" => {
            single(name)?;
            LoadedProtocol::Cdqs(bob_bit(2, 0.0, 0.0)?)
        }
        "route_x" => {
            single(name)?;
            LoadedProtocol::FRouting(route_x(0.0)?)
        }
        "route_y" => {
            single(name)?;
            LoadedProtocol::FRouting(route_y(0.0)?)
        }
        "always_keep" => {
            single(name)?;
            LoadedProtocol::FRouting(always_keep()?)
        }
        other => {
            let known: Vec<&str> = REGISTRY.iter().map(|(k, _)| *k).collect();
            return Err(Error::Argument(format!("unknown protocol `{other}` (known: {})", known.join(", "))));
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{frouting_to_cdqs, verify_cdqs, verify_cds_exact, verify_frouting, VerifyOptions};

    #[test]
    fn equality_decodes_for_every_randomness() {
        let c = cds_equality(2).unwrap();
        let x = 0b01;
        for r in 0..c.randomness_size() {
            assert_eq!(c.m0(x, 1, r) ^ c.m1(x, r), 1);
        }
    }

    #[test]
    fn inner_product_referee_identity() {
        let c = cds_inner_product(2).unwrap();
        let (x, y) = (0b11, 0b01);
        for r in 0..c.randomness_size() {
            let (m0, m1) = (c.m0(x, 0, r), c.m1(y, r));
            let s = parity(x & m1) ^ (m0 & 1);
            assert_eq!((m0 >> 1) ^ s, 0);
        }
    }

    #[test]
    fn linear_cds_are_perfect() {
        for n in 1..=3 {
            for c in [cds_equality(n).unwrap(), cds_inner_product(n).unwrap()] {
                let r = verify_cds_exact(&c).unwrap();
                assert_eq!((r.eps_hat, r.delta_hat), (0.0, 0.0), "{}", c.name);
            }
            assert_eq!(cds_equality(n).unwrap().communication_bits(), 2);
            assert_eq!(cds_inner_product(n).unwrap().communication_bits(), n + 2);
        }
    }

    #[test]
    fn parallel_copies_stay_perfect() {
        let r = verify_cds_exact(&parallel_cds(&cds_equality(1).unwrap(), 2).unwrap()).unwrap();
        assert_eq!((r.eps_hat, r.delta_hat), (0.0, 0.0));
    }

    #[test]
    fn lift_requires_two_key_bits() {
        assert!(cds_to_cdqs_lift(&cds_equality(1).unwrap()).is_err());
    }

    #[test]
    fn lifted_equality_n1_certifies() {
        let p = lifted_equality(1).unwrap();
        assert_eq!(p.message_qubits(), 4 + 1);
        let r = verify_cdqs(&p, &VerifyOptions::default()).unwrap();
        assert!(r.pass && r.eps_hat <= 1e-6 && r.delta_hat <= 1e-6, "{r:?}");
    }

    #[test]
    fn dictators_certify_their_injected_errors() {
        for p in [alice_bit(2, 0.02, 0.02).unwrap(), bob_bit(2, 0.02, 0.02).unwrap()] {
            let r = verify_cdqs(&p, &VerifyOptions::default()).unwrap();
            assert!(r.eps_hat <= 0.02 + 1e-6 && r.delta_hat <= 0.02 + 1e-6, "{}: {r:?}", p.name);
            assert!(r.eps_hat >= 0.02 - 1e-6, "{}: {}", p.name, r.eps_hat);
        }
    }

    #[test]
    fn routing_examples() {
        let opts = VerifyOptions::default();
        for p in [route_x(0.0).unwrap(), route_y(0.0).unwrap()] {
            let r = verify_frouting(&p, &opts).unwrap();
            assert!(r.eps_hat <= 1e-6, "{}: {}", p.name, r.eps_hat);
            let c = verify_cdqs(&frouting_to_cdqs(&p).unwrap(), &opts).unwrap();
            assert!(c.delta_hat <= 1e-6 && c.eps_hat <= 1e-6, "{}", p.name);
        }
        let r = verify_frouting(&always_keep().unwrap(), &opts).unwrap();
        for row in r.rows.iter().filter(|r| r.f) {
            assert!(row.eps_lb.unwrap() > 0.4);
        }
    }

    #[test]
    fn noisy_routing_respects_converted_security() {
        let p = 0.05;
        let c = frouting_to_cdqs(&route_x(p).unwrap()).unwrap();
        let r = verify_cdqs(&c, &VerifyOptions::default()).unwrap();
        assert!(r.delta_hat <= 2.0 * (1.5 * p).sqrt() + 1e-6);
        assert!(r.eps_hat <= 1.5 * p + 1e-6);
    }

    #[test]
    fn registry_resolves_every_name() {
        for (name, _) in REGISTRY {
            if *name == "neq" {
                continue;
            }
            assert!(named(name, 1).is_ok(), "{name}");
        }
        assert!(named("nope", 1).is_err());
    }
}
