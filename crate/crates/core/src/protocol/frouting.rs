//! f-routing: the secret must end on Bob's side when `f = 1` and on Alice's side when `f = 0`.

use super::cdqs::{certify_row, combine_local, CdqsProtocol, VerifyOptions};
use super::cds::ceil_log2;
use super::predicate::Predicate;
use super::report::{InputRow, VerificationReport};
use crate::blocks::BlockChannel;
use crate::channel::{identity_channel, QuantumChannel, ResourceState};
use crate::error::{Error, Result};

/// One-round f-routing protocol with local channels.
///
/// Alice maps `Q ⊗ L → A_keep ⊗ A_send`, Bob maps `R → B_keep ⊗ B_send` (output systems in that
/// order). After the round Bob holds `M = A_send ⊗ B_keep` and Alice holds `M′ = A_keep ⊗ B_send`.
#[derive(Clone, Debug)]
pub struct FRoutingProtocol {
    pub name: String,
    pub predicate: Predicate,
    pub d_q: usize,
    pub resource: ResourceState,
    pub alice: Vec<QuantumChannel>,
    pub bob: Vec<QuantumChannel>,
    pub declared_eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `M = A_send ⊗ B_keep`.
    Bob,
    /// `M′ = A_keep ⊗ B_send`.
    Alice,
}

impl FRoutingProtocol {
    pub fn new(
        name: &str,
        predicate: Predicate,
        d_q: usize,
        resource: ResourceState,
        alice: Vec<QuantumChannel>,
        bob: Vec<QuantumChannel>,
        declared_eps: f64,
    ) -> Result<Self> {
        let p = FRoutingProtocol { name: name.to_string(), predicate, d_q, resource, alice, bob, declared_eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let inputs = self.predicate.inputs();
        if self.alice.len() != inputs || self.bob.len() != inputs {
            return Err(Error::validation("channel families indexed by inputs", "wrong number of channels"));
        }
        let split = |c: &QuantumChannel, who: &str| -> Result<Vec<usize>> {
            let dims = c.out_dims().dims();
            if dims.len() != 2 {
                return Err(Error::validation(
                    "M/M' partition declared",
                    format!("{who} output must be (keep, send), found {} systems", dims.len()),
                ));
            }
            Ok(dims)
        };
        let a0 = split(&self.alice[0], "alice")?;
        let b0 = split(&self.bob[0], "bob")?;
        for a in &self.alice {
            if split(a, "alice")? != a0 || a.d_in() != self.d_q * self.resource.d_l() {
                return Err(Error::validation("alice channel dims", "inconsistent Alice channels"));
            }
        }
        for b in &self.bob {
            if split(b, "bob")? != b0 || b.d_in() != self.resource.d_r() {
                return Err(Error::validation("bob channel dims", "inconsistent Bob channels"));
            }
        }
        Ok(())
    }

    /// Qubits sent between the parties: `A_send` plus `B_send`.
    pub fn message_qubits(&self) -> usize {
        let a = self.alice[0].out_dims().dims();
        let b = self.bob[0].out_dims().dims();
        ceil_log2(a[1]) + ceil_log2(b[1])
    }

    /// Channel from `Q` to the systems held by `side` after the round.
    pub fn side_channel(&self, x: usize, y: usize, side: Side) -> Result<BlockChannel> {
        let (a_keep, b_keep) = match side {
            Side::Bob => ([1], [0]),
            Side::Alice => ([0], [1]),
        };
        let a = self.alice[x].trace_output(&a_keep)?;
        let b = self.bob[y].trace_output(&b_keep)?;
        combine_local(&a, &b, &self.resource, self.d_q)
    }
}

/// Certifies recoverability from `M` on 1-inputs and from `M′` on 0-inputs.
pub fn verify_frouting(p: &FRoutingProtocol, opts: &VerifyOptions) -> Result<VerificationReport> {
    p.validate()?;
    let inputs = p.predicate.inputs();
    let target = identity_channel(p.d_q);
    let mut rows = Vec::with_capacity(inputs * inputs);
    for x in 0..inputs {
        for y in 0..inputs {
            let f = p.predicate.eval(x, y);
            let side = if f { Side::Bob } else { Side::Alice };
            let mut row = match p.side_channel(x, y, side) {
                Ok(n) => {
                    let mut r = certify_row(&n, true, &target, &opts.certify);
                    r.f = f;
                    r
                }
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
        "frouting",
        &p.predicate.name,
        p.predicate.n,
        rows,
        (p.declared_eps, 0.0),
        opts.tol,
        p.message_qubits() as f64,
        true,
    ))
}

/// CDQS whose messages are the systems Bob holds after the round (`A_send`, `B_keep`); the
/// systems ending with Alice are discarded. Declared parameters `(ε, 2√ε)`.
pub fn frouting_to_cdqs(p: &FRoutingProtocol) -> Result<CdqsProtocol> {
    let alice = p.alice.iter().map(|a| a.trace_output(&[1])).collect::<Result<Vec<_>>>()?;
    let bob = p.bob.iter().map(|b| b.trace_output(&[0])).collect::<Result<Vec<_>>>()?;
    CdqsProtocol::new(
        &format!("cdqs-from-{}", p.name),
        p.predicate.clone(),
        p.d_q,
        p.resource.clone(),
        alice,
        bob,
        (p.declared_eps, 2.0 * p.declared_eps.sqrt()),
    )
}
