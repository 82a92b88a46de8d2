//! Classical conditional disclosure of secrets with exact verification.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::predicate::Predicate;
use super::report::{InputRow, VerificationReport};
use crate::error::{Error, Result};
use crate::sdp::{solve, Relation, SdpProblem, Sense, SolverOptions, SparseHermitian};
use crate::tensor::identity;

/// Largest number of `(x, y, z, r)` tuples enumerated by [`verify_cds_exact`].
pub const MAX_ENUMERATION: usize = 1_000_000;

/// Message tables of a CDS protocol.
///
/// `alice[(x·|Z| + z)·|R| + r] = m₀(x, z, r)` and `bob[y·|R| + r] = m₁(y, r)`; the shared
/// randomness `r` has probability `weights[r] / Σ weights`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdsProtocol {
    pub name: String,
    pub predicate: Predicate,
    pub secret_size: usize,
    pub weights: Vec<u64>,
    pub m0_size: usize,
    pub m1_size: usize,
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
    pub declared_eps: f64,
    pub declared_delta: f64,
}

impl CdsProtocol {
    /// Tabulates the message maps and checks that every message lies in its alphabet.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fns(
        name: &str,
        predicate: Predicate,
        secret_size: usize,
        weights: Vec<u64>,
        (m0_size, m1_size): (usize, usize),
        m0: impl Fn(usize, usize, usize) -> usize,
        m1: impl Fn(usize, usize) -> usize,
        declared: (f64, f64),
    ) -> Result<CdsProtocol> {
        let inputs = predicate.inputs();
        let nr = weights.len();
        let mut alice = Vec::with_capacity(inputs * secret_size * nr);
        for x in 0..inputs {
            for z in 0..secret_size {
                for r in 0..nr {
                    alice.push(m0(x, z, r));
                }
            }
        }
        let mut bob = Vec::with_capacity(inputs * nr);
        for y in 0..inputs {
            for r in 0..nr {
                bob.push(m1(y, r));
            }
        }
        let p = CdsProtocol {
            name: name.to_string(),
            predicate,
            secret_size,
            weights,
            m0_size,
            m1_size,
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
        let nr = self.weights.len();
        if self.secret_size < 2 || nr == 0 || self.weights.iter().all(|&w| w == 0) {
            return Err(Error::validation("cds alphabets", "need |Z| ≥ 2 and a nonzero randomness distribution"));
        }
        if self.alice.len() != inputs * self.secret_size * nr || self.bob.len() != inputs * nr {
            return Err(Error::validation("cds maps total", "message tables do not cover their domains"));
        }
        if self.alice.iter().any(|&m| m >= self.m0_size) || self.bob.iter().any(|&m| m >= self.m1_size) {
            return Err(Error::validation("cds alphabets", "message outside its alphabet"));
        }
        Ok(())
    }

    pub fn randomness_size(&self) -> usize {
        self.weights.len()
    }

    pub fn m0(&self, x: usize, z: usize, r: usize) -> usize {
        self.alice[(x * self.secret_size + z) * self.weights.len() + r]
    }

    pub fn m1(&self, y: usize, r: usize) -> usize {
        self.bob[y * self.weights.len() + r]
    }

    /// Total message bits `⌈log₂|M₀|⌉ + ⌈log₂|M₁|⌉`.
    pub fn communication_bits(&self) -> usize {
        ceil_log2(self.m0_size) + ceil_log2(self.m1_size)
    }

    /// Unnormalized referee distributions `counts[z][m₀·|M₁| + m₁]` for input `(x, y)`.
    pub fn message_counts(&self, x: usize, y: usize) -> Vec<Vec<u128>> {
        let nm = self.m0_size * self.m1_size;
        (0..self.secret_size)
            .map(|z| {
                let mut c = vec![0u128; nm];
                for (r, &w) in self.weights.iter().enumerate() {
                    c[self.m0(x, z, r) * self.m1_size + self.m1(y, r)] += w as u128;
                }
                c
            })
            .collect()
    }
}

pub(crate) fn ceil_log2(v: usize) -> usize {
    if v <= 1 {
        0
    } else {
        (usize::BITS - (v - 1).leading_zeros()) as usize
    }
}

/// `1 − min_z Pr[success | z]` of the MAP decoder, ties split uniformly among maximizers.
fn map_error(counts: &[Vec<u128>], total: u128) -> Ratio<i128> {
    let nz = counts.len();
    let mut success = vec![Ratio::<i128>::zero(); nz];
    for m in 0..counts[0].len() {
        let best = counts.iter().map(|c| c[m]).max().unwrap_or(0);
        if best == 0 {
            continue;
        }
        let winners: Vec<usize> = (0..nz).filter(|&z| counts[z][m] == best).collect();
        for &z in &winners {
            success[z] += Ratio::new(best as i128, winners.len() as i128);
        }
    }
    let min = success.into_iter().min().unwrap_or_else(Ratio::zero);
    Ratio::from_integer(1) - min / Ratio::from_integer(total as i128)
}

/// `min_S max_z ‖S − P_z‖₁` over distributions `S`.
fn simulator_distance(counts: &[Vec<u128>], total: u128) -> Result<f64> {
    if counts.iter().all(|c| c == &counts[0]) {
        return Ok(0.0);
    }
    if counts.len() == 2 {
        // The midpoint is optimal for two distributions.
        let diff: u128 = counts[0].iter().zip(&counts[1]).map(|(a, b)| a.abs_diff(*b)).sum();
        return Ok(Ratio::new(diff as i128, 2 * total as i128).to_f64().unwrap_or(f64::NAN));
    }
    chebyshev_center_lp(counts, total)
}

fn chebyshev_center_lp(counts: &[Vec<u128>], total: u128) -> Result<f64> {
    let support: Vec<usize> = (0..counts[0].len()).filter(|&m| counts.iter().any(|c| c[m] > 0)).collect();
    let mut p = SdpProblem::new(Sense::Minimize);
    let one = |v: f64| SparseHermitian::diagonal(1, v);
    let s: Vec<usize> = support.iter().map(|_| p.add_block(1)).collect();
    let t = p.add_block(1);
    p.set_objective(t, identity(1));
    let mut mass = Vec::new();
    for c in counts {
        let mut row = Vec::new();
        for (k, &m) in support.iter().enumerate() {
            let a = p.add_block(1);
            let b = p.add_block(1);
            p.add_constraint(
                vec![(s[k], one(1.0)), (a, one(-1.0)), (b, one(1.0))],
                Relation::Eq,
                c[m] as f64 / total as f64,
            );
            row.push((a, one(1.0)));
            row.push((b, one(1.0)));
        }
        row.push((t, one(-1.0)));
        p.add_constraint(row, Relation::Le, 0.0);
    }
    for &sk in &s {
        mass.push((sk, one(1.0)));
    }
    p.add_constraint(mass, Relation::Eq, 1.0);
    let sol = solve(&p, &SolverOptions::default())?;
    sol.require_optimal("cds simulator LP")?;
    Ok(sol.primal_value)
}

/// Exhaustive verification: exact MAP correctness on 1-inputs, exact optimal simulator on 0-inputs.
pub fn verify_cds_exact(p: &CdsProtocol) -> Result<VerificationReport> {
    p.validate()?;
    let inputs = p.predicate.inputs();
    let tuples = inputs * inputs * p.secret_size * p.randomness_size();
    if tuples > MAX_ENUMERATION {
        return Err(Error::Capacity { what: "cds enumeration".into(), needed: tuples, cap: MAX_ENUMERATION });
    }
    let total: u128 = p.weights.iter().map(|&w| w as u128).sum();
    let mut rows = Vec::with_capacity(inputs * inputs);
    for x in 0..inputs {
        for y in 0..inputs {
            let f = p.predicate.eval(x, y);
            let counts = p.message_counts(x, y);
            let mut row = InputRow { x, y, f, ..Default::default() };
            if f {
                let e = map_error(&counts, total).to_f64().unwrap_or(f64::NAN);
                row.eps_ub = Some(e);
                row.eps_lb = Some(e);
                row.witness = Some("map decoder".into());
            } else {
                match simulator_distance(&counts, total) {
                    Ok(d) => {
                        row.delta_ub = Some(d);
                        row.delta_lb = Some(d);
                        row.witness = Some("chebyshev center".into());
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
            rows.push(row);
        }
    }
    Ok(VerificationReport::assemble(
        &p.name,
        "cds",
        &p.predicate.name,
        p.predicate.n,
        rows,
        (p.declared_eps, p.declared_delta),
        crate::protocol::DEFAULT_TOL,
        p.communication_bits() as f64,
        false,
    ))
}
