//! One-way protocol from a CDQS: Alice collects copies of `ρ_{Q̄M}`, estimates its distance from
//! the product of its marginals and reads off `f(x, y)`.

use num_complex::Complex64;
use serde::Serialize;

use super::l2::Distribution;
use super::ReferenceState;
use crate::blocks::BlockChannel;
use crate::error::{Error, Result};
use crate::protocol::CdqsProtocol;
use crate::tensor::{
    c, cr, identity, partial_trace_positions, rng_from_seed, trace_norm_hermitian, zeros, ComplexMatrix,
};

/// Largest product distance of a 0-input of a (0.09, 0.09) protocol.
pub const GAP_LOW: f64 = 0.09;
/// `2(1 − 1/√2) − 0.09`, the smallest product distance of a 1-input when `d_Q = 2`.
pub const GAP_HIGH: f64 = 0.495_786_437_626_904_9;
/// Midpoint of the gap.
pub const THRESHOLD: f64 = 0.293;

/// Largest tomography dimension simulated shot by shot.
const MAX_TOMOGRAPHY_DIM: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OneWayMode {
    Oracle,
    Sampled,
}

#[derive(Clone, Debug, Serialize)]
pub struct OneWayOptions {
    pub mode: OneWayMode,
    /// Constant in the copy count `⌈C d² ln(1/δ_fail)/ε̃²⌉`.
    pub constant: f64,
    pub delta_fail: f64,
    /// Tomography accuracy; half the gap by default.
    pub eps_tilde: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for OneWayOptions {
    fn default() -> Self {
        OneWayOptions {
            mode: OneWayMode::Oracle,
            constant: 10.0,
            delta_fail: 0.05,
            eps_tilde: (GAP_HIGH - GAP_LOW) / 2.0,
            trials: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OneWayRow {
    pub x: usize,
    pub y: usize,
    pub f: bool,
    /// Exact `‖ρ_{Q̄M} − ρ_{Q̄} ⊗ ρ_M‖₁`.
    pub distance: f64,
    pub classified: bool,
    /// Mean tomographic estimate of the distance (sampled mode).
    pub estimate: Option<f64>,
    /// Trials whose classification disagreed with `f` (sampled mode).
    pub misclassified: usize,
    pub gap_violation: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OneWayReport {
    pub protocol: String,
    pub options: OneWayOptions,
    pub rows: Vec<OneWayRow>,
    /// Dimension of `Q̄ ⊗ M`.
    pub dimension: usize,
    pub copies: usize,
    /// Qubits sent over all copies, `copies × message qubits`.
    pub message_qubits: usize,
    pub error_rate: f64,
    pub all_correct: bool,
}

/// `⌈C d² ln(1/δ_fail)/ε̃²⌉`.
pub fn tomography_copies(d: usize, constant: f64, delta_fail: f64, eps_tilde: f64) -> usize {
    (constant * (d * d) as f64 * (1.0 / delta_fail).ln() / (eps_tilde * eps_tilde)).ceil() as usize
}

pub fn one_way_reduction(p: &CdqsProtocol, opts: &OneWayOptions) -> Result<OneWayReport> {
    if !(opts.delta_fail > 0.0 && opts.delta_fail < 1.0 && opts.eps_tilde > 0.0 && opts.constant > 0.0) {
        return Err(Error::Argument("need 0 < δ_fail < 1, ε̃ > 0 and C > 0".into()));
    }
    p.validate()?;
    let dimension = p.d_q * p.d_m0() * p.d_m1();
    let copies = tomography_copies(dimension, opts.constant, opts.delta_fail, opts.eps_tilde);
    let sampled = opts.mode == OneWayMode::Sampled;
    if sampled && (!dimension.is_power_of_two() || dimension > MAX_TOMOGRAPHY_DIM) {
        return Err(Error::Capacity {
            what: "shot-level Pauli tomography (power-of-two dimension)".into(),
            needed: dimension,
            cap: MAX_TOMOGRAPHY_DIM,
        });
    }
    let inputs = p.predicate.inputs();
    let mut rows = Vec::with_capacity(inputs * inputs);
    let mut wrong = 0usize;
    for x in 0..inputs {
        for y in 0..inputs {
            let f = p.predicate.eval(x, y);
            let n = p.combined(x, y)?;
            let distance = ReferenceState::new(&n)?.product_distance();
            let gap_violation = distance > GAP_LOW && distance < GAP_HIGH;
            let mut row = OneWayRow {
                x,
                y,
                f,
                distance,
                classified: distance > THRESHOLD,
                estimate: None,
                misclassified: 0,
                gap_violation,
            };
            if sampled {
                let rho = dense_reference_state(&n)?;
                let seed = opts.seed ^ ((x * inputs + y) as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
                let mut rng = rng_from_seed(seed);
                let mut total = 0.0;
                for _ in 0..opts.trials {
                    let est = pauli_tomography(&rho, copies, &mut rng);
                    let d = product_distance_dense(&est, p.d_q)?;
                    total += d;
                    if (d > THRESHOLD) != f {
                        row.misclassified += 1;
                    }
                }
                row.estimate = Some(total / opts.trials.max(1) as f64);
                let majority_right = row.misclassified * 2 < opts.trials.max(1);
                row.classified = if majority_right { f } else { !f };
                wrong += row.misclassified;
            } else if row.classified != f {
                wrong += 1;
            }
            rows.push(row);
        }
    }
    let attempts = if sampled { rows.len() * opts.trials.max(1) } else { rows.len() };
    let error_rate = wrong as f64 / attempts as f64;
    Ok(OneWayReport {
        protocol: p.name.clone(),
        options: opts.clone(),
        all_correct: rows.iter().all(|r| r.classified == r.f && !r.gap_violation),
        rows,
        dimension,
        copies,
        message_qubits: copies * p.message_qubits(),
        error_rate,
    })
}

/// `ρ_{Q̄M}` on `Q̄ ⊗ M` with `M` the ambient output space.
fn dense_reference_state(n: &BlockChannel) -> Result<ComplexMatrix> {
    let d = n.d_in;
    let mut rho = zeros(d * n.d_out, d * n.d_out);
    for b in &n.blocks {
        let local = identity(d).kronecker(&b.basis);
        let j = &local * b.choi(d).unscale(d as f64) * local.adjoint();
        let w = b.coords.len();
        for (r, row) in (0..d * w).map(|r| (r, (r / w) * n.d_out + b.coords[r % w])) {
            for (s, col) in (0..d * w).map(|s| (s, (s / w) * n.d_out + b.coords[s % w])) {
                rho[(row, col)] += j[(r, s)];
            }
        }
    }
    Ok(rho)
}

fn product_distance_dense(rho: &ComplexMatrix, d_ref: usize) -> Result<f64> {
    let dims = [d_ref, rho.nrows() / d_ref];
    let a = partial_trace_positions(rho, &dims, &[0])?;
    let b = partial_trace_positions(rho, &dims, &[1])?;
    Ok(trace_norm_hermitian(&(rho - a.kronecker(&b))))
}

fn single_pauli(k: usize) -> ComplexMatrix {
    let z = cr(0.0);
    let one = cr(1.0);
    let entries = match k {
        0 => [one, z, z, one],
        1 => [z, one, one, z],
        2 => [z, c(0.0, -1.0), c(0.0, 1.0), z],
        _ => [one, z, z, -one],
    };
    ComplexMatrix::from_row_slice(2, 2, &entries)
}

/// Rotation taking the eigenbasis of X, Y or Z (basis 0, 1, 2) to the computational basis.
fn basis_change(basis: usize) -> ComplexMatrix {
    let h = 1.0 / 2f64.sqrt();
    match basis {
        0 => ComplexMatrix::from_row_slice(2, 2, &[cr(h), cr(h), cr(h), cr(-h)]),
        1 => ComplexMatrix::from_row_slice(2, 2, &[cr(h), c(0.0, -h), cr(h), c(0.0, h)]),
        _ => identity(2),
    }
}

fn kron_all(factors: impl Iterator<Item = ComplexMatrix>) -> ComplexMatrix {
    factors.fold(identity(1), |acc, f| acc.kronecker(&f))
}

/// Linear-inversion tomography from `copies` shots spread over all `3^q` local Pauli settings.
fn pauli_tomography(rho: &ComplexMatrix, copies: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    let d = rho.nrows();
    let q = d.trailing_zeros() as usize;
    let settings = 3usize.pow(q as u32);
    let shots = copies.div_ceil(settings).max(1);
    let paulis = 4usize.pow(q as u32);
    // Per Pauli string: (sum of ±1 outcomes, number of shots that measured it).
    let mut sums = vec![(0.0f64, 0usize); paulis];
    for s in 0..settings {
        let bases: Vec<usize> = (0..q).map(|i| (s / 3usize.pow((q - 1 - i) as u32)) % 3).collect();
        let u = kron_all(bases.iter().map(|&b| basis_change(b)));
        let rotated = &u * rho * u.adjoint();
        let probs: Vec<f64> = (0..d).map(|i| rotated[(i, i)].re.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        let dist =
            Distribution::new(probs.iter().map(|p| p / total).collect()).unwrap_or_else(|_| Distribution::point(d, 0));
        let mut counts = vec![0usize; d];
        for _ in 0..shots {
            counts[dist.sample(rng)] += 1;
        }
        // Pauli strings compatible with this setting: identity or the measured axis on each qubit.
        for mask in 0..(1usize << q) {
            let code = (0..q).fold(0, |acc, i| {
                let on = mask >> (q - 1 - i) & 1 == 1;
                acc * 4 + if on { bases[i] + 1 } else { 0 }
            });
            let signed: f64 = counts
                .iter()
                .enumerate()
                .map(|(o, &n)| if (o & mask).count_ones() % 2 == 0 { n as f64 } else { -(n as f64) })
                .sum();
            sums[code].0 += signed;
            sums[code].1 += shots;
        }
    }
    let mut est = zeros(d, d);
    for (code, &(sum, n)) in sums.iter().enumerate() {
        let mean = if code == 0 { 1.0 } else { sum / n as f64 };
        let p = kron_all((0..q).map(|i| single_pauli((code / 4usize.pow((q - 1 - i) as u32)) % 4)));
        est += p * Complex64::new(mean / d as f64, 0.0);
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::max_entangled;
    use crate::zoo::{alice_bit, lifted_equality};

    #[test]
    fn gap_constants() {
        assert!((GAP_HIGH - (2.0 * (1.0 - 0.5f64.sqrt()) - 0.09)).abs() < 1e-15);
        assert!((THRESHOLD - (GAP_LOW + GAP_HIGH) / 2.0).abs() < 1e-3);
    }

    #[test]
    fn tomography_recovers_a_bell_state() {
        let rho = max_entangled(2).into_matrix();
        let mut rng = rng_from_seed(2);
        let est = pauli_tomography(&rho, 90_000, &mut rng);
        assert!(trace_norm_hermitian(&(&est - &rho)) < 0.05);
        assert!((product_distance_dense(&rho, 2).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_mode_on_lifted_equality() {
        let p = lifted_equality(1).unwrap();
        let r = one_way_reduction(&p, &OneWayOptions::default()).unwrap();
        assert!(r.all_correct, "{r:?}");
        for row in &r.rows {
            if row.f {
                assert!(row.distance >= GAP_HIGH);
            } else {
                assert!(row.distance <= 1e-9);
            }
        }
    }

    #[test]
    fn sampled_mode_on_noisy_dictator() {
        let p = alice_bit(2, 0.09, 0.09).unwrap();
        let opts = OneWayOptions { mode: OneWayMode::Sampled, trials: 20, seed: 7, ..Default::default() };
        let r = one_way_reduction(&p, &opts).unwrap();
        assert_eq!(r.dimension, 4);
        assert_eq!(r.copies, tomography_copies(4, 10.0, 0.05, opts.eps_tilde));
        assert!(r.error_rate <= 0.05, "{r:?}");
    }
}
