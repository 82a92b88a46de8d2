//! Channel problems: diamond norm, optimal decoders, constant simulators, state discrimination.
//!
//! Every builder works per output block of a [`BlockChannel`] (or on a single block for plain
//! Choi matrices). Reported upper bounds of minimization problems are re-derived from a
//! repaired feasible point, so they do not depend on the solver's residuals.

use super::{
    matrix_from_multipliers, solve, LinearMap, Relation, SdpProblem, SdpStatus, Sense, SolverOptions, SparseHermitian,
};
use crate::blocks::{BlockChannel, ChannelBlock};
use crate::channel::{choi_difference, QuantumChannel};
use crate::error::{Error, Result};
use crate::tensor::{
    self, eigh, hermitian_function, hermitian_part, identity, max_eigenvalue, min_eigenvalue, trace_norm_hermitian,
    zeros, ComplexMatrix,
};

#[derive(Clone, Debug)]
pub struct DiamondResult {
    /// Certified upper bound on the diamond norm.
    pub value: f64,
    /// Lower bound attained by `worst_input`.
    pub lower: f64,
    /// Reference-side state `ρ` of the optimal input `(√ρ ⊗ I)|Ω⟩`.
    pub worst_input: ComplexMatrix,
    pub status: SdpStatus,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SimulatorResult {
    /// Certified upper bound on `min_σ ‖N − R_σ‖⋄`.
    pub value: f64,
    /// Dual lower bound.
    pub lower: f64,
    /// Optimal constant output per block, on the block's compressed support.
    pub sigma: Vec<ComplexMatrix>,
    pub status: SdpStatus,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct DecoderResult {
    /// Fidelity attained by the returned (exactly trace-preserving) decoders.
    pub fidelity: f64,
    /// Dual upper bound on the optimal fidelity.
    pub upper: f64,
    /// Decoder Choi matrices on `block ⊗ Q`, one per block.
    pub decoders: Vec<ComplexMatrix>,
    pub status: SdpStatus,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct DiscriminationResult {
    /// Success probability of the returned measurement.
    pub success: f64,
    pub upper: f64,
    /// POVM elements indexed `[z][block]`.
    pub povm: Vec<Vec<ComplexMatrix>>,
    pub status: SdpStatus,
}

/// `Tr_2` of an operator on `d1 ⊗ d2`.
fn trace_second(m: &ComplexMatrix, d1: usize, d2: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|o| m[(i * d2 + o, j * d2 + o)]).sum())
}

fn embed_second(sigma: &ComplexMatrix, d1: usize) -> ComplexMatrix {
    tensor::tensor_product(&identity(d1), sigma).expect("block within capacity")
}

fn psd_part(m: &ComplexMatrix) -> ComplexMatrix {
    hermitian_function(&hermitian_part(m), |x| x.max(0.0))
}

/// Smallest `t` with `Σ_b Tr_2 Y_b ⪯ t I` after shifting each `Y_b` until `Y_b ⪰ ±Δ_b`.
fn repaired_bound(ys: &[ComplexMatrix], deltas: &[ComplexMatrix], d_in: usize, dims: &[usize]) -> f64 {
    let mut total = zeros(d_in, d_in);
    for ((y, delta), &v) in ys.iter().zip(deltas).zip(dims) {
        let y = hermitian_part(y);
        let shift = 0.0f64.max(-min_eigenvalue(&(&y - delta))).max(-min_eigenvalue(&(&y + delta)));
        let y = &y + identity(y.nrows()).scale(shift);
        total += trace_second(&y, d_in, v);
    }
    max_eigenvalue(&total)
}

struct MinMaxProblem {
    problem: SdpProblem,
    u: Vec<usize>,
    sigma: Vec<usize>,
    global: std::ops::Range<usize>,
}

/// `min t` s.t. `Y_b ⪰ ±Δ_b`, `Σ_b Tr_2 Y_b ⪯ t I`, with `Δ_b = J_b − I ⊗ σ_b` when `simulate`.
fn min_max_problem(blocks: &[ComplexMatrix], dims: &[usize], d_in: usize, simulate: bool) -> MinMaxProblem {
    let mut p = SdpProblem::new(Sense::Minimize);
    let mut u = Vec::new();
    let mut sigma = Vec::new();
    let mut rhs_global = if simulate { identity(d_in) } else { zeros(d_in, d_in) };
    for (j, &v) in blocks.iter().zip(dims) {
        let n = d_in * v;
        let ub = p.add_block(n);
        let lb = p.add_block(n);
        u.push(ub);
        let mut terms = vec![(lb, LinearMap::Identity, 1.0), (ub, LinearMap::Identity, -1.0)];
        if simulate {
            let sb = p.add_block(v);
            sigma.push(sb);
            terms.push((sb, LinearMap::EmbedSecond { d1: d_in, d2: v }, 2.0));
        }
        p.add_matrix_equality(n, &terms, &j.scale(2.0));
        rhs_global -= trace_second(j, d_in, v);
    }
    let tb = p.add_block(d_in);
    let t = p.add_block(1);
    p.set_objective(t, identity(1));
    let mut terms = vec![(tb, LinearMap::Identity, 1.0), (t, LinearMap::ScalarIdentity, -1.0)];
    for (&ub, &v) in u.iter().zip(dims) {
        terms.push((ub, LinearMap::TraceSecond { d1: d_in, d2: v }, 1.0));
    }
    let global = p.add_matrix_equality(d_in, &terms, &rhs_global);
    if simulate {
        let terms = sigma.iter().zip(dims).map(|(&s, &v)| (s, SparseHermitian::diagonal(v, 1.0))).collect();
        p.add_constraint(terms, Relation::Eq, 1.0);
    }
    MinMaxProblem { problem: p, u, sigma, global }
}

fn check_blocks(blocks: &[ComplexMatrix], dims: &[usize], d_in: usize) -> Result<()> {
    if blocks.len() != dims.len() || blocks.is_empty() {
        return Err(Error::Argument("one Choi block per output block required".into()));
    }
    for (j, &v) in blocks.iter().zip(dims) {
        if j.nrows() != d_in * v || j.ncols() != d_in * v {
            return Err(Error::Argument(format!("Choi block {:?} does not match {d_in}x{v}", j.shape())));
        }
    }
    Ok(())
}

/// Diamond norm of a Hermiticity-preserving map given by output-block Choi matrices on `in ⊗ V_b`.
pub fn diamond_norm_blocks(blocks: &[ComplexMatrix], dims: &[usize], d_in: usize) -> Result<DiamondResult> {
    check_blocks(blocks, dims, d_in)?;
    let blocks: Vec<ComplexMatrix> = blocks.iter().map(hermitian_part).collect();
    let mm = min_max_problem(&blocks, dims, d_in, false);
    let sol = solve(&mm.problem, &SolverOptions::default())?;
    sol.require_optimal("diamond norm")?;
    let ys: Vec<ComplexMatrix> = mm.u.iter().zip(&blocks).map(|(&ub, j)| &sol.x[ub] + j).collect();
    let value = repaired_bound(&ys, &blocks, d_in, dims);
    let r = matrix_from_multipliers(d_in, &sol.y[mm.global.clone()]);
    let mut rho = psd_part(&r.scale(-1.0));
    let tr = tensor::trace(&rho).re;
    rho = if tr > 1e-12 { rho.unscale(tr) } else { identity(d_in).unscale(d_in as f64) };
    let lower = diamond_value_at(&blocks, dims, &rho);
    Ok(DiamondResult {
        value: value.max(lower),
        lower,
        worst_input: rho,
        status: sol.status,
        iterations: sol.iterations,
    })
}

/// `Σ_b ‖(√ρ ⊗ I) J_b (√ρ ⊗ I)‖₁`, the value of the input `(√ρ ⊗ I)|Ω⟩`.
pub fn diamond_value_at(blocks: &[ComplexMatrix], dims: &[usize], rho: &ComplexMatrix) -> f64 {
    let sq = hermitian_function(rho, |x| x.max(0.0).sqrt());
    blocks
        .iter()
        .zip(dims)
        .map(|(j, &v)| {
            let s = embed_right(&sq, v);
            trace_norm_hermitian(&hermitian_part(&(&s * j * &s)))
        })
        .sum()
}

fn embed_right(a: &ComplexMatrix, v: usize) -> ComplexMatrix {
    tensor::tensor_product(a, &identity(v)).expect("block within capacity")
}

/// Diamond norm of the map with Choi matrix `choi` on `d_in ⊗ d_out`.
pub fn diamond_norm(choi: &ComplexMatrix, d_in: usize, d_out: usize) -> Result<DiamondResult> {
    diamond_norm_blocks(std::slice::from_ref(choi), &[d_out], d_in)
}

/// `‖a − b‖⋄`.
pub fn diamond_norm_channels(a: &QuantumChannel, b: &QuantumChannel) -> Result<DiamondResult> {
    let j = choi_difference(a, b)?;
    diamond_norm(&j, a.d_in(), a.d_out())
}

/// `min_σ ‖N − R_σ‖⋄` where `R_σ` replaces every input by `σ`.
pub fn optimal_constant_simulator_blocks(ch: &BlockChannel) -> Result<SimulatorResult> {
    let d_in = ch.d_in;
    let dims = ch.block_dims();
    let blocks: Vec<ComplexMatrix> = ch.blocks.iter().map(|b| b.choi(d_in)).collect();
    check_blocks(&blocks, &dims, d_in)?;
    let mm = min_max_problem(&blocks, &dims, d_in, true);
    let sol = solve(&mm.problem, &SolverOptions::default())?;
    sol.require_optimal("constant simulator")?;
    let mut sigma: Vec<ComplexMatrix> = mm.sigma.iter().map(|&s| psd_part(&sol.x[s])).collect();
    let total: f64 = sigma.iter().map(|s| tensor::trace(s).re).sum();
    if total <= 1e-12 {
        return Err(Error::Solver("constant simulator returned a zero output state".into()));
    }
    for s in &mut sigma {
        *s = s.unscale(total);
    }
    let deltas: Vec<ComplexMatrix> = blocks.iter().zip(&sigma).map(|(j, s)| j - embed_second(s, d_in)).collect();
    let ys: Vec<ComplexMatrix> = mm.u.iter().zip(&deltas).map(|(&ub, d)| &sol.x[ub] + d).collect();
    let value = repaired_bound(&ys, &deltas, d_in, &dims);
    Ok(SimulatorResult {
        value,
        lower: sol.dual_value.min(value),
        sigma,
        status: sol.status,
        iterations: sol.iterations,
    })
}

pub fn optimal_constant_simulator(ch: &QuantumChannel) -> Result<SimulatorResult> {
    optimal_constant_simulator_blocks(&BlockChannel::from_channel(ch)?)
}

/// Weight operator `W` on `V ⊗ Q` with `Tr(J_D W)` the fidelity of decoder `D` on input Gram `g`.
///
/// `W[(b,l),(a,k)] = Σ_ij g[k,i] g[j,l] N(|i⟩⟨j|)[a,b]`; `g = I/d` gives entanglement fidelity.
pub fn decoder_weights(block: &ChannelBlock, g: &ComplexMatrix) -> ComplexMatrix {
    let d = g.nrows();
    let v = block.dim();
    let mut w = zeros(v * d, v * d);
    for i in 0..d {
        for j in 0..d {
            let mut y = zeros(v, v);
            for k in &block.kraus {
                y += k.column(i) * k.column(j).adjoint();
            }
            for kk in 0..d {
                let gki = g[(kk, i)];
                if gki.norm() == 0.0 {
                    continue;
                }
                for l in 0..d {
                    let coef = gki * g[(j, l)];
                    if coef.norm() == 0.0 {
                        continue;
                    }
                    for a in 0..v {
                        for b in 0..v {
                            w[(b * d + l, a * d + kk)] += coef * y[(a, b)];
                        }
                    }
                }
            }
        }
    }
    hermitian_part(&w)
}

/// Clips a decoder Choi matrix to PSD and renormalizes it to be exactly trace preserving.
fn sanitize_decoder(j: &ComplexMatrix, v: usize, d_q: usize) -> ComplexMatrix {
    let j = psd_part(j);
    let t = trace_second(&j, v, d_q);
    let (vals, vecs) = eigh(&t);
    if vals.iter().any(|&x| x <= 1e-12) {
        // Rank-deficient marginal: complete with the fully mixed output on the missing inputs.
        let mut fixed = j.clone();
        for (k, &x) in vals.iter().enumerate() {
            if x <= 1e-12 {
                let u = vecs.column(k).into_owned();
                let p = &u * u.adjoint();
                fixed += embed_right(&p, d_q).unscale(d_q as f64);
            }
        }
        return sanitize_decoder(&fixed, v, d_q);
    }
    let inv_sqrt = hermitian_function(&t, |x| 1.0 / x.sqrt());
    let s = embed_right(&inv_sqrt, d_q);
    hermitian_part(&(&s * j * &s))
}

/// Optimal decoder for input Gram matrix `g` (a state on the secret system).
pub fn optimal_decoder_blocks(ch: &BlockChannel, g: &ComplexMatrix) -> Result<DecoderResult> {
    let d_q = ch.d_in;
    if g.nrows() != d_q {
        return Err(Error::Argument("Gram matrix dimension must match the channel input".into()));
    }
    let mut p = SdpProblem::new(Sense::Maximize);
    let mut weights = Vec::with_capacity(ch.blocks.len());
    let mut vars = Vec::with_capacity(ch.blocks.len());
    for block in &ch.blocks {
        let v = block.dim();
        let w = decoder_weights(block, g);
        let x = p.add_block(v * d_q);
        p.set_objective(x, w.clone());
        p.add_matrix_equality(v, &[(x, LinearMap::TraceSecond { d1: v, d2: d_q }, 1.0)], &identity(v));
        weights.push(w);
        vars.push(x);
    }
    let sol = solve(&p, &SolverOptions::default())?;
    sol.require_optimal("optimal decoder")?;
    let decoders: Vec<ComplexMatrix> =
        ch.blocks.iter().zip(&vars).map(|(b, &x)| sanitize_decoder(&sol.x[x], b.dim(), d_q)).collect();
    let fidelity: f64 = decoders.iter().zip(&weights).map(|(j, w)| tensor::trace(&(j * w)).re).sum();
    Ok(DecoderResult {
        fidelity,
        upper: sol.dual_value.max(fidelity),
        decoders,
        status: sol.status,
        iterations: sol.iterations,
    })
}

pub fn optimal_decoder(ch: &BlockChannel) -> Result<DecoderResult> {
    let d = ch.d_in;
    optimal_decoder_blocks(ch, &identity(d).unscale(d as f64))
}

/// Optimal entanglement fidelity of decoding `ch` back onto its input space.
pub fn optimal_decoder_fidelity(ch: &QuantumChannel) -> Result<DecoderResult> {
    optimal_decoder(&BlockChannel::from_channel(ch)?)
}

/// Helstrom-type optimum `max Σ_z p_z Tr(E_z ρ_z)` with states given per block, `states[z][b]`.
pub fn optimal_discrimination_blocks(states: &[Vec<ComplexMatrix>], priors: &[f64]) -> Result<DiscriminationResult> {
    if states.is_empty() || states.len() != priors.len() {
        return Err(Error::Argument("one prior per state required".into()));
    }
    let nb = states[0].len();
    if states.iter().any(|s| s.len() != nb) {
        return Err(Error::Argument("all states need the same block structure".into()));
    }
    let mut p = SdpProblem::new(Sense::Maximize);
    let mut vars = vec![Vec::with_capacity(nb); states.len()];
    for b in 0..nb {
        let v = states[0][b].nrows();
        let mut terms = Vec::with_capacity(states.len());
        for (z, s) in states.iter().enumerate() {
            if s[b].nrows() != v {
                return Err(Error::Argument("block dimensions differ between states".into()));
            }
            let x = p.add_block(v);
            p.set_objective(x, hermitian_part(&s[b]).scale(priors[z]));
            terms.push((x, LinearMap::Identity, 1.0));
            vars[z].push(x);
        }
        p.add_matrix_equality(v, &terms, &identity(v));
    }
    let sol = solve(&p, &SolverOptions::default())?;
    sol.require_optimal("state discrimination")?;
    let povm: Vec<Vec<ComplexMatrix>> = vars.iter().map(|vz| vz.iter().map(|&x| sol.x[x].clone()).collect()).collect();
    Ok(DiscriminationResult { success: sol.primal_value, upper: sol.dual_value, povm, status: sol.status })
}

pub fn optimal_discrimination(states: &[ComplexMatrix], priors: &[f64]) -> Result<DiscriminationResult> {
    let per: Vec<Vec<ComplexMatrix>> = states.iter().map(|s| vec![s.clone()]).collect();
    optimal_discrimination_blocks(&per, priors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{depolarizing, identity_channel, pauli, unitary_channel};
    use crate::tensor::{ket_bra, random_density, rng_from_seed};

    #[test]
    fn identity_versus_depolarizing() {
        let id = identity_channel(2);
        let dep = depolarizing(1.0, 2).unwrap();
        let r = diamond_norm_channels(&id, &dep).unwrap();
        assert!((r.value - 1.5).abs() < 1e-7, "{}", r.value);
        assert!((r.lower - 1.5).abs() < 1e-7, "{}", r.lower);
    }

    #[test]
    fn identity_versus_pauli_z() {
        let z = unitary_channel(&pauli(0, 1)).unwrap();
        let r = diamond_norm_channels(&identity_channel(2), &z).unwrap();
        assert!((r.value - 2.0).abs() < 1e-7);
        assert!((tensor::trace(&r.worst_input).re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn diamond_of_zero_map() {
        let r = diamond_norm(&zeros(4, 4), 2, 2).unwrap();
        assert!(r.value.abs() < 1e-7);
    }

    #[test]
    fn decoder_examples() {
        let r = optimal_decoder_fidelity(&identity_channel(2)).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-7);
        let r = optimal_decoder_fidelity(&depolarizing(1.0, 2).unwrap()).unwrap();
        assert!((r.fidelity - 0.25).abs() < 1e-7);
        assert!(r.upper >= r.fidelity - 1e-9);
    }

    #[test]
    fn decoder_undoes_unitary() {
        let mut rng = rng_from_seed(3);
        let u = tensor::haar_unitary(3, &mut rng);
        let r = optimal_decoder_fidelity(&unitary_channel(&u).unwrap()).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-7);
    }

    #[test]
    fn constant_simulator_examples() {
        let r = optimal_constant_simulator(&depolarizing(1.0, 2).unwrap()).unwrap();
        assert!(r.value.abs() < 1e-7);
        let r = optimal_constant_simulator(&identity_channel(2)).unwrap();
        assert!((r.value - 1.5).abs() < 1e-7, "{}", r.value);
        for p in [0.3, 0.7] {
            let r = optimal_constant_simulator(&depolarizing(p, 2).unwrap()).unwrap();
            assert!((r.value - (1.0 - p) * 1.5).abs() < 1e-7, "p={p}: {}", r.value);
        }
    }

    #[test]
    fn helstrom() {
        let mut rng = rng_from_seed(11);
        for _ in 0..3 {
            let r0 = random_density(3, 3, &mut rng);
            let r1 = random_density(3, 2, &mut rng);
            let opt = optimal_discrimination(&[r0.clone(), r1.clone()], &[0.5, 0.5]).unwrap();
            let exact = 0.5 + 0.25 * trace_norm_hermitian(&(&r0 - &r1));
            assert!((opt.success - exact).abs() < 1e-7);
        }
        let z0 = ket_bra(2, 0, 0);
        let opt = optimal_discrimination(&[z0.clone(), z0], &[0.3, 0.7]).unwrap();
        assert!((opt.success - 0.7).abs() < 1e-7);
    }
}
