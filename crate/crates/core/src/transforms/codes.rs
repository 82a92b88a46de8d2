//! Stabilizer codes with minimum-weight syndrome decoding, code-rate and noise-bound calculators,
//! and amplification evaluated on the logical channel.

use serde::Serialize;

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::sdp::diamond_norm_channels;
use crate::tensor::{cr, identity, zeros, ComplexMatrix, SystemDims};

/// Pauli operator on `m` qubits as `(x, z)` bit masks, qubit 0 the most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliString {
    pub x: u32,
    pub z: u32,
}

impl PauliString {
    /// Parses a string over `IXYZ`.
    pub fn parse(s: &str) -> Result<PauliString> {
        let m = s.len();
        let mut p = PauliString { x: 0, z: 0 };
        for (i, ch) in s.chars().enumerate() {
            let bit = 1u32 << (m - 1 - i);
            match ch {
                'I' => {}
                'X' => p.x |= bit,
                'Z' => p.z |= bit,
                'Y' => {
                    p.x |= bit;
                    p.z |= bit;
                }
                other => return Err(Error::Argument(format!("`{other}` is not a Pauli letter"))),
            }
        }
        Ok(p)
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Whether the two operators anticommute.
    pub fn anticommutes(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 1
    }

    /// Dense matrix on `m` qubits (`Y = iXZ`).
    pub fn matrix(&self, m: usize) -> ComplexMatrix {
        let dim = 1usize << m;
        let mut out = zeros(dim, dim);
        let ys = (self.x & self.z).count_ones();
        let phase =
            [cr(1.0), cr(0.0) + num_complex::Complex64::i(), cr(-1.0), -num_complex::Complex64::i()][(ys % 4) as usize];
        for col in 0..dim {
            let row = col ^ self.x as usize;
            let sign = if ((col as u32) & self.z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[(row, col)] = phase * sign;
        }
        out
    }
}

/// An `[[m, k]]` stabilizer code correcting `t` errors, with explicit encoder and decoder.
#[derive(Clone, Debug)]
pub struct CodeSpec {
    pub name: String,
    pub m: usize,
    pub k: usize,
    pub t: usize,
    pub stabilizers: Vec<PauliString>,
    /// Recovery Pauli per syndrome (syndrome bit `g` set when generator `g` anticommutes).
    pub recovery: Vec<PauliString>,
    /// Isometry `2^k → 2^m`.
    pub encoder: ComplexMatrix,
    pub decoder: QuantumChannel,
}

fn syndrome(stabs: &[PauliString], e: &PauliString) -> usize {
    stabs.iter().fold(0, |acc, g| (acc << 1) | usize::from(g.anticommutes(e)))
}

/// Minimum-weight Pauli for every syndrome, by increasing-weight enumeration.
fn syndrome_table(stabs: &[PauliString], m: usize) -> Vec<PauliString> {
    let n_syn = 1usize << stabs.len();
    let mut table: Vec<Option<PauliString>> = vec![None; n_syn];
    let mut found = 0;
    let mut all: Vec<PauliString> =
        (0..1u64 << (2 * m)).map(|v| PauliString { x: (v >> m) as u32, z: (v & ((1 << m) - 1)) as u32 }).collect();
    all.sort_by_key(|p| (p.weight(), p.x, p.z));
    for p in all {
        let s = syndrome(stabs, &p);
        if table[s].is_none() {
            table[s] = Some(p);
            found += 1;
            if found == n_syn {
                break;
            }
        }
    }
    table.into_iter().map(|p| p.expect("every syndrome is reachable")).collect()
}

fn build_code(name: &str, gens: &[&str], logical_x: &str, t: usize) -> Result<CodeSpec> {
    let m = gens[0].len();
    let stabilizers = gens.iter().map(|g| PauliString::parse(g)).collect::<Result<Vec<_>>>()?;
    let dim = 1usize << m;
    let projector = |signs: usize| -> ComplexMatrix {
        let mut p = identity(dim);
        for (g, s) in stabilizers.iter().enumerate() {
            let bit = (signs >> (stabilizers.len() - 1 - g)) & 1;
            let sign = if bit == 1 { -1.0 } else { 1.0 };
            p = (&p * (identity(dim) + s.matrix(m).scale(sign))).scale(0.5);
        }
        p
    };
    let code_proj = projector(0);
    let zero = code_proj.column(0).into_owned();
    let zero = zero.unscale(zero.norm());
    let one = PauliString::parse(logical_x)?.matrix(m) * &zero;
    let mut encoder = zeros(dim, 2);
    encoder.set_column(0, &zero);
    encoder.set_column(1, &one);
    let recovery = syndrome_table(&stabilizers, m);
    let ops: Vec<ComplexMatrix> =
        recovery.iter().enumerate().map(|(s, r)| encoder.adjoint() * r.matrix(m).adjoint() * projector(s)).collect();
    let decoder = QuantumChannel::from_kraus(ops, SystemDims::single("P", dim), SystemDims::single("Q", 2))?;
    Ok(CodeSpec { name: name.to_string(), m, k: 1, t, stabilizers, recovery, encoder, decoder })
}

/// Names accepted by [`code_catalog`].
pub const CODE_NAMES: &[&str] = &["five_qubit", "steane"];

/// The `[[5,1,3]]` code and the `[[7,1,3]]` CSS code.
pub fn code_catalog(name: &str) -> Result<CodeSpec> {
    match name {
        "five_qubit" => build_code("five_qubit", &["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"], "XXXXX", 1),
        "steane" => {
            build_code("steane", &["IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"], "XXXXXXX", 1)
        }
        other => Err(Error::Argument(format!("unknown code `{other}` (known: {})", CODE_NAMES.join(", ")))),
    }
}

impl CodeSpec {
    /// Applies a single-qubit channel to qubit `q` of an `m`-qubit operator.
    fn apply_on_qubit(&self, rho: &ComplexMatrix, ch: &QuantumChannel, q: usize) -> ComplexMatrix {
        let left = 1usize << q;
        let right = 1usize << (self.m - 1 - q);
        let mut out = zeros(rho.nrows(), rho.ncols());
        for k in ch.kraus() {
            let full = identity(left).kronecker(k).kronecker(&identity(right));
            out += &full * rho * full.adjoint();
        }
        out
    }

    /// `D ∘ (⊗ᵢ Eᵢ) ∘ U` as a qubit channel, built from its Choi matrix.
    pub fn logical_channel(&self, per_qubit: &[QuantumChannel]) -> Result<QuantumChannel> {
        if per_qubit.len() != self.m || per_qubit.iter().any(|c| c.d_in() != 2 || c.d_out() != 2) {
            return Err(Error::Argument(format!("need {} single-qubit channels", self.m)));
        }
        let mut choi = zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let mut rho = self.encoder.column(i) * self.encoder.column(j).adjoint();
                for (q, ch) in per_qubit.iter().enumerate() {
                    rho = self.apply_on_qubit(&rho, ch, q);
                }
                let out = self.decoder.apply(&rho)?;
                for a in 0..2 {
                    for b in 0..2 {
                        choi[(i * 2 + a, j * 2 + b)] = out[(a, b)];
                    }
                }
            }
        }
        QuantumChannel::from_choi(choi, SystemDims::single("Q", 2), SystemDims::single("Q", 2))
    }

    /// Largest deviation of `D ∘ P ∘ U` from the identity over Pauli errors `P` of weight ≤ t.
    pub fn correction_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for v in 0..1u64 << (2 * self.m) {
            let p = PauliString { x: (v >> self.m) as u32, z: (v & ((1 << self.m) - 1)) as u32 };
            if p.weight() as usize > self.t {
                continue;
            }
            let pu = p.matrix(self.m) * &self.encoder;
            for i in 0..2 {
                for j in 0..2 {
                    let rho = pu.column(i) * pu.column(j).adjoint();
                    let out = self.decoder.apply(&rho).expect("dims match");
                    for a in 0..2 {
                        for b in 0..2 {
                            let want = if a == i && b == j { 1.0 } else { 0.0 };
                            worst = worst.max((out[(a, b)] - cr(want)).norm());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[derive(Clone, Debug, Serialize)]
pub struct CodeRate {
    pub alpha: f64,
    pub rate: f64,
    pub warning: Option<String>,
}

/// `1 − 2·H₂(2α)` for codes correcting `t = αm` errors.
pub fn code_rate(alpha: f64) -> Result<CodeRate> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Argument(format!("alpha = {alpha} outside (0, 1/2)")));
    }
    let warning = (2.0 * alpha > 0.25).then(|| {
        format!("2t/m = {:.3} > 1/4: the formula exceeds what the quantum Singleton bound allows", 2.0 * alpha)
    });
    Ok(CodeRate { alpha, rate: 1.0 - 2.0 * binary_entropy(2.0 * alpha), warning })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Largest per-qubit diamond error accepted by [`noise_bound`]; infinite when `m ≤ t + 1`.
pub fn noise_threshold(m: usize, t: usize) -> f64 {
    if m > t + 1 {
        (t + 1) as f64 / (m - t - 1) as f64
    } else {
        f64::INFINITY
    }
}

/// `2·C(m, t+1)·(e·ε)^{t+1}`, refused unless `ε < (t+1)/(m−t−1)`.
pub fn noise_bound(m: usize, t: usize, eps: f64) -> Result<f64> {
    let threshold = noise_threshold(m, t);
    if !(0.0..threshold).contains(&eps) {
        return Err(Error::Precondition(format!(
            "per-qubit error {eps} must lie in [0, {threshold:.6}) for m = {m}, t = {t}"
        )));
    }
    Ok(2.0 * binomial(m, t + 1) * (std::f64::consts::E * eps).powi(t as i32 + 1))
}

/// Exponent `γ` with `noise_bound ≤ C·2^{−γm}` for `t = αm`: `γ = −H₂(α) − α·log₂(e·ε)`.
pub fn amplification_exponent(alpha: f64, eps: f64) -> f64 {
    -binary_entropy(alpha) - alpha * (std::f64::consts::E * eps).log2()
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplifyParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon_in: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplifyResult {
    pub code: String,
    pub params: AmplifyParams,
    pub measured_error: f64,
    pub measured_error_lower: f64,
    pub pass: bool,
}

/// Runs `m` copies of a per-instance qubit channel under a catalog code and compares the exact
/// logical diamond error with the noise bound.
pub fn amplify(code: &CodeSpec, instance: &QuantumChannel) -> Result<(QuantumChannel, AmplifyResult)> {
    let id = crate::channel::identity_channel(2);
    let eps = diamond_norm_channels(instance, &id)?.value;
    let bound = noise_bound(code.m, code.t, eps)?;
    let logical = code.logical_channel(&vec![instance.clone(); code.m])?;
    let d = diamond_norm_channels(&logical, &id)?;
    let alpha = code.t as f64 / code.m as f64;
    let result = AmplifyResult {
        code: code.name.clone(),
        params: AmplifyParams {
            alpha,
            beta: code.k as f64 / code.m as f64,
            gamma: amplification_exponent(alpha, eps),
            epsilon_in: eps,
            bound,
        },
        measured_error: d.value,
        measured_error_lower: d.lower,
        pass: d.value <= bound,
    };
    Ok((logical, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{depolarizing, depolarizing_for_diamond, identity_channel};

    #[test]
    fn catalog_codes_correct_weight_one_errors() {
        for name in CODE_NAMES {
            let c = code_catalog(name).unwrap();
            assert!((c.encoder.adjoint() * &c.encoder - identity(2)).camax() < 1e-12);
            assert!(c.correction_defect() < 1e-9, "{name}");
        }
        assert_eq!(code_catalog("five_qubit").unwrap().recovery.iter().filter(|p| p.weight() == 1).count(), 15);
        assert!(code_catalog("toric").is_err());
    }

    #[test]
    fn rate_at_the_amplification_choice() {
        let r = code_rate(0.495).unwrap();
        assert!((r.rate - 0.838).abs() < 1e-3, "{}", r.rate);
        assert!(r.warning.is_some());
        let small = code_rate(1e-9).unwrap();
        assert!((small.rate - 1.0).abs() < 1e-6 && small.warning.is_none());
    }

    #[test]
    fn noise_bound_values_and_refusal() {
        let direct = 2.0 * 10.0 * (std::f64::consts::E * 0.01f64).powi(2);
        assert!((noise_bound(5, 1, 0.01).unwrap() - direct).abs() < 1e-15);
        assert!((direct - 0.0147781).abs() < 1e-6);
        assert_eq!(noise_bound(5, 1, 0.0).unwrap(), 0.0);
        assert!(matches!(noise_bound(5, 1, 0.7), Err(Error::Precondition(_))));
    }

    #[test]
    fn exponent_near_the_quoted_value() {
        let g = amplification_exponent(0.495, 0.09);
        assert!((g - 5.5e-3).abs() < 1e-4, "{g}");
    }

    #[test]
    fn identity_noise_is_corrected_exactly() {
        let c = code_catalog("five_qubit").unwrap();
        let (_, r) = amplify(&c, &identity_channel(2)).unwrap();
        assert!(r.measured_error <= 1e-9);
    }

    #[test]
    fn depolarized_five_qubit_code_beats_the_bound() {
        let c = code_catalog("five_qubit").unwrap();
        let ch = depolarizing(depolarizing_for_diamond(0.01, 2), 2).unwrap();
        let (_, r) = amplify(&c, &ch).unwrap();
        assert!((r.params.epsilon_in - 0.01).abs() < 1e-7);
        assert!(r.pass && r.measured_error <= 0.01478, "{r:?}");
    }
}
