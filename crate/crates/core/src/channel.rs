//! Quantum states and channels: Kraus, Choi and Stinespring forms, complements and gadgets.
//!
//! Choi convention: `J = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)` on `in ⊗ out`, so `Tr J = d_in`.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{
    self, check_capacity, cr, digits, eigh, identity, ket_bra, zeros, ComplexMatrix, ComplexVector, SystemDims,
    MAX_DIM, PSD_TOL,
};
use crate::unionfind::UnionFind;

/// Eigenvalues of a Choi matrix below this are dropped from canonical dilations.
pub const KRAUS_CUTOFF: f64 = 1e-11;
/// Entries smaller than this are treated as structural zeros when finding block structure.
pub const ZERO_TOL: f64 = 1e-13;
const TP_TOL: f64 = 1e-9;

/// A validated density operator on labelled systems.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    matrix: ComplexMatrix,
    dims: SystemDims,
}

impl DensityState {
    pub fn new(matrix: ComplexMatrix, dims: SystemDims) -> Result<Self> {
        let d = dims.total();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::validation("state dims", format!("matrix {:?} vs dims total {d}", matrix.shape())));
        }
        if !tensor::all_finite(&matrix) {
            return Err(Error::validation("state finite", "non-finite entry"));
        }
        let defect = tensor::hermiticity_defect(&matrix);
        if defect > 1e-10 {
            return Err(Error::validation("state Hermitian", format!("defect {defect:.3e}")));
        }
        let tr = tensor::trace(&matrix).re;
        if (tr - 1.0).abs() > PSD_TOL {
            return Err(Error::validation("state unit trace", format!("trace {tr}")));
        }
        let lo = tensor::min_eigenvalue(&matrix);
        if lo < -PSD_TOL {
            return Err(Error::validation("state PSD", format!("eigenvalue {lo:.3e}")));
        }
        Ok(DensityState { matrix, dims })
    }

    pub fn pure(v: &ComplexVector, dims: SystemDims) -> Result<Self> {
        let n = v.norm();
        DensityState::new(tensor::projector(&v.unscale(n)), dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Shared resource of a two-party protocol on `L ⊗ R`.
///
/// Pure resources are kept as amplitude vectors: the lifted protocols share states whose
/// density matrices exceed the dense-operator cap while the vectors stay small.
#[derive(Clone, Debug, PartialEq)]
pub enum ResourceState {
    Pure { amplitudes: ComplexVector, d_l: usize, d_r: usize },
    Mixed { state: DensityState, d_l: usize, d_r: usize },
}

impl ResourceState {
    /// No shared resource at all.
    pub fn none() -> Self {
        ResourceState::Pure { amplitudes: ComplexVector::from_element(1, cr(1.0)), d_l: 1, d_r: 1 }
    }

    pub fn pure(amplitudes: ComplexVector, d_l: usize, d_r: usize) -> Result<Self> {
        if amplitudes.len() != d_l * d_r {
            return Err(Error::validation("resource dims", format!("{} amplitudes for {d_l}x{d_r}", amplitudes.len())));
        }
        let n = amplitudes.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::validation("resource normalized", format!("norm {n}")));
        }
        Ok(ResourceState::Pure { amplitudes, d_l, d_r })
    }

    pub fn mixed(state: DensityState, d_l: usize, d_r: usize) -> Result<Self> {
        if state.dim() != d_l * d_r {
            return Err(Error::validation("resource dims", format!("state dim {} for {d_l}x{d_r}", state.dim())));
        }
        Ok(ResourceState::Mixed { state, d_l, d_r })
    }

    /// `Σ_k √p_k |k⟩_L |k⟩_R`, the coherent copy of a classical distribution.
    pub fn correlated(weights: &[f64]) -> Result<Self> {
        let d = weights.len();
        let total: f64 = weights.iter().sum();
        let mut amp = ComplexVector::zeros(d * d);
        for (k, w) in weights.iter().enumerate() {
            amp[k * d + k] = cr((w / total).sqrt());
        }
        ResourceState::pure(amp, d, d)
    }

    /// Classically correlated mixture `Σ_k p_k |k⟩⟨k| ⊗ |k⟩⟨k|`.
    pub fn classically_correlated(weights: &[f64]) -> Result<Self> {
        let d = weights.len();
        let total: f64 = weights.iter().sum();
        check_capacity("classical resource", d * d, d * d)?;
        let mut m = zeros(d * d, d * d);
        for (k, w) in weights.iter().enumerate() {
            m[(k * d + k, k * d + k)] = cr(w / total);
        }
        let dims = SystemDims::new([("L", d), ("R", d)])?;
        ResourceState::mixed(DensityState::new(m, dims)?, d, d)
    }

    pub fn d_l(&self) -> usize {
        match self {
            ResourceState::Pure { d_l, .. } | ResourceState::Mixed { d_l, .. } => *d_l,
        }
    }

    pub fn d_r(&self) -> usize {
        match self {
            ResourceState::Pure { d_r, .. } | ResourceState::Mixed { d_r, .. } => *d_r,
        }
    }

    /// Pure components `(weight, amplitude matrix C[l, r])` with `Ψ = Σ_k w_k |ψ_k⟩⟨ψ_k|`.
    pub fn components(&self) -> Vec<(f64, ComplexMatrix)> {
        let as_matrix = |v: &ComplexVector, dl: usize, dr: usize| ComplexMatrix::from_fn(dl, dr, |l, r| v[l * dr + r]);
        match self {
            ResourceState::Pure { amplitudes, d_l, d_r } => vec![(1.0, as_matrix(amplitudes, *d_l, *d_r))],
            ResourceState::Mixed { state, d_l, d_r } => {
                let (vals, vecs) = eigh(state.matrix());
                vals.iter()
                    .enumerate()
                    .rev()
                    .filter(|(_, &v)| v > KRAUS_CUTOFF)
                    .map(|(k, &v)| (v, as_matrix(&vecs.column(k).into_owned(), *d_l, *d_r)))
                    .collect()
            }
        }
    }

    /// `Ψ₁ ⊗ Ψ₂` regrouped as `(L₁L₂) ⊗ (R₁R₂)`.
    pub fn tensor(&self, other: &ResourceState) -> Result<ResourceState> {
        let (d_l, d_r) = (self.d_l() * other.d_l(), self.d_r() * other.d_r());
        let flatten = |c: &ComplexMatrix| ComplexVector::from_fn(d_l * d_r, |i, _| c[(i / d_r, i % d_r)]);
        if let (ResourceState::Pure { .. }, ResourceState::Pure { .. }) = (self, other) {
            let c = self.components()[0].1.kronecker(&other.components()[0].1);
            return ResourceState::pure(flatten(&c), d_l, d_r);
        }
        check_capacity("resource density", d_l * d_r, d_l * d_r)?;
        let mut rho = zeros(d_l * d_r, d_l * d_r);
        for (w1, c1) in self.components() {
            for (w2, c2) in other.components() {
                let v = flatten(&c1.kronecker(&c2));
                rho += (&v * v.adjoint()).scale(w1 * w2);
            }
        }
        let dims = SystemDims::new([("L", d_l), ("R", d_r)])?;
        ResourceState::mixed(DensityState::new(rho, dims)?, d_l, d_r)
    }

    pub fn to_density(&self) -> Result<DensityState> {
        match self {
            ResourceState::Mixed { state, .. } => Ok(state.clone()),
            ResourceState::Pure { amplitudes, d_l, d_r } => {
                check_capacity("resource density", amplitudes.len(), amplitudes.len())?;
                DensityState::pure(amplitudes, SystemDims::new([("L", *d_l), ("R", *d_r)])?)
            }
        }
    }
}

/// Completely positive trace-preserving map, stored as Kraus operators and/or a Choi matrix.
///
/// Whichever form the channel was built from is authoritative; the other is derived on first
/// use, so a channel loaded from a Choi file returns that exact matrix.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    in_dims: SystemDims,
    out_dims: SystemDims,
    kraus: OnceLock<Vec<ComplexMatrix>>,
    choi: OnceLock<ComplexMatrix>,
}

/// Isometry `V: in → out ⊗ env` with `V|ψ⟩ = Σ_j K_j|ψ⟩ ⊗ |j⟩`.
#[derive(Clone, Debug)]
pub struct StinespringIsometry {
    pub v: ComplexMatrix,
    pub env_dim: usize,
    pub out_dim: usize,
}

impl StinespringIsometry {
    pub fn isometry_defect(&self) -> f64 {
        (self.v.adjoint() * &self.v - identity(self.v.ncols())).norm()
    }

    /// Kraus operators of the channel obtained by tracing the environment.
    pub fn trace_env(&self) -> Vec<ComplexMatrix> {
        let d_in = self.v.ncols();
        (0..self.env_dim)
            .map(|j| ComplexMatrix::from_fn(self.out_dim, d_in, |o, i| self.v[(o * self.env_dim + j, i)]))
            .collect()
    }

    /// Kraus operators of the channel obtained by tracing the output.
    pub fn trace_out(&self) -> Vec<ComplexMatrix> {
        let d_in = self.v.ncols();
        (0..self.out_dim)
            .map(|o| ComplexMatrix::from_fn(self.env_dim, d_in, |j, i| self.v[(o * self.env_dim + j, i)]))
            .collect()
    }
}

fn completeness_defect(ops: &[ComplexMatrix], d_in: usize) -> f64 {
    let mut sum = zeros(d_in, d_in);
    for k in ops {
        sum += k.adjoint() * k;
    }
    (sum - identity(d_in)).camax()
}

impl QuantumChannel {
    pub fn from_kraus(ops: Vec<ComplexMatrix>, in_dims: SystemDims, out_dims: SystemDims) -> Result<Self> {
        let (d_in, d_out) = (in_dims.total(), out_dims.total());
        if ops.is_empty() {
            return Err(Error::Argument("channel needs at least one Kraus operator".into()));
        }
        for k in &ops {
            if k.nrows() != d_out || k.ncols() != d_in {
                return Err(Error::Argument(format!("Kraus operator is {:?}, expected {d_out}x{d_in}", k.shape())));
            }
            if !tensor::all_finite(k) {
                return Err(Error::Argument("Kraus operator has non-finite entries".into()));
            }
        }
        let defect = completeness_defect(&ops, d_in);
        if defect > TP_TOL {
            return Err(Error::Argument(format!("Kraus completeness violated by {defect:.3e}")));
        }
        Ok(Self::from_kraus_unchecked(ops, in_dims, out_dims))
    }

    pub(crate) fn from_kraus_unchecked(ops: Vec<ComplexMatrix>, in_dims: SystemDims, out_dims: SystemDims) -> Self {
        let kraus = OnceLock::new();
        let _ = kraus.set(ops);
        QuantumChannel { in_dims, out_dims, kraus, choi: OnceLock::new() }
    }

    /// Builds a channel from its Choi matrix, checking Hermiticity, positivity and trace preservation.
    pub fn from_choi(choi: ComplexMatrix, in_dims: SystemDims, out_dims: SystemDims) -> Result<Self> {
        let (d_in, d_out) = (in_dims.total(), out_dims.total());
        let n = d_in * d_out;
        if choi.nrows() != n || choi.ncols() != n {
            return Err(Error::validation("choi dims", format!("{:?} for {d_in}->{d_out}", choi.shape())));
        }
        if !tensor::all_finite(&choi) {
            return Err(Error::validation("choi finite", "non-finite entry"));
        }
        let defect = tensor::hermiticity_defect(&choi);
        if defect > 1e-10 {
            return Err(Error::validation("choi Hermitian", format!("defect {defect:.3e}")));
        }
        let lo = tensor::min_eigenvalue(&choi);
        if lo < -PSD_TOL {
            return Err(Error::validation("choi PSD", format!("eigenvalue {lo:.3e} below -1e-9")));
        }
        let tr_out = tensor::partial_trace_positions(&choi, &[d_in, d_out], &[0])?;
        let tp = (tr_out - identity(d_in)).camax();
        if tp > TP_TOL {
            return Err(Error::validation("choi trace preserving", format!("Tr_out J differs from I by {tp:.3e}")));
        }
        let slot = OnceLock::new();
        let _ = slot.set(choi);
        Ok(QuantumChannel { in_dims, out_dims, kraus: OnceLock::new(), choi: slot })
    }

    pub fn in_dims(&self) -> &SystemDims {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &SystemDims {
        &self.out_dims
    }

    pub fn d_in(&self) -> usize {
        self.in_dims.total()
    }

    pub fn d_out(&self) -> usize {
        self.out_dims.total()
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        self.kraus.get_or_init(|| {
            let choi = self.choi.get().expect("channel holds a Choi matrix when Kraus is absent");
            kraus_from_choi(choi, self.d_in(), self.d_out())
        })
    }

    pub fn choi(&self) -> Result<&ComplexMatrix> {
        if let Some(c) = self.choi.get() {
            return Ok(c);
        }
        let n = self.d_in() * self.d_out();
        check_capacity("Choi matrix", n, n)?;
        Ok(self.choi.get_or_init(|| choi_from_kraus(self.kraus(), self.d_in(), self.d_out())))
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.d_in() || rho.ncols() != self.d_in() {
            return Err(Error::Argument(format!("input {:?} for channel on dimension {}", rho.shape(), self.d_in())));
        }
        check_capacity("channel output", self.d_out(), self.d_out())?;
        let mut out = zeros(self.d_out(), self.d_out());
        for k in self.kraus() {
            out += k * rho * k.adjoint();
        }
        Ok(out)
    }

    /// `after ∘ self`.
    pub fn then(&self, after: &QuantumChannel) -> Result<QuantumChannel> {
        if after.d_in() != self.d_out() {
            return Err(Error::Argument(format!(
                "cannot compose {}->{} with {}->{}",
                self.d_in(),
                self.d_out(),
                after.d_in(),
                after.d_out()
            )));
        }
        let mut ops = Vec::with_capacity(self.kraus().len() * after.kraus().len());
        for b in after.kraus() {
            for a in self.kraus() {
                let k = b * a;
                if k.camax() > ZERO_TOL {
                    ops.push(k);
                }
            }
        }
        let out = canonical_kraus(&ops, self.d_in(), after.d_out());
        Ok(Self::from_kraus_unchecked(out, self.in_dims.clone(), after.out_dims.clone()))
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &QuantumChannel) -> Result<QuantumChannel> {
        let in_dims = self.in_dims.join(&other.in_dims.relabel("'"))?;
        let out_dims = self.out_dims.join(&other.out_dims.relabel("'"))?;
        check_capacity("tensor Kraus", in_dims.total(), out_dims.total())?;
        let mut ops = Vec::with_capacity(self.kraus().len() * other.kraus().len());
        for a in self.kraus() {
            for b in other.kraus() {
                ops.push(a.kronecker(b));
            }
        }
        Ok(Self::from_kraus_unchecked(ops, in_dims, out_dims))
    }

    pub fn canonical_kraus(&self) -> Vec<ComplexMatrix> {
        canonical_kraus(self.kraus(), self.d_in(), self.d_out())
    }

    pub fn stinespring(&self) -> Result<StinespringIsometry> {
        let ops = self.canonical_kraus();
        let env_dim = ops.len();
        check_capacity("Stinespring isometry", self.d_out() * env_dim, self.d_in())?;
        let mut v = zeros(self.d_out() * env_dim, self.d_in());
        for (j, k) in ops.iter().enumerate() {
            for o in 0..self.d_out() {
                for i in 0..self.d_in() {
                    v[(o * env_dim + j, i)] = k[(o, i)];
                }
            }
        }
        Ok(StinespringIsometry { v, env_dim, out_dim: self.d_out() })
    }

    /// Channel to the environment of the canonical dilation.
    pub fn complementary(&self) -> Result<QuantumChannel> {
        let ops = self.canonical_kraus();
        let env = ops.len();
        let (d_in, d_out) = (self.d_in(), self.d_out());
        check_capacity("complementary Kraus", env, d_in)?;
        let comp: Vec<ComplexMatrix> = (0..d_out)
            .map(|o| ComplexMatrix::from_fn(env, d_in, |j, i| ops[j][(o, i)]))
            .filter(|f| f.camax() > ZERO_TOL)
            .collect();
        Ok(Self::from_kraus_unchecked(comp, self.in_dims.clone(), SystemDims::single("E", env)))
    }

    /// Keeps the output subsystems at `keep` and traces the rest.
    pub fn trace_output(&self, keep: &[usize]) -> Result<QuantumChannel> {
        let dims = self.out_dims.dims();
        let traced: Vec<usize> = (0..dims.len()).filter(|p| !keep.contains(p)).collect();
        let kept_dims = self.out_dims.subset(keep);
        let dk = kept_dims.total();
        let dt: usize = traced.iter().map(|&p| dims[p]).product();
        let mut ops = Vec::new();
        for k in self.kraus() {
            let mut parts = vec![zeros(dk, self.d_in()); dt];
            for row in 0..self.d_out() {
                let dg = digits(row, &dims);
                let ki = keep.iter().fold(0, |a, &p| a * dims[p] + dg[p]);
                let ti = traced.iter().fold(0, |a, &p| a * dims[p] + dg[p]);
                for col in 0..self.d_in() {
                    parts[ti][(ki, col)] += k[(row, col)];
                }
            }
            ops.extend(parts.into_iter().filter(|p| p.camax() > ZERO_TOL));
        }
        let ops = canonical_kraus(&ops, self.d_in(), dk);
        Ok(Self::from_kraus_unchecked(ops, self.in_dims.clone(), kept_dims))
    }

    pub fn relabel_in(mut self, dims: SystemDims) -> Result<Self> {
        if dims.total() != self.d_in() {
            return Err(Error::Argument("relabelled input dimension differs".into()));
        }
        self.in_dims = dims;
        Ok(self)
    }

    pub fn relabel_out(mut self, dims: SystemDims) -> Result<Self> {
        if dims.total() != self.d_out() {
            return Err(Error::Argument("relabelled output dimension differs".into()));
        }
        self.out_dims = dims;
        Ok(self)
    }

    pub fn trace_preservation_defect(&self) -> f64 {
        completeness_defect(self.kraus(), self.d_in())
    }
}

/// Choi matrix `Σ_k vec(K_k) vec(K_k)†` with `vec(K)[i·d_out + o] = K[o, i]`.
pub fn choi_from_kraus(ops: &[ComplexMatrix], d_in: usize, d_out: usize) -> ComplexMatrix {
    let n = d_in * d_out;
    let mut j = zeros(n, n);
    for k in ops {
        let v = vec_kraus(k);
        let nz: Vec<usize> = (0..n).filter(|&a| v[a].norm() > 0.0).collect();
        for &a in &nz {
            let va = v[a];
            for &b in &nz {
                j[(a, b)] += va * v[b].conj();
            }
        }
    }
    j
}

fn vec_kraus(k: &ComplexMatrix) -> ComplexVector {
    let (d_out, d_in) = k.shape();
    ComplexVector::from_fn(d_in * d_out, |a, _| k[(a % d_out, a / d_out)])
}

fn unvec_kraus(v: &[Complex64], d_in: usize, d_out: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d_out, d_in, |o, i| v[i * d_out + o])
}

/// Rotates `m` by a global phase so its first significant entry (column-major) is real positive.
fn fix_phase(m: &mut ComplexMatrix) {
    if let Some(z) = m.iter().find(|z| z.norm() > 1e-9).copied() {
        let phase = z.conj() / z.norm();
        for e in m.iter_mut() {
            *e *= phase;
        }
    }
}

/// Canonical Kraus operators from the block-wise eigendecomposition of the Choi matrix.
pub fn kraus_from_choi(choi: &ComplexMatrix, d_in: usize, d_out: usize) -> Vec<ComplexMatrix> {
    let n = d_in * d_out;
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for b in (a + 1)..n {
            if choi[(a, b)].norm() > ZERO_TOL {
                uf.union(a, b);
            }
        }
    }
    let mut ops = Vec::new();
    for comp in uf.components() {
        if comp.iter().all(|&a| choi[(a, a)].re <= ZERO_TOL) {
            continue;
        }
        let sub = ComplexMatrix::from_fn(comp.len(), comp.len(), |r, s| choi[(comp[r], comp[s])]);
        let (vals, vecs) = eigh(&sub);
        for k in (0..vals.len()).rev() {
            if vals[k] <= KRAUS_CUTOFF {
                continue;
            }
            let mut full = vec![Complex64::new(0.0, 0.0); n];
            for (r, &a) in comp.iter().enumerate() {
                full[a] = vecs[(r, k)] * vals[k].sqrt();
            }
            let mut op = unvec_kraus(&full, d_in, d_out);
            fix_phase(&mut op);
            ops.push(op);
        }
    }
    ops
}

/// Minimal Kraus family spanning the same Choi matrix, computed per group of operators whose
/// supports overlap so that classical (block) structure is kept operator by operator.
pub fn canonical_kraus(ops: &[ComplexMatrix], d_in: usize, d_out: usize) -> Vec<ComplexMatrix> {
    let n = d_in * d_out;
    let supports: Vec<Vec<usize>> = ops
        .iter()
        .map(|k| {
            let mut s = Vec::new();
            for i in 0..d_in {
                for o in 0..d_out {
                    if k[(o, i)].norm() > ZERO_TOL {
                        s.push(i * d_out + o);
                    }
                }
            }
            s
        })
        .collect();
    let mut uf = UnionFind::new(n);
    for s in &supports {
        for w in s.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (idx, s) in supports.iter().enumerate() {
        if let Some(&first) = s.first() {
            groups.entry(uf.find_min(first)).or_default().push(idx);
        }
    }
    let mut out = Vec::new();
    for members in groups.values() {
        let g = members.len();
        let mut coords: Vec<usize> = members.iter().flat_map(|&m| supports[m].iter().copied()).collect();
        coords.sort_unstable();
        coords.dedup();
        if g > coords.len() {
            // More operators than support coordinates: diagonalize the group's Choi block instead.
            out.extend(kraus_from_support(members.iter().map(|&m| &ops[m]), &coords, d_in, d_out));
            continue;
        }
        let mut gram = zeros(g, g);
        for (a, &ia) in members.iter().enumerate() {
            for (b, &ib) in members.iter().enumerate().skip(a) {
                let v = ops[ia].iter().zip(ops[ib].iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>();
                gram[(a, b)] = v;
                gram[(b, a)] = v.conj();
            }
        }
        let (vals, vecs) = eigh(&gram);
        for k in (0..g).rev() {
            if vals[k] <= KRAUS_CUTOFF {
                continue;
            }
            let mut op = zeros(d_out, d_in);
            for (a, &ia) in members.iter().enumerate() {
                let w = vecs[(a, k)];
                if w.norm() > 0.0 {
                    op += ops[ia].map(|z| z * w);
                }
            }
            fix_phase(&mut op);
            out.push(op);
        }
    }
    out
}

/// Kraus operators from the eigenvectors of `Σ vec(K) vec(K)†` restricted to `coords`.
fn kraus_from_support<'a>(
    ops: impl Iterator<Item = &'a ComplexMatrix>,
    coords: &[usize],
    d_in: usize,
    d_out: usize,
) -> Vec<ComplexMatrix> {
    let s = coords.len();
    let mut j = zeros(s, s);
    for k in ops {
        let v: Vec<Complex64> = coords.iter().map(|&c| k[(c % d_out, c / d_out)]).collect();
        for a in 0..s {
            if v[a].norm() == 0.0 {
                continue;
            }
            for b in 0..s {
                j[(a, b)] += v[a] * v[b].conj();
            }
        }
    }
    let (vals, vecs) = eigh(&j);
    let mut out = Vec::new();
    for k in (0..s).rev() {
        if vals[k] <= KRAUS_CUTOFF {
            continue;
        }
        let w = vals[k].sqrt();
        let mut op = zeros(d_out, d_in);
        for (a, &c) in coords.iter().enumerate() {
            op[(c % d_out, c / d_out)] = vecs[(a, k)] * w;
        }
        fix_phase(&mut op);
        out.push(op);
    }
    out
}

/// Choi matrix of `a − b`.
pub fn choi_difference(a: &QuantumChannel, b: &QuantumChannel) -> Result<ComplexMatrix> {
    if a.d_in() != b.d_in() || a.d_out() != b.d_out() {
        return Err(Error::Argument("channel difference needs equal dimensions".into()));
    }
    Ok(a.choi()? - b.choi()?)
}

// ---------------------------------------------------------------------------------------------
// Gadgets

/// Generalized Pauli (Weyl) operator `X^a Z^b` on dimension `d`.
pub fn weyl(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut m = zeros(d, d);
    for j in 0..d {
        let phase = 2.0 * std::f64::consts::PI * ((b * j) % d) as f64 / d as f64;
        m[((j + a) % d, j)] = Complex64::from_polar(1.0, phase);
    }
    m
}

pub fn pauli(a: usize, b: usize) -> ComplexMatrix {
    weyl(2, a, b)
}

pub fn pauli_y() -> ComplexMatrix {
    let mut m = zeros(2, 2);
    m[(0, 1)] = Complex64::new(0.0, -1.0);
    m[(1, 0)] = Complex64::new(0.0, 1.0);
    m
}

pub fn identity_channel(d: usize) -> QuantumChannel {
    QuantumChannel::from_kraus_unchecked(vec![identity(d)], SystemDims::single("A", d), SystemDims::single("A", d))
}

pub fn unitary_channel(u: &ComplexMatrix) -> Result<QuantumChannel> {
    let d = u.nrows();
    QuantumChannel::from_kraus(vec![u.clone()], SystemDims::single("A", d), SystemDims::single("A", d))
}

/// `ρ ↦ Tr(ρ)·σ`.
pub fn replacer_channel(d_in: usize, sigma: &ComplexMatrix) -> QuantumChannel {
    let d_out = sigma.nrows();
    let (vals, vecs) = eigh(sigma);
    let mut ops = Vec::new();
    for (k, &v) in vals.iter().enumerate().rev() {
        if v <= KRAUS_CUTOFF {
            continue;
        }
        for i in 0..d_in {
            let mut op = zeros(d_out, d_in);
            for o in 0..d_out {
                op[(o, i)] = vecs[(o, k)] * v.sqrt();
            }
            ops.push(op);
        }
    }
    QuantumChannel::from_kraus_unchecked(ops, SystemDims::single("A", d_in), SystemDims::single("B", d_out))
}

/// `ρ ↦ (1−p)ρ + p·Tr(ρ)·I/d`.
pub fn depolarizing(p: f64, d: usize) -> Result<QuantumChannel> {
    if !(0.0..=1.0 + 1.0 / ((d * d) as f64 - 1.0).max(1.0)).contains(&p) {
        return Err(Error::Argument(format!("depolarizing parameter {p} out of range")));
    }
    let dd = (d * d) as f64;
    let mut ops = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let w = if a == 0 && b == 0 { 1.0 - p + p / dd } else { p / dd };
            if w > 0.0 {
                ops.push(weyl(d, a, b).scale(w.sqrt()));
            }
        }
    }
    QuantumChannel::from_kraus(ops, SystemDims::single("A", d), SystemDims::single("A", d))
}

/// Depolarizing parameter whose channel sits at diamond distance `eps` from the identity.
pub fn depolarizing_for_diamond(eps: f64, d: usize) -> f64 {
    let dd = (d * d) as f64;
    eps * dd / (2.0 * (dd - 1.0))
}

/// Per-key pad `X^a Z^b`.
pub fn quantum_one_time_pad(a: usize, b: usize) -> QuantumChannel {
    QuantumChannel::from_kraus_unchecked(
        vec![pauli(a & 1, b & 1)],
        SystemDims::single("Q", 2),
        SystemDims::single("Q", 2),
    )
}

/// Uniform average of the four pads.
pub fn qotp_average() -> QuantumChannel {
    let ops = (0..4).map(|k| pauli(k >> 1, k & 1).scale(0.5)).collect();
    QuantumChannel::from_kraus_unchecked(ops, SystemDims::single("Q", 2), SystemDims::single("Q", 2))
}

/// Normalized `Σ_i |ii⟩/√d`.
pub fn max_entangled_vector(d: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d * d);
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = cr(amp);
    }
    v
}

pub fn max_entangled(d: usize) -> DensityState {
    let dims = SystemDims::new([("A", d), ("B", d)]).expect("distinct labels");
    DensityState::pure(&max_entangled_vector(d), dims).expect("valid state")
}

pub fn max_mixed(d: usize) -> DensityState {
    DensityState::new(identity(d).unscale(d as f64), SystemDims::single("A", d)).expect("valid state")
}

pub fn computational_state(bits: &str) -> Result<DensityState> {
    if bits.is_empty() || !bits.chars().all(|ch| ch == '0' || ch == '1') {
        return Err(Error::Argument(format!("`{bits}` is not a bitstring")));
    }
    let d = 1usize << bits.len();
    let idx = usize::from_str_radix(bits, 2).map_err(|e| Error::Argument(e.to_string()))?;
    let dims = SystemDims::new(bits.char_indices().map(|(i, _)| (format!("q{i}"), 2)))?;
    DensityState::new(ket_bra(d, idx, idx), dims)
}

/// Either kind of gadget.
#[derive(Clone, Debug)]
pub enum Gadget {
    State(DensityState),
    Channel(QuantumChannel),
}

/// Looks up a gadget by a call-like name such as `depolarizing(0.1,2)` or `computational_state(0110)`.
pub fn standard_gadget(spec: &str) -> Result<Gadget> {
    let spec = spec.trim();
    let (name, args) = match spec.find('(') {
        Some(open) if spec.ends_with(')') => (&spec[..open], &spec[open + 1..spec.len() - 1]),
        _ => (spec, ""),
    };
    let args: Vec<&str> = args.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let num = |i: usize| -> Result<f64> {
        args.get(i)
            .ok_or_else(|| Error::Argument(format!("`{name}` needs argument {}", i + 1)))?
            .parse::<f64>()
            .map_err(|e| Error::Argument(format!("`{name}` argument {}: {e}", i + 1)))
    };
    let dim = |i: usize| -> Result<usize> {
        let v = num(i)?;
        if v < 1.0 || v.fract() != 0.0 || v > MAX_DIM as f64 {
            return Err(Error::Argument(format!("`{name}` dimension {v} invalid")));
        }
        Ok(v as usize)
    };
    match name {
        "max_entangled" => Ok(Gadget::State(max_entangled(dim(0)?))),
        "max_mixed" => Ok(Gadget::State(max_mixed(dim(0)?))),
        "depolarizing" => Ok(Gadget::Channel(depolarizing(num(0)?, dim(1)?)?)),
        "computational_state" => Ok(Gadget::State(computational_state(args.first().copied().unwrap_or(""))?)),
        other => Err(Error::Argument(format!("unknown gadget `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{ginibre, rng_from_seed, trace_distance};
    use approx::assert_abs_diff_eq;

    fn random_channel(d_in: usize, d_out: usize, rank: usize, seed: u64) -> QuantumChannel {
        let mut rng = rng_from_seed(seed);
        let g = ginibre(d_out * rank, d_in, &mut rng);
        // Orthonormalize the stacked Kraus columns into an isometry.
        let v = g.qr().q();
        let ops = (0..rank).map(|k| ComplexMatrix::from_fn(d_out, d_in, |o, i| v[(k * d_out + o, i)])).collect();
        QuantumChannel::from_kraus(ops, SystemDims::single("A", d_in), SystemDims::single("B", d_out)).unwrap()
    }

    fn operator_basis(d: usize) -> Vec<ComplexMatrix> {
        (0..d * d).map(|k| ket_bra(d, k / d, k % d)).collect()
    }

    #[test]
    fn kraus_examples() {
        let id = QuantumChannel::from_kraus(vec![identity(2)], SystemDims::single("A", 2), SystemDims::single("A", 2))
            .unwrap();
        let rho = tensor::random_density(2, 2, &mut rng_from_seed(1));
        assert!((id.apply(&rho).unwrap() - &rho).norm() < 1e-15);

        let ops = vec![ket_bra(2, 0, 0), ket_bra(2, 0, 1)];
        let reset = QuantumChannel::from_kraus(ops, SystemDims::single("A", 2), SystemDims::single("A", 2)).unwrap();
        assert!((reset.apply(&rho).unwrap() - ket_bra(2, 0, 0)).norm() < 1e-15);

        let bad = vec![ket_bra(2, 0, 0)];
        assert!(QuantumChannel::from_kraus(bad, SystemDims::single("A", 2), SystemDims::single("A", 2)).is_err());
    }

    #[test]
    fn depolarizing_choi_spectrum() {
        // Choi of (1-p)id + p R_{I/2}: (1-p)·2Φ + p·I/2, eigenvalues 2-3p/2 and p/2 (x3).
        let p = 0.3;
        let ch = depolarizing(p, 2).unwrap();
        let vals = tensor::eigvalsh(ch.choi().unwrap());
        let expect = [p / 2.0, p / 2.0, p / 2.0, 2.0 - 1.5 * p];
        for (a, b) in vals.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let id = depolarizing(0.0, 2).unwrap();
        assert!((id.choi().unwrap() - identity_channel(2).choi().unwrap()).norm() < 1e-15);
    }

    #[test]
    fn choi_reproduces_kraus_action() {
        let ch = random_channel(3, 2, 3, 8);
        let from_choi =
            QuantumChannel::from_choi(ch.choi().unwrap().clone(), ch.in_dims().clone(), ch.out_dims().clone()).unwrap();
        for x in operator_basis(3) {
            let a = ch.apply(&x).unwrap();
            let b = from_choi.apply(&x).unwrap();
            assert!((a - b).norm() < 1e-10);
        }
        // Also N(X) = Tr_in[(X^T ⊗ I) J].
        let j = ch.choi().unwrap();
        for x in operator_basis(3) {
            let lhs =
                tensor::partial_trace_positions(&(x.transpose().kronecker(&identity(2)) * j), &[3, 2], &[1]).unwrap();
            assert!((lhs - ch.apply(&x).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn choi_validation_rejects_bad_input() {
        let mut j = identity_channel(2).choi().unwrap().clone();
        j[(0, 0)] = cr(-0.5);
        j[(3, 3)] = cr(2.5);
        let err = QuantumChannel::from_choi(j, SystemDims::single("A", 2), SystemDims::single("B", 2)).unwrap_err();
        assert!(err.to_string().contains("PSD"), "{err}");
        let j = identity(4).scale(0.3);
        let err = QuantumChannel::from_choi(j, SystemDims::single("A", 2), SystemDims::single("B", 2)).unwrap_err();
        assert!(err.to_string().contains("trace preserving"), "{err}");
    }

    #[test]
    fn complementary_examples() {
        let comp = identity_channel(2).complementary().unwrap();
        assert_eq!(comp.d_out(), 1);
        let rho = tensor::random_density(2, 2, &mut rng_from_seed(3));
        assert!((comp.apply(&rho).unwrap() - identity(1)).norm() < 1e-12);

        let three = {
            let ops = vec![
                identity(2).scale((0.5f64).sqrt()),
                pauli(1, 0).scale((0.25f64).sqrt()),
                pauli(0, 1).scale((0.25f64).sqrt()),
            ];
            QuantumChannel::from_kraus(ops, SystemDims::single("A", 2), SystemDims::single("A", 2)).unwrap()
        };
        let comp = three.complementary().unwrap();
        assert_eq!(comp.d_out(), 3);
        assert!(comp.d_out() <= 2 * 2);
    }

    #[test]
    fn dilation_traces_to_both_channels() {
        let ch = random_channel(2, 3, 4, 12);
        let iso = ch.stinespring().unwrap();
        assert!(iso.isometry_defect() < 1e-10);
        assert!(iso.env_dim <= 2 * 3);
        let back = QuantumChannel::from_kraus(iso.trace_env(), ch.in_dims().clone(), ch.out_dims().clone()).unwrap();
        assert!((back.choi().unwrap() - ch.choi().unwrap()).norm() < 1e-9);
        let comp = ch.complementary().unwrap();
        let via_iso =
            QuantumChannel::from_kraus(iso.trace_out(), ch.in_dims().clone(), SystemDims::single("E", iso.env_dim))
                .unwrap();
        assert!((via_iso.choi().unwrap() - comp.choi().unwrap()).norm() < 1e-9);
    }

    #[test]
    fn canonical_kraus_keeps_blocks_separate() {
        // A measure-and-prepare channel: the canonical form keeps one operator per outcome.
        let ops = vec![ket_bra(2, 0, 0), ket_bra(2, 1, 1)];
        let ch = QuantumChannel::from_kraus(ops, SystemDims::single("A", 2), SystemDims::single("A", 2)).unwrap();
        let can = ch.canonical_kraus();
        assert_eq!(can.len(), 2);
        for k in &can {
            assert_eq!(k.iter().filter(|z| z.norm() > 1e-12).count(), 1);
        }
    }

    #[test]
    fn qotp_examples() {
        assert!((quantum_one_time_pad(0, 0).choi().unwrap() - identity_channel(2).choi().unwrap()).norm() < 1e-15);
        let avg = qotp_average();
        let mut rng = rng_from_seed(4);
        for _ in 0..5 {
            let psi = tensor::projector(&tensor::random_pure(2, &mut rng));
            assert!((avg.apply(&psi).unwrap() - identity(2).scale(0.5)).norm() < 1e-12);
        }
        for k in 0..4 {
            let pad = quantum_one_time_pad(k >> 1, k & 1);
            let undo = unitary_channel(&pad.kraus()[0].adjoint()).unwrap();
            let round = pad.then(&undo).unwrap();
            assert!((round.choi().unwrap() - identity_channel(2).choi().unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn gadgets() {
        let phi = max_entangled(2);
        let dims = phi.dims().clone();
        let (a, _) = tensor::partial_trace(phi.matrix(), &dims, &["A"]).unwrap();
        let (b, _) = tensor::partial_trace(phi.matrix(), &dims, &["B"]).unwrap();
        assert!((a - identity(2).scale(0.5)).norm() < 1e-15);
        assert!((b - identity(2).scale(0.5)).norm() < 1e-15);
        let s = computational_state("10").unwrap();
        assert_eq!(s.matrix()[(2, 2)], cr(1.0));
        assert!(matches!(standard_gadget("depolarizing(0.2,2)").unwrap(), Gadget::Channel(_)));
        assert!(matches!(standard_gadget("max_mixed(3)").unwrap(), Gadget::State(_)));
        assert!(standard_gadget("teleporter(2)").is_err());
    }

    #[test]
    fn trace_output_matches_partial_trace() {
        let ch = random_channel(2, 4, 2, 31).relabel_out(SystemDims::new([("X", 2), ("Y", 2)]).unwrap()).unwrap();
        let kept = ch.trace_output(&[1]).unwrap();
        let rho = tensor::random_density(2, 2, &mut rng_from_seed(6));
        let full = ch.apply(&rho).unwrap();
        let reduced = tensor::partial_trace_positions(&full, &[2, 2], &[1]).unwrap();
        assert!(trace_distance(&kept.apply(&rho).unwrap(), &reduced).unwrap() < 1e-12);
    }

    #[test]
    fn composition_is_associative_and_trace_preserving() {
        let a = random_channel(2, 3, 2, 1);
        let b = random_channel(3, 2, 3, 2);
        let c3 = random_channel(2, 2, 2, 3);
        let left = a.then(&b).unwrap().then(&c3).unwrap();
        let right = a.then(&b.then(&c3).unwrap()).unwrap();
        assert!((left.choi().unwrap() - right.choi().unwrap()).norm() < 1e-10);
        assert!(left.trace_preservation_defect() < 1e-10);
    }
}
