//! Channels whose output is a direct sum of small blocks.
//!
//! Protocol channels send classical messages next to small quantum registers, so their
//! outputs split into orthogonal sectors that no Kraus operator connects. Working per sector
//! (with each sector compressed to the span the channel actually reaches) is exact: a
//! decoder or distinguisher may measure the sector label first, and an isometric embedding
//! changes no trace norm.

use num_complex::Complex64;

use crate::channel::{canonical_kraus, choi_from_kraus, kraus_from_choi, QuantumChannel, ZERO_TOL};
use crate::error::{Error, Result};
use crate::tensor::{self, check_capacity, eigh, zeros, ComplexMatrix, SystemDims, MAX_DIM};
use crate::unionfind::UnionFind;

/// Eigenvalues of a block's output support below this are treated as outside the support.
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ChannelBlock {
    /// Ambient output coordinates spanned by the block.
    pub coords: Vec<usize>,
    /// Isometry `coords.len() × dim` onto the compressed support.
    pub basis: ComplexMatrix,
    /// Canonical Kraus operators `dim × d_in` of the compressed block channel.
    pub kraus: Vec<ComplexMatrix>,
}

impl ChannelBlock {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn rank(&self) -> usize {
        self.kraus.len()
    }

    pub fn choi(&self, d_in: usize) -> ComplexMatrix {
        choi_from_kraus(&self.kraus, d_in, self.dim())
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = zeros(self.dim(), self.dim());
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// Block operator expressed on its ambient coordinates.
    pub fn embed(&self, local: &ComplexMatrix) -> ComplexMatrix {
        &self.basis * local * self.basis.adjoint()
    }
}

#[derive(Clone, Debug)]
pub struct BlockChannel {
    pub d_in: usize,
    pub d_out: usize,
    pub blocks: Vec<ChannelBlock>,
}

impl BlockChannel {
    /// Splits a Kraus family into output sectors and compresses each sector.
    pub fn from_kraus(ops: &[ComplexMatrix], d_in: usize, d_out: usize) -> Result<BlockChannel> {
        let mut uf = UnionFind::new(d_out);
        let mut rows_of: Vec<Vec<usize>> = Vec::with_capacity(ops.len());
        for k in ops {
            if k.nrows() != d_out || k.ncols() != d_in {
                return Err(Error::Argument(format!("Kraus operator {:?} for {d_in}->{d_out}", k.shape())));
            }
            let rows: Vec<usize> = (0..d_out).filter(|&o| (0..d_in).any(|i| k[(o, i)].norm() > ZERO_TOL)).collect();
            for w in rows.windows(2) {
                uf.union(w[0], w[1]);
            }
            rows_of.push(rows);
        }
        let mut comp_index = vec![usize::MAX; d_out];
        let mut comps: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for (idx, rows) in rows_of.iter().enumerate() {
            let Some(&first) = rows.first() else { continue };
            let root = uf.find_min(first);
            if comp_index[root] == usize::MAX {
                comp_index[root] = comps.len();
                comps.push((Vec::new(), Vec::new()));
            }
            comps[comp_index[root]].1.push(idx);
        }
        let mut uf_rows = vec![Vec::new(); comps.len()];
        for o in 0..d_out {
            let root = uf.find_min(o);
            if comp_index[root] != usize::MAX {
                uf_rows[comp_index[root]].push(o);
            }
        }
        for (c, rows) in uf_rows.into_iter().enumerate() {
            comps[c].0 = rows;
        }
        let mut blocks = Vec::with_capacity(comps.len());
        for (coords, members) in comps {
            let restricted: Vec<ComplexMatrix> = members
                .iter()
                .map(|&m| ComplexMatrix::from_fn(coords.len(), d_in, |r, i| ops[m][(coords[r], i)]))
                .collect();
            if let Some(block) = compress_block(coords, &restricted, d_in)? {
                blocks.push(block);
            }
        }
        blocks.sort_by_key(|b| b.coords[0]);
        Ok(BlockChannel { d_in, d_out, blocks })
    }

    pub fn from_channel(ch: &QuantumChannel) -> Result<BlockChannel> {
        BlockChannel::from_kraus(ch.kraus(), ch.d_in(), ch.d_out())
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(ChannelBlock::dim).collect()
    }

    pub fn max_block_dim(&self) -> usize {
        self.blocks.iter().map(ChannelBlock::dim).max().unwrap_or(0)
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Vec<ComplexMatrix> {
        self.blocks.iter().map(|b| b.apply(rho)).collect()
    }

    pub fn trace_preservation_defect(&self) -> f64 {
        let mut sum = zeros(self.d_in, self.d_in);
        for b in &self.blocks {
            for k in &b.kraus {
                sum += k.adjoint() * k;
            }
        }
        (sum - tensor::identity(self.d_in)).camax()
    }

    /// Complementary channel of the block sum: the environment of block `b` is its Kraus index.
    pub fn complement(&self) -> Result<BlockChannel> {
        let mut blocks = Vec::new();
        let mut offset = 0;
        for b in &self.blocks {
            let r = b.rank();
            let ops: Vec<ComplexMatrix> = (0..b.dim())
                .map(|o| ComplexMatrix::from_fn(r, self.d_in, |j, i| b.kraus[j][(o, i)]))
                .filter(|f| f.camax() > ZERO_TOL)
                .collect();
            let sub = BlockChannel::from_kraus(&ops, self.d_in, r)?;
            for mut blk in sub.blocks {
                for c in blk.coords.iter_mut() {
                    *c += offset;
                }
                blocks.push(blk);
            }
            offset += r;
        }
        Ok(BlockChannel { d_in: self.d_in, d_out: offset, blocks })
    }

    /// Dense channel on the ambient output space.
    pub fn to_channel(&self) -> Result<QuantumChannel> {
        check_capacity("dense block channel", self.d_out, self.d_in)?;
        if self.d_out > MAX_DIM {
            return Err(Error::Capacity {
                what: "dense block channel output".into(),
                needed: self.d_out,
                cap: MAX_DIM,
            });
        }
        let mut ops = Vec::new();
        for b in &self.blocks {
            for k in &b.kraus {
                let local = &b.basis * k;
                let mut full = zeros(self.d_out, self.d_in);
                for (r, &c) in b.coords.iter().enumerate() {
                    for i in 0..self.d_in {
                        full[(c, i)] = local[(r, i)];
                    }
                }
                ops.push(full);
            }
        }
        Ok(QuantumChannel::from_kraus_unchecked(
            ops,
            SystemDims::single("Q", self.d_in),
            SystemDims::single("M", self.d_out),
        ))
    }

    /// `D ∘ N` where `D` acts on block `b` through the Choi matrix `decoders[b]` (on `block ⊗ Q`).
    pub fn compose_decoders(&self, decoders: &[ComplexMatrix], d_q: usize) -> Result<QuantumChannel> {
        if decoders.len() != self.blocks.len() {
            return Err(Error::Argument("one decoder per block required".into()));
        }
        let mut ops = Vec::new();
        for (b, j) in self.blocks.iter().zip(decoders) {
            let dk = kraus_from_choi(j, b.dim(), d_q);
            for l in &dk {
                for k in &b.kraus {
                    let p = l * k;
                    if p.camax() > ZERO_TOL {
                        ops.push(p);
                    }
                }
            }
        }
        let ops = canonical_kraus(&ops, self.d_in, d_q);
        Ok(QuantumChannel::from_kraus_unchecked(ops, SystemDims::single("Q", self.d_in), SystemDims::single("Q", d_q)))
    }

    /// Parallel composition; the ambient output index is `o1·d_out2 + o2`.
    pub fn tensor(&self, other: &BlockChannel) -> Result<BlockChannel> {
        let d_in = self.d_in * other.d_in;
        let mut blocks = Vec::with_capacity(self.blocks.len() * other.blocks.len());
        for a in &self.blocks {
            for b in &other.blocks {
                let mut coords = Vec::with_capacity(a.coords.len() * b.coords.len());
                for &x in &a.coords {
                    for &y in &b.coords {
                        coords.push(x * other.d_out + y);
                    }
                }
                check_capacity("tensor block basis", coords.len(), a.dim() * b.dim())?;
                let basis = a.basis.kronecker(&b.basis);
                let mut kraus = Vec::with_capacity(a.rank() * b.rank());
                for ka in &a.kraus {
                    for kb in &b.kraus {
                        kraus.push(ka.kronecker(kb));
                    }
                }
                // Coordinates must be sorted for a canonical block; permute basis rows to match.
                let mut order: Vec<usize> = (0..coords.len()).collect();
                order.sort_by_key(|&i| coords[i]);
                let coords_sorted: Vec<usize> = order.iter().map(|&i| coords[i]).collect();
                let basis_sorted = ComplexMatrix::from_fn(basis.nrows(), basis.ncols(), |r, s| basis[(order[r], s)]);
                blocks.push(ChannelBlock { coords: coords_sorted, basis: basis_sorted, kraus });
            }
        }
        blocks.sort_by_key(|b| b.coords[0]);
        Ok(BlockChannel { d_in, d_out: self.d_out * other.d_out, blocks })
    }

    /// Post-composes a channel acting on the whole ambient output (for small outputs).
    pub fn then(&self, after: &QuantumChannel) -> Result<BlockChannel> {
        let dense = self.to_channel()?;
        let ch = dense.then(after)?;
        BlockChannel::from_channel(&ch)
    }
}

/// Compresses one sector to the span of its Kraus ranges; `None` if the sector carries no weight.
fn compress_block(coords: Vec<usize>, ops: &[ComplexMatrix], d_in: usize) -> Result<Option<ChannelBlock>> {
    let n = coords.len();
    let cols = ops.len() * d_in;
    let mut a = zeros(n, cols);
    for (k, op) in ops.iter().enumerate() {
        a.view_mut((0, k * d_in), (n, d_in)).copy_from(op);
    }
    let basis = if cols <= n {
        let gram = a.adjoint() * &a;
        let (vals, vecs) = eigh(&gram);
        let keep: Vec<usize> = (0..vals.len()).rev().filter(|&k| vals[k] > SUPPORT_TOL).collect();
        let mut basis = zeros(n, keep.len());
        for (s, &k) in keep.iter().enumerate() {
            let col = &a * vecs.column(k);
            basis.set_column(s, &col.unscale(vals[k].sqrt()));
        }
        basis
    } else {
        if n > MAX_DIM {
            return Err(Error::Capacity { what: "output sector".into(), needed: n, cap: MAX_DIM });
        }
        let outer = &a * a.adjoint();
        let (vals, vecs) = eigh(&outer);
        let keep: Vec<usize> = (0..vals.len()).rev().filter(|&k| vals[k] > SUPPORT_TOL).collect();
        let mut basis = zeros(n, keep.len());
        for (s, &k) in keep.iter().enumerate() {
            basis.set_column(s, &vecs.column(k));
        }
        basis
    };
    if basis.ncols() == 0 {
        return Ok(None);
    }
    let mut basis = basis;
    for mut col in basis.column_iter_mut() {
        if let Some(z) = col.iter().find(|z| z.norm() > 1e-9).copied() {
            let phase: Complex64 = z.conj() / z.norm();
            col.iter_mut().for_each(|e| *e *= phase);
        }
    }
    let dim = basis.ncols();
    let reduced: Vec<ComplexMatrix> = ops.iter().map(|k| basis.adjoint() * k).collect();
    let kraus = canonical_kraus(&reduced, d_in, dim);
    Ok(Some(ChannelBlock { coords, basis, kraus }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{depolarizing, identity_channel, pauli};
    use crate::tensor::{ket_bra, rng_from_seed};

    /// Measures a qubit and writes the outcome into a classical flag next to a copy of the state.
    fn flagged_channel() -> Vec<ComplexMatrix> {
        // Output: flag (2) ⊗ qubit (2). Kraus |k⟩⊗P_k / √2 for P_0 = I, P_1 = X.
        (0..2)
            .map(|k| {
                let mut op = zeros(4, 2);
                let p = pauli(k, 0).scale(std::f64::consts::FRAC_1_SQRT_2);
                for o in 0..2 {
                    for i in 0..2 {
                        op[(k * 2 + o, i)] = p[(o, i)];
                    }
                }
                op
            })
            .collect()
    }

    #[test]
    fn splits_classical_flags_and_matches_dense() {
        let ops = flagged_channel();
        let bc = BlockChannel::from_kraus(&ops, 2, 4).unwrap();
        assert_eq!(bc.block_dims(), vec![2, 2]);
        assert!(bc.trace_preservation_defect() < 1e-12);
        let dense = QuantumChannel::from_kraus(ops, SystemDims::single("Q", 2), SystemDims::single("M", 4)).unwrap();
        let back = bc.to_channel().unwrap();
        assert!((back.choi().unwrap() - dense.choi().unwrap()).norm() < 1e-12);
    }

    #[test]
    fn compresses_support() {
        // Identity into a 4-dim space through a fixed isometry: one block of dimension 2.
        let mut rng = rng_from_seed(5);
        let v = tensor::ginibre(4, 2, &mut rng).qr().q();
        let bc = BlockChannel::from_kraus(std::slice::from_ref(&v), 2, 4).unwrap();
        assert_eq!(bc.block_dims(), vec![2]);
        let rho = ket_bra(2, 0, 1);
        let out = bc.blocks[0].embed(&bc.blocks[0].apply(&rho));
        assert!((out - &v * &rho * v.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn complement_of_blocks_matches_dense_complement_spectra() {
        let dep = depolarizing(0.4, 2).unwrap();
        let bc = BlockChannel::from_channel(&dep).unwrap();
        let comp = bc.complement().unwrap();
        let dense = dep.complementary().unwrap();
        // Complements agree up to an isometry on the environment: compare output spectra.
        let rho = ket_bra(2, 0, 0);
        let mut a: Vec<f64> = comp
            .apply(&rho)
            .iter()
            .zip(&comp.blocks)
            .flat_map(|(m, _)| tensor::eigvalsh(m))
            .filter(|v| *v > 1e-12)
            .collect();
        let mut b: Vec<f64> =
            tensor::eigvalsh(&dense.apply(&rho).unwrap()).into_iter().filter(|v| *v > 1e-12).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn decoder_composition_undoes_flags() {
        let bc = BlockChannel::from_kraus(&flagged_channel(), 2, 4).unwrap();
        // Decoder on each block: undo the recorded Pauli in the block's compressed basis.
        let decs: Vec<ComplexMatrix> = bc
            .blocks
            .iter()
            .map(|b| {
                // Block channel is a unitary V (times 1/√2 weight); its inverse is V† / (1/√2).
                let v = b.kraus[0].unscale(std::f64::consts::FRAC_1_SQRT_2);
                choi_from_kraus(&[v.adjoint()], b.dim(), 2)
            })
            .collect();
        let composed = bc.compose_decoders(&decs, 2).unwrap();
        let id = identity_channel(2);
        assert!((composed.choi().unwrap() - id.choi().unwrap()).norm() < 1e-10);
    }

    #[test]
    fn tensor_of_blocks_matches_dense_tensor() {
        let a = BlockChannel::from_kraus(&flagged_channel(), 2, 4).unwrap();
        let b = BlockChannel::from_channel(&depolarizing(0.2, 2).unwrap()).unwrap();
        let t = a.tensor(&b).unwrap();
        let dense = a.to_channel().unwrap().tensor(&b.to_channel().unwrap()).unwrap();
        assert!((t.to_channel().unwrap().choi().unwrap() - dense.choi().unwrap()).norm() < 1e-10);
    }
}
