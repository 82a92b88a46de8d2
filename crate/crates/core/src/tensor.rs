//! Dense complex linear algebra over labelled multi-qudit spaces.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Largest number of entries any single dense matrix may hold.
pub const MAX_ENTRIES: usize = 1 << 20;
/// Largest dimension of a Hilbert space on which dense square operators are built.
pub const MAX_DIM: usize = 1 << 10;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn check_capacity(what: &str, rows: usize, cols: usize) -> Result<()> {
    let needed = rows.saturating_mul(cols);
    if needed > MAX_ENTRIES {
        return Err(Error::Capacity { what: what.to_string(), needed, cap: MAX_ENTRIES });
    }
    Ok(())
}

/// Ordered list of labelled subsystems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemDims {
    systems: Vec<(String, usize)>,
}

impl SystemDims {
    pub fn new<S: Into<String>>(systems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let systems: Vec<(String, usize)> = systems.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (i, (label, dim)) in systems.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::Argument(format!("system `{label}` has dimension 0")));
            }
            if systems[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::Argument(format!("duplicate system label `{label}`")));
            }
        }
        Ok(SystemDims { systems })
    }

    /// A single system with the given label.
    pub fn single(label: &str, dim: usize) -> Self {
        SystemDims::new([(label, dim.max(1))]).expect("single system is always valid")
    }

    pub fn total(&self) -> usize {
        self.systems.iter().map(|(_, d)| d).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.systems.iter().map(|(_, d)| *d).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.systems.iter().map(|(l, _)| l.as_str())
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.systems.iter().position(|(l, _)| l == label)
    }

    pub fn dim_of(&self, label: &str) -> Option<usize> {
        self.position(label).map(|i| self.systems[i].1)
    }

    /// Concatenation `self ⊗ other`; labels must stay unique.
    pub fn join(&self, other: &SystemDims) -> Result<SystemDims> {
        SystemDims::new(self.systems.iter().chain(other.systems.iter()).cloned())
    }

    pub fn subset(&self, positions: &[usize]) -> SystemDims {
        SystemDims { systems: positions.iter().map(|&p| self.systems[p].clone()).collect() }
    }

    pub fn relabel(&self, prefix: &str) -> SystemDims {
        SystemDims { systems: self.systems.iter().map(|(l, d)| (format!("{prefix}{l}"), *d)).collect() }
    }
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(r, c)
}

/// `|i⟩⟨j|` in dimension `d`.
pub fn ket_bra(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = zeros(d, d);
    m[(i, j)] = cr(1.0);
    m
}

pub fn basis_vector(d: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[i] = cr(1.0);
    v
}

/// Kronecker product with the first factor most significant.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (rows, cols) = (a.nrows() * b.nrows(), a.ncols() * b.ncols());
    check_capacity("tensor product", rows, cols)?;
    Ok(a.kronecker(b))
}

pub fn tensor_all(factors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(1, 1);
    for f in factors {
        acc = tensor_product(&acc, f)?;
    }
    Ok(acc)
}

/// Mixed-radix digits of `index`, most significant first.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

pub fn undigits(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
}

/// Permutation operator mapping `|i₀ i₁ …⟩` (systems with `dims`) to the basis state whose
/// `j`-th factor is input system `order[j]`.
pub fn permutation_matrix(dims: &[usize], order: &[usize]) -> ComplexMatrix {
    let total: usize = dims.iter().product();
    let out_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let mut p = zeros(total, total);
    for i in 0..total {
        let d = digits(i, dims);
        let moved: Vec<usize> = order.iter().map(|&k| d[k]).collect();
        p[(undigits(&moved, &out_dims), i)] = cr(1.0);
    }
    p
}

/// Partial trace keeping the subsystems at `keep` (positions into `dims`, any order
/// is accepted; the result is ordered as in `dims`).
pub fn partial_trace_positions(rho: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if rho.nrows() != total || rho.ncols() != total {
        return Err(Error::Argument(format!(
            "partial trace: matrix is {}x{}, dims multiply to {total}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::Argument(format!("partial trace: no subsystem at position {bad}")));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|p| !kept.contains(p)).collect();
    let kdims: Vec<usize> = kept.iter().map(|&p| dims[p]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&p| dims[p]).collect();
    let dk: usize = kdims.iter().product();
    let dt: usize = tdims.iter().product();

    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(dk); dt];
    for i in 0..total {
        let dg = digits(i, dims);
        let k = kept.iter().fold(0, |acc, &p| acc * dims[p] + dg[p]);
        let t = traced.iter().fold(0, |acc, &p| acc * dims[p] + dg[p]);
        groups[t].push((k, i));
    }
    let mut out = zeros(dk, dk);
    for group in &groups {
        for &(k1, i1) in group {
            for &(k2, i2) in group {
                out[(k1, k2)] += rho[(i1, i2)];
            }
        }
    }
    Ok(out)
}

/// Partial trace keeping the labelled subsystems in `keep`.
pub fn partial_trace(rho: &ComplexMatrix, dims: &SystemDims, keep: &[&str]) -> Result<(ComplexMatrix, SystemDims)> {
    let mut positions = Vec::with_capacity(keep.len());
    for label in keep {
        let p = dims.position(label).ok_or_else(|| Error::Argument(format!("unknown subsystem label `{label}`")))?;
        positions.push(p);
    }
    positions.sort_unstable();
    positions.dedup();
    let out = partial_trace_positions(rho, &dims.dims(), &positions)?;
    Ok((out, dims.subset(&positions)))
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(a: &ComplexMatrix, tol: f64) -> bool {
    hermiticity_defect(a) <= tol
}

pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn all_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn eigvalsh(a: &ComplexMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(a: &ComplexMatrix) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(a: &ComplexMatrix) -> f64 {
    eigvalsh(a).last().copied().unwrap_or(0.0)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(a: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let (vals, vecs) = eigh(a);
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= fv;
        }
    }
    scaled * vecs.adjoint()
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(a: &ComplexMatrix) -> f64 {
    eigvalsh(a).iter().map(|v| v.abs()).sum()
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().singular_values().iter().sum()
}

pub fn frobenius_sq(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn check_same_square(a: &ComplexMatrix, b: &ComplexMatrix, what: &str) -> Result<()> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::Argument(format!(
            "{what}: shapes {:?} and {:?} are not equal square shapes",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// ‖ρ − σ‖₁ for Hermitian operands.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_same_square(rho, sigma, "trace distance")?;
    for (name, m) in [("rho", rho), ("sigma", sigma)] {
        let defect = hermiticity_defect(m);
        if defect > 1e-10 {
            return Err(Error::Argument(format!("trace distance: {name} is not Hermitian (defect {defect:.3e})")));
        }
    }
    Ok(trace_norm_hermitian(&(rho - sigma)))
}

fn check_state(m: &ComplexMatrix, name: &str) -> Result<()> {
    let lo = min_eigenvalue(m);
    if lo < -PSD_TOL {
        return Err(Error::Argument(format!("{name} has eigenvalue {lo:.3e} below -1e-9")));
    }
    let tr = trace(m);
    if (tr.re - 1.0).abs() > PSD_TOL || tr.im.abs() > PSD_TOL {
        return Err(Error::Argument(format!("{name} has trace {tr}")));
    }
    Ok(())
}

/// Squared Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_same_square(rho, sigma, "fidelity")?;
    check_state(rho, "rho")?;
    check_state(sigma, "sigma")?;
    // Singular values of √ρ√σ avoid square-rooting roundoff-level eigenvalues of √ρσ√ρ.
    let sqrt_rho = hermitian_function(rho, |v| v.max(0.0).sqrt());
    let sqrt_sigma = hermitian_function(sigma, |v| v.max(0.0).sqrt());
    let root: f64 = (sqrt_rho * sqrt_sigma).singular_values().iter().sum();
    Ok((root * root).clamp(0.0, 1.0))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of diag(R) removed.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { cr(1.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    haar_unitary(dim, &mut rng_from_seed(seed))
}

/// Random density matrix from the Hilbert-Schmidt ensemble of rank `rank`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = trace(&m).re;
    m.unscale(tr)
}

pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector {
    let g = ginibre(dim, 1, rng);
    let v = g.column(0).into_owned();
    let n = v.norm();
    v.unscale(n)
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// Writes the text matrix format: `rows cols`, then one `re im` pair per entry, row-major.
pub fn write_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::with_capacity(m.len() * 24 + 16);
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let _ = writeln!(out, "{} {}", z.re, z.im);
        }
    }
    out
}

/// Parses the text matrix format. `first_line` offsets reported line numbers when the
/// body is embedded in a larger file.
pub fn read_matrix(text: &str, first_line: usize) -> Result<ComplexMatrix> {
    let mut tokens =
        text.lines().enumerate().flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + first_line, t)));
    let mut next_num = |field: &str| -> Result<(usize, &str)> {
        tokens.next().ok_or_else(|| Error::Parse {
            line: 0,
            field: field.to_string(),
            msg: "unexpected end of input".into(),
        })
    };
    let parse_usize = |(line, tok): (usize, &str), field: &str| -> Result<usize> {
        tok.parse::<usize>().map_err(|e| Error::Parse { line, field: field.to_string(), msg: format!("`{tok}`: {e}") })
    };
    let rows = parse_usize(next_num("rows")?, "rows")?;
    let cols = parse_usize(next_num("cols")?, "cols")?;
    check_capacity("matrix file", rows, cols)?;
    let mut m = zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut part = |name: &str| -> Result<f64> {
                let field = format!("entry ({i},{j}).{name}");
                let (line, tok) = next_num(&field)?;
                let v = tok.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    field: field.clone(),
                    msg: format!("`{tok}`: {e}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse { line, field, msg: "non-finite value".into() });
                }
                Ok(v)
            };
            let re = part("re")?;
            let im = part("im")?;
            m[(i, j)] = c(re, im);
        }
    }
    if let Some((line, tok)) = tokens.next() {
        return Err(Error::Parse {
            line,
            field: "trailing".into(),
            msg: format!("unexpected token `{tok}` after {rows}x{cols} entries"),
        });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn phi_plus() -> ComplexMatrix {
        let mut v = ComplexVector::zeros(4);
        v[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
        v[3] = cr(std::f64::consts::FRAC_1_SQRT_2);
        projector(&v)
    }

    #[test]
    fn kron_identity_and_basis() {
        let i4 = tensor_product(&identity(2), &identity(2)).unwrap();
        assert_eq!(i4, identity(4));
        let p = tensor_product(&ket_bra(2, 0, 0), &ket_bra(2, 1, 1)).unwrap();
        let mut expect = zeros(4, 4);
        expect[(1, 1)] = cr(1.0);
        assert_eq!(p, expect);
    }

    #[test]
    fn kron_acts_on_product_vectors() {
        let mut rng = rng_from_seed(3);
        let (a, b) = (ginibre(2, 2, &mut rng), ginibre(2, 2, &mut rng));
        let (v, w) = (ginibre(2, 1, &mut rng), ginibre(2, 1, &mut rng));
        let lhs = tensor_product(&a, &b).unwrap() * tensor_product(&v, &w).unwrap();
        let rhs = tensor_product(&(&a * &v), &(&b * &w)).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn kron_respects_capacity() {
        let big = zeros(1 << 6, 1 << 6);
        assert!(matches!(tensor_product(&big, &zeros(1 << 5, 1 << 5)), Err(Error::Capacity { .. })));
    }

    #[test]
    fn partial_trace_of_product_and_bell() {
        let mut rng = rng_from_seed(5);
        let rho = random_density(3, 3, &mut rng);
        let sigma = random_density(2, 2, &mut rng).scale(0.7);
        let dims = SystemDims::new([("A", 3), ("B", 2)]).unwrap();
        let (out, kept) = partial_trace(&tensor_product(&rho, &sigma).unwrap(), &dims, &["A"]).unwrap();
        assert_eq!(kept.dims(), vec![3]);
        assert!((out - rho.scale(0.7)).norm() < 1e-12);

        let dims = SystemDims::new([("A", 2), ("B", 2)]).unwrap();
        let (a, _) = partial_trace(&phi_plus(), &dims, &["A"]).unwrap();
        assert!((a - identity(2).scale(0.5)).norm() < 1e-15);
        assert!(partial_trace(&phi_plus(), &dims, &["C"]).is_err());
    }

    #[test]
    fn partial_trace_iterates() {
        // Reference by explicit index summation over the traced digits.
        let mut rng = rng_from_seed(9);
        let rho = random_density(8, 8, &mut rng);
        let direct = partial_trace_positions(&rho, &[2, 2, 2], &[0]).unwrap();
        let mut oracle = zeros(2, 2);
        for a in 0..2 {
            for a2 in 0..2 {
                for b in 0..2 {
                    for cc in 0..2 {
                        oracle[(a, a2)] += rho[(a * 4 + b * 2 + cc, a2 * 4 + b * 2 + cc)];
                    }
                }
            }
        }
        let step = partial_trace_positions(&rho, &[2, 2, 2], &[0, 1]).unwrap();
        let iterated = partial_trace_positions(&step, &[2, 2], &[0]).unwrap();
        assert!((&direct - &oracle).norm() < 1e-12);
        assert!((&direct - &iterated).norm() < 1e-12);
    }

    #[test]
    fn trace_distance_examples() {
        let p0 = ket_bra(2, 0, 0);
        let p1 = ket_bra(2, 1, 1);
        assert_abs_diff_eq!(trace_distance(&p0, &p0).unwrap(), 0.0);
        assert_abs_diff_eq!(trace_distance(&p0, &p1).unwrap(), 2.0, epsilon = 1e-14);
        let d = trace_distance(&phi_plus(), &identity(4).scale(0.25)).unwrap();
        assert_abs_diff_eq!(d, 1.5, epsilon = 1e-12);
        let mut skew = zeros(2, 2);
        skew[(0, 1)] = cr(1.0);
        assert!(trace_distance(&skew, &p0).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let p0 = ket_bra(2, 0, 0);
        let p1 = ket_bra(2, 1, 1);
        assert_abs_diff_eq!(fidelity(&p0, &p0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&p0, &p1).unwrap(), 0.0, epsilon = 1e-12);
        let mut bad = p0.clone();
        bad[(1, 1)] = cr(-0.1);
        bad[(0, 0)] = cr(1.1);
        assert!(fidelity(&bad, &p0).is_err());
    }

    #[test]
    fn bell_overlap_with_products_is_at_most_half() {
        let mut rng = rng_from_seed(11);
        let phi = phi_plus();
        let mut best = 0.0f64;
        for _ in 0..10_000 {
            let a = random_density(2, 2, &mut rng);
            let b = random_density(2, 2, &mut rng);
            let f = fidelity(&phi, &tensor_product(&a, &b).unwrap()).unwrap();
            best = best.max(f);
        }
        assert!(best <= 0.5 + 1e-12, "best product overlap {best}");
    }

    #[test]
    fn haar_properties() {
        let u = haar_random_unitary(1, 4);
        assert_abs_diff_eq!(u[(0, 0)].norm(), 1.0, epsilon = 1e-12);
        let u = haar_random_unitary(5, 17);
        assert!((u.adjoint() * &u - identity(5)).norm() < 1e-10);
        assert_eq!(haar_random_unitary(4, 99), haar_random_unitary(4, 99));

        let mut rng = rng_from_seed(21);
        let samples = 10_000;
        let mean: f64 =
            (0..samples).map(|_| haar_unitary(4, &mut rng)[(0, 0)].norm_sqr()).sum::<f64>() / samples as f64;
        assert!((mean - 0.25).abs() < 0.25 * 0.05, "E|U11|^2 = {mean}");
    }

    #[test]
    fn haar_left_invariance() {
        // Under a fixed unitary V, the first moment of |(VU)_{11}|^2 must stay 1/d and the
        // second moment E|U11|^4 = 2/(d(d+1)) must be unchanged.
        let v = haar_random_unitary(3, 1234);
        let mut rng = rng_from_seed(77);
        let n = 20_000;
        let (mut m2, mut m4) = (0.0, 0.0);
        for _ in 0..n {
            let u = &v * haar_unitary(3, &mut rng);
            let p = u[(0, 0)].norm_sqr();
            m2 += p;
            m4 += p * p;
        }
        m2 /= n as f64;
        m4 /= n as f64;
        assert!((m2 - 1.0 / 3.0).abs() < 0.01);
        assert!((m4 - 2.0 / 12.0).abs() < 0.01);
    }

    #[test]
    fn matrix_text_round_trip() {
        let mut rng = rng_from_seed(2);
        let m = ginibre(3, 2, &mut rng);
        let text = write_matrix(&m);
        assert_eq!(read_matrix(&text, 1).unwrap(), m);
        let err = read_matrix("2 2\n1 0\n0 x\n", 1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(read_matrix("1 1\n1 0 5\n", 1).is_err());
    }
}
