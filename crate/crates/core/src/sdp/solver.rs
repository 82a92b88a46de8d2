//! Primal-dual interior-point method (HKM direction, Mehrotra predictor-corrector).
//!
//! The Schur complement matrix is assembled in arrow form: constraints that only share blocks
//! with each other form independent diagonal components, and a small set of wide constraints
//! couples them. Components are factored separately and the coupling is eliminated through a
//! dense Schur complement on the wide constraints.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use super::{Relation, SdpProblem, SdpSolution, SdpStatus, Sense, SolverOptions};
use crate::error::{Error, Result};
use crate::tensor::{hermitian_part, identity, min_eigenvalue, zeros, ComplexMatrix};
use crate::unionfind::UnionFind;

/// Largest block the solver accepts.
pub const MAX_BLOCK_DIM: usize = 512;
/// Cap on the coupling constraint count considered when choosing the arrow split.
const MAX_GLOBALS: usize = 4000;
/// Tolerance at which a stalled run is still reported optimal.
const STALL_TOL: f64 = 1e-7;

type Entries = Vec<(usize, usize, Complex64)>;

struct Standard {
    dims: Vec<usize>,
    c: Vec<ComplexMatrix>,
    b: Vec<f64>,
    /// Per constraint: (block, entries).
    a: Vec<Vec<(usize, Entries)>>,
    /// Per block: (constraint, term index).
    touching: Vec<Vec<(usize, usize)>>,
    n_orig: usize,
}

impl Standard {
    fn build(p: &SdpProblem) -> Result<Standard> {
        p.validate()?;
        for &d in &p.block_dims {
            if d == 0 || d > MAX_BLOCK_DIM {
                return Err(Error::Capacity { what: "sdp block".into(), needed: d, cap: MAX_BLOCK_DIM });
            }
        }
        let sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut dims = p.block_dims.clone();
        let mut c: Vec<ComplexMatrix> = p
            .objective
            .iter()
            .zip(&p.block_dims)
            .map(|(o, &d)| o.as_ref().map(|m| m.scale(sign)).unwrap_or_else(|| zeros(d, d)))
            .collect();
        let mut a = Vec::with_capacity(p.constraints.len());
        let mut b = Vec::with_capacity(p.constraints.len());
        for con in &p.constraints {
            let mut terms: Vec<(usize, Entries)> = Vec::new();
            for (blk, m) in &con.terms {
                let entries: Entries = m.entries.iter().copied().filter(|e| e.2.norm() > 0.0).collect();
                if entries.is_empty() {
                    continue;
                }
                match terms.iter_mut().find(|t| t.0 == *blk) {
                    Some(t) => t.1.extend(entries),
                    None => terms.push((*blk, entries)),
                }
            }
            if con.relation == Relation::Le {
                let slack = dims.len();
                dims.push(1);
                c.push(zeros(1, 1));
                terms.push((slack, vec![(0, 0, Complex64::new(1.0, 0.0))]));
            }
            if terms.is_empty() {
                if con.bound.abs() > 1e-12 {
                    return Err(Error::Precondition("constraint with no terms and nonzero bound".into()));
                }
                continue;
            }
            a.push(terms);
            b.push(con.bound);
        }
        let mut touching = vec![Vec::new(); dims.len()];
        for (i, terms) in a.iter().enumerate() {
            for (t, (blk, _)) in terms.iter().enumerate() {
                touching[*blk].push((i, t));
            }
        }
        Ok(Standard { dims, c, b, a, touching, n_orig: p.block_dims.len() })
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn apply_a(&self, x: &[ComplexMatrix]) -> Vec<f64> {
        self.a
            .iter()
            .map(|terms| {
                terms.iter().map(|(blk, e)| e.iter().map(|&(p, q, v)| (v * x[*blk][(q, p)]).re).sum::<f64>()).sum()
            })
            .collect()
    }

    fn apply_at(&self, y: &[f64]) -> Vec<ComplexMatrix> {
        let mut out: Vec<ComplexMatrix> = self.dims.iter().map(|&d| zeros(d, d)).collect();
        for (terms, &yi) in self.a.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for (blk, e) in terms {
                for &(p, q, v) in e {
                    out[*blk][(p, q)] += v * yi;
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
enum Role {
    Local(usize, usize),
    Global(usize),
}

/// Arrow decomposition of the constraint set.
struct Arrow {
    roles: Vec<Role>,
    comp_sizes: Vec<usize>,
    n_global: usize,
}

impl Arrow {
    fn choose(std: &Standard) -> Arrow {
        let m = std.m();
        let width: Vec<usize> = std.a.iter().map(|t| t.len()).collect();
        let mut thresholds: Vec<usize> = width.clone();
        thresholds.sort_unstable();
        thresholds.dedup();
        thresholds.reverse();
        let mut best = Self::with_threshold(std, usize::MAX);
        let mut best_cost = best.cost();
        for &t in &thresholds {
            let n_global = width.iter().filter(|&&w| w >= t).count();
            if n_global > MAX_GLOBALS || n_global == m {
                break;
            }
            let cand = Self::with_threshold(std, t);
            let cost = cand.cost();
            if cost < best_cost {
                best = cand;
                best_cost = cost;
            }
        }
        best
    }

    fn with_threshold(std: &Standard, threshold: usize) -> Arrow {
        let m = std.m();
        let nb = std.dims.len();
        let is_global: Vec<bool> = std.a.iter().map(|t| t.len() >= threshold).collect();
        let mut uf = UnionFind::new(nb);
        for (i, terms) in std.a.iter().enumerate() {
            if !is_global[i] {
                for w in terms.windows(2) {
                    uf.union(w[0].0, w[1].0);
                }
            }
        }
        let mut comp_of_root = vec![usize::MAX; nb];
        let mut comp_sizes = Vec::new();
        let mut roles = vec![Role::Global(0); m];
        let mut n_global = 0;
        for i in 0..m {
            if is_global[i] {
                roles[i] = Role::Global(n_global);
                n_global += 1;
            } else {
                let r = uf.find_min(std.a[i][0].0);
                if comp_of_root[r] == usize::MAX {
                    comp_of_root[r] = comp_sizes.len();
                    comp_sizes.push(0);
                }
                let c = comp_of_root[r];
                roles[i] = Role::Local(c, comp_sizes[c]);
                comp_sizes[c] += 1;
            }
        }
        Arrow { roles, comp_sizes, n_global }
    }

    fn cost(&self) -> f64 {
        let g = self.n_global as f64;
        let local: f64 = self.comp_sizes.iter().map(|&n| (n as f64).powi(3) / 3.0 + (n as f64).powi(2) * g).sum();
        let total: f64 = self.comp_sizes.iter().map(|&n| n as f64).sum();
        local + g.powi(3) / 3.0 + g * g * total
    }
}

/// Factored Schur complement system `M Δy = r`.
struct SchurSystem {
    local: Vec<DMatrix<f64>>,
    cross: Vec<DMatrix<f64>>,
    gg: DMatrix<f64>,
}

struct Factored {
    local: Vec<Cholesky<f64, nalgebra::Dyn>>,
    /// `M_cc^{-1} B_c` per component.
    z: Vec<DMatrix<f64>>,
    cross: Vec<DMatrix<f64>>,
    global: Option<Cholesky<f64, nalgebra::Dyn>>,
}

fn cholesky_with_jitter(mut m: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let n = m.nrows();
    if n == 0 {
        return Cholesky::new(m);
    }
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch);
    }
    let mut tau = 1e-14 * scale;
    while tau <= 1e-3 * scale {
        for i in 0..n {
            m[(i, i)] += tau;
        }
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Some(ch);
        }
        for i in 0..n {
            m[(i, i)] -= tau;
        }
        tau *= 100.0;
    }
    None
}

impl SchurSystem {
    fn assemble(std: &Standard, arrow: &Arrow, x: &[ComplexMatrix], sinv: &[ComplexMatrix]) -> SchurSystem {
        let ng = arrow.n_global;
        let mut local: Vec<DMatrix<f64>> = arrow.comp_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut cross: Vec<DMatrix<f64>> = arrow.comp_sizes.iter().map(|&n| DMatrix::zeros(n, ng)).collect();
        let mut gg = DMatrix::zeros(ng, ng);
        for (blk, touch) in std.touching.iter().enumerate() {
            let n = std.dims[blk];
            let xs = x[blk].as_slice();
            let ss = sinv[blk].as_slice();
            for (ia, &(i, ti)) in touch.iter().enumerate() {
                let ai = &std.a[i][ti].1;
                for &(j, tj) in &touch[ia..] {
                    let aj = &std.a[j][tj].1;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(p1, q1, v1) in ai {
                        let mut inner = Complex64::new(0.0, 0.0);
                        for &(p, q, v) in aj {
                            // X[q1, p] * Sinv[q, p1], column-major storage.
                            inner += v * xs[p * n + q1] * ss[p1 * n + q];
                        }
                        acc += v1 * inner;
                    }
                    let val = acc.re;
                    match (arrow.roles[i], arrow.roles[j]) {
                        (Role::Local(c, li), Role::Local(c2, lj)) => {
                            debug_assert_eq!(c, c2);
                            local[c][(li, lj)] += val;
                            if i != j {
                                local[c][(lj, li)] += val;
                            }
                        }
                        (Role::Local(c, li), Role::Global(g)) | (Role::Global(g), Role::Local(c, li)) => {
                            cross[c][(li, g)] += val;
                        }
                        (Role::Global(g1), Role::Global(g2)) => {
                            gg[(g1, g2)] += val;
                            if i != j {
                                gg[(g2, g1)] += val;
                            }
                        }
                    }
                }
            }
        }
        SchurSystem { local, cross, gg }
    }

    fn factor(self) -> Option<Factored> {
        let mut chols = Vec::with_capacity(self.local.len());
        let mut z = Vec::with_capacity(self.local.len());
        let mut s = self.gg;
        for (m, b) in self.local.into_iter().zip(&self.cross) {
            let ch = cholesky_with_jitter(m)?;
            if b.ncols() > 0 {
                let zc = ch.solve(b);
                s -= b.transpose() * &zc;
                z.push(zc);
            } else {
                z.push(DMatrix::zeros(b.nrows(), 0));
            }
            chols.push(ch);
        }
        let global = if s.nrows() > 0 {
            let s = (&s + s.transpose()) * 0.5;
            Some(cholesky_with_jitter(s)?)
        } else {
            None
        };
        Some(Factored { local: chols, z, cross: self.cross, global })
    }
}

impl Factored {
    fn solve(&self, arrow: &Arrow, r: &[f64]) -> Vec<f64> {
        let mut rl: Vec<DVector<f64>> = arrow.comp_sizes.iter().map(|&n| DVector::zeros(n)).collect();
        let mut rg = DVector::zeros(arrow.n_global);
        for (i, role) in arrow.roles.iter().enumerate() {
            match *role {
                Role::Local(c, li) => rl[c][li] = r[i],
                Role::Global(g) => rg[g] = r[i],
            }
        }
        let mut yl: Vec<DVector<f64>> = self.local.iter().zip(&rl).map(|(ch, rc)| ch.solve(rc)).collect();
        let yg = match &self.global {
            Some(gch) => {
                let mut rhs = rg.clone();
                for (c, b) in self.cross.iter().enumerate() {
                    rhs -= b.transpose() * &yl[c];
                }
                let yg = gch.solve(&rhs);
                for (c, zc) in self.z.iter().enumerate() {
                    yl[c] -= zc * &yg;
                }
                yg
            }
            None => rg,
        };
        let mut out = vec![0.0; r.len()];
        for (i, role) in arrow.roles.iter().enumerate() {
            out[i] = match *role {
                Role::Local(c, li) => yl[c][li],
                Role::Global(g) => yg[g],
            };
        }
        out
    }
}

fn inner(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y.iter()).map(|(u, v)| (u.conj() * v).re).sum::<f64>()).sum()
}

fn frob(a: &[ComplexMatrix]) -> f64 {
    inner(a, a).sqrt()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn hermitian_inverse(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let ch = Cholesky::new(m.clone())?;
    Some(hermitian_part(&ch.inverse()))
}

/// Largest `α` with `X + α·D ⪰ 0` (infinite when `D ⪰ 0`).
fn max_step(x: &ComplexMatrix, d: &ComplexMatrix) -> f64 {
    if x.nrows() == 1 {
        let (xv, dv) = (x[(0, 0)].re, d[(0, 0)].re);
        return if dv >= 0.0 { f64::INFINITY } else { -xv / dv };
    }
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let Some(y) = l.solve_lower_triangular(d) else {
        return 0.0;
    };
    let Some(z) = l.solve_lower_triangular(&y.adjoint()) else {
        return 0.0;
    };
    let lam = min_eigenvalue(&hermitian_part(&z));
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

fn axpy(x: &[ComplexMatrix], alpha: f64, d: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    x.iter().zip(d).map(|(a, b)| hermitian_part(&(a + b.scale(alpha)))).collect()
}

/// Solves the problem; `Err` only for malformed input or capacity violations.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let std = Standard::build(problem)?;
    let m = std.m();
    let nblocks = std.dims.len();
    let arrow = Arrow::choose(&std);
    let n_total: f64 = std.dims.iter().map(|&d| d as f64).sum();
    let norm_b = norm2(&std.b);
    let norm_c = frob(&std.c);

    // Starting point scaled to the data.
    let mut x = Vec::with_capacity(nblocks);
    let mut s = Vec::with_capacity(nblocks);
    for blk in 0..nblocks {
        let n = std.dims[blk] as f64;
        let mut xi = 10.0f64.max(n.sqrt());
        let mut eta_a = 0.0f64;
        for &(i, t) in &std.touching[blk] {
            let an = std.a[i][t].1.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt();
            xi = xi.max(n * (1.0 + std.b[i].abs()) / (1.0 + an));
            eta_a = eta_a.max(an);
        }
        let cn = std.c[blk].norm();
        let eta = 10.0f64.max(n.sqrt()).max((1.0 + eta_a.max(cn)) / n.sqrt());
        x.push(identity(std.dims[blk]).scale(xi));
        s.push(identity(std.dims[blk]).scale(eta));
    }
    let mut y = vec![0.0; m];

    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let (mut pinf, mut dinf, mut gap);
    let (mut pobj, mut dobj);
    loop {
        let ax = std.apply_a(&x);
        let rp: Vec<f64> = std.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = std.apply_at(&y);
        let rd: Vec<ComplexMatrix> = (0..nblocks).map(|k| &std.c[k] - &s[k] - &aty[k]).collect();
        pobj = inner(&std.c, &x);
        dobj = std.b.iter().zip(&y).map(|(b, y)| b * y).sum::<f64>();
        let mu = inner(&x, &s) / n_total;
        pinf = norm2(&rp) / (1.0 + norm_b);
        dinf = frob(&rd) / (1.0 + norm_c);
        gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if pinf < opts.tol && dinf < opts.tol && gap < opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        if iterations >= 2 {
            // Farkas certificate for primal infeasibility: A*y ⪯ 0 with b·y > 0.
            if dobj > 0.0 && pinf > 1e-8 {
                let lmax = aty.iter().map(|m| -min_eigenvalue(&m.scale(-1.0))).fold(f64::NEG_INFINITY, f64::max);
                if lmax <= 1e-8 * dobj {
                    status = SdpStatus::Infeasible;
                    break;
                }
            }
            // Certificate for dual infeasibility: A X ≈ 0 with ⟨C, X⟩ < 0.
            if pobj < 0.0 && dinf > 1e-8 && norm2(&ax) <= 1e-8 * pobj.abs() {
                status = SdpStatus::Unbounded;
                break;
            }
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let Some(sinv) = s.iter().map(hermitian_inverse).collect::<Option<Vec<_>>>() else {
            break;
        };
        let Some(fact) = SchurSystem::assemble(&std, &arrow, &x, &sinv).factor() else {
            break;
        };

        // X Rd S^{-1}, reused by both directions.
        let xrds: Vec<ComplexMatrix> = (0..nblocks).map(|k| &x[k] * &rd[k] * &sinv[k]).collect();
        let direction = |rc: &[ComplexMatrix], extra: &dyn Fn(usize, &ComplexMatrix) -> ComplexMatrix| {
            let arc = std.apply_a(rc);
            let rhs: Vec<f64> = rp.iter().zip(&arc).map(|(a, b)| a - b).collect();
            let dy = fact.solve(&arrow, &rhs);
            let atdy = std.apply_at(&dy);
            let ds: Vec<ComplexMatrix> = (0..nblocks).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<ComplexMatrix> = (0..nblocks).map(|k| hermitian_part(&extra(k, &ds[k]))).collect();
            (dx, dy, ds)
        };

        // Predictor.
        let rc_a: Vec<ComplexMatrix> = (0..nblocks).map(|k| -&x[k] - &xrds[k]).collect();
        let (dx_a, _, ds_a) = direction(&rc_a, &|k, dsk| -&x[k] - &x[k] * dsk * &sinv[k]);
        let ap_a = max_step_all(&x, &dx_a).min(1.0);
        let ad_a = max_step_all(&s, &ds_a).min(1.0);
        let mu_a = inner(&axpy(&x, ap_a, &dx_a), &axpy(&s, ad_a, &ds_a)) / n_total;
        let sigma = if mu > 0.0 { (mu_a / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // Corrector.
        let k_corr: Vec<ComplexMatrix> = (0..nblocks).map(|k| &dx_a[k] * &ds_a[k] * &sinv[k]).collect();
        let rc: Vec<ComplexMatrix> =
            (0..nblocks).map(|k| sinv[k].scale(sigma * mu) - &x[k] - &xrds[k] - &k_corr[k]).collect();
        let (dx, dy, ds) =
            direction(&rc, &|k, dsk| sinv[k].scale(sigma * mu) - &x[k] - &x[k] * dsk * &sinv[k] - &k_corr[k]);
        let gamma = 0.9 + 0.09 * ap_a.min(ad_a);
        let ap = (gamma * max_step_all(&x, &dx)).min(1.0);
        let ad = (gamma * max_step_all(&s, &ds)).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            break;
        }
        x = axpy(&x, ap, &dx);
        s = axpy(&s, ad, &ds);
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
    }

    if status == SdpStatus::MaxIter && pinf < STALL_TOL && dinf < STALL_TOL && gap < STALL_TOL {
        status = SdpStatus::Optimal;
    }
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    x.truncate(std.n_orig);
    Ok(SdpSolution {
        status,
        primal_value: sign * pobj,
        dual_value: sign * dobj,
        x,
        y: expand_multipliers(problem, &y),
        iterations,
        primal_residual: pinf,
        dual_residual: dinf,
    })
}

/// Maps multipliers back to the original constraint list (dropped empty rows get zero).
fn expand_multipliers(problem: &SdpProblem, y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(problem.constraints.len());
    let mut k = 0;
    for con in &problem.constraints {
        let kept =
            con.relation == Relation::Le || con.terms.iter().any(|(_, m)| m.entries.iter().any(|e| e.2.norm() > 0.0));
        if kept {
            out.push(y[k]);
            k += 1;
        } else {
            out.push(0.0);
        }
    }
    out
}

fn max_step_all(x: &[ComplexMatrix], d: &[ComplexMatrix]) -> f64 {
    x.iter().zip(d).map(|(a, b)| max_step(a, b)).fold(f64::INFINITY, f64::min)
}
