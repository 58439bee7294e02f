//! Sparse direct solve of the assembled system.
//!
//! The system is nonsymmetric, so a sparse LU with fill-reducing ordering and
//! partial pivoting is used. In the LDG system the `s` and `r` rows couple
//! `P` and `Q` only through element-local mass blocks, so by default `P` and
//! `Q` are eliminated element by element and the LU is taken of the Schur
//! complement in `U` (one third of the unknowns, five-element stencil). On a
//! square element grid that complement is block tridiagonal over element
//! rows and is factored row by row with dense LU; otherwise a sparse LU is
//! used. The full sparse LU is used when the `P, Q` blocks are not local or
//! when requested.
//!
//! A solution is only returned when its relative residual
//! `||A x - b|| / ||b||` against the full system is at most
//! [`RESIDUAL_TOLERANCE`]; up to [`MAX_REFINEMENT_STEPS`] steps of iterative
//! refinement are tried first.

mod block_tridiagonal;

use std::time::{Duration, Instant};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use self::block_tridiagonal::{BlockError, BlockTridiagonal};
use crate::assembly::{LdgSystem, SolutionTriple};
use crate::error::{Error, Result};

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
pub const MAX_REFINEMENT_STEPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorMethod {
    /// LU of the full `(U, P, Q)` system.
    Full,
    /// Local elimination of `P, Q`, LU of the `U` Schur complement.
    Condensed,
    /// As `Condensed`, with the Schur complement factored by element rows.
    CondensedBlockRows,
}

/// Size and timing of a factorization. `n` and `nnz` describe the matrix
/// that was actually factored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorStats {
    pub method: FactorMethod,
    pub n: usize,
    pub nnz: usize,
    pub factor_time: Duration,
}

enum Inner {
    Full(Lu<usize, f64>),
    Condensed(Condensed),
}

/// Factors of an [`LdgSystem`]. Read-only after construction.
pub struct Factorization<'s> {
    system: &'s LdgSystem,
    inner: Inner,
    stats: FactorStats,
}

impl std::fmt::Debug for Factorization<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("stats", &self.stats).finish_non_exhaustive()
    }
}

fn map_lu_error(e: LuError, index_map: Option<&[usize]>) -> Error {
    match e {
        LuError::SymbolicSingular { index } => Error::SingularPivot {
            index: index_map.map_or(index, |m| m[index]),
        },
        LuError::Generic(g) => Error::Backend(format!("{g:?}")),
    }
}

/// Factors `system`, condensing `P, Q` when possible.
pub fn factor(system: &LdgSystem) -> Result<Factorization<'_>> {
    let t0 = Instant::now();
    match Condensed::new(system)? {
        Some(c) => {
            let stats = FactorStats {
                method: match c.schur {
                    Schur::Sparse(_) => FactorMethod::Condensed,
                    Schur::BlockRows(_) => FactorMethod::CondensedBlockRows,
                },
                n: c.u_dofs.len(),
                nnz: c.schur_nnz,
                factor_time: t0.elapsed(),
            };
            Ok(Factorization {
                system,
                inner: Inner::Condensed(c),
                stats,
            })
        }
        None => factor_full(system),
    }
}

/// LU of the full system.
pub fn factor_full(system: &LdgSystem) -> Result<Factorization<'_>> {
    let t0 = Instant::now();
    let lu = system.matrix.sp_lu().map_err(|e| map_lu_error(e, None))?;
    let stats = FactorStats {
        method: FactorMethod::Full,
        n: system.dim(),
        nnz: system.nnz(),
        factor_time: t0.elapsed(),
    };
    Ok(Factorization {
        system,
        inner: Inner::Full(lu),
        stats,
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn lu_solve(lu: &Lu<usize, f64>, rhs: &[f64]) -> Vec<f64> {
    let b = Col::<f64>::from_fn(rhs.len(), |i| rhs[i]);
    let x = lu.solve(&b);
    (0..x.nrows()).map(|i| x[i]).collect()
}

impl Factorization<'_> {
    pub fn stats(&self) -> FactorStats {
        self.stats
    }

    fn apply(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.inner {
            Inner::Full(lu) => Ok(lu_solve(lu, rhs)),
            Inner::Condensed(c) => c.apply(rhs),
        }
    }

    /// Solves `A x = rhs`, checking finiteness and the residual.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.system.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        let bnorm = norm2(rhs);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = self.apply(rhs)?;
        let mut residual = f64::INFINITY;
        for step in 0..=MAX_REFINEMENT_STEPS {
            if let Some(i) = x.iter().position(|v| !v.is_finite()) {
                // a zero pivot shows up as inf/nan in the solution
                return Err(Error::SingularPivot { index: i });
            }
            let ax = self.system.matvec(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            residual = norm2(&r) / bnorm;
            if residual <= RESIDUAL_TOLERANCE || step == MAX_REFINEMENT_STEPS {
                break;
            }
            let dx = self.apply(&r)?;
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
        }
        if residual > RESIDUAL_TOLERANCE {
            return Err(Error::ResidualTooLarge {
                residual,
                tolerance: RESIDUAL_TOLERANCE,
            });
        }
        Ok(x)
    }
}

/// Factors, solves with the system's right-hand side and unpacks the result.
pub fn solve_system(system: &LdgSystem) -> Result<(SolutionTriple, FactorStats)> {
    let f = factor(system)?;
    let x = f.solve(&system.rhs)?;
    let z = system.dof_map.unpack(&x)?;
    Ok((z, f.stats()))
}

enum Schur {
    Sparse(Lu<usize, f64>),
    BlockRows(BlockTridiagonal),
}

type SparseRow = Vec<(usize, f64)>;

/// Static condensation of the `P, Q` unknowns.
///
/// With `A = [[A_uu, A_uw], [A_wu, D]]`, `w = (P, Q)` and `D` block diagonal
/// per element, `S = A_uu - A_uw D^-1 A_wu`.
struct Condensed {
    /// Global index of every U unknown, in U-local order.
    u_dofs: Vec<usize>,
    /// Position of a global index in U-local or W-local numbering.
    local: Vec<usize>,
    is_u: Vec<bool>,
    /// Global indices of the W unknowns of each element block.
    w_blocks: Vec<Vec<usize>>,
    /// Dense `D_e^-1`, row-major.
    d_inv: Vec<Vec<f64>>,
    /// Rows of `A_wu` in W-local order, columns in U-local numbering.
    a_wu: Vec<SparseRow>,
    /// Rows of `A_uw` in U-local order, columns in W-local numbering.
    a_uw: Vec<SparseRow>,
    /// Size of each `D_e`.
    block: usize,
    schur: Schur,
    schur_nnz: usize,
}

/// Inverse of a small dense matrix by Gauss-Jordan with partial pivoting.
fn dense_inverse(mut a: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if !(a[piv * n + col].abs() > 1e-14 * scale) {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
                inv.swap(piv * n + j, col * n + j);
            }
        }
        let d = a[col * n + col];
        for j in 0..n {
            a[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i * n + col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i * n + j] -= f * a[col * n + j];
                        inv[i * n + j] -= f * inv[col * n + j];
                    }
                }
            }
        }
    }
    Some(inv)
}

impl Condensed {
    /// `None` when the `P, Q` coupling is not element-local.
    fn new(system: &LdgSystem) -> Result<Option<Self>> {
        let map = system.dof_map;
        let nb = map.dofs_per_element;
        let n = system.dim();
        if nb == 0 || n != 3 * map.n_elements * nb {
            return Ok(None);
        }
        let is_u: Vec<bool> = (0..n).map(|g| (g / nb) % 3 == 0).collect();
        let mut local = vec![0; n];
        let mut u_dofs = Vec::with_capacity(n / 3);
        let mut n_w = 0;
        for g in 0..n {
            if is_u[g] {
                local[g] = u_dofs.len();
                u_dofs.push(g);
            } else {
                local[g] = n_w;
                n_w += 1;
            }
        }
        let n_u = u_dofs.len();

        // row-wise split of A
        let a = system.matrix.as_ref();
        let mut a_uu: Vec<SparseRow> = vec![Vec::new(); n_u];
        let mut a_uw: Vec<SparseRow> = vec![Vec::new(); n_u];
        let mut a_wu: Vec<SparseRow> = vec![Vec::new(); n_w];
        let mut d_blocks: Vec<Vec<f64>> = vec![vec![0.0; 4 * nb * nb]; map.n_elements];
        for j in 0..a.ncols() {
            for (&i, &v) in a.row_idx_of_col_raw(j).iter().zip(a.val_of_col(j)) {
                match (is_u[i], is_u[j]) {
                    (true, true) => a_uu[local[i]].push((local[j], v)),
                    (true, false) => a_uw[local[i]].push((local[j], v)),
                    (false, true) => a_wu[local[i]].push((local[j], v)),
                    (false, false) => {
                        let (ei, ej) = (i / (3 * nb), j / (3 * nb));
                        if ei != ej {
                            return Ok(None);
                        }
                        let (ri, cj) = (i % (3 * nb) - nb, j % (3 * nb) - nb);
                        d_blocks[ei][ri * 2 * nb + cj] = v;
                    }
                }
            }
        }
        let w_blocks: Vec<Vec<usize>> = (0..map.n_elements)
            .map(|e| (3 * e * nb + nb..3 * (e + 1) * nb).collect())
            .collect();
        let Some(d_inv) = d_blocks
            .into_iter()
            .map(|blk| dense_inverse(blk, 2 * nb))
            .collect::<Option<Vec<Vec<f64>>>>()
        else {
            return Ok(None);
        };

        // G = D^-1 A_wu, row by row per element
        let mut spa = vec![0.0; n_u];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; n_u];
        let w_of_block = |e: usize, r: usize| 2 * nb * e + r;
        let mut g_rows: Vec<SparseRow> = vec![Vec::new(); n_w];
        for e in 0..map.n_elements {
            let inv = &d_inv[e];
            for r in 0..2 * nb {
                for c in 0..2 * nb {
                    let f = inv[r * 2 * nb + c];
                    if f == 0.0 {
                        continue;
                    }
                    for &(col, v) in &a_wu[w_of_block(e, c)] {
                        if !mark[col] {
                            mark[col] = true;
                            touched.push(col);
                        }
                        spa[col] += f * v;
                    }
                }
                touched.sort_unstable();
                let row = &mut g_rows[w_of_block(e, r)];
                for &col in &touched {
                    row.push((col, spa[col]));
                    spa[col] = 0.0;
                    mark[col] = false;
                }
                touched.clear();
            }
        }

        // S = A_uu - A_uw G
        let mut triplets = Vec::new();
        for i in 0..n_u {
            for &(col, v) in &a_uu[i] {
                if !mark[col] {
                    mark[col] = true;
                    touched.push(col);
                }
                spa[col] += v;
            }
            for &(w, a) in &a_uw[i] {
                for &(col, g) in &g_rows[w] {
                    if !mark[col] {
                        mark[col] = true;
                        touched.push(col);
                    }
                    spa[col] -= a * g;
                }
            }
            touched.sort_unstable();
            for &col in &touched {
                if spa[col] != 0.0 {
                    triplets.push(Triplet::new(i, col, spa[col]));
                }
                spa[col] = 0.0;
                mark[col] = false;
            }
            touched.clear();
        }
        drop(g_rows);
        drop(a_uu);
        let schur_nnz = triplets.len();
        let per_row = (map.n_elements as f64).sqrt().round() as usize;
        let mut schur = None;
        if per_row * per_row == map.n_elements {
            let entries = triplets.iter().map(|t| (t.row, t.col, t.val));
            match BlockTridiagonal::new(per_row, per_row, nb, entries) {
                Ok(bt) => schur = Some(Schur::BlockRows(bt)),
                Err(BlockError::Singular(i)) => return Err(Error::SingularPivot { index: u_dofs[i] }),
                Err(BlockError::Structure) => {}
            }
        }
        let schur = match schur {
            Some(s) => s,
            None => {
                let s = SparseColMat::try_new_from_triplets(n_u, n_u, &triplets)
                    .map_err(|e| Error::Backend(format!("building Schur complement: {e:?}")))?;
                drop(triplets);
                Schur::Sparse(s.sp_lu().map_err(|e| map_lu_error(e, Some(&u_dofs)))?)
            }
        };
        Ok(Some(Condensed {
            u_dofs,
            local,
            is_u,
            w_blocks,
            d_inv,
            a_wu,
            a_uw,
            block: 2 * nb,
            schur,
            schur_nnz,
        }))
    }

    /// `D^-1 y` for a vector in W-local numbering.
    fn d_solve(&self, y: &[f64]) -> Vec<f64> {
        let m = self.block;
        let mut out = vec![0.0; y.len()];
        for (e, inv) in self.d_inv.iter().enumerate() {
            let yb = &y[e * m..(e + 1) * m];
            for r in 0..m {
                out[e * m + r] = (0..m).map(|c| inv[r * m + c] * yb[c]).sum();
            }
        }
        out
    }

    fn apply(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n_u = self.u_dofs.len();
        let n_w = rhs.len() - n_u;
        let mut b_u = vec![0.0; n_u];
        let mut b_w = vec![0.0; n_w];
        for (g, &v) in rhs.iter().enumerate() {
            if self.is_u[g] {
                b_u[self.local[g]] = v;
            } else {
                b_w[self.local[g]] = v;
            }
        }
        let dw = self.d_solve(&b_w);
        for (i, row) in self.a_uw.iter().enumerate() {
            b_u[i] -= row.iter().map(|&(w, a)| a * dw[w]).sum::<f64>();
        }
        let u = match &self.schur {
            Schur::Sparse(lu) => lu_solve(lu, &b_u),
            Schur::BlockRows(bt) => bt.solve(&b_u),
        };
        let mut t = b_w;
        for (w, row) in self.a_wu.iter().enumerate() {
            t[w] -= row.iter().map(|&(c, a)| a * u[c]).sum::<f64>();
        }
        let w = self.d_solve(&t);
        let mut x = vec![0.0; rhs.len()];
        for (i, &g) in self.u_dofs.iter().enumerate() {
            x[g] = u[i];
        }
        for (e, blk) in self.w_blocks.iter().enumerate() {
            let m = blk.len();
            for (r, &g) in blk.iter().enumerate() {
                x[g] = w[e * m + r];
            }
        }
        Ok(x)
    }
}
