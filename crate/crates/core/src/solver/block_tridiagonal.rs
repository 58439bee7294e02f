//! Block LU of a matrix that is block tridiagonal over rows of elements.
//!
//! With unknowns ordered element-major (x fastest), a stencil coupling each
//! element only to its four neighbours gives
//!
//! ```text
//! A = tridiag(B_j, D_j, C_j)
//! ```
//!
//! where `D_j` couples element row `j` to itself and `B_j`, `C_j` couple it to
//! rows `j - 1`, `j + 1` and are block diagonal. The factorization
//! `T_0 = D_0`, `T_j = D_j - B_j T_{j-1}^-1 C_{j-1}` keeps a dense LU (with
//! partial pivoting) of each `T_j`. No pivoting crosses block rows, which is
//! safe when the symmetric part of `A` is positive definite.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::{factor, solve};
use faer::perm::PermRef;
use faer::{Mat, MatMut, Par};

/// Failure while building the factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BlockError {
    /// An entry couples rows further apart than one, or non-matching elements.
    Structure,
    /// Zero pivot at this (local) index.
    Singular(usize),
}

pub(crate) struct BlockTridiagonal {
    /// Unknowns per element.
    nb: usize,
    /// Unknowns per element row.
    blk: usize,
    lu: Vec<Mat<f64>>,
    perm: Vec<(Vec<usize>, Vec<usize>)>,
    /// `B_j` (coupling to row `j-1`), per element of row `j`, dense `nb x nb`.
    lower: Vec<Vec<f64>>,
    /// `C_j` (coupling to row `j+1`).
    upper: Vec<Vec<f64>>,
}

impl BlockTridiagonal {
    /// `entries` are `(row, col, value)` of an `(rows * blk)`-square matrix.
    pub(crate) fn new(
        rows: usize,
        per_row: usize,
        nb: usize,
        entries: impl Iterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, BlockError> {
        let blk = per_row * nb;
        let mut d: Vec<Mat<f64>> = (0..rows).map(|_| Mat::zeros(blk, blk)).collect();
        let mut lower = vec![vec![0.0; per_row * nb * nb]; rows];
        let mut upper = vec![vec![0.0; per_row * nb * nb]; rows];
        for (i, j, v) in entries {
            let (bi, bj) = (i / blk, j / blk);
            let (li, lj) = (i % blk, j % blk);
            if bi == bj {
                d[bi][(li, lj)] += v;
                continue;
            }
            let (ei, ej) = (li / nb, lj / nb);
            if ei != ej {
                return Err(BlockError::Structure);
            }
            let at = ei * nb * nb + (li % nb) * nb + lj % nb;
            if bj + 1 == bi {
                lower[bi][at] += v;
            } else if bi + 1 == bj {
                upper[bi][at] += v;
            } else {
                return Err(BlockError::Structure);
            }
        }

        let mut lu = Vec::with_capacity(rows);
        let mut perm = Vec::with_capacity(rows);
        for (j, mut t) in d.into_iter().enumerate() {
            if j > 0 {
                // X = T_{j-1}^-1 C_{j-1}, then T_j -= B_j X
                let mut x = Mat::<f64>::zeros(blk, blk);
                scatter_block_diagonal(&upper[j - 1], nb, per_row, x.as_mut());
                lu_solve_in_place(&lu[j - 1], &perm[j - 1], x.as_mut());
                flush_tiny(&mut x);
                let b = &lower[j];
                for col in 0..blk {
                    let xc = x.col_as_slice(col);
                    let tc = t.col_as_slice_mut(col);
                    for e in 0..per_row {
                        let xe = &xc[e * nb..(e + 1) * nb];
                        for r in 0..nb {
                            let row = &b[e * nb * nb + r * nb..e * nb * nb + (r + 1) * nb];
                            tc[e * nb + r] -= row.iter().zip(xe).map(|(f, v)| f * v).sum::<f64>();
                        }
                    }
                }
            }
            let scale = flush_tiny(&mut t);
            let mut fwd = vec![0usize; blk];
            let mut inv = vec![0usize; blk];
            let mut mem = MemBuffer::new(factor::lu_in_place_scratch::<usize, f64>(blk, blk, Par::Seq, Default::default()));
            factor::lu_in_place(
                t.as_mut(),
                &mut fwd,
                &mut inv,
                Par::Seq,
                MemStack::new(&mut mem),
                Default::default(),
            );
            flush_tiny(&mut t);
            for i in 0..blk {
                let p = t[(i, i)];
                if !(p.abs() > 1e-15 * scale) || !p.is_finite() {
                    return Err(BlockError::Singular(j * blk + i));
                }
            }
            lu.push(t);
            perm.push((fwd, inv));
        }
        Ok(BlockTridiagonal {
            nb,
            blk,
            lu,
            perm,
            lower,
            upper,
        })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (blk, nb) = (self.blk, self.nb);
        let rows = self.lu.len();
        let mut y = vec![0.0; rhs.len()];
        for j in 0..rows {
            let mut r = Mat::<f64>::from_fn(blk, 1, |i, _| rhs[j * blk + i]);
            if j > 0 {
                let prev = &y[(j - 1) * blk..j * blk];
                apply_block_diagonal_sub(&self.lower[j], nb, prev, r.as_mut());
            }
            lu_solve_in_place(&self.lu[j], &self.perm[j], r.as_mut());
            for i in 0..blk {
                y[j * blk + i] = r[(i, 0)];
            }
        }
        let mut x = y.clone();
        for j in (0..rows.saturating_sub(1)).rev() {
            let next = x[(j + 1) * blk..(j + 2) * blk].to_vec();
            let mut r = Mat::<f64>::zeros(blk, 1);
            apply_block_diagonal_sub(&self.upper[j], nb, &next, r.as_mut());
            // r = -C_j x_{j+1}
            lu_solve_in_place(&self.lu[j], &self.perm[j], r.as_mut());
            for i in 0..blk {
                x[j * blk + i] = y[j * blk + i] + r[(i, 0)];
            }
        }
        x
    }
}

/// Zeroes entries below `1e-200` times the largest magnitude and returns that
/// magnitude. The decaying fill of these factors otherwise drifts into
/// subnormal numbers, which are very slow to compute with.
fn flush_tiny(m: &mut Mat<f64>) -> f64 {
    let scale = (0..m.ncols())
        .map(|c| m.col_as_slice(c).iter().fold(0.0f64, |a, v| a.max(v.abs())))
        .fold(0.0f64, f64::max);
    let cut = scale * 1e-200;
    for c in 0..m.ncols() {
        for v in m.col_as_slice_mut(c) {
            if v.abs() < cut {
                *v = 0.0;
            }
        }
    }
    scale
}

fn scatter_block_diagonal(b: &[f64], nb: usize, per_row: usize, mut out: MatMut<'_, f64>) {
    for e in 0..per_row {
        for r in 0..nb {
            for c in 0..nb {
                out[(e * nb + r, e * nb + c)] = b[e * nb * nb + r * nb + c];
            }
        }
    }
}

/// `out -= blockdiag(b) v`.
fn apply_block_diagonal_sub(b: &[f64], nb: usize, v: &[f64], mut out: MatMut<'_, f64>) {
    let per_row = v.len() / nb;
    for e in 0..per_row {
        for r in 0..nb {
            let s: f64 = (0..nb).map(|c| b[e * nb * nb + r * nb + c] * v[e * nb + c]).sum();
            out[(e * nb + r, 0)] -= s;
        }
    }
}

fn lu_solve_in_place(lu: &Mat<f64>, perm: &(Vec<usize>, Vec<usize>), rhs: MatMut<'_, f64>) {
    let n = lu.nrows();
    let p = PermRef::new_checked(&perm.0, &perm.1, n);
    let mut mem = MemBuffer::new(solve::solve_in_place_scratch::<usize, f64>(n, rhs.ncols(), Par::Seq));
    solve::solve_in_place(lu.as_ref(), lu.as_ref(), p, rhs, Par::Seq, MemStack::new(&mut mem));
}
