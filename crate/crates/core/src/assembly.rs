//! Assembly of the coupled LDG system for `(U, P, Q)`.
//!
//! For trial `W = (U, P, Q)` and test `z = (v, s, r)` the bilinear form is
//! `B(W; z) = T1 + T2 + T3 + T4` with
//!
//! ```text
//! T1 = eps^-1 [(P, s) + (Q, r)] + ((b - a_x) U, v)
//! T2 = (U, s_x) + sum_{i=1}^{N-1} <U^-_i, [s]_i> + (U, r_y) + sum_{j=1}^{N-1} <U^-_j, [r]_j>
//! T3 = (P, v_x) + sum_{i=0}^{N-1} <P^+_i, [v]_i> - <P^-_N, v^-_N>
//!    + (Q, v_y) + sum_{j=0}^{N-1} <Q^+_j, [v]_j> - <Q^-_N, v^-_N>
//! T4 = -(a U, v_x) - sum_{i=1}^{N} <a_i U^-_i, [v]_i> + lambda1 <U^-_N, v^-_N>_{x=1} + lambda2 <U^-_N, v^-_N>_{y=1}
//! ```
//!
//! where `[w] = w^+ - w^-` and traces from outside the domain are zero.
//! Unknowns are ordered element-major, and within an element as the
//! U-block, P-block, Q-block. Test functions use the same layout: the v-row
//! of an element sits at its U slot, s at P, r at Q.

use faer::sparse::{SparseColMat, Triplet};
use rayon::prelude::*;

use crate::basis::{Basis1d, DgSpace, Element};
use crate::error::{Error, Result};
use crate::problem::{validate_coefficient_condition, Coefficients};

/// Boundary penalty parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl PenaltyParams {
    /// Requires `lambda1 >= 0` and `lambda2 >= epsilon`.
    pub fn new(lambda1: f64, lambda2: f64, epsilon: f64) -> Result<Self> {
        let p = Self::unchecked(lambda1, lambda2)?;
        if !(lambda2 >= epsilon) {
            return Err(Error::invalid(format!(
                "lambda2 = {lambda2:e} is below epsilon = {epsilon:e} and the override is not set"
            )));
        }
        Ok(p)
    }

    /// Only requires nonnegative penalties. `lambda2 < epsilon` leaves the
    /// regime covered by the error analysis.
    pub fn unchecked(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda1.is_finite()) {
            return Err(Error::invalid(format!("lambda1 must be >= 0, got {lambda1}")));
        }
        if !(lambda2 >= 0.0 && lambda2.is_finite()) {
            return Err(Error::invalid(format!("lambda2 must be >= 0, got {lambda2}")));
        }
        Ok(PenaltyParams { lambda1, lambda2 })
    }

    /// `lambda1 = 0`, `lambda2 = epsilon`.
    pub fn default_for(epsilon: f64) -> Self {
        PenaltyParams {
            lambda1: 0.0,
            lambda2: epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    U = 0,
    P = 1,
    Q = 2,
}

/// Global numbering of the `3 * N^2 * (k+1)^2` unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    pub n_elements: usize,
    pub dofs_per_element: usize,
}

impl DofMap {
    pub fn new(space: &DgSpace) -> Self {
        DofMap {
            n_elements: space.n_elements(),
            dofs_per_element: space.dofs_per_element(),
        }
    }

    pub fn len(&self) -> usize {
        3 * self.n_elements * self.dofs_per_element
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, field: Field, element: usize, local: usize) -> usize {
        (3 * element + field as usize) * self.dofs_per_element + local
    }

    /// Splits a global vector into its three fields.
    pub fn unpack(&self, x: &[f64]) -> Result<SolutionTriple> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: x.len(),
            });
        }
        let nb = self.dofs_per_element;
        let mut out = SolutionTriple::zeros(self.n_elements * nb);
        for e in 0..self.n_elements {
            for (field, dst) in [(Field::U, &mut out.u), (Field::P, &mut out.p), (Field::Q, &mut out.q)] {
                let start = self.index(field, e, 0);
                dst[e * nb..(e + 1) * nb].copy_from_slice(&x[start..start + nb]);
            }
        }
        Ok(out)
    }

    pub fn pack(&self, z: &SolutionTriple) -> Result<Vec<f64>> {
        let nb = self.dofs_per_element;
        let per_field = self.n_elements * nb;
        for v in [&z.u, &z.p, &z.q] {
            if v.len() != per_field {
                return Err(Error::DimensionMismatch {
                    expected: per_field,
                    found: v.len(),
                });
            }
        }
        let mut x = vec![0.0; self.len()];
        for e in 0..self.n_elements {
            for (field, src) in [(Field::U, &z.u), (Field::P, &z.p), (Field::Q, &z.q)] {
                let start = self.index(field, e, 0);
                x[start..start + nb].copy_from_slice(&src[e * nb..(e + 1) * nb]);
            }
        }
        Ok(x)
    }
}

/// Coefficients of `(U, P, Q)` in the element-wise orthonormal basis; each
/// vector holds `n_elements * (k+1)^2` entries, element-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTriple {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl SolutionTriple {
    pub fn zeros(len: usize) -> Self {
        SolutionTriple {
            u: vec![0.0; len],
            p: vec![0.0; len],
            q: vec![0.0; len],
        }
    }

    /// `self - other`, componentwise.
    pub fn sub(&self, other: &SolutionTriple) -> SolutionTriple {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        SolutionTriple {
            u: d(&self.u, &other.u),
            p: d(&self.p, &other.p),
            q: d(&self.q, &other.q),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.p)
            .chain(&self.q)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// The assembled linear system `A x = rhs`.
#[derive(Debug, Clone)]
pub struct LdgSystem {
    pub matrix: SparseColMat<usize, f64>,
    pub rhs: Vec<f64>,
    pub dof_map: DofMap,
}

impl LdgSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.compute_nnz()
    }

    /// `A x`, summed column by column in storage order.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let a = self.matrix.as_ref();
        let mut y = vec![0.0; a.nrows()];
        for (j, &xj) in x.iter().enumerate().take(a.ncols()) {
            if xj == 0.0 {
                continue;
            }
            for (&i, &v) in a.row_idx_of_col_raw(j).iter().zip(a.val_of_col(j)) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest number of stored entries in any row.
    pub fn max_row_nnz(&self) -> usize {
        let a = self.matrix.as_ref();
        let mut counts = vec![0usize; a.nrows()];
        for j in 0..a.ncols() {
            for &i in a.row_idx_of_col_raw(j) {
                counts[i] += 1;
            }
        }
        counts.into_iter().max().unwrap_or(0)
    }

    /// MatrixMarket `coordinate real general` text (1-based indices).
    pub fn write_matrix_market(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        let a = self.matrix.as_ref();
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", a.nrows(), a.ncols(), self.nnz())?;
        for j in 0..a.ncols() {
            for (&i, &v) in a.row_idx_of_col_raw(j).iter().zip(a.val_of_col(j)) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Upper bound on nonzeros per row: the v-row couples to the own element's
/// three fields plus U of the left, P of the right and Q of the upper neighbour.
pub fn max_row_nnz_bound(degree: usize) -> usize {
    6 * (degree + 1) * (degree + 1)
}

/// Reference-element tables for a given degree and rule.
struct RefTables {
    k1: usize,
    nq: usize,
    weights: Vec<f64>,
    points: Vec<f64>,
}

/// Per-element contributions: dense own block plus neighbour couplings.
struct ElementBlocks {
    e: usize,
    own: Vec<f64>,
    left: Option<(usize, Vec<f64>, Vec<f64>)>,
    right: Option<(usize, Vec<f64>)>,
    below: Option<(usize, Vec<f64>)>,
    above: Option<(usize, Vec<f64>)>,
    rhs: Vec<f64>,
}

/// Scaled basis of one element at quadrature nodes and at both endpoints, per direction.
struct ElementTraces {
    x: Basis1d,
    y: Basis1d,
    x_ends: Basis1d,
    y_ends: Basis1d,
}

impl ElementTraces {
    fn new(k: usize, el: &Element, points: &[f64]) -> Self {
        ElementTraces {
            x: Basis1d::at_reference(k, el.hx(), points),
            y: Basis1d::at_reference(k, el.hy(), points),
            x_ends: Basis1d::at_reference(k, el.hx(), &[-1.0, 1.0]),
            y_ends: Basis1d::at_reference(k, el.hy(), &[-1.0, 1.0]),
        }
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Traces of all local basis functions on one side, `out[a * nq + q]`.
fn trace(t: &ElementTraces, side: Side, k1: usize, nq: usize) -> Vec<f64> {
    let nb = k1 * k1;
    let mut out = vec![0.0; nb * nq];
    for n in 0..k1 {
        for m in 0..k1 {
            let a = m + k1 * n;
            for q in 0..nq {
                out[a * nq + q] = match side {
                    Side::Left => t.x_ends.val[m] * t.y.val[q * k1 + n],
                    Side::Right => t.x_ends.val[k1 + m] * t.y.val[q * k1 + n],
                    Side::Bottom => t.x.val[q * k1 + m] * t.y_ends.val[n],
                    Side::Top => t.x.val[q * k1 + m] * t.y_ends.val[k1 + n],
                };
            }
        }
    }
    out
}

/// `E[r, c] = sum_q w_q test[r, q] trial[c, q]`.
fn edge_block(trial: &[f64], test: &[f64], w: &[f64], nb: usize) -> Vec<f64> {
    let nq = w.len();
    let mut out = vec![0.0; nb * nb];
    for r in 0..nb {
        for c in 0..nb {
            let mut s = 0.0;
            for q in 0..nq {
                s += w[q] * test[r * nq + q] * trial[c * nq + q];
            }
            out[r * nb + c] = s;
        }
    }
    out
}

fn check_finite(what: &'static str, v: f64, x: f64, y: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what, x, y })
    }
}

/// Assembles the LDG system on `space`.
pub fn assemble<C: Coefficients + ?Sized>(coeffs: &C, space: &DgSpace, pen: PenaltyParams) -> Result<LdgSystem> {
    let report = validate_coefficient_condition(coeffs);
    if !report.satisfied {
        return Err(Error::CoefficientCondition {
            min: report.min.min(report.min_a),
            x: report.at.0,
            y: report.at.1,
        });
    }
    let eps = coeffs.epsilon();
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {eps}")));
    }
    let rule = space.rule();
    let tables = RefTables {
        k1: space.degree() + 1,
        nq: rule.len(),
        weights: rule.weights.clone(),
        points: rule.points.clone(),
    };
    let dof_map = DofMap::new(space);

    let blocks: Vec<ElementBlocks> = (0..space.n_elements())
        .into_par_iter()
        .map(|e| element_blocks(coeffs, space, pen, &tables, e))
        .collect::<Result<_>>()?;

    let nb = dof_map.dofs_per_element;
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; dof_map.len()];
    let push_block = |triplets: &mut Vec<Triplet<usize, usize, f64>>,
                      row0: usize,
                      col0: usize,
                      block: &[f64],
                      ncols: usize| {
        let nrows = block.len() / ncols;
        for r in 0..nrows {
            for c in 0..ncols {
                triplets.push(Triplet::new(row0 + r, col0 + c, block[r * ncols + c]));
            }
        }
    };
    for b in &blocks {
        let base = dof_map.index(Field::U, b.e, 0);
        // the s-rows never see Q and the r-rows never see P
        for r in 0..3 * nb {
            for c in 0..3 * nb {
                if !matches!((r / nb, c / nb), (1, 2) | (2, 1)) {
                    triplets.push(Triplet::new(base + r, base + c, b.own[r * 3 * nb + c]));
                }
            }
        }
        rhs[base..base + nb].copy_from_slice(&b.rhs);
        let row = |f: Field| dof_map.index(f, b.e, 0);
        if let Some((nbr, v_u, s_u)) = &b.left {
            push_block(&mut triplets, row(Field::U), dof_map.index(Field::U, *nbr, 0), v_u, nb);
            push_block(&mut triplets, row(Field::P), dof_map.index(Field::U, *nbr, 0), s_u, nb);
        }
        if let Some((nbr, v_p)) = &b.right {
            push_block(&mut triplets, row(Field::U), dof_map.index(Field::P, *nbr, 0), v_p, nb);
        }
        if let Some((nbr, r_u)) = &b.below {
            push_block(&mut triplets, row(Field::Q), dof_map.index(Field::U, *nbr, 0), r_u, nb);
        }
        if let Some((nbr, v_q)) = &b.above {
            push_block(&mut triplets, row(Field::U), dof_map.index(Field::Q, *nbr, 0), v_q, nb);
        }
    }
    drop(blocks);
    let n = dof_map.len();
    let matrix = SparseColMat::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Backend(format!("building sparse matrix: {e:?}")))?;
    Ok(LdgSystem { matrix, rhs, dof_map })
}

fn element_blocks<C: Coefficients + ?Sized>(
    coeffs: &C,
    space: &DgSpace,
    pen: PenaltyParams,
    t: &RefTables,
    e: usize,
) -> Result<ElementBlocks> {
    let k = space.degree();
    let (k1, nq) = (t.k1, t.nq);
    let nb = k1 * k1;
    let n = space.n();
    let eps = coeffs.epsilon();
    let el = space.element_at(e);
    let (ix, jy) = (el.ix, el.jy);
    let (hx, hy) = (el.hx(), el.hy());
    let tr = ElementTraces::new(k, &el, &t.points);
    let xq: Vec<f64> = t.points.iter().map(|&s| el.x0 + 0.5 * hx * (1.0 + s)).collect();
    let yq: Vec<f64> = t.points.iter().map(|&s| el.y0 + 0.5 * hy * (1.0 + s)).collect();

    // basis values and derivatives at the nq x nq volume points
    let np = nq * nq;
    let mut val = vec![0.0; nb * np];
    let mut dx = vec![0.0; nb * np];
    let mut dy = vec![0.0; nb * np];
    for n_ in 0..k1 {
        for m in 0..k1 {
            let a = m + k1 * n_;
            for qy in 0..nq {
                for qx in 0..nq {
                    let p = qx + nq * qy;
                    let (vx, dvx) = (tr.x.val[qx * k1 + m], tr.x.der[qx * k1 + m]);
                    let (vy, dvy) = (tr.y.val[qy * k1 + n_], tr.y.der[qy * k1 + n_]);
                    val[a * np + p] = vx * vy;
                    dx[a * np + p] = dvx * vy;
                    dy[a * np + p] = vx * dvy;
                }
            }
        }
    }
    let mut w = vec![0.0; np];
    let mut conv_c = vec![0.0; np];
    let mut adv = vec![0.0; np];
    let mut src = vec![0.0; np];
    for qy in 0..nq {
        for qx in 0..nq {
            let p = qx + nq * qy;
            let (x, y) = (xq[qx], yq[qy]);
            w[p] = t.weights[qx] * t.weights[qy] * 0.25 * hx * hy;
            let a = check_finite("a", coeffs.a(x, y), x, y)?;
            let a_x = check_finite("a_x", coeffs.a_x(x, y), x, y)?;
            let b = check_finite("b", coeffs.b(x, y), x, y)?;
            adv[p] = a;
            conv_c[p] = b - a_x;
            src[p] = check_finite("f", coeffs.f(x, y), x, y)?;
        }
    }

    let dim = 3 * nb;
    let mut own = vec![0.0; dim * dim];
    let add_own = |own: &mut Vec<f64>, rf: Field, cf: Field, blk: &[f64], sign: f64| {
        let (r0, c0) = (rf as usize * nb, cf as usize * nb);
        for r in 0..nb {
            for c in 0..nb {
                own[(r0 + r) * dim + c0 + c] += sign * blk[r * nb + c];
            }
        }
    };

    let mut mass = vec![0.0; nb * nb];
    let mut cx = vec![0.0; nb * nb];
    let mut cy = vec![0.0; nb * nb];
    let mut conv = vec![0.0; nb * nb];
    for r in 0..nb {
        for c in 0..nb {
            let (mut sm, mut sx, mut sy, mut sc) = (0.0, 0.0, 0.0, 0.0);
            for p in 0..np {
                let wc = w[p] * val[c * np + p];
                sm += wc * val[r * np + p];
                sx += wc * dx[r * np + p];
                sy += wc * dy[r * np + p];
                sc += wc * (conv_c[p] * val[r * np + p] - adv[p] * dx[r * np + p]);
            }
            mass[r * nb + c] = sm / eps;
            cx[r * nb + c] = sx;
            cy[r * nb + c] = sy;
            conv[r * nb + c] = sc;
        }
    }
    let mut rhs = vec![0.0; nb];
    for (r, out) in rhs.iter_mut().enumerate() {
        *out = (0..np).map(|p| w[p] * src[p] * val[r * np + p]).sum();
    }

    add_own(&mut own, Field::P, Field::P, &mass, 1.0);
    add_own(&mut own, Field::Q, Field::Q, &mass, 1.0);
    add_own(&mut own, Field::P, Field::U, &cx, 1.0);
    add_own(&mut own, Field::Q, Field::U, &cy, 1.0);
    add_own(&mut own, Field::U, Field::P, &cx, 1.0);
    add_own(&mut own, Field::U, Field::Q, &cy, 1.0);
    add_own(&mut own, Field::U, Field::U, &conv, 1.0);

    let wy: Vec<f64> = t.weights.iter().map(|w| w * 0.5 * hy).collect();
    let wx: Vec<f64> = t.weights.iter().map(|w| w * 0.5 * hx).collect();
    let left_tr = trace(&tr, Side::Left, k1, nq);
    let right_tr = trace(&tr, Side::Right, k1, nq);
    let bottom_tr = trace(&tr, Side::Bottom, k1, nq);
    let top_tr = trace(&tr, Side::Top, k1, nq);
    let a_on = |xe: f64| -> Result<Vec<f64>> {
        yq.iter()
            .zip(&wy)
            .map(|(&y, &w)| check_finite("a", coeffs.a(xe, y), xe, y).map(|a| a * w))
            .collect()
    };

    // left edge: P^+ [v] (own), and couplings to U of the left neighbour
    add_own(&mut own, Field::U, Field::P, &edge_block(&left_tr, &left_tr, &wy, nb), 1.0);
    let left = if ix > 0 {
        let nbr = space.element_index(ix - 1, jy);
        let nel = space.element(ix - 1, jy);
        let ntr = ElementTraces::new(k, &nel, &t.points);
        let nbr_right = trace(&ntr, Side::Right, k1, nq);
        let wa = a_on(el.x0)?;
        let v_u: Vec<f64> = edge_block(&nbr_right, &left_tr, &wa, nb).into_iter().map(|v| -v).collect();
        let s_u = edge_block(&nbr_right, &left_tr, &wy, nb);
        Some((nbr, v_u, s_u))
    } else {
        None
    };

    // right edge
    let wa_right = a_on(el.x1)?;
    add_own(&mut own, Field::U, Field::U, &edge_block(&right_tr, &right_tr, &wa_right, nb), 1.0);
    let rr = edge_block(&right_tr, &right_tr, &wy, nb);
    let right = if ix + 1 < n {
        add_own(&mut own, Field::P, Field::U, &rr, -1.0);
        let nbr = space.element_index(ix + 1, jy);
        let nel = space.element(ix + 1, jy);
        let ntr = ElementTraces::new(k, &nel, &t.points);
        let nbr_left = trace(&ntr, Side::Left, k1, nq);
        let v_p: Vec<f64> = edge_block(&nbr_left, &right_tr, &wy, nb).into_iter().map(|v| -v).collect();
        Some((nbr, v_p))
    } else {
        add_own(&mut own, Field::U, Field::P, &rr, -1.0);
        if pen.lambda1 != 0.0 {
            add_own(&mut own, Field::U, Field::U, &rr, pen.lambda1);
        }
        None
    };

    // bottom edge: Q^+ [v] (own), r-coupling to U below
    add_own(&mut own, Field::U, Field::Q, &edge_block(&bottom_tr, &bottom_tr, &wx, nb), 1.0);
    let below = if jy > 0 {
        let nbr = space.element_index(ix, jy - 1);
        let nel = space.element(ix, jy - 1);
        let ntr = ElementTraces::new(k, &nel, &t.points);
        let nbr_top = trace(&ntr, Side::Top, k1, nq);
        Some((nbr, edge_block(&nbr_top, &bottom_tr, &wx, nb)))
    } else {
        None
    };

    // top edge
    let tt = edge_block(&top_tr, &top_tr, &wx, nb);
    let above = if jy + 1 < n {
        add_own(&mut own, Field::Q, Field::U, &tt, -1.0);
        let nbr = space.element_index(ix, jy + 1);
        let nel = space.element(ix, jy + 1);
        let ntr = ElementTraces::new(k, &nel, &t.points);
        let nbr_bottom = trace(&ntr, Side::Bottom, k1, nq);
        let v_q: Vec<f64> = edge_block(&nbr_bottom, &top_tr, &wx, nb).into_iter().map(|v| -v).collect();
        Some((nbr, v_q))
    } else {
        add_own(&mut own, Field::U, Field::Q, &tt, -1.0);
        if pen.lambda2 != 0.0 {
            add_own(&mut own, Field::U, Field::U, &tt, pen.lambda2);
        }
        None
    };

    Ok(ElementBlocks {
        e,
        own,
        left,
        right,
        below,
        above,
        rhs,
    })
}
