//! Energy and weighted `L^2` norms of triples `z = (v, s, r)`.
//!
//! ```text
//! |||z|||^2 = eps^-1 ||s||^2 + eps^-1 ||r||^2 + ||(b - a_x/2)^{1/2} v||^2
//!           + 1/2 sum_{i=0}^{N} \int a [v]^2 dy
//!           + lambda1 \int (v^-_N)^2 dy (x = 1) + lambda2 \int (v^-_N)^2 dx (y = 1)
//! ```
//!
//! The first line alone is the weighted `L^2` norm. With these definitions
//! `B(z; z) = |||z|||^2` for the LDG form of [`crate::assembly`].
//!
//! Edge terms are attributed to elements for per-region reporting: the jump
//! across `x = x_i` belongs to the element right of it, the jump at `x = 1`
//! and the `lambda1` term to the element left of it, the `lambda2` term to the
//! element below `y = 1`.

use rayon::prelude::*;

use crate::assembly::{PenaltyParams, SolutionTriple};
use crate::basis::{tensor_eval, Basis1d, DgSpace, Element};
use crate::mesh::Region;
use crate::problem::{Coefficients, ExactSolution};

/// A piecewise-defined triple that can be sampled element by element.
pub trait TripleField: Sync {
    /// Values `[v, s, r]` on element `el` at the reference grid `tx x ty`
    /// (x fastest), with `tx, ty` in `[-1, 1]`.
    fn eval_ref(&self, space: &DgSpace, el: &Element, tx: &[f64], ty: &[f64], out: &mut [[f64; 3]]);
}

impl TripleField for SolutionTriple {
    fn eval_ref(&self, space: &DgSpace, el: &Element, tx: &[f64], ty: &[f64], out: &mut [[f64; 3]]) {
        let k = space.degree();
        let nb = space.dofs_per_element();
        let e = space.element_index(el.ix, el.jy);
        let bx = Basis1d::at_reference(k, el.hx(), tx);
        let by = Basis1d::at_reference(k, el.hy(), ty);
        let mut tmp = vec![0.0; tx.len() * ty.len()];
        for (c, field) in [&self.u, &self.p, &self.q].into_iter().enumerate() {
            tensor_eval(k + 1, &field[e * nb..(e + 1) * nb], &bx.val, &by.val, tx.len(), ty.len(), &mut tmp);
            for (o, v) in out.iter_mut().zip(&tmp) {
                o[c] = *v;
            }
        }
    }
}

/// Adapter sampling an exact solution `(u, p, q)`.
pub struct ExactField<'a, E: ExactSolution + ?Sized>(pub &'a E);

impl<E: ExactSolution + ?Sized> TripleField for ExactField<'_, E> {
    fn eval_ref(&self, _space: &DgSpace, el: &Element, tx: &[f64], ty: &[f64], out: &mut [[f64; 3]]) {
        for (py, &t) in ty.iter().enumerate() {
            let y = map_ref(el.y0, el.y1, t);
            for (px, &s) in tx.iter().enumerate() {
                let x = map_ref(el.x0, el.x1, s);
                out[px + tx.len() * py] = [self.0.u(x, y), self.0.p(x, y), self.0.q(x, y)];
            }
        }
    }
}

/// `A - B`.
pub struct Difference<A, B>(pub A, pub B);

impl<A: TripleField, B: TripleField> TripleField for Difference<A, B> {
    fn eval_ref(&self, space: &DgSpace, el: &Element, tx: &[f64], ty: &[f64], out: &mut [[f64; 3]]) {
        let mut rhs = vec![[0.0; 3]; out.len()];
        self.0.eval_ref(space, el, tx, ty, out);
        self.1.eval_ref(space, el, tx, ty, &mut rhs);
        for (o, r) in out.iter_mut().zip(&rhs) {
            for c in 0..3 {
                o[c] -= r[c];
            }
        }
    }
}

impl<T: TripleField + ?Sized> TripleField for &T {
    fn eval_ref(&self, space: &DgSpace, el: &Element, tx: &[f64], ty: &[f64], out: &mut [[f64; 3]]) {
        (**self).eval_ref(space, el, tx, ty, out)
    }
}

/// Physical coordinate of reference point `t`; hits both endpoints exactly.
#[inline]
pub(crate) fn map_ref(a: f64, b: f64, t: f64) -> f64 {
    if t == -1.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        a + 0.5 * (b - a) * (1.0 + t)
    }
}

/// Squared contributions to the norms, attributed to one element or region.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormParts {
    /// `\int (b - a_x/2) v^2`
    pub weighted_v: f64,
    /// `eps^-1 \int s^2`
    pub s: f64,
    /// `eps^-1 \int r^2`
    pub r: f64,
    /// `1/2 \int a [v]^2` over vertical edges
    pub jump: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Unweighted `\int v^2`.
    pub plain_v: f64,
}

impl NormParts {
    pub fn weighted_l2_sq(&self) -> f64 {
        self.weighted_v + self.s + self.r
    }

    pub fn energy_sq(&self) -> f64 {
        self.weighted_l2_sq() + self.jump + self.lambda1 + self.lambda2
    }

    /// Componentwise pairwise sum.
    pub fn sum(parts: &[NormParts]) -> NormParts {
        let field = |f: fn(&NormParts) -> f64| pairwise_sum(&parts.iter().map(f).collect::<Vec<_>>());
        NormParts {
            weighted_v: field(|p| p.weighted_v),
            s: field(|p| p.s),
            r: field(|p| p.r),
            jump: field(|p| p.jump),
            lambda1: field(|p| p.lambda1),
            lambda2: field(|p| p.lambda2),
            plain_v: field(|p| p.plain_v),
        }
    }
}

/// Pairwise (cascade) summation, independent of thread count.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Per-element squared norm contributions of `field`.
pub fn element_norm_parts<C, F>(space: &DgSpace, coeffs: &C, pen: PenaltyParams, field: &F) -> Vec<NormParts>
where
    C: Coefficients + ?Sized,
    F: TripleField + ?Sized,
{
    let eps = coeffs.epsilon();
    let rule = space.rule();
    let pts = &rule.points;
    let wts = &rule.weights;
    let nq = pts.len();
    let n = space.n();
    (0..space.n_elements())
        .into_par_iter()
        .map(|e| {
            let el = space.element_at(e);
            let (hx, hy) = (el.hx(), el.hy());
            let mut vals = vec![[0.0; 3]; nq * nq];
            field.eval_ref(space, &el, pts, pts, &mut vals);
            let mut parts = NormParts::default();
            let (mut wv, mut ss, mut rr, mut pv) = (0.0, 0.0, 0.0, 0.0);
            for qy in 0..nq {
                let y = map_ref(el.y0, el.y1, pts[qy]);
                for qx in 0..nq {
                    let x = map_ref(el.x0, el.x1, pts[qx]);
                    let w = wts[qx] * wts[qy];
                    let [v, s, r] = vals[qx + nq * qy];
                    let c = coeffs.b(x, y) - 0.5 * coeffs.a_x(x, y);
                    wv += w * c * v * v;
                    ss += w * s * s;
                    rr += w * r * r;
                    pv += w * v * v;
                }
            }
            let area = 0.25 * hx * hy;
            parts.weighted_v = wv * area;
            parts.s = ss * area / eps;
            parts.r = rr * area / eps;
            parts.plain_v = pv * area;

            let ys: Vec<f64> = pts.iter().map(|&t| map_ref(el.y0, el.y1, t)).collect();
            let mut own = vec![[0.0; 3]; nq];
            let mut nbr = vec![[0.0; 3]; nq];
            // left edge jump
            field.eval_ref(space, &el, &[-1.0], pts, &mut own);
            if el.ix > 0 {
                let nel = space.element(el.ix - 1, el.jy);
                field.eval_ref(space, &nel, &[1.0], pts, &mut nbr);
            } else {
                nbr.iter_mut().for_each(|v| *v = [0.0; 3]);
            }
            let mut jump = 0.0;
            for q in 0..nq {
                let d = own[q][0] - nbr[q][0];
                jump += wts[q] * coeffs.a(el.x0, ys[q]) * d * d;
            }
            if el.ix + 1 == n {
                field.eval_ref(space, &el, &[1.0], pts, &mut own);
                let mut l1 = 0.0;
                for q in 0..nq {
                    let v = own[q][0];
                    jump += wts[q] * coeffs.a(el.x1, ys[q]) * v * v;
                    l1 += wts[q] * v * v;
                }
                parts.lambda1 = pen.lambda1 * l1 * 0.5 * hy;
            }
            parts.jump = 0.5 * jump * 0.5 * hy;
            if el.jy + 1 == n {
                field.eval_ref(space, &el, pts, &[1.0], &mut own);
                let l2: f64 = (0..nq).map(|q| wts[q] * own[q][0] * own[q][0]).sum();
                parts.lambda2 = pen.lambda2 * l2 * 0.5 * hx;
            }
            parts
        })
        .collect()
}

/// Sums per-element parts by region, indexed by [`Region::index`].
pub fn region_parts(space: &DgSpace, parts: &[NormParts]) -> [NormParts; 4] {
    let mut out = [NormParts::default(); 4];
    for r in Region::ALL {
        let sel: Vec<NormParts> = parts
            .iter()
            .enumerate()
            .filter(|(e, _)| space.region(*e) == r)
            .map(|(_, p)| *p)
            .collect();
        out[r.index()] = NormParts::sum(&sel);
    }
    out
}

/// `|||z|||`.
pub fn energy_norm<C, F>(space: &DgSpace, coeffs: &C, pen: PenaltyParams, field: &F) -> f64
where
    C: Coefficients + ?Sized,
    F: TripleField + ?Sized,
{
    NormParts::sum(&element_norm_parts(space, coeffs, pen, field)).energy_sq().sqrt()
}

/// `(eps^-1 ||s||^2 + eps^-1 ||r||^2 + ||(b - a_x/2)^{1/2} v||^2)^{1/2}`.
pub fn weighted_l2_norm<C, F>(space: &DgSpace, coeffs: &C, field: &F) -> f64
where
    C: Coefficients + ?Sized,
    F: TripleField + ?Sized,
{
    let pen = PenaltyParams::default_for(coeffs.epsilon());
    NormParts::sum(&element_norm_parts(space, coeffs, pen, field))
        .weighted_l2_sq()
        .sqrt()
}
