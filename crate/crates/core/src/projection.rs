//! Local `L^2` and Gauss-Radau projections onto `P^k` / `Q^k`.
//!
//! On an interval `I = [a, b]`:
//!
//! * `pi`  : `\int_I (pi f - f) g = 0` for all `g` in `P^k`;
//! * `pi-` : the same for `g` in `P^{k-1}`, plus `(pi- f)(b) = f(b)`;
//! * `pi+` : the same for `g` in `P^{k-1}`, plus `(pi+ f)(a) = f(a)`.
//!
//! In 2D, `Pi- = pi-_x (x) pi-_y` is used for `u`, `Pi+_x = pi+_x (x) pi_y` for
//! `p` and `Pi+_y = pi_x (x) pi+_y` for `q`. Every projection is linear in the
//! samples of `f` at the quadrature nodes and the relevant endpoint, so each
//! one is applied as a small matrix.

use rayon::prelude::*;

use crate::assembly::SolutionTriple;
use crate::basis::{tensor_eval, Basis1d, DgSpace, Element};
use crate::error::{Error, Result};
use crate::mesh::Region;
use crate::norms::{map_ref, pairwise_sum, Difference, ExactField, TripleField};
use crate::problem::ExactSolution;
use crate::quadrature::{gauss_legendre, GaussRule};

/// 1D projection kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection1d {
    L2,
    Minus,
    Plus,
}

/// 2D projection kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection2d {
    PiMinus,
    PiXPlus,
    PiYPlus,
}

impl Projection2d {
    fn split(self) -> (Projection1d, Projection1d) {
        match self {
            Projection2d::PiMinus => (Projection1d::Minus, Projection1d::Minus),
            Projection2d::PiXPlus => (Projection1d::Plus, Projection1d::L2),
            Projection2d::PiYPlus => (Projection1d::L2, Projection1d::Plus),
        }
    }
}

/// Coefficient map of a 1D projection on an interval of length `h`:
/// `c_m = sum_q mat[m * (nq + 1) + q] f_q`, where the samples are `f` at the
/// mapped nodes followed by `f` at the relevant endpoint.
fn operator_1d(kind: Projection1d, k: usize, h: f64, rule: &GaussRule) -> Vec<f64> {
    let k1 = k + 1;
    let nq = rule.len();
    let ns = nq + 1;
    let basis = Basis1d::at_reference(k, h, &rule.points);
    let mut mat = vec![0.0; k1 * ns];
    let n_moments = if kind == Projection1d::L2 { k1 } else { k };
    for m in 0..n_moments {
        for q in 0..nq {
            mat[m * ns + q] = rule.weights[q] * 0.5 * h * basis.val[q * k1 + m];
        }
    }
    if kind != Projection1d::L2 {
        // phi_m at the endpoint: +-sqrt((2m+1)/h)
        let t = if kind == Projection1d::Minus { 1.0 } else { -1.0 };
        let end = Basis1d::at_reference(k, h, &[t]).val;
        for q in 0..ns {
            let mut s = if q == nq { 1.0 } else { 0.0 };
            for m in 0..k {
                s -= end[m] * mat[m * ns + q];
            }
            mat[k * ns + q] = s / end[k];
        }
    }
    mat
}

/// A polynomial on `[a, b]` in the scaled Legendre basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPoly {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl LocalPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let bx = Basis1d::at(self.degree(), self.a, self.b, &[x]);
        self.coeffs.iter().zip(&bx.val).map(|(c, v)| c * v).sum()
    }
}

/// Projects `f` onto `P^k([a, b])`.
pub fn project_1d(
    kind: Projection1d,
    k: usize,
    a: f64,
    b: f64,
    f: impl Fn(f64) -> f64,
    rule: &GaussRule,
) -> Result<LocalPoly> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(format!("bad interval [{a}, {b}]")));
    }
    if rule.is_empty() {
        return Err(Error::invalid("empty quadrature rule"));
    }
    let h = b - a;
    let mat = operator_1d(kind, k, h, rule);
    let mut samples: Vec<f64> = rule.points.iter().map(|&t| f(map_ref(a, b, t))).collect();
    samples.push(match kind {
        Projection1d::L2 => 0.0,
        Projection1d::Minus => f(b),
        Projection1d::Plus => f(a),
    });
    let ns = samples.len();
    let coeffs = (0..=k)
        .map(|m| (0..ns).map(|q| mat[m * ns + q] * samples[q]).sum())
        .collect();
    Ok(LocalPoly { a, b, coeffs })
}

/// Reference sample positions: the rule's nodes followed by the endpoint.
fn sample_points(kind: Projection1d, rule: &GaussRule) -> Vec<f64> {
    let mut t = rule.points.clone();
    t.push(if kind == Projection1d::Plus { -1.0 } else { 1.0 });
    t
}

/// Element-local projection of `f` on `el`, `(k+1)^2` coefficients.
fn project_element(
    kind: Projection2d,
    k: usize,
    el: &Element,
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    rule: &GaussRule,
) -> Vec<f64> {
    let (kx, ky) = kind.split();
    let k1 = k + 1;
    let ax = operator_1d(kx, k, el.hx(), rule);
    let ay = operator_1d(ky, k, el.hy(), rule);
    let tx = sample_points(kx, rule);
    let ty = sample_points(ky, rule);
    let ns = tx.len();
    let nq = rule.len();
    let mut fs = vec![0.0; ns * ns];
    for (py, &t) in ty.iter().enumerate() {
        if py == nq && ky == Projection1d::L2 {
            continue;
        }
        let y = map_ref(el.y0, el.y1, t);
        for (px, &s) in tx.iter().enumerate() {
            if px == nq && kx == Projection1d::L2 {
                continue;
            }
            fs[px + ns * py] = f(map_ref(el.x0, el.x1, s), y);
        }
    }
    // C = Ax F Ay^T
    let mut tmp = vec![0.0; k1 * ns];
    for m in 0..k1 {
        for py in 0..ns {
            tmp[m * ns + py] = (0..ns).map(|px| ax[m * ns + px] * fs[px + ns * py]).sum();
        }
    }
    let mut c = vec![0.0; k1 * k1];
    for n in 0..k1 {
        for m in 0..k1 {
            c[m + k1 * n] = (0..ns).map(|py| ay[n * ns + py] * tmp[m * ns + py]).sum();
        }
    }
    c
}

/// Coefficients of a projected scalar field over a whole [`DgSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedField {
    pub kind: Projection2d,
    pub coeffs: Vec<f64>,
}

/// Projects `f` element by element using the space's quadrature rule.
pub fn project_2d(space: &DgSpace, kind: Projection2d, f: &(dyn Fn(f64, f64) -> f64 + Sync)) -> ProjectedField {
    let k = space.degree();
    let coeffs = (0..space.n_elements())
        .into_par_iter()
        .flat_map_iter(|e| project_element(kind, k, &space.element_at(e), f, space.rule()))
        .collect();
    ProjectedField { kind, coeffs }
}

/// `(Pi- u, Pi+_x p, Pi+_y q)`.
pub fn project_solution<E: ExactSolution + ?Sized>(space: &DgSpace, exact: &E) -> SolutionTriple {
    SolutionTriple {
        u: project_2d(space, Projection2d::PiMinus, &|x, y| exact.u(x, y)).coeffs,
        p: project_2d(space, Projection2d::PiXPlus, &|x, y| exact.p(x, y)).coeffs,
        q: project_2d(space, Projection2d::PiYPlus, &|x, y| exact.q(x, y)).coeffs,
    }
}

/// The defining functionals of a 1D projection applied to samples taken at
/// `rule8` nodes followed by `-1` and `+1`. Each entry is the weight vector
/// and the functional's norm scale.
fn functionals(kind: Projection1d, k: usize, h: f64, rule8: &GaussRule) -> Vec<(Vec<f64>, f64)> {
    let k1 = k + 1;
    let nq = rule8.len();
    let basis = Basis1d::at_reference(k, h, &rule8.points);
    let n_moments = if kind == Projection1d::L2 { k1 } else { k };
    let mut out = Vec::new();
    for m in 0..n_moments {
        let mut w = vec![0.0; nq + 2];
        for q in 0..nq {
            w[q] = rule8.weights[q] * 0.5 * h * basis.val[q * k1 + m];
        }
        out.push((w, h.sqrt()));
    }
    if kind != Projection1d::L2 {
        let mut w = vec![0.0; nq + 2];
        w[if kind == Projection1d::Minus { nq + 1 } else { nq }] = 1.0;
        out.push((w, 1.0));
    }
    out
}

/// Largest relative residual of the defining conditions of a projected
/// field, checked with an 8-point rule. Each residual is divided by the
/// functional's norm times `max |f|` on the element.
pub fn moment_residual(space: &DgSpace, field: &ProjectedField, f: &(dyn Fn(f64, f64) -> f64 + Sync)) -> f64 {
    let rule8 = gauss_legendre(8).expect("8-point rule");
    let k = space.degree();
    let nb = space.dofs_per_element();
    let (kx, ky) = field.kind.split();
    let mut t = rule8.points.clone();
    t.extend([-1.0, 1.0]);
    let ns = t.len();
    (0..space.n_elements())
        .into_par_iter()
        .map(|e| {
            let el = space.element_at(e);
            let bx = Basis1d::at_reference(k, el.hx(), &t);
            let by = Basis1d::at_reference(k, el.hy(), &t);
            let mut g = vec![0.0; ns * ns];
            tensor_eval(k + 1, &field.coeffs[e * nb..(e + 1) * nb], &bx.val, &by.val, ns, ns, &mut g);
            let mut fmax = 0.0f64;
            for py in 0..ns {
                let y = map_ref(el.y0, el.y1, t[py]);
                for px in 0..ns {
                    let fv = f(map_ref(el.x0, el.x1, t[px]), y);
                    fmax = fmax.max(fv.abs());
                    g[px + ns * py] -= fv;
                }
            }
            if fmax == 0.0 {
                return 0.0;
            }
            let fx = functionals(kx, k, el.hx(), &rule8);
            let fy = functionals(ky, k, el.hy(), &rule8);
            let mut worst = 0.0f64;
            for (wy, sy) in &fy {
                for (wx, sx) in &fx {
                    let mut s = 0.0;
                    for py in 0..ns {
                        if wy[py] == 0.0 {
                            continue;
                        }
                        for px in 0..ns {
                            s += wx[px] * wy[py] * g[px + ns * py];
                        }
                    }
                    worst = worst.max(s.abs() / (fmax * sx * sy));
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Projection errors `eta = w - Pi w` of the exact solution, in the
/// quantities entering the error analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionErrorReport {
    pub n: usize,
    pub epsilon: f64,
    /// `||eta_u||` over the domain.
    pub eta_u_l2: f64,
    /// `||eta_u||` over the exponential-layer regions.
    pub eta_u_l2_layer: f64,
    /// `max_i (sum_j ||(eta_u)^-_{i,y}||^2_{J_j})^{1/2}`, `i = 1..N`.
    pub eta_u_vertical_trace_max: f64,
    /// `(sum_{i=1}^N sum_j ||(eta_u)^-_{i,y}||^2)^{1/2}`.
    pub eta_u_vertical_trace_sum: f64,
    /// `(sum_i ||(eta_u)^-_{x,N}||^2)^{1/2}` on `y = 1`.
    pub eta_u_top_trace: f64,
    /// `(sum_{i=0}^N sum_j ||[eta_u]||^2)^{1/2}`.
    pub eta_u_jump: f64,
    /// `eps^{-1/2} ||eta_p||`.
    pub eta_p_scaled: f64,
    /// `eps^{-1/2} ||eta_q||`.
    pub eta_q_scaled: f64,
    /// `(sum_j ||(eta_p)^-_{N,y}||^2)^{1/2}` on `x = 1`.
    pub eta_p_right_trace: f64,
    /// `(sum_i ||(eta_q)^-_{x,N}||^2)^{1/2}` on `y = 1`.
    pub eta_q_top_trace: f64,
    pub max_moment_residual: f64,
}

impl ProjectionErrorReport {
    /// Metric names and values in a fixed order.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("eta_u", self.eta_u_l2),
            ("eta_u_layer", self.eta_u_l2_layer),
            ("eta_u_trace_max", self.eta_u_vertical_trace_max),
            ("eta_u_trace_sum", self.eta_u_vertical_trace_sum),
            ("eta_u_top", self.eta_u_top_trace),
            ("eta_u_jump", self.eta_u_jump),
            ("eta_p", self.eta_p_scaled),
            ("eta_q", self.eta_q_scaled),
            ("eta_p_right", self.eta_p_right_trace),
            ("eta_q_top", self.eta_q_top_trace),
        ]
    }
}

#[derive(Default, Clone, Copy)]
struct ElementEta {
    u: f64,
    p: f64,
    q: f64,
    right_trace_u: f64,
    jump_u: f64,
    top_u: f64,
    right_p: f64,
    top_q: f64,
}

pub fn projection_error_report<E: ExactSolution + ?Sized>(space: &DgSpace, exact: &E) -> ProjectionErrorReport {
    let proj = project_solution(space, exact);
    let eta = Difference(ExactField(exact), &proj);
    let rule = space.rule();
    let (pts, wts) = (&rule.points, &rule.weights);
    let nq = pts.len();
    let n = space.n();
    let per_el: Vec<ElementEta> = (0..space.n_elements())
        .into_par_iter()
        .map(|e| {
            let el = space.element_at(e);
            let (hx, hy) = (el.hx(), el.hy());
            let mut out = ElementEta::default();
            let mut vals = vec![[0.0; 3]; nq * nq];
            eta.eval_ref(space, &el, pts, pts, &mut vals);
            for qy in 0..nq {
                for qx in 0..nq {
                    let w = wts[qx] * wts[qy] * 0.25 * hx * hy;
                    let [u, p, q] = vals[qx + nq * qy];
                    out.u += w * u * u;
                    out.p += w * p * p;
                    out.q += w * q * q;
                }
            }
            let edge = |v: &[[f64; 3]], c: usize, h: f64| -> f64 {
                (0..nq).map(|i| wts[i] * v[i][c] * v[i][c]).sum::<f64>() * 0.5 * h
            };
            let mut right = vec![[0.0; 3]; nq];
            let mut left = vec![[0.0; 3]; nq];
            eta.eval_ref(space, &el, &[1.0], pts, &mut right);
            eta.eval_ref(space, &el, &[-1.0], pts, &mut left);
            out.right_trace_u = edge(&right, 0, hy);
            let mut nbr = vec![[0.0; 3]; nq];
            if el.ix > 0 {
                eta.eval_ref(space, &space.element(el.ix - 1, el.jy), &[1.0], pts, &mut nbr);
            }
            let jump: Vec<[f64; 3]> = left.iter().zip(&nbr).map(|(a, b)| [a[0] - b[0], 0.0, 0.0]).collect();
            out.jump_u = edge(&jump, 0, hy);
            if el.ix + 1 == n {
                out.jump_u += out.right_trace_u;
                out.right_p = edge(&right, 1, hy);
            }
            if el.jy + 1 == n {
                let mut top = vec![[0.0; 3]; nq];
                eta.eval_ref(space, &el, pts, &[1.0], &mut top);
                out.top_u = edge(&top, 0, hx);
                out.top_q = edge(&top, 2, hx);
            }
            out
        })
        .collect();

    let sum = |f: &dyn Fn(&ElementEta) -> f64| pairwise_sum(&per_el.iter().map(f).collect::<Vec<_>>());
    let layer: Vec<f64> = per_el
        .iter()
        .enumerate()
        .map(|(e, v)| {
            if matches!(space.region(e), Region::Omega21 | Region::Omega22) {
                v.u
            } else {
                0.0
            }
        })
        .collect();
    let mut column_traces = vec![0.0; n];
    for (e, v) in per_el.iter().enumerate() {
        column_traces[e % n] += v.right_trace_u;
    }
    let eps = exact.epsilon();
    let residual = [
        moment_residual(
            space,
            &ProjectedField {
                kind: Projection2d::PiMinus,
                coeffs: proj.u.clone(),
            },
            &|x, y| exact.u(x, y),
        ),
        moment_residual(
            space,
            &ProjectedField {
                kind: Projection2d::PiXPlus,
                coeffs: proj.p.clone(),
            },
            &|x, y| exact.p(x, y),
        ),
        moment_residual(
            space,
            &ProjectedField {
                kind: Projection2d::PiYPlus,
                coeffs: proj.q.clone(),
            },
            &|x, y| exact.q(x, y),
        ),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    ProjectionErrorReport {
        n,
        epsilon: eps,
        eta_u_l2: sum(&|v| v.u).sqrt(),
        eta_u_l2_layer: pairwise_sum(&layer).sqrt(),
        eta_u_vertical_trace_max: column_traces.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt(),
        eta_u_vertical_trace_sum: pairwise_sum(&column_traces).sqrt(),
        eta_u_top_trace: sum(&|v| v.top_u).sqrt(),
        eta_u_jump: sum(&|v| v.jump_u).sqrt(),
        eta_p_scaled: (sum(&|v| v.p) / eps).sqrt(),
        eta_q_scaled: (sum(&|v| v.q) / eps).sqrt(),
        eta_p_right_trace: sum(&|v| v.right_p).sqrt(),
        eta_q_top_trace: sum(&|v| v.top_q).sqrt(),
        max_moment_residual: residual,
    }
}
