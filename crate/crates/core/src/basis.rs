//! Scaled Legendre tensor-product bases on the elements of a [`TensorMesh`].
//!
//! On an interval of length `h` the local 1D basis is
//! `phi_m(x) = sqrt((2m + 1) / h) P_m(t(x))`, orthonormal in `L^2`. The 2D
//! basis function with local index `a = m + (k + 1) n` is
//! `phi_m(x) psi_n(y)`, i.e. the x-index runs fastest.

use crate::error::{Error, Result};
use crate::mesh::{Region, TensorMesh};
use crate::quadrature::{gauss_legendre, GaussRule, DEFAULT_POINTS};

/// `P_0(t), ..., P_k(t)` by the three-term recurrence.
pub fn legendre_eval(k: usize, t: f64) -> Vec<f64> {
    debug_assert!((-1.0..=1.0).contains(&t), "t = {t} outside [-1, 1]");
    let mut out = vec![0.0; k + 1];
    legendre_into(t, &mut out, None);
    out
}

/// Values and first derivatives of `P_0..P_k` at `t`.
pub fn legendre_eval_with_derivative(k: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; k + 1];
    let mut d = vec![0.0; k + 1];
    legendre_into(t, &mut v, Some(&mut d));
    (v, d)
}

fn legendre_into(t: f64, v: &mut [f64], d: Option<&mut [f64]>) {
    let k = v.len() - 1;
    v[0] = 1.0;
    if k >= 1 {
        v[1] = t;
    }
    for m in 1..k {
        let mf = m as f64;
        v[m + 1] = ((2.0 * mf + 1.0) * t * v[m] - mf * v[m - 1]) / (mf + 1.0);
    }
    if let Some(d) = d {
        d[0] = 0.0;
        if k >= 1 {
            d[1] = 1.0;
        }
        // P'_{m+1} = P'_{m-1} + (2m + 1) P_m
        for m in 1..k {
            d[m + 1] = d[m - 1] + (2.0 * m as f64 + 1.0) * v[m];
        }
    }
}

/// Which quantity [`DgSpace::eval_basis`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisQuantity {
    Value,
    Dx,
    Dy,
}

/// Geometry of one mesh element, zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub ix: usize,
    pub jy: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Element {
    pub fn hx(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn hy(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let tx = 1e-12 * self.hx().max(f64::MIN_POSITIVE);
        let ty = 1e-12 * self.hy().max(f64::MIN_POSITIVE);
        x >= self.x0 - tx && x <= self.x1 + tx && y >= self.y0 - ty && y <= self.y1 + ty
    }
}

/// Discontinuous `Q^k` space on a tensor mesh together with the quadrature
/// rule used for all integrals over it.
#[derive(Debug, Clone)]
pub struct DgSpace<'m> {
    mesh: &'m TensorMesh,
    degree: usize,
    rule: GaussRule,
    regions: Vec<Region>,
}

impl<'m> DgSpace<'m> {
    pub fn new(mesh: &'m TensorMesh, degree: usize) -> Result<Self> {
        Self::with_quadrature(mesh, degree, DEFAULT_POINTS)
    }

    pub fn with_quadrature(mesh: &'m TensorMesh, degree: usize, points: usize) -> Result<Self> {
        if degree > 8 {
            return Err(Error::invalid(format!("degree must be at most 8, got {degree}")));
        }
        let rule = gauss_legendre(points)?;
        let n = mesh.n();
        let mut regions = Vec::with_capacity(n * n);
        for jy in 0..n {
            for ix in 0..n {
                regions.push(mesh.classify_element(ix, jy)?);
            }
        }
        Ok(DgSpace {
            mesh,
            degree,
            rule,
            regions,
        })
    }

    pub fn mesh(&self) -> &'m TensorMesh {
        self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    /// Elements per direction.
    pub fn n(&self) -> usize {
        self.mesh.n()
    }

    pub fn n_elements(&self) -> usize {
        self.n() * self.n()
    }

    pub fn dofs_per_element(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    /// Dimension of one scalar field.
    pub fn n_dofs(&self) -> usize {
        self.n_elements() * self.dofs_per_element()
    }

    /// Linear element index, x fastest.
    pub fn element_index(&self, ix: usize, jy: usize) -> usize {
        ix + self.n() * jy
    }

    pub fn element(&self, ix: usize, jy: usize) -> Element {
        let m = self.mesh;
        Element {
            ix,
            jy,
            x0: m.x_nodes[ix],
            x1: m.x_nodes[ix + 1],
            y0: m.y_nodes[jy],
            y1: m.y_nodes[jy + 1],
        }
    }

    pub fn element_at(&self, e: usize) -> Element {
        self.element(e % self.n(), e / self.n())
    }

    pub fn region(&self, e: usize) -> Region {
        self.regions[e]
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.n_elements()).map(|e| self.element_at(e))
    }

    /// Values (or physical derivatives) of all local basis functions of
    /// element `(ix, jy)` at `(x, y)`, in local index order.
    pub fn eval_basis(
        &self,
        ix: usize,
        jy: usize,
        x: f64,
        y: f64,
        what: BasisQuantity,
    ) -> Result<Vec<f64>> {
        let n = self.n();
        if ix >= n || jy >= n {
            return Err(Error::OutOfRange(format!("element ({ix}, {jy}) on a {n}x{n} mesh")));
        }
        let el = self.element(ix, jy);
        if !el.contains(x, y) {
            return Err(Error::PointOutsideElement { ix, jy, x, y });
        }
        let bx = Basis1d::at(self.degree, el.x0, el.x1, &[x]);
        let by = Basis1d::at(self.degree, el.y0, el.y1, &[y]);
        let k1 = self.degree + 1;
        let mut out = vec![0.0; k1 * k1];
        for nn in 0..k1 {
            for m in 0..k1 {
                out[m + k1 * nn] = match what {
                    BasisQuantity::Value => bx.val[m] * by.val[nn],
                    BasisQuantity::Dx => bx.der[m] * by.val[nn],
                    BasisQuantity::Dy => bx.val[m] * by.der[nn],
                };
            }
        }
        Ok(out)
    }

    /// Evaluates a coefficient block of one element on the tensor grid
    /// `xs x ys` (x fastest).
    pub fn eval_coefficients(&self, el: &Element, coeffs: &[f64], xs: &[f64], ys: &[f64], out: &mut [f64]) {
        let bx = Basis1d::at(self.degree, el.x0, el.x1, xs);
        let by = Basis1d::at(self.degree, el.y0, el.y1, ys);
        tensor_eval(self.degree + 1, coeffs, &bx.val, &by.val, xs.len(), ys.len(), out);
    }
}

/// Scaled 1D basis values and derivatives at a set of points of one interval,
/// stored point-major: `val[p * (k + 1) + m]`.
#[derive(Debug, Clone)]
pub struct Basis1d {
    pub val: Vec<f64>,
    pub der: Vec<f64>,
}

impl Basis1d {
    /// Values at physical points of `[a, b]`.
    pub fn at(k: usize, a: f64, b: f64, pts: &[f64]) -> Self {
        let h = b - a;
        // exact +-1 at the endpoints
        let ts: Vec<f64> = pts.iter().map(|&x| ((x - a) - (b - x)) / h).collect();
        Self::at_reference(k, h, &ts)
    }

    /// Values at reference coordinates `t` in `[-1, 1]` on an interval of
    /// length `h`. Avoids the round trip through physical coordinates, which
    /// loses digits on elements much shorter than their distance from 0.
    pub fn at_reference(k: usize, h: f64, ts: &[f64]) -> Self {
        let k1 = k + 1;
        let scale: Vec<f64> = (0..k1).map(|m| ((2 * m + 1) as f64 / h).sqrt()).collect();
        let mut val = vec![0.0; ts.len() * k1];
        let mut der = vec![0.0; ts.len() * k1];
        for (p, &t) in ts.iter().enumerate() {
            let v = &mut val[p * k1..(p + 1) * k1];
            let d = &mut der[p * k1..(p + 1) * k1];
            legendre_into(t, v, Some(d));
            for m in 0..k1 {
                v[m] *= scale[m];
                d[m] *= scale[m] * 2.0 / h;
            }
        }
        Basis1d { val, der }
    }
}

/// `out[px + nx * py] = sum_{m,n} c[m + k1 n] bx[px, m] by[py, n]`.
pub(crate) fn tensor_eval(
    k1: usize,
    coeffs: &[f64],
    bx: &[f64],
    by: &[f64],
    nx: usize,
    ny: usize,
    out: &mut [f64],
) {
    // contract over m first: tmp[px, n]
    let mut tmp = vec![0.0; nx * k1];
    for px in 0..nx {
        for nn in 0..k1 {
            let mut s = 0.0;
            for m in 0..k1 {
                s += coeffs[m + k1 * nn] * bx[px * k1 + m];
            }
            tmp[px * k1 + nn] = s;
        }
    }
    for py in 0..ny {
        for px in 0..nx {
            let mut s = 0.0;
            for nn in 0..k1 {
                s += tmp[px * k1 + nn] * by[py * k1 + nn];
            }
            out[px + nx * py] = s;
        }
    }
}
