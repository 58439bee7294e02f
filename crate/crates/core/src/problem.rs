//! Problem data: PDE coefficients, exact solutions, and the manufactured
//! layer problem used by the convergence studies.
//!
//! The PDE is `-eps Lap(u) + a u_x + b u = f` on the unit square with
//! `u = 0` on the boundary, written as the first-order system
//! `p = eps u_x`, `q = eps u_y`, `-p_x - q_y + a u_x + b u = f`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Coefficients of the convection-diffusion operator and the source.
pub trait Coefficients: Sync {
    fn epsilon(&self) -> f64;
    fn a(&self, x: f64, y: f64) -> f64;
    /// `da/dx`.
    fn a_x(&self, x: f64, y: f64) -> f64;
    fn b(&self, x: f64, y: f64) -> f64;
    fn f(&self, x: f64, y: f64) -> f64;
}

/// Exact solution triple `(u, p, q) = (u, eps u_x, eps u_y)`.
pub trait ExactSolution: Sync {
    fn epsilon(&self) -> f64;
    fn u(&self, x: f64, y: f64) -> f64;
    fn p(&self, x: f64, y: f64) -> f64;
    fn q(&self, x: f64, y: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    U,
    P,
    Q,
    F,
}

/// `exp(z)` with underflow flushed to exactly zero.
#[inline]
fn exp_clamped(z: f64) -> f64 {
    if z < -745.0 {
        0.0
    } else {
        z.exp()
    }
}

/// The manufactured solution
///
/// ```text
/// u = (sin(pi x / 2) - (e^{-(1-x)/eps} - e^{-1/eps}) / (1 - e^{-1/eps}))
///     * (1 + y^4) (1 - e^{-y/sqrt(eps)}) (1 - e^{-(1-y)/sqrt(eps)}) / (1 - e^{-1/(2 sqrt(eps))})^2
/// ```
///
/// with `a = (1 + x)(1 + y)` and `b = 3/2 + y`. It has an exponential layer
/// at `x = 1` and characteristic layers at `y = 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    epsilon: f64,
    sqrt_eps: f64,
    /// `1 - e^{-1/eps}`
    x_den: f64,
    /// `(1 - e^{-1/(2 sqrt eps)})^2`
    y_den: f64,
}

/// Factor values of the separable solution at one point.
struct Factors {
    /// `sin(pi x/2) - E(x)` and derivatives scaled as documented below.
    x: f64,
    /// `e^{-(1-x)/eps} / (1 - e^{-1/eps})`
    layer: f64,
    y: f64,
    /// `eps * Y'`
    eps_y1: f64,
    /// `-eps * Y''`
    neg_eps_y2: f64,
}

impl ManufacturedSolution {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        let sqrt_eps = epsilon.sqrt();
        let x_den = -(-1.0 / epsilon).exp_m1();
        let yd = -(-0.5 / sqrt_eps).exp_m1();
        Ok(ManufacturedSolution {
            epsilon,
            sqrt_eps,
            x_den,
            y_den: yd * yd,
        })
    }

    fn factors(&self, x: f64, y: f64) -> Factors {
        let eps = self.epsilon;
        let s = self.sqrt_eps;
        let decay = exp_clamped(-(1.0 - x) / eps);
        // (e^{-(1-x)/eps} - e^{-1/eps}) / (1 - e^{-1/eps}) = e^{-(1-x)/eps} (1 - e^{-x/eps}) / (1 - e^{-1/eps})
        let e_x = decay * (-(-x / eps).exp_m1()) / self.x_den;
        let xf = (FRAC_PI_2 * x).sin() - e_x;

        let a = exp_clamped(-y / s);
        let b = exp_clamped(-(1.0 - y) / s);
        let one_a = -(-y / s).exp_m1();
        let one_b = -(-(1.0 - y) / s).exp_m1();
        let g = one_a * one_b;
        // s * g' and eps * g''
        let s_g1 = a * one_b - one_a * b;
        let eps_g2 = -(a + b);
        let h = 1.0 + y.powi(4);
        let h1 = 4.0 * y.powi(3);
        let h2 = 12.0 * y * y;
        let yf = h * g / self.y_den;
        let eps_y1 = (eps * h1 * g + s * h * s_g1) / self.y_den;
        let neg_eps_y2 = -(eps * h2 * g + 2.0 * s * h1 * s_g1 + h * eps_g2) / self.y_den;
        Factors {
            x: xf,
            layer: decay / self.x_den,
            y: yf,
            eps_y1,
            neg_eps_y2,
        }
    }

    pub fn u_x(&self, x: f64, y: f64) -> f64 {
        let fc = self.factors(x, y);
        (FRAC_PI_2 * (FRAC_PI_2 * x).cos() - fc.layer / self.epsilon) * fc.y
    }

    pub fn u_y(&self, x: f64, y: f64) -> f64 {
        let fc = self.factors(x, y);
        fc.x * fc.eps_y1 / self.epsilon
    }

    pub fn u_xx(&self, x: f64, y: f64) -> f64 {
        let fc = self.factors(x, y);
        let eps = self.epsilon;
        (-FRAC_PI_2 * FRAC_PI_2 * (FRAC_PI_2 * x).sin() - fc.layer / (eps * eps)) * fc.y
    }

    pub fn u_yy(&self, x: f64, y: f64) -> f64 {
        let fc = self.factors(x, y);
        -fc.x * fc.neg_eps_y2 / self.epsilon
    }

    /// Evaluates one quantity, rejecting points outside the closed unit square.
    pub fn eval_exact(&self, which: Quantity, x: f64, y: f64) -> Result<f64> {
        if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
            return Err(Error::OutOfRange(format!("point ({x}, {y}) outside [0,1]^2")));
        }
        Ok(match which {
            Quantity::U => self.u(x, y),
            Quantity::P => self.p(x, y),
            Quantity::Q => self.q(x, y),
            Quantity::F => Coefficients::f(self, x, y),
        })
    }
}

impl ExactSolution for ManufacturedSolution {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn u(&self, x: f64, y: f64) -> f64 {
        let fc = self.factors(x, y);
        fc.x * fc.y
    }

    fn p(&self, x: f64, y: f64) -> f64 {
        let fc = self.factors(x, y);
        (self.epsilon * FRAC_PI_2 * (FRAC_PI_2 * x).cos() - fc.layer) * fc.y
    }

    fn q(&self, x: f64, y: f64) -> f64 {
        let fc = self.factors(x, y);
        fc.x * fc.eps_y1
    }
}

impl Coefficients for ManufacturedSolution {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn a(&self, x: f64, y: f64) -> f64 {
        (1.0 + x) * (1.0 + y)
    }

    fn a_x(&self, _x: f64, y: f64) -> f64 {
        1.0 + y
    }

    fn b(&self, _x: f64, y: f64) -> f64 {
        1.5 + y
    }

    fn f(&self, x: f64, y: f64) -> f64 {
        let eps = self.epsilon;
        let fc = self.factors(x, y);
        let a = self.a(x, y);
        let (sin, cos) = (FRAC_PI_2 * x).sin_cos();
        // -eps X'' + a X' with the layer parts combined: (1 - a) e^{-(1-x)/eps} / (eps (1 - e^{-1/eps}))
        let x_part = eps * FRAC_PI_2 * FRAC_PI_2 * sin + a * FRAC_PI_2 * cos + (1.0 - a) * fc.layer / eps;
        x_part * fc.y + fc.x * fc.neg_eps_y2 + self.b(x, y) * fc.x * fc.y
    }
}

/// `u = x(1-x)y(1-y)` with `a = b = 1`. The solution triple lies in `Q^2`,
/// so an LDG discretization with `k >= 2` reproduces it exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialSolution {
    pub epsilon: f64,
}

impl ExactSolution for PolynomialSolution {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn u(&self, x: f64, y: f64) -> f64 {
        x * (1.0 - x) * y * (1.0 - y)
    }

    fn p(&self, x: f64, y: f64) -> f64 {
        self.epsilon * (1.0 - 2.0 * x) * y * (1.0 - y)
    }

    fn q(&self, x: f64, y: f64) -> f64 {
        self.epsilon * x * (1.0 - x) * (1.0 - 2.0 * y)
    }
}

impl Coefficients for PolynomialSolution {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn a(&self, _x: f64, _y: f64) -> f64 {
        1.0
    }

    fn a_x(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }

    fn b(&self, _x: f64, _y: f64) -> f64 {
        1.0
    }

    fn f(&self, x: f64, y: f64) -> f64 {
        let lap = -2.0 * y * (1.0 - y) - 2.0 * x * (1.0 - x);
        let u_x = (1.0 - 2.0 * x) * y * (1.0 - y);
        -self.epsilon * lap + u_x + self.u(x, y)
    }
}

type ScalarFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Coefficients given by closures.
pub struct FnCoefficients {
    pub epsilon: f64,
    pub a: ScalarFn,
    pub a_x: ScalarFn,
    pub b: ScalarFn,
    pub f: ScalarFn,
}

impl FnCoefficients {
    /// Constant `a` and `b` with source `f`.
    pub fn constant(epsilon: f64, a: f64, b: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        FnCoefficients {
            epsilon,
            a: Box::new(move |_, _| a),
            a_x: Box::new(|_, _| 0.0),
            b: Box::new(move |_, _| b),
            f: Box::new(f),
        }
    }
}

impl std::fmt::Debug for FnCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnCoefficients").field("epsilon", &self.epsilon).finish_non_exhaustive()
    }
}

impl Coefficients for FnCoefficients {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn a(&self, x: f64, y: f64) -> f64 {
        (self.a)(x, y)
    }

    fn a_x(&self, x: f64, y: f64) -> f64 {
        (self.a_x)(x, y)
    }

    fn b(&self, x: f64, y: f64) -> f64 {
        (self.b)(x, y)
    }

    fn f(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
}

/// Result of sampling `b - a_x / 2` over the closed unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientReport {
    pub min: f64,
    pub at: (f64, f64),
    /// Minimum of `a`, which must stay positive.
    pub min_a: f64,
    pub satisfied: bool,
}

/// Samples `b - a_x/2` and `a` on a 101 x 101 grid.
pub fn validate_coefficient_condition(coeffs: &(impl Coefficients + ?Sized)) -> CoefficientReport {
    const M: usize = 101;
    let mut min = f64::INFINITY;
    let mut at = (0.0, 0.0);
    let mut min_a = f64::INFINITY;
    for j in 0..M {
        let y = j as f64 / (M - 1) as f64;
        for i in 0..M {
            let x = i as f64 / (M - 1) as f64;
            let v = coeffs.b(x, y) - 0.5 * coeffs.a_x(x, y);
            if !(v >= min) {
                min = v;
                at = (x, y);
            }
            min_a = min_a.min(coeffs.a(x, y));
        }
    }
    CoefficientReport {
        min,
        at,
        min_a,
        satisfied: min > 0.0 && min_a > 0.0,
    }
}
