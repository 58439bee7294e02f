#![allow(dead_code)]

use layerdg::{
    assemble, build_mesh, compute_errors, energy_norm, gauss_legendre, project_1d, solve_system, Coefficients,
    DgSpace, DofMap, ExactSolution, FnCoefficients, ManufacturedSolution, MeshFamily, MeshParams, PenaltyParams,
    PolynomialSolution, Projection1d, SolutionTriple, TensorMesh,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FAMILIES: [MeshFamily; 3] = [MeshFamily::Shishkin, MeshFamily::BakhvalovShishkin, MeshFamily::Bakhvalov];

pub fn mesh(family: MeshFamily, epsilon: f64, n: usize, k: usize) -> TensorMesh {
    build_mesh(&MeshParams {
        epsilon,
        n,
        sigma: k as f64 + 2.0,
        alpha: 1.0,
        delta: 1.4,
        family,
    })
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_triple(rng: &mut impl Rng, len: usize) -> SolutionTriple {
    let mut v = || (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    SolutionTriple { u: v(), p: v(), q: v() }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `z^T A z` against the energy norm of `z` for a random mesh, degree,
/// penalty and `z`.
pub fn quadratic_form_identity(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let family = FAMILIES[r.gen_range(0..3)];
    let k = r.gen_range(0..=2);
    let n = 4 * r.gen_range(1..=3);
    let eps = 10f64.powf(-r.gen_range(0.1..8.0));
    let lambda1 = r.gen_range(0.0..2.0);
    let lambda2 = eps * r.gen_range(1.0..10.0);
    let m = mesh(family, eps, n, k);
    let coeffs = ManufacturedSolution::new(eps).unwrap();
    let space = DgSpace::new(&m, k).unwrap();
    let pen = PenaltyParams::new(lambda1, lambda2, eps).unwrap();
    let sys = assemble(&coeffs, &space, pen).unwrap();
    let z = random_triple(&mut r, space.n_dofs());
    let x = DofMap::new(&space).pack(&z).unwrap();
    let lhs = sys.quadratic_form(&x);
    let rhs = energy_norm(&space, &coeffs, pen, &z).powi(2);
    let rel = (lhs - rhs).abs() / rhs;
    check(rel <= 1e-10, || {
        format!("seed {seed}: {family:?} k={k} N={n} eps={eps:e}: zAz={lhs:e}, |||z|||^2={rhs:e}, rel {rel:e}")
    })
}

/// Endpoint collocation for a random smooth function and exact reproduction
/// of a random polynomial of degree `<= k`, on a random interval.
pub fn radau_collocation_and_reproduction(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let rule = gauss_legendre(5).unwrap();
    let k = r.gen_range(0..=4);
    // offsets comparable to the width keep physical evaluation well conditioned
    let h = 10f64.powf(-r.gen_range(0.0..6.0));
    let a = h * r.gen_range(-2.0..2.0);
    let b = a + h;
    let (w, ph, c, d) = (
        r.gen_range(0.5..5.0),
        r.gen_range(0.0..6.3),
        r.gen_range(0.5..3.0),
        r.gen_range(-1.0..1.0),
    );
    let f = |x: f64| c * (w * x + ph).sin() + d;
    let minus = project_1d(Projection1d::Minus, k, a, b, f, &rule).unwrap();
    let plus = project_1d(Projection1d::Plus, k, a, b, f, &rule).unwrap();
    let em = (minus.eval(b) - f(b)).abs();
    let ep = (plus.eval(a) - f(a)).abs();
    check(em <= 1e-12 * (1.0 + f(b).abs()), || {
        format!("seed {seed}: pi- misses f(b) by {em:e}")
    })?;
    check(ep <= 1e-12 * (1.0 + f(a).abs()), || {
        format!("seed {seed}: pi+ misses f(a) by {ep:e}")
    })?;

    let cs: Vec<f64> = (0..=k).map(|_| r.gen_range(-1.0..1.0)).collect();
    let poly = |x: f64| cs.iter().rev().fold(0.0, |acc, c| acc * (x - a) / h + c);
    for kind in [Projection1d::L2, Projection1d::Minus, Projection1d::Plus] {
        let p = project_1d(kind, k, a, b, poly, &rule).unwrap();
        for i in 0..=20 {
            let x = a + h * i as f64 / 20.0;
            let e = (p.eval(x) - poly(x)).abs();
            check(e <= 1e-12 * (1.0 + poly(x).abs()), || {
                format!("seed {seed}: {kind:?} k={k} does not reproduce a polynomial, error {e:e}")
            })?;
        }
    }
    Ok(())
}

/// The 1D Radau projections of `e^x` on `[0, 1]` onto `P^1` are
/// `(e - 2) + 2x` and `1 + (2e - 4)x`.
pub fn exp_radau_examples() -> Result<(), String> {
    let e = std::f64::consts::E;
    let rule = gauss_legendre(8).unwrap();
    let minus = project_1d(Projection1d::Minus, 1, 0.0, 1.0, f64::exp, &rule).unwrap();
    let plus = project_1d(Projection1d::Plus, 1, 0.0, 1.0, f64::exp, &rule).unwrap();
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        let dm = (minus.eval(x) - ((e - 2.0) + 2.0 * x)).abs();
        let dp = (plus.eval(x) - (1.0 + (2.0 * e - 4.0) * x)).abs();
        check(dm <= 1e-12 && dp <= 1e-12, || format!("x={x}: pi- off by {dm:e}, pi+ off by {dp:e}"))?;
    }
    Ok(())
}

/// `u = x(1-x)y(1-y)` lies in the discrete space for `k >= 2` and must be
/// reproduced by assemble, solve and error measurement.
pub fn polynomial_pipeline(family: MeshFamily, n: usize, k: usize, eps: f64) -> Result<(), String> {
    let exact = PolynomialSolution { epsilon: eps };
    let m = mesh(family, eps, n, k);
    let space = DgSpace::new(&m, k).unwrap();
    let pen = PenaltyParams::default_for(eps);
    let sys = assemble(&exact, &space, pen).map_err(|e| e.to_string())?;
    let (sol, _) = solve_system(&sys).map_err(|e| e.to_string())?;
    let r = compute_errors(&space, &exact, pen, &sol, &exact).map_err(|e| e.to_string())?;
    check(r.l2 <= 1e-9 && r.energy <= 1e-9 && r.u_l2 <= 1e-9, || {
        format!(
            "{family:?} N={n} k={k} eps={eps:e}: l2 {:e}, energy {:e}, ||u-U|| {:e}",
            r.l2, r.energy, r.u_l2
        )
    })
}

/// `f` against `-eps (u_xx + u_yy) + a u_x + b u` with all derivatives of `u`
/// replaced by central differences, at random points.
pub fn f_matches_finite_differences(eps: f64, points: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let s = ManufacturedSolution::new(eps).unwrap();
    let hx = 1e-3 * eps.min(1.0);
    let hy = 1e-3 * eps.sqrt().min(1.0);
    for _ in 0..points {
        let x = r.gen_range(hx..1.0 - hx);
        let y = r.gen_range(hy..1.0 - hy);
        let u = |x, y| s.u(x, y);
        let ux = (u(x + hx, y) - u(x - hx, y)) / (2.0 * hx);
        let uxx = (u(x + hx, y) - 2.0 * u(x, y) + u(x - hx, y)) / (hx * hx);
        let uyy = (u(x, y + hy) - 2.0 * u(x, y) + u(x, y - hy)) / (hy * hy);
        let fd = -eps * (uxx + uyy) + s.a(x, y) * ux + s.b(x, y) * u(x, y);
        let f = s.f(x, y);
        let err = (fd - f).abs();
        check(err <= 1e-4 * f.abs().max(1.0), || {
            format!("eps={eps:e} at ({x}, {y}): f={f:e}, differences give {fd:e}")
        })?;
    }
    Ok(())
}

/// Zero source gives the zero solution.
pub fn zero_source_zero_solution(family: MeshFamily, n: usize, k: usize, eps: f64) -> Result<(), String> {
    let coeffs = FnCoefficients::constant(eps, 1.0, 1.0, |_, _| 0.0);
    let m = mesh(family, eps, n, k);
    let space = DgSpace::new(&m, k).unwrap();
    let sys = assemble(&coeffs, &space, PenaltyParams::default_for(eps)).map_err(|e| e.to_string())?;
    let (sol, _) = solve_system(&sys).map_err(|e| e.to_string())?;
    let m = sol.max_abs();
    check(m <= 1e-12, || format!("{family:?} N={n} k={k} eps={eps:e}: max |W| = {m:e}"))
}
