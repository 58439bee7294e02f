mod common;

use common::*;
use layerdg::basis::Basis1d;
use layerdg::{
    gauss_legendre, moment_residual, project_1d, project_2d, BasisQuantity, DgSpace, MeshFamily, Projection1d,
    Projection2d,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn scaled_legendre_basis_is_orthonormal(k in 0usize..=4, log_h in -10.0f64..0.5) {
        let h = 10f64.powf(log_h);
        let rule = gauss_legendre(k + 3).unwrap();
        let b = Basis1d::at_reference(k, h, &rule.points);
        let k1 = k + 1;
        for i in 0..k1 {
            for j in 0..k1 {
                let g: f64 = (0..rule.len())
                    .map(|q| 0.5 * h * rule.weights[q] * b.val[q * k1 + i] * b.val[q * k1 + j])
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - expect).abs() <= 1e-12, "G[{}][{}] = {}", i, j, g);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn radau_endpoint_and_reproduction(seed in any::<u64>()) {
        radau_collocation_and_reproduction(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn one_d_moments_hold_with_finer_rule(
        k in 1usize..=4,
        a in -1.0f64..1.0,
        // wider elements leave visible 5-point quadrature error in the moments
        log_h in -6.0f64..-1.5,
        w in 0.5f64..5.0,
        kind in prop_oneof![Just(Projection1d::L2), Just(Projection1d::Minus), Just(Projection1d::Plus)],
    ) {
        let h = 10f64.powf(log_h);
        let b = a + h;
        let f = |x: f64| (w * x).sin() + 0.3 * (2.0 * x).exp();
        let p = project_1d(kind, k, a, b, f, &gauss_legendre(5).unwrap()).unwrap();
        let rule8 = gauss_legendre(8).unwrap();
        let pts = rule8.mapped_points(a, b);
        let basis = Basis1d::at(k, a, b, &pts);
        let fmax = pts.iter().fold(0.0f64, |m, &x| m.max(f(x).abs()));
        let moments = if kind == Projection1d::L2 { k + 1 } else { k };
        for m in 0..moments {
            let r: f64 = (0..pts.len())
                .map(|q| 0.5 * h * rule8.weights[q] * (f(pts[q]) - p.eval(pts[q])) * basis.val[q * (k + 1) + m])
                .sum();
            // |phi_m| integrates to at most sqrt(h)
            prop_assert!(r.abs() <= 1e-11 * h.sqrt() * fmax, "moment {} residual {:e}", m, r);
        }
    }

    #[test]
    fn projections_are_stable_in_max_norm(
        k in 0usize..=4,
        a in -1.0f64..1.0,
        log_h in -6.0f64..0.0,
        w in 0.5f64..20.0,
        ph in 0.0f64..6.3,
    ) {
        let h = 10f64.powf(log_h);
        let b = a + h;
        let f = |x: f64| (w * (x - a) / h + ph).sin();
        let rule = gauss_legendre(5).unwrap();
        for kind in [Projection1d::L2, Projection1d::Minus, Projection1d::Plus] {
            let p = project_1d(kind, k, a, b, f, &rule).unwrap();
            let pmax = (0..=50).map(|i| p.eval(a + h * i as f64 / 50.0).abs()).fold(0.0, f64::max);
            let fmax = (0..=200).map(|i| f(a + h * i as f64 / 200.0).abs()).fold(0.0, f64::max);
            prop_assert!(pmax <= 10.0 * fmax, "{:?}: {} vs {}", kind, pmax, fmax);
        }
    }
}

#[test]
fn exp_projections() {
    exp_radau_examples().unwrap();
}

#[test]
fn two_d_projection_is_sequential_one_d() {
    let rule = gauss_legendre(5).unwrap();
    let f = |x: f64, y: f64| (3.0 * x + y).sin() * (1.0 + x * y) + (2.0 * x - y).exp();
    for family in FAMILIES {
        let m = mesh(family, 1e-3, 8, 2);
        for k in [1, 2] {
            let space = DgSpace::new(&m, k).unwrap();
            let k1 = k + 1;
            for (kind, kx, ky) in [
                (Projection2d::PiMinus, Projection1d::Minus, Projection1d::Minus),
                (Projection2d::PiXPlus, Projection1d::Plus, Projection1d::L2),
                (Projection2d::PiYPlus, Projection1d::L2, Projection1d::Plus),
            ] {
                let proj = project_2d(&space, kind, &f);
                for (e, el) in space.elements().enumerate() {
                    let c = &proj.coeffs[e * k1 * k1..(e + 1) * k1 * k1];
                    let x_coeffs = |y: f64| project_1d(kx, k, el.x0, el.x1, |x| f(x, y), &rule).unwrap().coeffs;
                    let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
                    for mx in 0..k1 {
                        let seq = project_1d(ky, k, el.y0, el.y1, |y| x_coeffs(y)[mx], &rule).unwrap();
                        for ny in 0..k1 {
                            let d = (seq.coeffs[ny] - c[mx + k1 * ny]).abs();
                            assert!(d <= 1e-12 * scale, "{family:?} k={k} {kind:?} element {e}: {d:e}");
                        }
                    }
                }
                let mr = moment_residual(&space, &proj, &f);
                assert!(mr < 1e-8, "{family:?} k={k} {kind:?}: {mr:e}");
            }
        }
    }
}

#[test]
fn basis_derivatives_match_differences() {
    let m = mesh(MeshFamily::BakhvalovShishkin, 1e-4, 8, 3);
    let space = DgSpace::new(&m, 3).unwrap();
    let mut r = rng(11);
    use rand::Rng;
    for _ in 0..200 {
        let (ix, jy) = (r.gen_range(0..8), r.gen_range(0..8));
        let el = space.element(ix, jy);
        let x = el.x0 + el.hx() * r.gen_range(0.1..0.9);
        let y = el.y0 + el.hy() * r.gen_range(0.1..0.9);
        let (dx, dy) = (1e-6 * el.hx(), 1e-6 * el.hy());
        let v = |x, y| space.eval_basis(ix, jy, x, y, BasisQuantity::Value).unwrap();
        let gx = space.eval_basis(ix, jy, x, y, BasisQuantity::Dx).unwrap();
        let gy = space.eval_basis(ix, jy, x, y, BasisQuantity::Dy).unwrap();
        let (xp, xm, yp, ym) = (v(x + dx, y), v(x - dx, y), v(x, y + dy), v(x, y - dy));
        for i in 0..gx.len() {
            let fx = (xp[i] - xm[i]) / (2.0 * dx);
            let fy = (yp[i] - ym[i]) / (2.0 * dy);
            let sx = gx[i].abs().max(v(x, y)[i].abs() / el.hx());
            let sy = gy[i].abs().max(v(x, y)[i].abs() / el.hy());
            assert!((fx - gx[i]).abs() <= 1e-6 * sx, "dx {i}: {fx} vs {}", gx[i]);
            assert!((fy - gy[i]).abs() <= 1e-6 * sy, "dy {i}: {fy} vs {}", gy[i]);
        }
    }
}
