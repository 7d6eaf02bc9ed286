use proptest::prelude::*;

use seaice_core::assembly::{apply_parts, pairing};
use seaice_core::forcing::{discriminant_d, drag_monotone_integrand, drag_polynomial, rescaled_p, rotate_theta};
use seaice_core::linalg::{direct_solve, gmres};
use seaice_core::mesh::{build_rect_mesh, lumped_h_norm, DofVector};
use seaice_core::rheology::{
    delta_p, delta_reg, scalar_profile, sigma, stress_growth_bound, yield_residual, CutoffMode, RheologyParams,
    SymTensor2,
};
use seaice_core::sparse::TripletBuilder;
use seaice_core::verify::{standard_params, standard_problem};
use seaice_core::Vec2;

fn mode() -> impl Strategy<Value = CutoffMode> {
    prop::sample::select(CutoffMode::ALL.to_vec())
}

fn params() -> impl Strategy<Value = RheologyParams> {
    (
        mode(),
        0.5f64..4.0,
        -4.0f64..0.0,
        0.5f64..3.0,
        prop::sample::select(vec![1e-8, 1e-4]),
    )
        .prop_map(|(mode, e_bar, lo_exp, width, eps)| {
            let lo = 10f64.powf(lo_exp);
            let eps = if mode.uses_epsilon() { eps } else { 0.0 };
            RheologyParams::new(e_bar, lo, lo * 10f64.powf(width), eps, mode).unwrap()
        })
}

/// Strain rates whose magnitudes span many decades around the cut-off band.
fn tensor() -> impl Strategy<Value = SymTensor2> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -7.0f64..3.0).prop_map(|(a, b, c, e)| {
        let s = 10f64.powf(e);
        SymTensor2::new(a * s, b * s, c * s)
    })
}

fn nonzero_tensor() -> impl Strategy<Value = SymTensor2> {
    tensor().prop_filter("nonzero", |z| z.norm() > 0.0)
}

fn vec2(max: f64) -> impl Strategy<Value = Vec2> {
    (-max..max, -max..max).prop_map(|(x, y)| Vec2::new(x, y))
}

proptest! {
    #[test]
    fn plastic_magnitude_is_bounded_by_the_frobenius_norm(z in tensor(), e_bar in 0.3f64..5.0) {
        let p = RheologyParams::new(e_bar, 1e-3, 1e-1, 0.0, CutoffMode::CutoffBoth).unwrap();
        let dp = delta_p(z, &p);
        let n = z.norm();
        let lam = p.lambda();
        let lo = lam.min(1.0).sqrt() * n;
        let hi = lam.max(2.0).sqrt() * n;
        prop_assert!(dp >= lo * (1.0 - 1e-14) && dp <= hi * (1.0 + 1e-14), "{lo} <= {dp} <= {hi}");
    }

    #[test]
    fn yield_identity_holds_in_every_mode(z in nonzero_tensor(), p in params(), strength in 0.1f64..1e5) {
        let r = yield_residual(strength, z, &p).unwrap();
        prop_assert!(r.abs() <= 1e-12 * 0.25 * strength * strength * (1.0 + scalar_profile(delta_p(z, &p), &p).powi(2)));
    }

    #[test]
    fn stress_is_monotone(z1 in nonzero_tensor(), z2 in nonzero_tensor(), p in params(), strength in 0.1f64..1e4) {
        let s1 = sigma(strength, z1, &p).unwrap();
        let s2 = sigma(strength, z2, &p).unwrap();
        let v = (s1 - s2).ddot(&(z1 - z2));
        let scale = (strength + s1.norm() + s2.norm()) * (z1.norm() + z2.norm());
        prop_assert!(v >= -1e-12 * scale, "integrand {v}, scale {scale}");
    }

    #[test]
    fn stress_obeys_the_growth_bound(z in nonzero_tensor(), p in params(), strength in 0.1f64..1e4) {
        // the bound needs λ ≤ 2, i.e. e_bar ≥ 1
        prop_assume!(p.lambda() <= 2.0);
        let s = sigma(strength, z, &p).unwrap();
        prop_assert!(s.norm() <= stress_growth_bound(strength, z, &p) * (1.0 + 1e-14));
    }

    #[test]
    fn profile_is_nondecreasing(p in params(), a in 0.0f64..1e3, b in 0.0f64..1e3) {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(scalar_profile(x, &p) <= scalar_profile(y, &p) * (1.0 + 1e-14));
    }

    #[test]
    fn cutoff_keeps_delta_in_band(z in tensor()) {
        let p = RheologyParams::new(2.0, 1e-3, 1e-1, 0.0, CutoffMode::CutoffBoth).unwrap();
        let d = delta_reg(z, &p);
        prop_assert!((1e-3..=1e-1).contains(&d));
    }

    #[test]
    fn rotation_preserves_length(v in vec2(10.0), theta in -3.2f64..3.2) {
        let r = rotate_theta(v, theta);
        prop_assert!((r.norm() - v.norm()).abs() <= 1e-13 * (1.0 + v.norm()));
        prop_assert!((r.dot(v) - theta.cos() * v.norm_sq()).abs() <= 1e-13 * (1.0 + v.norm_sq()));
    }

    #[test]
    fn drag_integrand_is_nonnegative_up_to_quarter_turn(a in vec2(5.0), b in vec2(5.0), theta in 0.0f64..=std::f64::consts::FRAC_PI_4) {
        let (na, nb) = (a.norm(), b.norm());
        let v = drag_monotone_integrand(a, b, theta);
        let scale = na.powi(3) + nb.powi(3) + na * nb * (na + nb);
        prop_assert!(v >= -1e-12 * scale, "{v}");
    }

    #[test]
    fn drag_integrand_matches_its_polynomial_form(a in vec2(5.0), b in vec2(5.0), theta in 0.0f64..1.5) {
        let (na, nb) = (a.norm(), b.norm());
        prop_assume!(na > 1e-6 && nb > 1e-6);
        let cos_phi = a.dot(b) / (na * nb);
        let sin_phi = a.cross(b) / (na * nb);
        let direct = drag_monotone_integrand(a, b, theta);
        let poly = drag_polynomial(na, nb, cos_phi, sin_phi, theta);
        let scale = (na.powi(3) + nb.powi(3) + na * nb * (na + nb)) * (1.0 + theta.tan());
        prop_assert!((direct - poly).abs() <= 1e-12 * scale, "{direct} vs {poly}");
    }

    #[test]
    fn discriminant_is_negative_inside(s in -1.0f64..0.999, t in 0.0f64..=1.0) {
        prop_assert!(discriminant_d(s, t) < 0.0);
    }

    #[test]
    fn rescaled_cubic_is_positive_for_positive_gamma(gamma in 0.0f64..50.0, s in -1.0f64..=1.0, theta in 0.0f64..=std::f64::consts::FRAC_PI_4) {
        prop_assert!(rescaled_p(gamma, s, theta) >= -1e-12 * (gamma.powi(3) + 1.0));
    }

    #[test]
    fn triplets_sum_duplicates(entries in prop::collection::vec((0usize..6, 0usize..6, -5.0f64..5.0), 0..60)) {
        let mut b = TripletBuilder::new(6);
        let mut dense = vec![vec![0.0; 6]; 6];
        for &(i, j, v) in &entries {
            b.add(i, j, v);
            dense[i][j] += v;
        }
        let m = b.finalize();
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                prop_assert!((m.get(i, j) - v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn direct_and_krylov_solvers_agree(
        n in 2usize..25,
        vals in prop::collection::vec(-1.0f64..1.0, 75),
        rhs in prop::collection::vec(-1.0f64..1.0, 25),
    ) {
        // diagonally dominant, nonsymmetric tridiagonal system
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 4.0 + vals[3 * i]);
            if i + 1 < n {
                b.add(i, i + 1, vals[3 * i + 1]);
                b.add(i + 1, i, vals[3 * i + 2]);
            }
        }
        let a = b.finalize();
        let rhs = &rhs[..n];
        let (x, rel) = direct_solve(&a, rhs, 1e-14, 3).unwrap();
        prop_assert!(rel <= 1e-12);
        let (y, _) = gmres(&a, rhs, None, 1e-12, 30, 500).unwrap();
        for (u, v) in x.iter().zip(&y) {
            prop_assert!((u - v).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discrete_operator_is_monotone(
        u in prop::collection::vec(-1.0f64..1.0, 98),
        v in prop::collection::vec(-1.0f64..1.0, 98),
        amp in -4.0f64..1.0,
        m in mode(),
    ) {
        let eps = if m.uses_epsilon() { 1e-8 } else { 0.0 };
        let problem = standard_problem(8, standard_params(m, eps).unwrap()).unwrap();
        let s = 10f64.powf(amp);
        let scaled = |w: &[f64]| DofVector::from_values(&problem.mesh, w.iter().map(|x| s * x).collect()).unwrap();
        let (u, v) = (scaled(&u), scaled(&v));
        let fu = apply_parts(&problem, &u, 0.0).unwrap().total();
        let fv = apply_parts(&problem, &v, 0.0).unwrap().total();
        let diff: Vec<f64> = fu.iter().zip(&fv).map(|(a, b)| a - b).collect();
        let d = u.sub(&v);
        let pair = pairing(&diff, d.values()).unwrap();
        let norm = |w: &[f64]| w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = (norm(&fu) + norm(&fv)) * norm(d.values());
        prop_assert!(pair >= -1e-10 * scale, "{pair} vs scale {scale}");
    }

    #[test]
    fn coriolis_does_no_work(u in prop::collection::vec(-1.0f64..1.0, 98)) {
        let problem = standard_problem(8, standard_params(CutoffMode::CutoffBoth, 0.0).unwrap()).unwrap();
        let u = DofVector::from_values(&problem.mesh, u).unwrap();
        let parts = apply_parts(&problem, &u, 0.0).unwrap();
        let size: f64 = parts.c.iter().zip(u.values()).map(|(c, x)| (c * x).abs()).sum();
        prop_assert!(pairing(&parts.c, u.values()).unwrap().abs() <= 1e-14 * size.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn lumped_norm_is_homogeneous(vals in prop::collection::vec(-1.0f64..1.0, 18), c in -10.0f64..10.0) {
        let mesh = build_rect_mesh(4, 4, 2.0, 1.0).unwrap();
        let u = DofVector::from_values(&mesh, vals).unwrap();
        let a = lumped_h_norm(&mesh, &u.scaled(c));
        let b = c.abs() * lumped_h_norm(&mesh, &u);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
    }
}
