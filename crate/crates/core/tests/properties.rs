//! Randomized invariants of the discrete operators and solvers.

use nalgebra::DVector;
use np_core::potentials::{double_layer_eval, np_matrix, single_layer_matrix, weighted_transpose};
use np_core::spectral::{k_of_lambda, lambda_of_k, spectral_bound, symmetrized_spectrum};
use np_core::transmission::{solve_free_space, solve_free_space_direct};
use np_core::{make_curve, BoundaryCurve, Conductivity, CurveShape, HarmonicSource, Vec2, C64};
use proptest::prelude::*;

fn star_shape() -> impl Strategy<Value = CurveShape> {
    (
        prop::collection::vec(-0.08..0.08f64, 3),
        prop::collection::vec(-0.08..0.08f64, 3),
    )
        .prop_map(|(c, s)| CurveShape::star([0.0, 0.0], 1.0, c, s))
}

fn curve(shape: CurveShape, n: usize) -> BoundaryCurve {
    make_curve(shape, n).unwrap()
}

fn complex_k() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, 0.05..3.0f64, any::<bool>())
        .prop_map(|(re, im, flip)| C64::new(re, if flip { -im } else { im }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectrum_stays_inside_the_open_half_interval(shape in star_shape()) {
        let c = curve(shape, 64);
        let dec = symmetrized_spectrum(&c, None).unwrap();
        prop_assert!(spectral_bound(&dec) < 0.5);
        prop_assert!(dec.eigenvalues().iter().all(|t| t.abs() < 0.5));
    }

    #[test]
    fn resolvent_norm_obeys_the_distance_bound(
        shape in star_shape(),
        lre in -1.0..1.0f64,
        lim in -0.3..0.3f64,
        seed in prop::collection::vec(-1.0..1.0f64, 8),
    ) {
        let c = curve(shape, 64);
        let dec = symmetrized_spectrum(&c, None).unwrap();
        let lambda = C64::new(lre, lim);
        let d = dec.distance_to_spectrum(lambda);
        prop_assume!(d > 1e-6);
        let m = dec.eigenvalues().len();
        let rhs = DVector::from_fn(m, |i, _| C64::new(seed[i % 8], seed[(i * 3 + 1) % 8]) / (1.0 + i as f64));
        let out = dec.resolvent_coords(lambda, &rhs);
        prop_assert!(dec.h_norm_coords(&out) <= dec.h_norm_coords(&rhs) / d * (1.0 + 1e-8));
    }

    #[test]
    fn spectral_and_direct_solves_agree(shape in star_shape(), k in complex_k()) {
        let c = curve(shape, 64);
        let dec = symmetrized_spectrum(&c, None).unwrap();
        let k = Conductivity::Finite(k);
        prop_assume!(!k.is_trivial());
        let h = HarmonicSource::re_power(2);
        let a = solve_free_space(&dec, &c, &k, &h, 1e-12).unwrap();
        let b = solve_free_space_direct(&dec, &c, &k, &h).unwrap();
        let scale = b.density.norm().max(1e-300);
        prop_assert!((a.density - b.density).norm() / scale < 1e-9);
    }

    #[test]
    fn double_layer_of_one_is_an_indicator(shape in star_shape(), r in 0.0..0.6f64, a in 0.0..6.3f64) {
        let c = curve(shape, 96);
        let ones = DVector::from_element(c.len(), C64::new(1.0, 0.0));
        let inside = Vec2::new(r * a.cos(), r * a.sin());
        let outside = Vec2::new((1.6 + r) * a.cos(), (1.6 + r) * a.sin());
        let v = double_layer_eval(&c, &ones, &[inside, outside]).unwrap();
        prop_assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-8, "{}", v[0]);
        prop_assert!(v[1].norm() < 1e-8, "{}", v[1]);
    }

    #[test]
    fn symmetrization_holds_on_random_curves(shape in star_shape()) {
        let c = curve(shape, 96);
        let s = single_layer_matrix(&c).entries;
        let kstar = np_matrix(&c);
        let k = weighted_transpose(&c, &kstar).entries;
        let residual = (&s * &kstar.entries - &k * &s).norm() / s.norm();
        prop_assert!(residual < 1e-8, "{residual}");
    }

    #[test]
    fn lambda_map_round_trips(k in complex_k()) {
        prop_assume!((k - C64::new(1.0, 0.0)).norm() > 1e-3);
        let l = lambda_of_k(k).unwrap();
        let back = k_of_lambda(l).value().unwrap();
        prop_assert!((back - k).norm() <= 1e-10 * (1.0 + k.norm()));
    }
}
