//! Free-space transmission problem for a single inclusion.
//!
//! With `u = h + S[φ]`, the transmission conditions reduce to
//! `(λ(k) I − K*) φ = ∂_ν h` on the mean-zero subspace.

use nalgebra::{DMatrix, DVector};

use crate::error::{NpError, Result};
use crate::geometry::{BoundaryCurve, Vec2};
use crate::linalg::to_complex;
use crate::potentials::{single_layer_eval, single_layer_gradient_eval, Density};
use crate::spectral::{resolvent_apply, Conductivity, SpectralDecomposition};
use crate::C64;

/// Harmonic polynomial `h(z) = Σ_m a_m z^m + Σ_m b_m z̄^m`, `m ≥ 1`, with
/// `holomorphic[m−1] = a_m` and `antiholomorphic[m−1] = b_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSource {
    holomorphic: Vec<C64>,
    antiholomorphic: Vec<C64>,
}

impl HarmonicSource {
    pub fn new(holomorphic: Vec<C64>, antiholomorphic: Vec<C64>) -> Self {
        HarmonicSource {
            holomorphic,
            antiholomorphic,
        }
    }

    /// h = x.
    pub fn linear_x() -> Self {
        Self::new(vec![C64::new(0.5, 0.0)], vec![C64::new(0.5, 0.0)])
    }

    /// h = y.
    pub fn linear_y() -> Self {
        Self::new(vec![C64::new(0.0, -0.5)], vec![C64::new(0.0, 0.5)])
    }

    /// h = Re z^m.
    pub fn re_power(m: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); m];
        a[m - 1] = C64::new(0.5, 0.0);
        Self::new(a.clone(), a)
    }

    /// h = Im z^m.
    pub fn im_power(m: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); m];
        let mut b = a.clone();
        a[m - 1] = C64::new(0.0, -0.5);
        b[m - 1] = C64::new(0.0, 0.5);
        Self::new(a, b)
    }

    pub fn degree(&self) -> usize {
        self.holomorphic.len().max(self.antiholomorphic.len())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self::new(
            self.holomorphic.iter().map(|c| c * factor).collect(),
            self.antiholomorphic.iter().map(|c| c * factor).collect(),
        )
    }

    pub fn value(&self, p: &Vec2) -> C64 {
        self.derivative(p, [0, 0])
    }

    pub fn gradient(&self, p: &Vec2) -> [C64; 2] {
        [self.derivative(p, [1, 0]), self.derivative(p, [0, 1])]
    }

    /// ∂^α h at p. On a holomorphic term `∂_x = d/dz`, `∂_y = i d/dz`; on an
    /// antiholomorphic term `∂_y = −i d/dz̄`.
    pub fn derivative(&self, p: &Vec2, alpha: [usize; 2]) -> C64 {
        let z = C64::new(p.x, p.y);
        let order = alpha[0] + alpha[1];
        let part = |coeffs: &[C64], w: C64| -> C64 {
            let mut sum = C64::new(0.0, 0.0);
            for (idx, c) in coeffs.iter().enumerate() {
                let m = idx + 1;
                if m < order {
                    continue;
                }
                let falling: f64 = ((m - order + 1)..=m).map(|j| j as f64).product();
                sum += c * falling * w.powu((m - order) as u32);
            }
            sum
        };
        let rot = C64::i().powu(alpha[1] as u32);
        rot * part(&self.holomorphic, z) + rot.conj() * part(&self.antiholomorphic, z.conj())
    }

    /// ∂_ν h at the nodes of `curve`.
    pub fn normal_derivative(&self, curve: &BoundaryCurve) -> Density {
        Density::from_iterator(
            curve.len(),
            curve.nodes().iter().zip(curve.normals()).map(|(p, nu)| {
                let g = self.gradient(p);
                g[0] * nu.x + g[1] * nu.y
            }),
        )
    }
}

/// Result of one transmission solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub conductivity: Conductivity,
    pub lambda: Option<C64>,
    pub density: Density,
    pub density_h_norm: f64,
    pub rhs_h_norm: f64,
    pub distance_to_spectrum: f64,
    /// ‖(λ − K*)φ − ∂_ν h‖ / ‖∂_ν h‖ in the weighted L² norm.
    pub residual: f64,
    /// ‖∇(u − h)‖² over the plane.
    pub energy: f64,
}

/// Solve `(λ(k) − K*) φ = ∂_ν h` through the spectral resolution.
pub fn solve_free_space(
    decomposition: &SpectralDecomposition,
    curve: &BoundaryCurve,
    k: &Conductivity,
    source: &HarmonicSource,
    eps: f64,
) -> Result<SolveReport> {
    let rhs = source.normal_derivative(curve);
    let rc = decomposition.coords(&rhs);
    let rhs_h_norm = decomposition.h_norm_coords(&rc);
    if k.is_trivial() {
        log::warn!("k = 1: the inclusion is invisible, returning the zero density");
        return Ok(SolveReport {
            conductivity: *k,
            lambda: None,
            density: Density::zeros(curve.len()),
            density_h_norm: 0.0,
            rhs_h_norm,
            distance_to_spectrum: f64::INFINITY,
            residual: 0.0,
            energy: 0.0,
        });
    }
    let lambda = k.lambda()?;
    let density = resolvent_apply(decomposition, lambda, &rhs, eps)?;
    finish_report(decomposition, k, lambda, density, &rc, rhs_h_norm)
}

/// Solve the same system by a dense LU factorization in mean-zero coordinates.
pub fn solve_free_space_direct(
    decomposition: &SpectralDecomposition,
    curve: &BoundaryCurve,
    k: &Conductivity,
    source: &HarmonicSource,
) -> Result<SolveReport> {
    let rhs = source.normal_derivative(curve);
    let rc = decomposition.coords(&rhs);
    let rhs_h_norm = decomposition.h_norm_coords(&rc);
    let lambda = k.lambda()?;
    let a = system_matrix(decomposition, lambda);
    let sol = a
        .lu()
        .solve(&rc)
        .ok_or_else(|| NpError::SolverFailure("transmission system is singular".into()))?;
    let density = decomposition.lift(&sol);
    finish_report(decomposition, k, lambda, density, &rc, rhs_h_norm)
}

/// `λ I − K*` in mean-zero coordinates.
pub fn system_matrix(decomposition: &SpectralDecomposition, lambda: C64) -> DMatrix<C64> {
    let k = to_complex(decomposition.kstar_coords());
    let n = k.nrows();
    DMatrix::<C64>::identity(n, n) * lambda - k
}

fn finish_report(
    decomposition: &SpectralDecomposition,
    k: &Conductivity,
    lambda: C64,
    density: Density,
    rc: &DVector<C64>,
    rhs_h_norm: f64,
) -> Result<SolveReport> {
    let c = decomposition.coords(&density);
    let r = system_matrix(decomposition, lambda) * &c - rc;
    let scale = rc.norm();
    let residual = if scale > 0.0 { r.norm() / scale } else { r.norm() };
    let density_h_norm = decomposition.h_norm_coords(&c);
    Ok(SolveReport {
        conductivity: *k,
        lambda: Some(lambda),
        density,
        density_h_norm,
        rhs_h_norm,
        distance_to_spectrum: decomposition.distance_to_spectrum(lambda),
        residual,
        energy: density_h_norm * density_h_norm,
    })
}

/// ‖∇(u − h)‖² over the plane; equal to ‖φ‖²_H.
pub fn energy_norm(report: &SolveReport) -> f64 {
    report.energy
}

/// u = h + S[φ] at points off the curve.
pub fn evaluate_field(
    curve: &BoundaryCurve,
    source: &HarmonicSource,
    report: &SolveReport,
    points: &[Vec2],
) -> Result<Vec<C64>> {
    let s = single_layer_eval(curve, &report.density, points)?;
    Ok(points.iter().zip(s).map(|(p, v)| source.value(p) + v).collect())
}

/// ∇u at points off the curve.
pub fn evaluate_gradient(
    curve: &BoundaryCurve,
    source: &HarmonicSource,
    report: &SolveReport,
    points: &[Vec2],
) -> Result<Vec<[C64; 2]>> {
    let g = single_layer_gradient_eval(curve, &report.density, points)?;
    Ok(points
        .iter()
        .zip(g)
        .map(|(p, gs)| {
            let gh = source.gradient(p);
            [gh[0] + gs[0], gh[1] + gs[1]]
        })
        .collect())
}

/// |k − s| / ((1 + |k|)(1 + |s|)), extended continuously to k or s = ∞.
pub fn contrast_gap(k: &Conductivity, s: &Conductivity) -> f64 {
    match (k.value(), s.value()) {
        (Some(a), Some(b)) => (a - b).norm() / ((1.0 + a.norm()) * (1.0 + b.norm())),
        (Some(a), None) | (None, Some(a)) => 1.0 / (1.0 + a.norm()),
        (None, None) => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    /// ‖φ_k − φ_s‖_H = ‖∇(u_k − u_s)‖.
    pub lhs: f64,
    /// contrast_gap(k, s) · ‖∂_ν h‖_H.
    pub rhs_bound: f64,
    /// lhs / rhs_bound (0 when both vanish).
    pub constant_estimate: f64,
}

pub fn lipschitz_check(
    decomposition: &SpectralDecomposition,
    curve: &BoundaryCurve,
    k: &Conductivity,
    s: &Conductivity,
    source: &HarmonicSource,
    eps: f64,
) -> Result<LipschitzReport> {
    let a = solve_free_space(decomposition, curve, k, source, eps)?;
    let b = solve_free_space(decomposition, curve, s, source, eps)?;
    let lhs = decomposition.h_norm(&(&a.density - &b.density));
    let rhs_bound = contrast_gap(k, s) * a.rhs_h_norm;
    let constant_estimate = if rhs_bound > 0.0 { lhs / rhs_bound } else { 0.0 };
    Ok(LipschitzReport {
        lhs,
        rhs_bound,
        constant_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_curve, CurveShape};
    use crate::spectral::symmetrized_spectrum;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_circle(n: usize) -> BoundaryCurve {
        make_curve(CurveShape::circle([0.0, 0.0], 1.0), n).unwrap()
    }

    #[test]
    fn source_values_and_derivatives() {
        let p = Vec2::new(0.3, -0.7);
        let x = HarmonicSource::linear_x();
        let y = HarmonicSource::linear_y();
        assert!((x.value(&p) - C64::new(0.3, 0.0)).norm() < 1e-15);
        assert!((y.value(&p) - C64::new(-0.7, 0.0)).norm() < 1e-15);
        assert!((x.gradient(&p)[0] - 1.0).norm() < 1e-15);
        assert!(y.gradient(&p)[0].norm() < 1e-15);
        assert!((y.gradient(&p)[1] - 1.0).norm() < 1e-15);
        // Re z³ = x³ − 3xy², so ∂_x ∂_y² h = −6.
        let h = HarmonicSource::re_power(3);
        assert!((h.value(&p) - (0.027 - 3.0 * 0.3 * 0.49)).norm() < 1e-14);
        assert!((h.derivative(&p, [1, 2]) + 6.0).norm() < 1e-13);
        assert!((h.derivative(&p, [2, 0]) - 6.0 * 0.3).norm() < 1e-13);
        let g = HarmonicSource::im_power(2); // 2xy
        assert!((g.derivative(&p, [1, 1]) - 2.0).norm() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sources_are_harmonic(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..5),
            px in -1.0f64..1.0, py in -1.0f64..1.0
        ) {
            let a: Vec<C64> = coeffs.iter().map(|(r, i)| C64::new(*r, *i)).collect();
            let b: Vec<C64> = coeffs.iter().rev().map(|(r, i)| C64::new(*i, -*r)).collect();
            let h = HarmonicSource::new(a, b);
            let p = Vec2::new(px, py);
            let lap = h.derivative(&p, [2, 0]) + h.derivative(&p, [0, 2]);
            prop_assert!(lap.norm() < 1e-12);
            let step = 1e-3;
            let f = |q: Vec2| h.value(&q);
            let fd = (f(p + Vec2::new(step, 0.0)) + f(p - Vec2::new(step, 0.0))
                + f(p + Vec2::new(0.0, step)) + f(p - Vec2::new(0.0, step)) - f(p) * 4.0)
                / (step * step);
            prop_assert!(fd.norm() < 1e-4);
        }
    }

    #[test]
    fn disk_in_uniform_field() {
        let c = unit_circle(128);
        let dec = symmetrized_spectrum(&c, None).unwrap();
        let src = HarmonicSource::linear_x();
        let rep = solve_free_space(&dec, &c, &Conductivity::real(3.0), &src, 1e-8).unwrap();
        assert!(rep.residual < 1e-9);
        // φ = 2(k−1)/(k+1) cos θ = cos θ.
        for (v, t) in rep.density.iter().zip(c.params()) {
            assert_abs_diff_eq!(v.re, t.cos(), epsilon = 1e-10);
        }
        let inside = [Vec2::new(0.2, 0.1), Vec2::new(-0.4, 0.3)];
        for (p, u) in inside.iter().zip(evaluate_field(&c, &src, &rep, &inside).unwrap()) {
            assert_abs_diff_eq!(u.re, 0.5 * p.x, epsilon = 1e-10);
        }
        let outside = [Vec2::new(2.0, 0.5), Vec2::new(-1.5, -1.5)];
        for (p, u) in outside.iter().zip(evaluate_field(&c, &src, &rep, &outside).unwrap()) {
            assert_abs_diff_eq!(u.re, p.x - 0.5 * p.x / p.norm_squared(), epsilon = 1e-10);
        }
        // ‖cos θ‖²_H = −⟨cos, S cos⟩ = π/2 on the unit circle.
        assert_abs_diff_eq!(energy_norm(&rep), std::f64::consts::FRAC_PI_2, epsilon = 1e-10);
    }

    #[test]
    fn trivial_and_negative_contrast() {
        let c = unit_circle(64);
        let dec = symmetrized_spectrum(&c, None).unwrap();
        let src = HarmonicSource::linear_x();
        let rep = solve_free_space(&dec, &c, &Conductivity::real(1.0), &src, 1e-8).unwrap();
        assert_eq!(rep.density.norm(), 0.0);
        assert_eq!(energy_norm(&rep), 0.0);
        let rep = solve_free_space(&dec, &c, &Conductivity::real(-3.0), &src, 1e-8).unwrap();
        assert_abs_diff_eq!(rep.lambda.unwrap().re, 0.25, epsilon = 1e-15);
        assert!(rep.residual < 1e-9);
        // k = −1 has λ = 0, which is the circle's only eigenvalue.
        let err = solve_free_space(&dec, &c, &Conductivity::real(-1.0), &src, 1e-8);
        assert!(matches!(err, Err(NpError::LambdaOnSpectrum { .. })));
    }

    #[test]
    fn spectral_and_direct_paths_agree() {
        let c = make_curve(CurveShape::star([0.1, 0.0], 1.0, vec![0.0, 0.0, 0.2], vec![0.0, 0.1]), 128)
            .unwrap();
        let dec = symmetrized_spectrum(&c, None).unwrap();
        for k in [
            Conductivity::complex(-1.0, 0.5),
            Conductivity::complex(5.0, -2.0),
            Conductivity::Infinite,
            Conductivity::real(1e-3),
        ] {
            for src in [HarmonicSource::linear_x(), HarmonicSource::im_power(2)] {
                let a = solve_free_space(&dec, &c, &k, &src, 1e-8).unwrap();
                let b = solve_free_space_direct(&dec, &c, &k, &src).unwrap();
                assert!(a.residual < 1e-9, "{k}: {}", a.residual);
                let diff = dec.h_norm(&(&a.density - &b.density));
                assert!(diff < 1e-8 * b.density_h_norm, "{k}: {diff:e}");
                assert_abs_diff_eq!(a.energy, a.density_h_norm.powi(2), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn energy_scales_quadratically() {
        let c = make_curve(CurveShape::ellipse([0.0, 0.0], 2.0, 1.0), 64).unwrap();
        let dec = symmetrized_spectrum(&c, None).unwrap();
        let k = Conductivity::complex(4.0, 1.0);
        let one = solve_free_space(&dec, &c, &k, &HarmonicSource::linear_y(), 1e-8).unwrap();
        let two = solve_free_space(
            &dec,
            &c,
            &k,
            &HarmonicSource::linear_y().scaled(C64::new(2.0, 0.0)),
            1e-8,
        )
        .unwrap();
        assert_abs_diff_eq!(two.energy, 4.0 * one.energy, epsilon = 1e-12 * one.energy);
    }

    #[test]
    fn lipschitz_examples() {
        let c = unit_circle(64);
        let dec = symmetrized_spectrum(&c, None).unwrap();
        let src = HarmonicSource::linear_x();
        let same = lipschitz_check(&dec, &c, &Conductivity::real(2.0), &Conductivity::real(2.0), &src, 1e-8)
            .unwrap();
        assert_eq!(same.lhs, 0.0);
        let rep = lipschitz_check(&dec, &c, &Conductivity::real(2.0), &Conductivity::real(3.0), &src, 1e-8)
            .unwrap();
        // φ_k = 2(k−1)/(k+1) cos θ and ‖cos θ‖_H = √(π/2).
        let expected = (2.0 / 3.0 - 1.0f64).abs() * std::f64::consts::FRAC_PI_2.sqrt();
        assert_abs_diff_eq!(rep.lhs, expected, epsilon = 1e-10);
        assert!(rep.constant_estimate.is_finite());
    }

    #[test]
    fn contrast_gap_limits() {
        let k = Conductivity::real(3.0);
        assert_abs_diff_eq!(contrast_gap(&k, &Conductivity::Infinite), 0.25);
        let big = Conductivity::real(1e12);
        assert_abs_diff_eq!(contrast_gap(&k, &big), 0.25, epsilon = 1e-10);
    }
}
