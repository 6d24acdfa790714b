//! Exact series solution for two equal disks in bipolar coordinates
//! `x = α sinh ξ/(cosh ξ − cos θ)`, `y = α sin θ/(cosh ξ − cos θ)`.
//!
//! The disks are D₁ = {ξ < −ξ₀} and D₂ = {ξ > ξ₀}.

use crate::error::{NpError, Result};
use crate::geometry::{CurveShape, Vec2};
use crate::spectral::Conductivity;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipolarGeometry {
    pub alpha: f64,
    pub xi0: f64,
}

/// Geometry for disks of radius `r` centred at `(±c, 0)`.
pub fn bipolar_from_disks(c: f64, r: f64) -> Result<BipolarGeometry> {
    if !(r > 0.0) || !(c > r) {
        return Err(NpError::OverlappingDisks { c, r });
    }
    Ok(BipolarGeometry {
        alpha: ((c - r) * (c + r)).sqrt(),
        xi0: (c / r).acosh(),
    })
}

impl BipolarGeometry {
    pub fn new(alpha: f64, xi0: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(xi0 > 0.0) {
            return Err(NpError::InvalidParameter(format!(
                "need alpha > 0 and xi0 > 0 (alpha = {alpha}, xi0 = {xi0})"
            )));
        }
        Ok(BipolarGeometry { alpha, xi0 })
    }

    pub fn radius(&self) -> f64 {
        self.alpha / self.xi0.sinh()
    }

    /// x-coordinate of the centre of D₂; D₁ is its mirror image.
    pub fn half_distance(&self) -> f64 {
        self.alpha / self.xi0.tanh()
    }

    /// Boundary shapes of D₁ and D₂.
    pub fn disk_shapes(&self) -> [CurveShape; 2] {
        let c = self.half_distance();
        [
            CurveShape::circle([-c, 0.0], self.radius()),
            CurveShape::circle([c, 0.0], self.radius()),
        ]
    }

    pub fn to_cartesian(&self, xi: f64, theta: f64) -> Vec2 {
        let d = xi.cosh() - theta.cos();
        Vec2::new(self.alpha * xi.sinh() / d, self.alpha * theta.sin() / d)
    }

    /// `(ξ, θ)` with θ ∈ (−π, π].
    pub fn to_bipolar(&self, p: &Vec2) -> (f64, f64) {
        let a = self.alpha;
        let r2 = p.norm_squared();
        let xi = 0.5 * (((p.x + a).powi(2) + p.y * p.y) / ((p.x - a).powi(2) + p.y * p.y)).ln();
        let theta = (2.0 * a * p.y).atan2(r2 - a * a);
        (xi, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    X,
    Y,
}

/// Coefficients of `h` in `e^{∓|n|ξ} e^{inθ}` on the two half-planes, n = ±1..±N.
#[derive(Debug, Clone, PartialEq)]
pub struct BipolarCoefficients {
    pub n_max: usize,
    /// Constant terms for ξ > 0 and ξ < 0.
    pub f0: f64,
    pub g0: f64,
    /// Indexed by `n + n_max`; the n = 0 slot is unused.
    pub f: Vec<C64>,
    pub g: Vec<C64>,
}

impl BipolarCoefficients {
    pub fn modes(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.n_max as i64;
        (-n..=n).filter(|m| *m != 0)
    }

    fn index(&self, n: i64) -> usize {
        (n + self.n_max as i64) as usize
    }

    pub fn f_n(&self, n: i64) -> C64 {
        self.f[self.index(n)]
    }

    pub fn g_n(&self, n: i64) -> C64 {
        self.g[self.index(n)]
    }

    /// Truncated series for h at (ξ, θ), ξ ≠ 0.
    pub fn evaluate(&self, xi: f64, theta: f64) -> C64 {
        let (c0, coeff): (f64, &[C64]) = if xi > 0.0 { (self.f0, &self.f) } else { (self.g0, &self.g) };
        let mut s = C64::new(c0, 0.0);
        for n in self.modes() {
            let e = (-(n.unsigned_abs() as f64) * xi.abs()).exp();
            s += coeff[self.index(n)] * C64::from_polar(e, n as f64 * theta);
        }
        s
    }
}

/// From `sinh ξ/(cosh ξ − cos θ) = ±(1 + 2Σ e^{−n|ξ|} cos nθ)` and
/// `sin θ/(cosh ξ − cos θ) = 2Σ e^{−n|ξ|} sin nθ`.
pub fn harmonic_bipolar_coeffs(
    kind: SourceKind,
    geometry: &BipolarGeometry,
    n_max: usize,
) -> Result<BipolarCoefficients> {
    if n_max == 0 {
        return Err(NpError::InvalidParameter("n_max must be at least 1".into()));
    }
    let a = geometry.alpha;
    let len = 2 * n_max + 1;
    let mut f = vec![C64::new(0.0, 0.0); len];
    let mut g = vec![C64::new(0.0, 0.0); len];
    let (f0, g0) = match kind {
        SourceKind::X => (a, -a),
        SourceKind::Y => (0.0, 0.0),
    };
    for n in 1..=n_max {
        let (plus, minus) = (n_max + n, n_max - n);
        match kind {
            SourceKind::X => {
                f[plus] = C64::new(a, 0.0);
                f[minus] = C64::new(a, 0.0);
                g[plus] = C64::new(-a, 0.0);
                g[minus] = C64::new(-a, 0.0);
            }
            SourceKind::Y => {
                f[plus] = C64::new(0.0, -a);
                f[minus] = C64::new(0.0, a);
                g[plus] = C64::new(0.0, -a);
                g[minus] = C64::new(0.0, a);
            }
        }
    }
    Ok(BipolarCoefficients { n_max, f0, g0, f, g })
}

/// τ = (k − 1)/(k + 1), with τ(∞) = 1.
pub fn contrast_ratio(k: &Conductivity) -> Result<C64> {
    match k {
        Conductivity::Finite(k) => {
            if *k == C64::new(-1.0, 0.0) {
                return Err(NpError::InvalidParameter("k = -1 has no contrast ratio".into()));
            }
            Ok((k - 1.0) / (k + 1.0))
        }
        Conductivity::Infinite => Ok(C64::new(1.0, 0.0)),
    }
}

/// Series coefficients of `u − h`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoDiskSeries {
    pub geometry: BipolarGeometry,
    pub tau1: C64,
    pub tau2: C64,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub constant: C64,
    pub n_max: usize,
}

/// Mode count at which the slowest series term `e^{−nξ₀}` drops below `tol`.
pub fn adaptive_truncation(geometry: &BipolarGeometry, tol: f64) -> usize {
    let rho = (-geometry.xi0).exp();
    ((tol * (1.0 - rho)).ln() / rho.ln()).ceil().max(1.0) as usize
}

/// Transmission conditions on ξ = ±ξ₀ give, with E = e^{2|n|ξ₀} and τ = τ₁τ₂,
/// `a_n = (τ g_n − τ₂ E f_n)/(E² − τ)` and `b_n = (τ f_n − τ₁ E g_n)/(E² − τ)`.
/// This form stays finite at τ_j = 0.
pub fn two_disk_series(
    geometry: &BipolarGeometry,
    k1: &Conductivity,
    k2: &Conductivity,
    coeffs: &BipolarCoefficients,
) -> Result<TwoDiskSeries> {
    let tau1 = contrast_ratio(k1)?;
    let tau2 = contrast_ratio(k2)?;
    let tau = tau1 * tau2;
    let len = coeffs.f.len();
    let mut a = vec![C64::new(0.0, 0.0); len];
    let mut b = vec![C64::new(0.0, 0.0); len];
    let mut constant = C64::new(0.0, 0.0);
    for n in coeffs.modes() {
        let e = (2.0 * n.unsigned_abs() as f64 * geometry.xi0).exp();
        let den = e * e - tau;
        if den.norm() <= 1e-12 * (e * e) {
            return Err(NpError::InadmissiblePair { n: n.unsigned_abs() as usize });
        }
        let i = coeffs.index(n);
        a[i] = (tau * coeffs.g[i] - tau2 * e * coeffs.f[i]) / den;
        b[i] = (tau * coeffs.f[i] - tau1 * e * coeffs.g[i]) / den;
        constant -= a[i] + b[i];
    }
    Ok(TwoDiskSeries {
        geometry: *geometry,
        tau1,
        tau2,
        a,
        b,
        constant,
        n_max: coeffs.n_max,
    })
}

impl TwoDiskSeries {
    /// u − h at one point in bipolar coordinates.
    pub fn evaluate(&self, xi: f64, theta: f64) -> C64 {
        let xi0 = self.geometry.xi0;
        let n = self.n_max as i64;
        let mut s = self.constant;
        for m in (-n..=n).filter(|m| *m != 0) {
            let i = (m + n) as usize;
            let am = m.unsigned_abs() as f64;
            let (ea, eb) = if xi < -xi0 {
                ((am * xi).exp(), (am * (2.0 * xi0 + xi)).exp())
            } else if xi > xi0 {
                ((am * (2.0 * xi0 - xi)).exp(), (-am * xi).exp())
            } else {
                ((am * xi).exp(), (-am * xi).exp())
            };
            s += (self.a[i] * ea + self.b[i] * eb) * C64::from_polar(1.0, m as f64 * theta);
        }
        s
    }

    /// Largest |a_n|, |b_n| at each |n|.
    pub fn coefficient_envelope(&self) -> Vec<f64> {
        let n = self.n_max;
        (1..=n)
            .map(|m| {
                [n + m, n - m]
                    .iter()
                    .map(|&i| self.a[i].norm().max(self.b[i].norm()))
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// u − h at Cartesian probe points.
pub fn exact_two_disk_solution(
    geometry: &BipolarGeometry,
    k1: &Conductivity,
    k2: &Conductivity,
    coeffs: &BipolarCoefficients,
    probes: &[Vec2],
) -> Result<Vec<C64>> {
    let series = two_disk_series(geometry, k1, k2, coeffs)?;
    Ok(probes
        .iter()
        .map(|p| {
            let (xi, theta) = geometry.to_bipolar(p);
            series.evaluate(xi, theta)
        })
        .collect())
}

/// ±½e^{−2nξ₀} for n = 1..n_max, positive value first.
pub fn two_disk_np_eigenvalues(geometry: &BipolarGeometry, n_max: usize) -> Vec<f64> {
    (1..=n_max)
        .flat_map(|n| {
            let t = 0.5 * (-2.0 * n as f64 * geometry.xi0).exp();
            [t, -t]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn standard() -> BipolarGeometry {
        bipolar_from_disks(2.0, 1.0).unwrap()
    }

    #[test]
    fn geometry_round_trip() {
        let g = standard();
        assert_abs_diff_eq!(g.alpha, 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(g.xi0, (2.0 + 3f64.sqrt()).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(g.xi0, 1.31696, epsilon = 1e-5);
        assert_abs_diff_eq!(g.radius(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.half_distance(), 2.0, epsilon = 1e-12);
        assert!(matches!(bipolar_from_disks(1.0, 1.0), Err(NpError::OverlappingDisks { .. })));
        assert!(bipolar_from_disks(1.0 + 1e-9, 1.0).unwrap().xi0 < 1e-4);
    }

    #[test]
    fn coordinate_maps_invert() {
        let g = standard();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let xi = rng.random_range(-4.0..4.0);
            let theta = rng.random_range(-3.1..3.1);
            let (x2, t2) = g.to_bipolar(&g.to_cartesian(xi, theta));
            assert_abs_diff_eq!(x2, xi, epsilon = 1e-10);
            assert_abs_diff_eq!(t2, theta, epsilon = 1e-10);
        }
        // Level set ξ = ξ₀ is the right disk's boundary.
        for j in 0..16 {
            let p = g.to_cartesian(g.xi0, -PI + 2.0 * PI * j as f64 / 16.0 + 0.1);
            assert_abs_diff_eq!((p - Vec2::new(2.0, 0.0)).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn source_series_reconstructs_h() {
        let g = standard();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [SourceKind::X, SourceKind::Y] {
            let c = harmonic_bipolar_coeffs(kind, &g, 60).unwrap();
            for _ in 0..100 {
                let mut xi: f64 = rng.random_range(0.5..4.0);
                if rng.random_bool(0.5) {
                    xi = -xi;
                }
                let theta = rng.random_range(-PI..PI);
                let p = g.to_cartesian(xi, theta);
                let exact = if kind == SourceKind::X { p.x } else { p.y };
                assert!((c.evaluate(xi, theta) - exact).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn no_contrast_gives_zero() {
        let g = standard();
        let c = harmonic_bipolar_coeffs(SourceKind::X, &g, 30).unwrap();
        let one = Conductivity::real(1.0);
        let probes = [Vec2::new(0.0, 1.0), Vec2::new(2.0, 0.3), Vec2::new(-5.0, 2.0)];
        let v = exact_two_disk_solution(&g, &one, &one, &c, &probes).unwrap();
        assert!(v.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn symmetric_pair_gives_odd_solution() {
        let g = standard();
        let c = harmonic_bipolar_coeffs(SourceKind::X, &g, 40).unwrap();
        let k = Conductivity::real(3.0);
        let probes = [Vec2::new(0.5, 0.7), Vec2::new(2.2, 0.1), Vec2::new(4.0, -3.0)];
        let mirrored: Vec<Vec2> = probes.iter().map(|p| Vec2::new(-p.x, p.y)).collect();
        let a = exact_two_disk_solution(&g, &k, &k, &c, &probes).unwrap();
        let b = exact_two_disk_solution(&g, &k, &k, &c, &mirrored).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u + v).norm() < 1e-12, "{u} {v}");
        }
    }

    #[test]
    fn series_decays_far_from_disks() {
        let g = standard();
        let c = harmonic_bipolar_coeffs(SourceKind::Y, &g, 40).unwrap();
        let k = Conductivity::complex(2.0, 1.0);
        let v = exact_two_disk_solution(&g, &k, &k, &c, &[Vec2::new(300.0, 400.0)]).unwrap();
        assert!(v[0].norm() < 1e-2);
        let s = two_disk_series(&g, &k, &k, &c).unwrap();
        let env = s.coefficient_envelope();
        assert!(env[20] < 1e-10 * env[0]);
    }

    #[test]
    fn inadmissible_pair_is_rejected() {
        let g = standard();
        let c = harmonic_bipolar_coeffs(SourceKind::X, &g, 10).unwrap();
        let lam = 0.5 * (-2.0 * g.xi0).exp();
        let k = Conductivity::real((2.0 * lam + 1.0) / (2.0 * lam - 1.0));
        assert!(matches!(
            two_disk_series(&g, &k, &k, &c),
            Err(NpError::InadmissiblePair { n: 1 })
        ));
    }

    #[test]
    fn eigenvalue_formula() {
        let e = two_disk_np_eigenvalues(&standard(), 2);
        assert_abs_diff_eq!(e[0], 0.0358984, epsilon = 1e-7);
        assert_abs_diff_eq!(e[1], -0.0358984, epsilon = 1e-7);
        assert_abs_diff_eq!(e[2], 0.5 * (7.0 - 4.0 * 3f64.sqrt()).powi(2), epsilon = 1e-15);
        let touching = BipolarGeometry::new(1.0, 1e-8).unwrap();
        assert!(two_disk_np_eigenvalues(&touching, 1)[0] > 0.4999);
        let apart = BipolarGeometry::new(1.0, 30.0).unwrap();
        assert!(two_disk_np_eigenvalues(&apart, 1)[0] < 1e-20);
    }

    #[test]
    fn truncation_reaches_tolerance() {
        let g = standard();
        let n = adaptive_truncation(&g, 1e-12);
        let rho = (-g.xi0).exp();
        assert!(rho.powi(n as i32) / (1.0 - rho) <= 1e-12 * 1.0001);
    }
}
