//! Neumann problem in a disk Ω containing one inclusion D.
//!
//! The solution is `u = U − N_∂D[φ]`, where U solves the problem without the
//! inclusion and φ solves `(λ(k) − K* + ∂_ν R_∂D) φ = ∂_ν U` on ∂D.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::FftPlanner;

use crate::error::{NpError, Result};
use crate::geometry::{BoundaryCurve, Vec2};
use crate::linalg::{singular_range, to_complex, MeanZeroBasis};
use crate::neumann::{neumann_layer_eval, regular_part_matrix, DiskDomain};
use crate::potentials::{np_matrix, Density};
use crate::spectral::{in_sector, Conductivity};
use crate::transmission::{contrast_gap, HarmonicSource};
use crate::C64;

/// Neumann data `g(θ) = Σ_{m≠0} g_m e^{imθ}` on ∂Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannData {
    modes: Vec<(i64, C64)>,
}

impl NeumannData {
    pub fn new(modes: Vec<(i64, C64)>) -> Result<Self> {
        let mean: C64 = modes.iter().filter(|(m, _)| *m == 0).map(|(_, c)| c).sum();
        if mean.norm() > 0.0 {
            return Err(NpError::IncompatibleData(mean));
        }
        Ok(NeumannData {
            modes: modes.into_iter().filter(|(m, _)| *m != 0).collect(),
        })
    }

    /// g = cos mθ.
    pub fn cos(m: i64) -> Self {
        let half = C64::new(0.5, 0.0);
        NeumannData::new(vec![(m, half), (-m, half)]).expect("m ≠ 0")
    }

    /// g = sin mθ.
    pub fn sin(m: i64) -> Self {
        NeumannData::new(vec![(m, C64::new(0.0, -0.5)), (-m, C64::new(0.0, 0.5))]).expect("m ≠ 0")
    }

    pub fn modes(&self) -> &[(i64, C64)] {
        &self.modes
    }

    pub fn value(&self, theta: f64) -> C64 {
        self.modes
            .iter()
            .map(|(m, c)| c * C64::from_polar(1.0, *m as f64 * theta))
            .sum()
    }

    /// ‖g‖²_{H^{-1/2}(∂Ω)} through the symbol (1 + m²)^{-1/2}.
    pub fn norm_minus_half(&self, disk: &DiskDomain) -> f64 {
        (disk.perimeter()
            * self
                .modes
                .iter()
                .map(|(m, c)| c.norm_sqr() / (1.0 + (*m as f64).powi(2)).sqrt())
                .sum::<f64>())
        .sqrt()
    }
}

/// U with ∂_ν U = g on ∂Ω: `Σ g_m r_e (r/r_e)^{|m|} e^{imθ} / |m|`.
pub fn harmonic_u(disk: &DiskDomain, g: &NeumannData) -> HarmonicSource {
    let re = disk.radius();
    let deg = g.modes().iter().map(|(m, _)| m.unsigned_abs() as usize).max().unwrap_or(0);
    let mut holo = vec![C64::new(0.0, 0.0); deg];
    let mut anti = holo.clone();
    for (m, c) in g.modes() {
        let a = m.unsigned_abs() as usize;
        let coef = c * re.powi(1 - a as i32) / a as f64;
        if *m > 0 {
            holo[a - 1] += coef;
        } else {
            anti[a - 1] += coef;
        }
    }
    HarmonicSource::new(holo, anti)
}

/// Fourier coefficients `(m, ĉ_m)` of equispaced samples, |m| < n/2.
pub fn fourier_coefficients(values: &[C64]) -> Vec<(i64, C64)> {
    let n = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = (n / 2) as i64;
    (-(half - 1)..half)
        .map(|m| {
            let idx = m.rem_euclid(n as i64) as usize;
            (m, buf[idx] / n as f64)
        })
        .collect()
}

/// Discrete H^s norm on the circle of radius `radius` from equispaced samples.
pub fn sobolev_norm(values: &[C64], radius: f64, s: f64) -> f64 {
    (2.0 * PI
        * radius
        * fourier_coefficients(values)
            .iter()
            .map(|(m, c)| (1.0 + (*m as f64).powi(2)).powf(s) * c.norm_sqr())
            .sum::<f64>())
    .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    /// Number of equispaced samples of the trace on ∂Ω.
    pub n_outer: usize,
    /// Relative threshold on σ_min / σ_max below which the system is declared resonant.
    pub resonance_tol: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            n_outer: 128,
            resonance_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BvpReport {
    pub conductivity: Conductivity,
    pub density: Density,
    pub background: HarmonicSource,
    pub boundary_nodes: Vec<Vec2>,
    pub boundary_trace: Vec<C64>,
    pub residual: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl BvpReport {
    /// u = U − N_∂D[φ] at points of Ω̄ away from ∂D.
    pub fn field(&self, disk: &DiskDomain, curve: &BoundaryCurve, points: &[Vec2]) -> Result<Vec<C64>> {
        let n = neumann_layer_eval(disk, curve, &self.density, points)?;
        Ok(points
            .iter()
            .zip(n)
            .map(|(p, v)| self.background.value(p) - v)
            .collect())
    }
}

/// `λ − K* + ∂_ν R` in mean-zero coordinates, with its basis.
pub fn bvp_system(
    disk: &DiskDomain,
    curve: &BoundaryCurve,
    lambda: C64,
) -> Result<(MeanZeroBasis, DMatrix<C64>)> {
    let r = regular_part_matrix(disk, curve)?;
    let k = np_matrix(curve);
    let basis = MeanZeroBasis::new(&[curve.weights()]);
    let op = basis.restrict(&(&r.entries - &k.entries));
    let n = op.nrows();
    let a = DMatrix::<C64>::identity(n, n) * lambda + to_complex(&op);
    Ok((basis, a))
}

/// Extreme singular values of the BVP system at conductivity k.
pub fn bvp_singular_values(disk: &DiskDomain, curve: &BoundaryCurve, k: &Conductivity) -> Result<(f64, f64)> {
    let (_, a) = bvp_system(disk, curve, k.lambda()?)?;
    Ok(singular_range(&a))
}

pub fn solve_neumann_bvp(
    disk: &DiskDomain,
    curve: &BoundaryCurve,
    k: &Conductivity,
    g: &NeumannData,
    options: &BvpOptions,
) -> Result<BvpReport> {
    disk.check_interior(curve)?;
    let background = harmonic_u(disk, g);
    let boundary_nodes = disk.boundary_nodes(options.n_outer);
    if k.is_trivial() {
        let boundary_trace = boundary_nodes.iter().map(|p| background.value(p)).collect();
        return Ok(BvpReport {
            conductivity: *k,
            density: Density::zeros(curve.len()),
            background,
            boundary_nodes,
            boundary_trace,
            residual: 0.0,
            sigma_min: f64::NAN,
            sigma_max: f64::NAN,
        });
    }
    let (basis, a) = bvp_system(disk, curve, k.lambda()?)?;
    let (sigma_min, sigma_max) = singular_range(&a);
    if sigma_min < options.resonance_tol * sigma_max {
        return Err(NpError::NearResonance {
            sigma_min,
            threshold: options.resonance_tol * sigma_max,
        });
    }
    let rhs = basis.coords(&background.normal_derivative(curve));
    let c = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| NpError::SolverFailure("BVP system is singular".into()))?;
    let scale = rhs.norm();
    let res = (&a * &c - &rhs).norm();
    let residual = if scale > 0.0 { res / scale } else { res };
    let density = basis.lift(&c);
    let n = neumann_layer_eval(disk, curve, &density, &boundary_nodes)?;
    let boundary_trace = boundary_nodes
        .iter()
        .zip(n)
        .map(|(p, v)| background.value(p) - v)
        .collect();
    Ok(BvpReport {
        conductivity: *k,
        density,
        background,
        boundary_nodes,
        boundary_trace,
        residual,
        sigma_min,
        sigma_max,
    })
}

/// k_n = (ρ^{2n} − 1)/(ρ^{2n} + 1): conductivities at which the concentric
/// configuration with radius ratio ρ admits a nontrivial solution with g = 0.
pub fn concentric_resonance(rho: f64, n: u32) -> f64 {
    let p = rho.powi(2 * n as i32);
    (p - 1.0) / (p + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceRow {
    pub n: u32,
    pub k_n: f64,
    pub sigma_at: f64,
    pub sigma_below: f64,
    pub sigma_above: f64,
    /// Location of the σ_min dip found by golden-section search near k_n.
    pub dip: f64,
}

/// σ_min at real k.
fn sigma_min_real(disk: &DiskDomain, curve: &BoundaryCurve, k: f64) -> Result<f64> {
    bvp_singular_values(disk, curve, &Conductivity::real(k)).map(|(lo, _)| lo)
}

/// Golden-section minimization of σ_min(k) over real k in `[lo, hi]`.
pub fn locate_dip(disk: &DiskDomain, curve: &BoundaryCurve, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = sigma_min_real(disk, curve, c)?;
    let mut fd = sigma_min_real(disk, curve, d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = sigma_min_real(disk, curve, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = sigma_min_real(disk, curve, d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// For n = 1..=n_max: σ_min at k_n and at k_n ± offset, and the located dip.
pub fn resonance_probe(
    disk: &DiskDomain,
    inclusion: &BoundaryCurve,
    n_max: u32,
    offset: f64,
) -> Result<Vec<ResonanceRow>> {
    let rho = inclusion.max_radius() / disk.radius();
    (1..=n_max)
        .map(|n| {
            let k_n = concentric_resonance(rho, n);
            // Bracket a quarter of the way to the neighbouring resonances so
            // that σ_min is unimodal on it.
            let below = concentric_resonance(rho, n + 1);
            let above = if n > 1 { concentric_resonance(rho, n - 1) } else { 0.0 };
            let lo = k_n - 0.25 * (k_n - below);
            let hi = k_n + 0.25 * (above - k_n);
            Ok(ResonanceRow {
                n,
                k_n,
                sigma_at: sigma_min_real(disk, inclusion, k_n)?,
                sigma_below: sigma_min_real(disk, inclusion, k_n - offset)?,
                sigma_above: sigma_min_real(disk, inclusion, k_n + offset)?,
                dip: locate_dip(disk, inclusion, lo, hi, 1e-12)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdRow {
    pub k: Conductivity,
    pub in_sector: bool,
    /// ‖u|∂Ω‖_{1/2} / ‖g‖_{−1/2}.
    pub trace_ratio: f64,
    /// √|∫_∂Ω g ū| / ‖g‖_{−1/2}, the energy surrogate.
    pub energy_ratio: f64,
    pub sigma_min: f64,
    pub flagged: bool,
}

/// Neumann-to-Dirichlet ratios over a k grid; resonant points are flagged, not fatal.
pub fn ndmap_uniformity_sweep(
    disk: &DiskDomain,
    curve: &BoundaryCurve,
    l: f64,
    k_grid: &[Conductivity],
    g: &NeumannData,
    options: &BvpOptions,
) -> Result<Vec<NdRow>> {
    let gnorm = g.norm_minus_half(disk);
    k_grid
        .iter()
        .map(|k| ndmap_row(disk, curve, l, k, g, gnorm, options))
        .collect()
}

fn ndmap_row(
    disk: &DiskDomain,
    curve: &BoundaryCurve,
    l: f64,
    k: &Conductivity,
    g: &NeumannData,
    gnorm: f64,
    options: &BvpOptions,
) -> Result<NdRow> {
    match solve_neumann_bvp(disk, curve, k, g, options) {
        Ok(rep) => {
            let n = rep.boundary_trace.len();
            let pairing: C64 = rep
                .boundary_trace
                .iter()
                .enumerate()
                .map(|(j, u)| g.value(2.0 * PI * j as f64 / n as f64) * u.conj())
                .sum::<C64>()
                * (disk.perimeter() / n as f64);
            Ok(NdRow {
                k: *k,
                in_sector: in_sector(k, l),
                trace_ratio: sobolev_norm(&rep.boundary_trace, disk.radius(), 0.5) / gnorm,
                energy_ratio: pairing.norm().sqrt() / gnorm,
                sigma_min: rep.sigma_min,
                flagged: false,
            })
        }
        Err(NpError::NearResonance { sigma_min, .. }) => Ok(NdRow {
            k: *k,
            in_sector: in_sector(k, l),
            trace_ratio: f64::INFINITY,
            energy_ratio: f64::INFINITY,
            sigma_min,
            flagged: true,
        }),
        Err(e) => Err(e),
    }
}

/// Pairwise Lipschitz quotients ‖u_k − u_s‖_{1/2} / (contrast_gap · ‖g‖_{−1/2})
/// over consecutive grid points.
pub fn bvp_lipschitz_quotients(
    disk: &DiskDomain,
    curve: &BoundaryCurve,
    k_grid: &[Conductivity],
    g: &NeumannData,
    options: &BvpOptions,
) -> Result<Vec<f64>> {
    let gnorm = g.norm_minus_half(disk);
    let reports = k_grid
        .iter()
        .map(|k| solve_neumann_bvp(disk, curve, k, g, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(reports
        .windows(2)
        .map(|pair| {
            let diff: Vec<C64> = pair[0]
                .boundary_trace
                .iter()
                .zip(&pair[1].boundary_trace)
                .map(|(a, b)| a - b)
                .collect();
            let gap = contrast_gap(&pair[0].conductivity, &pair[1].conductivity);
            sobolev_norm(&diff, disk.radius(), 0.5) / (gap * gnorm)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_curve, CurveShape};
    use approx::assert_abs_diff_eq;

    /// Concentric annulus oracle for g = cos θ, Ω radius 1, D radius ρ:
    /// u = A r cos θ in D, u = (B r + C/r) cos θ in the annulus.
    fn annulus_coefficients(rho: f64, k: f64) -> (f64, f64, f64) {
        // B − C = 1, Aρ = Bρ + C/ρ, kA = B − C/ρ².
        let m = nalgebra::Matrix3::new(0.0, 1.0, -1.0, rho, -rho, -1.0 / rho, k, -1.0, 1.0 / (rho * rho));
        let sol = m.lu().solve(&nalgebra::Vector3::new(1.0, 0.0, 0.0)).unwrap();
        (sol[0], sol[1], sol[2])
    }

    #[test]
    fn harmonic_u_examples() {
        let disk = DiskDomain::new(1.0).unwrap();
        let p = Vec2::new(0.3, 0.4);
        let u = harmonic_u(&disk, &NeumannData::cos(1));
        assert!((u.value(&p) - 0.3).norm() < 1e-15);
        let u = harmonic_u(&disk, &NeumannData::cos(2));
        assert!((u.value(&p) - 0.5 * (0.09 - 0.16)).norm() < 1e-15);
        assert!(matches!(
            NeumannData::new(vec![(0, C64::new(1.0, 0.0))]),
            Err(NpError::IncompatibleData(_))
        ));
        // ∂_ν U = g on a larger disk.
        let big = DiskDomain::new(2.5).unwrap();
        let g = NeumannData::new(vec![(3, C64::new(0.2, 0.1)), (-1, C64::new(-0.4, 0.0))]).unwrap();
        let u = harmonic_u(&big, &g);
        for j in 0..16 {
            let t = 2.0 * PI * j as f64 / 16.0;
            let x = big.boundary_point(t);
            let grad = u.gradient(&x);
            let flux = (grad[0] * x.x + grad[1] * x.y) / 2.5;
            assert!((flux - g.value(t)).norm() < 1e-13);
        }
    }

    #[test]
    fn fourier_and_sobolev_norms() {
        let n = 64;
        let vals: Vec<C64> = (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                C64::new((3.0 * t).cos(), 0.0)
            })
            .collect();
        let coeffs = fourier_coefficients(&vals);
        let c3 = coeffs.iter().find(|(m, _)| *m == 3).unwrap().1;
        assert_abs_diff_eq!(c3.re, 0.5, epsilon = 1e-14);
        // ‖cos 3θ‖²_{1/2} = 2π · 2 · ¼ · √10 on the unit circle.
        let expected = (2.0 * PI * 0.5 * 10f64.sqrt()).sqrt();
        assert_abs_diff_eq!(sobolev_norm(&vals, 1.0, 0.5), expected, epsilon = 1e-12);
    }

    #[test]
    fn trivial_contrast_returns_background() {
        let disk = DiskDomain::new(1.0).unwrap();
        let d = make_curve(CurveShape::circle([0.1, 0.0], 0.3), 64).unwrap();
        let rep = solve_neumann_bvp(&disk, &d, &Conductivity::real(1.0), &NeumannData::cos(1), &BvpOptions::default())
            .unwrap();
        assert_eq!(rep.density.norm(), 0.0);
        for (p, u) in rep.boundary_nodes.iter().zip(&rep.boundary_trace) {
            assert!((u - p.x).norm() < 1e-15);
        }
    }

    #[test]
    fn concentric_annulus_oracle() {
        let disk = DiskDomain::new(1.0).unwrap();
        let d = make_curve(CurveShape::circle([0.0, 0.0], 0.5), 128).unwrap();
        let rep = solve_neumann_bvp(&disk, &d, &Conductivity::real(2.0), &NeumannData::cos(1), &BvpOptions::default())
            .unwrap();
        assert!(rep.residual < 1e-9);
        let (a, b, c) = annulus_coefficients(0.5, 2.0);
        for (p, u) in rep.boundary_nodes.iter().zip(&rep.boundary_trace) {
            assert_abs_diff_eq!(u.re, (b + c) * p.x, epsilon = 1e-10);
            assert!(u.im.abs() < 1e-12);
        }
        let pts = [Vec2::new(0.2, 0.1), Vec2::new(0.7, -0.2)];
        let vals = rep.field(&disk, &d, &pts).unwrap();
        assert_abs_diff_eq!(vals[0].re, a * 0.2, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[1].re, b * 0.7 + c * 0.7 / 0.53, epsilon = 1e-10);
    }

    #[test]
    fn concentric_resonance_is_detected() {
        let disk = DiskDomain::new(1.0).unwrap();
        let d = make_curve(CurveShape::circle([0.0, 0.0], 0.5), 64).unwrap();
        assert_abs_diff_eq!(concentric_resonance(0.5, 1), -0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(concentric_resonance(0.5, 2), -15.0 / 17.0, epsilon = 1e-15);
        let err = solve_neumann_bvp(&disk, &d, &Conductivity::real(-0.6), &NeumannData::cos(1), &BvpOptions::default());
        assert!(matches!(err, Err(NpError::NearResonance { .. })));
        let rows = resonance_probe(&disk, &d, 2, 0.05).unwrap();
        for row in &rows {
            assert!(row.sigma_at < 1e-6);
            assert!(row.sigma_below > 1e-3 && row.sigma_above > 1e-3);
            assert_abs_diff_eq!(row.dip, row.k_n, epsilon = 1e-8);
        }
        assert!(concentric_resonance(1e-3, 1) + 1.0 < 1e-5);
    }

    #[test]
    fn mean_zero_density_has_no_outer_flux() {
        use crate::neumann::neumann_layer_gradient;
        let disk = DiskDomain::new(1.0).unwrap();
        let d = make_curve(CurveShape::ellipse([0.1, 0.2], 0.3, 0.2), 128).unwrap();
        let rep = solve_neumann_bvp(&disk, &d, &Conductivity::complex(3.0, 1.0), &NeumannData::sin(2), &BvpOptions::default())
            .unwrap();
        let nodes = disk.boundary_nodes(16);
        let grads = neumann_layer_gradient(&disk, &d, &rep.density, &nodes).unwrap();
        for (x, g) in nodes.iter().zip(grads) {
            assert!((g[0] * x.x + g[1] * x.y).norm() < 1e-12);
        }
    }

    #[test]
    fn ndmap_sweep_flags_resonance() {
        let disk = DiskDomain::new(1.0).unwrap();
        let d = make_curve(CurveShape::circle([0.0, 0.0], 0.5), 64).unwrap();
        let grid = [Conductivity::real(2.0), Conductivity::real(-0.6), Conductivity::complex(-1.0, 1.0)];
        let rows = ndmap_uniformity_sweep(&disk, &d, 1.0, &grid, &NeumannData::cos(1), &BvpOptions::default()).unwrap();
        assert!(!rows[0].flagged && rows[1].flagged && !rows[2].flagged);
        assert!(rows[0].trace_ratio.is_finite());
    }
}
