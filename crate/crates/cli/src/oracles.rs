//! Reference values computed without the solver paths they check: closed
//! forms, finite differences of layer potentials, and volume quadrature.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use np_core::bvp::fourier_coefficients;
use np_core::potentials::single_layer_eval;
use np_core::{BoundaryCurve, Density, OperatorMatrix, Result, Vec2, C64};

/// ±½((a−b)/(a+b))ⁿ for n = 1..=modes, positive first.
pub fn ellipse_np_eigenvalues(a: f64, b: f64, modes: usize) -> Vec<f64> {
    let r = (a - b) / (a + b);
    (1..=modes as i32).flat_map(|n| [0.5 * r.powi(n), -0.5 * r.powi(n)]).collect()
}

/// ±½e^{−2nξ₀} for two disks of radius r centred at (±c, 0), with
/// e^{−ξ₀} = c/r − √((c/r)² − 1).
pub fn two_disk_eigenvalues(c: f64, r: f64, modes: usize) -> Vec<f64> {
    let q = c / r - ((c / r).powi(2) - 1.0).sqrt();
    (1..=modes as i32)
        .flat_map(|n| [0.5 * q.powi(2 * n), -0.5 * q.powi(2 * n)])
        .collect()
}

/// Unit disk in the field h = x: u = 2/(k+1)·x inside and
/// u = x − c·x/|x|² outside with c = (k−1)/(k+1).
pub fn disk_interior_factor(k: C64) -> C64 {
    2.0 / (k + 1.0)
}

pub fn disk_dipole_coefficient(k: C64) -> C64 {
    (k - 1.0) / (k + 1.0)
}

/// m_{e_i e_i} for a disk of radius r: 2π r² (k−1)/(k+1).
pub fn disk_first_order_gpt(k: C64, r: f64) -> C64 {
    2.0 * PI * r * r * (k - 1.0) / (k + 1.0)
}

/// Trace on r = 1 of the Neumann problem with g = cos mθ in the unit disk
/// containing a concentric disk of radius ρ and conductivity k; the trace is
/// this value times cos mθ.
///
/// Outside the inclusion u = (A r^m + B r^{−m}) cos mθ and inside
/// u = C r^m cos mθ. The conditions m(A − B) = 1, continuity and
/// k-weighted flux continuity at r = ρ give B = βA with
/// β = ρ^{2m}(1 − k)/(1 + k).
pub fn annulus_trace_coefficient(rho: f64, k: C64, m: i32) -> C64 {
    let beta = rho.powi(2 * m) * (1.0 - k) / (1.0 + k);
    let a = 1.0 / (m as f64 * (1.0 - beta));
    a * (1.0 + beta)
}

/// Real k at which β = 1 above, so the annulus system loses uniqueness.
pub fn annulus_resonance(rho: f64, m: i32) -> f64 {
    let p = rho.powi(2 * m);
    (p - 1.0) / (p + 1.0)
}

/// k-image of the spectral interval [−b, b] under k(λ) = (2λ+1)/(2λ−1).
pub fn k_interval(b: f64) -> (f64, f64) {
    (-(1.0 + 2.0 * b) / (1.0 - 2.0 * b), -(1.0 - 2.0 * b) / (1.0 + 2.0 * b))
}

pub fn distance_to_k_interval(k: C64, b: f64) -> f64 {
    let (lo, hi) = k_interval(b);
    let x = k.re.clamp(lo, hi);
    (k - C64::new(x, 0.0)).norm()
}

/// Max-norm errors of one-sided second-order differences of S[φ] along the
/// normal, against `target` (the claimed one-sided normal derivative), for
/// each step h. `side` is +1 for the exterior and −1 for the interior.
pub fn one_sided_derivative_errors(
    curve: &BoundaryCurve,
    s: &OperatorMatrix,
    phi: &Density,
    target: &Density,
    steps: &[f64],
    side: f64,
) -> Result<Vec<f64>> {
    let on_curve = s.apply(phi);
    let scale = target.iter().map(|v| v.norm()).fold(0.0, f64::max);
    steps
        .iter()
        .map(|&h| {
            let shifted = |mult: f64| -> Vec<Vec2> {
                curve
                    .nodes()
                    .iter()
                    .zip(curve.normals())
                    .map(|(x, nu)| x + nu * (side * mult * h))
                    .collect()
            };
            let f1 = single_layer_eval(curve, phi, &shifted(1.0))?;
            let f2 = single_layer_eval(curve, phi, &shifted(2.0))?;
            Ok((0..curve.len())
                .map(|i| {
                    let fd = (f1[i] * 4.0 - on_curve[i] * 3.0 - f2[i]) / (2.0 * h) * side;
                    (fd - target[i]).norm()
                })
                .fold(0.0, f64::max)
                / scale)
        })
        .collect()
}

/// Spectral derivative d/dt of equispaced periodic samples.
fn periodic_derivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let complex: Vec<C64> = values.iter().map(|v| C64::new(*v, 0.0)).collect();
    let coeffs = fourier_coefficients(&complex);
    (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            coeffs
                .iter()
                .map(|(m, c)| c * C64::new(0.0, *m as f64) * C64::from_polar(1.0, *m as f64 * t))
                .sum::<C64>()
                .re
        })
        .collect()
}

/// Boundary samples of F = v_x − i v_y, holomorphic on one side of the curve.
struct CauchyData {
    zeta: Vec<C64>,
    /// ζ'(t_j)·2π/n.
    w: Vec<C64>,
    f: Vec<C64>,
}

impl CauchyData {
    fn interior(&self, z: C64) -> C64 {
        let (mut num, mut den) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for ((zeta, w), f) in self.zeta.iter().zip(&self.w).zip(&self.f) {
            let q = w / (zeta - z);
            num += f * q;
            den += q;
        }
        num / den
    }

    /// F vanishes at infinity, so the exterior formula carries −2πi.
    fn exterior(&self, z: C64) -> C64 {
        let (mut num, mut den) = (C64::new(0.0, 0.0), C64::new(0.0, -2.0 * PI));
        for ((zeta, w), f) in self.zeta.iter().zip(&self.w).zip(&self.f) {
            let q = w / (zeta - z);
            num += f * q;
            den += q;
        }
        num / den
    }
}

/// ∫_{ℝ²∖∂D} |∇S[φ]|² by polar-type volume quadrature about `center`
/// (the domain must be star-shaped with respect to it).
///
/// The boundary gradient from each side comes from the tangential derivative
/// of S[φ] and the one-sided normal derivatives (∓½ + K*)φ; the interior and
/// exterior fields are then recovered from their boundary values by the
/// barycentric Cauchy formula, and the volume integrals use Gauss–Legendre in
/// the radial variable and the trapezoid rule in the curve parameter.
pub fn volume_energy(
    curve: &BoundaryCurve,
    s: &OperatorMatrix,
    kstar: &OperatorMatrix,
    phi: &Density,
    center: Vec2,
    n_radial: usize,
) -> f64 {
    let n = curve.len();
    let h = 2.0 * PI / n as f64;
    let zeta: Vec<C64> = curve.nodes().iter().map(|p| C64::new(p.x, p.y)).collect();
    let dz: Vec<C64> = curve.derivatives().iter().map(|d| C64::new(d.x, d.y)).collect();
    let w: Vec<C64> = dz.iter().map(|d| d * h).collect();
    let rule = GaussLegendre::new(n_radial).expect("positive degree");
    // Nodes on (0, 1).
    let radial: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|(x, wt)| (0.5 * (x + 1.0), 0.5 * wt))
        .collect();
    let c = C64::new(center.x, center.y);
    let jac: Vec<f64> = zeta
        .iter()
        .zip(&dz)
        .map(|(z, d)| {
            let r = z - c;
            (r.re * d.im - r.im * d.re).abs()
        })
        .collect();

    let mut total = 0.0;
    for part in 0..2 {
        let psi: Vec<f64> = phi.iter().map(|v| if part == 0 { v.re } else { v.im }).collect();
        if psi.iter().all(|v| *v == 0.0) {
            continue;
        }
        let psi_c = Density::from_iterator(n, psi.iter().map(|v| C64::new(*v, 0.0)));
        let v: Vec<f64> = s.apply(&psi_c).iter().map(|z| z.re).collect();
        let kv: Vec<f64> = kstar.apply(&psi_c).iter().map(|z| z.re).collect();
        let dv_dt = periodic_derivative(&v);
        let gradient_f = |normal_flux: &dyn Fn(usize) -> f64| -> Vec<C64> {
            (0..n)
                .map(|j| {
                    let speed = curve.speeds()[j];
                    let tan = curve.derivatives()[j] / speed;
                    let nu = curve.normals()[j];
                    let g = tan * (dv_dt[j] / speed) + nu * normal_flux(j);
                    C64::new(g.x, -g.y)
                })
                .collect()
        };
        let inner = CauchyData {
            zeta: zeta.clone(),
            w: w.clone(),
            f: gradient_f(&|j| kv[j] - 0.5 * psi[j]),
        };
        let outer = CauchyData {
            zeta: zeta.clone(),
            w: w.clone(),
            f: gradient_f(&|j| kv[j] + 0.5 * psi[j]),
        };
        for j in 0..n {
            let r = zeta[j] - c;
            for &(sr, ws) in &radial {
                let fi = inner.interior(c + r * sr).norm_sqr();
                total += h * ws * fi * sr * jac[j];
                let fe = outer.exterior(c + r / sr).norm_sqr();
                total += h * ws * fe * jac[j] / (sr * sr * sr);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use np_core::potentials::{np_matrix, single_layer_matrix};
    use np_core::spectral::symmetrized_spectrum;
    use np_core::{make_curve, CurveShape};

    #[test]
    fn ellipse_targets() {
        let e = ellipse_np_eigenvalues(2.0, 1.0, 2);
        assert!((e[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((e[3] + 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn two_disk_targets() {
        let e = two_disk_eigenvalues(2.0, 1.0, 2);
        let xi0 = 2f64.acosh();
        assert!((e[0] - 0.5 * (-2.0 * xi0).exp()).abs() < 1e-15);
        assert!((e[2] - 0.5 * (-4.0 * xi0).exp()).abs() < 1e-15);
    }

    #[test]
    fn annulus_reduces_to_homogeneous_disk() {
        // k = 1: u = r cos θ, trace coefficient 1.
        assert!((annulus_trace_coefficient(0.5, C64::new(1.0, 0.0), 1) - 1.0).norm() < 1e-15);
        // Resonance of the m = 1 mode at ρ = 1/2.
        assert!((annulus_resonance(0.5, 1) + 0.6).abs() < 1e-15);
    }

    #[test]
    fn k_interval_degenerates_for_the_disk() {
        assert_eq!(k_interval(0.0), (-1.0, -1.0));
        assert!((distance_to_k_interval(C64::new(0.0, 0.0), 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cauchy_formulas_reproduce_test_functions() {
        let curve = make_curve(CurveShape::ellipse([0.0, 0.0], 1.5, 1.0), 128).unwrap();
        let zeta: Vec<C64> = curve.nodes().iter().map(|p| C64::new(p.x, p.y)).collect();
        let w: Vec<C64> = curve
            .derivatives()
            .iter()
            .map(|d| C64::new(d.x, d.y) * (2.0 * PI / 128.0))
            .collect();
        let inside = |z: C64| z * z + z.exp();
        let outside = |z: C64| 1.0 / ((z - 0.3) * (z - 0.3));
        let fi = CauchyData {
            zeta: zeta.clone(),
            w: w.clone(),
            f: zeta.iter().map(|z| inside(*z)).collect(),
        };
        let fe = CauchyData {
            zeta: zeta.clone(),
            w,
            f: zeta.iter().map(|z| outside(*z)).collect(),
        };
        for z in [C64::new(0.1, 0.2), C64::new(1.49, 0.0), C64::new(0.0, 0.999)] {
            assert!((fi.interior(z) - inside(z)).norm() < 1e-9);
        }
        for z in [C64::new(3.0, 1.0), C64::new(1.501, 0.0), C64::new(0.0, 1.001)] {
            assert!((fe.exterior(z) - outside(z)).norm() < 1e-9);
        }
    }

    #[test]
    fn volume_energy_of_a_circle_mode() {
        // φ = cos t on the unit circle: S[φ] = −(r/2) cos t inside and
        // −cos t/(2r) outside, so the energy is π/4 + π/4.
        let curve = make_curve(CurveShape::circle([0.0, 0.0], 1.0), 64).unwrap();
        let phi = Density::from_iterator(64, curve.params().iter().map(|t| C64::new(t.cos(), 0.0)));
        let e = volume_energy(
            &curve,
            &single_layer_matrix(&curve),
            &np_matrix(&curve),
            &phi,
            Vec2::zeros(),
            32,
        );
        assert!((e - PI / 2.0).abs() < 1e-10, "{e}");
        let dec = symmetrized_spectrum(&curve, None).unwrap();
        assert!((dec.h_norm(&phi).powi(2) - PI / 2.0).abs() < 1e-10);
    }
}
