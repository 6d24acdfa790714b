//! Block NP systems for several disjoint inclusions with their own contrasts.
//!
//! Row `j` of the block system is scaled by `μ_j = 1/λ(k_j)`, so the solver
//! works with `I − M 𝕂*` and right side `M ∂h`. This keeps `k_j = 1`
//! (`μ_j = 0`, an invisible inclusion) finite.

use nalgebra::{DMatrix, DVector};

use crate::bvp::{harmonic_u, BvpOptions, NeumannData};
use crate::error::{NpError, Result};
use crate::geometry::{BoundaryCurve, Vec2};
use crate::linalg::{singular_range, to_complex, MeanZeroBasis};
use crate::neumann::{neumann_layer_eval, regular_part_cross_matrix, regular_part_matrix, DiskDomain};
use crate::potentials::{
    check_separated, cross_normal_matrix, cross_single_layer_matrix, np_matrix, single_layer_eval,
    single_layer_matrix, Density,
};
use crate::spectral::{in_sector, Conductivity, SpectralDecomposition};
use crate::transmission::{contrast_gap, HarmonicSource};
use crate::C64;

/// Largest number of inclusions accepted by [`assemble_multi`].
pub const MAX_INCLUSIONS: usize = 8;

#[derive(Debug, Clone)]
pub struct MultiSystem {
    curves: Vec<BoundaryCurve>,
    conductivities: Vec<Conductivity>,
    offsets: Vec<usize>,
    kstar: DMatrix<f64>,
    single: DMatrix<f64>,
    basis: MeanZeroBasis,
}

/// Fill the block 𝕂* and 𝕊 for pairwise separated curves.
pub fn assemble_multi(curves: Vec<BoundaryCurve>, conductivities: Vec<Conductivity>) -> Result<MultiSystem> {
    if curves.is_empty() || curves.len() != conductivities.len() {
        return Err(NpError::InvalidParameter(format!(
            "need one conductivity per curve (got {} curves, {} conductivities)",
            curves.len(),
            conductivities.len()
        )));
    }
    if curves.len() > MAX_INCLUSIONS {
        return Err(NpError::InvalidParameter(format!(
            "at most {MAX_INCLUSIONS} inclusions are supported"
        )));
    }
    for k in &conductivities {
        k.inverse_lambda()?;
    }
    let mut offsets = Vec::with_capacity(curves.len() + 1);
    offsets.push(0);
    for c in &curves {
        offsets.push(offsets.last().unwrap() + c.len());
    }
    let total = *offsets.last().unwrap();
    let mut kstar = DMatrix::zeros(total, total);
    let mut single = DMatrix::zeros(total, total);
    for (i, ci) in curves.iter().enumerate() {
        for (j, cj) in curves.iter().enumerate() {
            let (k, s) = if i == j {
                (np_matrix(ci).entries, single_layer_matrix(ci).entries)
            } else {
                check_separated(ci, cj)?;
                (
                    cross_normal_matrix(ci, cj)?.entries,
                    cross_single_layer_matrix(ci, cj)?.entries,
                )
            };
            kstar.view_mut((offsets[i], offsets[j]), k.shape()).copy_from(&k);
            single.view_mut((offsets[i], offsets[j]), s.shape()).copy_from(&s);
        }
    }
    let weights: Vec<&[f64]> = curves.iter().map(|c| c.weights()).collect();
    let basis = MeanZeroBasis::new(&weights);
    Ok(MultiSystem {
        curves,
        conductivities,
        offsets,
        kstar,
        single,
        basis,
    })
}

impl MultiSystem {
    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn curves(&self) -> &[BoundaryCurve] {
        &self.curves
    }

    pub fn conductivities(&self) -> &[Conductivity] {
        &self.conductivities
    }

    pub fn total_nodes(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Block 𝕂* on the stacked nodes.
    pub fn kstar(&self) -> &DMatrix<f64> {
        &self.kstar
    }

    /// Block 𝕊 on the stacked nodes.
    pub fn single_layer(&self) -> &DMatrix<f64> {
        &self.single
    }

    pub fn basis(&self) -> &MeanZeroBasis {
        &self.basis
    }

    /// Same geometry with other conductivities.
    pub fn with_conductivities(&self, conductivities: Vec<Conductivity>) -> Result<MultiSystem> {
        if conductivities.len() != self.len() {
            return Err(NpError::InvalidParameter("conductivity count mismatch".into()));
        }
        for k in &conductivities {
            k.inverse_lambda()?;
        }
        Ok(MultiSystem {
            conductivities,
            ..self.clone()
        })
    }

    /// Split a stacked nodal vector into per-curve densities.
    pub fn split(&self, stacked: &Density) -> Vec<Density> {
        self.offsets
            .windows(2)
            .map(|w| stacked.rows(w[0], w[1] - w[0]).into_owned())
            .collect()
    }

    /// Stack `∂_{ν_j} h` over all curves.
    pub fn stacked_flux(&self, source: &HarmonicSource) -> Density {
        let mut out = Density::zeros(self.total_nodes());
        for (c, w) in self.curves.iter().zip(self.offsets.windows(2)) {
            out.rows_mut(w[0], w[1] - w[0]).copy_from(&source.normal_derivative(c));
        }
        out
    }

    /// Symmetrized spectrum of 𝕂* in the block twisted inner product.
    pub fn spectrum(&self) -> Result<SpectralDecomposition> {
        SpectralDecomposition::from_operators(self.basis.clone(), &self.single, &self.kstar)
    }

    /// μ_j = 1/λ(k_j).
    pub fn inverse_lambdas(&self) -> Vec<C64> {
        self.conductivities
            .iter()
            .map(|k| k.inverse_lambda().expect("validated at assembly"))
            .collect()
    }

    /// Per-coordinate scaling `M` in mean-zero coordinates.
    fn coordinate_scaling(&self, mus: &[C64]) -> Vec<C64> {
        self.basis
            .blocks()
            .iter()
            .zip(mus)
            .flat_map(|((_, n), mu)| std::iter::repeat_n(*mu, n - 1))
            .collect()
    }

    /// `I − M A` for an operator `A` on the stacked nodes, in mean-zero coordinates.
    fn scaled_system(&self, mus: &[C64], operator: &DMatrix<f64>) -> DMatrix<C64> {
        let a = to_complex(&self.basis.restrict(operator));
        let m = self.coordinate_scaling(mus);
        let n = a.nrows();
        let mut out = -a;
        for (i, mu) in m.iter().enumerate() {
            for v in out.row_mut(i).iter_mut() {
                *v *= *mu;
            }
        }
        out + DMatrix::<C64>::identity(n, n)
    }

    /// `I − 𝔻(Λ)⁻¹ 𝕂*` in mean-zero coordinates for arbitrary μ_j = 1/λ_j.
    pub fn system_matrix_for(&self, mus: &[C64]) -> DMatrix<C64> {
        self.scaled_system(mus, &self.kstar)
    }

    /// `I − 𝔻(Λ)⁻¹ 𝕂*` at the system's own conductivities.
    pub fn system_matrix(&self) -> DMatrix<C64> {
        self.system_matrix_for(&self.inverse_lambdas())
    }

    fn scaled_rhs(&self, flux: &Density) -> DVector<C64> {
        let mut r = self.basis.coords(flux);
        for (v, mu) in r.iter_mut().zip(self.coordinate_scaling(&self.inverse_lambdas())) {
            *v *= mu;
        }
        r
    }
}

/// Membership of a conductivity vector in the solvability regions.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTag {
    pub imaginary_parts: Vec<f64>,
    pub in_theta_plus: bool,
    pub in_theta_minus: bool,
    pub in_theta_l: bool,
}

/// k ∉ (−∞, 0]; the boundary case k = 0 is excluded.
fn off_negative_axis(k: &Conductivity) -> bool {
    match k {
        Conductivity::Finite(k) => k.im != 0.0 || k.re > 0.0,
        Conductivity::Infinite => true,
    }
}

pub fn theta_tag(conductivities: &[Conductivity], l: f64) -> ThetaTag {
    let im = |k: &Conductivity| k.value().map_or(0.0, |v| v.im);
    let imaginary_parts: Vec<f64> = conductivities.iter().map(im).collect();
    let admissible = conductivities.iter().all(off_negative_axis);
    let in_theta_plus = admissible && imaginary_parts.iter().all(|v| *v >= 0.0);
    let in_theta_minus = admissible && imaginary_parts.iter().all(|v| *v <= 0.0);
    let in_theta_l = in_theta_plus && conductivities.iter().all(|k| in_sector(k, l));
    ThetaTag {
        imaginary_parts,
        in_theta_plus,
        in_theta_minus,
        in_theta_l,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiOptions {
    /// Relative threshold on σ_min / σ_max below which the system is declared resonant.
    pub resonance_tol: f64,
}

impl Default for MultiOptions {
    fn default() -> Self {
        MultiOptions { resonance_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct MultiSolveReport {
    pub conductivities: Vec<Conductivity>,
    pub densities: Vec<Density>,
    /// Relative residual of the scaled system in mean-zero coordinates.
    pub residual: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl MultiSolveReport {
    /// u = h + Σ_j S_j[φ_j] at points off every curve.
    pub fn field(&self, system: &MultiSystem, source: &HarmonicSource, points: &[Vec2]) -> Result<Vec<C64>> {
        let mut out: Vec<C64> = points.iter().map(|p| source.value(p)).collect();
        for (c, d) in system.curves.iter().zip(&self.densities) {
            for (o, v) in out.iter_mut().zip(single_layer_eval(c, d, points)?) {
                *o += v;
            }
        }
        Ok(out)
    }
}

fn dense_solve(a: &DMatrix<C64>, rhs: &DVector<C64>, tol: f64) -> Result<(DVector<C64>, f64, f64, f64)> {
    let (sigma_min, sigma_max) = singular_range(a);
    if sigma_min < tol * sigma_max {
        return Err(NpError::NearResonance {
            sigma_min,
            threshold: tol * sigma_max,
        });
    }
    let c = a
        .clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| NpError::SolverFailure("block system is singular".into()))?;
    let scale = rhs.norm();
    let res = (a * &c - rhs).norm();
    Ok((c, if scale > 0.0 { res / scale } else { res }, sigma_min, sigma_max))
}

/// Solve `(𝔻(Λ) − 𝕂*) Φ = ∂h` by a dense block solve.
pub fn solve_multi_free_space(
    system: &MultiSystem,
    source: &HarmonicSource,
    options: &MultiOptions,
) -> Result<MultiSolveReport> {
    let a = system.system_matrix();
    let rhs = system.scaled_rhs(&system.stacked_flux(source));
    let (c, residual, sigma_min, sigma_max) = dense_solve(&a, &rhs, options.resonance_tol)?;
    Ok(MultiSolveReport {
        conductivities: system.conductivities.clone(),
        densities: system.split(&system.basis.lift(&c)),
        residual,
        sigma_min,
        sigma_max,
    })
}

/// Equal-contrast solve through the block spectral resolution `(λ − 𝕂*)⁻¹`.
pub fn solve_multi_spectral(
    system: &MultiSystem,
    decomposition: &SpectralDecomposition,
    source: &HarmonicSource,
    eps: f64,
) -> Result<Vec<Density>> {
    let k = system.conductivities[0];
    if system.conductivities.iter().any(|c| *c != k) {
        return Err(NpError::InvalidParameter(
            "the spectral path needs equal conductivities".into(),
        ));
    }
    if k.is_trivial() {
        return Ok(system.split(&Density::zeros(system.total_nodes())));
    }
    let phi = crate::spectral::resolvent_apply(decomposition, k.lambda()?, &system.stacked_flux(source), eps)?;
    Ok(system.split(&phi))
}

#[derive(Debug, Clone)]
pub struct MultiBvpReport {
    pub conductivities: Vec<Conductivity>,
    pub densities: Vec<Density>,
    pub background: HarmonicSource,
    pub boundary_nodes: Vec<Vec2>,
    pub boundary_trace: Vec<C64>,
    pub residual: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl MultiBvpReport {
    /// u = U − Σ_j N_j[φ_j] at points of Ω̄ away from the inclusions.
    pub fn field(&self, disk: &DiskDomain, system: &MultiSystem, points: &[Vec2]) -> Result<Vec<C64>> {
        let mut out: Vec<C64> = points.iter().map(|p| self.background.value(p)).collect();
        for (c, d) in system.curves.iter().zip(&self.densities) {
            for (o, v) in out.iter_mut().zip(neumann_layer_eval(disk, c, d, points)?) {
                *o -= v;
            }
        }
        Ok(out)
    }
}

/// Block `∂_{ν_i} R_j` on the stacked nodes.
fn regular_block(disk: &DiskDomain, system: &MultiSystem) -> Result<DMatrix<f64>> {
    let n = system.total_nodes();
    let mut r = DMatrix::zeros(n, n);
    for (i, ci) in system.curves.iter().enumerate() {
        for (j, cj) in system.curves.iter().enumerate() {
            let b = if i == j {
                regular_part_matrix(disk, ci)?
            } else {
                regular_part_cross_matrix(disk, ci, cj)?
            };
            r.view_mut((system.offsets[i], system.offsets[j]), b.entries.shape())
                .copy_from(&b.entries);
        }
    }
    Ok(r)
}

/// Neumann problem on a disk Ω with several inclusions:
/// row i reads `(λ_i − K*_i)φ_i − Σ_{j≠i} ∂_{ν_i}S_j φ_j + Σ_j ∂_{ν_i}R_j φ_j = ∂_{ν_i}U`.
pub fn solve_multi_bvp(
    disk: &DiskDomain,
    system: &MultiSystem,
    g: &NeumannData,
    options: &BvpOptions,
) -> Result<MultiBvpReport> {
    for c in &system.curves {
        disk.check_interior(c)?;
    }
    let background = harmonic_u(disk, g);
    let op = system.kstar() - regular_block(disk, system)?;
    let a = system.scaled_system(&system.inverse_lambdas(), &op);
    let rhs = system.scaled_rhs(&system.stacked_flux(&background));
    let (c, residual, sigma_min, sigma_max) = dense_solve(&a, &rhs, options.resonance_tol)?;
    let densities = system.split(&system.basis.lift(&c));
    let boundary_nodes = disk.boundary_nodes(options.n_outer);
    let mut boundary_trace: Vec<C64> = boundary_nodes.iter().map(|p| background.value(p)).collect();
    for (curve, d) in system.curves.iter().zip(&densities) {
        for (o, v) in boundary_trace
            .iter_mut()
            .zip(neumann_layer_eval(disk, curve, d, &boundary_nodes)?)
        {
            *o -= v;
        }
    }
    Ok(MultiBvpReport {
        conductivities: system.conductivities.clone(),
        densities,
        background,
        boundary_nodes,
        boundary_trace,
        residual,
        sigma_min,
        sigma_max,
    })
}

/// Outcome of the two-disk solvability test `λ(k₁)λ(k₂) ≠ (½e^{−2nξ₀})²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolvabilityReport {
    pub admissible: bool,
    /// Mode with the smallest gap.
    pub nearest_n: usize,
    /// min_n |λ(k₁)λ(k₂) − ¼e^{−4nξ₀}|.
    pub gap: f64,
}

/// Relative gap below which a pair is reported inadmissible.
pub const SOLVABILITY_TOL: f64 = 1e-12;

pub fn two_disk_solvability_check(
    k1: &Conductivity,
    k2: &Conductivity,
    xi0: f64,
    n_max: usize,
) -> Result<SolvabilityReport> {
    if !(xi0 > 0.0) || n_max == 0 {
        return Err(NpError::InvalidParameter(format!(
            "need xi0 > 0 and n_max >= 1 (xi0 = {xi0}, n_max = {n_max})"
        )));
    }
    let inv = k1.inverse_lambda()? * k2.inverse_lambda()?;
    if inv == C64::new(0.0, 0.0) {
        return Ok(SolvabilityReport {
            admissible: true,
            nearest_n: 1,
            gap: f64::INFINITY,
        });
    }
    let product = 1.0 / inv;
    let mut best = (1, f64::INFINITY, true);
    for n in 1..=n_max {
        let target = 0.25 * (-4.0 * n as f64 * xi0).exp();
        let gap = (product - target).norm();
        if gap < best.1 {
            best = (n, gap, gap > SOLVABILITY_TOL * target);
        }
        if gap <= SOLVABILITY_TOL * target {
            best.2 = false;
        }
    }
    Ok(SolvabilityReport {
        admissible: best.2,
        nearest_n: best.0,
        gap: best.1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockNormRow {
    pub lambdas: Vec<C64>,
    /// ‖(I − 𝔻(Λ)⁻¹𝕂*)⁻¹‖ in the block H-norm; NaN when singular.
    pub norm: f64,
    pub sigma_min: f64,
}

/// Block resolvent norms over a grid of Λ = (λ_1, …, λ_M).
pub fn block_resolvent_norm_sweep(
    system: &MultiSystem,
    decomposition: &SpectralDecomposition,
    lambda_grid: &[Vec<C64>],
) -> Result<Vec<BlockNormRow>> {
    lambda_grid
        .iter()
        .map(|lambdas| {
            if lambdas.len() != system.len() || lambdas.iter().any(|l| l.norm() == 0.0) {
                return Err(NpError::InvalidParameter(
                    "each grid point needs one nonzero λ per inclusion".into(),
                ));
            }
            let mus: Vec<C64> = lambdas.iter().map(|l| 1.0 / l).collect();
            let a = system.system_matrix_for(&mus);
            let (sigma_min, _) = singular_range(&a);
            let norm = match a.try_inverse() {
                Some(inv) => decomposition.h_operator_norm(&inv),
                None => {
                    log::warn!("block system singular at Λ = {lambdas:?}");
                    f64::NAN
                }
            };
            Ok(BlockNormRow {
                lambdas: lambdas.clone(),
                norm,
                sigma_min,
            })
        })
        .collect()
}

/// Σ_j |k_j − s_j| / ((1 + |k_j|)(1 + |s_j|)).
pub fn block_contrast_gap(k: &[Conductivity], s: &[Conductivity]) -> f64 {
    k.iter().zip(s).map(|(a, b)| contrast_gap(a, b)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockLipschitzRow {
    pub difference: f64,
    pub gap: f64,
    pub quotient: f64,
}

/// ‖(I − 𝔻(λ(k))⁻¹𝕂*)⁻¹ − (I − 𝔻(λ(s))⁻¹𝕂*)⁻¹‖_H against the block contrast gap.
pub fn block_lipschitz_quotients(
    system: &MultiSystem,
    decomposition: &SpectralDecomposition,
    pairs: &[(Vec<Conductivity>, Vec<Conductivity>)],
) -> Result<Vec<BlockLipschitzRow>> {
    let inverse = |ks: &[Conductivity]| -> Result<DMatrix<C64>> {
        let mus = ks.iter().map(|k| k.inverse_lambda()).collect::<Result<Vec<_>>>()?;
        system
            .system_matrix_for(&mus)
            .try_inverse()
            .ok_or_else(|| NpError::SolverFailure("block system is singular".into()))
    };
    pairs
        .iter()
        .map(|(k, s)| {
            if k.len() != system.len() || s.len() != system.len() {
                return Err(NpError::InvalidParameter("conductivity count mismatch".into()));
            }
            let difference = decomposition.h_operator_norm(&(inverse(k)? - inverse(s)?));
            let gap = block_contrast_gap(k, s);
            Ok(BlockLipschitzRow {
                difference,
                gap,
                quotient: if gap > 0.0 { difference / gap } else { 0.0 },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::solve_neumann_bvp;
    use crate::geometry::{make_curve, CurveShape};
    use crate::spectral::symmetrized_spectrum;
    use crate::transmission::solve_free_space_direct;
    use approx::assert_abs_diff_eq;

    fn two_disks(n: usize, c: f64) -> Vec<BoundaryCurve> {
        vec![
            make_curve(CurveShape::circle([-c, 0.0], 1.0), n).unwrap(),
            make_curve(CurveShape::circle([c, 0.0], 1.0), n).unwrap(),
        ]
    }

    #[test]
    fn single_block_reduces_to_single_inclusion() {
        let curve = make_curve(CurveShape::ellipse([0.0, 0.0], 1.5, 1.0), 64).unwrap();
        let k = Conductivity::complex(3.0, 0.5);
        let sys = assemble_multi(vec![curve.clone()], vec![k]).unwrap();
        assert_eq!(sys.kstar(), &np_matrix(&curve).entries);
        let src = HarmonicSource::linear_x();
        let rep = solve_multi_free_space(&sys, &src, &MultiOptions::default()).unwrap();
        let dec = symmetrized_spectrum(&curve, None).unwrap();
        let direct = solve_free_space_direct(&dec, &curve, &k, &src).unwrap();
        assert!((&rep.densities[0] - &direct.density).norm() < 1e-10 * direct.density.norm());
        assert!(rep.residual < 1e-12);
    }

    #[test]
    fn two_disk_spectrum_contains_bipolar_values() {
        let sys = assemble_multi(two_disks(128, 2.0), vec![Conductivity::real(3.0); 2]).unwrap();
        let dec = sys.spectrum().unwrap();
        let xi0 = 2f64.acosh();
        for n in 1..=2 {
            let t = 0.5 * (-2.0 * n as f64 * xi0).exp();
            for target in [t, -t] {
                let near = dec
                    .eigenvalues()
                    .iter()
                    .map(|e| (e - target).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(near < 1e-6 * t, "n={n}: {near}");
            }
        }
        assert!(dec.eigenvalues().iter().all(|e| e.abs() < 0.5));
        assert_abs_diff_eq!(dec.eigenvalues()[0].abs(), 0.5 * (7.0 - 4.0 * 3f64.sqrt()), epsilon = 1e-9);
    }

    #[test]
    fn spectrum_decays_with_separation() {
        let near = assemble_multi(two_disks(64, 1.5), vec![Conductivity::real(2.0); 2]).unwrap();
        let far = assemble_multi(two_disks(64, 6.0), vec![Conductivity::real(2.0); 2]).unwrap();
        let a = near.spectrum().unwrap().eigenvalues()[0].abs();
        let b = far.spectrum().unwrap().eigenvalues()[0].abs();
        assert!(b < a && b < 0.01, "{a} {b}");
    }

    #[test]
    fn trivial_contrasts_give_zero_density() {
        let sys = assemble_multi(two_disks(32, 2.0), vec![Conductivity::real(1.0); 2]).unwrap();
        let rep = solve_multi_free_space(&sys, &HarmonicSource::linear_x(), &MultiOptions::default()).unwrap();
        assert!(rep.densities.iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn mixed_theta_plus_pair_is_solvable() {
        let ks = vec![Conductivity::real(2.0), Conductivity::complex(-1.0, 1.0)];
        assert!(theta_tag(&ks, 1.0).in_theta_plus);
        let sys = assemble_multi(two_disks(64, 2.0), ks).unwrap();
        let rep = solve_multi_free_space(&sys, &HarmonicSource::linear_x(), &MultiOptions::default()).unwrap();
        assert!(rep.residual < 1e-9);
    }

    #[test]
    fn equal_contrasts_match_spectral_path() {
        let k = Conductivity::complex(4.0, 1.0);
        let sys = assemble_multi(two_disks(64, 2.0), vec![k; 2]).unwrap();
        let dec = sys.spectrum().unwrap();
        let src = HarmonicSource::linear_y();
        let direct = solve_multi_free_space(&sys, &src, &MultiOptions::default()).unwrap();
        let spectral = solve_multi_spectral(&sys, &dec, &src, 1e-8).unwrap();
        for (a, b) in direct.densities.iter().zip(&spectral) {
            assert!((a - b).norm() < 1e-10 * a.norm());
        }
    }

    #[test]
    fn theta_tags() {
        let t = theta_tag(&[Conductivity::complex(-1.0, 0.0)], 1.0);
        assert!(!t.in_theta_plus && !t.in_theta_minus);
        let t = theta_tag(&[Conductivity::complex(2.0, 0.0), Conductivity::complex(1.0, -1.0)], 1.0);
        assert!(!t.in_theta_plus && t.in_theta_minus);
        let t = theta_tag(&[Conductivity::complex(-3.0, 1.0)], 1.0);
        assert!(t.in_theta_plus && !t.in_theta_l);
        assert!(!theta_tag(&[Conductivity::complex(-3.0, 1.0)], 0.5).in_theta_l);
        assert!(theta_tag(&[Conductivity::complex(-1.0, 3.0)], 1.0).in_theta_l);
    }

    #[test]
    fn solvability_check_examples() {
        let xi0 = 2f64.acosh();
        let same_sign = two_disk_solvability_check(
            &Conductivity::complex(-1.0, 0.3),
            &Conductivity::complex(-0.5, 2.0),
            xi0,
            20,
        )
        .unwrap();
        assert!(same_sign.admissible);
        assert!(two_disk_solvability_check(&Conductivity::real(0.2), &Conductivity::real(7.0), xi0, 20)
            .unwrap()
            .admissible);
        let lam = 0.5 * (7.0 - 4.0 * 3f64.sqrt());
        let k = Conductivity::real((2.0 * lam + 1.0) / (2.0 * lam - 1.0));
        let rep = two_disk_solvability_check(&k, &k, xi0, 5).unwrap();
        assert!(!rep.admissible);
        assert_eq!(rep.nearest_n, 1);
    }

    #[test]
    fn inadmissible_pair_makes_block_system_singular() {
        let lam = 0.5 * (7.0 - 4.0 * 3f64.sqrt());
        let k = Conductivity::real((2.0 * lam + 1.0) / (2.0 * lam - 1.0));
        let sys = assemble_multi(two_disks(64, 2.0), vec![k; 2]).unwrap();
        let (lo, hi) = singular_range(&sys.system_matrix());
        assert!(lo < 1e-9 * hi, "{lo} {hi}");
        assert!(matches!(
            solve_multi_free_space(&sys, &HarmonicSource::linear_x(), &MultiOptions::default()),
            Err(NpError::NearResonance { .. })
        ));
    }

    #[test]
    fn single_block_norm_matches_scalar_formula() {
        let curve = make_curve(CurveShape::circle([0.0, 0.0], 1.0), 32).unwrap();
        let sys = assemble_multi(vec![curve], vec![Conductivity::real(2.0)]).unwrap();
        let dec = sys.spectrum().unwrap();
        let grid = vec![vec![C64::new(0.7, 0.2)], vec![C64::new(-3.0, 0.0)]];
        for row in block_resolvent_norm_sweep(&sys, &dec, &grid).unwrap() {
            let l = row.lambdas[0];
            let expected = dec
                .eigenvalues()
                .iter()
                .map(|t| (1.0 / (1.0 - t / l)).norm())
                .fold(0.0, f64::max);
            assert_abs_diff_eq!(row.norm, expected, epsilon = 1e-10);
            assert_abs_diff_eq!(row.norm, l.norm() / dec.distance_to_spectrum(l), epsilon = 1e-10);
        }
    }

    #[test]
    fn single_block_bvp_matches_single_solver() {
        let disk = DiskDomain::new(1.0).unwrap();
        let curve = make_curve(CurveShape::ellipse([0.1, -0.1], 0.3, 0.2), 64).unwrap();
        let k = Conductivity::complex(3.0, 1.0);
        let g = NeumannData::cos(2);
        let one = solve_neumann_bvp(&disk, &curve, &k, &g, &BvpOptions::default()).unwrap();
        let sys = assemble_multi(vec![curve], vec![k]).unwrap();
        let many = solve_multi_bvp(&disk, &sys, &g, &BvpOptions::default()).unwrap();
        for (a, b) in one.boundary_trace.iter().zip(&many.boundary_trace) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn lipschitz_quotients_are_bounded() {
        let sys = assemble_multi(two_disks(32, 2.0), vec![Conductivity::real(2.0); 2]).unwrap();
        let dec = sys.spectrum().unwrap();
        let pairs = vec![
            (
                vec![Conductivity::real(2.0), Conductivity::complex(3.0, 1.0)],
                vec![Conductivity::real(2.1), Conductivity::complex(3.0, 1.2)],
            ),
            (
                vec![Conductivity::complex(-1.0, 2.0), Conductivity::real(10.0)],
                vec![Conductivity::complex(-1.0, 2.5), Conductivity::real(50.0)],
            ),
        ];
        for row in block_lipschitz_quotients(&sys, &dec, &pairs).unwrap() {
            assert!(row.quotient.is_finite() && row.quotient < 100.0, "{row:?}");
        }
    }
}
