//! Generalized polarization tensors and the small-inclusion expansion of the
//! boundary perturbation `u_k − U` on ∂Ω.

use std::collections::BTreeMap;

use crate::bvp::{harmonic_u, solve_neumann_bvp, BvpOptions, NeumannData};
use crate::error::{NpError, Result};
use crate::geometry::{make_curve, BoundaryCurve, CurveShape, Vec2};
use crate::neumann::DiskDomain;
use crate::potentials::{equilibrium_density, Density};
use crate::spectral::{resolvent_apply, Conductivity, SpectralDecomposition};
use crate::C64;

pub type MultiIndex = [usize; 2];

/// All multi-indices of total order `n`, in lexicographic order of α₂.
pub fn multi_indices(n: usize) -> Vec<MultiIndex> {
    (0..=n).map(|j| [n - j, j]).collect()
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|j| j as f64).product()
}

fn index_factorial(a: MultiIndex) -> f64 {
    factorial(a[0]) * factorial(a[1])
}

fn monomial(p: &Vec2, a: MultiIndex) -> f64 {
    p.x.powi(a[0] as i32) * p.y.powi(a[1] as i32)
}

/// ∂_ν x^α at the nodes of `curve`.
fn monomial_flux(curve: &BoundaryCurve, a: MultiIndex) -> Density {
    Density::from_iterator(
        curve.len(),
        curve.nodes().iter().zip(curve.normals()).map(|(p, nu)| {
            let dx = if a[0] > 0 {
                a[0] as f64 * p.x.powi(a[0] as i32 - 1) * p.y.powi(a[1] as i32)
            } else {
                0.0
            };
            let dy = if a[1] > 0 {
                a[1] as f64 * p.x.powi(a[0] as i32) * p.y.powi(a[1] as i32 - 1)
            } else {
                0.0
            };
            C64::new(dx * nu.x + dy * nu.y, 0.0)
        }),
    )
}

/// m_{αβ}(k, B) for 1 ≤ |α| and |α| + |β| ≤ `max_order`, with the densities φ_{k,α}.
#[derive(Debug, Clone)]
pub struct GptTable {
    pub conductivity: Conductivity,
    pub max_order: usize,
    entries: BTreeMap<(MultiIndex, MultiIndex), C64>,
    densities: BTreeMap<MultiIndex, Density>,
}

impl GptTable {
    pub fn get(&self, alpha: MultiIndex, beta: MultiIndex) -> Option<C64> {
        self.entries.get(&(alpha, beta)).copied()
    }

    pub fn density(&self, alpha: MultiIndex) -> Option<&Density> {
        self.densities.get(&alpha)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(MultiIndex, MultiIndex), &C64)> {
        self.entries.iter()
    }

    /// First-order polarization tensor `M_ij = m_{e_i e_j}`.
    pub fn polarization_tensor(&self) -> [[C64; 2]; 2] {
        let e = [[1, 0], [0, 1]];
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = self.get(e[i], e[j]).unwrap_or_default();
            }
        }
        m
    }
}

/// Solve `(λ − K*) φ_α = ∂_ν x^α` for each α and integrate against x^β.
///
/// For non-harmonic x^α the flux has nonzero mean. That part is carried by
/// the equilibrium density φ_e (K* φ_e = φ_e/2, ∫φ_e = 1), so
/// `φ_α = (λ − K*)⁻¹[f − c φ_e] + c/(λ − ½) φ_e` with `c = ∫ f`.
pub fn compute_gpt(
    decomposition: &SpectralDecomposition,
    curve: &BoundaryCurve,
    k: &Conductivity,
    max_order: usize,
    eps: f64,
) -> Result<GptTable> {
    if max_order < 1 {
        return Err(NpError::InvalidParameter("max_order must be at least 1".into()));
    }
    let mut entries = BTreeMap::new();
    let mut densities = BTreeMap::new();
    let trivial = k.is_trivial();
    let lambda = if trivial { C64::new(0.0, 0.0) } else { k.lambda()? };
    let mut equilibrium: Option<Density> = None;
    for order in 1..=max_order {
        for alpha in multi_indices(order) {
            let phi = if trivial {
                Density::zeros(curve.len())
            } else {
                let f = monomial_flux(curve, alpha);
                let c: C64 = curve.integrate(f.as_slice());
                if c.norm() > 1e-12 * f.norm() * curve.perimeter() {
                    if equilibrium.is_none() {
                        equilibrium = Some(equilibrium_density(curve)?);
                    }
                    let eq = equilibrium.as_ref().unwrap();
                    let half = C64::new(0.5, 0.0);
                    if (lambda - half).norm() < eps {
                        return Err(NpError::LambdaOnSpectrum {
                            lambda,
                            distance: (lambda - half).norm(),
                            required: eps,
                        });
                    }
                    let f0 = &f - eq * c;
                    resolvent_apply(decomposition, lambda, &f0, eps)? + eq * (c / (lambda - half))
                } else {
                    resolvent_apply(decomposition, lambda, &f, eps)?
                }
            };
            for border in 0..=(max_order - order) {
                for beta in multi_indices(border) {
                    let vals: Vec<C64> = curve
                        .nodes()
                        .iter()
                        .zip(phi.iter())
                        .map(|(p, v)| v * monomial(p, beta))
                        .collect();
                    entries.insert((alpha, beta), curve.integrate(&vals));
                }
            }
            densities.insert(alpha, phi);
        }
    }
    Ok(GptTable {
        conductivity: *k,
        max_order,
        entries,
        densities,
    })
}

/// D = δB + z inside the disk Ω, with clearance c₀.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionPlacement {
    pub reference: CurveShape,
    pub delta: f64,
    pub z: Vec2,
    pub c0: f64,
}

impl InclusionPlacement {
    pub fn new(disk: &DiskDomain, reference: CurveShape, delta: f64, z: Vec2, c0: f64) -> Result<Self> {
        if !(delta > 0.0) || !(c0 > 0.0) {
            return Err(NpError::PlacementInvalid(format!(
                "delta and c0 must be positive (delta = {delta}, c0 = {c0})"
            )));
        }
        let probe = make_curve(reference.clone(), 256)?;
        if !probe.contains(&Vec2::zeros()) {
            return Err(NpError::PlacementInvalid("reference domain must contain 0".into()));
        }
        let diameter = 2.0 * probe.nodes().iter().map(|p| p.norm()).fold(0.0, f64::max);
        let room = disk.radius() - z.norm();
        if delta * diameter + c0 >= room {
            return Err(NpError::PlacementInvalid(format!(
                "delta * diam(B) + c0 = {:.4} is not below dist(z, boundary) = {room:.4}",
                delta * diameter + c0
            )));
        }
        Ok(InclusionPlacement {
            reference,
            delta,
            z,
            c0,
        })
    }

    pub fn inclusion_shape(&self) -> CurveShape {
        self.reference.scaled_translated(self.delta, self.z)
    }

    pub fn inclusion_curve(&self, n: usize) -> Result<BoundaryCurve> {
        make_curve(self.inclusion_shape(), n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionOrder {
    /// −δ² ∇U(z) · M ∇_z N(x, z).
    First,
    /// −Σ_{n=2}^{3} Σ_{|α|+|β|=n} δⁿ/(α!β!) ∂^αU(z) m_{αβ} ∂_z^β N(x, z).
    High,
}

/// Predicted `u_k − U` at the given points of ∂Ω.
pub fn perturbation_expansion(
    disk: &DiskDomain,
    placement: &InclusionPlacement,
    table: &GptTable,
    g: &NeumannData,
    order: ExpansionOrder,
    points: &[Vec2],
) -> Result<Vec<C64>> {
    let needed = match order {
        ExpansionOrder::First => 2,
        ExpansionOrder::High => 3,
    };
    if table.max_order < needed {
        return Err(NpError::InvalidParameter(format!(
            "expansion needs GPTs up to order {needed}, table has {}",
            table.max_order
        )));
    }
    let u = harmonic_u(disk, g);
    let z = placement.z;
    let delta = placement.delta;
    let mut terms: Vec<(f64, C64, MultiIndex)> = Vec::new();
    match order {
        ExpansionOrder::First => {
            for alpha in multi_indices(1) {
                for beta in multi_indices(1) {
                    let m = table.get(alpha, beta).unwrap_or_default();
                    terms.push((delta * delta, u.derivative(&z, alpha) * m, beta));
                }
            }
        }
        ExpansionOrder::High => {
            for n in 2..=3 {
                for a in 1..=n {
                    for alpha in multi_indices(a) {
                        for beta in multi_indices(n - a) {
                            let m = table.get(alpha, beta).unwrap_or_default();
                            let w = delta.powi(n as i32) / (index_factorial(alpha) * index_factorial(beta));
                            terms.push((w, u.derivative(&z, alpha) * m, beta));
                        }
                    }
                }
            }
        }
    }
    Ok(points
        .iter()
        .map(|x| {
            -terms
                .iter()
                .map(|(w, c, beta)| c * (*w * disk.boundary_neumann_derivative(x, &z, *beta)))
                .sum::<C64>()
        })
        .collect())
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// exp of the mean of log(y / x^p): the intercept of a log-log fit with slope p.
pub fn fixed_slope_constant(xs: &[f64], ys: &[f64], p: f64) -> f64 {
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (y / x.powf(p)).ln()).sum();
    (s / xs.len() as f64).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub err_first: f64,
    pub err_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub conductivity: Conductivity,
    pub rows: Vec<ConvergenceRow>,
    pub slope_first: f64,
    pub slope_high: f64,
    /// C in err_first ≈ C δ³, least squares in log space with the slope fixed.
    pub constant_first: f64,
    /// C in err_high ≈ C δ⁴, fitted the same way.
    pub constant_high: f64,
    /// max over ∂Ω of |∇U(z)·M∇_zN(x, z)|, the leading term without its δ².
    pub leading_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    /// Nodes on the reference curve and on each scaled inclusion.
    pub n_nodes: usize,
    pub bvp: BvpOptions,
    pub c0: f64,
    pub eps: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            n_nodes: 128,
            bvp: BvpOptions::default(),
            c0: 0.1,
            eps: 1e-8,
        }
    }
}

/// Max-norm errors of both expansions against direct BVP solves over `deltas`.
pub fn convergence_study(
    disk: &DiskDomain,
    reference: &CurveShape,
    z: Vec2,
    k: &Conductivity,
    g: &NeumannData,
    deltas: &[f64],
    options: &StudyOptions,
) -> Result<ConvergenceReport> {
    if deltas.len() < 2 || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(NpError::InvalidParameter(
            "deltas must be a decreasing sequence of at least two values".into(),
        ));
    }
    let b = make_curve(reference.clone(), options.n_nodes)?;
    let dec = crate::spectral::symmetrized_spectrum(&b, None)?;
    let table = compute_gpt(&dec, &b, k, 3, options.eps)?;
    let mut rows = Vec::with_capacity(deltas.len());
    let mut leading_scale = 0.0;
    for &delta in deltas {
        let placement = InclusionPlacement::new(disk, reference.clone(), delta, z, options.c0)?;
        let d = placement.inclusion_curve(options.n_nodes)?;
        let rep = solve_neumann_bvp(disk, &d, k, g, &options.bvp)?;
        let first = perturbation_expansion(disk, &placement, &table, g, ExpansionOrder::First, &rep.boundary_nodes)?;
        let high = perturbation_expansion(disk, &placement, &table, g, ExpansionOrder::High, &rep.boundary_nodes)?;
        leading_scale = first.iter().map(|v| v.norm()).fold(0.0, f64::max) / (delta * delta);
        let mut err_first: f64 = 0.0;
        let mut err_high: f64 = 0.0;
        for (j, x) in rep.boundary_nodes.iter().enumerate() {
            let pert = rep.boundary_trace[j] - rep.background.value(x);
            err_first = err_first.max((pert - first[j]).norm());
            err_high = err_high.max((pert - high[j]).norm());
        }
        rows.push(ConvergenceRow {
            delta,
            err_first,
            err_high,
        });
    }
    let ds: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let e1: Vec<f64> = rows.iter().map(|r| r.err_first).collect();
    let e2: Vec<f64> = rows.iter().map(|r| r.err_high).collect();
    Ok(ConvergenceReport {
        conductivity: *k,
        slope_first: loglog_slope(&ds, &e1),
        slope_high: loglog_slope(&ds, &e2),
        constant_first: fixed_slope_constant(&ds, &e1, 3.0),
        constant_high: fixed_slope_constant(&ds, &e2, 4.0),
        leading_scale,
        rows,
    })
}
