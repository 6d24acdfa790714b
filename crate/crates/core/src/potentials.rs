//! Nyström discretizations of the Laplace layer potentials in the plane.
//!
//! Matrices act on node values: the source quadrature weights are folded into
//! the entries, so `(M φ)_i ≈ ∫ k(x_i, y) φ(y) dσ(y)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{NpError, Result};
use crate::geometry::{BoundaryCurve, Vec2};
use crate::C64;

/// Complex density sampled at the nodes of a curve.
pub type Density = DVector<C64>;

/// Minimum distance, in node spacings, for plain-quadrature evaluation.
pub const MIN_SPACINGS: f64 = 3.0;

/// Dense real matrix acting on node values, target × source.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub entries: DMatrix<f64>,
}

impl OperatorMatrix {
    pub fn new(entries: DMatrix<f64>) -> Self {
        OperatorMatrix { entries }
    }

    pub fn target_len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn source_len(&self) -> usize {
        self.entries.ncols()
    }

    pub fn apply(&self, density: &Density) -> Density {
        let mut out = Density::zeros(self.target_len());
        for (i, row) in self.entries.row_iter().enumerate() {
            out[i] = row
                .iter()
                .zip(density.iter())
                .map(|(a, v)| v * *a)
                .sum();
        }
        out
    }
}

/// Γ(x) = (1/2π) ln|x|.
pub fn fundamental_solution(x: &Vec2) -> Result<f64> {
    let r = x.norm();
    if r == 0.0 {
        return Err(NpError::SingularPoint);
    }
    Ok(r.ln() / (2.0 * PI))
}

/// Product-quadrature weights `R_d` for `∫₀^{2π} ln(4 sin²((t−s)/2)) f(s) ds`
/// at `t = t_i`, indexed by `d = |i − j|`, for `n` equispaced nodes.
pub fn log_kernel_weights(n: usize) -> Vec<f64> {
    debug_assert!(n.is_multiple_of(2));
    let m = n / 2;
    let mf = m as f64;
    (0..n)
        .map(|d| {
            let t = PI * d as f64 / mf;
            let mut sum = 0.0;
            for p in 1..m {
                sum += (p as f64 * t).cos() / p as f64;
            }
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / mf * sum - PI / (mf * mf) * sign
        })
        .collect()
}

/// Single-layer matrix with spectrally accurate treatment of the log singularity.
pub fn single_layer_matrix(curve: &BoundaryCurve) -> OperatorMatrix {
    let n = curve.len();
    let r = log_kernel_weights(n);
    let h = 2.0 * PI / n as f64;
    let nodes = curve.nodes();
    let params = curve.params();
    let speeds = curve.speeds();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let smooth = if i == j {
                speeds[i].ln()
            } else {
                let dist = (nodes[i] - nodes[j]).norm();
                let half = 0.5 * (params[i] - params[j]);
                dist.ln() - 0.5 * (4.0 * half.sin().powi(2)).ln()
            };
            let d = i.abs_diff(j);
            s[(i, j)] = (0.5 * r[d] + h * smooth) * speeds[j] / (2.0 * PI);
        }
    }
    OperatorMatrix::new(s)
}

/// Nyström matrix of the Neumann–Poincaré operator K*.
pub fn np_matrix(curve: &BoundaryCurve) -> OperatorMatrix {
    let n = curve.len();
    let nodes = curve.nodes();
    let normals = curve.normals();
    let w = curve.weights();
    let kappa = curve.curvature();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = if i == j {
                kappa[i] / (4.0 * PI) * w[i]
            } else {
                let d = nodes[i] - nodes[j];
                d.dot(&normals[i]) / (2.0 * PI * d.norm_squared()) * w[j]
            };
        }
    }
    OperatorMatrix::new(k)
}

/// Matrix of K, the L²(∂D) adjoint of K*: `W⁻¹ (K*)ᵀ W`.
pub fn weighted_transpose(curve: &BoundaryCurve, kstar: &OperatorMatrix) -> OperatorMatrix {
    let w = curve.weights();
    let n = curve.len();
    let mut k = kstar.entries.transpose();
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] *= w[j] / w[i];
        }
    }
    OperatorMatrix::new(k)
}

fn check_clearance(curve: &BoundaryCurve, points: &[Vec2]) -> Result<()> {
    let minimum = MIN_SPACINGS * curve.node_spacing();
    for p in points {
        let distance = curve.distance_to_nodes(p);
        if distance <= minimum {
            return Err(NpError::TooCloseToBoundary { distance, minimum });
        }
    }
    Ok(())
}

/// S[φ] at points off the curve by plain quadrature.
pub fn single_layer_eval(
    curve: &BoundaryCurve,
    density: &Density,
    points: &[Vec2],
) -> Result<Vec<C64>> {
    check_clearance(curve, points)?;
    let w = curve.weights();
    Ok(points
        .iter()
        .map(|p| {
            curve
                .nodes()
                .iter()
                .zip(w)
                .zip(density.iter())
                .map(|((y, wj), phi)| phi * ((p - y).norm().ln() * wj))
                .sum::<C64>()
                / (2.0 * PI)
        })
        .collect())
}

/// ∇S[φ] at points off the curve by plain quadrature.
pub fn single_layer_gradient_eval(
    curve: &BoundaryCurve,
    density: &Density,
    points: &[Vec2],
) -> Result<Vec<[C64; 2]>> {
    check_clearance(curve, points)?;
    let w = curve.weights();
    Ok(points
        .iter()
        .map(|p| {
            let mut g = [C64::new(0.0, 0.0); 2];
            for ((y, wj), phi) in curve.nodes().iter().zip(w).zip(density.iter()) {
                let d = p - y;
                let f = wj / (2.0 * PI * d.norm_squared());
                g[0] += phi * (d.x * f);
                g[1] += phi * (d.y * f);
            }
            g
        })
        .collect())
}

/// D[f](x) = ∫ (y−x)·ν_y / (2π|x−y|²) f(y) dσ(y) at points off the curve.
pub fn double_layer_eval(
    curve: &BoundaryCurve,
    values: &Density,
    points: &[Vec2],
) -> Result<Vec<C64>> {
    check_clearance(curve, points)?;
    let w = curve.weights();
    let normals = curve.normals();
    Ok(points
        .iter()
        .map(|p| {
            curve
                .nodes()
                .iter()
                .enumerate()
                .map(|(j, y)| {
                    let d = y - p;
                    values[j] * (d.dot(&normals[j]) / (2.0 * PI * d.norm_squared()) * w[j])
                })
                .sum()
        })
        .collect())
}

/// Smallest node-to-node distance between two curves.
pub fn curve_gap(a: &BoundaryCurve, b: &BoundaryCurve) -> f64 {
    a.nodes()
        .iter()
        .map(|x| b.distance_to_nodes(x))
        .fold(f64::INFINITY, f64::min)
}

/// Fails unless the curves are mutually exterior and separated by at least
/// three node spacings.
pub fn check_separated(a: &BoundaryCurve, b: &BoundaryCurve) -> Result<()> {
    let minimum = MIN_SPACINGS * a.node_spacing().max(b.node_spacing());
    let gap = curve_gap(a, b);
    let nested = a.contains(&b.nodes()[0]) || b.contains(&a.nodes()[0]);
    if gap <= minimum || nested {
        return Err(NpError::CurvesTooClose {
            gap: if nested { 0.0 } else { gap },
            minimum,
        });
    }
    Ok(())
}

/// Matrix of φ ↦ ∂_{ν_target} S_source[φ] on the target nodes.
pub fn cross_normal_matrix(target: &BoundaryCurve, source: &BoundaryCurve) -> Result<OperatorMatrix> {
    check_separated(target, source)?;
    let (m, n) = (target.len(), source.len());
    let w = source.weights();
    let mut k = DMatrix::zeros(m, n);
    for (i, (x, nu)) in target.nodes().iter().zip(target.normals()).enumerate() {
        for (j, y) in source.nodes().iter().enumerate() {
            let d = x - y;
            k[(i, j)] = d.dot(nu) / (2.0 * PI * d.norm_squared()) * w[j];
        }
    }
    Ok(OperatorMatrix::new(k))
}

/// Matrix of φ ↦ S_source[φ] restricted to the target nodes.
pub fn cross_single_layer_matrix(
    target: &BoundaryCurve,
    source: &BoundaryCurve,
) -> Result<OperatorMatrix> {
    check_separated(target, source)?;
    let (m, n) = (target.len(), source.len());
    let w = source.weights();
    let mut s = DMatrix::zeros(m, n);
    for (i, x) in target.nodes().iter().enumerate() {
        for (j, y) in source.nodes().iter().enumerate() {
            s[(i, j)] = (x - y).norm().ln() / (2.0 * PI) * w[j];
        }
    }
    Ok(OperatorMatrix::new(s))
}

/// Solve `S[ψ] + a = f`, `⟨ψ, 1⟩ = b` for the pair `(ψ, a)`.
pub fn augmented_single_layer_solve(
    curve: &BoundaryCurve,
    f: &Density,
    b: C64,
) -> Result<(Density, C64)> {
    let n = curve.len();
    if f.len() != n {
        return Err(NpError::InvalidParameter(format!(
            "boundary data has {} values, curve has {n} nodes",
            f.len()
        )));
    }
    let s = single_layer_matrix(curve);
    let mut a = DMatrix::<C64>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = C64::new(s.entries[(i, j)], 0.0);
        }
        a[(i, n)] = C64::new(1.0, 0.0);
        a[(n, i)] = C64::new(curve.weights()[i], 0.0);
    }
    let mut rhs = DVector::<C64>::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from(f);
    rhs[n] = b;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| NpError::SolverFailure("augmented single-layer system is singular".into()))?;
    let psi = sol.rows(0, n).into_owned();
    let constant = sol[n];

    let residual = (s.apply(&psi).add_scalar(constant) - f).norm();
    if residual > 1e-10 * f.norm().max(b.norm()).max(1e-300) && residual > 1e-13 {
        return Err(NpError::SolverFailure(format!(
            "augmented single-layer residual {residual:.3e}"
        )));
    }
    Ok((psi, constant))
}

/// Equilibrium density: `S[φ] = const` on the curve with `⟨φ, 1⟩ = 1`.
/// It spans the K*-eigenspace for the eigenvalue 1/2.
pub fn equilibrium_density(curve: &BoundaryCurve) -> Result<Density> {
    let zero = Density::zeros(curve.len());
    augmented_single_layer_solve(curve, &zero, C64::new(1.0, 0.0)).map(|(psi, _)| psi)
}

/// Weighted mean `Σ w_j φ_j / Σ w_j`.
pub fn weighted_mean(curve: &BoundaryCurve, density: &Density) -> C64 {
    let total: C64 = density
        .iter()
        .zip(curve.weights())
        .map(|(v, w)| v * *w)
        .sum();
    total / curve.perimeter()
}

/// Remove the weighted mean so that `Σ w_j φ_j = 0`.
pub fn project_mean_zero(curve: &BoundaryCurve, density: &Density) -> Density {
    let mean = weighted_mean(curve, density);
    density.map(|v| v - mean)
}

/// Weighted L² norm on the curve.
pub fn l2_norm(weights: &[f64], density: &Density) -> f64 {
    density
        .iter()
        .zip(weights)
        .map(|(v, w)| v.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}
