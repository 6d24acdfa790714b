//! Closed-form Neumann function of a disk centred at the origin.
//!
//! `N(·, y)` satisfies `Δ N = −δ_y` in Ω, `∂_ν N = −1/|∂Ω|` on ∂Ω and has
//! zero mean over ∂Ω. It splits as `N = R − Γ` with a smooth regular part
//! `R(x, y) = −(1/4π) ln F(x, y) + ln(r_e)/π`, where
//! `F = |x|²|y|²/r_e² − 2x·y + r_e²` vanishes only at the image point.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{NpError, Result};
use crate::geometry::{BoundaryCurve, Vec2};
use crate::potentials::{check_separated, Density, OperatorMatrix, MIN_SPACINGS};
use crate::C64;

/// Disk Ω of radius `radius` centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskDomain {
    radius: f64,
}

impl DiskDomain {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(NpError::InvalidParameter(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        Ok(DiskDomain { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * PI * self.radius
    }

    /// Boundary point at angle θ.
    pub fn boundary_point(&self, theta: f64) -> Vec2 {
        Vec2::new(self.radius * theta.cos(), self.radius * theta.sin())
    }

    /// `n` equispaced boundary points starting at θ = 0.
    pub fn boundary_nodes(&self, n: usize) -> Vec<Vec2> {
        (0..n)
            .map(|j| self.boundary_point(2.0 * PI * j as f64 / n as f64))
            .collect()
    }

    fn image_term(&self, x: &Vec2, y: &Vec2) -> f64 {
        let r2 = self.radius * self.radius;
        x.norm_squared() * y.norm_squared() / r2 - 2.0 * x.dot(y) + r2
    }

    /// Neumann function N(x, y), x ≠ y.
    pub fn neumann(&self, x: &Vec2, y: &Vec2) -> f64 {
        self.regular_part(x, y) - (x - y).norm().ln() / (2.0 * PI)
    }

    /// Regular part R(x, y) = N(x, y) + Γ(x − y).
    pub fn regular_part(&self, x: &Vec2, y: &Vec2) -> f64 {
        -self.image_term(x, y).ln() / (4.0 * PI) + self.radius.ln() / PI
    }

    /// ∇ₓ R(x, y).
    pub fn regular_grad_x(&self, x: &Vec2, y: &Vec2) -> Vec2 {
        let f = self.image_term(x, y);
        let r2 = self.radius * self.radius;
        -(x * (y.norm_squared() / r2) - y) / (2.0 * PI * f)
    }

    /// ∇ₓ N(x, y).
    pub fn neumann_grad_x(&self, x: &Vec2, y: &Vec2) -> Vec2 {
        let d = x - y;
        self.regular_grad_x(x, y) - d / (2.0 * PI * d.norm_squared())
    }

    /// ∂^β_y N(x, y) for x on ∂Ω, where `N(x, ·) = −(1/π) ln|x − ·| + ln(r_e)/π`.
    /// Uses `ln|x − y| = Re log(x − y)` with `∂_{y₁} ↦ d/dy`, `∂_{y₂} ↦ i d/dy`.
    pub fn boundary_neumann_derivative(&self, x: &Vec2, y: &Vec2, beta: [usize; 2]) -> f64 {
        let order = beta[0] + beta[1];
        if order == 0 {
            return -(x - y).norm().ln() / PI + self.radius.ln() / PI;
        }
        let w = C64::new(x.x - y.x, x.y - y.y);
        // d^m/dy^m log(x − y) = −(m−1)!/(x − y)^m
        let fact: f64 = (1..order).map(|j| j as f64).product();
        let deriv = -fact / w.powu(order as u32);
        let rot = C64::i().powu(beta[1] as u32);
        -(rot * deriv).re / PI
    }

    /// Fails unless every node of `curve` lies inside Ω with clearance of at
    /// least three node spacings.
    pub fn check_interior(&self, curve: &BoundaryCurve) -> Result<()> {
        let minimum = MIN_SPACINGS * curve.node_spacing();
        for p in curve.nodes() {
            let clearance = self.radius - p.norm();
            if clearance <= minimum {
                return Err(NpError::InclusionNotInterior(format!(
                    "node ({:.4}, {:.4}) has clearance {clearance:.3e}, minimum {minimum:.3e}",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

/// Matrix of φ ↦ ∂_ν R_∂D[φ] on ∂D.
pub fn regular_part_matrix(disk: &DiskDomain, curve: &BoundaryCurve) -> Result<OperatorMatrix> {
    disk.check_interior(curve)?;
    Ok(regular_normal_block(disk, curve, curve))
}

/// Matrix of φ ↦ ∂_{ν_target} R_source[φ] on the target nodes.
pub fn regular_part_cross_matrix(
    disk: &DiskDomain,
    target: &BoundaryCurve,
    source: &BoundaryCurve,
) -> Result<OperatorMatrix> {
    disk.check_interior(target)?;
    disk.check_interior(source)?;
    check_separated(target, source)?;
    Ok(regular_normal_block(disk, target, source))
}

fn regular_normal_block(
    disk: &DiskDomain,
    target: &BoundaryCurve,
    source: &BoundaryCurve,
) -> OperatorMatrix {
    let w = source.weights();
    let mut m = DMatrix::zeros(target.len(), source.len());
    for (i, (x, nu)) in target.nodes().iter().zip(target.normals()).enumerate() {
        for (j, y) in source.nodes().iter().enumerate() {
            m[(i, j)] = disk.regular_grad_x(x, y).dot(nu) * w[j];
        }
    }
    OperatorMatrix::new(m)
}

/// N_∂D[φ] at points of Ω̄ away from ∂D.
pub fn neumann_layer_eval(
    disk: &DiskDomain,
    curve: &BoundaryCurve,
    density: &Density,
    points: &[Vec2],
) -> Result<Vec<C64>> {
    let minimum = MIN_SPACINGS * curve.node_spacing();
    let w = curve.weights();
    points
        .iter()
        .map(|p| {
            let distance = curve.distance_to_nodes(p);
            if distance <= minimum {
                return Err(NpError::TooCloseToBoundary { distance, minimum });
            }
            Ok(curve
                .nodes()
                .iter()
                .zip(w)
                .zip(density.iter())
                .map(|((y, wj), phi)| phi * (disk.neumann(p, y) * wj))
                .sum())
        })
        .collect()
}

/// ∇N_∂D[φ] at points of Ω̄ away from ∂D.
pub fn neumann_layer_gradient(
    disk: &DiskDomain,
    curve: &BoundaryCurve,
    density: &Density,
    points: &[Vec2],
) -> Result<Vec<[C64; 2]>> {
    let minimum = MIN_SPACINGS * curve.node_spacing();
    let w = curve.weights();
    points
        .iter()
        .map(|p| {
            let distance = curve.distance_to_nodes(p);
            if distance <= minimum {
                return Err(NpError::TooCloseToBoundary { distance, minimum });
            }
            let mut g = [C64::new(0.0, 0.0); 2];
            for ((y, wj), phi) in curve.nodes().iter().zip(w).zip(density.iter()) {
                let d = disk.neumann_grad_x(p, y) * *wj;
                g[0] += phi * d.x;
                g[1] += phi * d.y;
            }
            Ok(g)
        })
        .collect()
}
