//! Smooth closed curves sampled at equispaced parameter values.
//!
//! Every curve is given by an analytic 2π-periodic parametrization `x(t)`,
//! oriented counterclockwise. Nodes sit at `t_j = 2πj/n` and carry the
//! trapezoid weights `2π/n · |x'(t_j)|`, which are spectrally accurate for
//! smooth periodic integrands.

use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::error::{NpError, Result};

pub type Vec2 = Vector2<f64>;

/// Analytic description of a curve.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveShape {
    Circle {
        center: Vec2,
        radius: f64,
    },
    /// Axis-aligned ellipse with semi-axis `a` along x and `b` along y.
    Ellipse {
        center: Vec2,
        a: f64,
        b: f64,
    },
    /// `r(t) = r0 + Σ_m (cos[m-1] cos mt + sin[m-1] sin mt)` around `center`.
    FourierStar {
        center: Vec2,
        r0: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
}

impl CurveShape {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        CurveShape::Circle {
            center: Vec2::new(center[0], center[1]),
            radius,
        }
    }

    pub fn ellipse(center: [f64; 2], a: f64, b: f64) -> Self {
        CurveShape::Ellipse {
            center: Vec2::new(center[0], center[1]),
            a,
            b,
        }
    }

    pub fn star(center: [f64; 2], r0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        CurveShape::FourierStar {
            center: Vec2::new(center[0], center[1]),
            r0,
            cos,
            sin,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CurveShape::Circle { .. } => "circle",
            CurveShape::Ellipse { .. } => "ellipse",
            CurveShape::FourierStar { .. } => "fourier-star",
        }
    }

    pub fn center(&self) -> Vec2 {
        match self {
            CurveShape::Circle { center, .. }
            | CurveShape::Ellipse { center, .. }
            | CurveShape::FourierStar { center, .. } => *center,
        }
    }

    /// The shape `scale · self + shift`.
    pub fn scaled_translated(&self, scale: f64, shift: Vec2) -> Self {
        match self {
            CurveShape::Circle { center, radius } => CurveShape::Circle {
                center: center * scale + shift,
                radius: radius * scale,
            },
            CurveShape::Ellipse { center, a, b } => CurveShape::Ellipse {
                center: center * scale + shift,
                a: a * scale,
                b: b * scale,
            },
            CurveShape::FourierStar {
                center,
                r0,
                cos,
                sin,
            } => CurveShape::FourierStar {
                center: center * scale + shift,
                r0: r0 * scale,
                cos: cos.iter().map(|c| c * scale).collect(),
                sin: sin.iter().map(|s| s * scale).collect(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(NpError::InvalidParameter(format!("{what} is not finite")))
            }
        };
        match self {
            CurveShape::Circle { center, radius } => {
                finite(center.x, "center")?;
                finite(center.y, "center")?;
                finite(*radius, "radius")?;
                if *radius <= 0.0 {
                    return Err(NpError::InvalidParameter(format!(
                        "circle radius must be positive, got {radius}"
                    )));
                }
            }
            CurveShape::Ellipse { center, a, b } => {
                finite(center.x, "center")?;
                finite(center.y, "center")?;
                finite(*a, "a")?;
                finite(*b, "b")?;
                if !(*b > 0.0 && a >= b) {
                    return Err(NpError::InvalidParameter(format!(
                        "ellipse semi-axes must satisfy a >= b > 0, got a={a}, b={b}"
                    )));
                }
            }
            CurveShape::FourierStar {
                center,
                r0,
                cos,
                sin,
            } => {
                finite(center.x, "center")?;
                finite(center.y, "center")?;
                finite(*r0, "r0")?;
                if cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
                    return Err(NpError::InvalidParameter(
                        "star coefficients must be finite".into(),
                    ));
                }
                let modes = cos.len().max(sin.len()).max(1);
                let samples = 256 * modes;
                let min_r = (0..samples)
                    .map(|j| self.star_radius(2.0 * PI * j as f64 / samples as f64).0)
                    .fold(f64::INFINITY, f64::min);
                if min_r <= 0.0 {
                    return Err(NpError::InvalidParameter(format!(
                        "star radius vanishes or turns negative (min {min_r:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// r(t), r'(t), r''(t) for the star kind.
    fn star_radius(&self, t: f64) -> (f64, f64, f64) {
        let CurveShape::FourierStar { r0, cos, sin, .. } = self else {
            unreachable!("star_radius on non-star shape")
        };
        let (mut r, mut dr, mut ddr) = (*r0, 0.0, 0.0);
        for (i, a) in cos.iter().enumerate() {
            let m = (i + 1) as f64;
            let (s, c) = (m * t).sin_cos();
            r += a * c;
            dr -= a * m * s;
            ddr -= a * m * m * c;
        }
        for (i, b) in sin.iter().enumerate() {
            let m = (i + 1) as f64;
            let (s, c) = (m * t).sin_cos();
            r += b * s;
            dr += b * m * c;
            ddr -= b * m * m * s;
        }
        (r, dr, ddr)
    }

    /// Position and first two derivatives of the parametrization at `t`.
    pub fn eval(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let (s, c) = t.sin_cos();
        match self {
            CurveShape::Circle { center, radius } => (
                center + Vec2::new(radius * c, radius * s),
                Vec2::new(-radius * s, radius * c),
                Vec2::new(-radius * c, -radius * s),
            ),
            CurveShape::Ellipse { center, a, b } => (
                center + Vec2::new(a * c, b * s),
                Vec2::new(-a * s, b * c),
                Vec2::new(-a * c, -b * s),
            ),
            CurveShape::FourierStar { center, .. } => {
                let (r, dr, ddr) = self.star_radius(t);
                let radial = Vec2::new(c, s);
                let angular = Vec2::new(-s, c);
                (
                    center + radial * r,
                    radial * dr + angular * r,
                    radial * (ddr - r) + angular * (2.0 * dr),
                )
            }
        }
    }

    pub fn point(&self, t: f64) -> Vec2 {
        self.eval(t).0
    }
}

/// A discretized curve with all per-node data used by Nyström quadrature.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    shape: CurveShape,
    params: Vec<f64>,
    nodes: Vec<Vec2>,
    tangents: Vec<Vec2>,
    normals: Vec<Vec2>,
    speeds: Vec<f64>,
    weights: Vec<f64>,
    curvature: Vec<f64>,
    derivs: Vec<Vec2>,
}

/// Build a curve with `n_nodes` equispaced parameter nodes.
pub fn make_curve(shape: CurveShape, n_nodes: usize) -> Result<BoundaryCurve> {
    BoundaryCurve::new(shape, n_nodes)
}

/// The same analytic curve with `factor` times as many nodes.
pub fn refine(curve: &BoundaryCurve, factor: usize) -> Result<BoundaryCurve> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(NpError::InvalidParameter(format!(
            "refinement factor must be a power of two, got {factor}"
        )));
    }
    BoundaryCurve::new(curve.shape.clone(), curve.len() * factor)
}

impl BoundaryCurve {
    pub fn new(shape: CurveShape, n_nodes: usize) -> Result<Self> {
        if n_nodes < 16 || !n_nodes.is_multiple_of(2) {
            return Err(NpError::InvalidParameter(format!(
                "n_nodes must be even and at least 16, got {n_nodes}"
            )));
        }
        shape.validate()?;

        let h = 2.0 * PI / n_nodes as f64;
        let mut curve = BoundaryCurve {
            shape,
            params: Vec::with_capacity(n_nodes),
            nodes: Vec::with_capacity(n_nodes),
            tangents: Vec::with_capacity(n_nodes),
            normals: Vec::with_capacity(n_nodes),
            speeds: Vec::with_capacity(n_nodes),
            weights: Vec::with_capacity(n_nodes),
            curvature: Vec::with_capacity(n_nodes),
            derivs: Vec::with_capacity(n_nodes),
        };
        for j in 0..n_nodes {
            let t = h * j as f64;
            let (x, dx, ddx) = curve.shape.eval(t);
            let speed = dx.norm();
            if speed <= 0.0 || !speed.is_finite() {
                return Err(NpError::InvalidParameter(format!(
                    "degenerate parametrization at t = {t}"
                )));
            }
            let tangent = dx / speed;
            curve.params.push(t);
            curve.nodes.push(x);
            curve.tangents.push(tangent);
            curve.normals.push(Vec2::new(tangent.y, -tangent.x));
            curve.speeds.push(speed);
            curve.weights.push(h * speed);
            curve
                .curvature
                .push((dx.x * ddx.y - dx.y * ddx.x) / speed.powi(3));
            curve.derivs.push(dx);
        }
        if curve.signed_area() <= 0.0 {
            return Err(NpError::InvalidParameter(
                "curve is not counterclockwise".into(),
            ));
        }
        Ok(curve)
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn tangents(&self) -> &[Vec2] {
        &self.tangents
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    /// x'(t_j) at each node.
    pub fn derivatives(&self) -> &[Vec2] {
        &self.derivs
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Area enclosed, from the trapezoid rule applied to ½∮(x dy − y dx).
    pub fn signed_area(&self) -> f64 {
        let h = 2.0 * PI / self.len() as f64;
        0.5 * h
            * self
                .nodes
                .iter()
                .zip(&self.derivs)
                .map(|(x, dx)| x.x * dx.y - x.y * dx.x)
                .sum::<f64>()
    }

    /// Largest distance between consecutive nodes.
    pub fn node_spacing(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|j| (self.nodes[(j + 1) % n] - self.nodes[j]).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest distance from `p` to any node.
    pub fn distance_to_nodes(&self, p: &Vec2) -> f64 {
        self.nodes
            .iter()
            .map(|x| (x - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number of the discretized curve around `p`.
    pub fn winding_number(&self, p: &Vec2) -> i64 {
        let n = self.len();
        let mut total = 0.0;
        for j in 0..n {
            let a = self.nodes[j] - p;
            let b = self.nodes[(j + 1) % n] - p;
            total += (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
        }
        (total / (2.0 * PI)).round() as i64
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        self.winding_number(p) != 0
    }

    /// Largest distance from the shape center to a node.
    pub fn max_radius(&self) -> f64 {
        let c = self.shape.center();
        self.nodes.iter().map(|x| (x - c).norm()).fold(0.0, f64::max)
    }

    /// Discrete weighted integral Σ w_j f_j.
    pub fn integrate<T>(&self, values: &[T]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| *v * *w)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circle_perimeter_and_radius() {
        let c = make_curve(CurveShape::circle([0.0, 0.0], 1.0), 64).unwrap();
        assert_abs_diff_eq!(c.perimeter(), 2.0 * PI, epsilon = 1e-10);
        for x in c.nodes() {
            assert_abs_diff_eq!(x.norm(), 1.0, epsilon = 1e-14);
        }
        let shifted = make_curve(CurveShape::circle([0.3, -1.2], 2.5), 32).unwrap();
        for x in shifted.nodes() {
            assert_abs_diff_eq!((x - Vec2::new(0.3, -1.2)).norm(), 2.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn ellipse_curvature_at_vertex() {
        let c = make_curve(CurveShape::ellipse([0.0, 0.0], 2.0, 1.0), 128).unwrap();
        // Node 0 sits at (2, 0).
        assert_abs_diff_eq!(c.nodes()[0].x, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.curvature()[0], 2.0, epsilon = 1e-8);
        // Co-vertex (0, 1): curvature b/a².
        assert_abs_diff_eq!(c.curvature()[32], 0.25, epsilon = 1e-8);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(
            make_curve(CurveShape::circle([0.0, 0.0], -1.0), 64),
            Err(NpError::InvalidParameter(_))
        ));
        assert!(make_curve(CurveShape::ellipse([0.0, 0.0], 1.0, 2.0), 64).is_err());
        assert!(make_curve(CurveShape::circle([0.0, 0.0], 1.0), 63).is_err());
        assert!(make_curve(CurveShape::circle([0.0, 0.0], 1.0), 8).is_err());
        assert!(make_curve(CurveShape::star([0.0, 0.0], 1.0, vec![0.0, 1.2], vec![]), 64).is_err());
    }

    #[test]
    fn refine_by_powers_of_two() {
        let c = make_curve(CurveShape::circle([0.0, 0.0], 1.0), 32).unwrap();
        let f = refine(&c, 2).unwrap();
        assert_eq!(f.len(), 64);
        assert_abs_diff_eq!(f.perimeter(), c.perimeter(), epsilon = 1e-12);
        // Every other refined node coincides with an original node.
        for (j, x) in c.nodes().iter().enumerate() {
            assert_abs_diff_eq!((f.nodes()[2 * j] - x).norm(), 0.0, epsilon = 1e-15);
        }
        let e = make_curve(CurveShape::ellipse([0.0, 0.0], 2.0, 1.0), 64).unwrap();
        assert_eq!(refine(&e, 4).unwrap().len(), 256);
        assert!(matches!(refine(&e, 3), Err(NpError::InvalidParameter(_))));
    }

    #[test]
    fn geometric_invariants_for_all_kinds() {
        let shapes = [
            CurveShape::circle([1.0, 2.0], 0.7),
            CurveShape::ellipse([0.0, 0.0], 3.0, 1.0),
            CurveShape::star([0.0, 0.0], 1.0, vec![0.0, 0.1, 0.15], vec![0.05]),
        ];
        for shape in shapes {
            let c = make_curve(shape, 128).unwrap();
            for nu in c.normals() {
                assert_abs_diff_eq!(nu.norm(), 1.0, epsilon = 1e-12);
            }
            assert!(c.signed_area() > 0.0);
            // Perimeter against the refined value (spectral convergence).
            let fine = refine(&c, 4).unwrap();
            let rel = (c.perimeter() - fine.perimeter()).abs() / fine.perimeter();
            assert!(rel < 1e-10, "perimeter mismatch {rel:e}");
            // Normal points outward: x + εν is outside.
            let p = c.nodes()[5] + c.normals()[5] * 1e-3;
            assert!(!c.contains(&p));
            let q = c.nodes()[5] - c.normals()[5] * 1e-3;
            assert!(c.contains(&q));
        }
    }

    #[test]
    fn trapezoid_is_spectral_for_periodic_integrands() {
        let c = make_curve(CurveShape::circle([0.0, 0.0], 1.0), 64).unwrap();
        let f: Vec<f64> = c.params().iter().map(|t| t.cos().exp()).collect();
        // ∫₀^{2π} e^{cos t} dt = 2π I₀(1)
        let i0_1 = 1.266_065_877_752_008_4;
        assert_abs_diff_eq!(c.integrate(&f), 2.0 * PI * i0_1, epsilon = 1e-12);
    }

    #[test]
    fn ellipse_area_is_exact() {
        let c = make_curve(CurveShape::ellipse([0.5, 0.5], 2.0, 1.0), 64).unwrap();
        assert_abs_diff_eq!(c.signed_area(), 2.0 * PI, epsilon = 1e-12);
    }
}
