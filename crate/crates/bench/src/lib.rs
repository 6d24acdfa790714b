//! Fixtures shared by the benchmarks.

use np_core::{make_curve, BoundaryCurve, CurveShape};

/// Smooth non-symmetric test curve r = 1 + 0.15 cos 3t + 0.1 sin 4t.
pub fn lopsided_star(n: usize) -> BoundaryCurve {
    make_curve(
        CurveShape::star([0.0, 0.0], 1.0, vec![0.0, 0.0, 0.15], vec![0.0, 0.0, 0.0, 0.1]),
        n,
    )
    .expect("valid star")
}

/// Two unit disks centred at (±2, 0).
pub fn disk_pair(n: usize) -> Vec<BoundaryCurve> {
    [-2.0, 2.0]
        .iter()
        .map(|&x| make_curve(CurveShape::circle([x, 0.0], 1.0), n).expect("valid circle"))
        .collect()
}
