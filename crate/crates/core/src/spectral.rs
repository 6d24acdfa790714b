//! Spectral theory of K* in the twisted inner product `⟨φ, ψ⟩_H = −⟨φ, S ψ⟩`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{NpError, Result};
use crate::geometry::BoundaryCurve;
use crate::linalg::{symmetrize, to_complex, MeanZeroBasis};
use crate::potentials::{np_matrix, single_layer_matrix, Density};
use crate::C64;

/// A conductivity value; `Infinite` is the perfectly conducting limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conductivity {
    Finite(C64),
    Infinite,
}

impl Conductivity {
    pub fn real(k: f64) -> Self {
        Conductivity::Finite(C64::new(k, 0.0))
    }

    pub fn complex(re: f64, im: f64) -> Self {
        Conductivity::Finite(C64::new(re, im))
    }

    pub fn value(&self) -> Option<C64> {
        match self {
            Conductivity::Finite(k) => Some(*k),
            Conductivity::Infinite => None,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, Conductivity::Finite(k) if *k == C64::new(1.0, 0.0))
    }

    /// λ(k) = (k + 1) / (2(k − 1)), with λ(∞) = 1/2.
    pub fn lambda(&self) -> Result<C64> {
        match self {
            Conductivity::Finite(k) => lambda_of_k(*k),
            Conductivity::Infinite => Ok(C64::new(0.5, 0.0)),
        }
    }

    /// 1/λ(k) = 2(k − 1)/(k + 1); zero for k = 1.
    pub fn inverse_lambda(&self) -> Result<C64> {
        match self {
            Conductivity::Finite(k) => {
                if *k == C64::new(-1.0, 0.0) {
                    return Err(NpError::InvalidParameter(
                        "k = -1 has lambda = 0".into(),
                    ));
                }
                Ok((k - 1.0) * 2.0 / (k + 1.0))
            }
            Conductivity::Infinite => Ok(C64::new(2.0, 0.0)),
        }
    }

    /// |k| with |∞| = ∞.
    pub fn modulus(&self) -> f64 {
        self.value().map_or(f64::INFINITY, |k| k.norm())
    }
}

impl std::fmt::Display for Conductivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Conductivity::Finite(k) => write!(f, "{}{:+}i", k.re, k.im),
            Conductivity::Infinite => write!(f, "inf"),
        }
    }
}

pub fn lambda_of_k(k: C64) -> Result<C64> {
    if k == C64::new(1.0, 0.0) {
        return Err(NpError::TrivialContrast);
    }
    Ok((k + 1.0) / ((k - 1.0) * 2.0))
}

/// Inverse of [`lambda_of_k`]: k = (2λ + 1)/(2λ − 1).
pub fn k_of_lambda(lambda: C64) -> Conductivity {
    if lambda == C64::new(0.5, 0.0) {
        return Conductivity::Infinite;
    }
    Conductivity::Finite((lambda * 2.0 + 1.0) / (lambda * 2.0 - 1.0))
}

/// Real NP eigenpairs, H-orthonormal, with the Gram data that defines H.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    basis: MeanZeroBasis,
    gram: DMatrix<f64>,
    chol: DMatrix<f64>,
    kstar: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigencoords: DMatrix<f64>,
    n_modes: usize,
}

impl SpectralDecomposition {
    /// Build from nodal matrices of S and K* (block versions for several
    /// curves are allowed as long as `basis` has matching blocks).
    pub fn from_operators(
        basis: MeanZeroBasis,
        single_layer: &DMatrix<f64>,
        kstar: &DMatrix<f64>,
    ) -> Result<Self> {
        let gram = symmetrize(&basis.restrict(&(-single_layer)));
        let sk = -(single_layer * kstar);
        let b = symmetrize(&basis.restrict(&sk));
        let chol = gram
            .clone()
            .cholesky()
            .ok_or(NpError::GramNotPositiveDefinite)?
            .l();
        let linv = chol
            .clone()
            .solve_lower_triangular(&DMatrix::identity(gram.nrows(), gram.nrows()))
            .ok_or(NpError::GramNotPositiveDefinite)?;
        let c = symmetrize(&(&linv * b * linv.transpose()));
        let eig = SymmetricEigen::new(c);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .abs()
                .partial_cmp(&eig.eigenvalues[i].abs())
                .unwrap()
        });
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let y = DMatrix::from_columns(
            &order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        let eigencoords = linv.transpose() * y;
        let n_modes = eigenvalues.len();
        Ok(SpectralDecomposition {
            kstar: basis.restrict(kstar),
            basis,
            gram,
            chol,
            eigenvalues,
            eigencoords,
            n_modes,
        })
    }

    /// Keep only the `n_modes` leading eigenpairs; the rest act as a t = 0 cluster.
    pub fn truncated(mut self, n_modes: usize) -> Self {
        self.n_modes = n_modes.min(self.eigenvalues.len());
        self
    }

    pub fn basis(&self) -> &MeanZeroBasis {
        &self.basis
    }

    /// Retained eigenvalues, sorted by modulus, largest first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.n_modes]
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn has_tail(&self) -> bool {
        self.n_modes < self.eigenvalues.len()
    }

    /// Gram matrix of −S in mean-zero coordinates.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Lower Cholesky factor of the Gram matrix.
    pub fn gram_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// K* in mean-zero coordinates.
    pub fn kstar_coords(&self) -> &DMatrix<f64> {
        &self.kstar
    }

    pub fn eigencoords(&self, i: usize) -> DVector<f64> {
        self.eigencoords.column(i).into_owned()
    }

    pub fn eigendensity(&self, i: usize) -> Density {
        self.basis.lift(&self.eigencoords(i).map(|v| C64::new(v, 0.0)))
    }

    pub fn coords(&self, density: &Density) -> DVector<C64> {
        self.basis.coords(density)
    }

    pub fn lift(&self, c: &DVector<C64>) -> Density {
        self.basis.lift(c)
    }

    pub fn h_inner_coords(&self, a: &DVector<C64>, b: &DVector<C64>) -> C64 {
        let gb = to_complex(&self.gram) * b;
        a.iter().zip(gb.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    pub fn h_norm_coords(&self, a: &DVector<C64>) -> f64 {
        self.h_inner_coords(a, a).re.max(0.0).sqrt()
    }

    /// ⟨a, b⟩_H of the mean-zero projections.
    pub fn h_inner(&self, a: &Density, b: &Density) -> C64 {
        self.h_inner_coords(&self.coords(a), &self.coords(b))
    }

    pub fn h_norm(&self, a: &Density) -> f64 {
        self.h_norm_coords(&self.coords(a))
    }

    /// Operator norm in H of a map given in mean-zero coordinates: ‖Lᵀ T L⁻ᵀ‖₂.
    pub fn h_operator_norm(&self, t: &DMatrix<C64>) -> f64 {
        let lt = to_complex(&self.chol.transpose());
        let n = self.chol.nrows();
        let linv_t = to_complex(
            &self
                .chol
                .clone()
                .solve_lower_triangular(&DMatrix::identity(n, n))
                .expect("Cholesky factor is nonsingular")
                .transpose(),
        );
        let m = lt * t * linv_t;
        m.singular_values().iter().cloned().fold(0.0, f64::max)
    }

    /// Distance from λ to the retained spectrum, including the t = 0 cluster
    /// when modes were discarded.
    pub fn distance_to_spectrum(&self, lambda: C64) -> f64 {
        let mut d = self
            .eigenvalues()
            .iter()
            .map(|t| (lambda - t).norm())
            .fold(f64::INFINITY, f64::min);
        if self.has_tail() {
            d = d.min(lambda.norm());
        }
        d
    }

    /// Resolvent in mean-zero coordinates, without the distance check.
    pub fn resolvent_coords(&self, lambda: C64, rhs: &DVector<C64>) -> DVector<C64> {
        let g = to_complex(&self.gram);
        let e = to_complex(&self.eigencoords.columns(0, self.n_modes).into_owned());
        let beta = e.transpose() * (&g * rhs);
        let scaled = DVector::from_iterator(
            self.n_modes,
            beta.iter()
                .zip(self.eigenvalues())
                .map(|(b, t)| b / (lambda - t)),
        );
        let mut out = &e * scaled;
        if self.has_tail() {
            out += (rhs - &e * beta) / lambda;
        }
        out
    }
}

/// Symmetrized spectrum of K* on one curve.
pub fn symmetrized_spectrum(curve: &BoundaryCurve, n_modes: Option<usize>) -> Result<SpectralDecomposition> {
    let n = curve.len();
    if let Some(m) = n_modes {
        if m == 0 || m > n - 1 {
            return Err(NpError::InvalidParameter(format!(
                "n_modes must be in 1..={}, got {m}",
                n - 1
            )));
        }
    }
    let basis = MeanZeroBasis::new(&[curve.weights()]);
    let s = single_layer_matrix(curve);
    let k = np_matrix(curve);
    let dec = SpectralDecomposition::from_operators(basis, &s.entries, &k.entries)?;
    Ok(match n_modes {
        Some(m) => dec.truncated(m),
        None => dec,
    })
}

/// max |t| over the retained eigenvalues.
pub fn spectral_bound(decomposition: &SpectralDecomposition) -> f64 {
    decomposition
        .eigenvalues()
        .iter()
        .map(|t| t.abs())
        .fold(0.0, f64::max)
}

/// max over trials of ½|E_ext − E_int| / (E_ext + E_int), with the one-sided
/// Dirichlet energies reduced to boundary integrals.
pub fn variational_bound(curve: &BoundaryCurve, trials: &[Density]) -> Result<f64> {
    let s = single_layer_matrix(curve);
    let k = np_matrix(curve);
    let w = curve.weights();
    let mut best: f64 = 0.0;
    for trial in trials {
        let phi = crate::potentials::project_mean_zero(curve, trial);
        let sphi = s.apply(&phi);
        let kphi = k.apply(&phi);
        let mut e_int = 0.0;
        let mut e_ext = 0.0;
        for i in 0..phi.len() {
            let pair = |flux: C64| (flux * sphi[i].conj()).re * w[i];
            e_int += pair(kphi[i] - phi[i] * 0.5);
            e_ext -= pair(kphi[i] + phi[i] * 0.5);
        }
        let total = e_int + e_ext;
        if total < 1e-14 {
            return Err(NpError::DegenerateDensity(total));
        }
        best = best.max(0.5 * (e_ext - e_int).abs() / total);
    }
    Ok(best)
}

/// (λ − K*)⁻¹ applied to a mean-zero right side via the spectral resolution.
pub fn resolvent_apply(
    decomposition: &SpectralDecomposition,
    lambda: C64,
    rhs: &Density,
    eps: f64,
) -> Result<Density> {
    let distance = decomposition.distance_to_spectrum(lambda);
    if distance < eps || distance == 0.0 {
        return Err(NpError::LambdaOnSpectrum {
            lambda,
            distance,
            required: eps,
        });
    }
    let r = decomposition.coords(rhs);
    let out = decomposition.resolvent_coords(lambda, &r);
    let bound = decomposition.h_norm_coords(&r) / distance * (1.0 + 1e-8);
    let got = decomposition.h_norm_coords(&out);
    if got > bound + 1e-300 {
        return Err(NpError::SolverFailure(format!(
            "resolvent norm {got:.6e} exceeds spectral bound {bound:.6e}"
        )));
    }
    Ok(decomposition.lift(&out))
}

/// Region membership of one conductivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionTags {
    pub lambda: C64,
    /// |k''| ≥ −L k'.
    pub in_sector: bool,
    /// dist(λ(k), spectrum) ≥ ε.
    pub in_resolvent_region: bool,
    pub distance_to_spectrum: f64,
    /// Closed-form distance between the λ-image of the sector and [−b, b].
    pub sector_distance: f64,
}

/// Whether k lies in the sector |k''| ≥ −L k'; k = ∞ is included.
pub fn in_sector(k: &Conductivity, l: f64) -> bool {
    match k {
        Conductivity::Finite(k) => k.im.abs() >= -l * k.re,
        Conductivity::Infinite => true,
    }
}

/// dist(O_L, [−b, b]) = 2(1/4 − b²) / (√(1 + L⁻²) + √((2b)² + L⁻²)).
pub fn sector_distance(b: f64, l: f64) -> f64 {
    let il2 = 1.0 / (l * l);
    2.0 * (0.25 - b * b) / ((1.0 + il2).sqrt() + (4.0 * b * b + il2).sqrt())
}

pub fn classify_k(
    k: &Conductivity,
    l: f64,
    eps: f64,
    decomposition: &SpectralDecomposition,
) -> Result<RegionTags> {
    let lambda = k.lambda()?;
    let distance_to_spectrum = decomposition.distance_to_spectrum(lambda);
    Ok(RegionTags {
        lambda,
        in_sector: in_sector(k, l),
        in_resolvent_region: distance_to_spectrum >= eps,
        distance_to_spectrum,
        sector_distance: sector_distance(spectral_bound(decomposition), l),
    })
}

/// Conductivities with their contrast parameters and region tags.
#[derive(Debug, Clone)]
pub struct MediumSpec {
    pub conductivities: Vec<Conductivity>,
    /// λ(k_j), or `None` for the trivial contrast k = 1.
    pub lambdas: Vec<Option<C64>>,
    pub tags: Vec<Option<RegionTags>>,
}

impl MediumSpec {
    pub fn new(
        conductivities: Vec<Conductivity>,
        l: f64,
        eps: f64,
        decomposition: &SpectralDecomposition,
    ) -> Self {
        let lambdas = conductivities.iter().map(|k| k.lambda().ok()).collect();
        let tags = conductivities
            .iter()
            .map(|k| classify_k(k, l, eps, decomposition).ok())
            .collect();
        MediumSpec {
            conductivities,
            lambdas,
            tags,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_curve, CurveShape};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ellipse(a: f64, b: f64, n: usize) -> BoundaryCurve {
        make_curve(CurveShape::ellipse([0.0, 0.0], a, b), n).unwrap()
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_of_k(C64::new(0.0, 0.0)).unwrap(), C64::new(-0.5, 0.0));
        assert_eq!(Conductivity::Infinite.lambda().unwrap(), C64::new(0.5, 0.0));
        assert_eq!(lambda_of_k(C64::new(3.0, 0.0)).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(lambda_of_k(C64::new(1.0, 0.0)), Err(NpError::TrivialContrast));
        assert_eq!(k_of_lambda(C64::new(1.0, 0.0)), Conductivity::real(3.0));
    }

    #[test]
    fn circle_spectrum_vanishes() {
        let c = make_curve(CurveShape::circle([0.0, 0.0], 1.0), 64).unwrap();
        let dec = symmetrized_spectrum(&c, None).unwrap();
        assert!(spectral_bound(&dec) < 1e-10);
        let degenerate = ellipse(1.0, 1.0, 64);
        assert!(spectral_bound(&symmetrized_spectrum(&degenerate, None).unwrap()) < 1e-10);
    }

    #[test]
    fn ellipse_eigenvalues() {
        let dec = symmetrized_spectrum(&ellipse(2.0, 1.0, 128), None).unwrap();
        let t = dec.eigenvalues();
        for n in 1..=3 {
            let expected = 0.5 * (1.0f64 / 3.0).powi(n);
            for j in [2 * n - 2, 2 * n - 1] {
                assert_abs_diff_eq!(t[j as usize].abs(), expected, epsilon = 1e-10);
            }
            assert_abs_diff_eq!(t[2 * n as usize - 2] + t[2 * n as usize - 1], 0.0, epsilon = 1e-10);
        }
        let thin = symmetrized_spectrum(&ellipse(10.0, 1.0, 256), None).unwrap();
        assert_abs_diff_eq!(spectral_bound(&thin), 0.5 * 9.0 / 11.0, epsilon = 1e-8);
    }

    #[test]
    fn eigenpairs_are_h_orthonormal_and_satisfy_kstar() {
        let c = make_curve(CurveShape::star([0.0, 0.0], 1.0, vec![0.0, 0.1, 0.2], vec![0.0, 0.05]), 128)
            .unwrap();
        let dec = symmetrized_spectrum(&c, None).unwrap();
        let k = np_matrix(&c);
        for i in 0..20 {
            let phi = dec.eigendensity(i);
            for j in 0..20 {
                let ip = dec.h_inner(&phi, &dec.eigendensity(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).norm() < 1e-10);
            }
            let kphi = k.apply(&phi);
            let err = (kphi - phi.map(|v| v * dec.eigenvalues()[i])).norm() / phi.norm();
            assert!(err < 1e-8, "mode {i}: {err:e}");
        }
        assert!(dec.eigenvalues().iter().all(|t| t.abs() < 0.5));
    }

    #[test]
    fn variational_bound_examples() {
        let c = make_curve(CurveShape::circle([0.0, 0.0], 1.0), 64).unwrap();
        let trial = Density::from_iterator(
            64,
            c.params().iter().map(|t| C64::new(t.cos() + 0.3 * (3.0 * t).sin(), 0.0)),
        );
        assert!(variational_bound(&c, &[trial]).unwrap() < 1e-8);

        let e = ellipse(2.0, 1.0, 128);
        let dec = symmetrized_spectrum(&e, None).unwrap();
        let trials: Vec<_> = (0..6).map(|i| dec.eigendensity(i)).collect();
        assert_abs_diff_eq!(variational_bound(&e, &trials).unwrap(), 1.0 / 6.0, epsilon = 1e-6);
        let mixed = &trials[1] * C64::new(0.3, 0.0) + &trials[4] * C64::new(0.0, 0.7);
        assert!(variational_bound(&e, &[mixed]).unwrap() <= spectral_bound(&dec) + 1e-8);

        let zero = Density::zeros(128);
        assert!(matches!(variational_bound(&e, &[zero]), Err(NpError::DegenerateDensity(_))));
    }

    #[test]
    fn resolvent_examples() {
        let c = make_curve(CurveShape::circle([0.0, 0.0], 1.0), 64).unwrap();
        let dec = symmetrized_spectrum(&c, None).unwrap();
        let rhs = Density::from_iterator(64, c.params().iter().map(|t| C64::new((2.0 * t).cos(), t.sin())));
        let out = resolvent_apply(&dec, C64::new(1.0, 0.0), &rhs, 1e-6).unwrap();
        assert!((out - &rhs).norm() < 1e-10);

        let e = ellipse(2.0, 1.0, 128);
        let dec = symmetrized_spectrum(&e, None).unwrap();
        let i = (0..2).find(|&i| dec.eigenvalues()[i] > 0.0).unwrap();
        let phi = dec.eigendensity(i);
        let out = resolvent_apply(&dec, C64::new(0.5, 0.0), &phi, 1e-6).unwrap();
        assert!((out - phi.map(|v| v * 3.0)).norm() < 1e-8 * phi.norm());
        let err = resolvent_apply(&dec, C64::new(1.0 / 6.0, 0.0), &phi, 1e-3);
        assert!(matches!(err, Err(NpError::LambdaOnSpectrum { .. })));
    }

    #[test]
    fn truncated_resolvent_treats_tail_as_zero_cluster() {
        let e = ellipse(2.0, 1.0, 64);
        let full = symmetrized_spectrum(&e, None).unwrap();
        let cut = symmetrized_spectrum(&e, Some(20)).unwrap();
        let rhs = Density::from_iterator(64, e.params().iter().map(|t| C64::new(t.cos(), 0.0)));
        let lam = C64::new(0.7, 0.2);
        let a = resolvent_apply(&full, lam, &rhs, 1e-6).unwrap();
        let b = resolvent_apply(&cut, lam, &rhs, 1e-6).unwrap();
        assert!((a - b).norm() < 1e-8 * rhs.norm());
        assert!(symmetrized_spectrum(&e, Some(64)).is_err());
    }

    #[test]
    fn classification_examples() {
        let c = ellipse(2.0, 1.0, 64);
        let dec = symmetrized_spectrum(&c, None).unwrap();
        let tags = classify_k(&Conductivity::complex(0.0, 1.0), 3.0, 1e-3, &dec).unwrap();
        assert!(tags.in_sector);
        let tags = classify_k(&Conductivity::real(-2.0), 1.0, 1e-3, &dec).unwrap();
        assert!(!tags.in_sector);
        // Closed-form value with b = 1/6 and L = 1.
        assert_abs_diff_eq!(tags.sector_distance, sector_distance(1.0 / 6.0, 1.0), epsilon = 1e-10);
        assert!(classify_k(&Conductivity::real(1.0), 1.0, 1e-3, &dec).is_err());
    }

    /// Brute-force distance from the λ-image of the sector boundary rays
    /// k = r e^{±i(π − atan L)} to [−b, b].
    fn brute_sector_distance(b: f64, l: f64) -> f64 {
        let theta = std::f64::consts::PI - l.atan();
        let mut best = f64::INFINITY;
        for i in 0..200_000 {
            let r = (-8.0 + 16.0 * i as f64 / 200_000.0f64).exp();
            for sign in [1.0, -1.0] {
                let k = C64::from_polar(r, sign * theta);
                let lam = lambda_of_k(k).unwrap();
                let x = lam.re.clamp(-b, b);
                best = best.min(((lam.re - x).powi(2) + lam.im.powi(2)).sqrt());
            }
        }
        best
    }

    #[test]
    fn sector_distance_matches_brute_force() {
        for (b, l) in [(1.0 / 6.0, 1.0), (0.3, 0.5), (0.05, 4.0)] {
            assert_abs_diff_eq!(sector_distance(b, l), brute_sector_distance(b, l), epsilon = 1e-6);
        }
        assert_abs_diff_eq!(sector_distance(1.0 / 6.0, 1.0), 0.180_06, epsilon = 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn lambda_round_trip(re in -50.0f64..50.0, im in -50.0f64..50.0) {
            prop_assume!((re - 1.0).abs() + im.abs() > 1e-3);
            let k = Conductivity::complex(re, im);
            let back = k_of_lambda(k.lambda().unwrap()).value().unwrap();
            prop_assert!((back - C64::new(re, im)).norm() < 1e-9 * (1.0 + re.abs() + im.abs()));
        }

        #[test]
        fn sector_keeps_lambda_off_the_interval(
            b in 0.0f64..0.49, l in 0.1f64..10.0, r in -6.0f64..6.0, phase in 0.0f64..1.0
        ) {
            let limit = std::f64::consts::PI - l.atan();
            let k = C64::from_polar(r.exp(), (2.0 * phase - 1.0) * limit);
            prop_assume!((k - 1.0).norm() > 1e-6);
            let lam = lambda_of_k(k).unwrap();
            let x = lam.re.clamp(-b, b);
            let d = ((lam.re - x).powi(2) + lam.im.powi(2)).sqrt();
            prop_assert!(d >= sector_distance(b, l) - 1e-12);
        }

        #[test]
        fn resolvent_norm_bound(re in -2.0f64..2.0, im in -1.0f64..1.0, seed in 0u64..1000) {
            let c = make_curve(CurveShape::ellipse([0.0, 0.0], 1.5, 1.0), 64).unwrap();
            let dec = symmetrized_spectrum(&c, None).unwrap();
            let lam = C64::new(re, im);
            prop_assume!(dec.distance_to_spectrum(lam) > 1e-6);
            let f = seed as f64;
            let rhs = Density::from_iterator(64, c.params().iter().map(|t| {
                C64::new((t + f).cos() + 0.2 * (3.0 * t).sin(), (2.0 * t - f).sin())
            }));
            let out = resolvent_apply(&dec, lam, &rhs, 1e-6).unwrap();
            let bound = dec.h_norm(&rhs) / dec.distance_to_spectrum(lam) * (1.0 + 1e-8);
            prop_assert!(dec.h_norm(&out) <= bound);
        }
    }
}
