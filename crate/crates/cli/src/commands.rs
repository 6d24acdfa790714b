//! One function per subcommand: build inputs, call np-core, write CSVs.

use std::path::Path;

use np_core::bipolar::{
    adaptive_truncation, bipolar_from_disks, exact_two_disk_solution, harmonic_bipolar_coeffs, SourceKind,
};
use np_core::bvp::{resonance_probe, solve_neumann_bvp, BvpOptions};
use np_core::gpt::{compute_gpt, convergence_study, StudyOptions};
use np_core::multibody::{
    assemble_multi, block_resolvent_norm_sweep, solve_multi_free_space, theta_tag, two_disk_solvability_check,
    MultiOptions,
};
use np_core::spectral::{in_sector, symmetrized_spectrum};
use np_core::transmission::{evaluate_field, lipschitz_check, solve_free_space};
use np_core::{make_curve, Conductivity, CurveShape, DiskDomain, NpError, Vec2, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;

use crate::battery::{self, BatteryOptions, Fault};
use crate::config::{self, *};
use crate::output::{num, re_im, CsvTable, RunContext};
use crate::CliError;

pub(crate) fn with_config<T: DeserializeOwned>(
    path: &Path,
    name: &str,
    cli: &crate::Cli,
    f: fn(&T, &RunContext) -> Result<String, CliError>,
) -> Result<String, CliError> {
    let loaded = config::load::<T>(path, name)?;
    run_loaded(loaded, cli, f)
}

pub(crate) fn run_loaded<T>(
    loaded: Loaded<T>,
    cli: &crate::Cli,
    f: fn(&T, &RunContext) -> Result<String, CliError>,
) -> Result<String, CliError> {
    let seed = cli.seed.or(loaded.seed).unwrap_or(0);
    let ctx = RunContext {
        out_dir: cli.out.clone(),
        config_hash: config_hash(&loaded.canonical, seed),
        seed,
    };
    f(&loaded.config, &ctx)
}

fn k_fields(k: &Conductivity) -> [String; 2] {
    match k.value() {
        Some(v) => re_im(v),
        None => ["inf".into(), "0".into()],
    }
}

fn points(raw: &[[f64; 2]]) -> Vec<Vec2> {
    raw.iter().map(|p| Vec2::new(p[0], p[1])).collect()
}

/// Numerical failures recorded per row; the command exits 3 if any occurred.
fn aggregate(name: &str, failures: &[String]) -> Result<(), CliError> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{name}: {} row(s) failed, first: {}",
            failures.len(),
            failures[0]
        )))
    }
}

pub fn spectrum(cfg: &SpectrumConfig, ctx: &RunContext) -> Result<String, CliError> {
    let curve = cfg.curve.build()?;
    let dec = symmetrized_spectrum(&curve, cfg.n_modes)?;
    let mut ev = dec.eigenvalues().to_vec();
    ev.sort_by(|a, b| b.total_cmp(a));
    let mut t = CsvTable::new(&["index", "eigenvalue"]);
    for (i, v) in ev.iter().enumerate() {
        t.row(&[i.to_string(), num(*v)]);
    }
    let bound = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    t.note(format!("spectral_bound: {}", num(bound)));
    let path = t.write(ctx, "eigenvalues.csv")?;
    Ok(format!(
        "spectrum: {} eigenvalues on {} (n={}), max |t| = {}, wrote {}",
        ev.len(),
        cfg.curve.shape().kind_name(),
        curve.len(),
        num(bound),
        path.display()
    ))
}

pub fn solve_free(cfg: &SolveFreeConfig, ctx: &RunContext) -> Result<String, CliError> {
    require_positive("eps", cfg.eps)?;
    if cfg.conductivities.is_empty() {
        return Err(CliError::Config("conductivities is empty".into()));
    }
    let curve = cfg.curve.build()?;
    let source = cfg.source.source()?;
    let probes = points(&cfg.probes);
    // Reject probes on the curve before any solve.
    np_core::potentials::single_layer_eval(&curve, &np_core::Density::zeros(curve.len()), &probes)?;
    let dec = symmetrized_spectrum(&curve, None)?;
    let ks: Vec<Conductivity> = cfg.conductivities.iter().map(KConfig::conductivity).collect();
    let results: Vec<_> = ks
        .par_iter()
        .map(|k| solve_free_space(&dec, &curve, k, &source, cfg.eps))
        .collect();
    let mut t = CsvTable::new(&[
        "k_re",
        "k_im",
        "lambda_re",
        "lambda_im",
        "dist_to_spectrum",
        "phi_H_norm",
        "energy",
        "residual",
        "status",
    ]);
    let mut field = CsvTable::new(&["k_index", "x", "y", "u_re", "u_im"]);
    let mut failures = Vec::new();
    for (i, (k, res)) in ks.iter().zip(&results).enumerate() {
        let [kr, ki] = k_fields(k);
        match res {
            Ok(rep) => {
                let [lr, li] = rep.lambda.map_or(["nan".into(), "nan".into()], re_im);
                t.row(&[
                    kr,
                    ki,
                    lr,
                    li,
                    num(rep.distance_to_spectrum),
                    num(rep.density_h_norm),
                    num(rep.energy),
                    num(rep.residual),
                    "ok".into(),
                ]);
                for (p, u) in probes.iter().zip(evaluate_field(&curve, &source, rep, &probes)?) {
                    field.row(&[i.to_string(), num(p.x), num(p.y), num(u.re), num(u.im)]);
                }
            }
            Err(e) if crate::is_config_error(e) => return Err(e.clone().into()),
            Err(e) => {
                failures.push(format!("k = {k}: {e}"));
                let nan = || "nan".to_string();
                t.row(&[kr, ki, nan(), nan(), nan(), nan(), nan(), nan(), "failed".into()]);
            }
        }
    }
    let path = t.write(ctx, "solve_free.csv")?;
    if !probes.is_empty() {
        field.write(ctx, "field.csv")?;
    }
    aggregate("solve_free_space", &failures)?;
    Ok(format!("solve-free: {} conductivities solved, wrote {}", ks.len(), path.display()))
}

pub fn solve_bvp(cfg: &SolveBvpConfig, ctx: &RunContext) -> Result<String, CliError> {
    require_positive("resonance_tol", cfg.resonance_tol)?;
    let disk = DiskDomain::new(cfg.disk_radius)?;
    let curve = cfg.curve.build()?;
    let k = cfg.conductivity.conductivity();
    let g = cfg.neumann.data()?;
    let options = BvpOptions {
        n_outer: cfg.n_outer,
        resonance_tol: cfg.resonance_tol,
    };
    if cfg.n_outer < 8 {
        return Err(CliError::Config("n_outer must be at least 8".into()));
    }
    let probe_rows = match &cfg.resonance_probe {
        None => None,
        Some(p) => {
            let concentric = matches!(cfg.curve.shape(), CurveShape::Circle { center, .. } if center.norm() == 0.0);
            if !concentric {
                return Err(CliError::Config("resonance_probe needs a circle centred at the origin".into()));
            }
            require_positive("resonance_probe.offset", p.offset)?;
            if p.n_max == 0 {
                return Err(CliError::Config("resonance_probe.n_max must be at least 1".into()));
            }
            Some(resonance_probe(&disk, &curve, p.n_max, p.offset)?)
        }
    };
    if let Some(rows) = &probe_rows {
        let mut t = CsvTable::new(&["n", "k_n", "sigma_below", "sigma_at", "sigma_above", "dip"]);
        for r in rows {
            t.row(&[
                r.n.to_string(),
                num(r.k_n),
                num(r.sigma_below),
                num(r.sigma_at),
                num(r.sigma_above),
                num(r.dip),
            ]);
        }
        t.write(ctx, "resonance.csv")?;
    }
    let rep = solve_neumann_bvp(&disk, &curve, &k, &g, &options)?;
    let mut t = CsvTable::new(&["theta", "x", "y", "u_re", "u_im"]);
    for (p, u) in rep.boundary_nodes.iter().zip(&rep.boundary_trace) {
        t.row(&[num(p.y.atan2(p.x)), num(p.x), num(p.y), num(u.re), num(u.im)]);
    }
    let [kr, ki] = k_fields(&k);
    t.note(format!("k: [{kr}, {ki}]"));
    t.note(format!("sigma_min: {}", num(rep.sigma_min)));
    t.note(format!("sigma_max: {}", num(rep.sigma_max)));
    t.note(format!("residual: {}", num(rep.residual)));
    let path = t.write(ctx, "trace.csv")?;
    Ok(format!(
        "solve-bvp: k = {k}, sigma_min = {}, residual = {}, wrote {}",
        num(rep.sigma_min),
        num(rep.residual),
        path.display()
    ))
}

pub fn gpt(cfg: &GptConfig, ctx: &RunContext) -> Result<String, CliError> {
    require_positive("eps", cfg.eps)?;
    let curve = cfg.curve.build()?;
    let k = cfg.conductivity.conductivity();
    let dec = symmetrized_spectrum(&curve, None)?;
    let table = compute_gpt(&dec, &curve, &k, cfg.max_order, cfg.eps)?;
    let mut t = CsvTable::new(&["alpha_1", "alpha_2", "beta_1", "beta_2", "m_re", "m_im"]);
    for ((a, b), m) in table.entries() {
        t.row(&[
            a[0].to_string(),
            a[1].to_string(),
            b[0].to_string(),
            b[1].to_string(),
            num(m.re),
            num(m.im),
        ]);
    }
    let count = table.entries().count();
    if cfg.max_order >= 2 {
        let m = table.polarization_tensor();
        for (i, row) in m.iter().enumerate() {
            let [a, b] = re_im(row[0]);
            let [c, d] = re_im(row[1]);
            t.note(format!("polarization_tensor_row_{}: [{a}, {b}] [{c}, {d}]", i + 1));
        }
    }
    let path = t.write(ctx, "gpt.csv")?;
    Ok(format!("gpt: {count} entries up to order {}, wrote {}", cfg.max_order, path.display()))
}

pub fn asymptotics(cfg: &AsymptoticsConfig, ctx: &RunContext) -> Result<String, CliError> {
    require_positive("eps", cfg.eps)?;
    require_positive("c0", cfg.c0)?;
    require_positive("resonance_tol", cfg.resonance_tol)?;
    if cfg.conductivities.is_empty() {
        return Err(CliError::Config("conductivities is empty".into()));
    }
    let disk = DiskDomain::new(cfg.disk_radius)?;
    let g = cfg.neumann.data()?;
    let reference = cfg.reference.shape();
    let z = Vec2::new(cfg.z[0], cfg.z[1]);
    let options = StudyOptions {
        n_nodes: cfg.reference.nodes(),
        bvp: BvpOptions {
            n_outer: cfg.n_outer,
            resonance_tol: cfg.resonance_tol,
        },
        c0: cfg.c0,
        eps: cfg.eps,
    };
    let ks: Vec<Conductivity> = cfg.conductivities.iter().map(KConfig::conductivity).collect();
    let reports: Vec<_> = ks
        .par_iter()
        .map(|k| convergence_study(&disk, &reference, z, k, &g, &cfg.deltas, &options))
        .collect();
    let mut t = CsvTable::new(&["delta", "k_re", "k_im", "err_order1", "err_high"]);
    let mut failures = Vec::new();
    let mut slopes = Vec::new();
    for (k, rep) in ks.iter().zip(reports) {
        let [kr, ki] = k_fields(k);
        match rep {
            Ok(rep) => {
                for r in &rep.rows {
                    t.row(&[num(r.delta), kr.clone(), ki.clone(), num(r.err_first), num(r.err_high)]);
                }
                t.note(format!(
                    "fit k=[{kr}, {ki}] slope_order1: {} slope_high: {} constant_order1: {} constant_high: {}",
                    num(rep.slope_first),
                    num(rep.slope_high),
                    num(rep.constant_first),
                    num(rep.constant_high)
                ));
                slopes.push(format!("k={k}: {:.3}/{:.3}", rep.slope_first, rep.slope_high));
            }
            Err(e) if crate::is_config_error(&e) => return Err(e.into()),
            Err(e) => {
                t.note(format!("fit k=[{kr}, {ki}] failed: {e}"));
                failures.push(format!("k = {k}: {e}"));
            }
        }
    }
    let path = t.write(ctx, "asymptotics.csv")?;
    aggregate("convergence_study", &failures)?;
    Ok(format!(
        "asymptotics: slopes (order1/high) {}, wrote {}",
        slopes.join(", "),
        path.display()
    ))
}

fn log_linear(r: &Range, log: bool) -> Result<Vec<f64>, CliError> {
    if r.count == 0 || !(r.min <= r.max) || (log && r.min <= 0.0) {
        return Err(CliError::Config(format!(
            "bad grid range [{}, {}] with {} points",
            r.min, r.max, r.count
        )));
    }
    let (a, b) = if log { (r.min.ln(), r.max.ln()) } else { (r.min, r.max) };
    Ok((0..r.count)
        .map(|i| {
            let s = if r.count == 1 { 0.0 } else { i as f64 / (r.count - 1) as f64 };
            let v = a + s * (b - a);
            if log {
                v.exp()
            } else {
                v
            }
        })
        .collect())
}

/// Moduli outer, angles inner.
pub fn polar_grid(grid: &PolarGrid) -> Result<Vec<Conductivity>, CliError> {
    let moduli = log_linear(&grid.moduli, true)?;
    let angles = log_linear(&grid.angles, false)?;
    Ok(moduli
        .iter()
        .flat_map(|r| angles.iter().map(move |a| Conductivity::Finite(C64::from_polar(*r, *a))))
        .collect())
}

pub fn sweep_k(cfg: &SweepConfig, ctx: &RunContext) -> Result<String, CliError> {
    require_positive("eps", cfg.eps)?;
    require_positive("l", cfg.l)?;
    let curve = cfg.curve.build()?;
    let source = cfg.source.source()?;
    let mut ks = match &cfg.grid {
        Some(g) => polar_grid(g)?,
        None => Vec::new(),
    };
    ks.extend(cfg.ks.iter().map(KConfig::conductivity));
    if ks.is_empty() {
        return Err(CliError::Config("sweep-k needs a grid or an explicit ks list".into()));
    }
    let dec = symmetrized_spectrum(&curve, None)?;
    let rows: Vec<_> = ks
        .par_iter()
        .map(|k| {
            let lambda = k.lambda().ok();
            let dist = lambda.map_or(f64::INFINITY, |l| dec.distance_to_spectrum(l));
            if dist < cfg.eps {
                return (lambda, dist, None);
            }
            (lambda, dist, Some(solve_free_space(&dec, &curve, k, &source, cfg.eps)))
        })
        .collect();
    let mut t = CsvTable::new(&[
        "k_re",
        "k_im",
        "lambda_re",
        "lambda_im",
        "dist_to_spectrum",
        "phi_H_norm",
        "energy",
        "residual",
        "in_sector",
        "bound",
        "blowup",
        "status",
    ]);
    let mut failures = Vec::new();
    let mut solved = Vec::new();
    let mut blowups = 0;
    for (i, (k, (lambda, dist, res))) in ks.iter().zip(rows).enumerate() {
        let [kr, ki] = k_fields(k);
        let [lr, li] = lambda.map_or(["nan".into(), "nan".into()], re_im);
        let sector = in_sector(k, cfg.l).to_string();
        let nan = || "nan".to_string();
        match res {
            None => t.row(&[kr, ki, lr, li, num(dist), nan(), nan(), nan(), sector, nan(), "false".into(), "excluded".into()]),
            Some(Ok(rep)) => {
                let bound = if dist.is_finite() { rep.rhs_h_norm / dist } else { 0.0 };
                let blowup = rep.density_h_norm > bound * (1.0 + 1e-8) + 1e-14;
                if blowup {
                    blowups += 1;
                    failures.push(format!("k = {k}: resolvent bound exceeded"));
                }
                t.row(&[
                    kr,
                    ki,
                    lr,
                    li,
                    num(dist),
                    num(rep.density_h_norm),
                    num(rep.energy),
                    num(rep.residual),
                    sector,
                    num(bound),
                    blowup.to_string(),
                    "ok".into(),
                ]);
                solved.push(i);
            }
            Some(Err(e)) if crate::is_config_error(&e) => return Err(e.into()),
            Some(Err(e)) => {
                failures.push(format!("k = {k}: {e}"));
                t.row(&[kr, ki, lr, li, num(dist), nan(), nan(), nan(), sector, nan(), "false".into(), "failed".into()]);
            }
        }
    }
    let path = t.write(ctx, "sweep.csv")?;
    if cfg.lipschitz_pairs > 0 {
        let nontrivial: Vec<usize> = solved.into_iter().filter(|&i| !ks[i].is_trivial()).collect();
        if nontrivial.len() < 2 {
            return Err(CliError::Config("lipschitz_pairs needs at least two solvable grid points".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let pairs: Vec<(usize, usize)> = (0..cfg.lipschitz_pairs)
            .map(|_| loop {
                let a = nontrivial[rng.random_range(0..nontrivial.len())];
                let b = nontrivial[rng.random_range(0..nontrivial.len())];
                if ks[a] != ks[b] {
                    break (a, b);
                }
            })
            .collect();
        let reports: Vec<_> = pairs
            .par_iter()
            .map(|&(a, b)| lipschitz_check(&dec, &curve, &ks[a], &ks[b], &source, cfg.eps))
            .collect();
        let mut lt = CsvTable::new(&["k_re", "k_im", "s_re", "s_im", "lhs", "rhs_bound", "constant"]);
        let mut fitted: f64 = 0.0;
        for (&(a, b), rep) in pairs.iter().zip(reports) {
            let rep = rep?;
            fitted = fitted.max(rep.constant_estimate);
            let [kr, ki] = k_fields(&ks[a]);
            let [sr, si] = k_fields(&ks[b]);
            lt.row(&[kr, ki, sr, si, num(rep.lhs), num(rep.rhs_bound), num(rep.constant_estimate)]);
        }
        lt.note(format!("fitted_constant: {}", num(fitted)));
        lt.write(ctx, "lipschitz.csv")?;
    }
    aggregate("sweep-k", &failures)?;
    Ok(format!(
        "sweep-k: {} points, {blowups} blow-up flags, wrote {}",
        ks.len(),
        path.display()
    ))
}

/// Seeded probes around two disks at (±c, 0), at least `clearance` from both circles.
pub fn two_disk_probes(c: f64, r: f64, count: usize, clearance: f64, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (c + r + 2.0, r + 2.0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = Vec2::new(rng.random_range(-w..w), rng.random_range(-h..h));
        let d = ((p - Vec2::new(c, 0.0)).norm() - r)
            .abs()
            .min(((p - Vec2::new(-c, 0.0)).norm() - r).abs());
        if d > clearance {
            out.push(p);
        }
    }
    out
}

pub fn two_disk(cfg: &TwoDiskConfig, ctx: &RunContext) -> Result<String, CliError> {
    require_positive("clearance", cfg.clearance)?;
    require_positive("series_tol", cfg.series_tol)?;
    if cfg.pairs.is_empty() || cfg.sources.is_empty() {
        return Err(CliError::Config("pairs and sources must be nonempty".into()));
    }
    let geometry = bipolar_from_disks(cfg.c, cfg.radius)?;
    let curves: Vec<_> = geometry
        .disk_shapes()
        .into_iter()
        .map(|s| make_curve(s, cfg.n))
        .collect::<Result<_, _>>()?;
    let probes = two_disk_probes(cfg.c, cfg.radius, cfg.probes, cfg.clearance, ctx.seed);
    let n_terms = adaptive_truncation(&geometry, cfg.series_tol);

    let jobs: Vec<(usize, TwoDiskSource)> = (0..cfg.pairs.len())
        .flat_map(|i| cfg.sources.iter().map(move |s| (i, *s)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(i, src)| -> Result<(f64, f64, f64), NpError> {
            let [k1, k2] = [cfg.pairs[i][0].conductivity(), cfg.pairs[i][1].conductivity()];
            let (kind, source) = match src {
                TwoDiskSource::X => (SourceKind::X, np_core::HarmonicSource::linear_x()),
                TwoDiskSource::Y => (SourceKind::Y, np_core::HarmonicSource::linear_y()),
            };
            let system = assemble_multi(curves.clone(), vec![k1, k2])?;
            let rep = solve_multi_free_space(&system, &source, &MultiOptions::default())?;
            let numeric = rep.field(&system, &source, &probes)?;
            let coeffs = harmonic_bipolar_coeffs(kind, &geometry, n_terms)?;
            let exact = exact_two_disk_solution(&geometry, &k1, &k2, &coeffs, &probes)?;
            let err = numeric
                .iter()
                .zip(&probes)
                .zip(&exact)
                .map(|((u, p), e)| (u - source.value(p) - e).norm())
                .fold(0.0, f64::max);
            Ok((err, rep.sigma_min, rep.residual))
        })
        .collect();

    let mut t = CsvTable::new(&[
        "k1_re", "k1_im", "k2_re", "k2_im", "source", "admissible", "max_error", "sigma_min", "residual", "status",
    ]);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (&(i, src), res) in jobs.iter().zip(results) {
        let [k1, k2] = [cfg.pairs[i][0].conductivity(), cfg.pairs[i][1].conductivity()];
        let check = two_disk_solvability_check(&k1, &k2, geometry.xi0, n_terms.max(1))?;
        let [a, b] = k_fields(&k1);
        let [c, d] = k_fields(&k2);
        let s = match src {
            TwoDiskSource::X => "x",
            TwoDiskSource::Y => "y",
        };
        let nan = || "nan".to_string();
        match res {
            Ok((err, smin, resid)) => {
                worst = worst.max(err);
                t.row(&[a, b, c, d, s.into(), check.admissible.to_string(), num(err), num(smin), num(resid), "ok".into()]);
            }
            Err(e) if crate::is_config_error(&e) => return Err(e.into()),
            Err(e) => {
                failures.push(format!("({k1}, {k2}) source {s}: {e}"));
                t.row(&[a, b, c, d, s.into(), check.admissible.to_string(), nan(), nan(), nan(), "failed".into()]);
            }
        }
    }
    t.note(format!("series_terms: {n_terms}"));
    let path = t.write(ctx, "two_disk.csv")?;

    if cfg.eigen_modes > 0 {
        let system = assemble_multi(curves, vec![Conductivity::real(2.0); 2])?;
        let dec = system.spectrum()?;
        let exact = np_core::bipolar::two_disk_np_eigenvalues(&geometry, cfg.eigen_modes);
        let computed = paired_block_eigenvalues(dec.eigenvalues(), cfg.eigen_modes);
        let mut et = CsvTable::new(&["n", "exact", "computed", "rel_err"]);
        for (j, (e, c)) in exact.iter().zip(&computed).enumerate() {
            et.row(&[(j / 2 + 1).to_string(), num(*e), num(*c), num(((c - e) / e).abs())]);
        }
        et.write(ctx, "two_disk_eigen.csv")?;
    }
    aggregate("two-disk", &failures)?;
    Ok(format!(
        "two-disk: {} solves, max error {} at {} probes, wrote {}",
        jobs.len(),
        num(worst),
        probes.len(),
        path.display()
    ))
}

/// `[t_1, −t_1, t_2, −t_2, …]` from a block spectrum in which each value is double:
/// the 2n-th largest and 2n-th smallest eigenvalues averaged with their twins.
pub fn paired_block_eigenvalues(eigenvalues: &[f64], modes: usize) -> Vec<f64> {
    let mut v = eigenvalues.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let len = v.len();
    (0..modes.min(len / 4))
        .flat_map(|n| {
            let pos = 0.5 * (v[2 * n] + v[2 * n + 1]);
            let neg = 0.5 * (v[len - 1 - 2 * n] + v[len - 2 - 2 * n]);
            [pos, neg]
        })
        .collect()
}

pub fn multibody(cfg: &MultibodyConfig, ctx: &RunContext) -> Result<String, CliError> {
    require_positive("resonance_tol", cfg.resonance_tol)?;
    if cfg.curves.len() > np_core::multibody::MAX_INCLUSIONS {
        return Err(CliError::Config(format!(
            "at most {} inclusions, got {}",
            np_core::multibody::MAX_INCLUSIONS,
            cfg.curves.len()
        )));
    }
    if cfg.curves.len() != cfg.conductivities.len() {
        return Err(CliError::Config("curves and conductivities differ in length".into()));
    }
    let curves: Vec<_> = cfg.curves.iter().map(CurveConfig::build).collect::<Result<_, _>>()?;
    let ks: Vec<Conductivity> = cfg.conductivities.iter().map(KConfig::conductivity).collect();
    let source = cfg.source.source()?;
    let system = assemble_multi(curves, ks.clone())?;
    let tag = theta_tag(&ks, 1.0);
    let rep = solve_multi_free_space(
        &system,
        &source,
        &MultiOptions {
            resonance_tol: cfg.resonance_tol,
        },
    )?;
    let mut t = CsvTable::new(&["inclusion", "k_re", "k_im", "nodes", "density_l2", "in_theta_plus"]);
    for (j, (c, d)) in system.curves().iter().zip(&rep.densities).enumerate() {
        let [kr, ki] = k_fields(&ks[j]);
        let l2 = np_core::potentials::l2_norm(c.weights(), d);
        t.row(&[j.to_string(), kr, ki, c.len().to_string(), num(l2), tag.in_theta_plus.to_string()]);
    }
    t.note(format!("sigma_min: {}", num(rep.sigma_min)));
    t.note(format!("sigma_max: {}", num(rep.sigma_max)));
    t.note(format!("residual: {}", num(rep.residual)));
    let path = t.write(ctx, "multibody.csv")?;

    let probes = points(&cfg.probes);
    if !probes.is_empty() {
        let u = rep.field(&system, &source, &probes)?;
        let mut ft = CsvTable::new(&["x", "y", "u_re", "u_im"]);
        for (p, v) in probes.iter().zip(u) {
            ft.row(&[num(p.x), num(p.y), num(v.re), num(v.im)]);
        }
        ft.write(ctx, "multibody_field.csv")?;
    }

    if !cfg.lambda_grid.is_empty() {
        let grid: Vec<Vec<C64>> = cfg
            .lambda_grid
            .iter()
            .map(|row| row.iter().map(Complex::value).collect())
            .collect();
        let dec = system.spectrum()?;
        let rows: Vec<_> = grid
            .par_iter()
            .map(|l| block_resolvent_norm_sweep(&system, &dec, std::slice::from_ref(l)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut header: Vec<String> = Vec::new();
        for j in 0..system.len() {
            header.push(format!("lambda{j}_re"));
            header.push(format!("lambda{j}_im"));
        }
        header.push("norm".into());
        header.push("sigma_min".into());
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut st = CsvTable::new(&refs);
        for r in rows.into_iter().flatten() {
            let mut fields: Vec<String> = r.lambdas.iter().flat_map(|l| re_im(*l)).collect();
            fields.push(num(r.norm));
            fields.push(num(r.sigma_min));
            st.row(&fields);
        }
        st.write(ctx, "norm_sweep.csv")?;
    }
    Ok(format!(
        "multibody: {} inclusions, sigma_min = {}, residual = {}, wrote {}",
        system.len(),
        num(rep.sigma_min),
        num(rep.residual),
        path.display()
    ))
}

pub fn selfcheck(cfg: &SelfcheckConfig, ctx: &RunContext) -> Result<String, CliError> {
    require_positive("tolerance_scale", cfg.tolerance_scale)?;
    if let Some(bad) = cfg.criteria.iter().find(|c| !(1..=battery::CRITERION_COUNT).contains(*c)) {
        return Err(CliError::Config(format!("unknown criterion {bad}")));
    }
    let options = BatteryOptions {
        size: cfg.size,
        tolerance_scale: cfg.tolerance_scale,
        only: cfg.criteria.clone(),
        seed: ctx.seed,
        fault: Fault {
            flip_kstar_diagonal: cfg.fault.flip_kstar_diagonal,
        },
    };
    let results = battery::run_battery(&options);
    let mut t = CsvTable::new(&["criterion", "name", "passed", "detail"]);
    for r in &results {
        println!("{}", r.line());
        t.row(&[
            r.id.to_string(),
            r.name.into(),
            r.passed.to_string(),
            r.reproducible_detail(),
        ]);
    }
    let path = t.write(ctx, "selfcheck.csv")?;
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        Ok(format!("selfcheck: {} criteria passed, wrote {}", results.len(), path.display()))
    } else {
        Err(CliError::Tolerance(format!(
            "criteria {} failed (see {})",
            failed.join(", "),
            path.display()
        )))
    }
}
