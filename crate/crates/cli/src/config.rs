//! JSON experiment configs, one schema per subcommand.
//!
//! Complex numbers are `[re, im]`; a conductivity may also be the string `"inf"`.

use np_core::{Conductivity, CurveShape, HarmonicSource, NeumannData, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

fn origin() -> [f64; 2] {
    [0.0, 0.0]
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveConfig {
    Circle {
        #[serde(default = "origin")]
        center: [f64; 2],
        radius: f64,
        n: usize,
    },
    Ellipse {
        #[serde(default = "origin")]
        center: [f64; 2],
        a: f64,
        b: f64,
        n: usize,
    },
    #[serde(alias = "star")]
    FourierStar {
        #[serde(default = "origin")]
        center: [f64; 2],
        r0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
        n: usize,
    },
}

impl CurveConfig {
    pub fn shape(&self) -> CurveShape {
        match self {
            CurveConfig::Circle { center, radius, .. } => CurveShape::circle(*center, *radius),
            CurveConfig::Ellipse { center, a, b, .. } => CurveShape::ellipse(*center, *a, *b),
            CurveConfig::FourierStar {
                center, r0, cos, sin, ..
            } => CurveShape::star(*center, *r0, cos.clone(), sin.clone()),
        }
    }

    pub fn nodes(&self) -> usize {
        match self {
            CurveConfig::Circle { n, .. } | CurveConfig::Ellipse { n, .. } | CurveConfig::FourierStar { n, .. } => *n,
        }
    }

    pub fn build(&self) -> np_core::Result<np_core::BoundaryCurve> {
        np_core::make_curve(self.shape(), self.nodes())
    }
}

/// `[re, im]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex(pub [f64; 2]);

impl Complex {
    pub fn value(&self) -> C64 {
        C64::new(self.0[0], self.0[1])
    }
}

/// `[re, im]` or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KConfig {
    Finite([f64; 2]),
    Flag(InfFlag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfFlag {
    #[serde(rename = "inf")]
    Inf,
}

impl KConfig {
    pub fn conductivity(&self) -> Conductivity {
        match self {
            KConfig::Finite([re, im]) => Conductivity::complex(*re, *im),
            KConfig::Flag(InfFlag::Inf) => Conductivity::Infinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    X,
    Y,
    RePower { m: usize },
    ImPower { m: usize },
    /// `h = Σ a_m z^m + Σ b_m z̄^m`, coefficients listed from m = 1.
    General {
        #[serde(default)]
        holomorphic: Vec<Complex>,
        #[serde(default)]
        antiholomorphic: Vec<Complex>,
    },
}

impl SourceConfig {
    pub fn source(&self) -> Result<HarmonicSource, CliError> {
        Ok(match self {
            SourceConfig::X => HarmonicSource::linear_x(),
            SourceConfig::Y => HarmonicSource::linear_y(),
            SourceConfig::RePower { m } | SourceConfig::ImPower { m } if *m == 0 => {
                return Err(CliError::Config("source power m must be at least 1".into()))
            }
            SourceConfig::RePower { m } => HarmonicSource::re_power(*m),
            SourceConfig::ImPower { m } => HarmonicSource::im_power(*m),
            SourceConfig::General {
                holomorphic,
                antiholomorphic,
            } => {
                if holomorphic.is_empty() && antiholomorphic.is_empty() {
                    return Err(CliError::Config("general source has no coefficients".into()));
                }
                HarmonicSource::new(
                    holomorphic.iter().map(Complex::value).collect(),
                    antiholomorphic.iter().map(Complex::value).collect(),
                )
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NeumannConfig {
    Cos { m: i64 },
    Sin { m: i64 },
    /// `g(θ) = Σ g_m e^{imθ}` as `[m, [re, im]]` pairs; the m = 0 mode must vanish.
    Modes { modes: Vec<(i64, Complex)> },
}

impl NeumannConfig {
    pub fn data(&self) -> Result<NeumannData, CliError> {
        match self {
            NeumannConfig::Cos { m } | NeumannConfig::Sin { m } if *m == 0 => {
                Err(CliError::Config("Neumann mode m must be nonzero".into()))
            }
            NeumannConfig::Cos { m } => Ok(NeumannData::cos(*m)),
            NeumannConfig::Sin { m } => Ok(NeumannData::sin(*m)),
            NeumannConfig::Modes { modes } => {
                Ok(NeumannData::new(modes.iter().map(|(m, c)| (*m, c.value())).collect())?)
            }
        }
    }
}

fn default_eps() -> f64 {
    1e-8
}

fn default_resonance_tol() -> f64 {
    1e-8
}

fn default_n_outer() -> usize {
    128
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub curve: CurveConfig,
    #[serde(default)]
    pub n_modes: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveFreeConfig {
    pub curve: CurveConfig,
    pub conductivities: Vec<KConfig>,
    pub source: SourceConfig,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Points off the curve at which u = h + S[φ] is reported.
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceProbeConfig {
    pub n_max: u32,
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBvpConfig {
    #[serde(default = "one")]
    pub disk_radius: f64,
    pub curve: CurveConfig,
    pub conductivity: KConfig,
    pub neumann: NeumannConfig,
    #[serde(default = "default_n_outer")]
    pub n_outer: usize,
    #[serde(default = "default_resonance_tol")]
    pub resonance_tol: f64,
    /// Concentric circles only.
    #[serde(default)]
    pub resonance_probe: Option<ResonanceProbeConfig>,
}

fn default_max_order() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GptConfig {
    pub curve: CurveConfig,
    pub conductivity: KConfig,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_deltas() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}

fn default_c0() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    #[serde(default = "one")]
    pub disk_radius: f64,
    /// Reference shape B (must contain the origin); `n` is the node count per inclusion.
    pub reference: CurveConfig,
    pub z: [f64; 2],
    pub conductivities: Vec<KConfig>,
    pub neumann: NeumannConfig,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_n_outer")]
    pub n_outer: usize,
    #[serde(default = "default_resonance_tol")]
    pub resonance_tol: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Log-spaced moduli times linearly spaced arguments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarGrid {
    pub moduli: Range,
    pub angles: Range,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub curve: CurveConfig,
    pub source: SourceConfig,
    #[serde(default = "one")]
    pub l: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub grid: Option<PolarGrid>,
    #[serde(default)]
    pub ks: Vec<KConfig>,
    /// Number of seeded random pairs drawn from the resolvent-region grid points.
    #[serde(default)]
    pub lipschitz_pairs: usize,
}

fn default_half_distance() -> f64 {
    2.0
}

fn default_pair_nodes() -> usize {
    256
}

fn default_probe_count() -> usize {
    50
}

fn default_clearance() -> f64 {
    0.15
}

fn default_eigen_modes() -> usize {
    3
}

fn default_sources() -> Vec<TwoDiskSource> {
    vec![TwoDiskSource::X, TwoDiskSource::Y]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoDiskSource {
    X,
    Y,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoDiskConfig {
    /// Disk centers at (±c, 0).
    #[serde(default = "default_half_distance")]
    pub c: f64,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_pair_nodes")]
    pub n: usize,
    pub pairs: Vec<[KConfig; 2]>,
    #[serde(default = "default_sources")]
    pub sources: Vec<TwoDiskSource>,
    #[serde(default = "default_probe_count")]
    pub probes: usize,
    #[serde(default = "default_clearance")]
    pub clearance: f64,
    #[serde(default = "default_eigen_modes")]
    pub eigen_modes: usize,
    #[serde(default = "default_series_tol")]
    pub series_tol: f64,
}

fn default_series_tol() -> f64 {
    1e-14
}

fn default_multi_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultibodyConfig {
    pub curves: Vec<CurveConfig>,
    pub conductivities: Vec<KConfig>,
    pub source: SourceConfig,
    #[serde(default = "default_multi_tol")]
    pub resonance_tol: f64,
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
    /// Each entry is one Λ = (λ_1, …, λ_M).
    #[serde(default)]
    pub lambda_grid: Vec<Vec<Complex>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatterySize {
    #[default]
    Reduced,
    Full,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    #[serde(default)]
    pub flip_kstar_diagonal: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfcheckConfig {
    #[serde(default)]
    pub size: BatterySize,
    /// Multiplies every tolerance; values below 1 tighten the battery.
    #[serde(default = "one")]
    pub tolerance_scale: f64,
    /// Subset of criterion ids; empty runs all.
    #[serde(default)]
    pub criteria: Vec<u32>,
    #[serde(default, skip_serializing_if = "is_default_fault")]
    pub fault: FaultConfig,
}

fn is_default_fault(f: &FaultConfig) -> bool {
    !f.flip_kstar_diagonal
}

impl Default for SelfcheckConfig {
    fn default() -> Self {
        SelfcheckConfig {
            size: BatterySize::Reduced,
            tolerance_scale: 1.0,
            criteria: Vec::new(),
            fault: FaultConfig::default(),
        }
    }
}

/// Parsed config plus the canonical JSON used for hashing.
pub struct Loaded<T> {
    pub config: T,
    pub seed: Option<u64>,
    pub canonical: String,
}

/// Read a config file. A top-level `"command"` must match the subcommand and
/// a top-level `"seed"` is used unless `--seed` overrides it.
pub fn load<T: serde::de::DeserializeOwned>(path: &std::path::Path, command: &str) -> Result<Loaded<T>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, command)
}

pub fn parse<T: serde::de::DeserializeOwned>(text: &str, command: &str) -> Result<Loaded<T>, CliError> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
    if let Some(c) = obj.remove("command") {
        if c.as_str() != Some(command) {
            return Err(CliError::Config(format!("config is for command {c}, not \"{command}\"")));
        }
    }
    let seed = match obj.remove("seed") {
        None => None,
        Some(s) => Some(
            s.as_u64()
                .ok_or_else(|| CliError::Config("seed must be a non-negative integer".into()))?,
        ),
    };
    let canonical = canonical_json(&value);
    let config = serde_json::from_value(value).map_err(|e| CliError::Config(format!("{command} config: {e}")))?;
    Ok(Loaded { config, seed, canonical })
}

/// Compact JSON with object keys sorted.
pub fn canonical_json(value: &serde_json::Value) -> String {
    // serde_json's default map is ordered by key.
    serde_json::to_string(value).expect("a Value always serializes")
}

/// sha256 over the canonical config and the seed.
pub fn config_hash(canonical: &str, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    h.update(b"\nseed=");
    h.update(seed.to_string().as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn require_positive(name: &str, value: f64) -> Result<(), CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_spec_round_trip() {
        let c: CurveConfig = serde_json::from_str(r#"{"kind":"ellipse","a":2.0,"b":1.0,"n":128,"center":[0,0]}"#).unwrap();
        assert_eq!(c.nodes(), 128);
        assert_eq!(c.shape(), CurveShape::ellipse([0.0, 0.0], 2.0, 1.0));
        let s: CurveConfig = serde_json::from_str(r#"{"kind":"star","r0":1,"cos":[0,0,0.2],"n":64}"#).unwrap();
        assert!(matches!(s, CurveConfig::FourierStar { .. }));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<CurveConfig>(r#"{"kind":"circle","radius":1,"n":8,"bogus":1}"#).is_err());
        assert!(parse::<SpectrumConfig>(r#"{"curve":{"kind":"circle","radius":1,"n":8},"x":1}"#, "spectrum").is_err());
    }

    #[test]
    fn conductivity_forms() {
        let ks: Vec<KConfig> = serde_json::from_str(r#"[[2,0],"inf",[-1,1]]"#).unwrap();
        assert_eq!(ks[0].conductivity(), Conductivity::real(2.0));
        assert_eq!(ks[1].conductivity(), Conductivity::Infinite);
        assert_eq!(ks[2].conductivity(), Conductivity::complex(-1.0, 1.0));
        assert!(serde_json::from_str::<KConfig>(r#""infinity""#).is_err());
        assert!(serde_json::from_str::<KConfig>("3.0").is_err());
    }

    #[test]
    fn command_mismatch_and_seed() {
        let text = r#"{"command":"gpt","curve":{"kind":"circle","radius":1,"n":8}}"#;
        assert!(matches!(parse::<SpectrumConfig>(text, "spectrum"), Err(CliError::Config(_))));
        let l = parse::<SpectrumConfig>(r#"{"seed":7,"curve":{"kind":"circle","radius":1,"n":8}}"#, "spectrum").unwrap();
        assert_eq!(l.seed, Some(7));
    }

    #[test]
    fn hash_ignores_key_order_and_whitespace() {
        let a = parse::<SpectrumConfig>(r#"{"curve":{"kind":"circle","radius":1,"n":8}}"#, "spectrum").unwrap();
        let b = parse::<SpectrumConfig>(r#"{ "curve" : {"n":8, "radius":1, "kind":"circle"} }"#, "spectrum").unwrap();
        assert_eq!(config_hash(&a.canonical, 1), config_hash(&b.canonical, 1));
        assert_ne!(config_hash(&a.canonical, 1), config_hash(&a.canonical, 2));
    }

    #[test]
    fn zero_mode_neumann_rejected() {
        let n: NeumannConfig = serde_json::from_str(r#"{"kind":"modes","modes":[[0,[1,0]]]}"#).unwrap();
        assert!(n.data().is_err());
        let c: NeumannConfig = serde_json::from_str(r#"{"kind":"cos","m":0}"#).unwrap();
        assert!(c.data().is_err());
    }
}
