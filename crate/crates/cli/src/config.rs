//! Experiment configuration files.
//!
//! A config is a TOML document. Only `recipe` is required; everything else
//! falls back to defaults. Unknown and duplicate keys are rejected.
//!
//! ```toml
//! recipe = "ml_ablation"
//! seed = 7
//! output_dir = "results/ablation"
//!
//! [link]
//! n_seq = 64
//! n_freq = 64
//! cp_len = 16
//! ebn0_db = [6.0, 10.0, 14.0]
//!
//! [link.channel]
//! kind = "freq_selective"
//! n_taps = 4
//! delay_decay = 1.0
//!
//! [sweep]
//! min_bits = 1000000
//! max_bits = 1000000
//! target_errors = 100
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use usfm_core::{LinkConfig, SweepConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    BerAwgnRayleigh,
    SpectralEfficiency,
    Complexity,
    Latency,
    MlAblation,
    Papr,
}

impl Recipe {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "ber_awgn_rayleigh" => Recipe::BerAwgnRayleigh,
            "spectral_efficiency" => Recipe::SpectralEfficiency,
            "complexity" => Recipe::Complexity,
            "latency" => Recipe::Latency,
            "ml_ablation" => Recipe::MlAblation,
            "papr" => Recipe::Papr,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplexitySettings {
    /// `(n_seq, n_freq)` pairs to count.
    pub sizes: Vec<(usize, usize)>,
}

impl Default for ComplexitySettings {
    fn default() -> Self {
        Self { sizes: vec![(8, 8), (16, 64), (64, 64), (128, 128), (256, 256)] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EfficiencySettings {
    pub mod_orders: Vec<usize>,
    pub cp_lens: Vec<usize>,
}

impl Default for EfficiencySettings {
    fn default() -> Self {
        Self { mod_orders: vec![4, 16, 64], cp_lens: vec![0, 4, 8, 16, 32] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaprSettings {
    pub frames: usize,
    /// CCDF thresholds run from 0 dB to `ccdf_max_db` in `ccdf_step_db`.
    pub ccdf_max_db: f64,
    pub ccdf_step_db: f64,
}

impl Default for PaprSettings {
    fn default() -> Self {
        Self { frames: 2000, ccdf_max_db: 14.0, ccdf_step_db: 0.25 }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// Fully validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub recipe: Recipe,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub complexity: ComplexitySettings,
    #[serde(default)]
    pub efficiency: EfficiencySettings,
    #[serde(default)]
    pub papr: PaprSettings,
}

/// Command-line overrides applied after the file is parsed.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub recipe: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub points: Option<Vec<f64>>,
    pub min_bits: Option<u64>,
    pub max_bits: Option<u64>,
}

/// 1-based line of the first `key =` assignment in `text`.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|line| {
        let t = line.trim_start();
        t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

const KNOWN_KEYS: &[&str] = &[
    "cp_len", "n_freq", "n_seq", "mod_order", "n_taps", "delay_decay", "normalized_doppler",
    "learning_rate", "max_iters", "rel_tol", "fd_step", "min_bits", "max_bits", "target_errors",
    "ebn0_db", "frames", "ccdf_step_db", "ccdf_max_db", "sizes", "mod_orders", "cp_lens",
];

/// Attach a line number to a semantic error by finding the key it names.
fn locate(text: &str, origin: &str, message: String) -> CliError {
    let mut hits: Vec<(usize, usize)> = KNOWN_KEYS
        .iter()
        .filter_map(|k| message.find(k).map(|pos| (pos, line_of_key(text, k))))
        .filter_map(|(pos, line)| line.map(|l| (pos, l)))
        .collect();
    hits.sort_unstable();
    match hits.first() {
        Some(&(_, line)) => CliError::Config(format!("{origin}:{line}: {message}")),
        None => CliError::Config(format!("{origin}: {message}")),
    }
}

pub fn parse_str(text: &str, origin: &str, overrides: &Overrides) -> Result<ExperimentSpec, CliError> {
    let mut spec: ExperimentSpec = toml::from_str(text).map_err(|e| {
        let where_ = e
            .span()
            .map(|s| {
                let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                format!("{origin}:{line}")
            })
            .unwrap_or_else(|| origin.to_string());
        CliError::Config(format!("{where_}: {}", e.message()))
    })?;

    if let Some(name) = &overrides.recipe {
        spec.recipe = Recipe::parse(name)
            .ok_or_else(|| CliError::Config(format!("--recipe: unknown recipe `{name}`")))?;
    }
    if let Some(seed) = overrides.seed {
        spec.seed = seed;
    }
    if let Some(dir) = &overrides.output_dir {
        spec.output_dir = dir.clone();
    }
    if let Some(points) = &overrides.points {
        spec.link.ebn0_db = points.clone();
    }
    if let Some(b) = overrides.min_bits {
        spec.sweep.min_bits = b;
    }
    if let Some(b) = overrides.max_bits {
        spec.sweep.max_bits = b;
    }
    spec.link.seed = spec.seed;

    validate(&spec).map_err(|msg| locate(text, origin, msg))?;
    Ok(spec)
}

fn validate(spec: &ExperimentSpec) -> Result<(), String> {
    spec.link.validate().map_err(|e| e.to_string())?;
    spec.sweep.validate().map_err(|e| e.to_string())?;
    for &(ns, nf) in &spec.complexity.sizes {
        if !ns.is_power_of_two() || !nf.is_power_of_two() {
            return Err(format!("complexity sizes entry ({ns}, {nf}) is not a pair of powers of two"));
        }
    }
    for &m in &spec.efficiency.mod_orders {
        if !matches!(m, 4 | 16 | 64) {
            return Err(format!("efficiency mod_orders entry {m} not in {{4, 16, 64}}"));
        }
    }
    let efficiency_used = spec.recipe == Recipe::SpectralEfficiency;
    if efficiency_used && spec.efficiency.cp_lens.iter().any(|&cp| cp >= spec.link.n_freq) {
        return Err(format!("efficiency cp_lens must stay below n_freq {}", spec.link.n_freq));
    }
    if spec.papr.frames == 0 {
        return Err("papr frames must be at least 1".into());
    }
    if !(spec.papr.ccdf_step_db > 0.0 && spec.papr.ccdf_max_db > 0.0) {
        return Err("papr ccdf_step_db and ccdf_max_db must be positive".into());
    }
    Ok(())
}

pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_str(&text, &path.display().to_string(), overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSpec, CliError> {
        parse_str(text, "test.toml", &Overrides::default())
    }

    fn message(e: CliError) -> String {
        match e {
            CliError::Config(m) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let spec = parse("recipe = \"papr\"\nseed = 5\n").unwrap();
        assert_eq!(spec.recipe, Recipe::Papr);
        assert_eq!(spec.link.mod_order, 4);
        assert_eq!((spec.link.n_seq, spec.link.n_freq, spec.link.cp_len), (64, 64, 16));
        assert_eq!(spec.link.seed, 5);
        assert_eq!(spec.sweep, SweepConfig::default());
    }

    #[test]
    fn cp_not_shorter_than_block_is_rejected_with_line() {
        let text = "recipe = \"papr\"\n[link]\nn_freq = 16\ncp_len = 16\n";
        let m = message(parse(text).unwrap_err());
        assert!(m.starts_with("test.toml:4:"), "{m}");
    }

    #[test]
    fn duplicate_key_is_rejected_with_line() {
        let m = message(parse("recipe = \"papr\"\nseed = 1\nseed = 2\n").unwrap_err());
        assert!(m.starts_with("test.toml:3:"), "{m}");
        assert!(m.contains("duplicate"), "{m}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let m = message(parse("recipe = \"papr\"\n[link]\nbogus = 1\n").unwrap_err());
        assert!(m.starts_with("test.toml:3:"), "{m}");
        assert!(m.contains("bogus"), "{m}");
    }

    #[test]
    fn missing_recipe_is_rejected() {
        assert!(parse("seed = 1\n").is_err());
        assert!(parse("recipe = \"fig9\"\n").is_err());
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides {
            recipe: Some("complexity".into()),
            seed: Some(9),
            output_dir: Some("out".into()),
            points: Some(vec![1.0, 2.0]),
            min_bits: Some(20_000),
            max_bits: Some(40_000),
        };
        let spec = parse_str("recipe = \"papr\"\n", "x", &o).unwrap();
        assert_eq!(spec.recipe, Recipe::Complexity);
        assert_eq!(spec.link.seed, 9);
        assert_eq!(spec.output_dir, PathBuf::from("out"));
        assert_eq!(spec.link.ebn0_db, vec![1.0, 2.0]);
        assert_eq!((spec.sweep.min_bits, spec.sweep.max_bits), (20_000, 40_000));
        let bad = Overrides { recipe: Some("nope".into()), ..Overrides::default() };
        assert!(parse_str("recipe = \"papr\"\n", "x", &bad).is_err());
    }

    #[test]
    fn nested_channel_table() {
        let text = "recipe = \"ml_ablation\"\n[link]\noptimize = true\n[link.channel]\nkind = \"freq_selective\"\nn_taps = 4\n";
        let spec = parse(text).unwrap();
        assert_eq!(spec.link.channel.kind, usfm_core::ChannelKind::FreqSelective);
        assert!(spec.link.optimize);
    }
}
