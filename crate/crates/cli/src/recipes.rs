//! The experiment recipes.
//!
//! | recipe                | outputs                                                        |
//! |-----------------------|----------------------------------------------------------------|
//! | `ber_awgn_rayleigh`   | `ber_{usfm,ofdm}_{awgn,flat_rayleigh}.csv`, `theory_*.csv`      |
//! | `spectral_efficiency` | `efficiency.csv`                                               |
//! | `complexity`          | `complexity.csv`                                               |
//! | `latency`             | `latency.csv` (+ wall-clock timings in the manifest)           |
//! | `ml_ablation`         | `ber_usfm_{unoptimized,optimized}.csv`, `delta.csv`            |
//! | `papr`                | `papr.csv`, `papr_ccdf.csv`                                    |

use std::time::Instant;

use usfm_core::harness::run_ber_sweep;
use usfm_core::links::transmit;
use usfm_core::metrics::{
    ber_qam_awgn, ber_rayleigh, complexity_count, db_to_linear, papr, spectral_efficiency, to_db,
};
use usfm_core::optimizer::improvement_factor;
use usfm_core::rng::{random_bits, trial_stream};
use usfm_core::{BerRecord, ChannelKind, LinkConfig, Scheme};

use crate::config::{ExperimentSpec, Recipe};
use crate::output::{
    ber_csv, fmt_num, write_all, CsvFile, FileEntry, Manifest, COMPLEXITY_HEADER, DELTA_HEADER,
    EFFICIENCY_HEADER, PAPR_CCDF_HEADER, PAPR_HEADER, THEORY_HEADER,
};
use crate::CliError;

const SCHEMES: [Scheme; 2] = [Scheme::Usfm, Scheme::Ofdm];

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<FileEntry>,
    pub notes: Vec<String>,
    /// Numerical problems that make the run exit non-zero.
    pub sanity_failures: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.sanity_failures.is_empty() {
            0
        } else {
            4
        }
    }
}

#[derive(Default)]
struct Collected {
    files: Vec<CsvFile>,
    notes: Vec<String>,
    sanity_failures: Vec<String>,
    machine_dependent: Option<serde_json::Value>,
}

impl Collected {
    fn push_ber(&mut self, name: &str, records: &[BerRecord]) {
        for r in records {
            for flag in &r.flags {
                let line = format!("{name} @ {} dB: {flag:?}", fmt_num(r.ebn0_db));
                if flag.is_sanity_failure() {
                    self.sanity_failures.push(line);
                } else {
                    self.notes.push(line);
                }
            }
        }
        self.files.push(ber_csv(name, records));
    }
}

fn with_channel(link: &LinkConfig, scheme: Scheme, kind: ChannelKind) -> LinkConfig {
    let mut cfg = link.clone();
    cfg.scheme = scheme;
    cfg.channel.kind = kind;
    cfg
}

fn ber_awgn_rayleigh(spec: &ExperimentSpec, out: &mut Collected) -> Result<(), CliError> {
    for kind in [ChannelKind::Awgn, ChannelKind::FlatRayleigh] {
        for scheme in SCHEMES {
            let cfg = with_channel(&spec.link, scheme, kind);
            let records = run_ber_sweep(&cfg, &spec.sweep)?;
            out.push_ber(&format!("ber_{}_{}.csv", scheme.label(), kind.label()), &records);
        }
    }
    let m = spec.link.mod_order;
    let mut awgn = CsvFile::new("theory_awgn.csv", THEORY_HEADER);
    let mut rayleigh = CsvFile::new("theory_rayleigh.csv", THEORY_HEADER);
    for &db in &spec.link.ebn0_db {
        let g = db_to_linear(db);
        awgn.row(&[format!("qam{m}_awgn"), fmt_num(db), fmt_num(ber_qam_awgn(m, g)?)]);
        rayleigh.row(&["qpsk_rayleigh".into(), fmt_num(db), fmt_num(ber_rayleigh(g))]);
    }
    out.files.push(awgn);
    out.files.push(rayleigh);
    Ok(())
}

fn ml_ablation(spec: &ExperimentSpec, out: &mut Collected) -> Result<(), CliError> {
    let base = LinkConfig { scheme: Scheme::Usfm, ..spec.link.clone() };
    let plain = run_ber_sweep(&LinkConfig { optimize: false, ..base.clone() }, &spec.sweep)?;
    let tuned = run_ber_sweep(&LinkConfig { optimize: true, ..base }, &spec.sweep)?;
    let mut delta = CsvFile::new("delta.csv", DELTA_HEADER);
    for (p, t) in plain.iter().zip(&tuned) {
        let imp = improvement_factor(p.ber, t.ber);
        let value = imp.delta.map(fmt_num).unwrap_or_else(|| "nan".into());
        if imp.out_of_range {
            out.notes.push(format!("delta.csv @ {} dB: improvement factor out of range", fmt_num(p.ebn0_db)));
        }
        delta.row(&[fmt_num(p.ebn0_db), fmt_num(p.ber), fmt_num(t.ber), value, imp.out_of_range.to_string()]);
    }
    out.push_ber("ber_usfm_unoptimized.csv", &plain);
    out.push_ber("ber_usfm_optimized.csv", &tuned);
    out.files.push(delta);
    Ok(())
}

fn spectral(spec: &ExperimentSpec, out: &mut Collected) {
    let (nf, ns) = (spec.link.n_freq, spec.link.n_seq);
    let preamble = spec.link.preamble_len();
    let mut csv = CsvFile::new("efficiency.csv", EFFICIENCY_HEADER);
    for &m in &spec.efficiency.mod_orders {
        // USFM on a flat channel carries no cyclic prefix.
        let eta = spectral_efficiency(m, nf, 0, preamble, ns);
        csv.row(&["usfm".into(), m.to_string(), nf.to_string(), "0".into(), fmt_num(eta)]);
        for &cp in &spec.efficiency.cp_lens {
            let eta = spectral_efficiency(m, nf, cp, preamble, ns);
            csv.row(&["ofdm".into(), m.to_string(), nf.to_string(), cp.to_string(), fmt_num(eta)]);
        }
    }
    out.files.push(csv);
}

/// Link template resized to `n_seq x n_freq` with a workable cyclic prefix.
fn resized(link: &LinkConfig, scheme: Scheme, n_seq: usize, n_freq: usize) -> Result<LinkConfig, CliError> {
    let mut cfg = link.clone();
    cfg.scheme = scheme;
    cfg.n_seq = n_seq;
    cfg.n_freq = n_freq;
    cfg.cp_len = (n_freq / 4).max(cfg.channel.n_taps.saturating_sub(1));
    if cfg.cp_len >= n_freq {
        return Err(CliError::Config(format!(
            "complexity size ({n_seq}, {n_freq}) too small for {} channel taps",
            cfg.channel.n_taps
        )));
    }
    cfg.optimize = scheme == Scheme::Usfm;
    Ok(cfg)
}

fn complexity(spec: &ExperimentSpec, name: &str, out: &mut Collected, time_it: bool) -> Result<(), CliError> {
    let mut csv = CsvFile::new(name, COMPLEXITY_HEADER);
    let mut timings = serde_json::Map::new();
    for &(ns, nf) in &spec.complexity.sizes {
        for scheme in SCHEMES {
            let cfg = resized(&spec.link, scheme, ns, nf)?;
            let rec = complexity_count(&cfg)?;
            csv.row(&[
                scheme.label().into(),
                rec.n_total.to_string(),
                rec.butterfly_count.to_string(),
                rec.optimizer_iters.to_string(),
            ]);
            if time_it {
                let plain = LinkConfig { optimize: false, ..cfg };
                let bits = random_bits(&mut trial_stream(spec.seed, 0, 0), plain.bits_per_frame());
                let reps = 20;
                let start = Instant::now();
                for _ in 0..reps {
                    transmit(&bits, &plain, None)?;
                }
                let micros = start.elapsed().as_secs_f64() * 1e6 / reps as f64;
                timings.insert(format!("{}_{ns}x{nf}_tx_us", scheme.label()), micros.into());
            }
        }
    }
    out.files.push(csv);
    if time_it {
        out.machine_dependent = Some(serde_json::Value::Object(timings));
    }
    Ok(())
}

fn papr_recipe(spec: &ExperimentSpec, out: &mut Collected) -> Result<(), CliError> {
    let mut per_frame = CsvFile::new("papr.csv", PAPR_HEADER);
    let mut ccdf = CsvFile::new("papr_ccdf.csv", PAPR_CCDF_HEADER);
    let steps = (spec.papr.ccdf_max_db / spec.papr.ccdf_step_db).floor() as usize;
    for scheme in SCHEMES {
        let cfg = LinkConfig { scheme, optimize: false, ..spec.link.clone() };
        let mut values = Vec::with_capacity(spec.papr.frames);
        for f in 0..spec.papr.frames {
            // Both schemes carry the same bits in frame f.
            let bits = random_bits(&mut trial_stream(spec.seed, 0, f as u64), cfg.bits_per_frame());
            let tx = transmit(&bits, &cfg, None)?;
            let db = to_db(papr(tx.frame.data_section())?);
            per_frame.row(&[scheme.label().into(), f.to_string(), fmt_num(db)]);
            values.push(db);
        }
        for s in 0..=steps {
            let threshold = s as f64 * spec.papr.ccdf_step_db;
            let above = values.iter().filter(|&&v| v > threshold).count();
            ccdf.row(&[
                scheme.label().into(),
                fmt_num(threshold),
                fmt_num(above as f64 / values.len() as f64),
            ]);
        }
    }
    out.files.push(per_frame);
    out.files.push(ccdf);
    Ok(())
}

/// Run a recipe and write its outputs under `spec.output_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    let mut out = Collected::default();
    match spec.recipe {
        Recipe::BerAwgnRayleigh => ber_awgn_rayleigh(spec, &mut out)?,
        Recipe::SpectralEfficiency => spectral(spec, &mut out),
        Recipe::Complexity => complexity(spec, "complexity.csv", &mut out, false)?,
        Recipe::Latency => complexity(spec, "latency.csv", &mut out, true)?,
        Recipe::MlAblation => ml_ablation(spec, &mut out)?,
        Recipe::Papr => papr_recipe(spec, &mut out)?,
    }
    let files: Vec<FileEntry> = out
        .files
        .iter()
        .map(|f| FileEntry { name: f.name.clone(), sha256: f.sha256(), rows: f.rows })
        .collect();
    let recipe_name = serde_json::to_value(spec.recipe)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let mut flags = out.notes.clone();
    flags.extend(out.sanity_failures.iter().cloned());
    let manifest = Manifest {
        tool: "usfm-sim",
        version: env!("CARGO_PKG_VERSION"),
        recipe: &recipe_name,
        seed: spec.seed,
        config: spec,
        files: files.clone(),
        flags,
        machine_dependent: out.machine_dependent.take(),
    };
    write_all(&spec.output_dir, &out.files, &manifest)?;
    Ok(RunSummary { files, notes: out.notes, sanity_failures: out.sanity_failures })
}
