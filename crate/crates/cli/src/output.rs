//! Deterministic CSV text and the JSON manifest.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use usfm_core::BerRecord;

use crate::CliError;

pub const BER_HEADER: &str = "scheme,channel,equalizer,ebn0_db,bits,errors,ber,ci_half_width";
pub const EFFICIENCY_HEADER: &str = "scheme,mod_order,n_freq,cp_len,eta_bps_hz";
pub const COMPLEXITY_HEADER: &str = "scheme,n_total,butterflies,opt_iters";
pub const PAPR_HEADER: &str = "scheme,frame_index,papr_db";
pub const PAPR_CCDF_HEADER: &str = "scheme,papr_db,ccdf";
pub const THEORY_HEADER: &str = "model,ebn0_db,ber";
pub const DELTA_HEADER: &str = "ebn0_db,ber_unoptimized,ber_optimized,delta,out_of_range";

/// Nine significant digits in scientific notation, trailing mantissa zeros
/// trimmed (`0.0786496035` -> `7.86496035e-2`, `2.0` -> `2e0`).
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.8e}");
    let (mantissa, exp) = s.split_once('e').expect("scientific format");
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}e{exp}")
}

/// A named CSV held in memory until the final write.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvFile {
    pub name: String,
    pub text: String,
    pub rows: usize,
}

impl CsvFile {
    pub fn new(name: impl Into<String>, header: &str) -> Self {
        Self { name: name.into(), text: format!("{header}\n"), rows: 0 }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
        self.rows += 1;
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

pub fn ber_csv(name: &str, records: &[BerRecord]) -> CsvFile {
    let mut csv = CsvFile::new(name, BER_HEADER);
    for r in records {
        csv.row(&[
            r.scheme.label().into(),
            r.channel.label().into(),
            r.equalizer.label().into(),
            fmt_num(r.ebn0_db),
            r.bits.to_string(),
            r.errors.to_string(),
            fmt_num(r.ber),
            fmt_num(r.ci_half_width),
        ]);
    }
    csv
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub recipe: &'a str,
    pub seed: u64,
    pub config: &'a C,
    pub files: Vec<FileEntry>,
    /// Notes on individual records (e.g. points that saw no errors).
    pub flags: Vec<String>,
    /// Wall-clock measurements; vary between machines and runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub machine_dependent: Option<serde_json::Value>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Write every CSV, then the manifest, into `dir`.
pub fn write_all<C: Serialize>(
    dir: &Path,
    files: &[CsvFile],
    manifest: &Manifest<'_, C>,
) -> Result<(), CliError> {
    let io = |what: &str, e: std::io::Error| CliError::Io(format!("{what}: {e}"));
    std::fs::create_dir_all(dir).map_err(|e| io(&dir.display().to_string(), e))?;
    for f in files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.text).map_err(|e| io(&path.display().to_string(), e))?;
    }
    let mut json = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Numerical(format!("manifest serialization: {e}")))?;
    json.push('\n');
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, json).map_err(|e| io(&path.display().to_string(), e))
}
