use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_usfm-sim")).args(args).output().expect("spawn usfm-sim")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL_BER: &str = r#"
recipe = "ml_ablation"
seed = 11

[link]
n_seq = 16
n_freq = 16
cp_len = 4
ebn0_db = [4.0, 10.0]

[link.channel]
kind = "freq_selective"
n_taps = 4
delay_decay = 1.0

[sweep]
min_bits = 20000
max_bits = 40000
target_errors = 10
"#;

fn run_into(config: &str, out: &Path) -> Output {
    let output = sim(&["run", "--config", config, "--out", out.to_str().unwrap()]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    output
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_BER);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_into(&config, &a).status.success());
    assert!(run_into(&config, &b).status.success());
    for name in ["ber_usfm_unoptimized.csv", "ber_usfm_optimized.csv", "delta.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        let y = fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between reruns");
    }
}

#[test]
fn manifest_lists_every_file_with_checksum() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_BER);
    let before = fs::read(&config).unwrap();
    let out = tmp.path().join("out");
    assert!(run_into(&config, &out).status.success());
    assert_eq!(fs::read(&config).unwrap(), before, "config file was modified");

    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["recipe"], "ml_ablation");
    assert_eq!(manifest["config"]["link"]["n_freq"], 16);
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let name = f["name"].as_str().unwrap();
        let digest = hex::encode(Sha256::digest(fs::read(out.join(name)).unwrap()));
        assert_eq!(f["sha256"].as_str().unwrap(), digest, "{name}");
    }
}

#[test]
fn seed_override_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_BER);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_into(&config, &a).status.success());
    let status = sim(&["run", "--config", &config, "--out", b.to_str().unwrap(), "--seed", "12"]).status;
    assert!(status.success());
    let x = fs::read(a.join("ber_usfm_optimized.csv")).unwrap();
    let y = fs::read(b.join("ber_usfm_optimized.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn ber_recipe_writes_all_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "recipe = \"ber_awgn_rayleigh\"\n[link]\nn_seq = 8\nn_freq = 8\ncp_len = 0\nebn0_db = [0.0, 4.0]\n\
         [sweep]\nmin_bits = 10000\nmax_bits = 20000\ntarget_errors = 10\n",
    );
    let out = tmp.path().join("out");
    let run = run_into(&config, &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for name in [
        "ber_usfm_awgn.csv",
        "ber_ofdm_awgn.csv",
        "ber_usfm_flat_rayleigh.csv",
        "ber_ofdm_flat_rayleigh.csv",
        "theory_awgn.csv",
        "theory_rayleigh.csv",
    ] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().count(), 3, "{name}: header plus two points");
    }
    let header = fs::read_to_string(out.join("ber_usfm_awgn.csv")).unwrap();
    assert!(header.starts_with("scheme,channel,equalizer,ebn0_db,bits,errors,ber,ci_half_width\n"));
}

#[test]
fn efficiency_recipe_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "recipe = \"spectral_efficiency\"\n[efficiency]\nmod_orders = [16]\ncp_lens = [16]\n");
    let out = tmp.path().join("out");
    assert!(run_into(&config, &out).status.success());
    let text = fs::read_to_string(out.join("efficiency.csv")).unwrap();
    assert!(text.contains("usfm,16,64,0,4e0\n"), "{text}");
    assert!(text.contains("ofdm,16,64,16,3.2e0\n"), "{text}");
}

#[test]
fn validate_reports_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(tmp.path(), "recipe = \"papr\"\n");
    assert_eq!(sim(&["validate", "--config", &good]).status.code(), Some(0));

    let bad = write_config(tmp.path(), "recipe = \"papr\"\n[link]\nn_freq = 16\ncp_len = 16\n");
    let out = sim(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("exp.toml:4:"), "{stderr}");

    let missing = tmp.path().join("nope.toml");
    let out = sim(&["validate", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "recipe = \"spectral_efficiency\"\n");
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let out = sim(&["run", "--config", &config, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
