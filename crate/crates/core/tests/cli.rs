//! The `chmm` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use comorbidity_hmm::cli::{read_manifest, DataSource, RunConfig, LOCK_FILE, OUTPUT_ROOT_ENV};
use comorbidity_hmm::sampler::ChainConfig;
use comorbidity_hmm::scenario::reference_simulation;

fn chmm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chmm"))
        .args(args)
        .current_dir(dir)
        .env_remove(OUTPUT_ROOT_ENV)
        .output()
        .expect("binary runs")
}

fn small_config() -> RunConfig {
    RunConfig {
        data: DataSource::Simulate(reference_simulation(25, 2.0, 3)),
        sampler: ChainConfig {
            n_chains: 2,
            n_warmup: 100,
            n_sampling: 100,
            ..ChainConfig::default()
        },
        ..RunConfig::default()
    }
}

fn write_config(dir: &Path, name: &str, cfg: &RunConfig) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_pipeline_from_one_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_config(dir, "run.json", &small_config());
    let base = ["--config", "run.json", "--out", "out"];

    for cmd in ["simulate", "fit", "diagnose", "decode", "ppc", "spillover", "compare"] {
        let mut args = vec![cmd];
        args.extend(base);
        let o = chmm(dir, &args);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        let m = read_manifest(&dir.join("out"), cmd).unwrap();
        assert_eq!(m.config_hash.len(), 64);
        assert!(!m.outputs.is_empty());
    }
    let out = dir.join("out");
    for f in [
        "data.csv",
        "truth.json",
        "states.csv",
        "draws.csv",
        "draws_unconstrained.csv",
        "sampler_stats.csv",
        "diagnostics.csv",
        "trace/beta_4_2_treatment.csv",
        "transitions.csv",
        "pointwise_loglik.csv",
        "loo.json",
        "waic.json",
        "decoded.csv",
        "ppc_intervals.csv",
        "ppc_coverage.json",
        "spillover.csv",
        "spillover.json",
        "compare.csv",
        "compare.txt",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    assert!(!out.join(LOCK_FILE).exists());
    let spill = std::fs::read_to_string(out.join("spillover.csv")).unwrap();
    assert!(spill.starts_with("quantity,q05,q25,q50,q75,q95"));
    for row in ["xi_z,", "xi_z_prime,", "difference,", "quotient,"] {
        assert!(spill.contains(row));
    }

    // same config and seed, same draws
    let o = chmm(dir, &["fit", "--config", "run.json", "--out", "again"]);
    assert_eq!(o.status.code(), Some(0));
    let a = std::fs::read(out.join("draws.csv")).unwrap();
    let b = std::fs::read(dir.join("again/draws.csv")).unwrap();
    assert!(a == b, "fit is not reproducible");

    // a different model refuses the stored fit and names the field
    let mut other = small_config();
    other.model.n_a = 1;
    write_config(dir, "other.json", &other);
    let o = chmm(dir, &["decode", "--config", "other.json", "--out", "elsewhere", "--fit-dir", "out"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.n_a"), "{}", stderr(&o));

    // so does different data
    let mut other = small_config();
    other.data = DataSource::Simulate(reference_simulation(25, 2.0, 99));
    write_config(dir, "data.json", &other);
    let o = chmm(dir, &["ppc", "--config", "data.json", "--out", "elsewhere2", "--fit-dir", "out"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("data"));
}

#[test]
fn locked_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join(LOCK_FILE), "1").unwrap();
    let o = chmm(tmp.path(), &["simulate", "--out", "out"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("locked"));
}

#[test]
fn unknown_config_field_names_its_path() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.json"), r#"{"sampler": {"n_chain": 4}}"#).unwrap();
    let o = chmm(tmp.path(), &["simulate", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sampler"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(chmm(tmp.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_data_file_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chmm(tmp.path(), &["fit", "--data", "nope.csv", "--out", "out"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn malformed_data_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("d.csv"), "patient_id,t,y_a,y_b\na,1,1.0,2.0\na,3,1.0,2.0\n").unwrap();
    let o = chmm(tmp.path(), &["fit", "--data", "d.csv", "--out", "out"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn strict_mode_fails_unconverged_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.sampler.n_warmup = 3;
    cfg.sampler.n_sampling = 3;
    write_config(tmp.path(), "run.json", &cfg);
    let o = chmm(tmp.path(), &["fit", "--config", "run.json", "--out", "out", "--strict"]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    // the artifacts are still written
    assert!(tmp.path().join("out/draws.csv").exists());
    let o = chmm(tmp.path(), &["fit", "--config", "run.json", "--out", "out2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn degenerate_variant_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.compare.variants = vec![(2, 2), (1, 1)];
    write_config(tmp.path(), "run.json", &cfg);
    let o = chmm(tmp.path(), &["compare", "--config", "run.json", "--out", "out"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_chmm"))
        .args(["simulate", "--seed", "8"])
        .current_dir(tmp.path())
        .env(OUTPUT_ROOT_ENV, &root)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m = read_manifest(&root.join("run"), "simulate").unwrap();
    assert_eq!(m.seed, 8);
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.sampler.n_sampling = 7;
    cfg.seed = Some(3);
    write_config(tmp.path(), "run.json", &cfg);
    let o = chmm(
        tmp.path(),
        &["fit", "--config", "run.json", "--out", "out", "--sampling", "5", "--warmup", "20", "--seed", "11"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = read_manifest(&tmp.path().join("out"), "fit").unwrap();
    assert_eq!(m.seed, 11);
    assert_eq!(m.config["sampler"]["n_sampling"], 5);
    assert_eq!(m.config["sampler"]["n_warmup"], 20);
    assert_eq!(m.config["sampler"]["n_chains"], 2);
}
