use std::path::Path;
use std::process::Command;

fn fluxcr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fluxcr"))
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

#[test]
fn shipped_configs_validate() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let out = fluxcr().args(["validate", "--config"]).arg(&path).output().unwrap();
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn invalid_config_lists_all_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "schema_version = 1\nscenario = \"rb\"\n[system.qubit_a]\ne_c = -1.0\ne_l = 0.78\ne_j = 4.03\nflux = 0.5\n").unwrap();
    let out = fluxcr().args(["validate", "--config"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seed"), "{err}");
    assert!(err.contains("system.qubit_a.e_c"), "{err}");
}

#[test]
fn lists_scenarios() {
    let out = fluxcr().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["table1", "chevron", "darkening", "error-vs-time", "rb", "irb", "qpt", "predistort", "allxy", "population"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "missing {name}");
    }
}

fn run_into(config: &Path, dir: &Path, extra: &[&str]) -> bool {
    let out = fluxcr().args(["run", "--jobs", "1", "--config"]).arg(config).arg("--out").arg(dir).args(extra).output().unwrap();
    assert!(out.status.code().is_some_and(|c| c < 2), "{}", String::from_utf8_lossy(&out.stderr));
    out.status.success()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    for name in ["qpt", "population", "predistort"] {
        let cfg = configs().join(format!("{name}.toml"));
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert!(run_into(&cfg, a.path(), &[]), "{name} checks failed");
        run_into(&cfg, b.path(), &[]);
        assert_eq!(snapshot(a.path()), snapshot(b.path()), "{name}");
    }
}

#[test]
fn seed_override_changes_stochastic_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rb.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nscenario = \"rb\"\nseed = 1\n[rb]\nlengths = [1, 4, 16]\nn_sequences = 4\nestimator = \"readout\"\nreadout_noise = 0.05\nreadout_shots = 200\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_into(&cfg, &a, &[]);
    run_into(&cfg, &b, &["--seed", "2"]);
    let ra = std::fs::read(a.join("rb_sequences.csv")).unwrap();
    let rb = std::fs::read(b.join("rb_sequences.csv")).unwrap();
    assert_ne!(ra, rb);
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 2);
}

#[test]
fn manifest_hashes_match_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(&configs().join("qpt.toml"), dir.path(), &[]));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let files = m["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let bytes = std::fs::read(dir.path().join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), fluxcr_cli::output::sha256_hex(&bytes));
    }
}
