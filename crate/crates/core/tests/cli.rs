use std::path::Path;
use std::process::{Command, Output};

use muskat::io::{load_diagnostics, load_snapshot, RunManifest, DIAGNOSTICS_NAME};

const DEMO: &str = r#"
[domain]
resolution = [32]

[physics]
depth_minus = 1.0

[initial]
mean = 0.2
modes = [{ k = [1], amplitude = 0.1 }, { k = [3], amplitude = 0.05, phase = -1.5707963267948966 }]

[numerics]
t_end = 0.02

[output]
snapshot_every = 5
"#;

fn muskat(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MUSKAT_OUT_ROOT")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn simulate_writes_indexed_reproducible_run() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "demo.toml", DEMO);
    for out in ["a", "b"] {
        let o = muskat(
            &["simulate", "--config", "demo.toml", "--out", out, "--quiet"],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = RunManifest::load(&dir.path().join("a")).unwrap();
    let b = RunManifest::load(&dir.path().join("b")).unwrap();
    assert_eq!(a.files, b.files);
    assert!(a.stale_files(&dir.path().join("a")).unwrap().is_empty());

    let rows = load_diagnostics(&dir.path().join("a").join(DIAGNOSTICS_NAME)).unwrap();
    assert_eq!(rows.len(), a.steps + 1);
    assert!(rows
        .iter()
        .all(|r| r.energy.is_finite() && r.hs_norm.is_finite()));
    assert!(rows.windows(2).all(|w| w[1].energy <= w[0].energy));
    let (t, eta) = load_snapshot(&dir.path().join("a").join("snapshot_000000.bin")).unwrap();
    assert_eq!(t, 0.0);
    assert_eq!(eta.grid().n(), &[32]);

    // tampering is caught by the index check
    write(&dir.path().join("a"), DIAGNOSTICS_NAME, "t\n");
    let o = muskat(
        &["verify", "--check", "S1", "--run", "a", "--quiet"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = muskat(
        &["verify", "--check", "S1", "--run", "b", "--quiet"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn default_output_root_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "demo.toml", DEMO);
    let o = Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(["traces", "--config", "demo.toml", "--quiet"])
        .current_dir(dir.path())
        .env("MUSKAT_OUT_ROOT", "root")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("root/demo/traces.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "demo.toml", DEMO);
    write(dir.path(), "typo.toml", &DEMO.replace("t_end", "t_edn"));
    let o = muskat(&["simulate", "--config", "typo.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `numerics.t_edn`"));

    let o = muskat(&["verify", "symbol"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    // a vanishing tail threshold trips the resolution monitor at once
    write(
        dir.path(),
        "trip.toml",
        &format!("{DEMO}\n[monitors]\ntail_threshold = 1e-300\n"),
    );
    let o = muskat(
        &["simulate", "--config", "trip.toml", "--out", "trip"],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(dir.path().join("trip/manifest.json").exists());

    // a thin layer defeats the series expansion
    write(
        dir.path(),
        "thin.toml",
        &DEMO.replace("depth_minus = 1.0", "depth_minus = 0.15"),
    );
    let o = muskat(
        &["simulate", "--config", "thin.toml", "--out", "thin"],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn overrides_and_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let random = r#"
[domain]
resolution = [32]
[initial]
kind = "random"
s = 3.5
max_slope = 0.05
[numerics]
t_end = 0.01
"#;
    write(dir.path(), "rand.toml", random);
    for (out, seed) in [("s1", "1"), ("s2", "2")] {
        let o = muskat(
            &[
                "simulate",
                "--config",
                "rand.toml",
                "--out",
                out,
                "--seed",
                seed,
                "--resolution",
                "64",
                "--quiet",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (_, a) = load_snapshot(&dir.path().join("s1/snapshot_000000.bin")).unwrap();
    let (_, b) = load_snapshot(&dir.path().join("s2/snapshot_000000.bin")).unwrap();
    assert_eq!(a.grid().n(), &[64]);
    assert!((&a - &b).max_abs() > 1e-4);

    // random data fill the resolved band, which a dilation would leave
    write(
        dir.path(),
        "mode.toml",
        "[initial]\nmodes = [{ k = [2], amplitude = 0.02 }]\n[numerics]\nt_end = 0.01\n",
    );
    let o = muskat(
        &["scaling", "--config", "rand.toml", "--out", "x"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    for (cmd, cfg, file) in [
        ("stability", "rand.toml", "stability.json"),
        ("scaling", "mode.toml", "scaling.json"),
        ("dno-test", "rand.toml", "dno_test.json"),
    ] {
        let o = muskat(&[cmd, "--config", cfg, "--out", cmd, "--quiet"], dir.path());
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let v: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(cmd).join(file)).unwrap(),
        )
        .unwrap();
        assert!(v.is_object());
    }
}

#[test]
fn verify_symbols_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = muskat(&["verify", "symbols", "--json"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["report"]["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks
        .iter()
        .all(|c| c["passed"] == true && c["module"] == "symbols"));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.extension().is_some_and(|x| x == "toml") {
            let text = std::fs::read_to_string(&path).unwrap();
            let cfg = muskat::config::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.resolve().unwrap();
            n += 1;
        }
    }
    assert!(n >= 4);
}
