use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn andersonlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_andersonlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ANDERSONLAB_THREADS")
        .output()
        .expect("spawn")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

#[test]
fn zero_noise_verify_passes_and_embeds_config() {
    let d = tempfile::tempdir().unwrap();
    let o = andersonlab(&["verify", "--preset", "verify-zero-noise"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&d.path().join("verify.json"));
    assert_eq!(r["command"], "verify");
    assert_eq!(r["config"]["preset"], "verify-zero-noise");
    assert_eq!(r["config"]["amplitude"], 0.0);
    assert_eq!(r["results"]["pass"], true);
    assert_eq!(r["results"]["checks"].as_array().unwrap().len(), 4);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("ok")), "{stdout}");
}

#[test]
fn failing_check_exits_one_and_names_it() {
    let d = tempfile::tempdir().unwrap();
    // Four-panel quadrature on a long interval cannot meet the Duhamel tolerance.
    let o = andersonlab(&["verify", "--checks", "duhamel", "--M", "32", "--eps", "0.125", "--K", "8", "--T", "2"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("check failed: duhamel"), "{err}");
    assert!(d.path().join("verify.json").exists());
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["verify", "--preset", "no-such-preset"][..],
        &["verify", "--M", "48"],
        &["verify", "--preset", "thm2.4-d2-p4"],
        &["verify", "--seeds", "x..y"],
        &["verify", "--checks", "nonsense"],
        &["sample", "--config", "/nonexistent/config.json"],
    ] {
        let o = andersonlab(args, d.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_andersonlab")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let d = tempfile::tempdir().unwrap();
    let file = d.path().join("cfg.json");
    std::fs::write(&file, r#"{"schema": 1, "preset": "unitarity-2d", "M": 64, "seed": 3, "eps": 0.0625}"#).unwrap();
    let o = andersonlab(&["verify", "--config", file.to_str().unwrap(), "--seed", "9", "--print-config"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let c: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(c["M"], 64);
    assert_eq!(c["seed"], 9);
    assert_eq!(c["K"], 24.0);
    assert_eq!(c["preset"], "unitarity-2d");
    std::fs::write(&file, r#"{"schema": 1, "bogus": 3}"#).unwrap();
    let o = andersonlab(&["verify", "--config", file.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let d = tempfile::tempdir().unwrap();
    let args = ["enhance", "--M", "32", "--eps", "0.125", "--seed", "4"];
    let run = |threads: &str, sub: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_andersonlab"))
            .args(args)
            .arg("--out")
            .arg(d.path().join(sub))
            .env("ANDERSONLAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run("1", "a");
    run("3", "b");
    let mut names: Vec<_> = std::fs::read_dir(d.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        let a = std::fs::read(d.path().join("a").join(&n)).unwrap();
        let b = std::fs::read(d.path().join("b").join(&n)).unwrap();
        if n.to_string_lossy().ends_with(".json") {
            // Only the output directory in the embedded config differs.
            let strip = |v: &[u8], sub: &str| {
                String::from_utf8_lossy(v).replace(&d.path().join(sub).to_string_lossy().into_owned(), "OUT")
            };
            assert_eq!(strip(&a, "a"), strip(&b, "b"), "{n:?}");
        } else {
            assert_eq!(a, b, "{n:?}");
        }
    }
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_andersonlab"))
        .args(["presets"])
        .env("ANDERSONLAB_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let _ = d;
}

#[test]
fn presets_are_listed() {
    let o = Command::new(env!("CARGO_BIN_EXE_andersonlab")).arg("presets").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["reconstruction-2d", "thm6.3-cauchy", "thm4.3-p10_3", "nls-gwp", "verify-standard"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn spectrum_and_nls_reports() {
    let d = tempfile::tempdir().unwrap();
    let o = andersonlab(&["spectrum", "--M", "32", "--eps", "0.125", "--K", "8"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&d.path().join("spectrum.json"));
    assert_eq!(r["config"]["M"], 32);
    let o = andersonlab(&["nls", "--M", "32", "--eps", "0.125", "--K", "8", "--T", "0.01", "--dt", "0.001"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("nls.json").exists());
}
