use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gradnoise::projection::{sas_noise, write_noise};
use gradnoise::stable::StableParams;

fn gradnoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradnoise")).args(args).output().expect("binary runs")
}

fn set(args: &mut Vec<String>, kv: &[(&str, String)]) {
    for (k, v) in kv {
        args.push("--set".into());
        args.push(format!("{k}={v}"));
    }
}

fn run(cmd: &str, kv: &[(&str, String)]) -> Output {
    let mut args = vec![cmd.to_string()];
    set(&mut args, kv);
    gradnoise(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn sanity_sas_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = run("sanity-sas", &[("output_dir", path_str(&a))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let header = fs::read_to_string(a.join("sanity_sas.csv")).unwrap();
    assert!(header.starts_with(
        "alpha,sw_mean_p,ad_accept_frac,baseline_sw_mean_p,baseline_ad_accept_frac,n_degenerate\n"
    ));
    let rows = csv_rows(&a.join("sanity_sas.csv"));
    assert_eq!(rows.len(), 10);
    let cauchy = rows.iter().find(|r| r[0] == "1.0" || r[0] == "1").unwrap();
    assert!(cauchy[2].parse::<f64>().unwrap() < 0.05);
    assert!(fs::read_to_string(a.join("sanity_sas.svg")).unwrap().starts_with("<svg"));

    let out = run("sanity-sas", &[("output_dir", path_str(&b)), ("threads", "1".into())]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(a.join("sanity_sas.csv")).unwrap(), fs::read(b.join("sanity_sas.csv")).unwrap());
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.conf");
    let out_dir = dir.path().join("out");
    fs::write(
        &cfg,
        format!("# small sweep\nalphas = 1.0, 2.0\nrows = 100\ndim = 10\ndirections = 30\noutput_dir = {}\n", out_dir.display()),
    )
    .unwrap();
    let out = gradnoise(&["sanity-sas", "--config", cfg.to_str().unwrap(), "--set", "alphas=0.5,1.0,2.0"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_rows(&out_dir.join("sanity_sas.csv")).len(), 3);

    let printed = gradnoise(&["sanity-sas", "--config", cfg.to_str().unwrap(), "--print-config"]);
    let text = String::from_utf8(printed.stdout).unwrap();
    assert!(text.contains("rows = 100\n"));
    assert!(text.contains("seed = 0\n"));
}

#[test]
fn config_errors_exit_two() {
    for kv in [
        vec![("bogus", "1".to_string())],
        vec![("level", "0.07".to_string())],
        vec![("rows", "many".to_string())],
        vec![("rows", "6000".to_string()), ("alphas", "2.0".to_string()), ("directions", "1".into()), ("dim", "1".into())],
    ] {
        let out = run("sanity-sas", &kv);
        assert_eq!(code(&out), 2, "{kv:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(code(&gradnoise(&["test-1d"])), 2);
    assert_eq!(code(&gradnoise(&["sanity-sas", "--set", "rows"])), 2);
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = run(
        "sanity-sas",
        &[("output_dir", path_str(&blocker.join("sub"))), ("rows", "50".into()), ("dim", "5".into()), ("directions", "5".into())],
    );
    assert_ne!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("blocker"));
}

fn small_train(out: &Path) -> Vec<(&'static str, String)> {
    vec![
        ("blobs_n", "256".into()),
        ("blobs_dim", "5".into()),
        ("blobs_classes", "3".into()),
        ("hidden", "8".into()),
        ("batch_size", "16".into()),
        ("learning_rate", "0.05".into()),
        ("sgn_minibatches", "50".into()),
        ("directions", "20".into()),
        ("output_dir", path_str(out)),
    ]
}

#[test]
fn train_probe_zero_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let mut kv = small_train(dir.path());
    kv.push(("iterations", "0".into()));
    let out = run("train-probe", &kv);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("report.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "0");
}

#[test]
fn train_probe_checkpoints_and_manifest_replay() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let mut kv = small_train(&first);
    kv.extend([("save_noise", "true".into()), ("blobs_test_n", "64".into())]);
    let out = run("train-probe", &kv);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let rows = csv_rows(&first.join("report.csv"));
    let iters: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(iters, ["0", "100", "200", "300", "400", "500"]);
    for t in [0, 100, 200, 300, 400, 500] {
        assert!(first.join(format!("sgn_iter{t}.bin")).exists());
    }
    let trace = fs::read_to_string(first.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,train_loss,train_accuracy,test_loss,test_accuracy\n"));
    assert!(first.join("aggregates.svg").exists() && first.join("loss_accuracy.svg").exists());

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["batch_size"], "16");
    assert_eq!(manifest["trace"].as_array().unwrap().len(), 6);
    assert!(manifest["files"].as_array().unwrap().iter().any(|f| f == "sgn_iter500.bin"));

    let second = dir.path().join("second");
    let out = gradnoise(&[
        "train-probe",
        "--config",
        first.join("manifest.json").to_str().unwrap(),
        "--set",
        &format!("output_dir={}", second.display()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.csv", "trace.csv", "sgn_iter300.bin"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }

    let third = dir.path().join("third");
    let out = gradnoise(&["train-probe", "--config", first.join("config.resolved").to_str().unwrap(), "--set", &format!("output_dir={}", third.display())]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(first.join("report.csv")).unwrap(), fs::read(third.join("report.csv")).unwrap());
}

#[test]
fn full_batch_probe_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let mut kv = small_train(dir.path());
    kv.extend([("batch_size", "256".into()), ("full_batch_probe", "true".into()), ("iterations", "0".into())]);
    let out = run("train-probe", &kv);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

fn idx_file(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for d in dims {
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(payload);
    out
}

#[test]
fn train_probe_on_idx_files() {
    let dir = tempfile::tempdir().unwrap();
    let n = 40u32;
    let pixels: Vec<u8> = (0..n * 4).map(|i| ((i * 37) % 256) as u8).collect();
    let labels: Vec<u8> = (0..n).map(|i| (i % 3) as u8).collect();
    let img = dir.path().join("img.idx");
    let lbl = dir.path().join("lbl.idx");
    fs::write(&img, idx_file(0x803, &[n, 2, 2], &pixels)).unwrap();
    fs::write(&lbl, idx_file(0x801, &[n], &labels)).unwrap();
    let out_dir = dir.path().join("out");
    let base = vec![
        ("dataset", "idx".to_string()),
        ("train_images", path_str(&img)),
        ("train_labels", path_str(&lbl)),
        ("test_images", path_str(&img)),
        ("test_labels", path_str(&lbl)),
        ("hidden", "6".into()),
        ("batch_size", "4".into()),
        ("iterations", "20".into()),
        ("checkpoint_every", "10".into()),
        ("sgn_minibatches", "20".into()),
        ("directions", "10".into()),
        ("output_dir", path_str(&out_dir)),
    ];
    let out = run("train-probe", &base);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trace = csv_rows(&out_dir.join("trace.csv"));
    assert_eq!(trace.len(), 3);
    assert!(!trace[0][3].is_empty());

    fs::write(&lbl, idx_file(0x801, &[n - 1], &labels[..39])).unwrap();
    assert_eq!(code(&run("train-probe", &base)), 3);
    fs::write(&lbl, idx_file(0x802, &[n], &labels)).unwrap();
    assert_eq!(code(&run("train-probe", &base)), 3);
    fs::remove_file(&lbl).unwrap();
    assert_eq!(code(&run("train-probe", &base)), 1);
}

#[test]
fn estimate_alpha_on_stable_noise() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("noise.bin");
    let noise = sas_noise(StableParams::symmetric(1.5).unwrap(), 1000, 1000, 42).unwrap();
    write_noise(&noise, fs::File::create(&bin).unwrap()).unwrap();
    let out = run("estimate-alpha", &[("input", path_str(&bin))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["format"], "sgnmat");
    assert_eq!(v["k1"], 1000);
    assert!((v["alpha_hat"].as_f64().unwrap() - 1.5).abs() < 0.05, "{v}");

    let txt = dir.path().join("noise.txt");
    let text: String = noise.data()[..10_000].iter().map(|x| format!("{x}\n")).collect();
    fs::write(&txt, text).unwrap();
    let json = dir.path().join("alpha.json");
    let out = run("estimate-alpha", &[("input", path_str(&txt)), ("k1", "100".into()), ("output", path_str(&json))]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!((v["format"].as_str(), v["k1"].as_u64(), v["n"].as_u64()), (Some("text"), Some(100), Some(10_000)));

    assert_eq!(code(&run("estimate-alpha", &[("input", path_str(&txt)), ("k1", "7".into())])), 2);
    let mut corrupt = fs::read(&bin).unwrap();
    corrupt.truncate(1000);
    fs::write(&bin, corrupt).unwrap();
    assert_eq!(code(&run("estimate-alpha", &[("input", path_str(&bin))])), 3);
}

#[test]
fn test_1d_reference_sample() {
    let fixture: serde_json::Value =
        serde_json::from_str(include_str!("../../core/tests/fixtures/normality_reference.json")).unwrap();
    let sample = &fixture["examples"]["normal_1000"];
    let values: Vec<f64> = sample["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.txt");
    fs::write(&path, values.iter().map(|v| format!("{v}\n")).collect::<String>()).unwrap();
    let out = run("test-1d", &[("input", path_str(&path))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 1000);
    assert_eq!(v["shapiro_wilk"]["accepted"], true);
    assert_eq!(v["anderson_darling"]["accepted"], true);
    let p = v["shapiro_wilk"]["p_value"].as_f64().unwrap();
    assert!((p - sample["p"].as_f64().unwrap()).abs() < 2e-3);
    assert!(v["anderson_darling"]["p_value"].is_null());
}

#[test]
fn test_1d_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.txt");
    fs::write(&path, "3.5\n".repeat(50)).unwrap();
    let out = run("test-1d", &[("input", path_str(&path))]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
    fs::write(&path, "1\n2\nthree\n").unwrap();
    assert_eq!(code(&run("test-1d", &[("input", path_str(&path))])), 3);
    fs::write(&path, "1\n2\n").unwrap();
    assert_eq!(code(&run("test-1d", &[("input", path_str(&path))])), 3);
    assert_eq!(code(&run("test-1d", &[("input", path_str(&dir.path().join("missing")))])), 1);
}
