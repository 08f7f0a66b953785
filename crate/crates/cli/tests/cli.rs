use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use focir::dataset::{build_sample_at, load_tables, write_tables, SpaceTimeGrid, ZoneSlotFrame};
use focir::focirnet::Checkpoint;
use focir::Tensor;

const CONFIG: &str = r#"
[data]
slot_minutes = 60

[model]
lookback = 3
conv_filters = [3, 3]
filter_length = 3
indrnn_hidden = 3
indrnn_layers = 1
dense_layers = 1

[train]
max_epochs = 3
patience = 2
batch_size = 16

[synth]
n_zones = 6
n_days = 3
slot_minutes = 60
grid_rows = 2
grid_cols = 3
"#;

struct Env {
    dir: tempfile::TempDir,
}

impl Env {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
        Env { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_focir"))
            .current_dir(self.dir.path())
            .env_remove("FOCIR_CONFIG")
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    fn synth(&self) {
        self.ok(&["--config", "run.toml", "synth", "--out", "data"]);
    }

    fn train(&self, variant: &str, out: &str) {
        self.ok(&[
            "--config",
            "run.toml",
            "train",
            "--data",
            "data",
            "--target",
            "demand",
            "--variant",
            variant,
            "--out",
            out,
        ]);
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn synth_files_parse_back_and_are_deterministic() {
    let env = Env::new();
    let summary = env.ok(&["--config", "run.toml", "synth", "--out", "a"]);
    assert!(summary.starts_with("zones=6 slots=72 "), "{summary}");
    env.ok(&["--config", "run.toml", "synth", "--out", "b"]);
    for f in [
        "orders.csv",
        "congestion.csv",
        "weather.csv",
        "poi.csv",
        "truth.csv",
    ] {
        assert_eq!(
            read(&env.path("a").join(f)),
            read(&env.path("b").join(f)),
            "{f}"
        );
    }
    let tables = load_tables(&env.path("a")).unwrap();
    let grid = SpaceTimeGrid::new(6, 60, 3).unwrap();
    ZoneSlotFrame::from_tables(&tables, grid, None).unwrap();
    assert_eq!(
        env.ok(&["--config", "run.toml", "ingest", "--data", "a"]),
        summary
    );

    env.ok(&["--config", "run.toml", "synth", "--out", "c", "--seed", "9"]);
    assert_ne!(
        read(&env.path("a/orders.csv")),
        read(&env.path("c/orders.csv"))
    );
}

#[test]
fn invalid_invocations_exit_with_usage_code() {
    let env = Env::new();
    std::fs::write(env.path("zero.toml"), "[synth]\nn_days = 0\n").unwrap();
    assert_eq!(
        code(&env.run(&["--config", "zero.toml", "synth", "--out", "z"])),
        1
    );
    std::fs::write(env.path("bad.toml"), "[model]\nnot_a_key = 1\n").unwrap();
    assert_eq!(
        code(&env.run(&["--config", "bad.toml", "synth", "--out", "z"])),
        1
    );
    assert_eq!(code(&env.run(&["frobnicate"])), 1);
    assert_eq!(code(&env.run(&["--help"])), 0);

    env.synth();
    let out = env.run(&[
        "--config", "run.toml", "train", "--data", "data", "--target", "supply", "--out", "m.json",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown target"));
    assert!(!env.path("m.json").exists());
    assert_eq!(
        code(&env.run(&["--config", "run.toml", "train", "--data", "missing", "--out", "m.json"])),
        2
    );
}

#[test]
fn config_path_from_environment() {
    let env = Env::new();
    let out = Command::new(env!("CARGO_BIN_EXE_focir"))
        .current_dir(env.dir.path())
        .env("FOCIR_CONFIG", env.path("run.toml"))
        .args(["synth", "--out", "d"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("zones=6 "));
}

#[test]
fn training_is_reproducible_and_predict_matches_forward() {
    let env = Env::new();
    env.synth();
    env.ok(&[
        "--config", "run.toml", "train", "--data", "data", "--target", "gap", "--out", "a.json",
        "--log", "log.csv",
    ]);
    env.ok(&[
        "--config", "run.toml", "train", "--data", "data", "--target", "gap", "--out", "b.json",
    ]);
    assert_eq!(
        std::fs::read(env.path("a.json")).unwrap(),
        std::fs::read(env.path("b.json")).unwrap()
    );
    let log = read(&env.path("log.csv"));
    assert!(log.starts_with("epoch,train_loss,val_loss\n1,"));

    let out = env.run(&[
        "predict",
        "--checkpoint",
        "a.json",
        "--data",
        "data",
        "--slot",
        "2",
    ]);
    assert_eq!(code(&out), 1);

    let text = env.ok(&[
        "predict",
        "--checkpoint",
        "a.json",
        "--data",
        "data",
        "--slot",
        "40",
    ]);
    let preds: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(text.lines().next(), Some("zone_id,prediction"));
    let ck = Checkpoint::load(&env.path("a.json")).unwrap();
    let tables = load_tables(&env.path("data")).unwrap();
    let frame = ZoneSlotFrame::from_tables(&tables, SpaceTimeGrid::new(6, 60, 3).unwrap(), Some(3))
        .unwrap();
    let net = &ck.network;
    let sample = build_sample_at(
        &frame,
        &net.layout,
        40,
        net.config.target,
        Some(&net.standardizer),
    )
    .unwrap();
    let expect = net.forward(&sample).unwrap();
    assert_eq!(preds.len(), 6);
    for (a, b) in preds.iter().zip(&expect) {
        assert_eq!(a.to_bits(), b.to_bits());
    }

    env.ok(&[
        "predict",
        "--checkpoint",
        "a.json",
        "--data",
        "data",
        "--slot",
        "72",
        "--clamp-zero",
        "--out",
        "p.csv",
    ]);
    let clamped = read(&env.path("p.csv"));
    assert_eq!(clamped.lines().count(), 7);
    assert!(clamped
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() >= 0.0));
    assert_eq!(
        code(&env.run(&[
            "predict",
            "--checkpoint",
            "a.json",
            "--data",
            "data",
            "--slot",
            "73"
        ])),
        2
    );
}

#[test]
fn evaluate_reports_model_and_baselines() {
    let env = Env::new();
    env.synth();
    env.train("focir", "m.json");
    env.ok(&[
        "evaluate",
        "--checkpoint",
        "m.json",
        "--data",
        "data",
        "--out",
        "metrics.csv",
    ]);
    let text = read(&env.path("metrics.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,target,mae,rmse,smape");
    assert!(lines[1].starts_with("FOCIR-Net,demand,"));
    assert!(lines[2].starts_with("persistence,demand,"));
    assert!(lines[3].starts_with("historical_average,demand,"));
    assert_eq!(lines.len(), 4);
    let stdout = env.ok(&[
        "evaluate",
        "--checkpoint",
        "m.json",
        "--data",
        "data",
        "--split",
        "val",
    ]);
    assert_eq!(stdout.lines().count(), 4);
}

#[test]
fn memorizes_constant_series() {
    let env = Env::new();
    let (n, t) = (3, 48);
    let grid = SpaceTimeGrid::new(n, 60, 2).unwrap();
    let frame = ZoneSlotFrame {
        grid,
        demand: Tensor::filled(&[n, t], 5.0),
        supplied: Tensor::filled(&[n, t], 4.0),
        gap: Tensor::filled(&[n, t], 1.0),
        congestion: Tensor::filled(&[n, t], 2.0),
        n_weather_categories: 1,
        weather_category: vec![0; t],
        temperature: vec![10.0; t],
        pm25: vec![30.0; t],
        poi: vec![4.0; n],
    };
    std::fs::create_dir_all(env.path("const")).unwrap();
    write_tables(&env.path("const"), &frame.to_tables()).unwrap();
    std::fs::write(
        env.path("fit.toml"),
        "[data]\nslot_minutes = 60\n[model]\nvariant = \"fin\"\nlookback = 2\ndense_layers = 1\n\
         [train]\nlearning_rate = 0.02\nl1_beta = 0.0\nl2_alpha = 0.0\nmax_epochs = 400\npatience = 400\nbatch_size = 8\n",
    )
    .unwrap();
    env.ok(&[
        "--config", "fit.toml", "train", "--data", "const", "--out", "c.json",
    ]);
    let text = env.ok(&[
        "evaluate",
        "--checkpoint",
        "c.json",
        "--data",
        "const",
        "--split",
        "train",
    ]);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let mae: f64 = row[2].parse().unwrap();
    assert!(mae < 0.05, "{text}");
}

#[test]
fn importance_needs_gate() {
    let env = Env::new();
    env.synth();
    env.train("fin", "fin.json");
    let top = env.ok(&["importance", "--checkpoint", "fin.json", "--out-dir", "imp"]);
    assert_eq!(top.lines().count(), 5);
    let spatial = read(&env.path("imp/importance_spatial.csv"));
    assert!(spatial.starts_with("feature,score\n"));
    let total: f64 = spatial
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
    let temporal = read(&env.path("imp/importance_temporal.csv"));
    assert!(temporal.starts_with("zone,group,score\n"));

    env.train("ocir", "ocir.json");
    let out = env.run(&[
        "importance",
        "--checkpoint",
        "ocir.json",
        "--out-dir",
        "imp2",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no feature importance layer"));
}

#[test]
fn ablation_tables() {
    let env = Env::new();
    env.synth();
    let base = [
        "--config",
        "run.toml",
        "ablate",
        "--data",
        "data",
        "--max-epochs",
        "1",
        "--patience",
        "1",
    ];
    let with = |extra: &[&'static str]| [&base[..], extra].concat();
    env.ok(&with(&["--mode", "model", "--out", "m1.csv"]));
    env.ok(&with(&["--mode", "model", "--out", "m2.csv"]));
    let m = read(&env.path("m1.csv"));
    assert_eq!(m.lines().count(), 8);
    assert_eq!(m, read(&env.path("m2.csv")));
    env.ok(&with(&[
        "--mode", "feature", "--target", "gap", "--out", "f.csv",
    ]));
    let f = read(&env.path("f.csv"));
    assert_eq!(f.lines().count(), 7);
    assert!(f
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("gap")));
}
