use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mmfe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmfe")).args(args).output().expect("binary runs")
}

fn run_bundled(name: &str, dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", name, "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    mmfe(&args)
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn identity_converges_in_one_step() {
    let tmp = TempDir::new().unwrap();
    let out = run_bundled("identity_trivial", tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(tmp.path());
    assert_eq!(r["iterations"], 1);
    assert_eq!(r["status"], "converged");
    assert!(r["config_hash"].as_str().unwrap().len() == 64);
    assert_eq!(r["seed"], 0);
    for f in ["trace.csv", "policy.csv", "populations.csv", "report.json"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
}

#[test]
fn malformed_config_names_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "solver = \"exact\"\n[env]\nname = \"identity\"\n[exact]\nmax_outer = -3\n").unwrap();
    let out = mmfe(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exact.max_outer"), "{}", stderr(&out));

    std::fs::write(&cfg, "solver = \"exact\"\n[env]\nname = \"identity\"\n[exact]\neps = 0.0\n").unwrap();
    let out = mmfe(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exact.eps"), "{}", stderr(&out));

    std::fs::write(&cfg, "solver = \"annealing\"\n[env]\nname = \"identity\"\n").unwrap();
    let out = mmfe(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("solver"), "{}", stderr(&out));
}

#[test]
fn unknown_environment_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("env.toml");
    std::fs::write(&cfg, "solver = \"exact\"\n[env]\nname = \"lattice\"\n").unwrap();
    let out = mmfe(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("env.name"), "{}", stderr(&out));
}

#[test]
fn cap_exhaustion_exits_three_with_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("short.toml");
    std::fs::write(&cfg, "solver = \"exact\"\n[env]\nname = \"contracting\"\n[exact]\nmax_outer = 2\n").unwrap();
    let dir = tmp.path().join("run");
    let out = mmfe(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert_eq!(report(&dir)["status"], "cap_exhausted");
    assert!(dir.join("trace.csv").exists());
}

#[test]
fn custom_table_environment_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("table.toml");
    let text = r#"
solver = "exact"
seed = 4

[env]
name = "table"

[env.table]
name = "coin"
gamma = 0.8
n = 1

[[env.table.types]]
actions = [0, 1]
kernel = [[[0.9, 0.1], [0.5, 0.5]], [[0.5, 0.5], [0.1, 0.9]]]
reward = [[0.0, 0.2], [1.0, 0.5]]

[[env.table.types]]
actions = [0, 1]
kernel = [[[0.7, 0.3], [0.4, 0.6]], [[0.2, 0.8], [0.3, 0.7]]]
reward = [[0.1, 0.0], [0.0, 0.3]]
"#;
    std::fs::write(&cfg, text).unwrap();
    let dir = tmp.path().join("run");
    let out = mmfe(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(report(&dir)["env"], "coin");
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let out = run_bundled("identity_trivial", tmp.path(), &["--seed", "99"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(tmp.path());
    assert_eq!(r["seed"], 99);
    assert_eq!(r["config"]["seed"], 99);
    let trace = std::fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert!(trace.lines().any(|l| l == "# seed=99"));
}

#[test]
fn traces_are_reproducible_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let cfg = tmp.path().join("small.toml");
    std::fs::write(&cfg, "seed = 3\nsolver = \"rhpg\"\n[env]\nname = \"two_state\"\n[learner]\nagents = [500]\nmax_inner = 3000\nmax_outer = 5\ntrace_every = 100\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert!(mmfe(&["run", "--config", c, "--out", a.to_str().unwrap(), "--threads", "1"]).status.code().unwrap() != 2);
    assert!(mmfe(&["run", "--config", c, "--out", b.to_str().unwrap(), "--threads", "4"]).status.code().unwrap() != 2);
    let ta = std::fs::read(a.join("trace.csv")).unwrap();
    let tb = std::fs::read(b.join("trace.csv")).unwrap();
    assert_eq!(ta, tb);
    assert_eq!(std::fs::read(a.join("populations.csv")).unwrap(), std::fs::read(b.join("populations.csv")).unwrap());
}

#[test]
fn csv_artifacts_have_headers_and_short_numbers() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run_bundled("cyber_exact", tmp.path(), &[]).status.code(), Some(0));
    for f in ["trace.csv", "policy.csv", "populations.csv"] {
        let text = std::fs::read_to_string(tmp.path().join(f)).unwrap();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().unwrap();
        assert!(header.split(',').all(|h| h.parse::<f64>().is_err()), "{f}: {header}");
        for line in lines {
            for field in line.split(',').filter(|s| s.parse::<f64>().is_ok()) {
                let mantissa: String = field.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
                let significant = mantissa.trim_start_matches('0').len();
                assert!(significant <= 12, "{f}: {field}");
            }
        }
    }
    let trace = std::fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    for key in ["# version=", "# seed=", "# config_hash="] {
        assert!(trace.lines().any(|l| l.starts_with(key)), "{key}");
    }
}

#[test]
fn plotdata_kinds() {
    let tmp = TempDir::new().unwrap();
    let run = tmp.path().join("cyber");
    assert_eq!(run_bundled("cyber_threshold", &run, &[]).status.code(), Some(0));
    let out = mmfe(&["plotdata", "--trace", run.join("trace.csv").to_str().unwrap(), "--kind", "policy"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,series,value"));
    let rows: Vec<&str> = lines.collect();
    for j in 0..2 {
        assert_eq!(rows.iter().filter(|r| r.contains(&format!(",type_{j},"))).count(), 11);
    }
    assert!(rows.contains(&"0.4,type_0,0") && rows.contains(&"0.5,type_0,1"), "{rows:?}");

    let contracting = tmp.path().join("contracting");
    assert_eq!(run_bundled("contracting_exact", &contracting, &[]).status.code(), Some(0));
    let file = tmp.path().join("res.csv");
    let out = mmfe(&[
        "plotdata",
        "--trace",
        contracting.to_str().unwrap(),
        "--kind",
        "residual",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let values: Vec<f64> = std::fs::read_to_string(&file)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(values.len() > 3);
    assert!(values.iter().all(|v| *v > 0.0));
    assert!(values.windows(2).all(|w| w[1] <= w[0]));

    let out = mmfe(&["plotdata", "--trace", run.to_str().unwrap(), "--kind", "histogram"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("histogram"));
}

#[test]
fn compare_runs() {
    let tmp = TempDir::new().unwrap();
    let exact = tmp.path().join("exact");
    let learned = tmp.path().join("learned");
    let cyber = tmp.path().join("cyber");
    assert_eq!(run_bundled("contracting_exact", &exact, &[]).status.code(), Some(0));
    assert_eq!(run_bundled("contracting", &learned, &[]).status.code(), Some(0));
    assert_eq!(run_bundled("cyber_exact", &cyber, &[]).status.code(), Some(0));

    let out = mmfe(&["compare", exact.to_str().unwrap(), exact.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let same: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(same["population_w1"], 0.0);
    assert_eq!(same["policy_sup_norm"], 0.0);

    let dir = tmp.path().join("cmp");
    let out = mmfe(&["compare", exact.to_str().unwrap(), learned.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let cmp: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(cmp["population_w1"].as_f64().unwrap() < 0.05, "{cmp}");
    assert!(dir.join("compare.json").exists() && dir.join("residuals.csv").exists());

    let out = mmfe(&["compare", exact.to_str().unwrap(), cyber.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn envs_list_names_registry() {
    let out = mmfe(&["envs", "list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["cyber", "two_state", "contracting", "identity", "cycle", "table", "cyber_default"] {
        assert!(text.contains(name), "{name}");
    }
}
