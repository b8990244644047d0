use std::path::{Path, PathBuf};
use std::process::Command;

use gibbs_mcid::Scenario;
use gibbs_mcid_cli::{read_dataset, read_recorded_argv, run};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibbs-mcid"))
}

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["gibbs-mcid"];
    argv.extend_from_slice(args);
    run(argv)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows (no comments) of a CSV file.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn header_value(path: &Path, key: &str) -> Option<String> {
    let prefix = format!("# {key}: ");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
}

#[test]
fn estimate_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let code = cli(&["estimate", "--scenario", "example2", "--n", "500", "--seed", "7", "--out", path_str(out)]);
        assert_eq!(code, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let r = rows(&a);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][0], "500");
}

#[test]
fn posterior_interval_stays_in_the_data_range() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("post.csv");
    let code = cli(&[
        "posterior", "--scenario", "example3", "--n", "250", "--omega", "auto", "--level", "0.90", "--seed", "1",
        "--out", path_str(&out),
    ]);
    assert_eq!(code, 0);
    let r = &rows(&out)[0];
    let (lo, hi): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
    let data = Scenario::builtin("example3").unwrap().generate(250, 1).unwrap();
    let (min, max) = data.range();
    assert!(min <= lo && lo <= hi && hi <= max, "[{lo}, {hi}] vs [{min}, {max}]");
    assert_eq!(header_value(&out, "omega_source").as_deref(), Some("calibrated"));
    let omega: f64 = header_value(&out, "omega").unwrap().parse().unwrap();
    let ratio: f64 = header_value(&out, "omega_ratio").unwrap().parse().unwrap();
    assert!((ratio - omega * 250f64.powf(0.4)).abs() < 1e-9);
    assert_eq!(r[5].parse::<f64>().unwrap(), omega);
}

#[test]
fn metropolis_sampler_and_draws_file() {
    let dir = TempDir::new().unwrap();
    let (out, draws) = (dir.path().join("m.csv"), dir.path().join("draws.csv"));
    let code = cli(&[
        "posterior", "--scenario", "example2", "--n", "200", "--omega", "0.5", "--sampler", "metropolis", "--draws",
        "3000", "--out", path_str(&out), "--draws-out", path_str(&draws),
    ]);
    assert_eq!(code, 0);
    assert_eq!(rows(&out)[0][0], "gibbs-metropolis");
    assert_eq!(rows(&draws).len(), 3000);
    let acc: f64 = header_value(&out, "acceptance_rate").unwrap().parse().unwrap();
    assert!(acc > 0.1 && acc < 0.9);
    assert!(!std::fs::read_to_string(&out).unwrap().contains("draws-out"));
}

#[test]
fn study_reproduces_bootstrap_coverage_on_example1() {
    let dir = TempDir::new().unwrap();
    let prefix = dir.path().join("ex1");
    let code = cli(&[
        "study", "--scenario", "example1", "--n", "500", "--reps", "500", "--seed", "11", "--out",
        path_str(&prefix),
    ]);
    assert_eq!(code, 0);
    let t1 = rows(&dir.path().join("ex1.table1.csv"));
    let t2 = rows(&dir.path().join("ex1.table2.csv"));
    assert_eq!(t1.len(), 2);
    assert_eq!(t2.len(), 2);
    let boot = t2.iter().find(|r| r[2] == "bootstrap-ci").unwrap();
    let cov: f64 = boot[3].parse().unwrap();
    assert!((cov - 0.91).abs() <= 0.04, "coverage {cov}");
    let table2 = std::fs::read_to_string(dir.path().join("ex1.table2.csv")).unwrap();
    assert!(table2.contains("\nscenario,n,method,coverage,mean_length,coverage_se\n"));
    assert!(table2.contains("# median_omega_ratio: "));
}

#[test]
fn generated_data_round_trips_through_estimate() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("d.csv");
    assert_eq!(cli(&["generate", "--scenario", "example4", "--n", "80", "--seed", "2", "--out", path_str(&data)]), 0);
    let read = read_dataset(&data).unwrap();
    assert_eq!(read, Scenario::builtin("example4").unwrap().generate(80, 2).unwrap());

    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(cli(&["estimate", "--data", path_str(&data), "--seed", "2", "--out", path_str(&a)]), 0);
    assert_eq!(
        cli(&["estimate", "--scenario", "example4", "--n", "80", "--seed", "2", "--out", path_str(&b)]),
        0
    );
    assert_eq!(rows(&a), rows(&b));
}

#[test]
fn scenario_files_are_accepted() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("ex2.toml");
    std::fs::write(
        &file,
        "name = \"example2\"\nsupport_hint = [-5.0, 7.0]\n[marginal]\nkind = \"normal\"\n\
         [marginal.params]\nmu = 1.0\nsigma = 1.0\n[eta]\nkind = \"cdf-link\"\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(cli(&["generate", "--scenario", path_str(&file), "--n", "30", "--out", path_str(&a)]), 0);
    assert_eq!(cli(&["generate", "--scenario", "example2", "--n", "30", "--out", path_str(&b)]), 0);
    assert_eq!(rows(&a), rows(&b));

    std::fs::write(&file, std::fs::read_to_string(&file).unwrap().replace("[eta]", "[etta]")).unwrap();
    let out = bin()
        .args(["generate", "--scenario", path_str(&file), "--n", "30"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error: config: "), "{stderr}");
    assert!(stderr.lines().next().unwrap().contains("etta"));
}

#[test]
fn shipped_scenario_files_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    assert!(files.len() >= 3);
    for f in &files {
        let s = gibbs_mcid::config::load_scenario_config(f).unwrap();
        let t = s.true_mcid().unwrap();
        let (lo, hi) = s.support_hint();
        assert!(lo < t && t < hi, "{}: {t}", f.display());
    }
    let ex2 = gibbs_mcid::config::load_scenario_config(dir.join("example2.toml")).unwrap();
    assert_eq!(ex2, Scenario::builtin("example2").unwrap());
}

#[test]
fn unknown_scenario_lists_builtins() {
    let out = bin().args(["estimate", "--scenario", "example9", "--n", "50"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let first = String::from_utf8(out.stderr).unwrap().lines().next().unwrap().to_string();
    assert!(first.starts_with("error: validation: "), "{first}");
    for name in gibbs_mcid::scenarios::BUILTIN_NAMES {
        assert!(first.contains(name), "{first}");
    }
}

#[test]
fn unwritable_output_is_a_validation_error() {
    let out = bin()
        .args(["generate", "--scenario", "example1", "--n", "5", "--out", "/nonexistent-dir/x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: io: "));
}

#[test]
fn bad_flags_exit_with_one() {
    for args in [
        vec!["estimate", "--n", "10"],
        vec!["posterior", "--scenario", "example1", "--n", "10", "--omega", "-3"],
        vec!["posterior", "--scenario", "example1", "--n", "10", "--prior", "normal:0"],
        vec!["study", "--scenario", "example1", "--n", "10", "--omega-policy", "pilot:0"],
        vec!["frobnicate"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let stderr = String::from_utf8(out.stderr).unwrap();
        assert!(stderr.starts_with("error: usage: "), "{stderr}");
    }
    assert_eq!(cli(&["--help"]), 0);
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("flat.toml");
    // eta never crosses 1/2, so there is no true MCID
    std::fs::write(
        &file,
        "support_hint = [0.0, 1.0]\n[marginal]\nkind = \"uniform\"\n[marginal.params]\na = 0\nb = 1\n\
         [eta]\nkind = \"table\"\n[eta.params]\nx = [0.0, 1.0]\neta = [0.1, 0.2]\n",
    )
    .unwrap();
    let out = bin()
        .args(["study", "--scenario", path_str(&file), "--n", "20", "--reps", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: no-root: "));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["study", "--scenario", "example2", "--n", "150", "--reps", "12", "--bootstrap", "100", "--draws", "0"];
    let one = bin().args(args).args(["--out", path_str(&a)]).env("GIBBS_MCID_THREADS", "1").status().unwrap();
    let four = bin().args(args).args(["--out", path_str(&b), "--threads", "4"]).status().unwrap();
    assert!(one.success() && four.success());
    for t in ["table1.csv", "table2.csv"] {
        let read = |p: &PathBuf| std::fs::read(PathBuf::from(format!("{}.{t}", p.display()))).unwrap();
        assert_eq!(read(&a), read(&b));
    }
}

#[test]
fn replay_reproduces_every_subcommand() {
    let dir = TempDir::new().unwrap();
    let d = |name: &str| dir.path().join(name);
    let data = d("data.csv");
    assert_eq!(cli(&["generate", "--scenario", "example1", "--n", "60", "--seed", "4", "--out", path_str(&data)]), 0);
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["generate", "--scenario", "cusp", "--n", "40"], "generate.csv"),
        (vec!["estimate", "--data", path_str(&data), "--bootstrap", "100"], "estimate.csv"),
        (vec!["posterior", "--scenario", "example4", "--n", "120", "--draws", "500"], "posterior.csv"),
        (vec!["calibrate", "--scenario", "jump", "--n", "100", "--interval", "exact"], "calibrate.csv"),
        (
            vec!["rate-check", "--scenario", "jump", "--n-grid", "50,200,800", "--reps", "10"],
            "rate.csv",
        ),
        (
            vec!["compare-logistic", "--scenario", "logit-demo-a", "--n", "100", "--draws", "500"],
            "compare.csv",
        ),
    ];
    for (args, name) in cases {
        let first = d(name);
        let mut full = args.clone();
        full.extend(["--out", path_str(&first)]);
        assert_eq!(cli(&full), 0, "{args:?}");
        assert_eq!(read_recorded_argv(&first).unwrap(), args);
        let second = d(&format!("replayed-{name}"));
        assert_eq!(cli(&["replay", path_str(&first), "--out", path_str(&second)]), 0);
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap(), "{name}");
    }

    let prefix = d("study");
    let args = ["study", "--scenario", "example3", "--n", "100", "--reps", "5", "--bootstrap", "100", "--draws", "500"];
    let mut full = args.to_vec();
    full.extend(["--out", path_str(&prefix)]);
    assert_eq!(cli(&full), 0);
    assert_eq!(cli(&["replay", path_str(&d("study.table1.csv")), "--out", path_str(&d("again"))]), 0);
    for t in ["table1.csv", "table2.csv"] {
        assert_eq!(
            std::fs::read(d(&format!("study.{t}"))).unwrap(),
            std::fs::read(d(&format!("again.{t}"))).unwrap()
        );
    }
}
