use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str, file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .join(file)
}

fn debtstream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_debtstream"))
        .args(args)
        .env_remove("DEBTSTREAM_THREADS")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn network_args<'a>(edges: &'a Path, firms: &'a Path, out: &'a Path) -> Vec<&'a str> {
    vec!["--edges", s(edges), "--firms", s(firms), "--out", s(out)]
}

fn compute(name: &str, out: &Path) -> Output {
    let (e, f) = (fixture(name, "loans.csv"), fixture(name, "firms.csv"));
    let mut args = vec!["compute"];
    args.extend(network_args(&e, &f, out));
    debtstream(&args)
}

#[test]
fn chain_compute_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = compute("chain", dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ds = fs::read_to_string(dir.path().join("ds.csv")).unwrap();
    assert_eq!(
        ds,
        "firm,ds,bank_share,component_id\nfirm1,1.0,1.0,0\nfirm2,2.0,0.0,0\nfirm3,3.0,0.0,0\n"
    );
    assert_eq!(fs::read_to_string(dir.path().join("excluded.csv")).unwrap(), "firm\n");
    let components = json(&dir.path().join("components.json"));
    assert_eq!(components["manifest"]["command"], "compute");
    assert_eq!(components["components"][0]["size"], 3);
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["inputs"][0]["name"], "loans.csv");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["timing"]["wall_time_ms"].is_u64());
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 4, "stray files: {names:?}");
}

#[test]
fn series_method_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let (e, f) = (fixture("two_cycle", "loans.csv"), fixture("two_cycle", "firms.csv"));
    let mut args = vec!["compute", "--method", "series"];
    args.extend(network_args(&e, &f, dir.path()));
    assert!(debtstream(&args).status.success());
    let report = json(&dir.path().join("components.json"));
    assert!((report["mean_ds"].as_f64().unwrap() - 10.0).abs() < 1e-9);
    assert!(report["series_terms"].as_u64().unwrap() > 100);
}

#[test]
fn negative_amount_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.csv");
    let firms = dir.path().join("firms.csv");
    fs::write(&edges, "borrower,lender,amount\nb,a,10\na,b,-5\n").unwrap();
    fs::write(&firms, "firm,bank_borrowing,total_interfirm_credit,sector,surveyed\na,1,,,\nb,1,,,\n").unwrap();
    let mut args = vec!["compute"];
    let out_dir = dir.path().join("out");
    args.extend(network_args(&edges, &firms, &out_dir));
    let out = debtstream(&args);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("edges.csv:3"), "{stderr}");
}

#[test]
fn self_loan_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.csv");
    let firms = dir.path().join("firms.csv");
    fs::write(&edges, "borrower,lender,amount\na,a,5\n").unwrap();
    fs::write(&firms, "firm,bank_borrowing,total_interfirm_credit,sector,surveyed\na,1,,,\n").unwrap();
    let mut args = vec!["compute"];
    let out_dir = dir.path().join("out");
    args.extend(network_args(&edges, &firms, &out_dir));
    assert_eq!(debtstream(&args).status.code(), Some(3));
}

#[test]
fn seeded_commands_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (e, f) = (fixture("chain", "loans.csv"), fixture("chain", "firms.csv"));
    let mut args = vec!["reconstruct", "--method", "sparse"];
    args.extend(network_args(&e, &f, dir.path()));
    assert_eq!(debtstream(&args).status.code(), Some(4));
    assert_eq!(
        debtstream(&["synth", "--n", "10", "--out", s(dir.path())]).status.code(),
        Some(4)
    );
}

#[test]
fn whatif_on_the_two_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let (e, f) = (fixture("two_cycle", "loans.csv"), fixture("two_cycle", "firms.csv"));
    let mut args = vec!["whatif", "--remove", "firm2,firm3"];
    args.extend(network_args(&e, &f, dir.path()));
    let out = debtstream(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("whatif.json"));
    assert!((report["mean_before"].as_f64().unwrap() - 10.0).abs() < 1e-9);
    assert!((report["mean_after"].as_f64().unwrap() - 1.45).abs() < 1e-9);
    assert_eq!(report["mode"], "drop");

    let mut args = vec!["whatif", "--remove", "firm2,nobody"];
    args.extend(network_args(&e, &f, dir.path()));
    assert_eq!(debtstream(&args).status.code(), Some(3));
}

#[test]
fn sectors_with_one_firm_each_reproduce_firm_ds() {
    let dir = tempfile::tempdir().unwrap();
    let (e, f) = (fixture("outlier_toy", "loans.csv"), fixture("outlier_toy", "firms.csv"));
    let firms_csv = fs::read_to_string(&f).unwrap();
    let mut labels = String::from("firm,sector\n");
    let mut classes = String::from("sector,class\n");
    for (k, line) in firms_csv.lines().skip(1).enumerate() {
        let firm = line.split(',').next().unwrap();
        labels.push_str(&format!("{firm},sec_{firm}\n"));
        let class = ["upstream", "key", "downstream"][k % 3];
        classes.push_str(&format!("sec_{firm},{class}\n"));
    }
    let labels_path = dir.path().join("labels.csv");
    let classes_path = dir.path().join("classes.csv");
    fs::write(&labels_path, labels).unwrap();
    fs::write(&classes_path, classes).unwrap();

    let firm_out = dir.path().join("firm");
    assert!(compute("outlier_toy", &firm_out).status.success());
    let sector_out = dir.path().join("sector");
    let mut args = vec!["sectors", "--sector-labels", s(&labels_path), "--classes", s(&classes_path)];
    args.extend(network_args(&e, &f, &sector_out));
    let out = debtstream(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report = json(&sector_out.join("sectors.json"));
    let ds_csv = fs::read_to_string(firm_out.join("ds.csv")).unwrap();
    let mut matched = 0;
    for line in ds_csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let want: f64 = cols[1].parse().unwrap();
        let sector = report["sectors"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["sector"] == format!("sec_{}", cols[0]))
            .unwrap();
        assert!((sector["ds"].as_f64().unwrap() - want).abs() < 1e-10);
        matched += 1;
    }
    assert_eq!(matched, 8);

    let crosstab = fs::read_to_string(sector_out.join("crosstab.csv")).unwrap();
    assert!(crosstab.starts_with("class,bin,count\n"));
    let total: usize = crosstab
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 8);
}

#[test]
fn synth_truncate_reconstruct_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = |x: &str| dir.path().join(x);
    let synth = debtstream(&["synth", "--n", "120", "--seed", "5", "--mean-out-degree", "4", "--out", s(&d("net"))]);
    assert!(synth.status.success());
    let (e, f) = (d("net").join("edges.csv"), d("net").join("firms.csv"));
    let (cut, rec) = (d("cut"), d("rec"));
    let mut args = vec!["truncate", "--top", "2"];
    args.extend(network_args(&e, &f, &cut));
    assert!(debtstream(&args).status.success());
    let (ce, cf) = (cut.join("edges.csv"), cut.join("firms.csv"));
    let mut args = vec!["reconstruct", "--method", "sparse", "--seed", "11"];
    args.extend(network_args(&ce, &cf, &rec));
    let out = debtstream(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&rec.join("reconstruction.json"));
    assert_eq!(report["manifest"]["seed"], 11);
    assert_eq!(report["method"]["kind"], "sparse");
    assert!(report["comparison"]["spearman"].as_f64().unwrap() > 0.5);
    assert!(rec.join("edges.csv").exists() && rec.join("ds.csv").exists());
}

#[test]
fn loops_and_stats_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (e, f) = (fixture("outlier_toy", "loans.csv"), fixture("outlier_toy", "firms.csv"));
    let mut args = vec!["loops"];
    args.extend(network_args(&e, &f, dir.path()));
    assert!(debtstream(&args).status.success());
    let loops = json(&dir.path().join("loops.json"));
    assert_eq!(loops["two_cycles"][0], serde_json::json!(["loop_x", "loop_y"]));

    let computed = dir.path().join("c");
    assert!(compute("outlier_toy", &computed).status.success());
    let ds = computed.join("ds.csv");
    let stats = dir.path().join("stats");
    assert!(debtstream(&["stats", "correlate", "--ds", s(&ds), "--out", s(&stats)]).status.success());
    assert!(json(&stats.join("correlation.json"))["pearson"].as_f64().unwrap() < -0.9);
    assert!(debtstream(&["stats", "histogram", "--ds", s(&ds), "--bin-width", "1", "--out", s(&stats)])
        .status
        .success());
    let hist = fs::read_to_string(stats.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("lower,upper,count\n1.0,2.0,"));
    assert!(debtstream(&["stats", "fit-lognormal", "--edges", s(&e), "--out", s(&stats)])
        .status
        .success());
    assert_eq!(json(&stats.join("lognormal.json"))["n_samples"], 8);
}

#[test]
fn bad_thread_setting_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_debtstream"))
        .args(["synth", "--n", "10", "--seed", "1", "--out", s(dir.path())])
        .env("DEBTSTREAM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
