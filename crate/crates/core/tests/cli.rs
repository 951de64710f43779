use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use ising_qfi::cli::commands::{
    bayes_sim_value, fisher_mag_table, optimal_field_table, qfi_scan_table, scaling_table, sld_dump_value,
    BayesSummary, SldDump,
};
use ising_qfi::cli::config::SweepConfig;
use ising_qfi::thermo::{gtilde_quadrature, peak_density_estimate};

const BIN: &str = env!("CARGO_BIN_EXE_ising-qfi");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn config(json: &str) -> SweepConfig {
    SweepConfig::from_json(json).unwrap()
}

struct Table {
    meta: HashMap<String, String>,
    rows: Vec<HashMap<String, String>>,
}

/// Rows with no error cell only contain plain numbers and tokens, so a
/// split on commas is enough.
fn parse(text: &str) -> Table {
    let mut meta = HashMap::new();
    let mut lines = text.lines();
    let header: Vec<String> = loop {
        let line = lines.next().expect("header");
        match line.strip_prefix("# ") {
            Some(m) => {
                let (k, v) = m.split_once(": ").unwrap();
                meta.insert(k.to_string(), v.to_string());
            }
            None => break line.split(',').map(String::from).collect(),
        }
    };
    let rows = lines
        .map(|l| {
            let cells = l.splitn(header.len(), ',');
            header.iter().cloned().zip(cells.map(String::from)).collect()
        })
        .collect();
    Table { meta, rows }
}

fn num(row: &HashMap<String, String>, col: &str) -> f64 {
    row[col]
        .parse()
        .unwrap_or_else(|_| panic!("column {col} = {:?}", row[col]))
}

#[test]
fn gamma_ratio_plot_data() {
    let cfg = config(
        r#"{"task": "qfi-scan", "L": [2], "J": 0.5, "h": {"start": 0, "stop": 3, "step": 0.01}, "beta": [1, 10, 100, 1000, "inf"]}"#,
    );
    let t = parse(&qfi_scan_table(&cfg).unwrap().render());
    assert_eq!(t.rows.len(), 301 * 5);
    assert!(t.rows.iter().all(|r| r["error"].is_empty()));
    let gamma = |beta: &str, h: f64| {
        let r = t
            .rows
            .iter()
            .find(|r| r["beta"] == beta && (num(r, "h") - h).abs() < 1e-9)
            .unwrap();
        num(r, "gamma_J")
    };
    // h = 0 has G_J(inf) = 0, so no ratio is defined there.
    assert!(t.rows.iter().filter(|r| r["h"] == "0").all(|r| r["gamma_J"].is_empty()));
    assert!(gamma("10", 0.01) < 1.0 && gamma("100", 0.01) < 1.0);
    for beta in ["1", "10", "100", "1000"] {
        let above = (1..=300).any(|i| gamma(beta, i as f64 * 0.01) > 1.05);
        assert!(above, "beta = {beta}: no region with gamma > 1");
    }
    for beta in ["10", "100", "1000"] {
        assert!((gamma(beta, 3.0) - 1.0).abs() < 1e-6);
    }
    assert!(t
        .rows
        .iter()
        .filter(|r| r["beta"] == "inf" && r["h"] != "0")
        .all(|r| r["gamma_J"] == "1"));
}

#[test]
fn infinite_chain_cusp() {
    let cfg = config(r#"{"L": ["inf"], "J": 1, "h": {"start": 0.5, "stop": 1.5, "step": 0.01}, "beta": [20]}"#);
    let t = parse(&qfi_scan_table(&cfg).unwrap().render());
    let values: Vec<(f64, f64)> = t.rows.iter().map(|r| (num(r, "h"), num(r, "G_J"))).collect();
    let (i, &(h_peak, g_peak)) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    assert!((h_peak - 1.0).abs() < 1e-9);
    assert!(t.rows.iter().all(|r| r["backend"] == "thermo"));
    // A cusp: both one-sided slopes are steep and of opposite sign.
    let left = (g_peak - values[i - 1].1) / 0.01;
    let right = (values[i + 1].1 - g_peak) / 0.01;
    assert!(left > 10.0 && right < -10.0, "slopes {left} {right}");
    for w in values[..i].windows(2) {
        assert!(w[1].1 > w[0].1);
    }
    for w in values[i..].windows(2) {
        assert!(w[1].1 < w[0].1);
    }
}

#[test]
fn empty_field_range_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = run(&[
        "qfi-scan",
        "--L",
        "2",
        "--J",
        "1",
        "--h",
        "1:0:0.1",
        "--beta",
        "inf",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
    assert!(!out.exists());
}

#[test]
fn row_level_errors_do_not_stop_the_scan() {
    // L = 5 is odd and above the cap of 4, so it has no backend.
    let cfg = config(r#"{"L": [2, 5], "J": 1, "h": [0.5, 1], "beta": ["inf"], "max_sites": 4}"#);
    let t = parse(&qfi_scan_table(&cfg).unwrap().render());
    assert_eq!(t.rows.len(), 4);
    assert!(t.rows[..2].iter().all(|r| r["error"].is_empty()));
    for r in &t.rows[2..] {
        assert!(r["error"].contains("capacity"), "{}", r["error"]);
        assert!(r["G_J"].is_empty());
    }
}

#[test]
fn optimal_field_zero_temperature() {
    let cfg = config(r#"{"L": [2, 3, 4, 6, 16, 64], "J": [0.5, 1, 2], "beta": ["inf"]}"#);
    let t = parse(&optimal_field_table(&cfg).unwrap().render());
    assert_eq!(t.rows.len(), 18);
    for r in &t.rows {
        assert!((num(r, "h_star") - num(r, "J")).abs() < 1e-6 * num(r, "J"), "{r:?}");
    }
    assert_eq!(t.rows.iter().filter(|r| r["backend"] == "exact").count(), 12);
}

#[test]
fn optimal_field_temperature_drift() {
    let cfg = config(r#"{"L": [2], "J": [0.1, 0.5, 1, 2, 4, 8], "beta": [1, 10]}"#);
    let t = parse(&optimal_field_table(&cfg).unwrap().render());
    let h_star = |j: &str, beta: &str| {
        num(
            t.rows.iter().find(|r| r["J"] == j && r["beta"] == beta).unwrap(),
            "h_star",
        )
    };
    // Temperature well above J: the maximum sits at zero field.
    assert!(h_star("0.1", "1") < 1e-3);
    assert!(h_star("0.5", "1") < 1e-3);
    // beta J = 1: back near J.
    assert!((h_star("0.1", "10") / 0.1 - 1.0).abs() < 0.2);
}

#[test]
fn optimal_field_infinite_chain_peak() {
    let cfg = config(r#"{"L": ["inf"], "J": 1, "beta": [20]}"#);
    let t = parse(&optimal_field_table(&cfg).unwrap().render());
    let r = &t.rows[0];
    assert_eq!(r["backend"], "thermo");
    assert!((num(r, "h_star") - 1.0).abs() < 1e-6);
    let estimate = peak_density_estimate(1.0, 20.0);
    assert_eq!(num(r, "peak_estimate"), estimate);
    assert!((num(r, "G_per_site") / estimate - 1.0).abs() < 0.05);
}

#[test]
fn sld_dump_two_site_ground_state() {
    let cfg = config(r#"{"L": [2], "J": 1, "h": 1, "beta": ["inf"]}"#);
    let d = sld_dump_value(&cfg).unwrap();
    assert!(d.closed_form_residual.unwrap() < 1e-8);
    assert!(d.trace_rho_sld.abs() < 1e-12);
    assert!((d.trace_rho_sld_squared - 0.25).abs() < 1e-12);
    assert!((d.qfi - 0.25).abs() < 1e-12);
    assert_eq!(d.sld.len(), 4);
}

#[test]
fn sld_dump_thermal_diagnostics() {
    for beta in ["1", "10", "100"] {
        let cfg = config(&format!(r#"{{"L": [3], "J": 0.7, "h": 1.2, "beta": [{beta}]}}"#));
        let d = sld_dump_value(&cfg).unwrap();
        assert!(d.closed_form_residual.is_none());
        assert!(d.trace_rho_sld.abs() < 1e-8);
        assert!((d.trace_rho_sld_squared - d.qfi).abs() < 1e-8 * d.qfi.max(1.0));
        assert!(d.defining_equation_residual < 1e-10);
        assert!(d.hermiticity_defect < 1e-12);
    }
}

#[test]
fn sld_dump_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sld.json");
    let o = run(&[
        "sld-dump",
        "--L",
        "2",
        "--J",
        "1",
        "--h",
        "0.8",
        "--beta",
        "inf",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let parsed: SldDump = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.beta, f64::INFINITY);
    assert!(text.contains("\"beta\": \"inf\""));
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", text);
}

#[test]
fn sld_dump_capacity() {
    let o = run(&["sld-dump", "--L", "13", "--J", "1", "--h", "1", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(o.stdout.is_empty());
}

#[test]
fn fisher_mag_bounded_by_qfi() {
    let cfg = config(r#"{"L": [2, 3], "J": [0.5, 2], "beta": [3, 10]}"#);
    let t = parse(&fisher_mag_table(&cfg).unwrap().render());
    assert_eq!(t.rows.len(), 8);
    for r in &t.rows {
        assert!(r["error"].is_empty());
        assert!(num(r, "F_J") <= num(r, "G_J") + 1e-9);
        let ratio = num(r, "ratio");
        assert!(ratio > 0.0 && ratio <= 1.0 + 1e-12);
        assert!(num(r, "delta_J") > 0.0);
    }
}

fn bayes(json: &str) -> (ising_qfi::cli::output::Csv, BayesSummary) {
    bayes_sim_value(&config(json)).unwrap()
}

#[test]
fn bayes_defaults_reach_the_bound() {
    let (csv, summary) = bayes(r#"{"seed": 11}"#);
    assert_eq!(
        (summary.sites, summary.beta, summary.true_coupling, summary.n_sets),
        (2, 1.0, 3.0, 20)
    );
    let last = summary.rows.last().unwrap();
    assert_eq!(last.measurements, 500);
    assert!((last.bayes_variance.unwrap() / last.cr_bound - 1.0).abs() < 0.2);
    assert!((last.asymptotic_variance.unwrap() / last.cr_bound - 1.0).abs() < 0.1);
    // The Bayes variance is far above the bound for few measurements.
    assert!(summary.rows[0].bayes_variance.unwrap() > 1.5 * summary.rows[0].cr_bound);
    let t = parse(&csv.render());
    assert_eq!(t.meta["seed"], "11");
    assert_eq!(t.rows.len(), 8);
}

#[test]
fn bayes_seed_changes_only_the_scatter() {
    let (_, a) = bayes(r#"{"seed": 5, "M": [20, 100]}"#);
    let (_, b) = bayes(r#"{"seed": 10, "M": [20, 100]}"#);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.asymptotic_variance, y.asymptotic_variance);
        assert_eq!(x.cr_bound, y.cr_bound);
        assert_ne!(x.bayes_variance, y.bayes_variance);
    }
    let (_, again) = bayes(r#"{"seed": 5, "M": [20, 100]}"#);
    assert_eq!(a, again);
}

#[test]
fn bayes_single_shot_is_uninformative() {
    let (_, s) = bayes(r#"{"seed": 3, "M": [1]}"#);
    let row = &s.rows[0];
    let (lo, hi) = (s.grid.lo, s.grid.hi);
    let prior = (hi - lo).powi(2) / 12.0;
    let v = row.bayes_variance.unwrap();
    assert!(v > 0.5 * prior && v < 1.2 * prior, "{v} vs prior {prior}");
    // The flat prior alone is already tighter than 1/F here.
    assert!(v < row.cr_bound);
    assert!(v > 100.0 * s.rows[0].cr_bound / 500.0);
}

#[test]
fn bayes_summary_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bayes.json");
    std::fs::write(&cfg, r#"{"task": "bayes-sim", "M": [10, 50], "n_sets": 4}"#).unwrap();
    let out = dir.path().join("bayes.csv");
    let o = run(&[
        "bayes-sim",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("bayes.summary.json")).unwrap();
    let parsed: BayesSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", text);
    assert_eq!(parsed.seed, 2);
    assert_eq!(parsed.rows.len(), 2);
    let t = parse(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(
        num(&t.rows[1], "bayes_variance"),
        parsed.rows[1].bayes_variance.unwrap()
    );
}

#[test]
fn scaling_exponents() {
    let cfg = config(r#"{"L": [64, 128, 256, 512], "J": 1, "h": [1, 2], "beta": ["inf"]}"#);
    let (csv, fits) = scaling_table(&cfg).unwrap();
    assert!((fits[0].exponent - 2.0).abs() < 0.02);
    assert!((fits[1].exponent - 1.0).abs() < 0.02);
    let t = parse(&csv.render());
    assert_eq!(t.rows.len(), 8);
    assert!(t.rows.iter().all(|r| r["density_limit"].is_empty()));
}

#[test]
fn scaling_approaches_density() {
    let cfg = config(r#"{"L": [100, 200, 400, 800, 1600], "J": 1, "h": 1, "beta": [5]}"#);
    let (csv, _) = scaling_table(&cfg).unwrap();
    let t = parse(&csv.render());
    let limit = gtilde_quadrature(1.0, 1.0, 5.0).unwrap().total;
    let gaps: Vec<f64> = t.rows.iter().map(|r| (num(r, "G_per_site") - limit).abs()).collect();
    assert_eq!(num(&t.rows[0], "density_limit"), limit);
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(gaps.last().unwrap() < &1e-6);
    assert!((num(&t.rows[0], "alpha") - 1.0).abs() < 0.05);
}

#[test]
fn scaling_needs_three_sizes() {
    let o = run(&["scaling", "--L", "64,128", "--J", "1", "--h", "1", "--beta", "inf"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fit"));
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let out = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let path = out.to_str().unwrap().to_string();
    full.extend(["--out", &path]);
    let o = run(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &[
            "qfi-scan",
            "--L",
            "2,3,6,inf",
            "--J",
            "0.5,1",
            "--h",
            "0:2:0.25",
            "--beta",
            "2,inf",
        ],
        &["optimal-field", "--L", "2,3,8", "--J", "1,2", "--beta", "3,inf"],
        &["bayes-sim", "--seed", "9"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut one = args.to_vec();
        one.extend(["--threads", "1"]);
        let mut four = args.to_vec();
        four.extend(["--threads", "4"]);
        let a = run_to(dir.path(), &format!("{i}a.csv"), &one);
        let b = run_to(dir.path(), &format!("{i}b.csv"), &four);
        assert_eq!(a, b, "{args:?}");
        assert!(!String::from_utf8_lossy(&a).contains("NaN"));
    }
}

#[test]
fn config_hash_ignores_threads_and_output() {
    let a = config(r#"{"L": [2], "J": 1, "h": 1, "beta": ["inf"], "threads": 2, "out": "x.csv"}"#);
    let b = config(r#"{"L": [2], "J": 1, "h": 1, "beta": ["inf"]}"#);
    let c = config(r#"{"L": [2], "J": 1, "h": 1.5, "beta": ["inf"]}"#);
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn config_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"L\": [2],\n  \"J\": \"fast\"\n}\n").unwrap();
    let o = run(&["qfi-scan", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("bad.json") && err.contains("field `J`") && err.contains("line"),
        "{err}"
    );

    std::fs::write(
        &path,
        r#"{"task": "scaling", "L": [2], "J": 1, "h": 1, "beta": ["inf"]}"#,
    )
    .unwrap();
    let o = run(&["qfi-scan", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("scaling"));

    let o = run(&["qfi-scan", "--L", "2", "--J", "-1", "--h", "1", "--beta", "inf"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "qfi-scan",
        "--L",
        "2",
        "--J",
        "1",
        "--h",
        "1",
        "--beta",
        "inf",
        "--threads",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["no-such-task"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.json");
    std::fs::write(&path, r#"{"L": [2], "J": 1, "h": [0.5], "beta": ["inf"]}"#).unwrap();
    let o = run(&["qfi-scan", "--config", path.to_str().unwrap(), "--h", "1"]);
    assert!(o.status.success());
    let t = parse(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0]["h"], "1");
    assert!((num(&t.rows[0], "G_J") - 0.25).abs() < 1e-12);
}
