use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use parisian::mc::{mc_knock_in_frequency, PathConfig};
use parisian::pricing::{paris_down_in_call, NumericsConfig};
use parisian::transforms::ExcursionSpec;
use parisian::{derive_params, MarketParams, ParisianContract};
use tempfile::TempDir;

const BASE: &str = "\
market.spot = 100
market.rate = 0.05
market.volatility = 0.2
contract.strike = 100
contract.barrier = 95
contract.window = 0.05
contract.maturity = 1
mc.seed = 42
";

fn market() -> MarketParams {
    MarketParams {
        spot: 100.0,
        rate: 0.05,
        dividend: 0.0,
        volatility: 0.2,
    }
}

fn contract() -> ParisianContract {
    ParisianContract {
        strike: 100.0,
        barrier: 95.0,
        window: 0.05,
        time_to_maturity: 1.0,
        elapsed_age: 0.0,
    }
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        ws.write("base.conf", BASE);
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_parisian"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_csv(path: &Path) -> (String, Vec<(f64, f64)>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.split('\n');
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (y, h) = l.split_once(',').unwrap();
            (y.parse().unwrap(), h.parse().unwrap())
        })
        .collect();
    (header, rows)
}

#[test]
fn price_matches_the_library_bit_for_bit() {
    let ws = Workspace::new();
    let o = ws.run(&["price", "base.conf", "--format", "json-lines"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let lib = paris_down_in_call(&market(), &contract(), &NumericsConfig::default()).unwrap();
    assert_eq!(v["value"].as_f64().unwrap().to_bits(), lib.value.to_bits());
    assert_eq!(v["method"], lib.method.as_str());
    assert_eq!(v["diagnostics"]["transform_form"], "nonpositive");

    let text = stdout(&ws.run(&["price", "base.conf"]));
    assert!(text.starts_with(&format!("value                 {}\n", lib.value)), "{text}");
}

#[test]
fn maturity_before_the_window_prices_to_zero() {
    let ws = Workspace::new();
    let o = ws.run(&["price", "base.conf", "--set", "contract.maturity=0.04", "--format", "json-lines"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["value"].as_f64(), Some(0.0));
    assert!(v["diagnostics"]["short_circuit"].is_string());
}

#[test]
fn invalid_input_exits_with_2_and_names_the_field() {
    let ws = Workspace::new();
    ws.write("nowindow.conf", &BASE.replace("contract.window = 0.05\n", ""));
    let o = ws.run(&["price", "nowindow.conf"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("contract.window"), "{}", stderr(&o));

    for args in [
        vec!["price", "missing.conf"],
        vec!["price", "base.conf", "--set", "contract.elapsed=0.01"],
        vec!["price", "base.conf", "--set", "market.spot=abc"],
        vec!["price", "base.conf", "--set", "numerics.method=talbot"],
        vec!["price", "base.conf", "--set", "contract.maturity=0.051"],
        vec!["density", "base.conf", "--time", "0.5", "--y-grid", "1:0:3"],
        vec!["frobnicate"],
    ] {
        let o = ws.run(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn numerical_failure_exits_with_3_and_names_the_stage() {
    let ws = Workspace::new();
    let o = ws.run(&["price", "base.conf", "--set", "numerics.quad_tol=1e-16"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("quadrature"), "{}", stderr(&o));
}

#[test]
fn dumped_config_reproduces_the_run() {
    let ws = Workspace::new();
    let o = ws.run(&[
        "price",
        "base.conf",
        "--set",
        "market.dividend=0.013",
        "--set",
        "numerics.terms=48",
        "--dump-config",
        "effective.conf",
    ]);
    assert_eq!(code(&o), 0);
    let again = ws.run(&["price", "effective.conf", "--dump-config", "again.conf"]);
    assert_eq!(stdout(&o), stdout(&again));
    let first = std::fs::read_to_string(ws.path("effective.conf")).unwrap();
    assert_eq!(first, std::fs::read_to_string(ws.path("again.conf")).unwrap());
    assert!(first.contains("market.dividend = 0.013\n"));
    assert!(first.contains("mc.seed = 42\n"));
}

#[test]
fn density_csv_format() {
    let ws = Workspace::new();
    let o = ws.run(&["density", "base.conf", "--time", "0.5", "--y-grid", "-1:1:21", "--out", "h.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let raw = std::fs::read_to_string(ws.path("h.csv")).unwrap();
    assert!(!raw.contains('\r'));
    assert!(raw.ends_with('\n'));
    let (header, rows) = read_csv(&ws.path("h.csv"));
    assert_eq!(header, "y,h_b");
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0].0, -1.0);
    assert_eq!(rows[20].0, 1.0);
    assert!(rows.iter().all(|(_, h)| *h >= 0.0));
    assert!(rows.iter().any(|(_, h)| *h > 0.1));

    let piped = ws.run(&["density", "base.conf", "--time", "0.5", "--y-grid", "-1:1:21"]);
    assert_eq!(stdout(&piped), raw);
}

#[test]
fn density_before_the_window_is_zero() {
    let ws = Workspace::new();
    let o = ws.run(&["density", "base.conf", "--time", "0.03", "--y-grid", "-1:1:11", "--out", "h.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = read_csv(&ws.path("h.csv"));
    assert!(rows.iter().all(|(_, h)| *h == 0.0));

    let near = ws.run(&["density", "base.conf", "--time", "0.0505", "--y-grid", "-1:1:11"]);
    assert_eq!(code(&near), 2, "{}", stderr(&near));
}

#[test]
fn failed_density_leaves_no_file() {
    let ws = Workspace::new();
    let o = ws.run(&[
        "density",
        "base.conf",
        "--time",
        "0.5",
        "--y-grid",
        "-1:1:11",
        "--out",
        "h.csv",
        "--set",
        "numerics.quad_tol=1e-16",
    ]);
    assert_eq!(code(&o), 3);
    assert!(!ws.path("h.csv").exists());
}

#[test]
fn density_mass_matches_the_simulated_knock_in_probability() {
    let ws = Workspace::new();
    let u = 0.5;
    let o = ws.run(&["density", "base.conf", "--time", "0.5", "--y-grid", "-6:6:1201", "--out", "h.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = read_csv(&ws.path("h.csv"));
    let mass: f64 = rows
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    let spec = ExcursionSpec::from_params(&derive_params(&market(), &contract()).unwrap()).unwrap();
    let cfg = PathConfig {
        paths: 200_000,
        seed: 42,
        ..PathConfig::default()
    };
    let freq = mc_knock_in_frequency(&spec, u, &cfg).unwrap();
    assert!(freq.z_score(mass).abs() <= 3.0, "{mass} vs {} ± {}", freq.mean, freq.std_error);
}

#[test]
fn verify_suites_pass_on_the_reference_point() {
    let ws = Workspace::new();
    for suite in ["key-relation", "transforms", "price"] {
        let o = ws.run(&["verify", "base.conf", "--suite", suite]);
        assert_eq!(code(&o), 0, "{suite}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).lines().last().unwrap().starts_with(&format!("PASS {suite}")));
    }
    let o = ws.run(&["verify", "base.conf", "--suite", "key-relation", "--format", "json-lines"]);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[4]["pass"], true);
    assert!(lines[..4].iter().all(|l| l["z"].as_f64().unwrap().abs() <= 3.0));
}

#[test]
fn verify_reports_failures_with_exit_1() {
    let ws = Workspace::new();
    let o = ws.run(&[
        "verify",
        "base.conf",
        "--suite",
        "transforms",
        "--set",
        "market.spot=93",
        "--set",
        "contract.elapsed=0.02",
        "--set",
        "numerics.form=grouped-printed",
        "--set",
        "mc.paths=20000",
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
    assert!(stderr(&o).contains("verification failed"));
}

#[test]
fn verify_input_errors_exit_with_2() {
    let ws = Workspace::new();
    let o = ws.run(&["verify", "base.conf", "--suite", "transforms", "--set", "mc.paths=10"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mc.paths"));
    ws.write("noseed.conf", &BASE.replace("mc.seed = 42\n", ""));
    let o = ws.run(&["verify", "noseed.conf", "--suite", "price"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mc.seed"));
}

#[test]
fn version_prints_the_package_version() {
    let ws = Workspace::new();
    let o = ws.run(&["version"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), format!("parisian {}\n", env!("CARGO_PKG_VERSION")));
}
