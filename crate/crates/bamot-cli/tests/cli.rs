use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bamot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bamot"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_small_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{ "grid_points": 120, "product_grid_points": 40, "strikes": { "dense": 12 } }"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn bs_marginal(forward: f64, vol: f64) -> String {
    format!(
        r#"{{ "components": [{{ "mean": {forward}, "vol": {vol}, "weight": 1.0 }}], "forward": {forward} }}"#
    )
}

#[test]
fn price_digital_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    fs::write(
        dir.path().join("market.json"),
        format!(
            r#"{{ "x0": 1.0, "bid": {}, "ask": {} }}"#,
            bs_marginal(1.0, 0.18),
            bs_marginal(1.0, 0.22)
        ),
    )
    .unwrap();
    let out = bamot(
        dir.path(),
        &[
            "price",
            "--payoff",
            "digital(1.05)",
            "--market",
            "market.json",
            "--config",
            &cfg,
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let sup = summary["super"]["dual"].as_f64().unwrap();
    let sub = summary["sub"]["dual"].as_f64().unwrap();
    assert!(sup >= sub, "super {sup} below sub {sub}");
    assert!(sup > 0.0 && sup < 1.0);
    assert!(dir.path().join("price_super.json").exists());
    let portfolio = fs::read_to_string(dir.path().join("portfolio_super.csv")).unwrap();
    assert!(portfolio.starts_with("# bamot"));
    assert!(portfolio.contains("maturity,strike,weight,side,price"));
}

#[test]
fn distance_of_identical_marginals_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let m = bs_marginal(100.0, 0.2);
    fs::write(dir.path().join("mu.json"), &m).unwrap();
    fs::write(dir.path().join("nu.json"), &m).unwrap();
    let out = bamot(dir.path(), &["distance", "--mu", "mu.json", "--nu", "nu.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["symmetrized"]["value"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn digital_one_sided_short_dated_example() {
    let dir = tempfile::tempdir().unwrap();
    let vol = 0.20 / 12f64.sqrt();
    fs::write(dir.path().join("ask.json"), bs_marginal(1.0, vol)).unwrap();
    let out = bamot(
        dir.path(),
        &[
            "digital-one-sided",
            "--ask",
            "ask.json",
            "--strike",
            "1.05",
            "--spot",
            "1.0",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let price = summary["price"].as_f64().unwrap();
    assert!((price - 0.46).abs() < 0.005, "price {price}");
}

#[test]
fn enhance_zero_spread_chain_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    // Calls from a two-point measure at 50 and 150 with forward 100.
    let csv = "strike,put_bid,put_ask,call_bid,call_ask\n\
               50,0,0,50,50\n\
               100,25,25,25,25\n\
               150,50,50,0,0\n";
    fs::write(dir.path().join("chain.csv"), csv).unwrap();
    let out = bamot(
        dir.path(),
        &["enhance", "--chain", "chain.csv", "--forward", "100"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["report"]["consistent"], serde_json::json!(true));
    assert!(dir.path().join("ask_marginal.json").exists());
    let enhanced = fs::read_to_string(dir.path().join("enhanced.csv")).unwrap();
    assert!(enhanced.starts_with("# bamot"));
}

#[test]
fn unordered_market_exits_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    // Bid wider than ask: convex order violated.
    fs::write(
        dir.path().join("market.json"),
        format!(
            r#"{{ "x0": 1.0, "bid": {}, "ask": {} }}"#,
            bs_marginal(1.0, 0.30),
            bs_marginal(1.0, 0.20)
        ),
    )
    .unwrap();
    let out = bamot(
        dir.path(),
        &["price", "--payoff", "call(1.0)", "--market", "market.json"],
    );
    assert_eq!(out.status.code(), Some(2));
    let diag: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["kind"], serde_json::json!("arbitrage"));
}

#[test]
fn converge_emits_csv_and_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    fs::write(dir.path().join("bid.json"), bs_marginal(1.0, 0.15)).unwrap();
    fs::write(dir.path().join("ask.json"), bs_marginal(1.0, 0.20)).unwrap();
    let out = bamot(
        dir.path(),
        &[
            "converge",
            "--payoff",
            "call(1.05) - put(0.95)",
            "--bid",
            "bid.json",
            "--ask",
            "ask.json",
            "--points",
            "6",
            "--config",
            &cfg,
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["slope"].is_number());
    let csv = fs::read_to_string(dir.path().join("converge.csv")).unwrap();
    assert!(csv.lines().count() >= 8); // provenance + header + 6 rows
}
