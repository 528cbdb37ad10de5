use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pearcey-lab"))
        .args(args)
        .env_remove("PEARCEY_LAB_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn null_weight_gives_zero() {
    let o = run(&["genfun", "--rho", "0", "--x", "1", "--u", "0", "--r", "5", "--nodes", "60"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "r,log_F,est_error,nodes_per_panel\n5,0,0,120\n");
    assert!(o.stderr.is_empty());
}

#[test]
fn compare_sweep() {
    let o = run(&["compare", "--rho", "0", "--x", "1", "--u", "1", "--r-grid", "4:12:2", "--nodes", "80", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("r,logF_num,logF_asy,abs_diff\n"));
    assert_eq!(column(&out, "r"), vec![4.0, 6.0, 8.0, 10.0, 12.0]);
    let num = column(&out, "logF_num");
    for (v, pin) in num.iter().zip([2.87174091087363, 4.78223710172454, 6.91218780284089, 9.22201261379746, 11.6837823501867]) {
        assert!((v - pin).abs() < 1e-11);
    }
    // small throughout, though not monotone: the remainder oscillates in r
    let d = column(&out, "abs_diff");
    assert!(d.iter().all(|v| *v < 0.003), "{d:?}");
    for line in out.lines().skip(1) {
        for field in line.split(',') {
            let digits = field.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
            assert!(digits.trim_start_matches('0').len() <= 15, "{field}");
        }
    }
}

#[test]
fn stats_table() {
    let o = run(&["stats", "--rho", "0", "--x", "1,8", "--r", "6", "--nodes", "80", "--format", "json", "--no-timing"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let cov = rows.iter().find(|r| r["quantity"] == "cov").unwrap();
    assert_eq!((cov["j"].as_i64(), cov["k"].as_i64()), (Some(1), Some(2)));
    assert!((cov["numeric"].as_f64().unwrap() - cov["asymptotic"].as_f64().unwrap()).abs() < 0.01);
    for r in rows.iter().filter(|r| r["quantity"] == "mean") {
        assert!((r["numeric"].as_f64().unwrap() - r["asymptotic"].as_f64().unwrap()).abs() < 0.15);
    }
    assert_eq!(v["meta"]["nodes"], 80);
    assert!(v["meta"]["nodes_fine"].as_u64().unwrap() >= 160);
    assert!(v["meta"]["timing_ms"].is_null());
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["command"], "stats");
    assert_eq!(v["config"]["x"], serde_json::json!([1.0, 8.0]));
}

#[test]
fn output_is_deterministic() {
    let args = ["asympt", "--x", "1,2,5", "--u", "0.5,-1,2", "--rho", "-0.4", "--r-grid", "1:30:0.5", "--format", "json", "--no-timing", "--jobs", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let single = run(&[&args[..args.len() - 2], &["--jobs", "1"]].concat());
    assert_eq!(a.stdout, single.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let rs: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["r"].as_f64().unwrap()).collect();
    assert_eq!(rs.len(), 59);
    assert!(rs.windows(2).all(|w| w[0] < w[1]));
    let timed = run(&args[..args.len() - 3]);
    let v: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(v["meta"]["timing_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["genfun", "--x", "2,1", "--u", "1,1", "--r", "1"]).status.code(), Some(2));
    assert_eq!(run(&["genfun", "--x", "1", "--u", "1,1", "--r", "1"]).status.code(), Some(2));
    assert_eq!(run(&["genfun", "--x", "1"]).status.code(), Some(2));
    assert_eq!(run(&["genfun", "--r", "0"]).status.code(), Some(2));
    assert_eq!(run(&["genfun", "--r", "1", "--nodes", "3"]).status.code(), Some(2));
    assert_eq!(run(&["genfun", "--r-grid", "3:1:1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["clt", "--r", "2"]).status.code(), Some(2));
    let o = run(&["genfun", "--r", "10", "--nodes", "6", "--no-escalate"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("convergence"));
    let o = run(&["ode-check", "--r", "5000"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(o.stdout.is_empty());
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn escalation_recovers_from_coarse_grids() {
    let o = run(&["genfun", "--r", "10", "--nodes", "6", "--format", "json", "--no-timing"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["rows"][0]["log_F"].as_f64().unwrap() - 9.22201261379745).abs() < 1e-9);
    assert!(v["meta"]["nodes_fine"].as_u64().unwrap() > 12);
}

#[test]
fn other_commands() {
    let o = run(&["kernel", "--x", "0.5,1", "--rho", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 17);
    let k = column(&out, "kernel");
    assert!(k.iter().all(|v| v.is_finite()));
    // parity: (x, y) and (-x, -y) sit at mirrored positions of the 4×4 table
    for a in 0..4 {
        for b in 0..4 {
            assert!((k[4 * a + b] - k[4 * (3 - a) + (3 - b)]).abs() < 1e-9);
        }
    }
    let o = run(&["ode-check", "--x", "1", "--u", "1", "--r-grid", "10:40:10"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(column(&out, "gradient_check").iter().all(|v| *v < 1e-6));
    let res = column(&out, "asymptotic_residual");
    assert!(res.windows(2).all(|w| w[1] < w[0]));
    let o = run(&["clt", "--x", "1", "--a", "1", "--r-grid", "100:10000:9900"]);
    let d = column(&stdout(&o), "abs_diff");
    assert!(d[1] < d[0]);
    let path = std::env::temp_dir().join(format!("pearcey-lab-{}.csv", std::process::id()));
    let o = run(&["asympt", "--r", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.starts_with("r,mu_sum,sigma_sum,cross_sum,barnes_sum,total\n3,"));
}

#[test]
fn jobs_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_pearcey-lab"))
        .args(["asympt", "--r-grid", "1:5:1"])
        .env("PEARCEY_LAB_JOBS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_pearcey-lab"))
        .args(["asympt", "--r-grid", "1:5:1"])
        .env("PEARCEY_LAB_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
