use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monoculture")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, row: usize, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.nth(row).unwrap().split(',').nth(idx).unwrap().to_string()
}

const MC_SWEEP: &[&str] = &[
    "sweep",
    "--family",
    "rum",
    "--noise",
    "laplacian",
    "--grid",
    "0.5:1:0.5x1:1.5:0.5",
    "--dist",
    "uniform:0:1:5",
    "--engine",
    "mc",
    "--samples",
    "20000",
    "--seed",
    "42",
];

#[test]
fn monte_carlo_csv_is_identical_across_thread_counts() {
    let one = run(&[MC_SWEEP, &["--threads", "1"]].concat());
    let four = run(&[MC_SWEEP, &["--threads", "4"]].concat());
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(four.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(stdout(&one).lines().count(), 5);
}

#[test]
fn exact_utilities_match_hand_values() {
    let o = run(&["utilities", "--family", "mallows", "--phi-h", "2", "--phi-a", "3", "--pool", "1,0.5,0"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let first_h: f64 = column(&csv, 0, "u_first_h").parse().unwrap();
    // φ = 2, n = 3: weights 4, 2, 1 over 7 on the first position
    assert!((first_h - (4.0 + 1.0) / 7.0).abs() < 1e-15, "{first_h}");
    assert_eq!(column(&csv, 0, "engine"), "exact");
}

#[test]
fn plackett_luce_second_mover_entries_coincide() {
    let o = run(&["utilities", "--family", "pl", "--theta-h", "1.5", "--theta-a", "1.5", "--pool", "2,1,0.5,0"]);
    let csv = stdout(&o);
    let ah: f64 = column(&csv, 0, "u_ah").parse().unwrap();
    let aa: f64 = column(&csv, 0, "u_aa").parse().unwrap();
    assert!((ah - aa).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["utilities", "--family", "pl", "--pool", "1,0.5,0"]).status.code(), Some(1));
    let n4 = [
        "utilities",
        "--family",
        "rum",
        "--noise",
        "gaussian",
        "--theta-h",
        "1",
        "--theta-a",
        "1",
        "--pool",
        "3,2,1,0",
    ];
    assert_eq!(run(&n4).status.code(), Some(1));
    assert_eq!(run(&["reproduce", "counterexample-b1"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "appendix-c"]).status.code(), Some(2));
    let braess = ["braess-search", "--family", "pl", "--theta-h", "1", "--pool", "1,0.5,0"];
    assert_eq!(run(&braess).status.code(), Some(3));
}

#[test]
fn flags_override_the_config_file() {
    let dir = std::env::temp_dir().join(format!("monoculture-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.conf");
    fs::write(&cfg, "# mc run\nfamily = rum\nnoise = gaussian\ntheta_h = 1\ntheta_a = 1.5\npool = 1,0.5,0\nengine = mc\nsamples = 1000\nseed = 7\n").unwrap();
    let c = cfg.to_str().unwrap();
    let base = stdout(&run(&["utilities", "--config", c]));
    assert_eq!(column(&base, 0, "samples"), "1000");
    let over = stdout(&run(&["utilities", "--config", c, "--samples", "500", "--theta-h", "2"]));
    assert_eq!(column(&over, 0, "samples"), "500");
    assert_eq!(column(&over, 0, "family"), "rum-gaussian");
    assert_eq!(column(&over, 0, "theta_h").parse::<f64>().unwrap(), 2.0);
    assert_eq!(run(&["utilities", "--config", c, "--family", "mallows"]).status.code(), Some(1));
    let out = dir.join("u.csv");
    let plot = dir.join("u.dat");
    let o = run(&["utilities", "--config", c, "--out", out.to_str().unwrap(), "--plot", plot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&out).unwrap(), base);
    assert!(fs::read_to_string(&plot).unwrap().starts_with('#'));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sequential_reports_the_optimal_sequence() {
    let o = run(&["sequential", "--phi-h", "3", "--phi-a", "2", "--dist", "uniform:0:1:4", "--firms", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("HHH"), "{}", stdout(&o));
}
