use std::path::PathBuf;
use std::process::Command;

use perturbed_max_cli::run;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn pmax(args: &[&str], env_seed: Option<&str>) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pmax").chain(args.iter().copied());
    let code = run(argv, env_seed, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn model_file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Column header plus data rows, manifest lines dropped.
fn table(stdout: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = stdout.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn theta_row_has_unit_root() {
    let dir = TempDir::new().unwrap();
    let m = model_file(
        &dir,
        "m.cfg",
        "increment=expdifference(2,1)\nperturbation=exponential(1)\n",
    );
    let r = pmax(&["theta", "--model", m.to_str().unwrap()], None);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (h, rows) = table(&r.stdout);
    assert_eq!(rows.len(), 1);
    let theta: f64 = rows[0][column(&h, "theta_star")].parse().unwrap();
    assert!((theta - 1.0).abs() < 1e-10);
    let kappa: f64 = rows[0][column(&h, "kappa")].parse().unwrap();
    assert!((kappa - 0.5).abs() < 1e-10);
    assert_eq!(rows[0][column(&h, "r")], "0.5");
}

#[test]
fn estimate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let m = model_file(
        &dir,
        "m.cfg",
        "increment=expdifference(2,1)\nperturbation=exponential(3)\n",
    );
    let args = [
        "estimate",
        "--model",
        m.to_str().unwrap(),
        "--method",
        "is",
        "--x",
        "5",
        "--reps",
        "100000",
        "--seed",
        "7",
    ];
    let a = pmax(&args, None);
    let b = pmax(&args, None);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let (h, rows) = table(&a.stdout);
    assert_eq!(
        h.join(","),
        "x,estimate,std_error,ci_lo,ci_hi,method,reps,seed"
    );
    assert_eq!(rows[0][column(&h, "method")], "is");
    assert_eq!(rows[0][column(&h, "seed")], "7");
    assert!(a.stdout.contains("# seed: 7 (--seed)"));
    assert!(a.stdout.contains("# model_sha256: "));
    // Timing stays out of the reproducible stream.
    assert!(!a.stdout.contains("wall_clock"));
    assert!(a.stderr.contains("wall_clock_seconds"));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let m = model_file(
        &dir,
        "m.cfg",
        "increment=normal(-1,1)\nperturbation=exponential(2)\n",
    );
    let m = m.to_str().unwrap();
    let body = |workers: &str| {
        let r = pmax(
            &[
                "estimate",
                "--model",
                m,
                "--method",
                "cond",
                "--x",
                "1,3",
                "--reps",
                "5000",
                "--seed",
                "3",
                "--workers",
                workers,
            ],
            None,
        );
        assert_eq!(r.code, 0, "{}", r.stderr);
        r.stdout
            .lines()
            .filter(|l| !l.starts_with("# command"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body("1"), body("3"));
}

#[test]
fn seed_from_environment_is_echoed() {
    let dir = TempDir::new().unwrap();
    let m = model_file(
        &dir,
        "m.cfg",
        "increment=expdifference(2,1)\nperturbation=exponential(3)\n",
    );
    let args = [
        "estimate",
        "--model",
        m.to_str().unwrap(),
        "--x",
        "2",
        "--reps",
        "1000",
    ];
    let r = pmax(&args, Some("42"));
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("# seed: 42 (env PMAX_SEED)"));
    let (h, rows) = table(&r.stdout);
    assert_eq!(rows[0][column(&h, "seed")], "42");

    let d = pmax(&args, None);
    assert!(d.stdout.contains("# seed: 1 (default)"));
    assert_eq!(pmax(&args, Some("not-a-seed")).code, 1);

    let mut flagged = args.to_vec();
    flagged.extend(["--seed", "42"]);
    let f = pmax(&flagged, Some("9"));
    assert_eq!(table(&f.stdout), table(&r.stdout));
}

#[test]
fn exact_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let m = model_file(
        &dir,
        "m.cfg",
        "increment=negatedexponential(1)\nperturbation=exponential(1)\n",
    );
    let r = pmax(
        &["exact", "--model", m.to_str().unwrap(), "--x", "0.5,1,2,3"],
        None,
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (h, rows) = table(&r.stdout);
    for row in rows {
        let x: f64 = row[column(&h, "x")].parse().unwrap();
        let cdf: f64 = row[column(&h, "cdf")].parse().unwrap();
        let oracle = (1.0 - (-x).exp()) * (-(-x).exp()).exp();
        assert!((cdf - oracle).abs() < 1e-14, "x={x}");
        assert_eq!(row[column(&h, "method")], "exact");
    }
}

#[test]
fn solve_ie_emits_grid_and_diagnostics() {
    let dir = TempDir::new().unwrap();
    let m = model_file(
        &dir,
        "m.cfg",
        "increment=negatedexponential(1)\nperturbation=exponential(1)\n",
    );
    let r = pmax(
        &[
            "solve-ie",
            "--model",
            m.to_str().unwrap(),
            "--xmin",
            "-5",
            "--xmax",
            "10",
            "--points",
            "601",
        ],
        None,
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.lines().any(|l| l.starts_with("# terms: ")));
    assert!(r.stdout.lines().any(|l| l.starts_with("# residual: ")));
    let (h, rows) = table(&r.stdout);
    assert_eq!(h.join(","), "x,u");
    assert_eq!(rows.len(), 601);
    for row in &rows {
        let x: f64 = row[0].parse().unwrap();
        let u: f64 = row[1].parse().unwrap();
        let cdf = (1.0 - (-x).exp()) * (-(-x).exp()).exp();
        let oracle = if x < 0.0 { 1.0 } else { 1.0 - cdf };
        assert!((u - oracle).abs() < 1e-2, "x={x}: {u} vs {oracle}");
    }
}

#[test]
fn asymptote_and_bounds_headers() {
    let dir = TempDir::new().unwrap();
    let m = model_file(
        &dir,
        "m.cfg",
        "increment=expdifference(2,1)\nperturbation=exponential(3)\n",
    );
    let m = m.to_str().unwrap();
    let cl = pmax(
        &[
            "asymptote",
            "--model",
            m,
            "--regime",
            "cl",
            "--x",
            "6,8,10,12",
            "--reps",
            "20000",
        ],
        None,
    );
    assert_eq!(cl.code, 0, "{}", cl.stderr);
    assert!(cl.stdout.contains("# check: E exp(theta* xi) finite: pass"));
    let (h, rows) = table(&cl.stdout);
    let c: f64 = rows[0][column(&h, "constant")].parse().unwrap();
    assert!((0.75..=2.0).contains(&c), "c = {c}");

    let b = pmax(&["bounds", "--model", m, "--x", "2,5"], None);
    assert_eq!(b.code, 0, "{}", b.stderr);
    assert!(b.stdout.contains("# upper_constant: 16"));
    assert!(b.stdout.contains("# refined_upper_constant: 2\n"));
    assert!(b.stdout.contains("# lower_constant: 0.75\n"));
}

#[test]
fn applicability_failures_exit_two() {
    let dir = TempDir::new().unwrap();
    let pos = model_file(
        &dir,
        "pos.cfg",
        "increment=exponential(1)\nperturbation=exponential(1)\n",
    );
    let light = model_file(
        &dir,
        "light.cfg",
        "increment=expdifference(2,1)\nperturbation=exponential(3)\n",
    );
    let heavy = model_file(
        &dir,
        "heavy.cfg",
        "increment=normal(-0.5,0.5)\nperturbation=pareto(2,1)\n",
    );
    let pos = pos.to_str().unwrap();
    let light = light.to_str().unwrap();
    let heavy = heavy.to_str().unwrap();

    let r = pmax(&["theta", "--model", pos], None);
    assert_eq!(r.code, 2);
    assert!(r.stdout.contains("# error: invalid drift"));
    assert!(r.stderr.contains("invalid drift"));
    assert_eq!(pmax(&["exact", "--model", light, "--x", "1"], None).code, 2);
    assert_eq!(
        pmax(
            &[
                "asymptote",
                "--model",
                light,
                "--regime",
                "heavy",
                "--x",
                "40"
            ],
            None
        )
        .code,
        2
    );
    assert_eq!(
        pmax(&["bounds", "--model", heavy, "--x", "5"], None).code,
        2
    );
    // Still unbiased when E exp(theta* xi) is infinite, so only flagged.
    let is = pmax(
        &[
            "estimate", "--model", heavy, "--method", "is", "--x", "5", "--reps", "1000",
        ],
        None,
    );
    assert_eq!(is.code, 0);
    assert!(is
        .stdout
        .contains("# check: E exp(theta* xi) finite: fail (inf)"));
}

#[test]
fn usage_failures_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad = model_file(
        &dir,
        "bad.cfg",
        "increment=expdifference(2,1)\nperturbation=exponential(1)\ncolour=red\n",
    );
    let good = model_file(
        &dir,
        "good.cfg",
        "increment=expdifference(2,1)\nperturbation=exponential(1)\n",
    );
    let good = good.to_str().unwrap();
    assert_eq!(
        pmax(&["theta", "--model", bad.to_str().unwrap()], None).code,
        1
    );
    assert_eq!(
        pmax(&["theta", "--model", "/nonexistent/model.cfg"], None).code,
        1
    );
    assert_eq!(pmax(&["estimate", "--model", good], None).code, 1);
    assert_eq!(
        pmax(
            &["estimate", "--model", good, "--x", "1", "--method", "magic"],
            None
        )
        .code,
        1
    );
    assert_eq!(
        pmax(
            &["estimate", "--model", good, "--x", "1", "--reps", "0"],
            None
        )
        .code,
        1
    );
    assert_eq!(pmax(&["frobnicate"], None).code, 1);
    let short = pmax(
        &[
            "estimate",
            "--model",
            good,
            "--x",
            "5",
            "--method",
            "crude",
            "--horizon",
            "10",
        ],
        None,
    );
    assert_eq!(short.code, 1);
    assert!(short.stdout.contains("horizon 10 is below"));
    let help = pmax(&["--help"], None);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("solve-ie"));
}

#[test]
fn production_scenario_rows_agree() {
    let r = pmax(
        &[
            "scenario",
            "production",
            "--reps",
            "20000",
            "--x",
            "1,2",
            "--seed",
            "5",
        ],
        None,
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("# model: delay = exponential(3)"));
    let (h, rows) = table(&r.stdout);
    assert_eq!(rows.len(), 4);
    let est = |i: usize| -> (f64, f64) {
        (
            rows[i][column(&h, "estimate")].parse().unwrap(),
            rows[i][column(&h, "std_error")].parse().unwrap(),
        )
    };
    for k in 0..2 {
        assert_eq!(rows[k][column(&h, "method")], "lindley");
        assert_eq!(rows[k + 2][column(&h, "method")], "is");
        let ((a, sa), (b, sb)) = (est(k), est(k + 2));
        assert!((a - b).abs() < 4.0 * sa.hypot(sb), "row {k}: {a} vs {b}");
    }
}

#[test]
fn counterexample_decays_at_half_lambda1() {
    let r = pmax(
        &[
            "scenario",
            "counterexample",
            "--lambda1",
            "2",
            "--reps",
            "50000",
            "--no-control",
            "--seed",
            "11",
        ],
        None,
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (h, rows) = table(&r.stdout);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&h, "dependence")], "correlated");
    let rate: f64 = rows[0][column(&h, "rate")].parse().unwrap();
    assert!((rate - 1.0).abs() <= 0.15, "rate {rate}");
    let theta: f64 = rows[0][column(&h, "theta_star")].parse().unwrap();
    assert!((theta - 1.5).abs() < 1e-10);
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let pos = model_file(
        &dir,
        "pos.cfg",
        "increment=exponential(1)\nperturbation=exponential(1)\n",
    );
    let good = model_file(
        &dir,
        "good.cfg",
        "increment=expdifference(2,1)\nperturbation=exponential(1)\n",
    );
    let bin = env!("CARGO_BIN_EXE_pmax");
    let status = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .env_remove("PMAX_SEED")
            .output()
            .unwrap()
    };

    let ok = status(&["theta", "--model", good.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("theta_star"));
    assert_eq!(
        status(&["theta", "--model", pos.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(status(&["theta"]).status.code(), Some(1));

    let seeded = Command::new(bin)
        .args([
            "estimate",
            "--model",
            good.to_str().unwrap(),
            "--x",
            "1",
            "--reps",
            "100",
        ])
        .env("PMAX_SEED", "123")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&seeded.stdout).contains("# seed: 123 (env PMAX_SEED)"));
}
