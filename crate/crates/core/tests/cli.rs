use std::fs;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_tmcc-qkd");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("missing {key} in\n{report}"))
        .to_string()
}

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, body)
}

#[test]
fn state_info_reports() {
    let text = stdout(&["state-info", "--lambda", "1"]);
    assert_eq!(field(&text, "mean"), "0.697775");
    assert_eq!(field(&text, "mandel_q"), "-0.264647");
    assert_eq!(field(&text, "n_max"), "25");

    let vac = stdout(&["state-info", "--lambda", "0"]);
    assert_eq!(field(&vac, "mean"), "0.000000");
    assert_eq!(field(&vac, "mandel_q"), "undefined");
    assert_eq!(field(&vac, "max_info_bits"), "0.000000");
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["state-info", "--lambda", "-1"],
        &["state-info"],
        &["entropy-curve", "--lambda-min", "3", "--lambda-max", "1"],
        &["entropy-curve", "--points", "1"],
        &["entropy-curve", "--alphabets", "2,16"],
        &["qber-curve", "--m", "3"],
        &["qber-curve", "--source", "laser"],
        &["simulate", "--lambda", "1", "--attack", "split"],
        &["simulate", "--lambda", "1", "--slots", "0"],
        &["simulate", "--m", "4"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn entropy_curve_csv() {
    let csv = stdout(&[
        "entropy-curve",
        "--lambda-min",
        "0",
        "--lambda-max",
        "8",
        "--points",
        "9",
    ]);
    assert!(csv.ends_with('\n'));
    let (header, body) = rows(&csv);
    assert_eq!(header, ["lambda", "mean", "H2", "H4", "H8", "Hmax"]);
    assert_eq!(body.len(), 9);
    assert!(body[0][2..].iter().all(|&h| h == 0.0));
    for r in &body {
        // six-decimal rounding can tie neighbours
        assert!(
            r[2] <= r[3] + 1e-6 && r[3] <= r[4] + 1e-6 && r[4] <= r[5] + 1e-6,
            "{r:?}"
        );
    }

    let subset = stdout(&["entropy-curve", "--points", "3", "--alphabets", "max,4"]);
    assert!(subset.starts_with("lambda,mean,H4,Hmax\n"));
}

#[test]
fn qber_curve_csv() {
    let sweep = ["--lambda-min", "0", "--lambda-max", "6", "--points", "4"];
    let mut args = vec!["qber-curve", "--m", "4"];
    args.extend(sweep);
    let (header, tmcc) = rows(&stdout(&args));
    assert_eq!(
        header,
        [
            "lambda",
            "mean",
            "p_err_letter",
            "p_err_bit_eq14",
            "p_err_bit_hamming"
        ]
    );
    assert_eq!(&tmcc[0][2..], &[0.0, 0.0, 0.0]);

    args.extend(["--source", "poisson"]);
    let (_, poisson) = rows(&stdout(&args));
    for (t, p) in tmcc.iter().zip(&poisson).skip(1) {
        assert!(p[3] > t[3], "{t:?} vs {p:?}");
    }

    let literal = stdout(&[
        "qber-curve",
        "--m",
        "2",
        "--estimator",
        "paper-literal",
        "--points",
        "2",
    ]);
    let last = literal.lines().last().unwrap();
    assert!(last.ends_with(",NaN"), "{last}");
}

#[test]
fn qber_ordering_in_letters_at_mean_four() {
    let letter_rate = |m: &str| {
        let csv = stdout(&[
            "qber-curve",
            "--m",
            m,
            "--lambda-min",
            "4.2",
            "--lambda-max",
            "4.3",
            "--points",
            "2",
        ]);
        rows(&csv).1[0][2]
    };
    let (q2, q4, q8) = (letter_rate("2"), letter_rate("4"), letter_rate("8"));
    assert!(q2 < q4 && q4 < q8);
}

#[test]
fn simulate_unattacked_is_error_free() {
    let text = stdout(&[
        "simulate", "--lambda", "4.5", "--m", "8", "--slots", "200000", "--seed", "42", "--attack",
        "none",
    ]);
    assert_eq!(field(&text, "letter_error_rate"), "0.000000");
    assert_eq!(field(&text, "bit_error_rate_eq14"), "0.000000");
    assert_eq!(field(&text, "bit_error_rate_hamming"), "0.000000");
}

#[test]
fn simulate_clone_tracks_analytic() {
    let text = stdout(&[
        "simulate",
        "--lambda",
        "4.5",
        "--m",
        "8",
        "--slots",
        "1000000",
        "--seed",
        "42",
        "--attack",
        "clone-tmcc",
    ]);
    let mc: f64 = field(&text, "letter_error_rate").parse().unwrap();
    let analytic: f64 = field(&text, "analytic_letter_error_rate").parse().unwrap();
    let se: f64 = field(&text, "binomial_standard_error").parse().unwrap();
    assert!(
        (mc - analytic).abs() <= 3.0 * se + 1e-6,
        "{mc} vs {analytic} ± {se}"
    );
    let per_bit: f64 = field(&text, "bit_error_rate_eq14").parse().unwrap();
    assert!((per_bit - mc / 3.0).abs() < 1e-6);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.conf");
    fs::write(
        &path,
        "# cloning run\nlambda = 3.0\nm = 4\nslots = 5000\nseed = 9\nattack = clone-poisson\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();

    let from_file = stdout(&["simulate", "--config", p]);
    let from_flags = stdout(&[
        "simulate",
        "--lambda",
        "3.0",
        "--m",
        "4",
        "--slots",
        "5000",
        "--seed",
        "9",
        "--attack",
        "clone-poisson",
    ]);
    assert_eq!(from_file, from_flags);

    let overridden = stdout(&["simulate", "--config", p, "--seed", "10"]);
    assert_eq!(field(&overridden, "seed"), "10");
    assert_eq!(field(&overridden, "alphabet_size"), "4");

    fs::write(&path, "lambda = 3.0\ncolour = blue\n").unwrap();
    assert_eq!(run(&["simulate", "--config", p]).status.code(), Some(2));
    assert_eq!(
        run(&["simulate", "--config", "/nonexistent/x.conf"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn dump_writes_slot_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("slots.csv");
    let report = stdout(&[
        "simulate",
        "--lambda",
        "2",
        "--m",
        "4",
        "--slots",
        "50",
        "--seed",
        "3",
        "--attack",
        "clone-tmcc",
        "--dump",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(report.contains("letter_error_rate: "));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "slot,n_alice,n_bob,letter_alice,letter_bob"
    );
    let records: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(records.len(), 50);
    assert_eq!(records[7][0], "7");
    assert!(records.iter().all(|r| r[3].len() == 2 && r[4].len() == 2));

    let mismatches = records.iter().filter(|r| r[3] != r[4]).count();
    let rate: f64 = field(&report, "letter_error_rate").parse().unwrap();
    assert!((rate - mismatches as f64 / 50.0).abs() < 1e-6);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let printed = run(&[
        "entropy-curve",
        "--points",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(printed.status.success());
    assert!(printed.stdout.is_empty());
    let expected = stdout(&["entropy-curve", "--points", "5"]);
    assert_eq!(fs::read_to_string(&out).unwrap(), expected);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "simulate",
        "--lambda",
        "4.5",
        "--m",
        "8",
        "--slots",
        "100000",
        "--seed",
        "42",
        "--attack",
        "clone-poisson",
    ];
    let a = run(&args).stdout;
    let b = run(&args).stdout;
    assert_eq!(a, b);
    let mut sharded = args.to_vec();
    sharded.extend(["--shards", "7"]);
    assert_eq!(run(&sharded).stdout, a);
}
