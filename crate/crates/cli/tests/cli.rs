use std::path::Path;
use std::process::Command;

use qkd_ratelab::{run_sweep, Axis, FiberSpec, Model, ModelParams, Scenario, SweepSpec};
use qkd_ratelab_cli::{output::CSV_HEADER, run};
use qkd_ratelab_oracle::{self as oracle, CvInputs};

fn run_args(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("qkd-ratelab").chain(args.iter().copied());
    let code = run(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qkd-ratelab")).args(args).output().unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(key)).then(|| it.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn point_cv_at_zero_loss() {
    let (code, text) = run_args(&["point", "--model", "cv", "--scenario", "symmetric", "--loss-db", "0"]);
    assert_eq!(code, 0);
    let want = oracle::cv_symmetric(
        1.0,
        CvInputs { eta_a: 1.0, eta_b: 1.0, eta_d: 0.98, epsilon: 0.01, phi: 60.0, xi: 0.97 },
    )
    .rate
    .unwrap();
    let got = field(&text, "rate");
    assert!(((got - want) / want).abs() < 1e-11, "{got} vs {want}");
    assert!((got - 2.571).abs() < 5e-4);
    for key in ["chi", "i_ab", "i_e", "secure_rate"] {
        field(&text, key);
    }
}

#[test]
fn point_tgw_at_four_db() {
    let (code, text) = run_args(&["point", "--model", "tgw", "--loss-db", "4"]);
    assert_eq!(code, 0);
    let eta = 10f64.powf(-0.2);
    let want = oracle::tgw(eta, eta);
    assert!((field(&text, "rate") - want).abs() < 1e-11 * want);
    assert!((want - 1.2158).abs() < 1e-4);
}

#[test]
fn point_dv_optimized_and_fixed() {
    let (code, text) = run_args(&["point", "--model", "dv", "--loss-db", "4", "--scenario", "symmetric", "--optimize"]);
    assert_eq!(code, 0);
    let rate = field(&text, "rate");
    assert!((0.015..0.025).contains(&rate), "{rate}");
    for key in ["mu_a", "mu_b", "p11", "y11", "e11x", "gain_z", "qber_z"] {
        field(&text, key);
    }

    let (code, fixed) = run_args(&[
        "point", "--model", "dv", "--loss-db", "4", "--mu-a", "0.5", "--mu-b", "0.5",
    ]);
    assert_eq!(code, 0);
    assert_eq!(field(&fixed, "mu_a"), 0.5);
    assert!(field(&fixed, "rate") <= rate);
}

#[test]
fn point_channel_by_distances() {
    let (_, by_loss) = run_args(&["point", "--model", "tgw", "--loss-db", "4", "--scenario", "asymmetric"]);
    let (_, by_total) = run_args(&["point", "--model", "tgw", "--distance-km", "20", "--scenario", "asymmetric"]);
    let (_, by_arms) = run_args(&["point", "--model", "tgw", "--l-a", "0", "--l-b", "20"]);
    assert_eq!(field(&by_loss, "rate"), field(&by_total, "rate"));
    assert_eq!(field(&by_loss, "eta_b"), field(&by_arms, "eta_b"));
    let (code, _) = run_args(&["point", "--model", "tgw", "--loss-db", "4", "--distance-km", "20"]);
    assert_eq!(code, 2);
}

#[test]
fn point_writes_breakdown_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("point.csv");
    let (code, text) = run_args(&[
        "point", "--model", "cv", "--loss-db", "1", "--scenario", "asymmetric", "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let rate_col = headers.iter().position(|h| h == "rate").unwrap();
    assert_eq!(row[rate_col].parse::<f64>().unwrap(), field(&text, "rate"));
}

#[test]
fn exit_codes() {
    assert_eq!(run_args(&["sweep", "--model", "dv", "--points", "2", "--start", "1", "--stop", "1"]).0, 2);
    assert_eq!(run_args(&["point", "--model", "xv", "--loss-db", "1"]).0, 2);
    assert_eq!(run_args(&["point", "--model", "cv", "--loss-db", "-1"]).0, 2);
    assert_eq!(run_args(&["point", "--model", "cv", "--loss-db", "1", "--cv-phi", "nan"]).0, 2);
    assert_eq!(run_args(&["point", "--bogus"]).0, 2);
    // Equivalent noise of exactly 4 puts the symmetric Holevo term out of its domain.
    assert_eq!(
        run_args(&["point", "--model", "cv", "--loss-db", "0", "--cv-eta-d", "1", "--cv-epsilon", "0"]).0,
        3
    );
    assert_eq!(
        run_args(&["sweep", "--model", "cv", "--start", "0", "--stop", "1", "--points", "3", "--out", "/nonexistent/dir/x.csv"]).0,
        4
    );
}

#[test]
fn validation_messages_name_the_key() {
    let out = binary(&["point", "--model", "dv", "--loss-db", "4", "--dv-e-d", "0.7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dv.e_d"));
}

#[test]
fn config_file_layering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# detector\nmodel = cv\nscenario = symmetric\nloss_db = 0\ncv.eta_d = 0.85\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let (code, from_file) = run_args(&["point", "--config", cfg]);
    assert_eq!(code, 0);
    assert!(field(&from_file, "rate") < 0.0);

    let (_, overridden) = run_args(&["point", "--config", cfg, "--cv-eta-d", "0.98"]);
    let (_, defaults) = run_args(&["point", "--model", "cv", "--scenario", "symmetric", "--loss-db", "0"]);
    assert_eq!(field(&overridden, "rate"), field(&defaults, "rate"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "model = cv\ncv.eta = 0.9\n").unwrap();
    let out = binary(&["point", "--config", cfg.to_str().unwrap(), "--loss-db", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cv.eta"));
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    rdr.records().map(Result::unwrap).collect()
}

fn agrees_at_12_digits(text: &str, want: Option<f64>) -> bool {
    match want {
        None => text.is_empty(),
        Some(w) => {
            let got: f64 = text.parse().unwrap();
            got == w || ((got - w) / w).abs() <= 5e-12
        }
    }
}

#[test]
fn sweep_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (model, name) in [(Model::Dv, "dv"), (Model::Cv, "cv")] {
        let path = dir.path().join(format!("{name}.csv"));
        let (code, _) = run_args(&[
            "sweep", "--model", name, "--scenario", "asymmetric", "--start", "0", "--stop", "6",
            "--points", "13", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let spec = SweepSpec {
            model,
            scenario: Scenario::AsymmetricRelayAtAlice,
            axis: Axis::TotalLossDb,
            start: 0.0,
            stop: 6.0,
            points: 13,
            fiber: FiberSpec::default(),
            params: ModelParams::default(),
        };
        let series = run_sweep(&spec).unwrap();
        let records = read_csv(&path);
        assert_eq!(records.len(), series.rows.len());
        for (rec, row) in records.iter().zip(&series.rows) {
            assert!(agrees_at_12_digits(&rec[0], Some(row.abscissa)));
            assert!(agrees_at_12_digits(&rec[2], Some(row.eta_a)));
            assert!(agrees_at_12_digits(&rec[3], Some(row.eta_b)));
            assert!(agrees_at_12_digits(&rec[4], row.rate_signed));
            assert!(agrees_at_12_digits(&rec[5], row.rate_clamped()));
            assert!(agrees_at_12_digits(&rec[6], row.mu.map(|m| m.mu_a())));
            assert!(agrees_at_12_digits(&rec[7], row.mu.map(|m| m.mu_b())));
            assert_eq!(&rec[8], "ok");
        }
    }
}

#[test]
fn sweep_marks_invalid_rows() {
    let (code, text) = run_args(&[
        "sweep", "--model", "cv", "--start", "0", "--stop", "1", "--points", "3", "--cv-eta-d", "1",
        "--cv-epsilon", "0",
    ]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][8], "invalid");
    assert!(rows[0][4].is_empty() && rows[0][5].is_empty());
    assert_eq!(&rows[1][8], "ok");
}

#[test]
fn sweep_by_distance_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("d.csv");
    let svg_path = dir.path().join("d.svg");
    let (code, _) = run_args(&[
        "sweep", "--model", "cv", "--scenario", "symmetric", "--axis", "distance", "--start", "0",
        "--stop", "10", "--points", "11", "--out", csv_path.to_str().unwrap(), "--svg",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let records = read_csv(&csv_path);
    assert_eq!(&records[5][0], "5");
    assert_eq!(&records[5][1], "1");
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 1);
}

#[test]
fn cutoff_reports() {
    let (code, text) = run_args(&["cutoff", "--model", "cv", "--scenario", "symmetric"]);
    assert_eq!(code, 0);
    let db: f64 = text.split_whitespace().next().unwrap().parse().unwrap();
    assert!((1.10..=1.40).contains(&db), "{text}");
    assert!(text.contains("km @0.2 dB/km"));

    let (code, text) = run_args(&["cutoff", "--model", "cv", "--scenario", "asymmetric", "--cv-eta-d", "0.85"]);
    assert_eq!(code, 0);
    assert!(text.contains("non-positive rate at origin"), "{text}");

    let (code, text) = run_args(&["cutoff", "--model", "dv", "--scenario", "symmetric", "--hi", "40"]);
    assert_eq!(code, 0);
    assert!(text.contains("beyond bracket"), "{text}");

    assert_eq!(run_args(&["cutoff", "--model", "cv", "--lo", "3", "--hi", "1"]).0, 2);
}

#[test]
fn reproduce_writes_figure_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_args(&["reproduce", "--figure", "2b", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    for eta in ["0.98", "0.95", "0.9", "0.88", "0.86"] {
        assert!(names.contains(&format!("fig2b_cv_eta{eta}.csv")), "{names:?}");
    }
    assert!(names.contains(&"fig2b.svg".to_string()));
    assert_eq!(text.lines().count(), 6);

    assert_eq!(run_args(&["reproduce", "--figure", "9z", "--out-dir", "x"]).0, 2);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["sweep", "--model", "dv", "--scenario", "symmetric", "--start", "0", "--stop", "10", "--points", "9"];
    let one = Command::new(env!("CARGO_BIN_EXE_qkd-ratelab"))
        .args(args)
        .env("QKD_RATELAB_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_qkd-ratelab"))
        .args(args)
        .env("QKD_RATELAB_THREADS", "4")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_qkd-ratelab"))
        .args(args)
        .env("QKD_RATELAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
