use std::path::Path;
use std::process::{Command, Output};

use itisc_cli::commands::fit::ModelFile;
use itisc_cli::{Format, Report};

fn itisc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itisc"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = itisc(args);
    assert!(
        out.status.success(),
        "itisc {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn report(args: &[&str]) -> Report {
    Report::read(ok(args).as_bytes(), Format::Csv).unwrap()
}

fn metric_rows<'a>(
    r: &'a Report,
    metric: &'a str,
) -> impl Iterator<Item = &'a itisc_cli::Row> + 'a {
    r.rows.iter().filter(move |row| row.metric == metric)
}

fn model(path: &Path) -> ModelFile {
    ModelFile::read(path).unwrap()
}

#[test]
fn gen_writes_expected_shapes() {
    let out = itisc(&["gen", "c3-default", "--seed", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x1,x2,component"));
    assert_eq!(text.lines().count(), 601);
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(
        summary.contains("N=600") && summary.contains("S=2") && summary.contains("200,200,200"),
        "{summary}"
    );

    assert_eq!(ok(&["gen", "extreme"]).lines().count(), 105);
    assert_ne!(
        ok(&["gen", "c2", "--seed", "1"]),
        ok(&["gen", "c2", "--seed", "2"])
    );
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["gen", "nope"],
        vec!["gen", "c2", "--seeds", "1,2"],
        vec!["fit", "--data", "c2", "--model", "dbscan"],
        vec!["fit", "--data", "c2", "--model", "fuzzy-itisc-r:t2=0"],
        vec!["fit", "--data", "c2", "--model", "fcm:m=1"],
        vec!["fit", "--data", "c2", "--seeds", "1,1"],
        vec!["fit", "--data", "c2", "--clusters", "0"],
        vec!["t2-sweep", "--data", "c2", "--t2", "0,1"],
        vec!["shift-exp", "--n-angles", "40"],
        vec![
            "predict",
            "--model-file",
            missing.to_str().unwrap(),
            "--data",
            "c2",
        ],
    ];
    for args in cases {
        let out = itisc(&args);
        assert_eq!(out.status.code(), Some(2), "itisc {}", args.join(" "));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn kmeans_with_a_cluster_per_point_has_zero_cost() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pts.csv");
    std::fs::write(&data, "x1,x2\n0,0\n1,0\n5,5\n-2,3\n4,-1\n").unwrap();
    let data = data.to_str().unwrap();
    let file = dir.path().join("km.json");
    ok(&[
        "fit",
        "--data",
        data,
        "--model",
        "kmeans",
        "--clusters",
        "5",
        "--m-list",
        "1,5",
        "--out",
        file.to_str().unwrap(),
    ]);
    let m = model(&file);
    assert_eq!(m.runs.len(), 4);
    for run in &m.runs {
        assert_eq!(run.objective, 0.0);
    }
    assert_eq!(m.metrics["MaxBoundaryDist"], 0.0);
    assert_eq!(m.metrics["5-BoundaryDist"], 0.0);

    let r = report(&[
        "boundary",
        "--data",
        data,
        "--model-file",
        file.to_str().unwrap(),
        "--m-list",
        "1,3",
    ]);
    assert_eq!(r.rows.len(), 2);
    assert!(r.rows.iter().all(|row| row.value == 0.0));
    assert_eq!(r.rows[0].metric, "MaxBoundaryDist");
    assert_eq!(r.rows[1].metric, "3-BoundaryDist");
}

#[test]
fn fuzzy_itisc_at_unit_temperatures_fits_like_fcm() {
    let dir = tempfile::tempdir().unwrap();
    let (fi, fcm) = (dir.path().join("fi.json"), dir.path().join("fcm.json"));
    ok(&[
        "fit",
        "--data",
        "c3-default",
        "--model",
        "fuzzy-itisc-r:t1=1,t2=1",
        "--out",
        fi.to_str().unwrap(),
    ]);
    ok(&[
        "fit",
        "--data",
        "c3-default",
        "--model",
        "fcm:m=2",
        "--out",
        fcm.to_str().unwrap(),
    ]);
    let (fi, fcm) = (model(&fi), model(&fcm));
    assert_eq!(fi.rule, "argmax-membership");
    for (a, b) in fi.runs.iter().zip(&fcm.runs) {
        assert_eq!(a.seed, b.seed);
        for ya in &a.centers {
            let best = b
                .centers
                .iter()
                .map(|yb| {
                    ya.iter()
                        .zip(yb)
                        .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-4, "seed {}: {best}", a.seed);
        }
    }
    let diff = (fi.metrics["MaxBoundaryDist"] - fcm.metrics["MaxBoundaryDist"]).abs();
    assert!(diff < 1e-3, "{diff}");
}

#[test]
fn fit_report_matches_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let (file, rep) = (dir.path().join("m.json"), dir.path().join("r.csv"));
    ok(&[
        "fit",
        "--data",
        "c2",
        "--model",
        "fuzzy-itisc-ao:t2=0.5",
        "--seeds",
        "3,5",
        "--store-membership",
        "--out",
        file.to_str().unwrap(),
        "--report",
        rep.to_str().unwrap(),
    ]);
    let m = model(&file);
    assert_eq!(m.seeds, vec![3, 5]);
    let run = &m.runs[0];
    let u = run.membership.as_ref().unwrap();
    assert_eq!(u.len(), 400);
    assert!(u
        .iter()
        .all(|row| (row.iter().sum::<f64>() - 1.0).abs() < 1e-9));
    let w = run.weights.as_ref().unwrap();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    let r = Report::read(std::fs::File::open(&rep).unwrap(), Format::Csv).unwrap();
    let mean_param = "data=c2;C=2;mean";
    for (k, v) in &m.metrics {
        assert_eq!(r.value(&m.model, mean_param, k), Some(*v), "{k}");
    }
    let per_seed: Vec<f64> = [3, 5]
        .iter()
        .map(|s| {
            r.value(&m.model, &format!("data=c2;C=2;seed={s}"), "objective")
                .unwrap()
        })
        .collect();
    assert!((m.metrics["objective"] - (per_seed[0] + per_seed[1]) / 2.0).abs() < 1e-12);
}

#[test]
fn predict_emits_memberships_for_soft_models_only() {
    let dir = tempfile::tempdir().unwrap();
    let (soft, hard) = (dir.path().join("soft.json"), dir.path().join("hard.json"));
    ok(&[
        "fit",
        "--data",
        "c3-default",
        "--model",
        "fuzzy-itisc-r:t2=0.3",
        "--seed",
        "1",
        "--out",
        soft.to_str().unwrap(),
    ]);
    ok(&[
        "fit",
        "--data",
        "c3-default",
        "--model",
        "hc:average",
        "--out",
        hard.to_str().unwrap(),
    ]);

    let text = ok(&[
        "predict",
        "--model-file",
        soft.to_str().unwrap(),
        "--data",
        "c3-default",
        "--data-seed",
        "9",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("point,cluster,u1,u2,u3"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 600);
    for row in rows {
        let f: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        let u = &f[2..];
        assert!((u.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let argmax = (0..3).max_by(|&a, &b| u[a].total_cmp(&u[b])).unwrap();
        assert_eq!(f[1] as usize, argmax);
    }

    let text = ok(&[
        "predict",
        "--model-file",
        hard.to_str().unwrap(),
        "--data",
        "c3-default",
    ]);
    assert_eq!(text.lines().next(), Some("point,cluster"));
    let json = ok(&[
        "predict",
        "--model-file",
        hard.to_str().unwrap(),
        "--data",
        "c3-default",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rule"], "nearest-center");
    assert_eq!(v["labels"].as_array().unwrap().len(), 600);
    assert!(v.get("membership").is_none());
}

#[test]
fn t2_sweep_default_grid_has_twelve_values_per_dataset() {
    let r = report(&["t2-sweep", "--data", "c2", "--data", "c4", "--seed", "0"]);
    for metric in ["MaxBoundaryDist", "10-BoundaryDist", "max-weight"] {
        assert_eq!(metric_rows(&r, metric).count(), 24, "{metric}");
    }
    let peak = |t2: &str| {
        r.value(
            "fuzzy-itisc-r:t1=1",
            &format!("data=c2;C=2;T2={t2}"),
            "max-weight",
        )
        .unwrap()
    };
    assert!(peak("0.3") > peak("1") && peak("1") > peak("2"));
}

#[test]
fn weight_trace_starts_near_uniform_and_sums_to_one() {
    let r = report(&["weights-trace", "--seed", "0", "--top-k", "5"]);
    let algo = "fuzzy-itisc-ao:t1=1,t2=0.7";
    let first = r
        .value(algo, "data=c3-default;seed=0;iter=1", "max-weight")
        .unwrap();
    let last = r
        .value(algo, "data=c3-default;seed=0;final", "max-weight")
        .unwrap();
    assert!(first < 5.0 / 600.0, "{first}");
    assert!(last >= first);
    assert!(metric_rows(&r, "weight-sum").all(|row| (row.value - 1.0).abs() < 1e-9));
    assert!(metric_rows(&r, "weight-kl").all(|row| row.value >= 0.0));
    assert_eq!(
        metric_rows(&r, "top-index").count(),
        5 * metric_rows(&r, "weight-sum").count()
    );
}

#[test]
fn shift_grid_sizes_and_zero_shift() {
    let r = report(&["shift-exp", "--s", "0,1", "--seed", "2"]);
    let kl: Vec<_> = metric_rows(&r, "KL").collect();
    assert_eq!(
        kl.iter()
            .filter(|row| row.param.starts_with("S=0;"))
            .count(),
        1
    );
    assert_eq!(
        kl.iter()
            .filter(|row| row.param.starts_with("S=1;"))
            .count(),
        125
    );
    assert_eq!(r.value("-", "S=0;cell=0", "KL"), Some(0.0));
    assert!(kl.iter().all(|row| row.value >= 0.0));
    for model in [
        "fuzzy-itisc-r:t1=1,t2=0.1",
        "kmeans:n_init=10",
        "fcm:m=2",
        "hc:ward",
    ] {
        assert!(r.value(model, "S=0;cell=0", "WithinClusterDist").unwrap() > 0.0);
    }
    let win = r
        .value(
            "fuzzy-itisc-r:t1=1,t2=0.1 vs kmeans:n_init=10",
            "S=1",
            "win-ratio",
        )
        .unwrap();
    let loss = r
        .value(
            "fuzzy-itisc-r:t1=1,t2=0.1 vs kmeans:n_init=10",
            "S=1",
            "loss-ratio",
        )
        .unwrap();
    assert!((0.0..=1.0).contains(&win) && win + loss <= 1.0);

    let cov = report(&[
        "shift-exp",
        "--mode",
        "cov",
        "--factors",
        "1,2",
        "--seed",
        "0",
    ]);
    assert_eq!(metric_rows(&cov, "KL").count(), 8);
    assert_eq!(cov.value("-", "factors;cell=0", "KL"), Some(0.0));
}

#[test]
fn reports_round_trip_in_both_formats() {
    for format in ["csv", "json"] {
        let text = ok(&[
            "boundary", "--data", "extreme", "--seed", "0", "--format", format,
        ]);
        let fmt = if format == "csv" {
            Format::Csv
        } else {
            Format::Json
        };
        let r = Report::read(text.as_bytes(), fmt).unwrap();
        assert_eq!(r.metadata.command, "boundary");
        assert_eq!(r.metadata.seeds, vec![0]);
        assert_eq!(r.to_string(fmt), text);
    }
}
