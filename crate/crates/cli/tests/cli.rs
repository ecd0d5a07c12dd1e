use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qgraph::{compute_spectrum, GraphFile, RobinSpec, SpectrumTarget};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn qgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = qgraph(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Header and numeric rows; empty cells become NaN.
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| match c {
                    "" => f64::NAN,
                    "true" => 1.0,
                    "false" => 0.0,
                    _ => c.parse().unwrap(),
                })
                .collect()
        })
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn interval_spectrum_is_multiples_of_pi() {
    let text = stdout_ok(&["spectrum", "--graph", fixture("interval.json").to_str().unwrap(), "--nmax", "12"]);
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["n", "k", "lambda", "multiplicity"]);
    assert_eq!(rows.len(), 12);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (i + 1) as f64);
        assert!((r[1] - i as f64 * PI).abs() < 1e-12);
        assert_eq!(r[3], 1.0);
    }
}

#[test]
fn star_spectrum_with_sigma_override() {
    let path = fixture("star4_incommensurate.json");
    let json = stdout_ok(&["spectrum", "--graph", path.to_str().unwrap(), "--sigma", "4.5", "--kmax", "20", "--format", "json"]);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();

    let (g, r) = GraphFile::load(&path).unwrap().build().unwrap();
    let r = RobinSpec::new(&g, r.vertices(), 4.5).unwrap();
    let s = compute_spectrum(&g, &r, SpectrumTarget::MaxWaveNumber(20.0)).unwrap();
    assert_eq!(rows.len(), s.len());
    for (row, k) in rows.iter().zip(s.wave_numbers()) {
        assert_eq!(row["k"].as_f64().unwrap(), k);
    }
}

#[test]
fn count_and_cap_are_exclusive() {
    let out = qgraph(&["spectrum", "--graph", fixture("interval.json").to_str().unwrap(), "--nmax", "3", "--kmax", "2"]);
    assert!(!out.status.success());
}

#[test]
fn errors_exit_nonzero() {
    let out = qgraph(&["spectrum", "--graph", "/definitely/missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    // no Robin vertices in the Neumann interval fixture
    let out = qgraph(&["rng", "--graph", fixture("interval.json").to_str().unwrap(), "--nmax", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qgraph(&["rng", "--graph", fixture("interval_robin.json").to_str().unwrap(), "--nmax", "10", "--window", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rng_tables_are_reproducible_and_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let graph = fixture("star4_incommensurate.json");
    let run = |tag: &str| {
        let out = dir.path().join(format!("gaps_{tag}.csv"));
        let clusters = dir.path().join(format!("clusters_{tag}.csv"));
        let bounds = dir.path().join(format!("bounds_{tag}.csv"));
        stdout_ok(&[
            "rng",
            "--graph",
            graph.to_str().unwrap(),
            "--nmax",
            "600",
            "--out",
            out.to_str().unwrap(),
            "--clusters-out",
            clusters.to_str().unwrap(),
            "--bounds-out",
            bounds.to_str().unwrap(),
        ]);
        (
            std::fs::read(out).unwrap(),
            std::fs::read_to_string(bounds).unwrap(),
        )
    };
    let (a, bounds) = run("a");
    let (b, _) = run("b");
    assert_eq!(a, b);
    assert!(!a.contains(&b'\r'));

    let (header, rows) = parse_csv(std::str::from_utf8(&a).unwrap());
    assert_eq!(
        header,
        ["n", "k_neumann", "k_robin", "d_n", "normalized", "running_avg", "arctan_pred", "thm_bound", "improved_bound"]
    );
    assert_eq!(rows.len(), 600);
    let (d, norm, thm) = (column(&header, "d_n"), column(&header, "normalized"), column(&header, "thm_bound"));
    let mean = rows.iter().map(|r| r[norm]).sum::<f64>() / rows.len() as f64;
    assert!((mean - 1.0).abs() < 0.05, "normalised mean {mean}");
    assert!(rows.iter().all(|r| r[d] >= 0.0 && r[d] < r[thm]));

    let mut lines = bounds.lines();
    assert_eq!(lines.next(), Some("bound,decomposition,checked,max_ratio,violations"));
    let names: Vec<&str> = lines
        .map(|l| {
            assert!(l.ends_with(",0"), "{l}");
            l.split(',').next().unwrap()
        })
        .collect();
    assert_eq!(names, ["star-decomposition", "shortest-edge", "improved"]);
}

#[test]
fn equilateral_clusters_include_zero() {
    let dir = tempfile::tempdir().unwrap();
    let clusters = dir.path().join("clusters.csv");
    stdout_ok(&[
        "rng",
        "--graph",
        fixture("star4_equilateral.json").to_str().unwrap(),
        "--nmax",
        "400",
        "--out",
        dir.path().join("gaps.csv").to_str().unwrap(),
        "--clusters-out",
        clusters.to_str().unwrap(),
        "--cluster-tol",
        "1e-8",
    ]);
    let (header, rows) = parse_csv(&std::fs::read_to_string(clusters).unwrap());
    assert_eq!(header, ["value", "count", "frequency"]);
    let zero = rows.iter().find(|r| r[0].abs() < 1e-8).unwrap();
    assert!((zero[2] - 0.75).abs() < 0.01);
    let total: f64 = rows.iter().map(|r| r[2]).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn weyl_rows_carry_predictions() {
    let path = fixture("star4_incommensurate.json");
    let text = stdout_ok(&["weyl", "--graph", path.to_str().unwrap(), "--nmax", "400"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,measured,predicted,rel_error"));
    let total = GraphFile::load(&path).unwrap().build().unwrap().0.total_length();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let centre = rows.iter().find(|r| r[0] == "vertex 0").unwrap();
    assert!((centre[2].parse::<f64>().unwrap() - 2.0 / (4.0 * total)).abs() < 1e-15);
    let slots: Vec<_> = rows.iter().filter(|r| r[0].starts_with("slot")).collect();
    assert_eq!(slots.len(), 8);
    for r in &slots {
        assert!((r[2].parse::<f64>().unwrap() - 1.0 / (2.0 * total)).abs() < 1e-15);
    }
    let cross: Vec<_> = rows.iter().filter(|r| r[0].starts_with("cross")).collect();
    assert_eq!(cross.len(), 24);
    assert!(cross.iter().all(|r| r[2] == "0.0"));
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() < 0.1));
}

#[test]
fn cdf_histogram_has_unit_area() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("hist.csv");
    let text = stdout_ok(&[
        "cdf",
        "--graph",
        fixture("tetrahedron.json").to_str().unwrap(),
        "--nmax",
        "500",
        "--bins",
        "30",
        "--hist-out",
        hist.to_str().unwrap(),
    ]);
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["x", "cdf"]);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
    assert_eq!(rows.last().unwrap()[1], 1.0);
    let (hh, bins) = parse_csv(&std::fs::read_to_string(hist).unwrap());
    assert_eq!(hh, ["left", "right", "density"]);
    assert_eq!(bins.len(), 30);
    let area: f64 = bins.iter().map(|b| (b[1] - b[0]) * b[2]).sum();
    assert!((area - 1.0).abs() < 1e-12);
}

#[test]
fn sensitivity_lowest_row_is_the_slope() {
    let path = fixture("tetrahedron.json");
    let text = stdout_ok(&["sensitivity", "--graph", path.to_str().unwrap(), "--sigma", "0", "--nmax", "60"]);
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["n", "lambda", "sensitivity", "prediction", "bound", "degenerate"]);
    assert_eq!(rows.len(), 60);
    let total = GraphFile::load(&path).unwrap().build().unwrap().0.total_length();
    assert!((rows[0][2] - 4.0 / total).abs() < 1e-12);
    assert!(rows[0][3].is_nan() && rows[0][4].is_nan());
    assert!(rows[1..].iter().all(|r| r[2] < r[4]));
}

#[test]
fn degenerate_sensitivities_are_flagged() {
    let text = stdout_ok(&["sensitivity", "--graph", fixture("star4_equilateral.json").to_str().unwrap(), "--nmax", "20"]);
    let (header, rows) = parse_csv(&text);
    let flag = column(&header, "degenerate");
    // centre-vanishing triples at (n + 1/2)π
    assert_eq!(rows.iter().filter(|r| r[flag] == 1.0).count(), 15);
    assert!(rows.iter().filter(|r| r[flag] == 1.0).all(|r| r[2] < 1e-14));
}
