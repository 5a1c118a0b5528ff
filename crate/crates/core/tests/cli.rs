use std::path::Path;
use std::process::{Command, Output};

use spinsqueeze::cli::output::{qpd_from_rows, read_json, read_table, Format, ProbRow, QpdRow, ScanRow, TrajectoryRow};
use spinsqueeze::cli::reproduce::{read_sweep, CheckRow, LawRow, Report};
use spinsqueeze::fit::FitResult;
use spinsqueeze::{QpdGrid, ScanResult, Spin, SpinState};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinsqueeze")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = run(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

#[test]
fn ewss_state_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["state", "--kind", "ewss", "--j", "1"]);
    let rows: Vec<ProbRow> = read_table(&dir.path().join("ewss_j1_prob.csv")).unwrap();
    let m: Vec<f64> = rows.iter().map(|r| r.m).collect();
    assert_eq!(m, vec![1.0, 0.0, -1.0]);
    rows.iter().for_each(|r| assert!((r.p - 1.0 / 3.0).abs() < 1e-15));
    let s: SpinState = read_json(&dir.path().join("ewss_j1.json")).unwrap();
    assert_eq!(s.dim(), 3);
}

#[test]
fn half_integer_twin_fock_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["state", "--kind", "tfs", "--j", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error:") && err.contains("integer"));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["state", "--kind", "ewss", "--j=-1"][..],
        &["state", "--kind", "ewss", "--j", "-1"],
        &["state", "--nonsense"],
        &["state", "--kind", "sss", "--j", "3"],
        &["state", "--kind", "blob", "--j", "3"],
        &["--tol", "0.5", "state", "--kind", "ewss", "--j", "3"],
        &["reproduce-paper", "--j", "10,5"],
    ] {
        assert_eq!(run(dir.path(), args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn squeezed_distribution_ripples_near_the_edges() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--format", "json", "state", "--kind", "sss", "--j", "50", "--tau", "0.0199"]);
    let rows: Vec<ProbRow> = read_table(&dir.path().join("sss_j50_tau0.0199_prob.json")).unwrap();
    let p: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let d: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
    // alternating steps for |M| ≳ 44, smooth in the bulk
    for (k, w) in d.windows(2).enumerate().filter(|(k, _)| *k < 6 || *k > 92) {
        assert!(w[0] * w[1] < 0.0, "edge step {k}");
    }
    assert!(d[20..49].iter().all(|&x| x > 0.0 && x < 1e-3), "bulk steps {:?}", &d[20..49]);
}

#[test]
fn qpd_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["qpd", "--kind", "css", "--j", "4", "--grid", "24x13"]);
    let g: QpdGrid = read_json(&dir.path().join("qpd_css_j4_a0_b0_grid.json")).unwrap();
    assert_eq!((g.n_phi(), g.n_theta()), (24, 13));
    for i in 0..24 {
        assert!((g.value(i, 0) - 1.0).abs() < 1e-12);
    }
    let rows: Vec<QpdRow> = read_table(&dir.path().join("qpd_css_j4_a0_b0.csv")).unwrap();
    assert_eq!(qpd_from_rows(Spin::new(4.0).unwrap(), &rows).unwrap(), g);

    ok(dir.path(), &["--format", "json", "qpd", "--kind", "tfs", "--j", "50", "--grid", "16x9"]);
    let g: QpdGrid = read_json(&dir.path().join("qpd_tfs_j50_grid.json")).unwrap();
    let rows: Vec<QpdRow> = read_table(&dir.path().join("qpd_tfs_j50.json")).unwrap();
    assert_eq!(qpd_from_rows(Spin::new(50.0).unwrap(), &rows).unwrap(), g);
    let (iy, eq) = g.nearest(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    assert!(g.value(iy, eq) < 1e-6);
}

#[test]
fn evolve_trajectory_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["evolve", "--j", "3", "--tau", "0.5", "--grid", "11"]);
    let csv: Vec<TrajectoryRow> = read_table(&dir.path().join("evolve_j3.csv")).unwrap();
    ok(dir.path(), &["--format", "json", "evolve", "--j", "3", "--tau", "0.5", "--grid", "11"]);
    let json: Vec<TrajectoryRow> = read_table(&dir.path().join("evolve_j3.json")).unwrap();
    assert_eq!(csv, json);
    assert_eq!(csv.len(), 11);
    assert!((csv[0].sd_z - 1.5f64.sqrt()).abs() < 1e-12);
    assert!(csv.iter().all(|r| r.fid_tfs.is_some()));
    ok(dir.path(), &["evolve", "--j", "2.5", "--tau", "0.5", "--grid", "3"]);
    let half: Vec<TrajectoryRow> = read_table(&dir.path().join("evolve_j2.5.csv")).unwrap();
    assert!(half.iter().all(|r| r.fid_tfs.is_none()));
    let last: SpinState = read_json(&dir.path().join("evolve_j3_final.json")).unwrap();
    assert_eq!(last.dim(), 7);
}

#[test]
fn scan_then_fit_from_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = ok(dir.path(), &["scan", "--j", "10,20,30,40,60", "--metric", "var_z_max", "--grid", "96"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 5);
    let rows: Vec<ScanRow> = read_table(&dir.path().join("scan.csv")).unwrap();
    let traces: Vec<ScanResult> = read_json(&dir.path().join("scan_traces.json")).unwrap();
    assert_eq!(rows.len(), 5);
    for (r, t) in rows.iter().zip(&traces) {
        assert_eq!(r, &ScanRow::from_result(t));
        assert_eq!(r.grid_size, 96);
    }
    let scan = dir.path().join("scan.csv");
    ok(dir.path(), &["fit", "--family", "shifted_power", "--input", scan.to_str().unwrap(), "--column", "value_star"]);
    let f: FitResult = read_json(&dir.path().join("fit_shifted_power.json")).unwrap();
    assert_eq!(f.n_points, 5);
    assert!((f.model.params[0] - 0.8).abs() < 0.05, "{:?}", f.model.params);
}

#[test]
fn fit_point_table_with_config_and_init() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    let mut body = String::from("j,y\n");
    for j in [10.0f64, 20.0, 40.0, 80.0, 160.0] {
        body += &format!("{j},{}\n", (2.5 * j).ln() / (3.5 * j));
    }
    std::fs::write(&pts, body).unwrap();
    let cfg = dir.path().join("fit.cfg");
    std::fs::write(&cfg, format!("# fit settings\nfamily = log_over_linear\ninput = {}\ninit = 1, 1\n", pts.display()))
        .unwrap();
    ok(dir.path(), &["--config", cfg.to_str().unwrap(), "fit"]);
    let f: FitResult = read_json(&dir.path().join("fit_log_over_linear.json")).unwrap();
    assert!((f.model.params[0] - 2.5).abs() < 1e-6 && (f.model.params[1] - 3.5).abs() < 1e-6);
    // flag beats the file
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "fit", "--family", "shifted_power", "--init", "1,0"]);
    assert_eq!(o.status.code(), Some(1));
    // unknown config keys are errors
    std::fs::write(&cfg, "famly = shifted_power\n").unwrap();
    assert_eq!(run(dir.path(), &["--config", cfg.to_str().unwrap(), "fit"]).status.code(), Some(1));
}

#[test]
fn reproduce_paper_small_sweep() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["reproduce-paper", "--j", "5,10,20,50"];
    let oa = run(a.path(), &args);
    let ob = run(b.path(), &["--format", "json", args[0], args[1], args[2]]);

    let report: Report = read_json(&a.path().join("report.json")).unwrap();
    assert_eq!(oa.status.code(), Some(if report.passed { 0 } else { 2 }));
    assert_eq!(ob.status.code(), oa.status.code());

    let laws: Vec<LawRow> = read_table(&a.path().join("fits.csv")).unwrap();
    let labels: Vec<&str> = laws.iter().map(|l| l.label.as_str()).collect();
    assert_eq!(labels, ["Eq. 6", "Eq. 7", "Eq. 13", "Eq. 14", "Eq. 15", "Eq. 16", "Eq. 17", "Eq. 18"]);
    let checks: Vec<CheckRow> = read_table(&a.path().join("checks.csv")).unwrap();
    assert_eq!(checks.len(), report.checks.len());

    // identical numbers in both formats and across runs
    assert_eq!(read_sweep(a.path(), Format::Csv).unwrap(), read_sweep(b.path(), Format::Json).unwrap());
    assert_eq!(laws, read_table::<LawRow>(&b.path().join("fits.json")).unwrap());
    assert_eq!(oa.stdout, ob.stdout);
    let rb: Report = read_json(&b.path().join("report.json")).unwrap();
    assert_eq!(report, rb);
    assert_eq!(std::fs::read(a.path().join("report.md")).unwrap(), std::fs::read(b.path().join("report.md")).unwrap());
}
