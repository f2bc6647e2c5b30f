use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cpdetect_cli::{parse_report, read_csv, InputError};
use cpdetect_core::{Method, VarianceForm};

fn cpdetect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpdetect"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Deterministic pseudo-random CSV with `n` rows and `d` columns.
fn write_series(path: &Path, n: usize, d: usize, header: Option<&str>) {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut text = String::new();
    if let Some(h) = header {
        text.push_str(h);
        text.push('\n');
    }
    for _ in 0..n {
        let common = next();
        let row: Vec<String> = (0..d).map(|_| format!("{:.6}", common + next())).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

#[test]
fn reads_plain_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.csv");
    fs::write(&p, "1.0,2.0\n3.5,-4\n5e-1,6\n").unwrap();
    let s = read_csv(&p, None).unwrap();
    assert_eq!((s.n(), s.d()), (3, 2));
    assert_eq!(s.get(2, 0), 0.5);
    assert!(s.names().is_none());
}

#[test]
fn keeps_header_names() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.csv");
    write_series(&p, 5, 3, Some("dax,cac,sp500"));
    let s = read_csv(&p, None).unwrap();
    assert_eq!(s.d(), 3);
    assert_eq!(s.names().unwrap(), ["dax", "cac", "sp500"]);
}

#[test]
fn bad_cell_cites_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "1,2\n3,4\n5,6\n7,8\nabc,9\n10,11\n").unwrap();
    let e = read_csv(&p, Some(false)).unwrap_err();
    assert!(matches!(e, InputError::NotNumeric { row: 5, col: 1, .. }), "{e}");
    assert!(e.to_string().contains("row 5"));

    let out = cpdetect(&["test", "--input", p.to_str().unwrap(), "--no-header"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 5"));
}

#[test]
fn json_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    write_series(&p, 60, 2, None);
    let args = [
        "test", "--input", p.to_str().unwrap(), "--method", "boot-dep", "--replicates", "100",
        "--seed", "11",
    ];
    let a = cpdetect(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, cpdetect(&args).stdout);
    let r = parse_report(&a.stdout).unwrap();
    assert_eq!(r.method, Method::BootDep);
    assert_eq!((r.n, r.d, r.seed, r.replicates), (60, 2, 11, Some(100)));
    assert!(r.ell_used.is_some());
    assert!((0.0..=1.0).contains(&r.p_value));
    assert!(r.changepoint_index >= 1 && r.changepoint_index < 60);
}

#[test]
fn asymptotic_report_has_studentized_statistic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    write_series(&p, 80, 2, None);
    for (extra, hac) in [(&[][..], false), (&["--serial", "dependent"][..], true)] {
        let mut args = vec![
            "test", "--input", p.to_str().unwrap(), "--stat", "rho2", "--method", "asymptotic",
        ];
        args.extend_from_slice(extra);
        let out = cpdetect(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let r = parse_report(&out.stdout).unwrap();
        let v = r.variance.expect("variance recorded");
        let st = r.studentized.expect("studentized recorded");
        assert!((st - r.statistic_value / v.sigma2.sqrt()).abs() < 1e-12);
        assert!((r.p_value - cpdetect_core::kolmogorov_sf(st).unwrap()).abs() < 1e-15);
        assert_eq!(matches!(v.form, VarianceForm::Hac { .. }), hac);
    }
}

#[test]
fn text_format_and_unknown_format() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    write_series(&p, 40, 2, None);
    let out = cpdetect(&["test", "--input", p.to_str().unwrap(), "--replicates", "50", "--format", "text"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for label in ["statistic:", "p-value:", "change point k:"] {
        assert!(text.lines().any(|l| l.starts_with(label)), "missing {label}");
    }
    let out = cpdetect(&["test", "--input", p.to_str().unwrap(), "--format", "yaml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown format"));
}

#[test]
fn simulate_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.ini");
    fs::write(
        &cfg,
        "[defaults]\nreps = 50\nreplicates = 40\n\n[cell]\nfamily = clayton\nn = 40\ntau1 = 0.3\n\
         methods = boot-iid, asymptotic\n\n[cell]\nfamily = normal\nn = 40\ntau1 = 0.2\ntau2 = 0.6\nt = 0.5\n\
         filter = garch\n",
    )
    .unwrap();
    let out_path = dir.path().join("table.csv");
    let run = |threads: &str| {
        let out = cpdetect(&[
            "simulate", "--config", cfg.to_str().unwrap(), "--reps", "4", "--threads", threads,
            "--seed", "3", "--out", out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read_to_string(&out_path).unwrap()
    };
    let table = run("1");
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "family,n,tau1,tau2,t,gamma,stat,method,reject_pct");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("clayton,40,0.3,0.3,,0,rho1,boot-iid,"));
    assert!(lines[3].starts_with("normal,40,0.2,0.6,0.5,garch,rho1,boot-iid,"));
    for l in &lines[1..] {
        let pct: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        // 4 repetitions, so multiples of 25.
        assert!([0.0, 25.0, 50.0, 75.0, 100.0].contains(&pct));
    }
    assert_eq!(table, run("2"));
}

#[test]
fn simulate_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.ini");
    fs::write(&cfg, "[cell]\nfamily = clayton\nn = 40\nwidth = 3\n").unwrap();
    let out = cpdetect(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "ini") {
            let grid = cpdetect_cli::parse_experiment(&fs::read_to_string(&path).unwrap())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            for cell in &grid.cells {
                if !matches!(cell.family, cpdetect_core::dgp::CopulaFamily::Student { .. }) {
                    cell.dgp().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                }
            }
            seen += 1;
        }
    }
    assert!(seen >= 6);
}
