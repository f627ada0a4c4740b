use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinetic-eikonal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn relativistic_row_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "hamiltonian",
        "--model",
        "atoms:(1,0.5);(-1,0.5)",
        "--p-min",
        "0",
        "--p-max",
        "0",
        "--np",
        "1",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // H''(0) = 2 theta^2 = 2 for atoms at +-1
    assert_eq!(read(dir.path(), "h_table.csv"), "p,H,dH,d2H\n0.0,0.0,0.0,2.0\n");
    let legendre = read(dir.path(), "legendre.csv");
    assert!(legendre.starts_with("q,L\n"));
    assert_eq!(legendre.lines().count(), 202);
}

#[test]
fn hamiltonian_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["hamiltonian", "--model", "coth:vmax=1", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = read(dir.path(), "h_table.csv");
    assert!(!text.contains('\r'));
    let rows: Vec<_> = text.lines().collect();
    assert_eq!(rows.len(), 402);
    assert_eq!(rows[1].split(',').next().unwrap(), "-5.0");
    assert_eq!(rows[401].split(',').next().unwrap(), "5.0");
    for r in &rows[1..] {
        let fields: Vec<f64> = r.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 4);
    }
}

#[test]
fn small_grid_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["hj", "--nx", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("hj_series.csv").exists());
}

#[test]
fn unknown_flags_and_models_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["hj", "--frobnicate", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["hj", "--model", "gauss:s=1", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["kinetic", "--model", "coth", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["converge", "--eps", "0.5,0.25", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["unknown"]).status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn numerical_failure_exit_code() {
    // p_span far too small for the q range: the supremum
    // sits on the p-grid boundary
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "legendre",
        "--model",
        "uniform:vmax=1,n=32",
        "--p-span",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("legendre.csv").exists());
}

#[test]
fn compare_shares_initial_rows_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["compare", "--nx", "100", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let kin = read(a.path(), "hj_series_kinetic.csv");
    let cls = read(a.path(), "hj_series_classical.csv");
    let initial = |s: &str| -> Vec<String> {
        s.lines()
            .skip(1)
            .filter(|l| l.starts_with("0.0,"))
            .map(String::from)
            .collect()
    };
    assert_eq!(initial(&kin).len(), 100);
    assert_eq!(initial(&kin), initial(&cls));
    assert_ne!(kin, cls);
    assert_eq!(kin, read(b.path(), "hj_series_kinetic.csv"));
    assert_eq!(cls, read(b.path(), "hj_series_classical.csv"));
}

#[test]
fn kinetic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "kinetic",
        "--model",
        "uniform:vmax=1,n=8",
        "--eps",
        "0.25",
        "--nx",
        "40",
        "--t",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fin = read(dir.path(), "kinetic_final.csv");
    assert!(fin.starts_with("x,v,phi\n"));
    assert_eq!(fin.lines().count(), 1 + 40 * 8);
    let mac = read(dir.path(), "macro_series.csv");
    assert!(mac.starts_with("t,x,phi_macro\n"));
    assert_eq!(mac.lines().count(), 1 + 11 * 40);
    let bounds = read(dir.path(), "bounds.csv");
    assert!(bounds.starts_with("t,min_phi,max_phi,lip_x,rate_t,lip_v,violations\n"));
    for row in bounds.lines().skip(1) {
        assert!(row.ends_with(",0"), "{row}");
    }
}

#[test]
fn atoms_leave_lip_v_empty() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "bounds",
        "--model",
        "atoms:(1,0.5);(-1,0.5)",
        "--nx",
        "40",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in read(dir.path(), "bounds.csv").lines().skip(1) {
        assert_eq!(row.split(',').nth(5), Some(""));
    }
}

#[test]
fn converge_writes_table_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "converge",
        "--model",
        "uniform:vmax=1,n=8",
        "--eps",
        "0.4,0.2,0.1",
        "--nx",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = read(dir.path(), "converge.csv");
    let errs: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    for k in 0..3 {
        assert!(dir.path().join(format!("bounds_eps{k}.csv")).exists());
    }
}
