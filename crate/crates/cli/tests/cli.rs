use std::fs;
use std::process::Command;

use lossy_helmholtz_cli::config::{format_complex, Case, Driver, ModeSelect, Problem};
use lossy_helmholtz_cli::{parse_complex, parse_config, run, RunStatus};
use num_complex::Complex64;
use proptest::prelude::*;

const BIN: &str = env!("CARGO_BIN_EXE_lossy-helmholtz");

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        Just(0.0),
        Just(-0.0),
        Just(1e-300),
        Just(-2.5e17)
    ]
}

proptest! {
    #[test]
    fn complex_literal_round_trip(re in finite(), im in finite()) {
        let z = Complex64::new(re, im);
        let back = parse_complex(&format_complex(z)).unwrap();
        prop_assert_eq!(back.re.to_bits(), re.to_bits());
        prop_assert_eq!(back.im.to_bits(), im.to_bits());
    }

    #[test]
    fn config_round_trip(
        n in 3usize..500,
        omega in 0.01..50.0f64,
        rho in (finite(), finite()),
        tol in 1e-14..1.0f64,
        robin in any::<bool>(),
        periodic in any::<bool>(),
        precond in any::<bool>(),
        mode in 0usize..3,
        maxit in proptest::option::of(1usize..10_000),
        disc in proptest::option::of((0.0..1.0f64, 0.0..1.0f64, 0.01..0.5f64)),
    ) {
        let mut text = format!(
            "n={n}\nomega={omega:?}\nrho={}\ntol={tol:?}\nbc={}\nperiodic={periodic}\nprecond={precond}\nmode={}\n",
            format_complex(Complex64::new(rho.0, rho.1)),
            if robin { "robin" } else { "dirichlet" },
            ["both", "real-primal", "imag-primal"][mode],
        );
        if let Some(m) = maxit {
            text.push_str(&format!("maxit={m}\n"));
        }
        if let Some((x, y, r)) = disc {
            text.push_str(&format!("inclusion=disc {x} {y} {r}\nrho_in=2+0.011i\nkappa_in=1-0.011i\n"));
        }
        let c = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&c.to_config_text()).unwrap(), c);
    }
}

#[test]
fn reference_config_defaults() {
    let c = parse_config("n=30\nomega=2\nrho=-5+5i\nkappa=4-4i\nbc=dirichlet\ncase=manufactured")
        .unwrap();
    assert_eq!(c.driver, Driver::Solve);
    assert_eq!(c.problem, Problem::Dirichlet);
    assert_eq!(c.mode, ModeSelect::Both);
    assert_eq!(c.case, Case::Manufactured);
    assert!(c.exact().is_some());
}

#[test]
fn study_writes_table_shaped_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("study");
    let status = Command::new(BIN)
        .args(["--study", "30:100:10", "--eval-n", "600", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,h,vnorm_error");
    assert_eq!(lines.len(), 9);
    let ns: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ns, ["30", "40", "50", "60", "70", "80", "90", "100"]);
    let errors: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(errors.iter().all(|e| e.is_finite() && *e > 0.0));
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(
        fs::read_to_string(out.join("status.txt")).unwrap(),
        "status=ok\n"
    );
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "n=40\ntol=1e-4\n").unwrap();
    let out = tmp.path().join("o");
    let status = Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .args([
            "--n",
            "8",
            "--tol",
            "1e-6",
            "--mode",
            "real-primal",
            "--no-precond",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let echoed = parse_config(&fs::read_to_string(out.join("config.txt")).unwrap()).unwrap();
    assert_eq!(
        (echoed.n, echoed.tol, echoed.precondition),
        (8, 1e-6, false)
    );
    let field = fs::read_to_string(out.join("field.csv")).unwrap();
    assert_eq!(field.lines().count(), 65);
    assert!(out.join("iterations_real_primal.csv").exists());
    assert!(!out.join("iterations_imag_primal.csv").exists());
}

#[test]
fn invalid_config_exits_with_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["--n", "2"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid grid"));
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "n=10\nrho=1+2j\n").unwrap();
    let out = Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2: key `rho`"));
}

#[test]
fn solver_failure_exits_nonzero_with_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("literal.cfg");
    fs::write(
        &cfg,
        "bc=robin\nperiodic=on\nn=30\nomega=10\nrho=1+0.011i\nkappa=1+0.011i\ninclusion=disc 0.5 0.5 0.2\n\
         rho_in=2+0.011i\nkappa_in=1+0.011i\nrobin_a=-1+0.333i\nrobin_g=3.33i\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("o");
    let out = Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let status = fs::read_to_string(out_dir.join("status.txt")).unwrap();
    assert!(
        status.starts_with("status=failed partial_outputs=true"),
        "{status}"
    );
    assert!(out_dir.join("field.csv").exists());
}

#[test]
fn robin_scene_writes_both_halves_and_boundary_records() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = parse_config(
        "bc=robin\nperiodic=on\nn=20\nomega=10\nrho=1+0.011i\nkappa=1-0.011i\ninclusion=disc 0.5 0.5 0.2\n\
         rho_in=2+0.011i\nkappa_in=1-0.011i\nrobin_a=-1+0.333i\nrobin_g=3.33i\n",
    )
    .unwrap();
    c.out = tmp.path().to_path_buf();
    let outcome = run(&c).unwrap();
    assert_eq!(outcome.status, RunStatus::Ok);
    let field = fs::read_to_string(tmp.path().join("field.csv")).unwrap();
    let rows: Vec<Vec<f64>> = field
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 400);
    assert!(rows.iter().any(|r| r[2] != 0.0) && rows.iter().any(|r| r[3] != 0.0));
    // periodic: first and last column carry the same values
    for row in 0..20 {
        assert_eq!(rows[row * 20][2..], rows[row * 20 + 19][2..]);
    }
    let boundary = fs::read_to_string(tmp.path().join("robin_boundary.csv")).unwrap();
    assert_eq!(boundary.lines().count(), 1 + 2 * 19);
}

#[test]
fn diagnostics_report_condition_drop() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c =
        parse_config("n=16\ndriver=diagnostics\nmode=real-primal\nlanczos_steps=40").unwrap();
    c.out = tmp.path().to_path_buf();
    assert_eq!(run(&c).unwrap().status, RunStatus::Ok);
    let csv = fs::read_to_string(tmp.path().join("diagnostics.csv")).unwrap();
    let cond: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(cond.len(), 2);
    assert!(cond[1] < cond[0]);
}

#[test]
fn study_rejects_unsupported_problems() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = parse_config("n=10\nbc=robin\ndriver=study").unwrap();
    c.out = tmp.path().to_path_buf();
    assert!(run(&c).is_err());
}
