use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn paraosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paraosc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn run_ok(config: &str, extra: &[&str]) -> String {
    let mut args = vec!["run", "--config", config];
    args.extend(extra);
    let out = paraosc(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn list_names_every_experiment() {
    let out = paraosc(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["spectrum", "zero_drive", "ramp", "wigner", "lz", "decay_rates", "radiation", "floquet_check"] {
        assert!(text.contains(&format!("\n{name}: ")), "{name} missing from\n{text}");
    }
    assert!(text.contains("s_tilde"));
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"ramp\"\ndelta = 0.0\nf_final = 5.0\ns_tilde = 1.0\n");
    assert!(paraosc(&["validate", "--config", &cfg]).status.success());

    for (set, key) in [
        ("s_tilde=-1", "s_tilde"),
        ("bogus=3", "bogus"),
        ("dim=1", "dim"),
        ("initial_fock=80", "initial_fock"),
        ("f_final=\"x\"", "f_final"),
    ] {
        let out = paraosc(&["validate", "--config", &cfg, "--set", set]);
        assert!(!out.status.success(), "{set} accepted");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(&format!("`{key}`")), "{set}: {err}");
    }

    let missing = write_config(dir.path(), "experiment = \"ramp\"\ndelta = 0.0\n");
    let err = String::from_utf8(paraosc(&["validate", "--config", &missing]).stderr).unwrap();
    assert!(err.contains("`f_final`"), "{err}");
}

#[test]
fn failed_validation_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        &format!(
            "experiment = \"radiation\"\noutput_dir = {:?}\ndelta = 1.8\nf = 1.0\ngamma_tilde = 0.1\nt_max = 50.0\n",
            out_dir.to_str().unwrap()
        ),
    );
    let out = paraosc(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("`t_max`"));
    assert!(!out_dir.exists());
}

#[test]
fn zero_drive_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"zero_drive\"\ndelta_min = 0.0\ndelta_max = 3.0\ndelta_points = 13\nn_max = 5\ndim = 16\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&cfg, &["--set", &format!("output_dir={:?}", a.to_str().unwrap())]);
    run_ok(&cfg, &["--set", &format!("output_dir={:?}", b.to_str().unwrap())]);
    for f in ["zero_drive.csv", "degeneracies.csv"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
        assert!(!x.contains(&b'\r'));
        assert_eq!(x.last(), Some(&b'\n'));
    }

    let (header, rows) = read_csv(&a.join("zero_drive.csv"));
    assert_eq!(header, ["delta", "n", "parity", "energy"]);
    assert_eq!(rows.len(), 13 * 6);
    // at delta = 2 the pairs (0, 3) and (1, 2) coincide
    let e: Vec<f64> = rows.iter().filter(|r| r[0] == 2.0).map(|r| r[3]).collect();
    assert!((e[0] - e[3]).abs() < 1e-12 && (e[1] - e[2]).abs() < 1e-12, "{e:?}");

    let (_, deg) = read_csv(&a.join("degeneracies.csv"));
    let at2: Vec<&Vec<f64>> = deg.iter().filter(|r| r[0] == 2.0).collect();
    assert_eq!(at2.len(), 2);
    assert!(at2.iter().all(|r| r[1] == 1.0 && r[3] == -1.0 && r[2] == r[4]));

    let m = manifest(&a);
    assert_eq!(m["experiment"], "zero_drive");
    assert_eq!(m["convergence"]["base"]["dim"], 16);
    assert_eq!(m["convergence"]["enlarged"]["dim"], 26);
    assert_eq!(m["convergence"]["agreed"], true);
    assert!(m["results"]["max_closed_form_deviation"].as_f64().unwrap() < 1e-12);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["parameters"]["n_max"], 5);
}

#[test]
fn ramp_reports_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "experiment = \"ramp\"\noutput_dir = {:?}\ndelta = 0.0\nf_final = 5.0\ns_tilde = 1.0\noutput_points = 21\n",
            dir.path().to_str().unwrap()
        ),
    );
    run_ok(&cfg, &[]);
    let m = manifest(dir.path());
    let fid = m["results"]["final_fidelity"].as_f64().unwrap();
    assert!((fid - 0.997).abs() < 0.005, "{fid}");
    assert_eq!(m["tolerances"]["rel_tol"], 1e-9);
    let (header, rows) = read_csv(&dir.path().join("ramp.csv"));
    assert_eq!(header, ["t", "f", "fidelity", "mean_occupation", "parity_expectation"]);
    assert!(rows.iter().all(|r| (r[4] - 1.0).abs() < 1e-9));
    assert_eq!(rows[0][2], 1.0);
    assert!((rows.last().unwrap()[2] - fid).abs() < 1e-12);
}

#[test]
fn lz_populations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "experiment = \"lz\"\noutput_dir = {:?}\nratio = 0.25\nt_max = 60\nt_points = 601\n",
            dir.path().to_str().unwrap()
        ),
    );
    run_ok(&cfg, &[]);
    let m = manifest(dir.path());
    let up = m["results"]["alpha_up_sq"].as_f64().unwrap();
    assert!(m["results"]["max_weber_deviation"].as_f64().unwrap() < 1e-4);
    let (header, rows) = read_csv(&dir.path().join("lz.csv"));
    assert_eq!(
        header,
        ["t", "up_numeric", "down_numeric", "re_c_plus", "im_c_plus", "re_c_minus", "im_c_minus", "up_weber"]
    );
    // starts in the upper adiabatic state, settles at |alpha_up|^2
    assert!((rows[0][1] - 1.0).abs() < 1e-12);
    let tail: Vec<f64> = rows[500..].iter().map(|r| r[1]).collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!((mean - up).abs() < 5e-3, "{mean} vs {up}");
    assert!(rows.iter().all(|r| (r[1] + r[2] - 1.0).abs() < 1e-9));
    assert!(rows.iter().all(|r| (r[3] * r[3] + r[4] * r[4] + r[5] * r[5] + r[6] * r[6] - 1.0).abs() < 1e-9));

    let (_, scan) = read_csv(&dir.path().join("alphas.csv"));
    assert!(scan.iter().all(|r| (r[1] + r[2] - 1.0).abs() < 1e-6 && (r[1] + r[3] - 1.0).abs() < 1e-6));
}

#[test]
fn floquet_check_converges_in_v() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "experiment = \"floquet_check\"\noutput_dir = {:?}\ndelta = 0.5\nf = 0.5\n",
            dir.path().to_str().unwrap()
        ),
    );
    let stdout = run_ok(&cfg, &[]);
    assert!(stdout.contains("floquet.csv"));
    let m = manifest(dir.path());
    assert_eq!(m["results"]["monotone"], true);
    assert_eq!(m["convergence"]["enlarged"]["n_cut"], 34);
}

#[test]
fn unconverged_truncation_fails_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "experiment = \"wigner\"\noutput_dir = {:?}\ndelta = 0.0\nf = 2.0\nprepare = \"eigenstate\"\ndim = 8\nq_points = 11\np_points = 11\nq_min = -5.0\nq_max = 5.0\np_min = -5.0\np_max = 5.0\n",
            dir.path().to_str().unwrap()
        ),
    );
    let out = paraosc(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("convergence check failed"));
    let m = manifest(dir.path());
    assert_eq!(m["convergence"]["agreed"], false);
}
