use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_ssp-mdrk");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ssp_mdrk(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_cmd(sub: &str, config: &Path, out: &Path) -> Output {
    ssp_mdrk(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

/// Data rows of an artifact, without the comment header.
fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn without_wall_time(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# wall_time_s:"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The block of one method in the verify-tableaus output.
fn method_block(text: &str, name: &str) -> String {
    let start = text.find(&format!("[method {name}]")).expect("method present");
    let rest = &text[start..];
    let end = rest.find("satisfied through order").unwrap();
    let end = end + rest[end..].find('\n').unwrap();
    rest[..=end].to_string()
}

#[test]
fn verify_builtins_pass_and_dirks_are_not_ssp() {
    let o = ssp_mdrk(&["verify-tableaus"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    for name in ["implicit-taylor-2", "ssp-imdrk-3", "ssp-imdrk-4", "ssp-imex-mdrk-2", "ssp-imex-mdrk-3"] {
        assert!(method_block(&text, name).contains("sign check: pass"), "{name}");
    }
    for name in ["dirk-2", "dirk-3"] {
        assert!(method_block(&text, name).contains("not SSP"), "{name}");
    }
    assert_eq!(text.matches(": PASS").count(), 7);
}

#[test]
fn verify_round_tripped_file_matches_builtin_report() {
    let o = ssp_mdrk(&["verify-tableaus", configs().join("tableaus/ssp-imdrk-3.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let (builtin, user) = text.split_once("# user file").unwrap();
    assert_eq!(method_block(builtin, "ssp-imdrk-3"), method_block(user, "ssp-imdrk-3"));
}

#[test]
fn verify_flags_positive_ddot() {
    let o = ssp_mdrk(&["verify-tableaus", configs().join("tableaus/bad_ddot.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("sign check: FAIL"));
    assert!(text.contains("violation Ddot[1,1]"), "{text}");
}

#[test]
fn verify_parse_errors_are_usage_errors_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(&dir, "broken.toml", "[method]\nname = \"x\"\nkind = \"implicit-two-derivative\"\nP = [[0.0]\n");
    let o = ssp_mdrk(&["verify-tableaus", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line"), "{err}");
    let ragged = write_config(
        &dir,
        "ragged.toml",
        "[method]\nname = \"x\"\nkind = \"implicit-two-derivative\"\nP = [[0.0, 0.0], [1.0]]\ndiag_D = [0.0, 1.0]\ndiag_Ddot = [-0.1, -0.2]\n",
    );
    assert_eq!(code(&ssp_mdrk(&["verify-tableaus", ragged.to_str().unwrap()])), 2);
}

#[test]
fn scalar_run_stays_positive_and_embeds_the_manifest() {
    let out = TempDir::new().unwrap();
    let o = run_cmd("run", &configs().join("scalar_decay_taylor.toml"), out.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_lines(&out.path().join("final_state.csv"));
    assert_eq!(rows[0], "u1");
    let u: f64 = rows[1].parse().unwrap();
    assert!(u > 0.0 && u < 10.0);
    let traj = data_lines(&out.path().join("trajectory.csv"));
    assert_eq!(traj.len(), 1 + 9);
    assert!(traj[1..].iter().all(|r| r.split(',').nth(2).unwrap().parse::<f64>().unwrap() > 0.0));
    for name in ["final_state.csv", "trajectory.csv", "monitors.txt", "manifest.txt"] {
        let text = fs::read_to_string(out.path().join(name)).unwrap();
        assert!(text.starts_with("# ssp-mdrk "), "{name}");
        for key in ["# subcommand: run", "# config_sha256: ", "# method: implicit-taylor-2", "# status: ok", "# wall_time_s: "] {
            assert!(text.contains(key), "{name} lacks {key}");
        }
    }
    assert!(fs::read_to_string(out.path().join("monitors.txt")).unwrap().contains("monitor positivity PASS"));
}

#[test]
fn tableau_file_method_matches_builtin_run() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "builtin.toml", "[problem]\nname = \"scalar_decay\"\n[method]\nname = \"ssp-imdrk-3\"\n[run]\ndt = 0.25\n");
    assert_eq!(code(&run_cmd("run", &cfg, a.path())), 0);
    assert_eq!(code(&run_cmd("run", &configs().join("run_with_file_method.toml"), b.path())), 0);
    assert_eq!(
        data_lines(&a.path().join("final_state.csv")),
        data_lines(&b.path().join("final_state.csv"))
    );
}

#[test]
fn identical_configs_give_identical_outputs() {
    let config = configs().join("broadwell_run.toml");
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(code(&run_cmd("run", &config, a.path())), 0);
    assert_eq!(code(&ssp_mdrk(&["--jobs", "1", "run", "--config", config.to_str().unwrap(), "--out", b.path().to_str().unwrap()])), 0);
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 4);
    for name in names {
        let x = fs::read_to_string(a.path().join(&name)).unwrap();
        let y = fs::read_to_string(b.path().join(&name)).unwrap();
        assert_eq!(without_wall_time(&x), without_wall_time(&y), "{name:?}");
    }
    let moments = data_lines(&a.path().join("moments.csv"));
    assert_eq!(moments[0], "x,rho,m,z");
    assert_eq!(moments.len(), 81);
}

#[test]
fn newton_failure_exits_1_with_failed_marker() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "fail.toml",
        "[problem]\nname = \"scalar_decay\"\n[method]\nname = \"ssp-imdrk-3\"\n[run]\nn_steps = 4\n[solver]\nnewton_max_iters = 1\n",
    );
    let out = dir.path().join("out");
    let o = run_cmd("run", &cfg, &out);
    assert_eq!(code(&o), 1);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("# status: FAILED: step 1"), "{manifest}");
    let state = fs::read_to_string(out.join("final_state.csv")).unwrap();
    assert!(state.contains("# status: FAILED"));
    assert_eq!(data_lines(&out.join("final_state.csv"))[1].parse::<f64>().unwrap(), 10.0);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    assert_eq!(code(&ssp_mdrk(&["run", "--out", out_s])), 2);
    assert_eq!(code(&ssp_mdrk(&["no-such-command"])), 2);
    assert_eq!(code(&ssp_mdrk(&["run", "--config", "/nonexistent.toml", "--out", out_s])), 2);
    assert_eq!(code(&ssp_mdrk(&["--jobs", "0", "verify-tableaus"])), 2);

    let cases = [
        "[problem]\nname = \"scalar_decay\"\nbogus = 1\n[method]\nname = \"dirk-2\"\n[run]\ndt = 0.1\n",
        "[problem]\nname = \"nowhere\"\n[method]\nname = \"dirk-2\"\n[run]\ndt = 0.1\n",
        "[problem]\nname = \"scalar_decay\"\n[method]\nname = \"rk-nothing\"\n[run]\ndt = 0.1\n",
        "[problem]\nname = \"scalar_decay\"\n[method]\nname = \"dirk-2\"\n",
        "[problem]\nname = \"broadwell\"\n[method]\nname = \"dirk-2\"\n[run]\ndt = 0.1\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(&dir, &format!("c{i}.toml"), text);
        let o = run_cmd("run", &cfg, &out);
        assert_eq!(code(&o), 2, "case {i}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!out.exists(), "usage errors must not write artifacts");
}

#[test]
fn empty_dt_list_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "conv.toml",
        "[problem]\nname = \"ode_relaxation\"\n[method]\nname = \"ssp-imex-mdrk-2\"\n[convergence]\neps = [1.0]\ndt = []\n",
    );
    let o = run_cmd("convergence", &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dt list is empty"));
}

#[test]
fn ode_second_order_convergence_csv_shows_slope_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "conv.toml",
        "[problem]\nname = \"ode_relaxation\"\n[method]\nname = \"ssp-imex-mdrk-2\"\n[convergence]\neps = [1.0]\ndt = [0.02, 0.01, 0.005, 0.0025, 0.00125]\n",
    );
    let out = dir.path().join("out");
    let o = run_cmd("convergence", &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_lines(&out.join("convergence.csv"));
    assert_eq!(rows[0], "eps,dt,error,order_estimate");
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    assert_eq!(last[1].parse::<f64>().unwrap(), 0.00125);
    let order: f64 = last[3].parse().unwrap();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
    let script = fs::read_to_string(out.join("convergence.gp")).unwrap();
    assert!(script.contains("'convergence.csv'"));
}

#[test]
fn broadwell_grid_study_writes_a_study_csv() {
    let out = TempDir::new().unwrap();
    let o = run_cmd("convergence", &configs().join("broadwell_imex3_grid.toml"), out.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_lines(&out.path().join("convergence.csv"));
    assert_eq!(rows.len(), 1 + 2 * 3);
    for r in &rows[1..] {
        let order: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert!((order - 3.0).abs() < 0.25, "{r}");
    }
}

#[test]
fn ap_check_writes_deviations_and_rejects_implicit_methods() {
    let out = TempDir::new().unwrap();
    let o = run_cmd("ap-check", &configs().join("ap_ode.toml"), out.path());
    assert_eq!(code(&o), 0);
    let rows = data_lines(&out.path().join("ap_check.csv"));
    assert_eq!(rows[0], "eps,deviation");
    let dev: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(dev.len(), 6);
    assert!(dev.windows(2).all(|w| w[1] < w[0]));

    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "ap.toml",
        "[problem]\nname = \"ode_relaxation\"\n[method]\nname = \"ssp-imdrk-3\"\n[ap]\ndt = 0.05\neps = [1e-6]\n",
    );
    assert_eq!(code(&run_cmd("ap-check", &cfg, &dir.path().join("out"))), 2);
}

#[test]
fn seed_is_recorded() {
    let out = TempDir::new().unwrap();
    let config = configs().join("scalar_decay_taylor.toml");
    let o = ssp_mdrk(&["run", "--seed", "42", "--config", config.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(out.path().join("manifest.txt")).unwrap().contains("# seed: 42"));
}
