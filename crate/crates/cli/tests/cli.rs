use std::process::Command;

fn pvtune() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pvtune"))
}

#[test]
fn presets_are_listed() {
    let out = pvtune().arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "fig-tiny",
        "fig-small",
        "fig-linearized-T",
        "fig-sparse",
        "fig-sampling",
        "fig-lsub",
        "fig-vdim",
        "fig-smoothness",
        "fig-pvplus",
    ] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
    let one = pvtune().args(["presets", "fig-tiny"]).output().unwrap();
    assert!(String::from_utf8(one.stdout).unwrap().contains("c_values = [1, 2, 3, 4, 5, 6]"));
}

#[test]
fn bad_config_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "name = \"x\"\nd = 4\nalgorithms = [\"pv_exact\"]\nc_values = [2, 9]\n").unwrap();
    let out = pvtune().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4: field `c_values`"), "{err}");
}

#[test]
fn config_file_run_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "name = \"x\"\nd = 8\nalgorithms = [\"pv_exact\", \"subspace:greedy:trust\"]\nc_values = [3]\n\
             num_seeds = 3\nmax_iterations = 10\nout_dir = {:?}\n",
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = pvtune().arg("run").arg(&cfg).args(["--seed", "4", "--threads", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trust = std::fs::read_to_string(out_dir.join("trace_subspace-greedy-trust_c3.csv")).unwrap();
    let v_row = trust.lines().find(|l| l.contains(",V,")).unwrap();
    assert!(!v_row.ends_with(','), "V rows carry the subspace size: {v_row}");
    let out = pvtune().arg("plot").arg(&out_dir).output().unwrap();
    assert!(out.status.success());
    assert!(out_dir.join("loss.svg").exists());
}

#[test]
fn plotting_an_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = pvtune().arg("plot").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
}
