use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn grid_lists_every_tone() {
    let o = wpt(&["--fast", "grid"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 17);
    assert_eq!(lines[0], "tone_index,f_hz");
    assert_eq!(lines[1], "1,1.90000000000e4");
    assert_eq!(lines[16], "16,2.08750000000e4");

    let full = stdout(&wpt(&["grid"]));
    assert!(full.lines().nth(1).unwrap().ends_with("9.10000000000e8"));
}

#[test]
fn power_sweep_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(wpt(&[
        "--fast",
        "--workers",
        "1",
        "--out",
        &out_arg(a.path()),
        "sweep",
        "power"
    ])
    .status
    .success());
    assert!(wpt(&[
        "--fast",
        "--workers",
        "2",
        "--out",
        &out_arg(b.path()),
        "sweep",
        "power"
    ])
    .status
    .success());
    let x = fs::read(a.path().join("sweep_power.csv")).unwrap();
    let y = fs::read(b.path().join("sweep_power.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("p_t_w,method,v_out_v,p_out_w,iterations,objective,status\n"));
    assert_eq!(text.lines().count(), 1 + 6 * 3);
}

#[test]
fn seed_flag_changes_the_channel() {
    let dir = tempfile::tempdir().unwrap();
    let read = |seed: &str| {
        assert!(wpt(&[
            "--fast",
            "--seed",
            seed,
            "--out",
            &out_arg(dir.path()),
            "channel",
            "gen"
        ])
        .status
        .success());
        fs::read_to_string(dir.path().join("channel.json")).unwrap()
    };
    let one = read("1");
    assert_eq!(one, read("1"));
    assert_ne!(one, read("2"));
    assert_eq!(one.matches("tau_s").count(), 18);
}

#[test]
fn printed_config_drives_later_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let o = wpt(&["--fast", "--seed", "7", "config"]);
    assert!(o.status.success());
    fs::write(&cfg_path, stdout(&o)).unwrap();
    let o = wpt(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        &out_arg(dir.path()),
        "channel",
        "response",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("channel_response.csv")).unwrap();
    assert!(csv.starts_with("tone_index,f_hz,h,psi_rad\n"));
    assert_eq!(csv.lines().count(), 17);
}

#[test]
fn optimize_writes_trace_and_waveform() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpt(&[
        "--fast",
        "--out",
        &out_arg(dir.path()),
        "optimize",
        "scp_qclp",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("scp_qclp: v_out "));
    let trace = fs::read_to_string(dir.path().join("scp_trace.csv")).unwrap();
    assert!(trace.starts_with("m,beta0,delta,s_1,"));
    let json = fs::read_to_string(dir.path().join("scp_qclp_waveform.json")).unwrap();
    assert!(json.contains("amplitudes"));
}

#[test]
fn waveform_and_ripple_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpt(&[
        "--fast",
        "--out",
        &out_arg(dir.path()),
        "waveform",
        "--method",
        "mrt",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("mrt: PAPR "));
    assert!(dir.path().join("waveform_mrt_amplitudes.csv").exists());
    assert!(dir.path().join("waveform_mrt_signal.csv").exists());

    let o = wpt(&[
        "--fast",
        "--out",
        &out_arg(dir.path()),
        "ripple",
        "--multipliers",
        "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("ripple.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().ends_with(",ok"));
}

#[test]
fn bad_inputs_exit_nonzero_with_one_diagnostic_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        "{\"system\": {\"f_min\": 2.0, \"f_max\": 1.0, \"n_tones\": 4}}",
    )
    .unwrap();
    for args in [
        vec!["--config", bad.to_str().unwrap(), "grid"],
        vec!["--config", "/definitely/missing.json", "grid"],
    ] {
        let o = wpt(&args);
        assert!(!o.status.success());
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "));
    }
    assert!(!wpt(&["optimize", "steepest"]).status.success());
    assert!(!wpt(&["--fast", "--config", "x.json", "grid"])
        .status
        .success());
}
