use std::path::Path;
use std::process::{Command, Output};

fn streamflow(args: &[&str], preset_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_streamflow"));
    cmd.args(args);
    match preset_dir {
        Some(d) => cmd.env("STREAMFLOW_PRESET_DIR", d),
        None => cmd.env_remove("STREAMFLOW_PRESET_DIR"),
    };
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn small_sweep_is_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, "experiment.kind = sweep\nexperiment.name = s\ngemm.size = 128\nsweep.payload = 64, 256, 4096\nsweep.mode = DM, DevMem\n").unwrap();
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = streamflow(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((std::fs::read(out.join("s.csv")).unwrap(), std::fs::read(out.join("s.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("mode,payload_bytes,exec_time_cycles,schema_version,config_hash"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "gemm.size = 64\nlink.lanes = lots\n").unwrap();
    let o = streamflow(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = streamflow(&["run", "--preset", "no-such-preset"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = streamflow(&["run", "--jobs", "many"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibrate_writes_knobs_and_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let targets = dir.path().join("t.cfg");
    std::fs::write(&targets, "packet.size = 128\npacket.penalty_64 = 0.12\npacket.penalty_4096 = 0.36\n").unwrap();
    let knobs = dir.path().join("k.cfg");
    let args = ["calibrate", "--config", targets.to_str().unwrap(), "--knobs", knobs.to_str().unwrap()];
    let o = streamflow(&args, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&knobs).unwrap();
    assert!(text.contains("link.header_bytes = ") && text.contains("link.stall_gain = "));
    let again = streamflow(&args, None);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(streamflow(&forced, None).status.success());
    assert_eq!(std::fs::read_to_string(&knobs).unwrap(), text);
}

#[test]
fn empty_targets_give_empty_knobs() {
    let dir = tempfile::tempdir().unwrap();
    let targets = dir.path().join("t.cfg");
    std::fs::write(&targets, "# nothing to fit\n").unwrap();
    let knobs = dir.path().join("k.cfg");
    let o = streamflow(&["calibrate", "--config", targets.to_str().unwrap(), "--knobs", knobs.to_str().unwrap()], None);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&knobs).unwrap(), "# fitted knobs\n");
}

#[test]
fn unreachable_targets_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let targets = dir.path().join("t.cfg");
    std::fs::write(&targets, "vit.model = bert-medium\nvit.link_gbps = 2, 64\nvit.latency_s = 0.000001, 0.000001\n").unwrap();
    let knobs = dir.path().join("k.cfg");
    let o = streamflow(&["calibrate", "--config", targets.to_str().unwrap(), "--knobs", knobs.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MISS"));
    assert!(!knobs.exists());
}

#[test]
fn preset_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.cfg"), "experiment.kind = run\nexperiment.name = tiny\ngemm.size = 32\n").unwrap();
    let o = streamflow(&["presets"], Some(dir.path()));
    assert!(stdout(&o).contains("tiny"));
    let out = dir.path().join("out");
    let o = streamflow(&["run", "--preset", "tiny", "--out", out.to_str().unwrap()], Some(dir.path()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("tiny.csv").exists());
}

#[test]
fn bundled_presets_parse() {
    let o = streamflow(&["presets"], None);
    let text = stdout(&o);
    for name in ["baseline", "fig9", "fig11", "validate-gemm", "targets", "knobs"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn validate_gemm_prints_a_pass_line_per_dtype() {
    let dir = tempfile::tempdir().unwrap();
    let o = streamflow(&["validate-gemm", "--out", dir.path().to_str().unwrap(), "--seed", "5"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    for dtype in ["int8", "int16", "int32", "fp16", "fp32"] {
        assert!(text.contains(&format!("PASS {dtype} random: 50/50")), "{text}");
    }
    assert!(text.contains("fixture:int8-3x5x7"));
}
