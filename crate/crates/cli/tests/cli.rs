use std::process::{Command, Output};

use serde_json::Value;

fn eigenkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eigenkit")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn every_command_succeeds_with_an_envelope() {
    for cmd in ["bgg", "slopes", "factor", "family", "cech", "weights"] {
        let mut args = vec![cmd];
        if cmd == "factor" {
            args.extend(["--h", "2"]);
        }
        let out = eigenkit(&args);
        let v = json(&out);
        assert_eq!(v["command"], cmd);
        assert_eq!(v["config"]["p"], 5);
        let cert = &v["certificates"];
        assert_eq!(cert["working_precision_pi"], 20);
        assert!(cert["certified_pi"].as_i64().unwrap() <= 20);
        assert!(String::from_utf8_lossy(&out.stderr).contains("wall time"));
    }
}

#[test]
fn output_is_deterministic() {
    for args in [vec!["factor", "--h", "2"], vec!["weights"], vec!["cech", "--rank", "2"]] {
        let a = eigenkit(&args);
        let b = eigenkit(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn bgg_kernel_dimensions() {
    let v = json(&eigenkit(&["bgg", "--weight", "3,1"]));
    assert_eq!(v["payload"]["kernel_dim"], 3);
    let v = json(&eigenkit(&["bgg", "--weight", "4,0", "--deg", "8"]));
    assert_eq!(v["payload"]["kernel_dim"], 5);
}

#[test]
fn slopes_and_factor() {
    let v = json(&eigenkit(&["slopes", "--n", "5"]));
    let slopes: Vec<String> = v["payload"]["slopes"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect();
    assert_eq!(slopes, ["0", "1", "2", "3", "4"]);
    let v = json(&eigenkit(&["factor", "--h", "2"]));
    assert_eq!(v["payload"]["deg_q"], 3);
    assert_eq!(v["payload"]["projector"]["rank"], 3);
}

#[test]
fn csv_output() {
    let out = eigenkit(&["slopes", "--n", "3", "--out", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "index,slope\n0,0\n1,1\n2,2\n");
}

#[test]
fn out_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    let out = eigenkit(&["weights", "--out-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "weights");
}

#[test]
fn config_files_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let toml = dir.path().join("run.toml");
    std::fs::write(&toml, "p = 7\nprec = 12\n[bgg]\nweight = [2, 0]\n").unwrap();
    let v = json(&eigenkit(&["bgg", "--config", toml.to_str().unwrap()]));
    assert_eq!(v["config"]["p"], 7);
    assert_eq!(v["payload"]["kernel_dim"], 3);
    let kv = dir.path().join("run.cfg");
    std::fs::write(&kv, "# comment\np=7\nprec=12\nweight=2,0\n").unwrap();
    let w = json(&eigenkit(&["bgg", "--config", kv.to_str().unwrap()]));
    assert_eq!(v["payload"], w["payload"]);
    // flags override --set, which overrides the file
    let o = json(&eigenkit(&["bgg", "--config", kv.to_str().unwrap(), "--set", "p=11", "--prec", "10"]));
    assert_eq!(o["config"]["p"], 11);
    assert_eq!(o["config"]["prec"], 10);
    let o = json(&eigenkit(&["bgg", "--set", "p=11", "--p", "3"]));
    assert_eq!(o["config"]["p"], 3);
}

#[test]
fn exit_codes() {
    // validation
    assert_eq!(eigenkit(&["bgg", "--weight", "0,3"]).status.code(), Some(2));
    assert_eq!(eigenkit(&["bgg", "--p", "4"]).status.code(), Some(2));
    assert_eq!(eigenkit(&["factor"]).status.code(), Some(2));
    assert_eq!(eigenkit(&["slopes", "--set", "bogus=1"]).status.code(), Some(2));
    assert_eq!(eigenkit(&["bgg", "--config", "/nonexistent/eigenkit.toml"]).status.code(), Some(2));
    // precision: the slope cut lies beyond what the truncation certifies
    let out = eigenkit(&["factor", "--h", "12"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
}
