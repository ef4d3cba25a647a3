use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn drinfeld(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drinfeld")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn local_dims_report() {
    let out = drinfeld(&["local-dims", "--p", "2", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["command"], "local-dims");
    assert_eq!(v["pass"], true);
    assert_eq!(v["config"]["p"], 2);
}

#[test]
fn tree_counts() {
    let v = json(&drinfeld(&["tree", "--p", "3", "--radius", "2"]));
    assert_eq!(v["pass"], true);
    assert_eq!(v["computed"]["vertices"], 17);
    assert_eq!(v["computed"]["edges"], 16);
    assert_eq!(v["computed"]["regular"], true);
}

#[test]
fn lattice_reports_pass() {
    for p in ["2", "3"] {
        for k in ["0", "1", "2", "5"] {
            for target in [["--edge", "0,0;-1,0"], ["--edge", "2,1;1,1"], ["--vertex", "1,0"], ["--vertex", "-1,0"]] {
                let out = drinfeld(&["lattice", target[0], target[1], "--p", p, "--k", k]);
                assert_eq!(out.status.code(), Some(0), "p={p} k={k} {target:?}");
            }
        }
    }
}

#[test]
fn negative_arguments_are_values() {
    let out = drinfeld(&["residue", "--g", "-1/z", "--p", "2", "--radius", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = drinfeld(&["theta", "--f", "-z^3", "--k", "1", "--check-vertex", "-2,1", "--p", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&drinfeld(&["tree", "--center", "-1,0", "--p", "2", "--radius", "1"]));
    assert_eq!(v["computed"]["vertices"], 4);
}

#[test]
fn every_modp_subcommand_passes() {
    for what in ["degrees", "sections", "stable-lines", "symgeom-check", "b-forms"] {
        let out = drinfeld(&["modp", what, "--p", "2", "--k", "9"]);
        assert_eq!(out.status.code(), Some(0), "{what}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_drinfeld"))
            .args(["sweep", "--p", "3", "--k", "2", "--seed", "9", "--count", "10"])
            .env("DRINFELD_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn config_file_then_flags() {
    let mut file = tempfile();
    writeln!(file.1, "# comment\np = 3\nk = 4\nradius = 1").unwrap();
    let path = file.0.to_str().unwrap();
    let v = json(&drinfeld(&["local-dims", "--config", path]));
    assert_eq!(v["config"]["p"], 3);
    assert_eq!(v["config"]["k"], 4);
    let v = json(&drinfeld(&["local-dims", "--config", path, "--k", "2"]));
    assert_eq!(v["config"]["k"], 2);
    std::fs::remove_file(&file.0).ok();
}

#[test]
fn bad_inputs_exit_with_two() {
    for args in [
        &["local-dims", "--p", "4"][..],
        &["local-dims", "--p", "3", "--q", "9"][..],
        &["residue", "--g", "1/(z-"][..],
    ] {
        let out = drinfeld(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

fn tempfile() -> (std::path::PathBuf, std::fs::File) {
    let path = std::env::temp_dir().join(format!("drinfeld-cli-{}.conf", std::process::id()));
    let file = std::fs::File::create(&path).unwrap();
    (path, file)
}
