use std::path::Path;
use std::process::{Command, Output};

fn paddy(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paddy")).args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&paddy(&["frobnicate"], d)), 2);
    assert_eq!(code(&paddy(&["synth", "--config", "missing.toml", "--out", "s"], d)), 2);

    std::fs::write(d.join("bad.toml"), "seed = \"forty-two\"\n").unwrap();
    let o = paddy(&["synth", "--config", "bad.toml", "--out", "s"], d);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    std::fs::write(d.join("empty.csv"), "plot_id,district,area_m2,band,day,value_db\n").unwrap();
    assert_eq!(code(&paddy(&["features", "--series", "empty.csv", "--out", "f.csv"], d)), 2);
    assert_eq!(code(&paddy(&["features", "--series", "empty.csv", "--start", "June 1", "--out", "f.csv"], d)), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let o = paddy(args, d);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    ok(&["synth", "--seed", "3", "--plots-per-class", "12", "--out", "scene"]);
    ok(&["features", "--series", "scene/series.csv", "--labels", "scene/labels.csv", "--out", "f.csv"]);
    for out in ["a.json", "b.json"] {
        ok(&["train", "--features", "f.csv", "--task", "irrigation", "--kind", "gb", "--budget", "2", "--out", out]);
    }
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    assert!(d.join("a.json.manifest.json").exists());

    ok(&["predict", "--series", "scene/series.csv", "--model", "a.json", "--start", "2024-05-01", "--out", "p.csv"]);
    let text = std::fs::read_to_string(d.join("p.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "plot_id,district,area_m2,predicted_class,score");
    assert_eq!(text.lines().count(), 37);
}
