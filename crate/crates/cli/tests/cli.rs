use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FIXTURE: &str = r#"{"schema": 1, "addresses": ["0", "0,0,1", "0,0,-1", "0,0,0,2", "0,0,0,0,-3"]}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expbrush"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.json"), FIXTURE).unwrap();
    dir
}

#[test]
fn verify_writes_csv() {
    let dir = workspace();
    let o = run(dir.path(), &["verify", "--nmax", "100"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("n,F^-n(1),3/n,pass\n"));
    assert_eq!(text.lines().count(), 101);
    assert!(!text.contains("false"));

    let o = run(dir.path(), &["verify", "--partial-sums", "100"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().last().unwrap().starts_with("100,1.76832591411775"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = workspace();
    assert_eq!(code(&run(dir.path(), &["nonsense"])), 2);
    assert_eq!(code(&run(dir.path(), &["tip", "--address", "1,x"])), 2);
    let o = run(
        dir.path(),
        &["boxes", "--address", "1,x", "--address", "|", "--depth", "0"],
    );
    assert_eq!(code(&o), 2);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.lines().count() >= 3, "{err}");
    assert_eq!(code(&run(dir.path(), &["render", "--a", "0.5"])), 2);
}

#[test]
fn classify_reports_verdicts() {
    let dir = workspace();
    let o = run(dir.path(), &["classify", "--address", "0", "--t", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "CERTIFIED-ESCAPING");
    let o = run(dir.path(), &["classify", "--address", "0", "--t", "0", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "UNKNOWN");
}

#[test]
fn curve_artifacts_are_reproducible() {
    let dir = workspace();
    let args = ["curve", "--addresses", "a.json", "--kmax", "3", "--out", "c.svg"];
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let svg = fs::read(dir.path().join("c.svg")).unwrap();
    let json = fs::read(dir.path().join("c.json")).unwrap();
    assert_eq!(code(&run(dir.path(), &args)), 0);
    assert_eq!(svg, fs::read(dir.path().join("c.svg")).unwrap());
    assert_eq!(json, fs::read(dir.path().join("c.json")).unwrap());

    let v: Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["level_reached"], 3);
    assert_eq!(v["jordan"]["simple"], true);
    assert_eq!(v["jordan"]["winding_seed_center"].as_i64().unwrap().abs(), 1);
    assert!(String::from_utf8(svg).unwrap().contains("id=\"beta\""));

    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = fs::metadata(dir.path().join("c.svg")).unwrap().permissions().mode();
        assert_eq!(mode & 0o777, 0o644);
    }
}

#[test]
fn localized_curve_stays_in_ball() {
    let dir = workspace();
    let o = run(
        dir.path(),
        &[
            "curve",
            "--addresses",
            "a.json",
            "--localize",
            "0,0,1",
            "--eps",
            "0.5",
            "--kmax",
            "2",
            "--out",
            "l.svg",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&fs::read(dir.path().join("l.json")).unwrap()).unwrap();
    assert_eq!(v["localized"]["inside_ball"], true);
    assert_eq!(v["localized"]["encloses_center"], true);
}

#[test]
fn planted_defect_exits_1() {
    let dir = workspace();
    let o = run(
        dir.path(),
        &["boxes", "--addresses", "a.json", "--kmax", "3", "--out", "b.json"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(
        code(&run(
            dir.path(),
            &["boxes", "--addresses", "a.json", "--families", "b.json"]
        )),
        0
    );

    let mut v: Value = serde_json::from_slice(&fs::read(dir.path().join("b.json")).unwrap()).unwrap();
    let last = v["families"].as_array_mut().unwrap().last_mut().unwrap();
    let boxes = last["boxes"].as_array_mut().unwrap();
    let first = boxes[0].clone();
    boxes.push(first);
    fs::write(dir.path().join("bad.json"), serde_json::to_vec(&v).unwrap()).unwrap();

    let o = run(
        dir.path(),
        &["boxes", "--addresses", "a.json", "--families", "bad.json"],
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stderr).unwrap().contains("(6)"));
    let o = run(
        dir.path(),
        &[
            "curve",
            "--addresses",
            "a.json",
            "--families",
            "bad.json",
            "--out",
            "bad.svg",
        ],
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn path_between_complement_and_hair() {
    let dir = workspace();
    let o = run(
        dir.path(),
        &[
            "path",
            "--addresses",
            "a.json",
            "--from",
            "-3,0",
            "--to",
            "5,h:0,0,1",
            "--out",
            "p.svg",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&fs::read(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(v["case"], "complement-escaping");
}

#[test]
fn default_render_is_deterministic() {
    let dir = workspace();
    let o = run(dir.path(), &["render", "--out", "one.png"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&run(dir.path(), &["render", "--out", "two.png"])), 0);
    let one = fs::read(dir.path().join("one.png")).unwrap();
    assert_eq!(one, fs::read(dir.path().join("two.png")).unwrap());
    assert_eq!(&one[1..4], b"PNG");
    let tally = String::from_utf8(o.stdout).unwrap();
    assert!(tally.contains("FATOU_ATTRACTED"), "{tally}");
}
