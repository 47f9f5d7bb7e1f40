use std::path::PathBuf;
use std::process::{Command, Output};

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models")
}

fn model(name: &str) -> String {
    models().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crnlump")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crnlump-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn reduce_running_example() {
    let o = run(&["reduce", &model("running_example.crn")]);
    assert_eq!(o.status.code(), Some(0));
    let want = "# partition {{A},{B},{C,E},{D}}\n\
                # 5 -> 4 species, 7 -> 6 reactions\n\
                A -> D @ 6\nA -> 3C @ 2\nC + D -> 2C + D @ 5\nB -> C @ 6\nB -> 3D @ 2\n2D -> C @ 3\n";
    assert_eq!(stdout(&o), want);
}

#[test]
fn reduce_writes_files() {
    let out = std::env::temp_dir().join(format!("crnlump-red-{}.crn", std::process::id()));
    let map = out.with_extension("map");
    let o = run(&[
        "reduce",
        &model("running_example.crn"),
        "--out",
        out.to_str().unwrap(),
        "--map-out",
        map.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("A -> D @ 6\n"));
    assert_eq!(std::fs::read_to_string(&map).unwrap(), "A -> A\nB -> B\nC -> C\nD -> D\nE -> C\n");
}

#[test]
fn reduce_minimal_network_is_identity() {
    let p = scratch("minimal.crn", "A -> B @ 1\nB -> A @ 2\n");
    let o = run(&["reduce", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# 2 -> 2 species, 2 -> 2 reactions (identity)"));
}

#[test]
fn reduce_with_no_refine() {
    let o = run(&["reduce", &model("running_example.crn"), "--partition", &model("running_example.fb"), "--no-refine"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("(A, B, 0, [D], 6, 0)"));
    let forced = run(&[
        "reduce",
        &model("running_example.crn"),
        "--partition",
        &model("running_example.fb"),
        "--no-refine",
        "--force",
    ]);
    assert_eq!(forced.status.code(), Some(0));
    assert!(stdout(&forced).contains("not verified"));
}

#[test]
fn three_reagents_rejected() {
    let p = scratch("ternary.crn", "A + B + C -> D @ 1\n");
    let o = run(&["reduce", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn check_smb_exit_codes() {
    let ok = run(&["check-smb", &model("running_example.crn"), "--partition", &model("running_example.smb")]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(&["check-smb", &model("running_example.crn"), "--partition", &model("running_example.fb")]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(stdout(&bad), "not an SMB: (A, B, 0, [D], 6, 0)\n");
    let missing = run(&["check-smb", &model("running_example.crn"), "--partition", "/nonexistent/partition"]);
    assert_eq!(missing.status.code(), Some(2));
    let usage = run(&["check-smb", &model("running_example.crn")]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn check_fb_exit_codes() {
    let ok = run(&["check-fb", &model("running_example.crn"), "--partition", &model("running_example.fb")]);
    assert_eq!(ok.status.code(), Some(0));
    let ad = scratch("ad.part", "A D\n");
    let bad = run(&["check-fb", &model("running_example.crn"), "--partition", ad.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("ccr[A, 0] = 8 but ccr[D, 0] = 0"));

    let fg = scratch("fg.part", "F G\n");
    let two = model("two_state.crn");
    for flag in [&[][..], &["--halve-homeo"][..]] {
        let mut args = vec!["check-fb", &two, "--partition", fg.to_str().unwrap()];
        args.extend_from_slice(flag);
        assert_eq!(run(&args).status.code(), Some(1));
    }
}

#[test]
fn enumerate_two_state() {
    let o = run(&["enumerate", &model("two_state.crn"), "--init", "F", "--states"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "states: 2\ntransitions: 2\ntruncated: false\nF\nG\n");
    let capped = run(&["enumerate", &model("running_example.crn"), "--init", "2A + C + D", "--max-states", "10"]);
    assert_eq!(capped.status.code(), Some(3));
    assert!(stdout(&capped).contains("truncated: true"));
    let bad_state = run(&["enumerate", &model("two_state.crn"), "--init", "Q"]);
    assert_eq!(bad_state.status.code(), Some(2));
}

#[test]
fn check_lumpable_two_state() {
    let o = run(&["check-lumpable", &model("two_state.crn"), "--init", "F", "--lumped"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "states: 2, blocks: 1, truncated: false\nlumpable\n");
    let smb = run(&["check-smb", &model("two_state.crn"), "--partition", scratch("fg2.part", "F G").to_str().unwrap()]);
    assert_eq!(smb.status.code(), Some(1));
}

#[test]
fn check_lumpable_truncation() {
    let args = |init: &str, part: &str, extra: &[&str]| {
        let re = model("running_example.crn");
        let part = model(part);
        let mut v = vec!["check-lumpable", &re, "--init", init, "--partition", &part, "--max-population", "6"];
        v.extend_from_slice(extra);
        run(&v)
    };
    assert_eq!(args("2A+C+D", "running_example.smb", &[]).status.code(), Some(3));
    assert_eq!(args("2A+C+D", "running_example.smb", &["--allow-truncation"]).status.code(), Some(0));
    let o = args("A+B+D", "running_example.fb", &["--allow-truncation"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("not lumpable"));
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", &model("running_example.crn"), "--init", "2A+C+D", "--t-end", "0.5", "--seed", "7"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&run(&args)));
    assert!(stdout(&a).starts_with("0\t2A+C+D\n"));
    let grid = run(&[
        "simulate",
        &model("running_example.crn"),
        "--init",
        "2A+C+D",
        "--t-end",
        "0.5",
        "--runs",
        "50",
        "--grid",
        "3",
        "--partition",
        &model("running_example.smb"),
    ]);
    assert_eq!(grid.status.code(), Some(0));
    assert!(stdout(&grid).starts_with("t,A,B,C,D\n0,2,0,1,1\n"));
}

#[test]
fn ode_output() {
    let o = run(&["ode", &model("two_state.crn"), "--init-conc", "F=1", "--t-end", "1", "--dt", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("t,F,G\n0,1,0\n0.5,"));
    assert_eq!(text.lines().count(), 4);
    let bad = run(&["ode", &model("two_state.crn"), "--init-conc", "Z=1", "--t-end", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn compare_running_example() {
    let o = run(&[
        "compare",
        &model("running_example.crn"),
        "--init",
        "2A+2B+C+D+E",
        "--t-end",
        "0.3",
        "--runs",
        "1000",
        "--grid",
        "5",
        "--max-population",
        "9",
    ]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("lumpability: ok"));
    assert!(text.contains("quotient generator: ok"));
    assert!(text.trim_end().ends_with("PASS"));
}

#[test]
fn net_files_are_imported() {
    let net = "begin parameters\n 1 k 6\nend parameters\nbegin species\n 1 A() 1\n 2 B() 0\nend species\n\
               begin reactions\n 1 1 2 k\nend reactions\n";
    let p = scratch("tiny.net", net);
    let o = run(&["reduce", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).ends_with("A -> B @ 6\n"));
}

#[test]
fn version_and_help() {
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}
