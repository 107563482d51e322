//! End-to-end tests of the `gtx` binary.
//!
//! Golden files live in `tests/golden`; set `GTX_UPDATE_GOLDEN=1` to rewrite
//! them.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gtx::dsl::parse_graph;
use gtx::suite::FIXTURE_FILES;
use gtx_core::explore::isomorphic;

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/helloworld")
}

fn gtx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtx"))
        .args(args)
        .env_remove("GTX_COLOR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var("GTX_UPDATE_GOLDEN").is_ok_and(|v| v == "1") {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, want, "golden file {name} differs");
}

/// A temporary grammar directory with the given files.
fn grammar(files: &[(&str, &str)]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_pristine_grammar() {
    let o = gtx(&["validate", path_str(&fixtures_dir())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty() && o.stderr.is_empty());
}

#[test]
fn golden_fixture_commands() {
    let dir = fixtures_dir();
    for (file, _) in FIXTURE_FILES.iter().filter(|(f, _)| f.ends_with(".gpr")) {
        let rule = file.trim_end_matches(".gpr");
        let o = gtx(&["apply", path_str(&dir), rule]);
        assert_eq!(o.status.code(), Some(0), "{rule}: {}", stderr(&o));
        assert!(o.stderr.is_empty());
        golden(&format!("apply_{rule}.txt"), &stdout(&o));
    }
    let o = gtx(&["explore", path_str(&dir), "--max-states", "12", "--max-depth", "2"]);
    assert_eq!(o.status.code(), Some(4));
    golden("explore_helloworld.txt", &stdout(&o));
}

#[test]
fn hello_message_is_byte_exact() {
    let o = gtx(&["apply", path_str(&fixtures_dir()), "helloMessage"]);
    let out = stdout(&o);
    assert!(
        out.starts_with("The output is Hello TTC Participants \n---\n"),
        "{out:?}"
    );
}

#[test]
fn regex_creator_edge_is_one_diagnostic() {
    let g = grammar(&[(
        "bad.gpr",
        "rule bad\nnode a role=reader\nnode b role=reader\npath a ~-src.trg~> b role=creator\n",
    )]);
    let o = gtx(&["validate", path_str(g.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("bad.gpr:4:"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn missing_start_graph_is_an_io_error() {
    let g = grammar(&[("grammar.conf", "start = gone.gst\n")]);
    let o = gtx(&["validate", path_str(g.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = gtx(&["validate", "/nonexistent/grammar"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reverse_twice_through_files() {
    let dir = fixtures_dir();
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("g.gst");
    let h = tmp.path().join("h.gst");
    let k = tmp.path().join("k.gst");
    std::fs::copy(dir.join("start.gst"), &g).unwrap();
    for (from, to) in [(&g, &h), (&h, &k)] {
        let o = gtx(&[
            "apply",
            path_str(&dir),
            "reverseEdges",
            "--graph",
            path_str(from),
            "--out",
            path_str(to),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
    let read = |p: &Path| parse_graph(&std::fs::read_to_string(p).unwrap()).unwrap();
    assert!(isomorphic(&read(&g), &read(&k)));
    assert!(!isomorphic(&read(&g), &read(&h)));
}

#[test]
fn count_on_empty_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.gst");
    std::fs::write(&empty, "graph empty\n").unwrap();
    let o = gtx(&[
        "count",
        path_str(&fixtures_dir()),
        "countNodes",
        "--graph",
        path_str(&empty),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0\n---\ngraph empty\n");
}

#[test]
fn count_refuses_writing_rules() {
    let o = gtx(&["count", path_str(&fixtures_dir()), "reverseEdges"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn inapplicable_rule_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.gst");
    std::fs::write(&empty, "graph empty\n").unwrap();
    let o = gtx(&[
        "apply",
        path_str(&fixtures_dir()),
        "deleteNodeN1",
        "--graph",
        path_str(&empty),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("not applicable"));
}

#[test]
fn graph_file_problems() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.gst");
    std::fs::write(&bad, "graph bad\nnode a : Nonsense\n").unwrap();
    let o = gtx(&[
        "apply",
        path_str(&fixtures_dir()),
        "countNodes",
        "--graph",
        path_str(&bad),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.gst:2:"), "{}", stderr(&o));
    let o = gtx(&["apply", path_str(&fixtures_dir()), "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

const MARK: &str = "rule mark
node n role=reader : Node
flag n embargo seen
flag n creator seen
";

#[test]
fn all_matches_applies_sequentially() {
    let mut files: Vec<(&str, &str)> = FIXTURE_FILES.to_vec();
    files.push(("mark.gpr", MARK));
    let g = grammar(&files);
    let once = stdout(&gtx(&["apply", path_str(g.path()), "mark"]));
    assert_eq!(once.matches("flag seen").count(), 1);
    let all = stdout(&gtx(&["apply", path_str(g.path()), "mark", "--all-matches"]));
    assert_eq!(all.matches("flag seen").count(), 6);
}

const REVERSE_ONLY: &[(&str, &str)] = &[
    ("start.gst", "graph g\nnode n : Node\nnode e : Edge\nedge e -src-> n\n"),
    (
        "reverse.gpr",
        "rule reverse
quant fwd forall
quant bwd forall
node e1 role=reader in fwd
node x1 role=reader in fwd
edge e1 -src-> x1 role=eraser in fwd
edge e1 -trg-> x1 role=creator in fwd
node e2 role=reader in bwd
node x2 role=reader in bwd
edge e2 -trg-> x2 role=eraser in bwd
edge e2 -src-> x2 role=creator in bwd
",
    ),
];

#[test]
fn explore_reverse_only() {
    let g = grammar(REVERSE_ONLY);
    let o = gtx(&["explore", path_str(g.path())]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("state ")).count(), 2, "{out}");
    assert!(
        out.contains("trans S0 -reverse-> S1\ntrans S1 -reverse-> S0\n"),
        "{out}"
    );
    let o = gtx(&["explore", path_str(g.path()), "--max-states", "1"]);
    assert_eq!(o.status.code(), Some(4));
    let o = gtx(&["explore", path_str(g.path()), "--max-states", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn explore_without_applicable_rules() {
    let g = grammar(&[
        ("start.gst", "graph g\nnode a\n"),
        ("r.gpr", "rule r\nnode x role=reader : Missing\n"),
    ]);
    let o = gtx(&["explore", path_str(g.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn colored_diagnostics() {
    let g = grammar(&[("bad.gst", "graph g\nnode a\nnode a\n")]);
    let plain = gtx(&["validate", path_str(g.path())]);
    assert_eq!(stderr(&plain), "bad.gst:3:6: node `a` is declared twice\n");
    let colored = Command::new(env!("CARGO_BIN_EXE_gtx"))
        .args(["validate", path_str(g.path())])
        .env("GTX_COLOR", "1")
        .output()
        .unwrap();
    assert_eq!(colored.status.code(), Some(1));
    assert!(stderr(&colored).contains('\x1b'));
}

#[test]
fn suite_command() {
    let o = gtx(&["suite", "--cases", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("13/13 fixtures passed\n"));
}
