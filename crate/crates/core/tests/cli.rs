mod common;

use std::fs;
use std::process::Command;

use common::*;

fn out() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn fx(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn mixed_integer_fixture_declares_the_set() {
    let m = model("mixed_integer.prob");
    let c = m.set.unwrap();
    assert_eq!(c.lattice_dims(), [0]);
    assert_eq!(c.bounding_box(), (vec![0.0, 0.0], vec![1.0, 1.0]));
    assert!(m.meta.h <= 0.1);
}

#[test]
fn parse_errors_name_the_line_and_write_nothing() {
    let dir = out();
    let o = dir.path().join("x");
    let run = locvi(&["solve-vi", &fx("bad_union.prob")], &o);
    assert_eq!(run.code, 1);
    assert!(
        run.stderr.contains("line 6") && run.stderr.contains("empty union"),
        "{}",
        run.stderr
    );
    assert!(!o.exists());

    let run = locvi(&["analyze-f", &fx("bad_reference.prob")], &o);
    assert_eq!(run.code, 1);
    assert!(
        run.stderr.contains("line 9") && run.stderr.contains("unresolved reference `f2`"),
        "{}",
        run.stderr
    );
    assert!(!o.exists());
}

#[test]
fn usage_and_io_errors_exit_one() {
    let dir = out();
    let run = locvi(
        &["solve-vi", &fx("mixed_integer.prob"), "--kind", "bogus"],
        dir.path(),
    );
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("unknown --kind `bogus`"));
    let run = locvi(&["solve-vi", "no-such-file.prob"], dir.path());
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("no-such-file.prob"));
    let run = locvi(&["stability-trial", &fx("stability_vi.prob")], dir.path());
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("--kind is required"));
}

/// `K(x) = {y : |y + 0.179| ≤ 0.129x + 0.727}` moves with `x` at its boundary
/// fixed points by less than the grid can see, so the two routes disagree.
const DRIFTING: &str = "[meta]
dim = 1
box = interval(-1.5, 1.5)
h = 0.05
r = 0.2

[functions]
g = abs((1), 0.17925017799131787)
level = affine((0.12910832389402904), 0.7266156294844519)

[maps]
K = separable(g, level)

[problem]
map = K
operator = constant((-1))
";

#[test]
fn decomposition_mismatch_exits_two() {
    let dir = out();
    let file = dir.path().join("drift.prob");
    fs::write(&file, DRIFTING).unwrap();
    let run = locvi(
        &["solve-qvi", file.to_str().unwrap(), "--method", "both"],
        &dir.path().join("o"),
    );
    assert_eq!(run.code, 2, "{}", run.stderr);
    assert!(run.stderr.contains("decomposition mismatch"));
    let run = locvi(
        &["solve-qvi", file.to_str().unwrap(), "--method", "direct"],
        &dir.path().join("o"),
    );
    assert_eq!(run.code, 0);
}

#[test]
fn csv_outputs_carry_a_schema_line_and_no_timing() {
    let dir = out();
    let run = locvi(
        &["solve-vi", &fx("mixed_integer.prob"), "--kind", "lsvi"],
        dir.path(),
    );
    assert_eq!(run.code, 0);
    let text = fs::read_to_string(dir.path().join("solutions.csv")).unwrap();
    assert!(text.starts_with("# schema: locvi/solve-vi/v1\n"));
    assert!(!text.contains("elapsed") && !text.contains("-0,") && !text.contains(",-0\n"));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("elapsed:") && report.contains("kind: LSVI"));
}

#[test]
fn overrides_are_echoed_and_used() {
    let dir = out();
    let run = locvi(
        &[
            "solve-vi",
            &fx("split_abs.prob"),
            "--kind",
            "lsvi",
            "--h",
            "0.1",
            "--r",
            "0.3",
        ],
        dir.path(),
    );
    assert_eq!(run.code, 0);
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(
        report.contains("h: 0.1\n") && report.contains("r: 0.3\n"),
        "{report}"
    );
    assert_eq!(
        run.points("solutions.csv", "x"),
        vec![vec![-1.0], vec![1.0]]
    );
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = out();
    let target = dir.path().join("from-env");
    let status = Command::new(env!("CARGO_BIN_EXE_locvi"))
        .args(["analyze-f", &fx("absx.prob")])
        .env("LOCVI_OUT", &target)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(target.join("properties.csv").exists());
}

#[test]
fn function_properties() {
    let dir = out();
    let run = locvi(&["analyze-f", &fx("absx.prob")], dir.path());
    let (_, rows) = run.csv("properties.csv");
    assert!(rows.iter().all(|r| r[1] == "true"));
    let run = locvi(&["analyze-f", &fx("step_fn.prob")], dir.path());
    let (_, rows) = run.csv("properties.csv");
    let row = |name: &str| rows.iter().find(|r| r[0] == name).unwrap().clone();
    assert_eq!(row("quasiconvex")[1], "true");
    assert_eq!(row("semistrictly_quasiconvex")[1], "false");
    assert!(!row("semistrictly_quasiconvex")[2].is_empty());
    assert_eq!(row("sub_boundarily_constant")[1], "true");
}

#[test]
fn operator_classification() {
    let dir = out();
    let run = locvi(&["classify-op", &fx("classify_ff.prob")], dir.path());
    assert_eq!(run.code, 0);
    let (header, rows) = run.csv("classification.csv");
    assert_eq!(header[0], "class");
    assert_eq!(rows[0][1], "true");
}

#[test]
fn quasi_optimization_on_the_circle() {
    let dir = out();
    let run = locvi(&["solve-qopt", &fx("qopt_circle.prob")], dir.path());
    assert_eq!(run.code, 0);
    let xs = run.points("solutions.csv", "x");
    assert_eq!(xs.len(), 1);
    assert!((xs[0][0] + 0.5f64.sqrt()).abs() <= 0.02, "{xs:?}");
}

#[test]
fn step_certificates() {
    let dir = out();
    let run = locvi(&["check-repro", &fx("step.prob")], dir.path());
    let (header, rows) = run.csv("certificates.csv");
    let (z, s) = (
        header.iter().position(|c| c == "z1").unwrap(),
        header.iter().position(|c| c == "status").unwrap(),
    );
    let status = |v: &str| {
        rows.iter()
            .find(|r| r[z] == v)
            .map(|r| r[s].clone())
            .unwrap()
    };
    assert_eq!(status("1"), "refuted");
    assert_eq!(status("0.5"), "certified");
    assert_eq!(status("1.5"), "certified");
}

#[test]
fn stability_trials_report_verdicts() {
    let dir = out();
    for (file, kind) in [
        ("stability_vi.prob", "weak-int"),
        ("stability_vi.prob", "star"),
        ("stability_lopt.prob", "lopt"),
        ("stability_lqopt.prob", "lqopt"),
    ] {
        let run = locvi(&["stability-trial", &fx(file), "--kind", kind], dir.path());
        assert_eq!(run.code, 0, "{file} {kind}: {}", run.stderr);
        let (_, rows) = run.csv("verdict.csv");
        assert_eq!(rows[0][0], "true", "{file} {kind}");
        let (_, hyp) = run.csv("hypotheses.csv");
        assert!(hyp.iter().all(|r| r[1] == "true"), "{file} {kind}: {hyp:?}");
    }
}

#[test]
fn leader_decisions_parse_with_signs_and_lists() {
    let dir = out();
    let run = locvi(
        &["solve-gnep", &fx("game_basic.prob"), "--leader-x", "0.5"],
        dir.path(),
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.points("equilibria.csv", "y"), vec![vec![0.0, 0.0]]);
    let run = locvi(
        &["solve-gnep", &fx("game_basic.prob"), "--leader-x", "-0"],
        dir.path(),
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let run = locvi(
        &[
            "solve-gnep",
            &fx("game_basic.prob"),
            "--leader-x",
            "0.1,0.2",
        ],
        dir.path(),
    );
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("dimension"), "{}", run.stderr);
    let run = locvi(
        &["solve-gnep", &fx("game_basic.prob"), "--leader-x", "abc"],
        dir.path(),
    );
    assert_ne!(run.code, 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (out(), out());
    for args in [
        vec!["solve-vi", "mixed_integer.prob", "--kind", "lsvi"],
        vec!["solve-slmf", "game_linear.prob"],
        vec!["check-repro", "circle.prob"],
    ] {
        let file = fx(args[1]);
        let mut full = args.clone();
        full[1] = &file;
        locvi(&full, a.path());
        locvi(&full, b.path());
        for e in fs::read_dir(a.path()).unwrap().flatten() {
            let name = e.file_name();
            if name.to_string_lossy().ends_with(".csv") {
                assert_eq!(
                    fs::read(e.path()).unwrap(),
                    fs::read(b.path().join(&name)).unwrap(),
                    "{name:?}"
                );
            }
        }
    }
}
