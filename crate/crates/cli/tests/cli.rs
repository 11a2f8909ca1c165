#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fusekit::io::{format_score, read_run};
use fusekit::model::RunList;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn bench(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/bench")
        .join(name)
}

fn fusekit<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_fusekit")).args(args).output().unwrap()
}

/// Runs `fuse` with the given arguments into a temporary file and returns it.
fn fuse(args: &[&std::ffi::OsStr]) -> Result<String, Output> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fused.run");
    let mut all: Vec<&std::ffi::OsStr> = args.to_vec();
    all.extend(["--out".as_ref(), path.as_os_str()]);
    let out = fusekit(all);
    if out.status.success() {
        Ok(std::fs::read_to_string(path).unwrap())
    } else {
        Err(out)
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn rrf_matches_golden_file() {
    let (a, b) = (data("toy_a.run"), data("toy_b.run"));
    let fused = fuse(&[
        "fuse".as_ref(),
        a.as_os_str(),
        b.as_os_str(),
        "--method".as_ref(),
        "rrf".as_ref(),
    ])
    .unwrap();
    let golden = std::fs::read_to_string(data("toy_rrf.golden")).unwrap();
    assert_eq!(fused, golden);

    // The golden file itself against the direct formula.
    let (a, b) = (
        read_run(data("toy_a.run")).unwrap(),
        read_run(data("toy_b.run")).unwrap(),
    );
    let mut queries: Vec<_> = a.keys().chain(b.keys()).cloned().collect();
    queries.sort();
    queries.dedup();
    let mut want = String::new();
    for q in queries {
        let runs: Vec<RunList> = [&a, &b].iter().filter_map(|s| s.get(&q).cloned()).collect();
        let mut ranked: Vec<(String, f64)> = oracles::rrf_oracle(&runs, 60.0)
            .into_iter()
            .map(|(d, f)| (d, f.value))
            .collect();
        oracles::sort_ranking(&mut ranked);
        for (i, (d, s)) in ranked.iter().enumerate() {
            want += &format!("{q} Q0 {d} {} {} rrf\n", i + 1, format_score(*s));
        }
    }
    assert_eq!(golden, want);
}

#[test]
fn perfect_run_has_unit_mrr() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("perfect.run");
    let qrels = std::fs::read_to_string(bench("qrels.txt")).unwrap();
    let mut text = String::new();
    for (i, line) in qrels.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        text += &format!("{} Q0 {} 1 {} perfect\n", f[0], f[2], 1000 - i);
    }
    std::fs::write(&run, text).unwrap();
    let out = fusekit([
        "eval".as_ref(),
        run.as_os_str(),
        "--qrels".as_ref(),
        bench("qrels.txt").as_os_str(),
        "--json".as_ref(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let text = report.to_string();
    assert!(text.contains("MRR@10"), "{text}");
    let at = |name: &str| {
        let i = report["metrics"]
            .as_array()
            .unwrap()
            .iter()
            .position(|m| m == name)
            .unwrap();
        report["average"][i].as_f64().unwrap()
    };
    assert_eq!(at("MRR@10"), 1.0, "{text}");
    assert_eq!(at("RP"), 1.0, "{text}");
    assert_eq!(at("R@10"), 1.0, "{text}");
}

#[test]
fn identical_runs_tune_to_equal_weights() {
    let run = data("toy_a.run");
    let dir = tempfile::tempdir().unwrap();
    let qrels = dir.path().join("qrels.txt");
    std::fs::write(&qrels, "q1 0 d2 1\nq2 0 d5 1\n").unwrap();
    let out = fusekit([
        "tune".as_ref(),
        run.as_os_str(),
        run.as_os_str(),
        "--qrels".as_ref(),
        qrels.as_os_str(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("weights=0.5,0.5"), "{}", stdout(&out));
}

#[test]
fn exit_codes_and_one_line_errors() {
    let fuse = PathBuf::from("fuse");
    let cases: [(Vec<PathBuf>, i32, &str); 6] = [
        (vec![fuse.clone()], 1, "usage"),
        (
            vec![fuse.clone(), data("toy_a.run"), "--method".into(), "borda".into()],
            1,
            "usage",
        ),
        (
            vec![
                fuse.clone(),
                data("missing.run"),
                "--out".into(),
                std::env::temp_dir().join("x.run"),
            ],
            2,
            "data",
        ),
        (
            vec![
                fuse,
                data("toy_a.run"),
                data("toy_b.run"),
                "--weights".into(),
                "0.7,0.7".into(),
            ],
            1,
            "usage",
        ),
        (
            vec!["tune".into(), data("toy_a.run"), "--qrels".into(), data("toy_a.run")],
            1,
            "usage",
        ),
        (
            vec!["eval".into(), data("toy_a.run"), "--qrels".into(), data("toy_a.run")],
            2,
            "data",
        ),
    ];
    for (args, code, kind) in cases {
        let out = fusekit(&args);
        let err = stderr(&out);
        assert_eq!(out.status.code(), Some(code), "{args:?}: {err}");
        assert!(err.starts_with(&format!("error[{kind}]: ")), "{err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }
    assert_eq!(fusekit(["--version"]).status.code(), Some(0));
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fusekit.ini");
    std::fs::write(&cfg, "[fusion]\nmethod = rrf\n").unwrap();
    let runs = [data("toy_a.run"), data("toy_b.run")];
    let via_config = fuse(&[
        "--config".as_ref(),
        cfg.as_os_str(),
        "fuse".as_ref(),
        runs[0].as_os_str(),
        runs[1].as_os_str(),
    ])
    .unwrap();
    assert_eq!(via_config, std::fs::read_to_string(data("toy_rrf.golden")).unwrap());

    let flag = fuse(&[
        "--config".as_ref(),
        cfg.as_os_str(),
        "fuse".as_ref(),
        runs[0].as_os_str(),
        runs[1].as_os_str(),
        "--method".as_ref(),
        "bcf".as_ref(),
    ])
    .unwrap();
    assert!(flag.lines().all(|l| l.ends_with(" bcf")), "{flag}");
}
