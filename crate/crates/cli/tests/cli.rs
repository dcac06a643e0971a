use std::io::Write;
use std::process::{Command, Output, Stdio};

fn votepriv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_votepriv"))
        .args(args)
        .env_remove("VOTEPRIV_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn delta_column(csv: &str) -> Vec<String> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').skip(4).take(2).collect::<Vec<_>>().join("/"))
        .collect()
}

#[test]
fn majority_half_at_three_voters() {
    let out = votepriv(&[
        "delta", "--rule", "majority", "--alpha", "1/2", "--m", "2", "--dist", "1/2,1/2", "--n",
        "3..3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("n,rule,observable,eps_ratio,delta_num,delta_den,delta_float,x,xprime")
    );
    assert_eq!(delta_column(&text), vec!["1/2"]);
}

#[test]
fn engines_agree_byte_for_byte() {
    let base = ["delta", "--rule", "borda", "--m", "3", "--n", "1..4"];
    let exact = stdout(&votepriv(&base));
    for engine in ["oracle", "exact"] {
        let mut args = base.to_vec();
        args.extend(["--engine", engine, "--jobs", "2"]);
        assert_eq!(
            delta_column(&stdout(&votepriv(&args))),
            delta_column(&exact)
        );
    }
    let majority = [
        "delta", "--rule", "majority", "--alpha", "3/5", "--dist", "2/3,1/3", "--n", "1..12",
    ];
    let reference = delta_column(&stdout(&votepriv(&majority)));
    for engine in ["trails", "oracle"] {
        let mut args = majority.to_vec();
        args.extend(["--engine", engine]);
        assert_eq!(
            delta_column(&stdout(&votepriv(&args))),
            reference,
            "{engine}"
        );
    }
}

#[test]
fn rows_follow_n() {
    let out = votepriv(&[
        "delta",
        "--rule",
        "plurality",
        "--n",
        "3..12",
        "--jobs",
        "3",
    ]);
    let text = stdout(&out);
    let ns: Vec<u32> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ns, (3..=12).collect::<Vec<_>>());
    let again = votepriv(&[
        "delta",
        "--rule",
        "plurality",
        "--n",
        "3..12",
        "--jobs",
        "1",
    ]);
    assert_eq!(text, stdout(&again));
}

#[test]
fn json_output_carries_witness() {
    let out = votepriv(&[
        "delta",
        "--rule",
        "histogram",
        "--m",
        "2",
        "--n",
        "3",
        "--out",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["delta"], "1/2");
    assert_eq!(v["witness"], serde_json::json!(["(2,1)", "(3,0)"]));
}

#[test]
fn jobs_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_votepriv"))
        .args(["delta", "--rule", "veto", "--n", "2..3"])
        .env("VOTEPRIV_JOBS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["delta", "--rule", "nonsense", "--n", "3"][..],
        &[
            "delta",
            "--rule",
            "plurality",
            "--dist",
            "1/2,1/2",
            "--n",
            "3",
        ],
        &["delta", "--rule", "plurality", "--n", "5..2"],
        &["delta", "--rule", "majority", "--alpha", "3/2", "--n", "3"],
        &[
            "delta",
            "--rule",
            "borda",
            "--n",
            "3",
            "--engine",
            "trails",
            "--eps-ratio",
            "2",
        ],
        &["check", "nonsense"],
        &["fit", "--input", "/nonexistent.csv"],
    ] {
        assert_eq!(votepriv(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn oracle_guard_exits_three() {
    let out = votepriv(&[
        "delta", "--rule", "borda", "--n", "10", "--engine", "oracle",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fit_recovers_synthetic_curve() {
    let mut csv =
        String::from("n,rule,observable,eps_ratio,delta_num,delta_den,delta_float,x,xprime\n");
    // δ(n) = 1/sqrt(2n + 3) is rational whenever 2n + 3 is a perfect square
    for (n, root) in [(3u32, 3u32), (11, 5), (23, 7), (39, 9), (59, 11)] {
        csv.push_str(&format!("{n},synthetic,winner,1/1,1,{root},0,0,1\n"));
    }
    let mut child = Command::new(env!("CARGO_BIN_EXE_votepriv"))
        .args(["fit", "--input", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(csv.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!((v["a"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((v["b"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!(v["mse"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["n_min"], 3);
    assert_eq!(v["n_max"], 59);
}

#[test]
fn delta_then_fit_table() {
    let dir = std::env::temp_dir().join(format!("votepriv-fit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("series.csv");
    let mut csv = String::new();
    for observable in ["winner", "score"] {
        let text = stdout(&votepriv(&[
            "delta",
            "--rule",
            "plurality",
            "--observable",
            observable,
            "--n",
            "3..15",
        ]));
        if csv.is_empty() {
            csv.push_str(&text);
        } else {
            csv.extend(text.lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    std::fs::write(&path, csv).unwrap();
    let out = votepriv(&[
        "fit",
        "--input",
        path.to_str().unwrap(),
        "--n-min",
        "5",
        "--format",
        "table",
    ]);
    assert!(out.status.success());
    let table = stdout(&out);
    assert!(table.lines().next().unwrap().contains("winner"));
    let row = table
        .lines()
        .find(|l| l.starts_with("| plurality"))
        .unwrap();
    assert_eq!(row.matches("δ(n) = 1/sqrt(").count(), 2);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn check_suites() {
    let out = votepriv(&["check", "trails", "--cases", "200", "--seed", "42"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("PASS trails: 200 cases"));
    let out = votepriv(&["check", "oracle", "--n-max", "5", "--cases", "20"]);
    assert!(out.status.success());
    let out = votepriv(&["check", "geom"]);
    assert!(out.status.success());
    let a = stdout(&votepriv(&[
        "check", "lemma1", "--cases", "10", "--seed", "7",
    ]));
    let b = stdout(&votepriv(&[
        "check", "lemma1", "--cases", "10", "--seed", "7",
    ]));
    assert_eq!(a, b);
}

#[test]
fn geometric_report() {
    let out = votepriv(&["geom", "--alpha", "1/2", "--n", "2", "--gamma", "1/10"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("dp ratio: 2/1 "));
    assert!(text.contains("utility: "));
}
